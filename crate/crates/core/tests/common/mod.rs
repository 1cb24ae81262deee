//! Test-side oracles built directly on nalgebra, independent of the crate's
//! own matrix code.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use zn_sim::algebra::SparseOp;
use zn_sim::lattice::{Dir, Link, RegisterLayout, Vertex};
use zn_sim::linalg::Matrix;
use zn_sim::oracle::Sectors;

pub type CM = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_na(m: &Matrix<f64>) -> CM {
    CM::from_fn(m.rows(), m.cols(), |r, k| m[(r, k)])
}

pub fn eye(n: usize) -> CM {
    CM::identity(n, n)
}

pub fn clock(n: usize) -> CM {
    CM::from_fn(n, n, |r, k| if r == k { Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / n as f64) } else { c(0.0, 0.0) })
}

/// |m> -> |m+1>
pub fn shift(n: usize) -> CM {
    CM::from_fn(n, n, |r, k| if r == (k + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn dft(n: usize) -> CM {
    let s = 1.0 / (n as f64).sqrt();
    CM::from_fn(n, n, |j, k| Complex64::from_polar(s, std::f64::consts::TAU * ((j * k) % n) as f64 / n as f64))
}

pub fn max_abs(m: &CM) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn kron_all(ms: &[&CM]) -> CM {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.kronecker(m))
}

/// exp(−i t H), H Hermitian.
pub fn expm_herm(h: &CM, t: f64) -> CM {
    let herm = (h + h.adjoint()) * c(0.5, 0.0);
    let e = herm.symmetric_eigen();
    let d = CM::from_diagonal(&e.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// Operator on `targets` (first most significant) lifted to the full
/// big-endian register product.
pub fn embed(op: &CM, targets: &[usize], dims: &[usize]) -> CM {
    let total: usize = dims.iter().product();
    let digits = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            d[k] = i % dims[k];
            i /= dims[k];
        }
        d
    };
    let index = |d: &[usize]| d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x);
    let local = |d: &[usize]| targets.iter().fold(0, |acc, &t| acc * dims[t] + d[t]);
    let ldim: usize = targets.iter().map(|&t| dims[t]).product();
    let mut out = CM::zeros(total, total);
    for col in 0..total {
        let dc = digits(col);
        let lc = local(&dc);
        for lr in 0..ldim {
            let a = op[(lr, lc)];
            if a == c(0.0, 0.0) {
                continue;
            }
            let mut dr = dc.clone();
            let mut rem = lr;
            for &t in targets.iter().rev() {
                dr[t] = rem % dims[t];
                rem /= dims[t];
            }
            out[(index(&dr), col)] += a;
        }
    }
    out
}

/// Eigenphases of a unitary.
pub fn eigenphases(u: &CM) -> Vec<f64> {
    let (_, t) = u.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)].arg()).collect()
}

/// min_α max_j |e^{iφ_j} − e^{iα}| via the shortest arc covering all phases.
pub fn aligned_chord(phases: &[f64]) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p: Vec<f64> = phases.iter().map(|x| x.rem_euclid(tau)).collect();
    p.sort_by(f64::total_cmp);
    let mut gap = tau - (p[p.len() - 1] - p[0]);
    for w in p.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    let arc = tau - gap;
    if arc <= std::f64::consts::PI {
        return 2.0 * (arc / 4.0).sin();
    }
    // wide spread: brute force
    (0..20000)
        .map(|k| {
            let a = tau * k as f64 / 20000.0;
            p.iter().map(|x| 2.0 * ((x - a) / 2.0).sin().abs()).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Dense per-sector blocks of a sparse Hermitian operator.
pub fn blocks_of(h: &SparseOp<f64>, s: &Sectors) -> Vec<CM> {
    s.blocks.iter().map(|b| to_na(&h.block(b, &s.position))).collect()
}

pub fn links_at(layout: &RegisterLayout, v: Vertex) -> (Vec<usize>, Vec<usize>) {
    let g = &layout.geometry;
    let mut out = Vec::new();
    let mut inc = Vec::new();
    for d in [Dir::One, Dir::Two] {
        let l = Link::new(v, d);
        if g.has_link(l) {
            out.push(layout.link(l).unwrap());
        }
        let back = match d {
            Dir::One if v.x1 > 0 => Some(Vertex::new(v.x1 - 1, v.x2)),
            Dir::Two if v.x2 > 0 => Some(Vertex::new(v.x1, v.x2 - 1)),
            _ => None,
        };
        if let Some(b) = back {
            inc.push(layout.link(Link::new(b, d)).unwrap());
        }
    }
    (out, inc)
}

/// Basis state obeys Gauss's law at every vertex: outgoing minus incoming
/// flux equals n − (1 on odd sites), mod N.
pub fn gauge_invariant(layout: &RegisterLayout, index: usize) -> bool {
    let n = layout.n as i64;
    layout.geometry.vertices().iter().all(|&v| {
        let (out, inc) = links_at(layout, v);
        let flux: i64 = out.iter().map(|&r| layout.digit(index, r) as i64).sum::<i64>() - inc.iter().map(|&r| layout.digit(index, r) as i64).sum::<i64>();
        let bg = ((v.x1 + v.x2) % 2) as i64;
        let q = layout.digit(index, layout.fermion(v).unwrap()) as i64 - bg;
        (flux - q).rem_euclid(n) == 0
    })
}

/// Dirac sea: odd sites filled, links empty; physical registers only.
pub fn singlet_index(phys: &RegisterLayout) -> usize {
    let mut d = vec![0; phys.len()];
    for v in phys.geometry.vertices() {
        d[phys.fermion(v).unwrap()] = (v.x1 + v.x2) % 2;
    }
    phys.index_of(&d)
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}
