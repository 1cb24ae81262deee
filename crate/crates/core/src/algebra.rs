//! Z_N clock/shift algebra on one link, Jordan-Wigner fermions, the Gauss-law
//! unitaries and the eight Hamiltonian pieces.
//!
//! Link basis |m>, m = 0..N-1, diagonalizes P with eigenvalue ω^m. For N = 3
//! the labels 0,1,2 are m_F = 0,+1,-1.

use crate::error::{Result, SimError};
use crate::lattice::{LatticeGeometry, Link, LinkClass, Parity, RegisterKind, RegisterLayout, Vertex};
use crate::linalg::Matrix;
use crate::scalar::{cis, czero, Real, C};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Symmetric representative of m: {−(N−1)/2..(N−1)/2} for odd N,
/// {−N/2+1..N/2} for even N.
pub fn symmetric_label(m: usize, n: usize) -> i64 {
    let (m, n) = (m as i64, n as i64);
    if m > n / 2 {
        m - n
    } else {
        m
    }
}

#[derive(Clone, Debug)]
pub struct LinkAlgebra<T: Real> {
    pub n: usize,
    pub p: Matrix<T>,
    pub q: Matrix<T>,
    pub vd: Matrix<T>,
    pub logp: Matrix<T>,
    pub logq: Matrix<T>,
}

pub fn omega<T: Real>(n: usize) -> C<T> {
    cis(T::TAU() / T::lit(n as f64))
}

pub fn make_link_algebra<T: Real>(n: usize) -> Result<LinkAlgebra<T>> {
    if n < 2 {
        return Err(SimError::GroupOrder(n));
    }
    let nf = T::lit(n as f64);
    let step = T::TAU() / nf;
    let p = Matrix::from_diag(&(0..n).map(|m| cis(step * T::lit(m as f64))).collect::<Vec<_>>());
    let q = Matrix::from_fn(n, n, |r, c| if r == (c + 1) % n { C::new(T::one(), T::zero()) } else { czero() });
    let inv_sqrt = T::one() / nf.sqrt();
    // entries reduced mod N before the angle so large N keeps full accuracy
    let vd = Matrix::from_fn(n, n, |j, k| cis(step * T::lit(((j * k) % n) as f64)).scale(inv_sqrt));
    let logp = Matrix::from_diag(
        &(0..n).map(|m| C::new(T::zero(), step * T::lit(symmetric_label(m, n) as f64))).collect::<Vec<_>>(),
    );
    let logq = &(&vd.adjoint() * &logp) * &vd;
    Ok(LinkAlgebra { n, p, q, vd, logp, logq })
}

impl<T: Real> LinkAlgebra<T> {
    pub fn p_dag(&self) -> Matrix<T> {
        self.p.adjoint()
    }
    pub fn q_dag(&self) -> Matrix<T> {
        self.q.adjoint()
    }

    /// m -> −m mod N; the m_F flip for N = 3.
    pub fn flip(&self) -> Matrix<T> {
        let n = self.n;
        Matrix::from_fn(n, n, |r, c| if r == (n - c) % n { C::new(T::one(), T::zero()) } else { czero() })
    }

    pub fn require_z3(&self) -> Result<()> {
        if self.n != 3 {
            return Err(SimError::Unsupported(format!("spin-1 matrices need N = 3, got {}", self.n)));
        }
        Ok(())
    }
}

/// Spin-1 matrices in the link basis order m_F = 0, +1, −1.
pub struct Spin1<T: Real> {
    pub fz: Matrix<T>,
    pub fx: Matrix<T>,
    pub fy: Matrix<T>,
}

pub fn spin1<T: Real>() -> Spin1<T> {
    let s2 = T::lit(2.0).sqrt();
    let idx = |mf: i32| match mf {
        0 => 0usize,
        1 => 1,
        _ => 2,
    };
    let mut fp = Matrix::<T>::zeros(3, 3);
    fp[(idx(1), idx(0))] = C::new(s2, T::zero());
    fp[(idx(0), idx(-1))] = C::new(s2, T::zero());
    let fm = fp.adjoint();
    let half = T::lit(0.5);
    let fx = (&fp + &fm).scale_real(half);
    let fy = (&fp - &fm).scale(C::new(T::zero(), -half));
    let fz = Matrix::from_real_diag(&[T::zero(), T::one(), -T::one()]);
    Spin1 { fz, fx, fy }
}

/// Hermitian generator with exp(−i H_D π/(2√3)) = V_D for N = 3, in the
/// basis order m_F = 0, +1, −1.
pub fn vd_generator<T: Real>() -> (Matrix<T>, T) {
    let s3 = T::lit(3.0).sqrt();
    let r = |x: T| C::new(x, T::zero());
    let d1 = -(T::one() + T::lit(2.0) * s3) / T::lit(2.0);
    let mut h = Matrix::from_real_diag(&[T::one() - s3, d1, d1]);
    h[(0, 1)] = r(T::one());
    h[(1, 0)] = r(T::one());
    h[(0, 2)] = r(T::one());
    h[(2, 0)] = r(T::one());
    h[(1, 2)] = r(-T::lit(0.5));
    h[(2, 1)] = r(-T::lit(0.5));
    (h, T::PI() / (T::lit(2.0) * s3))
}

/// Column-sparse operator: `cols[i]` lists (j, a) with O|i> = Σ a|j>.
#[derive(Clone, Debug)]
pub struct SparseOp<T: Real> {
    pub dim: usize,
    pub cols: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> SparseOp<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, cols: vec![vec![]; dim] }
    }

    pub fn from_action(dim: usize, f: impl FnMut(usize) -> Vec<(usize, C<T>)>) -> Self {
        Self { dim, cols: (0..dim).map(f).collect() }
    }

    pub fn diagonal(d: &[C<T>]) -> Self {
        Self { dim: d.len(), cols: d.iter().enumerate().map(|(i, &z)| vec![(i, z)]).collect() }
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![czero(); self.dim];
        for (i, col) in self.cols.iter().enumerate() {
            if v[i] == czero() {
                continue;
            }
            for &(j, a) in col {
                out[j] = out[j] + a * v[i];
            }
        }
        out
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (i, col) in self.cols.iter().enumerate() {
            for &(j, a) in col {
                m[(j, i)] = m[(j, i)] + a;
            }
        }
        m
    }

    /// Dense block on an index subset that the operator leaves invariant.
    pub fn block(&self, idx: &[usize], position: &[usize]) -> Matrix<T> {
        let mut m = Matrix::zeros(idx.len(), idx.len());
        for (c, &i) in idx.iter().enumerate() {
            for &(j, a) in &self.cols[i] {
                let r = position[j];
                m[(r, c)] = m[(r, c)] + a;
            }
        }
        m
    }

    pub fn scale(&self, s: T) -> Self {
        Self { dim: self.dim, cols: self.cols.iter().map(|c| c.iter().map(|&(j, a)| (j, a.scale(s))).collect()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut cols = self.cols.clone();
        for (i, col) in other.cols.iter().enumerate() {
            for &(j, a) in col {
                match cols[i].iter_mut().find(|(jj, _)| *jj == j) {
                    Some(e) => e.1 = e.1 + a,
                    None => cols[i].push((j, a)),
                }
            }
        }
        Self { dim: self.dim, cols }
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }
}

// ---- fermions ---------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FermionKind {
    Create,
    Annihilate,
}

fn fermion_registers(layout: &RegisterLayout) -> Vec<usize> {
    layout
        .registers()
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.kind, RegisterKind::Fermion(_)))
        .map(|(i, _)| i)
        .collect()
}

/// ψ† or ψ on basis state `index`, with the Jordan-Wigner sign from all
/// earlier modes.
fn fermion_action(layout: &RegisterLayout, modes: &[usize], reg: usize, kind: FermionKind, index: usize) -> Option<(usize, f64)> {
    let n = layout.digit(index, reg);
    let occupied_before = modes.iter().take_while(|&&r| r != reg).filter(|&&r| layout.digit(index, r) == 1).count();
    let sign = if occupied_before % 2 == 0 { 1.0 } else { -1.0 };
    let stride = layout.strides()[reg];
    match (kind, n) {
        (FermionKind::Create, 0) => Some((index + stride, sign)),
        (FermionKind::Annihilate, 1) => Some((index - stride, sign)),
        _ => None,
    }
}

pub fn fermion_op<T: Real>(layout: &RegisterLayout, vertex: Vertex, kind: FermionKind) -> Result<SparseOp<T>> {
    let reg = layout.fermion(vertex)?;
    let modes = fermion_registers(layout);
    Ok(SparseOp::from_action(layout.total_dim(), |i| {
        fermion_action(layout, &modes, reg, kind, i)
            .map(|(j, s)| vec![(j, C::new(T::lit(s), T::zero()))])
            .unwrap_or_default()
    }))
}

pub fn number_op<T: Real>(layout: &RegisterLayout, vertex: Vertex) -> Result<SparseOp<T>> {
    let reg = layout.fermion(vertex)?;
    Ok(SparseOp::from_action(layout.total_dim(), |i| {
        if layout.digit(i, reg) == 1 {
            vec![(i, C::new(T::one(), T::zero()))]
        } else {
            vec![]
        }
    }))
}

pub fn total_fermion_number(layout: &RegisterLayout, index: usize) -> usize {
    layout
        .registers()
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.kind, RegisterKind::Fermion(_)))
        .map(|(reg, _)| layout.digit(index, reg))
        .sum()
}

// ---- Gauss law --------------------------------------------------------------

/// Diagonal of Θ(x) over the layout's computational basis.
pub fn gauss_law_operator<T: Real>(layout: &RegisterLayout, x: Vertex) -> Result<Vec<C<T>>> {
    let freg = layout.fermion(x)?;
    let (outgoing, incoming) = layout.geometry.incident_links(x);
    let out_regs: Vec<usize> = outgoing.iter().map(|&l| layout.link(l)).collect::<Result<_>>()?;
    let in_regs: Vec<usize> = incoming.iter().map(|&l| layout.link(l)).collect::<Result<_>>()?;
    let n = layout.n as i64;
    let background = if x.parity() == Parity::Odd { 1 } else { 0 };
    let step = T::TAU() / T::lit(n as f64);
    Ok((0..layout.total_dim())
        .map(|i| {
            let flux: i64 = out_regs.iter().map(|&r| layout.digit(i, r) as i64).sum::<i64>()
                - in_regs.iter().map(|&r| layout.digit(i, r) as i64).sum::<i64>();
            let charge = layout.digit(i, freg) as i64 - background;
            cis(step * T::lit((flux - charge).rem_euclid(n) as f64))
        })
        .collect())
}

/// Integer Gauss-law eigenvalue label k with Θ(x) = ω^k on a basis state.
pub fn gauss_label(layout: &RegisterLayout, x: Vertex, index: usize) -> usize {
    let (outgoing, incoming) = layout.geometry.incident_links(x);
    let n = layout.n as i64;
    let mut k: i64 = 0;
    for l in outgoing {
        k += layout.digit(index, layout.link(l).unwrap()) as i64;
    }
    for l in incoming {
        k -= layout.digit(index, layout.link(l).unwrap()) as i64;
    }
    let background = if x.parity() == Parity::Odd { 1 } else { 0 };
    k -= layout.digit(index, layout.fermion(x).unwrap()) as i64 - background;
    k.rem_euclid(n) as usize
}

// ---- Hamiltonian ------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermName {
    E,
    M,
    Be,
    Bo,
    GmEh,
    GmEv,
    GmOh,
    GmOv,
}

impl TermName {
    pub const ALL: [TermName; 8] =
        [TermName::E, TermName::M, TermName::Be, TermName::Bo, TermName::GmEh, TermName::GmEv, TermName::GmOh, TermName::GmOv];

    pub fn gm_class(self) -> Option<LinkClass> {
        match self {
            TermName::GmEh => Some(LinkClass::Eh),
            TermName::GmEv => Some(LinkClass::Ev),
            TermName::GmOh => Some(LinkClass::Oh),
            TermName::GmOv => Some(LinkClass::Ov),
            _ => None,
        }
    }

    pub fn from_class(c: LinkClass) -> Self {
        match c {
            LinkClass::Eh => TermName::GmEh,
            LinkClass::Ev => TermName::GmEv,
            LinkClass::Oh => TermName::GmOh,
            LinkClass::Ov => TermName::GmOv,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            TermName::E => "E",
            TermName::M => "M",
            TermName::Be => "Be",
            TermName::Bo => "Bo",
            TermName::GmEh => "eh",
            TermName::GmEv => "ev",
            TermName::GmOh => "oh",
            TermName::GmOv => "ov",
        }
    }
}

impl fmt::Display for TermName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which displayed form of the electric energy to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElectricVariant {
    /// λ_E Σ (1 − P − P†), defined for any N
    #[default]
    Group,
    /// λ_E Σ (1 + |m̄|), the spin-1 form
    Z3Implementation,
}

/// Single-link electric energy for label m.
pub fn electric_energy(m: usize, n: usize, variant: ElectricVariant) -> f64 {
    match variant {
        ElectricVariant::Group => 1.0 - 2.0 * (std::f64::consts::TAU * m as f64 / n as f64).cos(),
        ElectricVariant::Z3Implementation => 1.0 + symmetric_label(m, n).unsigned_abs() as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub lambda_e: f64,
    pub lambda_b: f64,
    pub lambda_gm: f64,
    pub mass: f64,
    #[serde(default)]
    pub electric: ElectricVariant,
}

impl Couplings {
    pub fn uniform(x: f64) -> Self {
        Self { lambda_e: x, lambda_b: x, lambda_gm: x, mass: x, electric: ElectricVariant::Group }
    }
    pub fn max_abs(&self) -> f64 {
        [self.lambda_e, self.lambda_b, self.lambda_gm, self.mass].iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
    pub fn is_finite(&self) -> bool {
        [self.lambda_e, self.lambda_b, self.lambda_gm, self.mass].iter().all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianTerm<T: Real> {
    pub name: TermName,
    pub coupling: f64,
    pub support: Vec<usize>,
    pub op: SparseOp<T>,
}

/// Plaquette labels, or links, the term acts through; empty means the term
/// does not exist on this geometry.
pub fn term_sites(geometry: &LatticeGeometry, name: TermName) -> (Vec<Vertex>, Vec<Link>) {
    match name {
        TermName::Be => (geometry.plaquettes_of(Parity::Even), vec![]),
        TermName::Bo => (geometry.plaquettes_of(Parity::Odd), vec![]),
        _ => match name.gm_class() {
            Some(c) => (vec![], geometry.links_of_class(c)),
            None => (vec![], vec![]),
        },
    }
}

/// ψ†(x) Q(l) ψ(y) on a basis index (l from x to y).
fn hop_action(layout: &RegisterLayout, modes: &[usize], link: Link, i: usize) -> Option<(usize, f64)> {
    let xr = layout.fermion(link.origin).ok()?;
    let yr = layout.fermion(link.end()).ok()?;
    let lr = layout.link(link).ok()?;
    let (j, s1) = fermion_action(layout, modes, yr, FermionKind::Annihilate, i)?;
    let (k, s2) = fermion_action(layout, modes, xr, FermionKind::Create, j)?;
    let m = layout.digit(k, lr);
    let n = layout.n;
    let k2 = k - m * layout.strides()[lr] + ((m + 1) % n) * layout.strides()[lr];
    Some((k2, s1 * s2))
}

fn hop_adjoint_action(layout: &RegisterLayout, modes: &[usize], link: Link, i: usize) -> Option<(usize, f64)> {
    // (ψ†_x Q ψ_y)† = ψ†_y Q† ψ_x
    let xr = layout.fermion(link.origin).ok()?;
    let yr = layout.fermion(link.end()).ok()?;
    let lr = layout.link(link).ok()?;
    let (j, s1) = fermion_action(layout, modes, xr, FermionKind::Annihilate, i)?;
    let (k, s2) = fermion_action(layout, modes, yr, FermionKind::Create, j)?;
    let m = layout.digit(k, lr);
    let n = layout.n;
    let k2 = k - m * layout.strides()[lr] + ((m + n - 1) % n) * layout.strides()[lr];
    Some((k2, s1 * s2))
}

/// Builds one of the eight pieces on the given layout; the ancillas, if any,
/// are spectators.
pub fn build_hamiltonian_term<T: Real>(layout: &RegisterLayout, name: TermName, couplings: &Couplings) -> Result<HamiltonianTerm<T>> {
    let geometry = layout.geometry;
    let dim = layout.total_dim();
    let n = layout.n;
    let real = |x: f64| C::new(T::lit(x), T::zero());
    let (plaqs, links) = term_sites(&geometry, name);
    let (coupling, support, op) = match name {
        TermName::E => {
            let regs: Vec<usize> = geometry.links().iter().map(|&l| layout.link(l)).collect::<Result<_>>()?;
            if regs.is_empty() {
                return Err(SimError::Geometry("no links for the electric term".into()));
            }
            let lam = couplings.lambda_e;
            let op = SparseOp::from_action(dim, |i| {
                let e: f64 = regs.iter().map(|&r| electric_energy(layout.digit(i, r), n, couplings.electric)).sum();
                vec![(i, real(lam * e))]
            });
            (lam, regs, op)
        }
        TermName::M => {
            let vs = geometry.vertices();
            let regs: Vec<usize> = vs.iter().map(|&v| layout.fermion(v)).collect::<Result<_>>()?;
            let signs: Vec<f64> = vs.iter().map(|v| v.sign()).collect();
            let mass = couplings.mass;
            let op = SparseOp::from_action(dim, |i| {
                let e: f64 = regs.iter().zip(&signs).map(|(&r, s)| s * layout.digit(i, r) as f64).sum();
                vec![(i, real(mass * e))]
            });
            (mass, regs, op)
        }
        TermName::Be | TermName::Bo => {
            if plaqs.is_empty() {
                return Err(SimError::Geometry(format!("no plaquettes for {name}")));
            }
            let lam = couplings.lambda_b;
            let mut op = SparseOp::zero(dim);
            let mut support = Vec::new();
            for p in plaqs {
                let regs: Vec<usize> = geometry.plaquette_links(p).iter().map(|&l| layout.link(l)).collect::<Result<_>>()?;
                support.extend(&regs);
                op = op.add(&plaquette_op(layout, &regs, lam));
            }
            (lam, support, op)
        }
        _ => {
            if links.is_empty() {
                return Err(SimError::Geometry(format!("no links in class {name}")));
            }
            let lam = couplings.lambda_gm;
            let modes = fermion_registers(layout);
            let mut support = Vec::new();
            for l in &links {
                support.push(layout.link(*l)?);
                support.push(layout.fermion(l.origin)?);
                support.push(layout.fermion(l.end())?);
            }
            let op = SparseOp::from_action(dim, |i| {
                let mut out = Vec::new();
                for &l in &links {
                    if let Some((j, s)) = hop_action(layout, &modes, l, i) {
                        out.push((j, real(lam * s)));
                    }
                    if let Some((j, s)) = hop_adjoint_action(layout, &modes, l, i) {
                        out.push((j, real(lam * s)));
                    }
                }
                out
            });
            (lam, support, op)
        }
    };
    Ok(HamiltonianTerm { name, coupling, support, op })
}

/// λ(Q1 Q2 Q3† Q4† + h.c.) on four link registers (bottom, right, top, left).
fn plaquette_op<T: Real>(layout: &RegisterLayout, regs: &[usize], lam: f64) -> SparseOp<T> {
    let n = layout.n;
    let strides = layout.strides();
    let shift = |i: usize, dirs: [i64; 4]| {
        let mut j = i;
        for (k, &r) in regs.iter().enumerate() {
            let m = layout.digit(i, r) as i64;
            let m2 = (m + dirs[k]).rem_euclid(n as i64) as usize;
            j = j - (m as usize) * strides[r] + m2 * strides[r];
        }
        j
    };
    let a = C::new(T::lit(lam), T::zero());
    SparseOp::from_action(layout.total_dim(), |i| {
        let up = shift(i, [1, 1, -1, -1]);
        let down = shift(i, [-1, -1, 1, 1]);
        if up == down {
            vec![(up, a + a)]
        } else {
            vec![(up, a), (down, a)]
        }
    })
}

/// The pieces that exist on this geometry.
pub fn hamiltonian_terms<T: Real>(layout: &RegisterLayout, couplings: &Couplings) -> Vec<HamiltonianTerm<T>> {
    TermName::ALL.iter().filter_map(|&name| build_hamiltonian_term(layout, name, couplings).ok()).collect()
}

/// H = H_E + H_B + H_M + H_GM on the physical registers.
pub fn total_hamiltonian<T: Real>(layout: &RegisterLayout, couplings: &Couplings) -> SparseOp<T> {
    let phys = layout.physical();
    hamiltonian_terms::<T>(&phys, couplings).iter().fold(SparseOp::zero(phys.total_dim()), |acc, t| acc.add(&t.op))
}
