//! Exact evolution and the yardsticks the Trotter schedules are held to.
//!
//! Everything dense runs per sector: connected components of the union of
//! the Hamiltonian terms' sparsity graphs. Each term's exponential, hence every
//! product formula, stays inside a sector.

use crate::algebra::{electric_energy, hamiltonian_terms, Couplings, SparseOp, TermName};
use crate::compiler::Program;
use crate::error::{Result, SimError};
use crate::lattice::{attach_ancillas, project_ancillas, LatticeGeometry, RegisterLayout};
use crate::linalg::{hermitian_eigen, power_norm, unitary_eigenphases, HermitianEigen, Matrix, NormEstimate};
use crate::scalar::{cis, czero, Real, C};

/// Largest block the dense path accepts.
pub const MAX_DENSE_DIM: usize = 5000;

#[derive(Clone, Debug, PartialEq)]
pub struct Sectors {
    pub blocks: Vec<Vec<usize>>,
    pub block_of: Vec<usize>,
    /// position of a basis index inside its block
    pub position: Vec<usize>,
}

impl Sectors {
    pub fn dim(&self) -> usize {
        self.block_of.len()
    }

    pub fn largest(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn trivial(dim: usize) -> Self {
        Self { blocks: vec![(0..dim).collect()], block_of: vec![0; dim], position: (0..dim).collect() }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Union-find over the nonzero pattern (stored entries, zero or not).
pub fn sectors<T: Real>(h: &SparseOp<T>) -> Sectors {
    let n = h.dim;
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, col) in h.cols.iter().enumerate() {
        for &(j, _) in col {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut root_block = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![0; n];
    let mut position = vec![0; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_block[r] == usize::MAX {
            root_block[r] = blocks.len();
            blocks.push(Vec::new());
        }
        let b = root_block[r];
        block_of[i] = b;
        position[i] = blocks[b].len();
        blocks[b].push(i);
    }
    Sectors { blocks, block_of, position }
}

/// An operator that is block diagonal over `sectors`.
#[derive(Clone, Debug)]
pub struct BlockOperator<T: Real> {
    pub sectors: Sectors,
    pub mats: Vec<Matrix<T>>,
}

impl<T: Real> BlockOperator<T> {
    pub fn identity(sectors: &Sectors) -> Self {
        Self { sectors: sectors.clone(), mats: sectors.blocks.iter().map(|b| Matrix::identity(b.len())).collect() }
    }

    pub fn from_sparse(op: &SparseOp<T>, sectors: &Sectors) -> Self {
        Self { sectors: sectors.clone(), mats: sectors.blocks.iter().map(|b| op.block(b, &sectors.position)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.sectors.dim()
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![czero(); v.len()];
        for (b, m) in self.sectors.blocks.iter().zip(&self.mats) {
            let local: Vec<C<T>> = b.iter().map(|&i| v[i]).collect();
            for (&i, z) in b.iter().zip(m.matvec(&local)) {
                out[i] = z;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { sectors: self.sectors.clone(), mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a * b).collect() }
    }

    pub fn pow(&self, e: u64) -> Self {
        Self { sectors: self.sectors.clone(), mats: self.mats.iter().map(|m| m.pow(e)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { sectors: self.sectors.clone(), mats: self.mats.iter().map(|m| m.adjoint()).collect() }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { sectors: self.sectors.clone(), mats: self.mats.iter().map(|m| m.scale(s)).collect() }
    }

    pub fn to_dense(&self) -> Matrix<T> {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (b, m) in self.sectors.blocks.iter().zip(&self.mats) {
            for (r, &i) in b.iter().enumerate() {
                for (c, &j) in b.iter().enumerate() {
                    out[(i, j)] = m[(r, c)];
                }
            }
        }
        out
    }

    /// max over blocks of ‖A†A − 1‖
    pub fn unitarity_residual(&self) -> T {
        self.mats
            .iter()
            .map(|m| (&(&m.adjoint() * m) - &Matrix::identity(m.rows())).max_abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// H diagonalized sector by sector.
pub struct ExactPropagator<T: Real> {
    pub sectors: Sectors,
    eig: Vec<HermitianEigen<T>>,
}

impl<T: Real> ExactPropagator<T> {
    pub fn new(h: &SparseOp<T>) -> Result<Self> {
        Self::with_sectors(h, sectors(h))
    }

    pub fn with_sectors(h: &SparseOp<T>, sectors: Sectors) -> Result<Self> {
        if sectors.largest() > MAX_DENSE_DIM {
            return Err(SimError::Dimension(format!("sector of dimension {} exceeds the dense limit {MAX_DENSE_DIM}", sectors.largest())));
        }
        let eig = sectors.blocks.iter().map(|b| hermitian_eigen(&h.block(b, &sectors.position))).collect();
        Ok(Self { sectors, eig })
    }

    pub fn unitary(&self, t: f64) -> BlockOperator<T> {
        let t = T::lit(t);
        BlockOperator { sectors: self.sectors.clone(), mats: self.eig.iter().map(|e| e.apply_fn(|l| cis(-l * t))).collect() }
    }

    pub fn evolve(&self, t: f64, v: &[C<T>]) -> Vec<C<T>> {
        self.unitary(t).apply(v)
    }

    /// Spectral norm of H (max |eigenvalue|).
    pub fn norm(&self) -> f64 {
        self.eig.iter().flat_map(|e| e.values.iter()).fold(0.0, |m, v| m.max(Real::to_f64(*v).abs()))
    }
}

pub fn exact_evolve<T: Real>(h: &SparseOp<T>, t: f64, state: &[C<T>]) -> Result<Vec<C<T>>> {
    if state.len() != h.dim {
        return Err(SimError::Dimension(format!("state of length {} for an operator of dimension {}", state.len(), h.dim)));
    }
    Ok(ExactPropagator::new(h)?.evolve(t, state))
}

/// Physical map ψ ↦ (1⊗<ĩn|) P (ψ⊗|ĩn>) of a bound program, built column by
/// column inside each sector. Fails if a column leaks out of its sector.
pub fn one_step_map<T: Real>(program: &Program<T>, layout: &RegisterLayout, sectors: &Sectors) -> Result<BlockOperator<T>> {
    let phys = layout.physical_dim();
    if sectors.dim() != phys || program.dim() != layout.total_dim() {
        return Err(SimError::Dimension("sectors, program and layout disagree".into()));
    }
    let mut mats = Vec::with_capacity(sectors.blocks.len());
    let mut basis = vec![czero::<T>(); phys];
    for block in &sectors.blocks {
        let mut m = Matrix::zeros(block.len(), block.len());
        for (c, &p) in block.iter().enumerate() {
            basis[p] = C::new(T::one(), T::zero());
            let mut full = attach_ancillas(layout, &basis);
            basis[p] = czero();
            program.apply(&mut full.amps);
            let out = project_ancillas(layout, &full.amps);
            let mut inside = T::zero();
            for (r, &i) in block.iter().enumerate() {
                m[(r, c)] = out[i];
                inside = inside + out[i].norm_sqr();
            }
            let total = out.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
            let leak = (total - inside).to_f64();
            if leak > 1e-10 {
                return Err(SimError::Dimension(format!("step map leaks {leak:e} out of its sector")));
            }
        }
        mats.push(m);
    }
    Ok(BlockOperator { sectors: sectors.clone(), mats })
}

/// ‖A − B‖ by power iteration on Δ†Δ per block, relative tolerance `rel_tol`.
pub fn diamond_surrogate_distance<T: Real>(a: &BlockOperator<T>, b: &BlockOperator<T>, rel_tol: f64) -> Result<NormEstimate<T>> {
    if a.sectors != b.sectors {
        return Err(SimError::Dimension("maps on different sector structures".into()));
    }
    let mut worst = NormEstimate { value: T::zero(), iterations: 0, converged: true };
    for (k, (ma, mb)) in a.mats.iter().zip(&b.mats).enumerate() {
        let d = ma - mb;
        let da = d.adjoint();
        let mut est = power_norm(d.cols(), |v| da.matvec(&d.matvec(v)), T::lit(rel_tol), T::lit(1e-300_f64.max(T::min_positive_value().to_f64())), 20_000, k as u64);
        if !est.converged && d.cols() <= MAX_DENSE_DIM {
            // clustered top singular values: solve Δ†Δ exactly instead
            let top = hermitian_eigen(&(&da * &d)).values.last().copied().unwrap_or_else(T::zero);
            est = NormEstimate { value: top.max(T::zero()).sqrt(), iterations: est.iterations, converged: true };
        }
        worst.converged &= est.converged;
        worst.iterations = worst.iterations.max(est.iterations);
        if est.value > worst.value {
            worst.value = est.value;
        }
    }
    if !worst.converged {
        return Err(SimError::Unsupported(format!("power iteration did not converge (last estimate {:e})", worst.value.to_f64())));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignedDistance {
    pub distance: f64,
    pub alpha: f64,
}

/// min_α ‖A − e^{iα} B‖. For unitary A, B this is exact from the eigenphases
/// φ_j of B†A: ‖A − e^{iα}B‖ = max_j |e^{iφ_j} − e^{iα}|. Otherwise each trial
/// α costs a norm estimate.
pub fn phase_aligned_distance<T: Real>(a: &BlockOperator<T>, b: &BlockOperator<T>, rel_tol: f64) -> Result<AlignedDistance> {
    if a.sectors != b.sectors {
        return Err(SimError::Dimension("maps on different sector structures".into()));
    }
    let unitary = a.unitarity_residual().to_f64() < 1e-9 && b.unitarity_residual().to_f64() < 1e-9;
    if unitary {
        let phases: Vec<f64> = b.mats.iter().zip(&a.mats).flat_map(|(mb, ma)| unitary_eigenphases(&(&mb.adjoint() * ma))).collect();
        let f = |alpha: f64| -> Result<f64> { Ok(phases.iter().map(|&p| 2.0 * ((p - alpha) / 2.0).sin().abs()).fold(0.0, f64::max)) };
        minimize_over_phase(f)
    } else {
        minimize_over_phase(|alpha| Ok(diamond_surrogate_distance(a, &b.scale(cis(T::lit(alpha))), rel_tol)?.value.to_f64()))
    }
}

/// Coarse scan of [0, 2π), then golden section around the best point.
fn minimize_over_phase(f: impl Fn(f64) -> Result<f64>) -> Result<AlignedDistance> {
    let tau = std::f64::consts::TAU;
    let grid = 96;
    let h = tau / grid as f64;
    let mut best = (0.0, f(0.0)?);
    for k in 1..grid {
        let x = k as f64 * h;
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (alpha, distance) = [(x1, f1), (x2, f2), best].into_iter().fold((0.0, f64::INFINITY), |m, p| if p.1 < m.1 { p } else { m });
    Ok(AlignedDistance { distance, alpha: alpha.rem_euclid(tau) })
}

// ---- analytic bounds -------------------------------------------------------

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(v.is_finite() && *v > 0.0) {
            return Err(SimError::Parameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// order 1: 45 L⁴T²λ²/M; order 2: 60 T³L⁶λ³/M²
pub fn trotter_bound(order: u8, l: f64, lambda: f64, t: f64, m: u64) -> Result<f64> {
    check_positive(&[("L", l), ("lambda", lambda), ("T", t), ("M", m as f64)])?;
    let m = m as f64;
    match order {
        1 => Ok(45.0 * l.powi(4) * t * t * lambda * lambda / m),
        2 => Ok(60.0 * t.powi(3) * l.powi(6) * lambda.powi(3) / (m * m)),
        o => Err(SimError::Unsupported(format!("Trotter order {o}"))),
    }
}

/// order 1: ⌈45 L⁴λ²T²/ε⌉; order 2: ⌈60 L³λ^{3/2}T^{3/2}/√ε⌉ (the step-count
/// rule as stated, larger than what the order-2 bound alone demands).
pub fn steps_required(order: u8, l: f64, lambda: f64, t: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(SimError::Parameter(format!("eps must be positive, got {eps}")));
    }
    check_positive(&[("L", l), ("lambda", lambda), ("T", t)])?;
    let m = match order {
        1 => 45.0 * l.powi(4) * lambda * lambda * t * t / eps,
        2 => 60.0 * l.powi(3) * lambda.powf(1.5) * t.powf(1.5) / eps.sqrt(),
        o => return Err(SimError::Unsupported(format!("Trotter order {o}"))),
    };
    // guard against 7200.000000001 from roundoff
    let r = m.round();
    Ok(if (m - r).abs() < 1e-9 * m { r as u64 } else { m.ceil() as u64 })
}

/// (T/M) Σ_j ‖H_j‖ ≤ 1, the regime where the bounds apply.
pub fn trotter_validity(t: f64, m: u64, norm_sum: f64) -> bool {
    t / m as f64 * norm_sum <= 1.0
}

/// ‖H_j‖ of each term that exists, by diagonalization on the physical space.
pub fn term_norms(layout: &RegisterLayout, couplings: &Couplings) -> Result<Vec<(TermName, f64)>> {
    let phys = layout.physical();
    hamiltonian_terms::<f64>(&phys, couplings).iter().map(|t| Ok((t.name, ExactPropagator::new(&t.op)?.norm()))).collect()
}

/// Upper bounds from counting: every P, Q, ψ†ψ has norm one.
pub fn analytic_term_norm_bounds(layout: &RegisterLayout, c: &Couplings) -> Vec<(TermName, f64)> {
    let g: &LatticeGeometry = &layout.geometry;
    let e_max = (0..layout.n).map(|m| electric_energy(m, layout.n, c.electric).abs()).fold(0.0, f64::max);
    let mut out = vec![
        (TermName::E, c.lambda_e.abs() * e_max * g.link_count() as f64),
        (TermName::M, c.mass.abs() * g.vertex_count() as f64),
    ];
    for (name, parity) in [(TermName::Be, crate::lattice::Parity::Even), (TermName::Bo, crate::lattice::Parity::Odd)] {
        out.push((name, 2.0 * c.lambda_b.abs() * g.plaquettes_of(parity).len() as f64));
    }
    for name in [TermName::GmEh, TermName::GmEv, TermName::GmOh, TermName::GmOv] {
        let n = g.links_of_class(name.gm_class().expect("gm term")).len();
        out.push((name, c.lambda_gm.abs() * n as f64));
    }
    out
}

/// order 1: M(A + B·T/M); order 2: BT + 2CT^{3/2}.
pub fn wallclock_model(order: u8, t: f64, m: u64, a: f64, b: f64, c: f64) -> Result<f64> {
    if [t, a, b, c].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(SimError::Parameter("wall-clock constants must be nonnegative".into()));
    }
    match order {
        1 => Ok(m as f64 * (a + b * t / m as f64)),
        2 => Ok(b * t + 2.0 * c * t.powf(1.5)),
        o => Err(SimError::Unsupported(format!("Trotter order {o}"))),
    }
}

/// δ·t_exp ~ ε^{3/2} / (120 λ^{5/2} L⁵ T^{3/2})
pub fn error_budget(eps: f64, lambda: f64, l: f64, t: f64) -> Result<f64> {
    check_positive(&[("eps", eps), ("lambda", lambda), ("L", l), ("T", t)])?;
    Ok(eps.powf(1.5) / (120.0 * lambda.powf(2.5) * l.powi(5) * t.powf(1.5)))
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
