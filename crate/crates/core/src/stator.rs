//! Stators: link-ancilla entanglers, the plaquette stator, the control
//! rotation, ancilla flip/Fourier gates, the gauge-matter gadget and the
//! spin-1 collision algebra behind the Z_3 entangler.
//!
//! Ancilla |m̃> labels the P̃ eigenbasis exactly like a link; |ĩn> is the
//! uniform superposition (Q̃ eigenvalue 1).

use crate::algebra::{spin1, LinkAlgebra};
use crate::error::{Result, SimError};
use crate::gates::{Block, GateKind, GateOp};
use crate::algebra::TermName;
use crate::lattice::{Link, RegisterLayout, Vertex};
use crate::linalg::{evolution, Matrix};
use crate::scalar::{cis, czero, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// U_i = Σ_m Q^m ⊗ |m̃><m̃| on link ⊗ ancilla, or its adjoint.
pub fn stator_entangler<T: Real>(alg: &LinkAlgebra<T>, direction: Direction) -> Matrix<T> {
    GateKind::Entangle { inverse: direction == Direction::Inverse }.matrix(alg, 2)
}

pub fn in_state<T: Real>(n: usize) -> Vec<C<T>> {
    let a = T::one() / T::lit(n as f64).sqrt();
    vec![C::new(a, T::zero()); n]
}

/// The stator as a map H_phys -> H_phys ⊗ H_anc: S = U (1 ⊗ |ĩn>).
pub fn stator_map<T: Real>(u: &Matrix<T>, phys_dim: usize, anc_dim: usize) -> Matrix<T> {
    let inn = in_state::<T>(anc_dim);
    Matrix::from_fn(phys_dim * anc_dim, phys_dim, |r, c| {
        (0..anc_dim).fold(czero(), |s, a| s + u[(r, c * anc_dim + a)] * inn[a])
    })
}

/// Ancilla operator lifted to phys ⊗ anc.
pub fn on_ancilla<T: Real>(op: &Matrix<T>, phys_dim: usize) -> Matrix<T> {
    Matrix::identity(phys_dim).kron(op)
}

pub fn control_field_rotation<T: Real>(alg: &LinkAlgebra<T>, tau: f64, lambda_b: f64) -> Matrix<T> {
    GateKind::ControlRotation { angle: tau * lambda_b }.matrix(alg, 1)
}

pub fn ancilla_flip<T: Real>(alg: &LinkAlgebra<T>) -> Matrix<T> {
    alg.flip()
}

pub fn ancilla_fourier<T: Real>(alg: &LinkAlgebra<T>) -> Matrix<T> {
    alg.vd.clone()
}

/// exp(i(2π/9)(P−P†)⊗(P̃−P̃†)) = exp(−i(2π/3) F_z F̃_z).
pub fn z3_collision_entangler<T: Real>(alg: &LinkAlgebra<T>) -> Result<Matrix<T>> {
    alg.require_z3()?;
    let pm = &alg.p - &alg.p_dag();
    let gen = pm.kron(&pm); // Hermitian: (i√3 F_z)⊗(i√3 F̃_z) = −3 F_z F̃_z
    Ok(evolution(&gen, -T::TAU() / T::lit(9.0)))
}

/// Plaquette stator gates U_1 U_2 U_3† U_4† (bottom, right, top, left) on the
/// control of plaquette x; the inverse emits adjoints in reverse order.
pub fn plaquette_stator_sequence(layout: &RegisterLayout, plaquette: Vertex, direction: Direction, block: Block, stage: u8) -> Result<Vec<GateOp>> {
    let anc = layout.control_for_plaquette(plaquette)?;
    let links = layout.geometry.plaquette_links(plaquette);
    let inverse_of = [false, false, true, true];
    let mut ops = Vec::with_capacity(4);
    for (l, inv) in links.iter().zip(inverse_of) {
        ops.push(GateOp::new(stage, block, GateKind::Entangle { inverse: inv }, vec![layout.link(*l)?, anc]));
    }
    Ok(match direction {
        Direction::Forward => ops,
        Direction::Inverse => ops.iter().rev().map(|g| g.adjoint()).collect(),
    })
}

/// Entangle, rotate the control by exp(−iτλ_B(Q̃+Q̃†)), disentangle.
pub fn plaquette_sandwich(layout: &RegisterLayout, plaquette: Vertex, tau: f64, lambda_b: f64, block: Block, stage: u8) -> Result<Vec<GateOp>> {
    let anc = layout.control_for_plaquette(plaquette)?;
    let mut ops = plaquette_stator_sequence(layout, plaquette, Direction::Forward, block, stage)?;
    ops.push(GateOp::new(stage, block, GateKind::ControlRotation { angle: tau * lambda_b }, vec![anc]));
    ops.extend(plaquette_stator_sequence(layout, plaquette, Direction::Inverse, block, stage)?);
    Ok(ops)
}

/// Fermion registers from the link origin to its end in Jordan-Wigner order.
pub fn hop_targets(layout: &RegisterLayout, link: Link) -> Result<Vec<usize>> {
    let a = layout.fermion(link.origin)?;
    let b = layout.fermion(link.end())?;
    Ok((a..=b).collect())
}

/// The pieces of the gauge-matter construction for one link.
#[derive(Clone, Debug)]
pub struct GaugeMatterGates {
    pub link: Link,
    pub link_reg: usize,
    pub origin_reg: usize,
    pub modes: Vec<usize>,
    pub theta: f64,
    pub theta_prime: f64,
    /// fermion-ancilla channel couplings g′₀, g′₁; recorded, never used
    pub channel_couplings: Option<(f64, f64)>,
}

pub fn gauge_matter_gates(layout: &RegisterLayout, link: Link, theta: f64, theta_prime: f64) -> Result<GaugeMatterGates> {
    if !layout.geometry.has_link(link) {
        return Err(SimError::UnknownSite(format!("link {link}")));
    }
    Ok(GaugeMatterGates {
        link,
        link_reg: layout.link(link)?,
        origin_reg: layout.fermion(link.origin)?,
        modes: hop_targets(layout, link)?,
        theta,
        theta_prime,
        channel_couplings: None,
    })
}

impl GaugeMatterGates {
    fn block(&self) -> Block {
        Block::Term(TermName::from_class(self.link.class()))
    }

    /// U_W† · hop · U_W, no ancilla. Equals exp(−i·angle·H_GM(link)).
    pub fn direct_route(&self, hop_angle: f64, stages: [u8; 3]) -> Vec<GateOp> {
        let b = self.block();
        vec![
            GateOp::new(stages[0], b, GateKind::LinkCoupling { adjoint: true }, vec![self.link_reg, self.origin_reg]),
            GateOp::new(stages[1], b, GateKind::Hop { angle: hop_angle }, self.modes.clone()),
            GateOp::new(stages[2], b, GateKind::LinkCoupling { adjoint: false }, vec![self.link_reg, self.origin_reg]),
        ]
    }

    /// Ancilla part of the stator route: Ũ_W† then hop then flip-conjugated
    /// Ũ_W†. Assumes a P-stator is already alive on `anc`.
    pub fn ancilla_core(&self, anc: usize, hop_angle: f64, stages: [u8; 3]) -> Vec<GateOp> {
        let b = self.block();
        let couple = GateKind::AncillaCoupling { adjoint: true };
        vec![
            GateOp::new(stages[0], b, couple, vec![self.origin_reg, anc]),
            GateOp::new(stages[1], b, GateKind::Hop { angle: hop_angle }, self.modes.clone()),
            GateOp::new(stages[2], b, GateKind::Flip, vec![anc]),
            GateOp::new(stages[2], b, couple, vec![self.origin_reg, anc]),
            GateOp::new(stages[2], b, GateKind::Flip, vec![anc]),
        ]
    }

    /// Full stator-mediated route with the spurious phases V_W′(θ), V_W′(θ′)
    /// on the origin fermion.
    pub fn stator_route(&self, anc: usize, hop_angle: f64) -> Vec<GateOp> {
        let b = self.block();
        let mut ops = vec![
            GateOp::new(0, b, GateKind::Entangle { inverse: false }, vec![self.link_reg, anc]),
            GateOp::new(0, b, GateKind::Fourier { inverse: false }, vec![anc]),
            GateOp::new(0, b, GateKind::NumberPhase { angle: self.theta }, vec![self.origin_reg]),
        ];
        ops.extend(self.ancilla_core(anc, hop_angle, [0, 0, 0]));
        ops.push(GateOp::new(0, b, GateKind::NumberPhase { angle: self.theta_prime }, vec![self.origin_reg]));
        ops.push(GateOp::new(0, b, GateKind::Fourier { inverse: true }, vec![anc]));
        ops.push(GateOp::new(0, b, GateKind::Entangle { inverse: true }, vec![self.link_reg, anc]));
        ops
    }

    /// Hermitian tunneling generator ψ†_a ψ_b + h.c. on the mode range.
    pub fn tunneling_generator<T: Real>(&self) -> Matrix<T> {
        let k = self.modes.len();
        let dim = 1usize << k;
        let hi = 1usize << (k - 1);
        let mut h = Matrix::zeros(dim, dim);
        for i in 0..dim {
            if i & hi == 0 && i & 1 == 1 {
                let j = (i | hi) & !1;
                let s = if (i & !hi & !1).count_ones().is_multiple_of(2) { T::one() } else { -T::one() };
                h[(j, i)] = C::new(s, T::zero());
                h[(i, j)] = C::new(s, T::zero());
            }
        }
        h
    }
}

// ---- spin-1 collisions ------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionCouplings {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

/// η coefficients as displayed: η₀ = g₀ + 3g₂/2, η₁ = g₁ − g₂/2, η₂ = 3g₂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eta {
    pub eta0: f64,
    pub eta1: f64,
    pub eta2: f64,
}

pub fn eta_coefficients(g: CollisionCouplings) -> Eta {
    Eta { eta0: g.g0 + 1.5 * g.g2, eta1: g.g1 - 0.5 * g.g2, eta2: 3.0 * g.g2 }
}

/// What the diagonal projection of g₀ + g₁(F·F̃) + g₂(F·F̃)² really is:
/// η₀ + η₁ F_zF̃_z + pair·N₀Ñ₀ + local·(N₀ + Ñ₀).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalForm {
    pub eta0: f64,
    pub eta1: f64,
    pub pair: f64,
    pub local: f64,
}

pub fn exact_diagonal_form(g: CollisionCouplings) -> DiagonalForm {
    DiagonalForm { eta0: g.g0 + 1.5 * g.g2, eta1: g.g1 - 0.5 * g.g2, pair: 1.5 * g.g2, local: -0.5 * g.g2 }
}

/// F·F̃ on the 9-dim pair space (link first).
pub fn spin_dot<T: Real>() -> Matrix<T> {
    let s = spin1::<T>();
    let xx = s.fx.kron(&s.fx);
    let yy = s.fy.kron(&s.fy);
    let zz = s.fz.kron(&s.fz);
    &(&xx + &yy) + &zz
}

pub fn collision_generator<T: Real>(g: CollisionCouplings) -> Matrix<T> {
    let d = spin_dot::<T>();
    let d2 = &d * &d;
    let id = Matrix::<T>::identity(9);
    let a = &id.scale_real(T::lit(g.g0)) + &d.scale_real(T::lit(g.g1));
    &a + &d2.scale_real(T::lit(g.g2))
}

/// exp(−iα Σ_j g_j (F·F̃)^j)
pub fn collision_unitary<T: Real>(g: CollisionCouplings, alpha: f64) -> Matrix<T> {
    evolution(&collision_generator::<T>(g), T::lit(alpha))
}

/// Rotating-wave projection of a pair generator: only processes that keep
/// both m_F and m̃_F survive, i.e. the diagonal in the product basis.
pub fn rwa_project<T: Real>(generator: &Matrix<T>) -> Matrix<T> {
    let n = generator.rows();
    Matrix::from_fn(n, n, |r, c| if r == c { generator[(r, c)] } else { czero() })
}

pub fn rwa_collision_unitary<T: Real>(g: CollisionCouplings, alpha: f64) -> Matrix<T> {
    let d = rwa_project(&collision_generator::<T>(g));
    Matrix::from_diag(&(0..9).map(|i| cis(-T::lit(alpha) * d[(i, i)].re)).collect::<Vec<_>>())
}

fn pair_diagonals() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // basis m_F = 0, +1, −1 on each atom; index = 3·link + ancilla
    let mz = [0.0, 1.0, -1.0];
    let mut zz = vec![0.0; 9];
    let mut n0n0 = vec![0.0; 9];
    let mut n0 = vec![0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            let i = 3 * a + b;
            zz[i] = mz[a] * mz[b];
            n0n0[i] = f64::from(a == 0 && b == 0);
            n0[i] = f64::from(a == 0) + f64::from(b == 0);
        }
    }
    (zz, n0n0, n0)
}

/// exp(−iα(η₀ + η₁F_zF̃_z + η₂N₀Ñ₀)) with N_tot = Ñ_tot = 1.
pub fn eta_form_unitary<T: Real>(eta: Eta, alpha: f64) -> Matrix<T> {
    let (zz, n0n0, _) = pair_diagonals();
    Matrix::from_diag(
        &(0..9).map(|i| cis(-T::lit(alpha * (eta.eta0 + eta.eta1 * zz[i] + eta.eta2 * n0n0[i])))).collect::<Vec<_>>(),
    )
}

/// exp(−iβ N₀Ñ₀)
pub fn pair_phase<T: Real>(beta: f64) -> Matrix<T> {
    let (_, n0n0, _) = pair_diagonals();
    Matrix::from_diag(&n0n0.iter().map(|&x| cis(-T::lit(beta * x))).collect::<Vec<_>>())
}

/// exp(−iγ(N₀ + Ñ₀)): a product of single-atom phases.
pub fn local_phase<T: Real>(gamma: f64) -> Matrix<T> {
    let (_, _, n0) = pair_diagonals();
    Matrix::from_diag(&n0.iter().map(|&x| cis(-T::lit(gamma * x))).collect::<Vec<_>>())
}

/// α = 2π/(3η₁)
pub fn entangling_duration(eta1: f64) -> Result<f64> {
    if eta1 == 0.0 || !eta1.is_finite() {
        return Err(SimError::Parameter("η₁ = 0 admits no entangling duration".into()));
    }
    Ok(std::f64::consts::TAU / (3.0 * eta1))
}

/// The displayed chain: η-form at α = 2π/(3η₁), then exp(−iβN₀Ñ₀) with
/// β = 2π(κ − η₂/(3η₁)). κ is an integer so exp(−i2πκN₀Ñ₀) = 1.
pub fn composed_entangler<T: Real>(g: CollisionCouplings, kappa: i64) -> Result<Matrix<T>> {
    let eta = eta_coefficients(g);
    let alpha = entangling_duration(eta.eta1)?;
    let beta = std::f64::consts::TAU * (kappa as f64 - eta.eta2 / (3.0 * eta.eta1));
    Ok(&pair_phase::<T>(beta) * &eta_form_unitary::<T>(eta, alpha))
}

/// Same target built from the true RWA projection of the collision: the pair
/// compensation uses the projected N₀Ñ₀ coefficient and the leftover
/// single-atom term is undone locally.
pub fn corrected_entangler<T: Real>(g: CollisionCouplings, kappa: i64) -> Result<Matrix<T>> {
    let form = exact_diagonal_form(g);
    let alpha = entangling_duration(form.eta1)?;
    let beta = std::f64::consts::TAU * kappa as f64 - alpha * form.pair;
    let u = rwa_collision_unitary::<T>(g, alpha);
    let fixed = &pair_phase::<T>(beta) * &u;
    Ok(&local_phase::<T>(-alpha * form.local) * &fixed)
}

/// min_φ max|A − e^{iφ}B|, with φ taken from the overlap tr(B†A).
pub fn phase_aligned_residual<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    let ov = (&b.adjoint() * a).trace();
    let ph = if ov.norm() > T::zero() { ov.unscale(ov.norm()) } else { C::new(T::one(), T::zero()) };
    (a - &b.scale(ph)).max_abs()
}
