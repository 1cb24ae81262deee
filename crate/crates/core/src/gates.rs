//! Gate IR. A `GateOp` names a primitive, its target registers and f64
//! parameters; matrices are only materialized against a `LinkAlgebra` when a
//! schedule is bound to a layout. Keeping the IR symbolic is what lets a
//! schedule round-trip through the text dump.

use crate::algebra::{electric_energy, ElectricVariant, LinkAlgebra, TermName};
use crate::error::{Result, SimError};
use crate::linalg::Matrix;
use crate::scalar::{cis, Real, C};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    /// labeled no-op (init / transport stages)
    Marker,
    /// Σ_m Q^m ⊗ |m̃><m̃| on [link, ancilla], or its adjoint
    Entangle { inverse: bool },
    /// Ṽ_D or Ṽ_D† on [ancilla]
    Fourier { inverse: bool },
    /// m̃ -> −m̃ on [ancilla]
    Flip,
    /// exp(−i·angle·(Q̃ + Q̃†)) on [ancilla]
    ControlRotation { angle: f64 },
    /// Ũ_W† = exp(n ⊗ log P̃) on [fermion, ancilla] (adjoint = true), or Ũ_W
    AncillaCoupling { adjoint: bool },
    /// U_W = exp(log Q ⊗ n) on [link, fermion], or U_W†
    LinkCoupling { adjoint: bool },
    /// exp(−i·angle·n) on [fermion]
    NumberPhase { angle: f64 },
    /// same matrix as NumberPhase, kept apart so the mass layer reads as such
    Mass { angle: f64 },
    /// exp(−i·angle·(ψ†_a ψ_b + h.c.)) on the contiguous mode range [a, .., b]
    Hop { angle: f64 },
    /// exp(−i·angle·e(m)) on [link]
    Electric { angle: f64, variant: ElectricVariant },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Marker => "marker",
            GateKind::Entangle { inverse: false } => "entangle",
            GateKind::Entangle { inverse: true } => "entangle_dg",
            GateKind::Fourier { inverse: false } => "fourier",
            GateKind::Fourier { inverse: true } => "fourier_dg",
            GateKind::Flip => "flip",
            GateKind::ControlRotation { .. } => "control_rotation",
            GateKind::AncillaCoupling { adjoint: true } => "ancilla_coupling_dg",
            GateKind::AncillaCoupling { adjoint: false } => "ancilla_coupling",
            GateKind::LinkCoupling { adjoint: false } => "link_coupling",
            GateKind::LinkCoupling { adjoint: true } => "link_coupling_dg",
            GateKind::NumberPhase { .. } => "number_phase",
            GateKind::Mass { .. } => "mass",
            GateKind::Hop { .. } => "hop",
            GateKind::Electric { variant: ElectricVariant::Group, .. } => "electric",
            GateKind::Electric { variant: ElectricVariant::Z3Implementation, .. } => "electric_z3",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::ControlRotation { angle }
            | GateKind::NumberPhase { angle }
            | GateKind::Mass { angle }
            | GateKind::Hop { angle }
            | GateKind::Electric { angle, .. } => vec![angle],
            _ => vec![],
        }
    }

    fn from_parts(name: &str, params: &[f64]) -> Option<GateKind> {
        let one = || (params.len() == 1).then(|| params[0]);
        let none = params.is_empty();
        Some(match name {
            "marker" if none => GateKind::Marker,
            "entangle" if none => GateKind::Entangle { inverse: false },
            "entangle_dg" if none => GateKind::Entangle { inverse: true },
            "fourier" if none => GateKind::Fourier { inverse: false },
            "fourier_dg" if none => GateKind::Fourier { inverse: true },
            "flip" if none => GateKind::Flip,
            "control_rotation" => GateKind::ControlRotation { angle: one()? },
            "ancilla_coupling_dg" if none => GateKind::AncillaCoupling { adjoint: true },
            "ancilla_coupling" if none => GateKind::AncillaCoupling { adjoint: false },
            "link_coupling" if none => GateKind::LinkCoupling { adjoint: false },
            "link_coupling_dg" if none => GateKind::LinkCoupling { adjoint: true },
            "number_phase" => GateKind::NumberPhase { angle: one()? },
            "mass" => GateKind::Mass { angle: one()? },
            "hop" => GateKind::Hop { angle: one()? },
            "electric" => GateKind::Electric { angle: one()?, variant: ElectricVariant::Group },
            "electric_z3" => GateKind::Electric { angle: one()?, variant: ElectricVariant::Z3Implementation },
            _ => return None,
        })
    }

    /// The adjoint primitive.
    pub fn adjoint(&self) -> GateKind {
        match *self {
            GateKind::Marker => GateKind::Marker,
            GateKind::Entangle { inverse } => GateKind::Entangle { inverse: !inverse },
            GateKind::Fourier { inverse } => GateKind::Fourier { inverse: !inverse },
            GateKind::Flip => GateKind::Flip,
            GateKind::ControlRotation { angle } => GateKind::ControlRotation { angle: -angle },
            GateKind::AncillaCoupling { adjoint } => GateKind::AncillaCoupling { adjoint: !adjoint },
            GateKind::LinkCoupling { adjoint } => GateKind::LinkCoupling { adjoint: !adjoint },
            GateKind::NumberPhase { angle } => GateKind::NumberPhase { angle: -angle },
            GateKind::Mass { angle } => GateKind::Mass { angle: -angle },
            GateKind::Hop { angle } => GateKind::Hop { angle: -angle },
            GateKind::Electric { angle, variant } => GateKind::Electric { angle: -angle, variant },
        }
    }

    /// Number of targets the primitive expects; None for the variable-width hop.
    pub fn arity(&self) -> Option<usize> {
        match self {
            GateKind::Marker => Some(0),
            GateKind::Entangle { .. } | GateKind::AncillaCoupling { .. } | GateKind::LinkCoupling { .. } => Some(2),
            GateKind::Hop { .. } => None,
            _ => Some(1),
        }
    }

    /// Matrix over the targets, first target most significant.
    pub fn matrix<T: Real>(&self, alg: &LinkAlgebra<T>, n_targets: usize) -> Matrix<T> {
        let n = alg.n;
        let one = C::new(T::one(), T::zero());
        match *self {
            GateKind::Marker => Matrix::identity(1),
            GateKind::Entangle { inverse } => {
                let mut u = Matrix::zeros(n * n, n * n);
                let mut qm = Matrix::identity(n);
                for m in 0..n {
                    for r in 0..n {
                        for c in 0..n {
                            u[(r * n + m, c * n + m)] = qm[(r, c)];
                        }
                    }
                    qm = &alg.q * &qm;
                }
                if inverse {
                    u.adjoint()
                } else {
                    u
                }
            }
            GateKind::Fourier { inverse } => {
                if inverse {
                    alg.vd.adjoint()
                } else {
                    alg.vd.clone()
                }
            }
            GateKind::Flip => alg.flip(),
            GateKind::ControlRotation { angle } => {
                // Q + Q† = V_D† (P + P†) V_D, diagonal in the Fourier basis
                let d: Vec<C<T>> = (0..n)
                    .map(|m| cis(-T::lit(angle * 2.0 * (std::f64::consts::TAU * m as f64 / n as f64).cos())))
                    .collect();
                let vd = &alg.vd;
                &(&vd.adjoint() * &Matrix::from_diag(&d)) * vd
            }
            GateKind::AncillaCoupling { adjoint } => {
                let p = if adjoint { alg.p.clone() } else { alg.p_dag() };
                let mut u = Matrix::identity(2 * n);
                for a in 0..n {
                    u[(n + a, n + a)] = p[(a, a)];
                }
                u
            }
            GateKind::LinkCoupling { adjoint } => {
                let q = if adjoint { alg.q_dag() } else { alg.q.clone() };
                let mut u = Matrix::zeros(2 * n, 2 * n);
                for r in 0..n {
                    u[(2 * r, 2 * r)] = one;
                    for c in 0..n {
                        u[(2 * r + 1, 2 * c + 1)] = q[(r, c)];
                    }
                }
                u
            }
            GateKind::NumberPhase { angle } | GateKind::Mass { angle } => {
                Matrix::from_diag(&[one, cis(-T::lit(angle))])
            }
            GateKind::Hop { angle } => hop_matrix(n_targets, angle),
            GateKind::Electric { angle, variant } => Matrix::from_diag(
                &(0..n).map(|m| cis(-T::lit(angle * electric_energy(m, n, variant)))).collect::<Vec<_>>(),
            ),
        }
    }
}

/// exp(−iθ(σ+_0 Z..Z σ−_{k−1} + h.c.)) on k qubits; the string sign comes
/// from the parity of the interior modes.
pub fn hop_matrix<T: Real>(k: usize, theta: f64) -> Matrix<T> {
    assert!(k >= 2, "hop needs two endpoint modes");
    let dim = 1usize << k;
    let mut u = Matrix::<T>::identity(dim);
    let hi = 1usize << (k - 1); // bit of the first target (most significant)
    let lo = 1usize;
    let (cs, sn) = (T::lit(theta.cos()), T::lit(theta.sin()));
    for i in 0..dim {
        // pair |..1_a..0_b> with |..0_a..1_b>
        if i & hi == 0 && i & lo == 1 {
            let j = (i | hi) & !lo;
            let interior = ((i & !hi & !lo).count_ones() % 2) as i32;
            let s = if interior == 0 { T::one() } else { -T::one() };
            u[(i, i)] = C::new(cs, T::zero());
            u[(j, j)] = C::new(cs, T::zero());
            u[(j, i)] = C::new(T::zero(), -sn * s);
            u[(i, j)] = C::new(T::zero(), -sn * s);
        }
    }
    u
}

/// Which sub-evolution a gate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Term(TermName),
    Init,
    Move,
    Idle,
}

impl Block {
    pub fn tag(&self) -> &'static str {
        match self {
            Block::Term(t) => t.tag(),
            Block::Init => "init",
            Block::Move => "move",
            Block::Idle => "idle",
        }
    }

    fn parse(s: &str) -> Option<Block> {
        Some(match s {
            "init" => Block::Init,
            "move" => Block::Move,
            "idle" => Block::Idle,
            _ => Block::Term(*TermName::ALL.iter().find(|t| t.tag() == s)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    /// 1..=35 in choreography mode, 0 otherwise
    pub stage: u8,
    pub block: Block,
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl GateOp {
    pub fn new(stage: u8, block: Block, kind: GateKind, targets: Vec<usize>) -> Self {
        Self { stage, block, kind, targets }
    }

    pub fn name(&self) -> String {
        format!("{}.{}", self.block.tag(), self.kind.name())
    }

    pub fn adjoint(&self) -> GateOp {
        GateOp { kind: self.kind.adjoint(), ..self.clone() }
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if let Some(a) = self.kind.arity() {
            if a != self.targets.len() {
                return Err(SimError::Targets(format!("{} expects {a} targets, got {}", self.name(), self.targets.len())));
            }
        } else if self.targets.len() < 2 {
            return Err(SimError::Targets(format!("{} needs at least two modes", self.name())));
        }
        if let Some(&t) = self.targets.iter().find(|&&t| t >= dims.len()) {
            return Err(SimError::Targets(format!("{}: register {t} out of range", self.name())));
        }
        Ok(())
    }
}

/// 17 significant digits: enough for an exact f64 round trip.
pub fn fmt_param(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn dump_ops(ops: &[GateOp]) -> String {
    let mut s = String::new();
    for op in ops {
        let targets = if op.targets.is_empty() {
            "-".to_string()
        } else {
            op.targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
        };
        let params = op.kind.params();
        let params = if params.is_empty() { "-".to_string() } else { params.iter().map(|&p| fmt_param(p)).collect::<Vec<_>>().join(",") };
        let _ = writeln!(s, "{}\t{}\t{}\t{}", op.stage, op.name(), targets, params);
    }
    s
}

pub fn parse_ops(text: &str) -> Result<Vec<GateOp>> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: &str| SimError::Parse { line: line_no, msg: msg.to_string() };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err("expected 4 tab-separated columns"));
        }
        let stage: u8 = cols[0].parse().map_err(|_| err("bad stage index"))?;
        let (btag, kname) = cols[1].split_once('.').ok_or_else(|| err("name must be block.kind"))?;
        let block = Block::parse(btag).ok_or_else(|| err("unknown block tag"))?;
        let targets: Vec<usize> = if cols[2] == "-" {
            vec![]
        } else {
            cols[2].split(',').map(|t| t.parse().map_err(|_| err("bad target"))).collect::<Result<_>>()?
        };
        let params: Vec<f64> = if cols[3] == "-" {
            vec![]
        } else {
            cols[3].split(',').map(|t| t.parse().map_err(|_| err("bad parameter"))).collect::<Result<_>>()?
        };
        let kind = GateKind::from_parts(kname, &params).ok_or_else(|| err("unknown gate or wrong parameter count"))?;
        ops.push(GateOp { stage, block, kind, targets });
    }
    Ok(ops)
}
