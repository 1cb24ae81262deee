//! One Trotter step as a gate schedule, its execution, and the bookkeeping of
//! the spurious fermion-number phases left by the ancilla-mediated hopping.

use crate::algebra::{gauss_law_operator, make_link_algebra, total_fermion_number, Couplings, LinkAlgebra, TermName};
use crate::error::{Result, SimError};
use crate::gates::{dump_ops, fmt_param, parse_ops, Block, GateKind, GateOp};
use crate::lattice::{project_ancillas, AncillaPolicy, Dir, GateKernel, LatticeGeometry, Link, LinkClass, Parity, RegisterLayout, StateVector, Vertex};
use crate::scalar::{cis, Real, C};
use crate::stator::{gauge_matter_gates, plaquette_sandwich};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    Choreography,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Direct => "direct",
            Mode::Choreography => "choreography",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Mode::Direct),
            "choreography" => Ok(Mode::Choreography),
            _ => Err(SimError::Parameter(format!("unknown mode {s:?}"))),
        }
    }
}

/// What to compile. θ, θ′ only matter in choreography mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSpec {
    pub tau: f64,
    pub mode: Mode,
    pub order: u8,
    pub theta: f64,
    pub theta_prime: f64,
}

impl StepSpec {
    pub fn new(tau: f64, mode: Mode, order: u8) -> Self {
        Self { tau, mode, order, theta: 0.0, theta_prime: 0.0 }
    }

    pub fn with_phases(mut self, theta: f64, theta_prime: f64) -> Self {
        self.theta = theta;
        self.theta_prime = theta_prime;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub ops: Vec<GateOp>,
    pub mode: Mode,
    pub order: u8,
    pub tau: f64,
    pub theta: f64,
    pub theta_prime: f64,
}

const HEADER: &str = "# zn-sim schedule";

impl Schedule {
    pub fn spec(&self) -> StepSpec {
        StepSpec { tau: self.tau, mode: self.mode, order: self.order, theta: self.theta, theta_prime: self.theta_prime }
    }

    /// Non-marker gates.
    pub fn gate_count(&self) -> usize {
        self.ops.iter().filter(|g| g.kind != GateKind::Marker).count()
    }

    pub fn adjoint(&self) -> Schedule {
        Schedule { ops: self.ops.iter().rev().map(|g| g.adjoint()).collect(), ..self.clone() }
    }

    pub fn dump(&self) -> String {
        let mut s = format!(
            "{HEADER}\n# mode\t{}\n# order\t{}\n# tau\t{}\n# theta\t{}\n# theta_prime\t{}\n",
            self.mode,
            self.order,
            fmt_param(self.tau),
            fmt_param(self.theta),
            fmt_param(self.theta_prime)
        );
        s.push_str(&dump_ops(&self.ops));
        s
    }

    pub fn parse(text: &str) -> Result<Schedule> {
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(SimError::Parse { line: 1, msg: "missing schedule header".into() });
        }
        let mut meta = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let (k, v) = rest.split_once('\t').ok_or(SimError::Parse { line: i + 1, msg: "bad header line".into() })?;
            meta.insert(k.to_string(), (i + 1, v.to_string()));
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| SimError::Parse { line: 1, msg: format!("header lacks {k}") });
        let num = |k: &str| -> Result<f64> {
            let (line, v) = get(k)?;
            v.parse().map_err(|_| SimError::Parse { line: *line, msg: format!("bad {k}") })
        };
        let (oline, order) = get("order")?;
        let order: u8 = order.parse().map_err(|_| SimError::Parse { line: *oline, msg: "bad order".into() })?;
        Ok(Schedule {
            mode: get("mode")?.1.parse()?,
            order,
            tau: num("tau")?,
            theta: num("theta")?,
            theta_prime: num("theta_prime")?,
            ops: parse_ops(text)?,
        })
    }
}

// ---- compilation ------------------------------------------------------------

pub const STAGES: u8 = 35;

/// U_W† · hop · U_W on one link, no ancilla.
fn direct_link(layout: &RegisterLayout, link: Link, angle: f64, stages: [u8; 3]) -> Result<Vec<GateOp>> {
    Ok(gauge_matter_gates(layout, link, 0.0, 0.0)?.direct_route(angle, stages))
}

fn phase_layer(layout: &RegisterLayout, parity: Parity, angle: f64, class: LinkClass, stage: u8) -> Result<Vec<GateOp>> {
    layout
        .geometry
        .vertices()
        .into_iter()
        .filter(|v| v.parity() == parity)
        .map(|v| Ok(GateOp::new(stage, Block::Term(TermName::from_class(class)), GateKind::NumberPhase { angle }, vec![layout.fermion(v)?])))
        .collect()
}

fn local_terms(layout: &RegisterLayout, c: &Couplings, tau: f64, stage: u8) -> Result<Vec<GateOp>> {
    let g = layout.geometry;
    let mut ops = Vec::new();
    for v in g.vertices() {
        ops.push(GateOp::new(stage, Block::Term(TermName::M), GateKind::Mass { angle: c.mass * tau * v.sign() }, vec![layout.fermion(v)?]));
    }
    for l in g.links() {
        ops.push(GateOp::new(stage, Block::Term(TermName::E), GateKind::Electric { angle: c.lambda_e * tau, variant: c.electric }, vec![layout.link(l)?]));
    }
    Ok(ops)
}

fn plaquettes_need_controls(layout: &RegisterLayout) -> Result<()> {
    if layout.policy == AncillaPolicy::None && layout.geometry.plaquette_count() > 0 {
        return Err(SimError::AncillaPolicy("plaquette terms need control ancillas".into()));
    }
    Ok(())
}

fn direct_ops(layout: &RegisterLayout, c: &Couplings, tau: f64) -> Result<Vec<GateOp>> {
    plaquettes_need_controls(layout)?;
    let g = layout.geometry;
    let hop = tau * c.lambda_gm;
    let mut ops = Vec::new();
    let gm = |ops: &mut Vec<GateOp>, class| -> Result<()> {
        for l in g.links_of_class(class) {
            ops.extend(direct_link(layout, l, hop, [0; 3])?);
        }
        Ok(())
    };
    gm(&mut ops, LinkClass::Ev)?;
    gm(&mut ops, LinkClass::Eh)?;
    for p in g.plaquettes_of(Parity::Even) {
        ops.extend(plaquette_sandwich(layout, p, tau, c.lambda_b, Block::Term(TermName::Be), 0)?);
    }
    gm(&mut ops, LinkClass::Ov)?;
    gm(&mut ops, LinkClass::Oh)?;
    for p in g.plaquettes_of(Parity::Odd) {
        ops.extend(plaquette_sandwich(layout, p, tau, c.lambda_b, Block::Term(TermName::Bo), 0)?);
    }
    ops.extend(local_terms(layout, c, tau, 0)?);
    Ok(ops)
}

/// A cell whose control serves the odd links (c,1), (c,2): a real odd
/// plaquette, or the site right of an even plaquette that has no odd
/// plaquette there. `kept` marks a control that arrives carrying the stator
/// of (c,2) from the even plaquette step.
#[derive(Clone, Copy, Debug)]
struct OddCell {
    c: Vertex,
    anc: usize,
    kept: bool,
    real: bool,
}

fn odd_cells(layout: &RegisterLayout) -> Result<Vec<OddCell>> {
    let g = layout.geometry;
    let mut cells = Vec::new();
    for c in g.plaquettes_of(Parity::Odd) {
        cells.push(OddCell { c, anc: layout.control_for_plaquette(c)?, kept: layout.policy == AncillaPolicy::Shared, real: true });
    }
    for e in g.plaquettes_of(Parity::Even) {
        let c = e.step(Dir::One);
        if !g.is_plaquette(c) {
            cells.push(OddCell { c, anc: layout.control_for_plaquette(e)?, kept: true, real: false });
        }
    }
    cells.sort_by_key(|cell| g.vertex_index(cell.c));
    Ok(cells)
}

struct Buckets(Vec<Vec<GateOp>>);

impl Buckets {
    fn push(&mut self, op: GateOp) {
        self.0[op.stage as usize].push(op);
    }
    fn extend(&mut self, ops: impl IntoIterator<Item = GateOp>) {
        for op in ops {
            self.push(op);
        }
    }
}

/// Stage numbers of one stator-routed GM class.
struct ClassStages {
    open: u8,
    couple: u8,
    hop: u8,
    uncouple: u8,
    close: u8,
}

#[allow(clippy::too_many_arguments)]
fn choreographed_class(
    b: &mut Buckets,
    layout: &RegisterLayout,
    class: LinkClass,
    controls: &[(Vertex, usize, bool, bool)], // cell, ancilla, already entangled, keep stator
    hop: f64,
    s: ClassStages,
    theta: f64,
    theta_prime: f64,
) -> Result<()> {
    let blk = Block::Term(TermName::from_class(class));
    for l in layout.geometry.links_of_class(class) {
        let bundle = gauge_matter_gates(layout, l, theta, theta_prime)?;
        match controls.iter().find(|(cell, ..)| *cell == l.origin) {
            Some(&(_, anc, entangled, keep)) => {
                if !entangled {
                    b.push(GateOp::new(s.open, blk, GateKind::Entangle { inverse: false }, vec![bundle.link_reg, anc]));
                }
                b.push(GateOp::new(s.open, blk, GateKind::Fourier { inverse: false }, vec![anc]));
                b.extend(bundle.ancilla_core(anc, hop, [s.couple, s.hop, s.uncouple]));
                b.push(GateOp::new(s.close, blk, GateKind::Fourier { inverse: true }, vec![anc]));
                if !keep {
                    b.push(GateOp::new(s.close, blk, GateKind::Entangle { inverse: true }, vec![bundle.link_reg, anc]));
                }
            }
            None => b.extend(bundle.direct_route(hop, [s.couple, s.hop, s.uncouple])),
        }
    }
    b.extend(phase_layer(layout, class.parity(), theta, class, s.couple)?);
    b.extend(phase_layer(layout, class.parity(), theta_prime, class, s.uncouple)?);
    Ok(())
}

fn entangle(stage: u8, blk: Block, inverse: bool, link: usize, anc: usize) -> GateOp {
    GateOp::new(stage, blk, GateKind::Entangle { inverse }, vec![link, anc])
}

fn choreography_ops(layout: &RegisterLayout, c: &Couplings, tau: f64, theta: f64, theta_prime: f64) -> Result<Vec<GateOp>> {
    plaquettes_need_controls(layout)?;
    let g = layout.geometry;
    let hop = tau * c.lambda_gm;
    let mut b = Buckets(vec![Vec::new(); STAGES as usize + 1]);
    b.push(GateOp::new(1, Block::Init, GateKind::Marker, vec![]));

    let evens: Vec<(Vertex, usize)> =
        g.plaquettes_of(Parity::Even).into_iter().map(|p| Ok((p, layout.control_for_plaquette(p)?))).collect::<Result<_>>()?;
    let cells = odd_cells(layout)?;
    let kept_right = |e: Vertex| cells.iter().any(|cell| cell.c == e.step(Dir::One) && cell.kept);

    let even_ctl: Vec<_> = evens.iter().map(|&(p, a)| (p, a, false, false)).collect();
    choreographed_class(&mut b, layout, LinkClass::Ev, &even_ctl, hop, ClassStages { open: 2, couple: 3, hop: 4, uncouple: 5, close: 6 }, theta, theta_prime)?;
    let even_keep: Vec<_> = evens.iter().map(|&(p, a)| (p, a, false, true)).collect();
    choreographed_class(&mut b, layout, LinkClass::Eh, &even_keep, hop, ClassStages { open: 7, couple: 8, hop: 9, uncouple: 10, close: 10 }, theta, theta_prime)?;

    // even plaquettes: the bottom stator is already in place
    let be = Block::Term(TermName::Be);
    for &(p, a) in &evens {
        let [bot, right, top, left] = g.plaquette_links(p).map(|l| layout.link(l).expect("plaquette link"));
        b.push(entangle(11, be, false, right, a));
        b.push(entangle(12, be, true, top, a));
        b.push(entangle(13, be, true, left, a));
        b.push(GateOp::new(14, be, GateKind::ControlRotation { angle: tau * c.lambda_b }, vec![a]));
        b.push(entangle(15, be, false, left, a));
        b.push(entangle(16, be, false, top, a));
        b.push(entangle(17, be, true, bot, a));
        if !kept_right(p) {
            b.push(entangle(17, be, true, right, a));
        }
    }
    b.push(GateOp::new(18, Block::Move, GateKind::Marker, vec![]));

    let ov_ctl: Vec<_> = cells.iter().map(|cell| (cell.c, cell.anc, cell.kept, false)).collect();
    choreographed_class(&mut b, layout, LinkClass::Ov, &ov_ctl, hop, ClassStages { open: 19, couple: 20, hop: 21, uncouple: 22, close: 23 }, theta, theta_prime)?;
    let oh_ctl: Vec<_> = cells.iter().map(|cell| (cell.c, cell.anc, false, true)).collect();
    choreographed_class(&mut b, layout, LinkClass::Oh, &oh_ctl, hop, ClassStages { open: 24, couple: 25, hop: 26, uncouple: 27, close: 27 }, theta, theta_prime)?;

    let bo = Block::Term(TermName::Bo);
    for cell in &cells {
        if cell.real {
            let [bot, right, top, left] = g.plaquette_links(cell.c).map(|l| layout.link(l).expect("plaquette link"));
            let a = cell.anc;
            b.push(entangle(28, bo, true, left, a));
            b.push(entangle(29, bo, true, top, a));
            b.push(entangle(30, bo, false, right, a));
            b.push(GateOp::new(31, bo, GateKind::ControlRotation { angle: tau * c.lambda_b }, vec![a]));
            b.push(entangle(32, bo, false, left, a));
            b.push(entangle(32, bo, false, top, a));
            b.push(entangle(33, bo, true, right, a));
            b.push(entangle(34, bo, true, bot, a));
        } else {
            let l = Link::new(cell.c, Dir::One);
            if g.has_link(l) {
                b.push(entangle(34, Block::Term(TermName::GmOh), true, layout.link(l)?, cell.anc));
            }
        }
    }
    b.push(GateOp::new(35, Block::Move, GateKind::Marker, vec![]));
    b.extend(local_terms(layout, c, tau, 35)?);

    let mut ops = Vec::new();
    for (stage, bucket) in b.0.into_iter().enumerate().skip(1) {
        if bucket.is_empty() {
            ops.push(GateOp::new(stage as u8, Block::Idle, GateKind::Marker, vec![]));
        }
        ops.extend(bucket);
    }
    Ok(ops)
}

fn first_order(layout: &RegisterLayout, c: &Couplings, tau: f64, spec: &StepSpec) -> Result<Vec<GateOp>> {
    match spec.mode {
        Mode::Direct => direct_ops(layout, c, tau),
        Mode::Choreography => choreography_ops(layout, c, tau, spec.theta, spec.theta_prime),
    }
}

fn is_local_tail(op: &GateOp) -> bool {
    matches!(op.block, Block::Term(TermName::M) | Block::Term(TermName::E) | Block::Move)
}

pub fn compile_step(layout: &RegisterLayout, couplings: &Couplings, spec: &StepSpec) -> Result<Schedule> {
    if !couplings.is_finite() || !spec.tau.is_finite() || !spec.theta.is_finite() || !spec.theta_prime.is_finite() {
        return Err(SimError::Parameter("couplings, tau and phases must be finite".into()));
    }
    let ops = match spec.order {
        1 => first_order(layout, couplings, spec.tau, spec)?,
        2 => {
            // S1(τ/2) then S1(−τ/2)†; the local layers meeting in the middle merge
            let mut first = first_order(layout, couplings, spec.tau / 2.0, spec)?;
            let second: Vec<GateOp> = first_order(layout, couplings, -spec.tau / 2.0, spec)?.iter().rev().map(|g| g.adjoint()).collect();
            let tail = first.iter().rev().take_while(|g| is_local_tail(g)).count();
            let head = second.iter().take_while(|g| is_local_tail(g)).count();
            debug_assert_eq!(tail, head);
            let n = first.len();
            for op in &mut first[n - tail..] {
                op.kind = match op.kind {
                    GateKind::Mass { angle } => GateKind::Mass { angle: 2.0 * angle },
                    GateKind::Electric { angle, variant } => GateKind::Electric { angle: 2.0 * angle, variant },
                    k => k,
                };
            }
            first.extend(second.into_iter().skip(head));
            first
        }
        o => return Err(SimError::Unsupported(format!("Trotter order {o} (only 1 and 2)"))),
    };
    Ok(Schedule { ops, mode: spec.mode, order: spec.order, tau: spec.tau, theta: spec.theta, theta_prime: spec.theta_prime })
}

// ---- execution --------------------------------------------------------------

/// A schedule bound to a layout: one kernel per non-marker gate.
#[derive(Clone, Debug)]
pub struct Program<T: Real> {
    kernels: Vec<GateKernel<T>>,
    adjoint: Vec<GateKernel<T>>,
    dim: usize,
}

impl<T: Real> Program<T> {
    pub fn bind(ops: &[GateOp], layout: &RegisterLayout, alg: &LinkAlgebra<T>) -> Result<Self> {
        if alg.n != layout.n {
            return Err(SimError::Dimension(format!("algebra for N={} on a layout with N={}", alg.n, layout.n)));
        }
        let mut kernels = Vec::new();
        let mut adjoint = Vec::new();
        for op in ops.iter().filter(|g| g.kind != GateKind::Marker) {
            op.validate(layout.dims())?;
            let m = op.kind.matrix(alg, op.targets.len());
            kernels.push(GateKernel::new(layout.dims(), &m, &op.targets)?);
            let ma = op.kind.adjoint().matrix(alg, op.targets.len());
            adjoint.push(GateKernel::new(layout.dims(), &ma, &op.targets)?);
        }
        adjoint.reverse();
        Ok(Self { kernels, adjoint, dim: layout.total_dim() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn apply(&self, amps: &mut [C<T>]) {
        for k in &self.kernels {
            k.apply(amps);
        }
    }

    pub fn apply_adjoint(&self, amps: &mut [C<T>]) {
        for k in &self.adjoint {
            k.apply(amps);
        }
    }
}

pub fn execute<T: Real>(schedule: &Schedule, layout: &RegisterLayout, state: &StateVector<T>) -> Result<StateVector<T>> {
    if state.dims() != layout.dims() {
        return Err(SimError::Dimension("state and layout disagree".into()));
    }
    let alg = make_link_algebra::<T>(layout.n)?;
    let prog = Program::bind(&schedule.ops, layout, &alg)?;
    let mut out = state.clone();
    prog.apply(&mut out.amps);
    Ok(out)
}

/// Pieces of the op list after which no stator, Fourier frame or link
/// coupling is left open. Each is a gauge-invariant map on its own.
pub fn closed_segments(ops: &[GateOp]) -> Vec<std::ops::Range<usize>> {
    use std::collections::HashMap;
    let mut open: HashMap<(usize, usize), i64> = HashMap::new();
    let mut frame: HashMap<usize, i64> = HashMap::new();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, op) in ops.iter().enumerate() {
        match op.kind {
            GateKind::Entangle { inverse } => *open.entry((op.targets[0], op.targets[1])).or_default() += if inverse { -1 } else { 1 },
            GateKind::LinkCoupling { adjoint } => *open.entry((op.targets[0], usize::MAX)).or_default() += if adjoint { 1 } else { -1 },
            GateKind::Fourier { inverse } => *frame.entry(op.targets[0]).or_default() += if inverse { -1 } else { 1 },
            _ => {}
        }
        if op.kind != GateKind::Marker && open.values().all(|&v| v == 0) && frame.values().all(|&v| v == 0) {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    out
}

// ---- Trotter evolution ------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// max_x |<Θ(x)> − 1|
    pub gauss_deviation: f64,
    pub fermion_number: f64,
    /// weight left with the ancillas in |ĩn>
    pub ancilla_restoration: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub records: Vec<StepRecord>,
    pub final_state: StateVector<T>,
}

/// Diagonal observables read off a state.
pub struct Observables<T: Real> {
    gauss: Vec<Vec<C<T>>>,
    number: Vec<f64>,
}

impl<T: Real> Observables<T> {
    pub fn new(layout: &RegisterLayout) -> Result<Self> {
        let gauss = layout.geometry.vertices().iter().map(|&v| gauss_law_operator::<T>(layout, v)).collect::<Result<_>>()?;
        let number = (0..layout.total_dim()).map(|i| total_fermion_number(layout, i) as f64).collect();
        Ok(Self { gauss, number })
    }

    pub fn gauss_expectations(&self, amps: &[C<T>]) -> Vec<C<T>> {
        self.gauss.iter().map(|d| d.iter().zip(amps).fold(C::new(T::zero(), T::zero()), |s, (g, a)| s + g * a.norm_sqr())).collect()
    }

    pub fn gauss_deviation(&self, amps: &[C<T>]) -> f64 {
        let one = C::new(T::one(), T::zero());
        self.gauss_expectations(amps).iter().map(|e| (e - one).norm().to_f64()).fold(0.0, f64::max)
    }

    pub fn fermion_number(&self, amps: &[C<T>]) -> f64 {
        self.number.iter().zip(amps).map(|(n, a)| n * a.norm_sqr().to_f64()).sum()
    }
}

pub fn trotter_evolve<T: Real>(
    layout: &RegisterLayout,
    couplings: &Couplings,
    total_time: f64,
    n_steps: usize,
    spec: &StepSpec,
    initial: Option<StateVector<T>>,
) -> Result<Trajectory<T>> {
    if n_steps == 0 {
        return Err(SimError::Parameter("n_steps must be at least 1".into()));
    }
    let step = StepSpec { tau: total_time / n_steps as f64, ..*spec };
    let schedule = compile_step(layout, couplings, &step)?;
    let alg = make_link_algebra::<T>(layout.n)?;
    let prog = Program::bind(&schedule.ops, layout, &alg)?;
    let obs = Observables::<T>::new(layout)?;
    let mut state = initial.unwrap_or_else(|| crate::lattice::build_global_singlet(layout));
    if state.dims() != layout.dims() {
        return Err(SimError::Dimension("initial state does not match the layout".into()));
    }
    let record = |k: usize, s: &StateVector<T>| StepRecord {
        step: k,
        time: k as f64 * step.tau,
        gauss_deviation: obs.gauss_deviation(&s.amps),
        fermion_number: obs.fermion_number(&s.amps),
        ancilla_restoration: crate::linalg::norm(&project_ancillas(layout, &s.amps)).to_f64().powi(2),
    };
    let mut records = vec![record(0, &state)];
    for k in 1..=n_steps {
        prog.apply(&mut state.amps);
        records.push(record(k, &state));
    }
    Ok(Trajectory { records, final_state: state })
}

// ---- spurious phases ---------------------------------------------------------

/// One phase per link, in `LatticeGeometry::links` order. θ(x,k) multiplies
/// ψ†(x) Q(x,k) ψ(x+k̂) in the effective hopping.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    pub links: Vec<Link>,
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn get(&self, l: Link) -> Option<f64> {
        self.links.iter().position(|&m| m == l).map(|i| self.values[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

const CLASS_ORDER: [LinkClass; 4] = [LinkClass::Ev, LinkClass::Eh, LinkClass::Ov, LinkClass::Oh];

/// Field left by exp(−iθ' Σn) W exp(−iθ Σn) per class (sums over the class
/// parity), once every number phase is pushed to the far left of the step.
pub fn spurious_phase_field(geometry: &LatticeGeometry, theta: f64, theta_prime: f64) -> PhaseField {
    let mut even = 0.0;
    let mut odd = 0.0;
    let mut per_class = [0.0; 4];
    for (i, class) in CLASS_ORDER.iter().enumerate() {
        let (own, other) = match class.parity() {
            Parity::Even => (&mut even, odd),
            Parity::Odd => (&mut odd, even),
        };
        *own += theta;
        per_class[i] = *own - other;
        *own += theta_prime;
    }
    let links = geometry.links();
    let values = links.iter().map(|l| per_class[CLASS_ORDER.iter().position(|&c| c == l.class()).unwrap()]).collect();
    PhaseField { links, values }
}

/// Uniform phase left over in front of the step: exp(−i·this·N_f).
pub fn spurious_global_angle(theta: f64, theta_prime: f64) -> f64 {
    2.0 * (theta + theta_prime)
}

/// The field as tabulated alongside the even/odd pushing argument
/// (eh 2θ+2θ′, ev θ, oh −θ, ov −(2θ+2θ′)); curl-free but a different gauge.
pub fn printed_phase_field(geometry: &LatticeGeometry, theta: f64, theta_prime: f64) -> PhaseField {
    let links = geometry.links();
    let values = links
        .iter()
        .map(|l| match l.class() {
            LinkClass::Eh => 2.0 * theta + 2.0 * theta_prime,
            LinkClass::Ev => theta,
            LinkClass::Oh => -theta,
            LinkClass::Ov => -(2.0 * theta + 2.0 * theta_prime),
        })
        .collect();
    PhaseField { links, values }
}

/// β(x) = θ(x,1) + θ(x+1̂,2) − θ(x+2̂,1) − θ(x,2) per plaquette.
pub fn curl(geometry: &LatticeGeometry, field: &PhaseField) -> Vec<(Vertex, f64)> {
    geometry
        .plaquettes()
        .into_iter()
        .map(|p| {
            let [b, r, t, l] = geometry.plaquette_links(p);
            let f = |x: Link| field.get(x).unwrap_or(0.0);
            (p, f(b) + f(r) - f(t) - f(l))
        })
        .collect()
}

/// Λ per vertex (index order) with θ(x,k) = Λ(x) − Λ(x+k̂) and Λ(0,0) = 0.
pub fn solve_potential(geometry: &LatticeGeometry, field: &PhaseField) -> Result<Vec<f64>> {
    let nv = geometry.vertex_count();
    let mut lam: Vec<Option<f64>> = vec![None; nv];
    lam[0] = Some(0.0);
    let mut queue = VecDeque::from([Vertex::new(0, 0)]);
    let idx = |v: Vertex| geometry.vertex_index(v).expect("vertex on lattice");
    while let Some(x) = queue.pop_front() {
        let (out, inc) = geometry.incident_links(x);
        let lx = lam[idx(x)].unwrap();
        let steps = out.iter().map(|&l| (l.end(), lx - field.get(l).unwrap_or(0.0))).chain(inc.iter().map(|&l| (l.origin, lx + field.get(l).unwrap_or(0.0))));
        for (y, value) in steps.collect::<Vec<_>>() {
            if lam[idx(y)].is_none() {
                lam[idx(y)] = Some(value);
                queue.push_back(y);
            }
        }
    }
    let lam: Vec<f64> = lam.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let scale = 1.0 + field.max_abs();
    let worst = field.links.iter().zip(&field.values).map(|(l, v)| (lam[idx(l.origin)] - lam[idx(l.end())] - v).abs()).fold(0.0, f64::max);
    if worst > 1e-9 * scale {
        return Err(SimError::Parameter(format!("phase field has non-zero curl (mismatch {worst:e})")));
    }
    Ok(lam)
}

/// Diagonal of G_Λ = exp(i Σ_x Λ(x) ψ†ψ(x)) over the layout's basis.
pub fn gauge_away_phases<T: Real>(layout: &RegisterLayout, lambda: &[f64]) -> Result<Vec<C<T>>> {
    let vs = layout.geometry.vertices();
    if lambda.len() != vs.len() {
        return Err(SimError::Dimension(format!("{} potentials for {} vertices", lambda.len(), vs.len())));
    }
    let regs: Vec<usize> = vs.iter().map(|&v| layout.fermion(v)).collect::<Result<_>>()?;
    Ok((0..layout.total_dim())
        .map(|i| {
            let phase: f64 = regs.iter().zip(lambda).map(|(&r, l)| l * layout.digit(i, r) as f64).sum();
            cis(T::lit(phase))
        })
        .collect())
}

/// Curl check, potential, and G_Λ in one go.
pub fn gauge_transform<T: Real>(layout: &RegisterLayout, field: &PhaseField) -> Result<Vec<C<T>>> {
    let lam = solve_potential(&layout.geometry, field)?;
    gauge_away_phases(layout, &lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_layout;

    fn layout(policy: AncillaPolicy) -> RegisterLayout {
        build_layout(LatticeGeometry::new(2, 2).unwrap(), 3, policy).unwrap()
    }

    #[test]
    fn choreography_covers_every_stage_in_order() {
        let l = layout(AncillaPolicy::PerPlaquette);
        let s = compile_step(&l, &Couplings::uniform(1.0), &StepSpec::new(0.1, Mode::Choreography, 1)).unwrap();
        let stages: Vec<u8> = s.ops.iter().map(|g| g.stage).collect();
        assert!(stages.windows(2).all(|w| w[0] <= w[1]));
        let mut seen: Vec<u8> = stages.clone();
        seen.dedup();
        assert_eq!(seen, (1..=35).collect::<Vec<_>>());
    }

    #[test]
    fn second_order_shares_the_local_layer() {
        let l = layout(AncillaPolicy::PerPlaquette);
        for mode in [Mode::Direct, Mode::Choreography] {
            let c1 = compile_step(&l, &Couplings::uniform(1.0), &StepSpec::new(0.1, mode, 1)).unwrap();
            let c2 = compile_step(&l, &Couplings::uniform(1.0), &StepSpec::new(0.1, mode, 2)).unwrap();
            let tail = c1.ops.iter().rev().take_while(|g| is_local_tail(g)).count();
            assert_eq!(c2.ops.len(), 2 * c1.ops.len() - tail);
        }
        assert!(compile_step(&l, &Couplings::uniform(1.0), &StepSpec::new(0.1, Mode::Direct, 3)).is_err());
    }

    #[test]
    fn phase_field_values() {
        let g = LatticeGeometry::new(3, 3).unwrap();
        let (t, tp) = (0.3, -0.7);
        let f = spurious_phase_field(&g, t, tp);
        let at = |x1, x2, d| f.get(Link::new(Vertex::new(x1, x2), d)).unwrap();
        assert!((at(0, 0, Dir::Two) - t).abs() < 1e-15);
        assert!((at(0, 0, Dir::One) - (2.0 * t + tp)).abs() < 1e-15);
        assert!((at(1, 0, Dir::Two) + (t + 2.0 * tp)).abs() < 1e-15);
        assert!((at(1, 0, Dir::One) + tp).abs() < 1e-15);
        for field in [f, printed_phase_field(&g, t, tp)] {
            assert!(curl(&g, &field).iter().all(|(_, b)| b.abs() < 1e-14));
            assert!(solve_potential(&g, &field).is_ok());
        }
    }

    #[test]
    fn dump_round_trip() {
        let l = layout(AncillaPolicy::Shared);
        let s = compile_step(&l, &Couplings::uniform(0.7), &StepSpec::new(0.13, Mode::Choreography, 2).with_phases(0.2, 0.1)).unwrap();
        let text = s.dump();
        let back = Schedule::parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.dump(), text);
    }
}
