//! Experiment drivers: quench, measurement sampling, Trotter scans, schedule
//! dumps, optical scans, plus CSV and manifest output.

use crate::algebra::total_hamiltonian;
use crate::compiler::{compile_step, Observables, Program, Schedule, StepSpec};
use crate::config::SimulationConfig;
use crate::error::{Result, SimError};
use crate::lattice::{build_global_singlet, project_ancillas, RegisterKind, RegisterLayout, StateVector};
use crate::linalg::inner;
use crate::oracle::{one_step_map, phase_aligned_distance, sectors, term_norms, trotter_bound, trotter_validity, ExactPropagator, MAX_DENSE_DIM};
use crate::optical::{self, Shape, ShapingStep, Window};
use crate::scalar::C;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

pub const SCAN_STEPS: [u64; 5] = [4, 8, 16, 32, 64];

// ---- quench ----------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct QuenchStep {
    pub step: usize,
    pub time: f64,
    /// <Θ(x)> per vertex, geometry order
    pub gauss: Vec<C<f64>>,
    pub max_gauss_deviation: f64,
    pub fermion_number: f64,
    pub ancilla_restoration: f64,
    /// per link (geometry order): probability of each label m
    pub flux: Vec<Vec<f64>>,
    /// |<exact|trotter>|² on the physical space, when the oracle fits
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Quench {
    pub layout: RegisterLayout,
    pub steps: Vec<QuenchStep>,
    pub final_state: StateVector<f64>,
    pub gate_count: usize,
}

fn flux_marginals(layout: &RegisterLayout, amps: &[C<f64>]) -> Vec<Vec<f64>> {
    let regs: Vec<usize> = layout.geometry.links().iter().map(|&l| layout.link(l).expect("layout link")).collect();
    let mut out = vec![vec![0.0; layout.n]; regs.len()];
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (k, &r) in regs.iter().enumerate() {
            out[k][layout.digit(i, r)] += p;
        }
    }
    out
}

/// Global singlet, interactions switched on at t = 0, n_steps Trotter steps.
pub fn run_quench(cfg: &SimulationConfig) -> Result<Quench> {
    cfg.validate()?;
    let layout = cfg.layout()?;
    let couplings = cfg.couplings();
    let spec = cfg.step_spec();
    let schedule = compile_step(&layout, &couplings, &spec)?;
    let alg = crate::algebra::make_link_algebra::<f64>(layout.n)?;
    let prog = Program::bind(&schedule.ops, &layout, &alg)?;
    let obs = Observables::<f64>::new(&layout)?;

    let h = total_hamiltonian::<f64>(&layout, &couplings);
    let sec = sectors(&h);
    let exact = if sec.largest() <= MAX_DENSE_DIM { Some(ExactPropagator::with_sectors(&h, sec)?) } else { None };

    let mut state = build_global_singlet::<f64>(&layout);
    let phys0 = project_ancillas(&layout, &state.amps);
    let one = C::new(1.0, 0.0);
    let mut steps = Vec::with_capacity(cfg.n_steps + 1);
    for k in 0..=cfg.n_steps {
        if k > 0 {
            prog.apply(&mut state.amps);
        }
        let time = k as f64 * spec.tau;
        let gauss = obs.gauss_expectations(&state.amps);
        let phys = project_ancillas(&layout, &state.amps);
        let fidelity = exact.as_ref().map(|e| inner(&e.evolve(time, &phys0), &phys).norm_sqr());
        steps.push(QuenchStep {
            step: k,
            time,
            max_gauss_deviation: gauss.iter().map(|g| (g - one).norm()).fold(0.0, f64::max),
            gauss,
            fermion_number: obs.fermion_number(&state.amps),
            ancilla_restoration: phys.iter().map(|a| a.norm_sqr()).sum(),
            flux: flux_marginals(&layout, &state.amps),
            fidelity,
        });
    }
    Ok(Quench { layout, steps, final_state: state, gate_count: schedule.gate_count() })
}

// ---- measurement -------------------------------------------------------------

/// One projective readout: link labels m (P eigenbasis) and occupations, both
/// in geometry order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub links: Vec<usize>,
    pub occupations: Vec<u8>,
}

/// Born-rule sampling of the physical registers; ancillas are traced out.
pub fn measure_configuration(layout: &RegisterLayout, state: &StateVector<f64>, seed: u64, shots: usize) -> Result<Vec<Shot>> {
    if shots == 0 {
        return Err(SimError::Parameter("shots must be at least 1".into()));
    }
    if state.dims() != layout.dims() {
        return Err(SimError::Dimension("state does not match the layout".into()));
    }
    let anc = layout.ancilla_dim();
    let probs: Vec<f64> = state.amps.chunks(anc).map(|ch| ch.iter().map(|a| a.norm_sqr()).sum()).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| SimError::Parameter(format!("cannot sample this state: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phys = layout.physical();
    let mut link_regs = Vec::new();
    let mut fermion_regs = Vec::new();
    for (i, r) in phys.registers().iter().enumerate() {
        match r.kind {
            RegisterKind::Link(_) => link_regs.push(i),
            RegisterKind::Fermion(_) => fermion_regs.push(i),
            RegisterKind::Ancilla(_) => {}
        }
    }
    Ok((0..shots)
        .map(|_| {
            let i = dist.sample(&mut rng);
            Shot {
                links: link_regs.iter().map(|&r| phys.digit(i, r)).collect(),
                occupations: fermion_regs.iter().map(|&r| phys.digit(i, r) as u8).collect(),
            }
        })
        .collect())
}

// ---- Trotter scan -------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanRow {
    pub order: u8,
    pub m: u64,
    /// min over global phase of the max-block spectral distance to exp(−iTH)
    pub distance: f64,
    pub alpha: f64,
    pub bound: f64,
    /// (T/M) Σ‖H_j‖ ≤ 1
    pub valid: bool,
}

/// W(T/M)^M against exp(−iTH) for each M and both orders.
pub fn run_trotter_scan(cfg: &SimulationConfig, ms: &[u64]) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let layout = cfg.layout()?;
    let couplings = cfg.couplings();
    let h = total_hamiltonian::<f64>(&layout, &couplings);
    let sec = sectors(&h);
    if sec.largest() > MAX_DENSE_DIM {
        return Err(SimError::Unsupported(format!("largest sector {} exceeds the dense oracle limit", sec.largest())));
    }
    let exact = ExactPropagator::with_sectors(&h, sec.clone())?.unitary(cfg.t);
    let norm_sum: f64 = term_norms(&layout, &couplings)?.iter().map(|(_, n)| n).sum();
    let alg = crate::algebra::make_link_algebra::<f64>(layout.n)?;
    let l = cfg.lx.max(cfg.ly) as f64;
    let lambda = couplings.max_abs();
    let mut rows = Vec::new();
    for order in [1u8, 2] {
        for &m in ms {
            let spec = StepSpec { tau: cfg.t / m as f64, order, ..cfg.step_spec() };
            let s = compile_step(&layout, &couplings, &spec)?;
            let w = one_step_map(&Program::bind(&s.ops, &layout, &alg)?, &layout, &sec)?.pow(m);
            let d = phase_aligned_distance(&w, &exact, 1e-9)?;
            rows.push(ScanRow {
                order,
                m,
                distance: d.distance,
                alpha: d.alpha,
                bound: trotter_bound(order, l, lambda, cfg.t, m)?,
                valid: trotter_validity(cfg.t, m, norm_sum),
            });
        }
    }
    Ok(rows)
}

// ---- schedule dump -----------------------------------------------------------

pub fn dump_schedule(cfg: &SimulationConfig) -> Result<Schedule> {
    cfg.validate()?;
    compile_step(&cfg.layout()?, &cfg.couplings(), &cfg.step_spec())
}

// ---- optical scan -------------------------------------------------------------

pub const SHAPING_AMPLITUDE: f64 = 2.0;
pub const MASS_AMPLITUDE: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct OpticalScan {
    /// (configuration tag, x, y, V)
    pub potential: Vec<(String, f64, f64, f64)>,
    /// (configuration tag, minimum)
    pub minima: Vec<(String, optical::Minimum)>,
    /// (step tag, point)
    pub shaping: Vec<(String, optical::ShapePoint)>,
    /// (ξ, valid, max cross dot, max transverse dot)
    pub polarization: Vec<(f64, bool, f64, f64)>,
    /// (step tag, barrier standard, barrier shaped)
    pub barriers: Vec<(String, f64, f64)>,
}

fn shaping_pairs(step: ShapingStep) -> Option<((f64, f64), (f64, f64))> {
    // a pair of sites the step is meant to connect
    match step {
        ShapingStep::Eh => Some(((0.0, 0.0), (1.0, 0.0))),
        ShapingStep::Oh => Some(((1.0, 0.0), (2.0, 0.0))),
        ShapingStep::Ev => Some(((0.0, 0.0), (0.0, 1.0))),
        ShapingStep::Ov => Some(((0.0, 1.0), (0.0, 2.0))),
        ShapingStep::Mass => None,
    }
}

pub fn run_optical_scan(cfg: &SimulationConfig, grid: usize) -> Result<OpticalScan> {
    let window = Window { x0: -0.5, x1: cfg.lx as f64 - 0.5, y0: -0.5, y1: cfg.ly as f64 - 0.5 };
    let mut shapes = vec![("standard".to_string(), Shape::STANDARD)];
    for step in ShapingStep::ALL {
        let amp = if step == ShapingStep::Mass { MASS_AMPLITUDE } else { SHAPING_AMPLITUDE };
        shapes.push((step.tag().to_string(), step.hold(amp)));
    }
    let mut potential = Vec::new();
    let mut minima = Vec::new();
    for (tag, s) in &shapes {
        for i in 0..=grid {
            for j in 0..=grid {
                let x = window.x0 + (window.x1 - window.x0) * i as f64 / grid as f64;
                let y = window.y0 + (window.y1 - window.y0) * j as f64 / grid as f64;
                potential.push((tag.clone(), x, y, optical::v_mat(x, y, s)?));
            }
        }
        for m in optical::v_mat_minima(s, &window)? {
            minima.push((tag.clone(), m));
        }
    }
    let mut shaping = Vec::new();
    let mut barriers = Vec::new();
    for step in ShapingStep::ALL {
        let amp = if step == ShapingStep::Mass { MASS_AMPLITUDE } else { SHAPING_AMPLITUDE };
        for p in optical::shaping_schedule(step, amp, 1.0, 0.25, 41)? {
            shaping.push((step.tag().to_string(), p));
        }
        if let Some((a, b)) = shaping_pairs(step) {
            let before = optical::segment_barrier(a, b, &Shape::STANDARD, 2000)?;
            let after = optical::segment_barrier(a, b, &step.hold(amp), 2000)?;
            barriers.push((step.tag().to_string(), before, after));
        }
    }
    let edge = optical::validity_boundary();
    let polarization = (1..=60)
        .map(|k| {
            let xi = 0.35 * k as f64 / 60.0;
            let p = optical::polarization_vectors(xi);
            let (c, t) = if p.valid { (optical::max_cross_dot(&p), optical::max_transverse_dot(&p)) } else { (f64::NAN, f64::NAN) };
            debug_assert_eq!(p.valid, xi < edge);
            (xi, p.valid, c, t)
        })
        .collect();
    Ok(OpticalScan { potential, minima, shaping, polarization, barriers })
}

// ---- output -----------------------------------------------------------------

/// 12 significant digits.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.11e}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| SimError::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(SimError::Dimension(format!("row of {} fields under a {}-column header", r.len(), header.len())));
        }
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Config echo, code version, seed; nothing time-dependent so reruns match.
pub fn write_manifest(dir: &Path, command: &str, cfg: &SimulationConfig, shots: usize, files: &[&str]) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Run<'a> {
        command: &'a str,
        version: &'a str,
        seed: u64,
        shots: usize,
        files: &'a [&'a str],
    }
    #[derive(serde::Serialize)]
    struct Manifest<'a> {
        run: Run<'a>,
        config: &'a SimulationConfig,
    }
    let m = Manifest { run: Run { command, version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, shots, files }, config: cfg };
    let text = toml::to_string(&m).map_err(|e| SimError::Config(e.to_string()))?;
    std::fs::write(dir.join("manifest.toml"), text).map_err(|e| SimError::Config(e.to_string()))
}
