use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use zn_sim::config::SimulationConfig;
use zn_sim::error::{Result, SimError};
use zn_sim::harness::{self, fmt_f, write_csv, write_manifest, SCAN_STEPS};
use zn_sim::lattice::RegisterKind;

#[derive(Parser)]
#[command(name = "zn-sim", version, about = "Z_N lattice gauge theory simulator and schedule compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for CSV files and the manifest
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// measurement shots taken on the final quench state
    #[arg(long, default_value_t = 1000)]
    shots: usize,
}

#[derive(Subcommand)]
enum Command {
    /// run the invariant battery
    Verify(Common),
    /// singlet quench with per-step observables and a final readout
    Quench(Common),
    /// Trotter error against the exact propagator for M = 4..64
    TrotterScan(Common),
    /// compile one Trotter step and dump the schedule
    Compile(Common),
    /// optical potential, minima, shaping ramps, polarization triads
    Optical(Common),
}

fn io_err(p: &Path) -> impl Fn(std::io::Error) -> SimError + '_ {
    move |e| SimError::Config(format!("{}: {e}", p.display()))
}

fn setup(c: &Common) -> Result<SimulationConfig> {
    let mut cfg = match &c.config {
        Some(p) => SimulationConfig::load(p)?,
        None => SimulationConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&c.out).map_err(io_err(&c.out))?;
    Ok(cfg)
}

/// Prints each assertion; returns whether all held.
fn report(items: &[(String, bool)]) -> bool {
    for (name, ok) in items {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    items.iter().all(|(_, ok)| *ok)
}

fn verify(c: &Common) -> Result<bool> {
    let cfg = setup(c)?;
    let checks = zn_sim::verify::run_verification_suite(&cfg)?;
    write_csv(
        &c.out.join("verify.csv"),
        &["check", "residual", "tolerance", "passed"],
        checks.iter().map(|k| vec![k.name.clone(), fmt_f(k.residual), fmt_f(k.tolerance), k.passed.to_string()]),
    )?;
    write_manifest(&c.out, "verify", &cfg, c.shots, &["verify.csv"])?;
    let items: Vec<_> = checks.iter().map(|k| (format!("{} (residual {:.3e}, tol {:.1e})", k.name, k.residual, k.tolerance), k.passed)).collect();
    Ok(report(&items))
}

fn quench(c: &Common) -> Result<bool> {
    let cfg = setup(c)?;
    let q = harness::run_quench(&cfg)?;
    let g = &q.layout.geometry;
    let vertices = g.vertices();
    let links = g.links();
    write_csv(
        &c.out.join("quench_steps.csv"),
        &["step", "time", "max_gauss_deviation", "fermion_number", "ancilla_restoration", "fidelity"],
        q.steps.iter().map(|s| {
            vec![
                s.step.to_string(),
                fmt_f(s.time),
                fmt_f(s.max_gauss_deviation),
                fmt_f(s.fermion_number),
                fmt_f(s.ancilla_restoration),
                s.fidelity.map_or_else(|| "".into(), fmt_f),
            ]
        }),
    )?;
    write_csv(
        &c.out.join("quench_gauss.csv"),
        &["step", "time", "x1", "x2", "re", "im"],
        q.steps.iter().flat_map(|s| {
            vertices.iter().zip(&s.gauss).map(move |(v, e)| vec![s.step.to_string(), fmt_f(s.time), v.x1.to_string(), v.x2.to_string(), fmt_f(e.re), fmt_f(e.im)])
        }),
    )?;
    write_csv(
        &c.out.join("quench_flux.csv"),
        &["step", "time", "x1", "x2", "k", "m", "probability"],
        q.steps.iter().flat_map(|s| {
            links.iter().zip(&s.flux).flat_map(move |(l, probs)| {
                probs.iter().enumerate().map(move |(m, p)| {
                    vec![s.step.to_string(), fmt_f(s.time), l.origin.x1.to_string(), l.origin.x2.to_string(), l.dir.index().to_string(), m.to_string(), fmt_f(*p)]
                })
            })
        }),
    )?;
    let shots = harness::measure_configuration(&q.layout, &q.final_state, cfg.seed, c.shots)?;
    let mut header = vec!["shot".to_string()];
    for r in q.layout.physical().registers() {
        match r.kind {
            RegisterKind::Link(l) => header.push(format!("m_{}_{}_{}", l.origin.x1, l.origin.x2, l.dir.index())),
            RegisterKind::Fermion(v) => header.push(format!("n_{}_{}", v.x1, v.x2)),
            RegisterKind::Ancilla(_) => {}
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &c.out.join("quench_shots.csv"),
        &header_refs,
        shots.iter().enumerate().map(|(i, s)| {
            let mut row = vec![i.to_string()];
            row.extend(s.links.iter().map(|m| m.to_string()));
            row.extend(s.occupations.iter().map(|n| n.to_string()));
            row
        }),
    )?;
    write_manifest(&c.out, "quench", &cfg, c.shots, &["quench_steps.csv", "quench_gauss.csv", "quench_flux.csv", "quench_shots.csv"])?;

    let n0 = q.steps[0].fermion_number;
    let gauss = q.steps.iter().map(|s| s.max_gauss_deviation).fold(0.0, f64::max);
    let drift = q.steps.iter().map(|s| (s.fermion_number - n0).abs()).fold(0.0, f64::max);
    let restore = q.steps.iter().map(|s| (1.0 - s.ancilla_restoration).abs()).fold(0.0, f64::max);
    println!("gates per step: {}", q.gate_count);
    if let Some(f) = q.steps.last().and_then(|s| s.fidelity) {
        println!("final fidelity vs exact: {f:.12}");
    }
    Ok(report(&[
        (format!("max Gauss-law deviation {gauss:.3e} < 1e-8"), gauss < 1e-8),
        (format!("fermion number drift {drift:.3e} < 1e-10"), drift < 1e-10),
        (format!("ancilla restoration defect {restore:.3e} < 1e-10"), restore < 1e-10),
    ]))
}

fn trotter_scan(c: &Common) -> Result<bool> {
    let cfg = setup(c)?;
    let rows = harness::run_trotter_scan(&cfg, &SCAN_STEPS)?;
    write_csv(
        &c.out.join("trotter_scan.csv"),
        &["order", "m", "tau", "distance", "phase", "bound", "bound_holds", "valid"],
        rows.iter().map(|r| {
            vec![
                r.order.to_string(),
                r.m.to_string(),
                fmt_f(cfg.t / r.m as f64),
                fmt_f(r.distance),
                fmt_f(r.alpha),
                fmt_f(r.bound),
                (r.distance <= r.bound).to_string(),
                r.valid.to_string(),
            ]
        }),
    )?;
    write_manifest(&c.out, "trotter-scan", &cfg, c.shots, &["trotter_scan.csv"])?;
    let mut items = Vec::new();
    for order in [1u8, 2] {
        let sel: Vec<_> = rows.iter().filter(|r| r.order == order).collect();
        let ms: Vec<f64> = sel.iter().map(|r| r.m as f64).collect();
        let ds: Vec<f64> = sel.iter().map(|r| r.distance).collect();
        println!("order {order}: log-log slope {:.4}", zn_sim::oracle::loglog_slope(&ms, &ds));
        items.push((format!("order {order}: error decreases with M"), ds.windows(2).all(|w| w[1] < w[0])));
        items.push((format!("order {order}: distance within the analytic bound"), sel.iter().all(|r| r.distance <= r.bound)));
    }
    Ok(report(&items))
}

fn compile(c: &Common) -> Result<bool> {
    let cfg = setup(c)?;
    let s = harness::dump_schedule(&cfg)?;
    let text = s.dump();
    let path = c.out.join("schedule.tsv");
    std::fs::write(&path, &text).map_err(io_err(&path))?;
    write_manifest(&c.out, "compile", &cfg, c.shots, &["schedule.tsv"])?;
    let again = zn_sim::compiler::Schedule::parse(&text)?.dump();
    println!("gates per step: {}", s.gate_count());
    Ok(report(&[("dump, parse, dump is byte-identical".into(), again == text)]))
}

fn optical(c: &Common) -> Result<bool> {
    let cfg = setup(c)?;
    let o = harness::run_optical_scan(&cfg, 60)?;
    write_csv(
        &c.out.join("optical_potential.csv"),
        &["shape", "x", "y", "v"],
        o.potential.iter().map(|(t, x, y, v)| vec![t.clone(), fmt_f(*x), fmt_f(*y), fmt_f(*v)]),
    )?;
    write_csv(
        &c.out.join("optical_minima.csv"),
        &["shape", "x", "y", "v"],
        o.minima.iter().map(|(t, m)| vec![t.clone(), fmt_f(m.x), fmt_f(m.y), fmt_f(m.value)]),
    )?;
    write_csv(
        &c.out.join("optical_shaping.csv"),
        &["step", "t", "f", "g", "h", "phi"],
        o.shaping.iter().map(|(t, p)| vec![t.clone(), fmt_f(p.t), fmt_f(p.shape.f), fmt_f(p.shape.g), fmt_f(p.shape.h), fmt_f(p.shape.phi)]),
    )?;
    write_csv(
        &c.out.join("optical_polarization.csv"),
        &["xi", "valid", "max_cross_dot", "max_transverse_dot"],
        o.polarization.iter().map(|(xi, ok, d, t)| vec![fmt_f(*xi), ok.to_string(), fmt_f(*d), fmt_f(*t)]),
    )?;
    write_csv(
        &c.out.join("optical_barriers.csv"),
        &["step", "barrier_standard", "barrier_shaped"],
        o.barriers.iter().map(|(t, a, b)| vec![t.clone(), fmt_f(*a), fmt_f(*b)]),
    )?;
    write_manifest(
        &c.out,
        "optical",
        &cfg,
        c.shots,
        &["optical_potential.csv", "optical_minima.csv", "optical_shaping.csv", "optical_polarization.csv", "optical_barriers.csv"],
    )?;
    let std_min: Vec<_> = o.minima.iter().filter(|(t, _)| t == "standard").map(|(_, m)| m).collect();
    let on_sites = std_min.len() == cfg.lx * cfg.ly && std_min.iter().all(|m| (m.x - m.x.round()).abs() < 1e-6 && (m.y - m.y.round()).abs() < 1e-6);
    let ortho = o.polarization.iter().filter(|p| p.1).all(|p| p.2 < 1e-8 && p.3 < 1e-8);
    let lowered = o.barriers.iter().all(|(_, a, b)| b < a);
    Ok(report(&[
        ("standard minima are exactly the lattice sites".into(), on_sites),
        ("polarization triads orthogonal and transverse".into(), ortho),
        ("every tunneling step lowers its barrier".into(), lowered),
    ]))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(c) => verify(c),
        Command::Quench(c) => quench(c),
        Command::TrotterScan(c) => trotter_scan(c),
        Command::Compile(c) => compile(c),
        Command::Optical(c) => optical(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
