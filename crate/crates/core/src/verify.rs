//! Invariant battery behind `zn-sim verify`. Every check reports a measured
//! residual against a pinned tolerance.

use crate::algebra::{build_hamiltonian_term, gauss_law_operator, make_link_algebra, omega, total_hamiltonian, TermName};
use crate::compiler::{closed_segments, compile_step, curl, gauge_transform, solve_potential, spurious_global_angle, spurious_phase_field, Mode, Program, StepSpec};
use crate::config::SimulationConfig;
use crate::error::Result;
use crate::gates::{Block, GateOp};
use crate::harness::{run_trotter_scan, SCAN_STEPS};
use crate::lattice::{AncillaPolicy, LinkClass, Parity, RegisterLayout};
use crate::linalg::{exp_anti_hermitian, power_norm, Matrix};
use crate::oracle::{diamond_surrogate_distance, loglog_slope, one_step_map, sectors, BlockOperator, ExactPropagator, Sectors};
use crate::optical;
use crate::scalar::{cis, C};
use crate::stator::{self, CollisionCouplings, Direction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), residual, tolerance, passed: residual <= tolerance }
    }
}

fn algebra_checks(n: usize, out: &mut Vec<Check>) -> Result<()> {
    let a = make_link_algebra::<f64>(n)?;
    let id = Matrix::<f64>::identity(n);
    let r1 = (&a.p.pow(n as u64) - &id).max_abs().max((&a.q.pow(n as u64) - &id).max_abs());
    out.push(Check::at_most(format!("algebra: P^N = Q^N = 1 (N={n})"), r1, 1e-12));
    let pqp = &(&a.p * &a.q) * &a.p_dag();
    out.push(Check::at_most(format!("algebra: PQP† = ωQ (N={n})"), (&pqp - &a.q.scale(omega(n))).max_abs(), 1e-12));
    let vpv = &(&a.vd.adjoint() * &a.p) * &a.vd;
    out.push(Check::at_most(format!("algebra: V_D†PV_D = Q (N={n})"), (&vpv - &a.q).max_abs(), 1e-12));
    out.push(Check::at_most(format!("algebra: exp(log P) = P (N={n})"), (&exp_anti_hermitian(&a.logp) - &a.p).max_abs(), 1e-12));
    Ok(())
}

fn stator_checks(n: usize, out: &mut Vec<Check>) -> Result<()> {
    let a = make_link_algebra::<f64>(n)?;
    let u = stator::stator_entangler(&a, Direction::Forward);
    let s = stator::stator_map(&u, n, n);
    let q = (&(&stator::on_ancilla(&a.q, n) * &s) - &(&s * &a.q_dag())).max_abs();
    out.push(Check::at_most("stator: Q̃ S_Q = S_Q Q†", q, 1e-12));
    let sp = stator::stator_map(&(&stator::on_ancilla(&a.vd, n) * &u), n, n);
    let p = (&(&stator::on_ancilla(&a.p, n) * &sp) - &(&sp * &a.q_dag())).max_abs();
    out.push(Check::at_most("stator: P̃ S_P = S_P Q†", p, 1e-12));
    Ok(())
}

fn map_of(ops: &[GateOp], layout: &RegisterLayout, sec: &Sectors) -> Result<BlockOperator<f64>> {
    let alg = make_link_algebra::<f64>(layout.n)?;
    one_step_map(&Program::bind(ops, layout, &alg)?, layout, sec)
}

fn sandwich_check(cfg: &SimulationConfig, layout: &RegisterLayout, out: &mut Vec<Check>) -> Result<()> {
    if layout.policy == AncillaPolicy::None {
        return Ok(());
    }
    let c = cfg.couplings();
    let h = build_hamiltonian_term::<f64>(&layout.physical(), TermName::Be, &c)?;
    let sec = sectors(&h.op);
    let exact = ExactPropagator::with_sectors(&h.op, sec.clone())?;
    let mut worst = 0.0f64;
    for tau in [0.05, 0.2, 1.0] {
        let mut ops = Vec::new();
        for p in layout.geometry.plaquettes_of(Parity::Even) {
            ops.extend(stator::plaquette_sandwich(layout, p, tau, c.lambda_b, Block::Term(TermName::Be), 0)?);
        }
        let w = map_of(&ops, layout, &sec)?;
        worst = worst.max(diamond_surrogate_distance(&w, &exact.unitary(tau), 1e-10)?.value);
    }
    out.push(Check::at_most("stator: plaquette sandwich = exp(−iτH_B)", worst, 1e-11));
    Ok(())
}

fn gauge_matter_checks(cfg: &SimulationConfig, layout: &RegisterLayout, out: &mut Vec<Check>) -> Result<()> {
    let c = cfg.couplings();
    let tau = 0.3;
    let mut direct_worst = 0.0f64;
    let mut stator_worst = 0.0f64;
    for class in [LinkClass::Eh, LinkClass::Ev, LinkClass::Oh, LinkClass::Ov] {
        let links = layout.geometry.links_of_class(class);
        if links.is_empty() {
            continue;
        }
        let h = build_hamiltonian_term::<f64>(&layout.physical(), TermName::from_class(class), &c)?;
        let sec = sectors(&h.op);
        let exact = ExactPropagator::with_sectors(&h.op, sec.clone())?.unitary(tau);
        let mut direct = Vec::new();
        let mut via_stator = Vec::new();
        for &l in &links {
            let g = stator::gauge_matter_gates(layout, l, 0.0, 0.0)?;
            direct.extend(g.direct_route(tau * c.lambda_gm, [0; 3]));
            if let Some(anc) = layout.ancilla_registers().next() {
                via_stator.extend(g.stator_route(anc, tau * c.lambda_gm));
            }
        }
        direct_worst = direct_worst.max(diamond_surrogate_distance(&map_of(&direct, layout, &sec)?, &exact, 1e-10)?.value);
        if !via_stator.is_empty() {
            stator_worst = stator_worst.max(diamond_surrogate_distance(&map_of(&via_stator, layout, &sec)?, &exact, 1e-10)?.value);
        }
    }
    out.push(Check::at_most("gauge-matter: U_W† hop U_W = exp(−iτH_GM)", direct_worst, 1e-11));
    if layout.ancilla_dim() > 1 {
        out.push(Check::at_most("gauge-matter: stator route = exp(−iτH_GM)", stator_worst, 1e-11));
    }
    Ok(())
}

fn phase_field_checks(cfg: &SimulationConfig, layout: &RegisterLayout, out: &mut Vec<Check>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let geometry = &layout.geometry;
    let mut curl_worst = 0.0f64;
    let mut fit_worst = 0.0f64;
    for _ in 0..20 {
        let (th, thp) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let f = spurious_phase_field(geometry, th, thp);
        curl_worst = curl(geometry, &f).iter().fold(curl_worst, |m, (_, b)| m.max(b.abs()));
        let lam = solve_potential(geometry, &f)?;
        for (l, v) in f.links.iter().zip(&f.values) {
            let (a, b) = (geometry.vertex_index(l.origin).unwrap_or(0), geometry.vertex_index(l.end()).unwrap_or(0));
            fit_worst = fit_worst.max((lam[a] - lam[b] - v).abs());
        }
    }
    out.push(Check::at_most("phases: curl of the spurious field vanishes", curl_worst, 1e-12));
    out.push(Check::at_most("phases: solved Λ reproduces the field", fit_worst, 1e-12));

    if layout.policy == AncillaPolicy::None && !geometry.plaquettes().is_empty() {
        return Ok(());
    }
    let (th, thp) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let c = cfg.couplings();
    let phys = layout.physical();
    let h = total_hamiltonian::<f64>(layout, &c);
    let sec = sectors(&h);
    let alg = make_link_algebra::<f64>(layout.n)?;
    let map = |spec: StepSpec| -> Result<BlockOperator<f64>> {
        let s = compile_step(layout, &c, &spec)?;
        one_step_map(&Program::bind(&s.ops, layout, &alg)?, layout, &sec)
    };
    let direct = map(StepSpec::new(0.2, Mode::Direct, 1))?;
    let chor = map(StepSpec::new(0.2, Mode::Choreography, 1).with_phases(th, thp))?;
    let g = gauge_transform::<f64>(&phys, &spurious_phase_field(geometry, th, thp))?;
    let gauss: Vec<Vec<C<f64>>> = geometry.vertices().iter().map(|&v| gauss_law_operator(&phys, v)).collect::<Result<_>>()?;
    let one = C::new(1.0, 0.0);
    let mut worst = 0.0f64;
    for ((b, d), w) in direct.sectors.blocks.iter().zip(&direct.mats).zip(&chor.mats) {
        if !gauss.iter().all(|t| (t[b[0]] - one).norm() < 1e-12) {
            continue;
        }
        let nf = crate::algebra::total_fermion_number(&phys, b[0]) as f64;
        let ph = cis(-spurious_global_angle(th, thp) * nf);
        for r in 0..b.len() {
            for k in 0..b.len() {
                let gauged = d[(r, k)] * g[b[r]] * g[b[k]].conj() * ph;
                worst = worst.max((gauged - w[(r, k)]).norm());
            }
        }
    }
    out.push(Check::at_most("phases: choreography = gauged direct step", worst, 1e-11));
    Ok(())
}

fn gauge_invariance_check(cfg: &SimulationConfig, layout: &RegisterLayout, out: &mut Vec<Check>) -> Result<()> {
    let alg = make_link_algebra::<f64>(layout.n)?;
    let gauss: Vec<Vec<C<f64>>> = layout.geometry.vertices().iter().map(|&v| gauss_law_operator(layout, v)).collect::<Result<_>>()?;
    let s = compile_step(layout, &cfg.couplings(), &cfg.step_spec())?;
    let mut worst = 0.0f64;
    let mut segs = closed_segments(&s.ops);
    segs.push(0..s.ops.len());
    for seg in segs {
        let p = Program::bind(&s.ops[seg], layout, &alg)?;
        for th in &gauss {
            // ‖[W, Θ]‖ via power iteration on C†C with C = WΘ − ΘW
            let comm = |v: &[C<f64>], adj: bool| -> Vec<C<f64>> {
                let t = |x: &[C<f64>], conj: bool| -> Vec<C<f64>> {
                    x.iter().zip(th).map(|(a, b)| if conj { a * b.conj() } else { a * b }).collect()
                };
                let run = |x: &mut Vec<C<f64>>| if adj { p.apply_adjoint(x) } else { p.apply(x) };
                let mut a = t(v, adj);
                run(&mut a);
                let mut b = v.to_vec();
                run(&mut b);
                let b = t(&b, adj);
                a.iter().zip(&b).map(|(x, y)| x - y).collect()
            };
            let est = power_norm(layout.total_dim(), |v| comm(&comm(v, false), true), 1e-6, 1e-13, 300, cfg.seed);
            worst = worst.max(est.value);
        }
    }
    out.push(Check::at_most("gauge invariance: every closed segment commutes with Θ(x)", worst, 1e-10));
    Ok(())
}

fn trotter_checks(cfg: &SimulationConfig, out: &mut Vec<Check>) -> Result<()> {
    let rows = run_trotter_scan(cfg, &SCAN_STEPS)?;
    for order in [1u8, 2] {
        let sel: Vec<_> = rows.iter().filter(|r| r.order == order).collect();
        let ms: Vec<f64> = sel.iter().map(|r| r.m as f64).collect();
        let ds: Vec<f64> = sel.iter().map(|r| r.distance).collect();
        let slope = loglog_slope(&ms, &ds);
        out.push(Check::at_most(format!("trotter: order {order} slope {slope:.3} vs −{order}"), (slope + order as f64).abs(), 0.1));
        let over = sel.iter().map(|r| r.distance - r.bound).fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::at_most(format!("trotter: order {order} distance ≤ bound (max excess)"), over.max(0.0), 0.0));
        let rises = ds.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
        out.push(Check::at_most(format!("trotter: order {order} error decreases with M"), rises, 0.0));
    }
    Ok(())
}

fn optical_checks(out: &mut Vec<Check>) -> Result<()> {
    let edge = optical::validity_boundary();
    let mut worst = 0.0f64;
    let mut flag_mismatch = 0.0;
    for k in 1..=200 {
        let xi = 0.32 * k as f64 / 200.0;
        let p = optical::polarization_vectors(xi);
        if p.valid != (optical::polarization_discriminant(xi) > 0.0) || p.valid != (xi < edge) {
            flag_mismatch += 1.0;
        }
        if p.valid {
            worst = worst.max(optical::max_cross_dot(&p)).max(optical::max_transverse_dot(&p));
        }
    }
    out.push(Check::at_most("optical: polarization triads orthogonal and transverse", worst, 1e-8));
    out.push(Check::at_most("optical: validity flag matches the discriminant", flag_mismatch, 0.0));
    let w = optical::Window { x0: -0.5, x1: 2.5, y0: -0.5, y1: 2.5 };
    let mins = optical::v_mat_minima(&optical::Shape::STANDARD, &w)?;
    let off = mins.iter().map(|m| (m.x - m.x.round()).abs().max((m.y - m.y.round()).abs())).fold(0.0, f64::max);
    let count_gap = (mins.len() as f64 - 9.0).abs();
    out.push(Check::at_most("optical: standard minima sit on lattice sites", off + count_gap, 1e-6));
    Ok(())
}

fn collision_checks(cfg: &SimulationConfig, out: &mut Vec<Check>) -> Result<()> {
    let alg = make_link_algebra::<f64>(3)?;
    let target = stator::z3_collision_entangler(&alg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut draws = 0;
    while draws < 20 {
        let g = CollisionCouplings { g0: rng.gen_range(-2.0..2.0), g1: rng.gen_range(-2.0..2.0), g2: rng.gen_range(-2.0..2.0) };
        if stator::eta_coefficients(g).eta1.abs() < 1e-3 {
            continue;
        }
        draws += 1;
        let k = rng.gen_range(-2..=2);
        worst = worst.max(stator::phase_aligned_residual(&stator::composed_entangler::<f64>(g, k)?, &target));
        worst = worst.max(stator::phase_aligned_residual(&stator::corrected_entangler::<f64>(g, k)?, &target));
    }
    out.push(Check::at_most("collision: composed entangler = exp(−i(2π/3)F_zF̃_z)", worst, 1e-11));
    Ok(())
}

/// The whole battery on the configured lattice.
pub fn run_verification_suite(cfg: &SimulationConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let layout = cfg.layout()?;
    let mut out = Vec::new();
    algebra_checks(cfg.n, &mut out)?;
    stator_checks(cfg.n, &mut out)?;
    sandwich_check(cfg, &layout, &mut out)?;
    gauge_matter_checks(cfg, &layout, &mut out)?;
    phase_field_checks(cfg, &layout, &mut out)?;
    gauge_invariance_check(cfg, &layout, &mut out)?;
    trotter_checks(cfg, &mut out)?;
    if cfg.n == 3 {
        collision_checks(cfg, &mut out)?;
    }
    optical_checks(&mut out)?;
    Ok(out)
}
