//! Scratch harness: prints the measured run-level quantities that the
//! verification suite pins down.

use chsim::blowup::{certified_constant, predict, qx_values, BlowupInputs, ThresholdFamily};
use chsim::characteristics::CharacteristicBundle;
use chsim::diagnostics::{h1_envelope_margin, h1_envelope_rate, DiagnosticsTrack};
use chsim::dynamics::{initial_state, reconstruct, InitSpec, SystemKind};
use chsim::grid::Grid1D;
use chsim::integrator::{run, IntegratorConfig};

fn gaussian_pair_run(kind: SystemKind, n: usize, cfl: f64) {
    let g = Grid1D::new(n, 20.0).unwrap();
    let m0 = InitSpec::Gaussian { amplitude: 1.0, center: 0.5, width: 1.0 };
    let n0 = InitSpec::Gaussian { amplitude: 1.0, center: -0.5, width: 1.0 };
    let s0 = initial_state(kind, &m0, &n0, &g).unwrap();
    let d0 = reconstruct(&s0).unwrap();
    let kappa = h1_envelope_rate(&s0, &d0);
    let bundle = CharacteristicBundle::with_default_seeds(&s0, 64, &[]);
    let cfg = IntegratorConfig { t_end: 1.0, cfl, sample_interval: 0.05, ..Default::default() };
    let mut track = DiagnosticsTrack::new();
    let mut worst_pullback: f64 = 0.0;
    let mut min_m: f64 = f64::INFINITY;
    let mut worst_slope: f64 = f64::NEG_INFINITY;
    let mut worst_margin: f64 = f64::INFINITY;
    let sup_m0 = s0.m.sup_norm();
    let out = run(s0, &cfg, Some(bundle), |ctx| {
        track.push(ctx.state, ctx.derived);
        if let Some(b) = ctx.bundle {
            worst_pullback = worst_pullback.max(b.pullback_residual(ctx.state).max_abs());
        }
        min_m = min_m.min(ctx.state.m.min());
        let rec = track.last().unwrap();
        worst_slope = worst_slope.max(rec.slope_check_u);
        let margin = h1_envelope_margin(rec, &track.records[0], kappa);
        let env = (rec.h1_u.powi(2) + rec.h1_v.powi(2)).max(1e-300);
        worst_margin = worst_margin.min(margin / env);
        Ok(())
    })
    .unwrap();
    println!("== {kind:?} n={n} cfl={cfl}: {:?}", out.status);
    let drift = |f: &dyn Fn(&chsim::diagnostics::DiagnosticsRecord) -> f64| {
        track.relative_drift(f, 1e-300)
    };
    println!("  l1_m drift      {:.3e}", drift(&|r| r.l1_m));
    println!("  l1_n drift      {:.3e}", drift(&|r| r.l1_n));
    println!("  consA_mv drift  {:.3e}", drift(&|r| r.cons_a_mv));
    println!("  consA_nu drift  {:.3e}", drift(&|r| r.cons_a_nu));
    println!("  consB_mvx drift {:.3e}", drift(&|r| r.cons_b_mvx));
    println!("  consB_nux drift {:.3e}", drift(&|r| r.cons_b_nux));
    println!("  consB_mv drift  {:.3e}", drift(&|r| r.cons_b_mv));
    println!("  consB_nu drift  {:.3e}", drift(&|r| r.cons_b_nu));
    println!("  pullback max    {:.3e} (rel {:.3e})", worst_pullback, worst_pullback / sup_m0);
    println!("  min m           {:.3e}", min_m);
    println!("  slope_check max {:.3e}", worst_slope);
    println!("  envelope margin (rel) {:.3e}", worst_margin);
    println!(
        "  consB identity: mvx + nux = {:.3e}",
        track.records.last().unwrap().cons_b_mvx + track.records.last().unwrap().cons_b_nux
    );
}

fn global_support_run() {
    let g = Grid1D::new(2048, 20.0).unwrap();
    let m0 = InitSpec::Bump { amplitude: 1.0, center: 5.0, radius: 1.0 };
    let n0 = InitSpec::Bump { amplitude: 1.0, center: -5.0, radius: 1.0 };
    let s0 = initial_state(SystemKind::SystemA, &m0, &n0, &g).unwrap();
    let bundle = CharacteristicBundle::with_default_seeds(&s0, 64, &[-4.0, 4.0]);
    let cfg = IntegratorConfig { t_end: 2.0, sample_interval: 0.1, ..Default::default() };
    let scale = s0.m.sup_norm() + s0.n.sup_norm();
    let mut worst = 0.0_f64;
    let mut worst_ind = 0.0_f64;
    let out = run(s0, &cfg, Some(bundle), |ctx| {
        let b = ctx.bundle.unwrap();
        let q_b = b.position_of_seed(4.0).unwrap();
        let q_a = b.position_of_seed(-4.0).unwrap();
        let r = chsim::diagnostics::support_separation_check(ctx.state, ctx.derived, q_b, q_a);
        worst = worst.max(r);
        let rec = chsim::diagnostics::sample(ctx.state, ctx.derived);
        worst_ind = worst_ind.max(rec.indicator_a.abs());
        Ok(())
    })
    .unwrap();
    println!("== global support: {:?}", out.status);
    println!("  worst residual {:.3e} (rel {:.3e})", worst, worst / scale);
    println!("  worst |indicatorA| {:.3e} (rel {:.3e})", worst_ind, worst_ind / scale);
}

fn blowup_a_l1_probe() {
    // candidate calibration for the L1-family blow-up preset
    let g = Grid1D::new(4096, 10.0).unwrap();
    let dx = g.dx();
    let m0 = InitSpec::Bump { amplitude: 20.0, center: -0.1, radius: 0.18 };
    let n0 = InitSpec::Bump { amplitude: 12.0, center: 0.1, radius: 5.0 * dx };
    let s0 = initial_state(SystemKind::SystemA, &m0, &n0, &g).unwrap();
    let d0 = reconstruct(&s0).unwrap();
    let c = certified_constant(&s0.m, &s0.n, ThresholdFamily::AL1Data).unwrap();
    let qx = qx_values(&s0, &d0);
    let n0_pt = chsim::blowup::pointwise_n0(&s0);
    // best probe: minimize qx (most negative)
    let (i_best, _) = qx
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let inputs = BlowupInputs {
        family: ThresholdFamily::AL1Data,
        c: c.value,
        n0: n0_pt[i_best],
        qx0: qx[i_best],
        x0: g.nodes()[i_best],
    };
    let p = predict(&inputs).unwrap();
    println!("== blowup A_L1 probe: C={:.4}, x0={:.3}, N0={:.4}, Qx0={:.4}", c.value, inputs.x0, inputs.n0, inputs.qx0);
    println!(
        "  threshold {:.4}, triggered {}, margin {:.2}x, T0 {:?}",
        p.threshold,
        p.triggered,
        inputs.qx0 / p.threshold,
        p.t0_upper
    );
    if p.triggered {
        let cfg = IntegratorConfig {
            t_end: p.t0_upper.unwrap(),
            sample_interval: p.t0_upper.unwrap() / 100.0,
            ..Default::default()
        };
        let start = std::time::Instant::now();
        let mut min_ind: f64 = f64::INFINITY;
        let mut first_ind: Option<f64> = None;
        let out = run(s0, &cfg, None, |ctx| {
            let rec = chsim::diagnostics::sample(ctx.state, ctx.derived);
            if first_ind.is_none() {
                first_ind = Some(rec.indicator_a);
            }
            min_ind = min_ind.min(rec.indicator_a);
            Ok(())
        })
        .unwrap();
        println!(
            "  run: {:?} after {:?}; indicatorA {:.3e} -> {:.3e} (x{:.1})",
            out.status,
            start.elapsed(),
            first_ind.unwrap(),
            min_ind,
            min_ind / first_ind.unwrap()
        );
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("all");
    if what == "all" || what == "runs" {
        gaussian_pair_run(SystemKind::SystemA, 1024, 0.3);
        gaussian_pair_run(SystemKind::SystemA, 2048, 0.3);
        gaussian_pair_run(SystemKind::SystemB, 1024, 0.3);
    }
    if what == "all" || what == "pullback" {
        pullback_peakon(SystemKind::SystemA, 512);
        pullback_peakon(SystemKind::SystemA, 1024);
        pullback_peakon(SystemKind::SystemB, 2048);
        pullback_peakon(SystemKind::SystemB, 4096);
    }
    if what == "all" || what == "support" {
        global_support_run();
    }
    if what == "all" || what == "blowup" {
        blowup_a_l1_probe();
    }
}

#[allow(dead_code)]
fn pullback_peakon(kind: SystemKind, n: usize) { let eps: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.35);
    let g = Grid1D::new(n, 20.0).unwrap();
    let m0 = InitSpec::MollifiedPeakon { c: 0.6, center: 0.5, eps };
    let n0 = InitSpec::MollifiedPeakon { c: 0.5, center: -0.5, eps };
    let s0 = initial_state(kind, &m0, &n0, &g).unwrap();
    let sup_m0 = s0.m.sup_norm();
    let bundle = CharacteristicBundle::with_default_seeds(&s0, 64, &[]);
    let cfg = IntegratorConfig { t_end: 1.0, cfl: 0.3, sample_interval: 0.05, ..Default::default() };
    let mut worst: f64 = 0.0;
    let out = run(s0, &cfg, Some(bundle), |ctx| {
        if let Some(b) = ctx.bundle {
            worst = worst.max(b.pullback_residual(ctx.state).max_abs());
        }
        Ok(())
    })
    .unwrap();
    println!("== pullback {kind:?} n={n}: {:?} worst {:.4e} rel {:.4e}", out.status, worst, worst / sup_m0);
}
