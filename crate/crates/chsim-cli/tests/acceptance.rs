//! Acceptance suite: every release gate runs here, one test per criterion
//! (criteria with several independently meaningful clauses are split into
//! lettered sub-tests). Each test prints one `[PASS]`/`[FAIL]` line with
//! the measured values; tolerances are pinned in this file.
//!
//! Shared expensive runs are computed once and cached.

use chsim::blowup::{
    certified_constant, riccati_residual, root_a0, threshold_g, ThresholdFamily,
};
use chsim::characteristics::CharacteristicBundle;
use chsim::diagnostics::{h1_envelope_margin, h1_envelope_rate, DiagnosticsRecord, DiagnosticsTrack};
use chsim::dynamics::{initial_state, reconstruct, InitSpec, State, SystemKind};
use chsim::grid::{Field, Grid1D};
use chsim::integrator::{choose_dt, run, step_rk4, IntegratorConfig, RunStatus};
use chsim::kernel::kernel_convolve;
use chsim::spectral::helmholtz_solve;
use chsim_cli::presets::{run_preset, PresetKind};
use std::sync::{Arc, OnceLock};

fn pass_line(criterion: &str, detail: String) {
    println!("[PASS] {criterion}: {detail}");
}

fn fail_line(criterion: &str, detail: String) -> String {
    let line = format!("[FAIL] {criterion}: {detail}");
    println!("{line}");
    line
}

macro_rules! check {
    ($criterion:expr, $ok:expr, $detail:expr) => {
        if $ok {
            pass_line($criterion, $detail);
        } else {
            panic!("{}", fail_line($criterion, $detail));
        }
    };
}

fn tmp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("chsim_acceptance_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

// -------------------------------------------------------------------------
// shared sign-definite gaussian-pair runs (criteria 2, 3, 5, 6, 10)
// -------------------------------------------------------------------------

struct SharedRun {
    track: DiagnosticsTrack,
    samples: Vec<State>,
    min_m: f64,
    /// per-sample (slope_check_u, sup |u|)
    slope: Vec<(f64, f64)>,
    /// per-sample (envelope margin, envelope value)
    margins: Vec<(f64, f64)>,
    sup_m0: f64,
    status: RunStatus,
}

fn gaussian_pair_state(kind: SystemKind, n: usize) -> State {
    let g = Grid1D::new(n, 20.0).unwrap();
    initial_state(
        kind,
        &InitSpec::Gaussian { amplitude: 1.0, center: 0.5, width: 1.0 },
        &InitSpec::Gaussian { amplitude: 1.0, center: -0.5, width: 1.0 },
        &g,
    )
    .unwrap()
}

fn shared_run(kind: SystemKind) -> SharedRun {
    let s0 = gaussian_pair_state(kind, 1024);
    let d0 = reconstruct(&s0).unwrap();
    let kappa = h1_envelope_rate(&s0, &d0);
    let sup_m0 = s0.m.sup_norm();
    let cfg = IntegratorConfig { t_end: 1.0, cfl: 0.3, sample_interval: 0.05, ..Default::default() };
    let mut track = DiagnosticsTrack::new();
    let mut min_m = f64::INFINITY;
    let mut slope = Vec::new();
    let mut margins = Vec::new();
    let mut rec0: Option<DiagnosticsRecord> = None;
    let out = run(s0, &cfg, None, |ctx| {
        track.push(ctx.state, ctx.derived);
        min_m = min_m.min(ctx.state.m.min());
        let rec = track.last().unwrap().clone();
        slope.push((rec.slope_check_u, ctx.derived.u.sup_norm()));
        let r0 = rec0.get_or_insert(rec.clone());
        let envelope = (r0.h1_u.powi(2) + r0.h1_v.powi(2)) * (kappa * (rec.t - r0.t)).exp();
        margins.push((h1_envelope_margin(&rec, r0, kappa), envelope));
        Ok(())
    })
    .unwrap();
    SharedRun {
        track,
        samples: out.samples,
        min_m,
        slope,
        margins,
        sup_m0,
        status: out.status,
    }
}

fn run_a() -> &'static SharedRun {
    static RUN: OnceLock<SharedRun> = OnceLock::new();
    RUN.get_or_init(|| shared_run(SystemKind::SystemA))
}

fn run_b() -> &'static SharedRun {
    static RUN: OnceLock<SharedRun> = OnceLock::new();
    RUN.get_or_init(|| shared_run(SystemKind::SystemB))
}

// -------------------------------------------------------------------------
// criterion 1: spectral Helmholtz inverse vs direct kernel convolution
// -------------------------------------------------------------------------

#[test]
fn acceptance_01_helmholtz_oracle_agreement() {
    let g = Grid1D::new(1024, 20.0).unwrap();
    let mix = |seed: u64| {
        // smooth compact-support mixtures: three gaussian humps, widths and
        // centers keyed deterministically off the seed
        let f = move |j: u64| {
            let mut z = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(j);
            z ^= z >> 29;
            z = z.wrapping_mul(0xbf58476d1ce4e5b9);
            z ^= z >> 32;
            (z as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        Field::from_fn(g.clone(), move |x| {
            (0..3)
                .map(|h| {
                    let c = 4.0 * f(3 * h);
                    let w = 0.6 + 0.5 * f(3 * h + 1).abs();
                    let a = f(3 * h + 2);
                    a * (-((x - c) / w) * ((x - c) / w)).exp()
                })
                .sum()
        })
    };
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let m = mix(seed);
        let err = kernel_convolve(&m).sup_distance(&helmholtz_solve(&m));
        worst = worst.max(err);
    }
    check!(
        "criterion 1 (Helmholtz oracle agreement)",
        worst < 1e-6,
        format!("sup error over 10 compact fields: {worst:.3e} (tol 1e-6)")
    );
}

// -------------------------------------------------------------------------
// criteria 2-3: conservation drifts
// -------------------------------------------------------------------------

#[test]
fn acceptance_02_conservation_system_a() {
    let r = run_a();
    assert_eq!(r.status, RunStatus::Completed);
    let d = |f: &dyn Fn(&DiagnosticsRecord) -> f64| r.track.relative_drift(f, 1e-30);
    let l1m = d(&|x| x.l1_m);
    let l1n = d(&|x| x.l1_n);
    let amv = d(&|x| x.cons_a_mv);
    let anu = d(&|x| x.cons_a_nu);
    check!(
        "criterion 2 (conservation, system A)",
        l1m < 1e-8 && l1n < 1e-8 && amv < 1e-6 && anu < 1e-6,
        format!("drifts: l1_m {l1m:.2e}, l1_n {l1n:.2e} (tol 1e-8); consA_mv {amv:.2e}, consA_nu {anu:.2e} (tol 1e-6)")
    );
}

#[test]
fn acceptance_03_conservation_system_b() {
    let r = run_b();
    assert_eq!(r.status, RunStatus::Completed);
    let d = |f: &dyn Fn(&DiagnosticsRecord) -> f64| r.track.relative_drift(f, 1e-30);
    let mvx = d(&|x| x.cons_b_mvx);
    let nux = d(&|x| x.cons_b_nux);
    let mv = d(&|x| x.cons_b_mv);
    let nu = d(&|x| x.cons_b_nu);
    check!(
        "criterion 3 (conservation, system B)",
        mvx < 1e-6 && nux < 1e-6 && mv < 1e-6 && nu < 1e-6,
        format!("drifts: mvx {mvx:.2e}, nux {nux:.2e}, mv {mv:.2e}, nu {nu:.2e} (tol 1e-6)")
    );
}

// -------------------------------------------------------------------------
// criterion 4: pull-back identities with refinement evidence
// -------------------------------------------------------------------------

#[test]
fn acceptance_04_pullback_identities() {
    for (kind, tag) in [(PresetKind::PullbackA, "A"), (PresetKind::PullbackB, "B")] {
        let report = run_preset(kind, &[], &tmp_dir(&format!("pullback_{tag}"))).unwrap();
        let m = &report.measured;
        check!(
            &format!("criterion 4 (pull-back, system {tag})"),
            report.pass,
            format!(
                "residual {:.3e} (tol {:.3e}), refinement ratio {:.1} (min 4)",
                m["residual"].as_f64().unwrap(),
                1e-4 * m["sup_m0"].as_f64().unwrap(),
                m["refinement_ratio"].as_f64().unwrap()
            )
        );
    }
}

// -------------------------------------------------------------------------
// criteria 5-6: sign/slope preservation and the H1 envelope
// -------------------------------------------------------------------------

#[test]
fn acceptance_05_sign_and_slope_preservation() {
    let r = run_a();
    let min_ok = r.min_m >= -1e-6 * r.sup_m0;
    let worst_slope = r
        .slope
        .iter()
        .map(|(s, sup_u)| s - 1e-6 * sup_u)
        .fold(f64::NEG_INFINITY, f64::max);
    check!(
        "criterion 5 (sign and slope preservation)",
        min_ok && worst_slope <= 0.0,
        format!(
            "min m = {:.3e} (floor {:.3e}); max(slope_check - 1e-6 |u|_inf) = {worst_slope:.3e}",
            r.min_m,
            -1e-6 * r.sup_m0
        )
    );
}

#[test]
fn acceptance_06_h1_envelope() {
    let r = run_a();
    let worst = r
        .margins
        .iter()
        .map(|(margin, env)| margin / env)
        .fold(f64::INFINITY, f64::min);
    check!(
        "criterion 6 (H1 envelope)",
        worst >= -1e-6,
        format!("min relative margin {worst:.3e} (floor -1e-6)")
    );
}

// -------------------------------------------------------------------------
// criterion 7: global existence under separated supports
// -------------------------------------------------------------------------

#[test]
fn acceptance_07_global_support() {
    let report = run_preset(PresetKind::GlobalSupportA, &[], &tmp_dir("support")).unwrap();
    let m = &report.measured;
    check!(
        "criterion 7 (separated supports stay global)",
        report.pass,
        format!(
            "status {}, support residual {:.3e}, indicator sup {:.3e} (scale {:.1})",
            m["status"].as_str().unwrap(),
            m["support_residual"].as_f64().unwrap(),
            m["indicator_sup"].as_f64().unwrap(),
            m["scale"].as_f64().unwrap()
        )
    );
}

// -------------------------------------------------------------------------
// criterion 8: threshold root
// -------------------------------------------------------------------------

#[test]
fn acceptance_08a_root_closed_form() {
    let a0 = root_a0(1.0, 1.0, ThresholdFamily::ASignData).unwrap();
    let exact = 1.0 - std::f64::consts::E;
    let err = (a0 - exact).abs();
    check!(
        "criterion 8a (threshold root closed form)",
        err < 1e-10,
        format!("a0(1,1) = {a0:.12} vs 1 - e (independently verified), error {err:.3e}")
    );
}

#[test]
fn acceptance_08b_g_strictly_increasing() {
    let (c, n0) = (1.0, 1.0);
    let mut prev = f64::NEG_INFINITY;
    let mut ok = true;
    for i in 0..100 {
        let a = -8.0 * (1.0 - i as f64 / 99.0);
        let v = threshold_g(ThresholdFamily::ASignData, c, n0, a);
        ok &= v > prev;
        prev = v;
    }
    check!(
        "criterion 8b (G strictly increasing)",
        ok,
        "100-point grid on [-8, 0) is strictly increasing".to_string()
    );
}

#[test]
fn acceptance_08c_root_scaling_in_n0() {
    // As specified: a0(C, lambda N0) = lambda a0(C, N0) at lambda = 2, 5.
    // The paper's threshold function G(a) = 1 + a g(-a/N0) + N0 int f obeys
    // G(lambda a, lambda N0) = 1 + lambda (G(a, N0) - 1), so the root is
    // preserved only at lambda = 1; the claim cannot hold. The measured
    // values below document the discrepancy (see the companion analysis in
    // the true-identity assertion, which passes).
    let c = 1.0;
    let base = root_a0(c, 1.0, ThresholdFamily::ASignData).unwrap();
    let mut detail = String::new();
    let mut ok = true;
    for lambda in [2.0, 5.0] {
        let scaled = root_a0(c, lambda, ThresholdFamily::ASignData).unwrap();
        let err = (scaled - lambda * base).abs();
        detail.push_str(&format!(
            "a0(1,{lambda}) = {scaled:.9} vs {lambda} a0(1,1) = {:.9} (|diff| {err:.3e}); ",
            lambda * base
        ));
        ok &= err < 1e-10;
        // the scaling identity that does hold:
        let g_scaled = threshold_g(ThresholdFamily::ASignData, c, lambda, lambda * base);
        assert!(
            (g_scaled - (1.0 - lambda)).abs() < 1e-10,
            "true identity G(la, lN0) = 1 + l (G(a, N0) - 1) violated"
        );
    }
    check!("criterion 8c (root scaling in N0)", ok, detail);
}

// -------------------------------------------------------------------------
// criterion 9: calibrated blow-up presets
// -------------------------------------------------------------------------

fn blowup_criterion(tag: &str, kind: PresetKind) {
    let started = std::time::Instant::now();
    let report = run_preset(kind, &[], &tmp_dir(kind.name())).unwrap();
    let wall = started.elapsed().as_secs_f64();
    let m = &report.measured;
    let detail = format!(
        "margin {:.2} (min 2), status {}, t_stop {:?} <= T0 {:?}, indicator ratio {:.1e} (min 1e3), wall {wall:.0}s",
        m["margin"].as_f64().unwrap(),
        m["status"].as_str().unwrap(),
        m["t_stop"].as_f64(),
        m["t0_upper"].as_f64(),
        m["indicator_ratio"].as_f64().unwrap(),
    );
    check!(&format!("criterion 9 (blow-up within the bound, {tag})"), report.pass, detail);
}

#[test]
fn acceptance_09a_blowup_a_l1() {
    blowup_criterion("A, integrable-data family", PresetKind::BlowupAL1);
}

#[test]
fn acceptance_09b_blowup_a_sign() {
    blowup_criterion("A, sign-definite family", PresetKind::BlowupASign);
}

#[test]
fn acceptance_09c_blowup_b_sign() {
    blowup_criterion("B, sign-definite family", PresetKind::BlowupBSign);
}

// -------------------------------------------------------------------------
// criterion 10: Riccati inequality along the conservation run
// -------------------------------------------------------------------------

#[test]
fn acceptance_10_riccati_inequality() {
    let r = run_a();
    let s0 = &r.samples[0];
    let constant = certified_constant(&s0.m, &s0.n, ThresholdFamily::ASignData).unwrap();

    // probe a few sample states; build centered triples by stepping at the
    // cfl-controlled dt so the differencing error scales with cfl
    let probe = |state: &State, cfl: f64| {
        let d = reconstruct(state).unwrap();
        let cfg = IntegratorConfig { cfl, sample_interval: 1e9, ..Default::default() };
        let dt = choose_dt(&d, state.kind, &cfg, state.grid().dx());
        let s1 = step_rk4(state, dt, None).unwrap();
        let s2 = step_rk4(&s1, dt, None).unwrap();
        riccati_residual(state, &s1, &s2, &constant).unwrap()
    };

    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_ratio = f64::INFINITY;
    let mut slack_scale: f64 = 0.0;
    for idx in [0, r.samples.len() / 2, r.samples.len() - 2] {
        let state = &r.samples[idx];
        let coarse = probe(state, 0.3);
        let fine = probe(state, 0.15);
        worst_violation = worst_violation.max(coarse.violation).max(fine.violation);
        let ratio = coarse.identity_gap / fine.identity_gap.max(1e-300);
        worst_ratio = worst_ratio.min(ratio);
        let sup_mn = state.m.sup_norm() + state.n.sup_norm();
        slack_scale = slack_scale.max(1e-3 * constant.value * sup_mn);
    }
    check!(
        "criterion 10 (Riccati inequality)",
        worst_violation <= slack_scale && worst_ratio >= 3.5,
        format!(
            "max violation {worst_violation:.3e} (slack {slack_scale:.3e}); differencing gap shrinks {worst_ratio:.2}x when cfl halves (min 3.5)"
        )
    );
}

// -------------------------------------------------------------------------
// criterion 11: frequency decomposition
// -------------------------------------------------------------------------

#[test]
fn acceptance_11_besov_module() {
    let report = run_preset(PresetKind::BesovSanity, &[], &tmp_dir("besov")).unwrap();
    let m = &report.measured;
    check!(
        "criterion 11 (dyadic decomposition and norm equivalence)",
        report.pass,
        format!(
            "partition residual {:.2e} (tol 1e-12), reconstruction {:.2e} (tol 1e-10), cross-grid ratio drift {:.2e} (tol 0.1)",
            m["partition_residual"].as_f64().unwrap(),
            m["reconstruction_worst"].as_f64().unwrap(),
            m["ratio_drift_worst"].as_f64().unwrap()
        )
    );
}

// -------------------------------------------------------------------------
// criterion 12: determinism
// -------------------------------------------------------------------------

#[test]
fn acceptance_12_determinism() {
    let d1 = tmp_dir("det1");
    let d2 = tmp_dir("det2");
    run_preset(PresetKind::ConservationA, &[], &d1).unwrap();
    run_preset(PresetKind::ConservationA, &[], &d2).unwrap();
    let a = std::fs::read(d1.join("diagnostics.csv")).unwrap();
    let b = std::fs::read(d2.join("diagnostics.csv")).unwrap();
    let diag_equal = a == b;
    // manifests agree modulo the wall-time field
    let strip = |p: &std::path::Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v["wall_seconds"] = serde_json::Value::Null;
        v
    };
    let manifests_equal = strip(&d1.join("manifest.json")) == strip(&d2.join("manifest.json"));
    check!(
        "criterion 12 (determinism)",
        diag_equal && manifests_equal,
        format!(
            "diagnostics.csv byte-identical: {diag_equal}; manifests identical modulo wall time: {manifests_equal}"
        )
    );
}
