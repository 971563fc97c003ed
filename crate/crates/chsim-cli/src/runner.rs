//! Drives one simulation from a [`RunConfig`] and writes the on-disk
//! artifacts: `diagnostics.csv`, `characteristics.csv`, `manifest.json`,
//! and optional field snapshots.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use chsim::characteristics::{default_seed_positions, CharacteristicBundle};
use chsim::diagnostics::{DiagnosticsTrack, CSV_HEADER};
use chsim::dynamics::initial_state;
use chsim::grid::Field;
use chsim::integrator::{run, RunStatus};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct Manifest {
    pub code_version: String,
    pub config: RunConfig,
    /// absent when the run aborted before finishing; see `cause`
    pub status: Option<RunStatus>,
    /// excluded from determinism comparisons
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
}

pub struct RunArtifacts {
    pub status: RunStatus,
    pub track: DiagnosticsTrack,
    /// per-sample maximum pull-back residual (absolute)
    pub pullback_trace: Vec<f64>,
    pub bundle: Option<CharacteristicBundle>,
    pub out_dir: PathBuf,
    pub samples: Vec<chsim::dynamics::State>,
}

impl RunArtifacts {
    pub fn max_pullback(&self) -> f64 {
        self.pullback_trace.iter().cloned().fold(0.0, f64::max)
    }
}

fn float_row(values: &[f64]) -> String {
    let mut line = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{v}");
    }
    line
}

/// Execute the configured run, writing artifacts under `out_dir`.
///
/// Simulation-level failures (blow-up, dt underflow) are successful runs
/// with the corresponding status; observer/invariant violations surface as
/// errors after a manifest naming the cause has been written.
pub fn run_simulation(cfg: &RunConfig, out_dir: &Path) -> Result<RunArtifacts> {
    run_simulation_with(cfg, out_dir, |_| Ok(()))
}

/// [`run_simulation`] with an extra per-sample observer (presets hook
/// their pass-rule measurements here).
pub fn run_simulation_with(
    cfg: &RunConfig,
    out_dir: &Path,
    mut extra: impl FnMut(&chsim::integrator::SampleCtx) -> std::result::Result<(), String>,
) -> Result<RunArtifacts> {
    let started = std::time::Instant::now();
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let grid = cfg.grid()?;
    let s0 = initial_state(cfg.system.kind(), &cfg.init.m0, &cfg.init.n0, &grid)
        .map_err(|e| anyhow::anyhow!("initial data rejected: {e}"))?;

    let mut seeds = default_seed_positions(&s0.m, &s0.n, cfg.characteristics.n_seeds);
    seeds.extend_from_slice(&cfg.characteristics.extra_seeds);
    let bundle = CharacteristicBundle::new(&s0, seeds);

    let mut track = DiagnosticsTrack::new();
    let mut pullback_trace = Vec::new();
    let mut char_csv = String::from("t,seed,q,qx,phase,residual_m,residual_n\n");
    let mut snapshots: Vec<(usize, Field, Field)> = Vec::new();
    let snapshot_every = cfg.outputs.snapshot_every;

    let outcome = run(s0, &cfg.integrator, Some(bundle), |ctx| {
        track.push(ctx.state, ctx.derived);
        let b = ctx.bundle.expect("runner always supplies a bundle");
        let res = b.pullback_residual(ctx.state);
        pullback_trace.push(res.max_abs());
        let seeds = b.seeds();
        let q = b.positions();
        let qx = b.jacobians();
        let phase = b.phases();
        for i in 0..b.len() {
            char_csv.push_str(&float_row(&[
                ctx.state.t,
                seeds[i],
                q[i],
                qx[i],
                phase[i],
                res.res_m[i],
                res.res_n[i],
            ]));
            char_csv.push('\n');
        }
        if snapshot_every > 0 && ctx.index % snapshot_every == 0 {
            snapshots.push((ctx.index, ctx.state.m.clone(), ctx.state.n.clone()));
        }
        extra(ctx)
    });

    let wall_seconds = started.elapsed().as_secs_f64();
    let (status, cause) = match &outcome {
        Ok(out) => (Some(out.status.clone()), None),
        Err(e) => (None, Some(format!("aborted: {e}"))),
    };

    // diagnostics.csv
    let mut diag = String::from(CSV_HEADER);
    diag.push('\n');
    for rec in &track.records {
        diag.push_str(&rec.csv_row());
        diag.push('\n');
    }
    fs::write(out_dir.join("diagnostics.csv"), diag)?;
    fs::write(out_dir.join("characteristics.csv"), &char_csv)?;
    for (idx, m, n) in &snapshots {
        for (name, f) in [("m", m), ("n", n)] {
            let mut text = String::from("x,value\n");
            for (&x, &v) in f.grid().nodes().iter().zip(f.values()) {
                text.push_str(&float_row(&[x, v]));
                text.push('\n');
            }
            fs::write(out_dir.join(format!("{name}_{idx}.csv")), text)?;
        }
    }

    let manifest = Manifest {
        code_version: CODE_VERSION.to_string(),
        config: cfg.clone(),
        status,
        wall_seconds,
        cause,
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let out = outcome.map_err(|e| anyhow::anyhow!("run aborted: {e}"))?;
    Ok(RunArtifacts {
        status: out.status,
        track,
        pullback_trace,
        bundle: out.bundle,
        out_dir: out_dir.to_path_buf(),
        samples: out.samples,
    })
}
