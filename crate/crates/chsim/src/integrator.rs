//! Explicit RK4 time stepping with adaptive step size and blow-up-aware
//! termination.
//!
//! The step size is CFL-limited by the transport speed and additionally by
//! the characteristic stretching rate (`d_x` of the velocity in product
//! form) and, for system B, the reaction rate. Near blow-up the stretching
//! rate diverges, so `dt` collapses and the run terminates on the sup-norm
//! cap instead of overflowing.
//!
//! Characteristic bundles are co-advanced inside the step from the same
//! stage fields and tableau as the momenta, so pull-back residuals measure
//! spatial discretization error only.

use crate::characteristics::CharacteristicBundle;
use crate::dynamics::{reconstruct, rhs_with_derived, DerivedFields, State, SystemKind, Tendency};
use crate::{ChError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub dt_min: f64,
    /// Blow-up is declared when a momentum sup-norm exceeds this multiple
    /// of the initial one.
    pub field_cap: f64,
    pub sample_interval: f64,
    /// Keep every sampled state in memory (observers always run; turn this
    /// off for large grids where the observer captures what is needed).
    pub retain_samples: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            t_end: 1.0,
            cfl: 0.3,
            dt_min: 1e-9,
            field_cap: 1e6,
            sample_interval: 0.05,
            retain_samples: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ChError::InvalidParameter(m));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must be in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min must be positive, got {}", self.dt_min));
        }
        if !(self.field_cap > 1.0) {
            return bad(format!("field_cap must exceed 1, got {}", self.field_cap));
        }
        if !(self.t_end >= 0.0) {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.sample_interval > 0.0) {
            return bad(format!(
                "sample_interval must be positive, got {}",
                self.sample_interval
            ));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected { t_stop: f64, reason: String },
    DtUnderflow { t_stop: f64 },
}

impl RunStatus {
    pub fn is_blowup(&self) -> bool {
        matches!(self, RunStatus::BlowupDetected { .. })
    }

    pub fn t_stop(&self) -> Option<f64> {
        match self {
            RunStatus::Completed => None,
            RunStatus::BlowupDetected { t_stop, .. } | RunStatus::DtUnderflow { t_stop } => {
                Some(*t_stop)
            }
        }
    }
}

const RATE_FLOOR: f64 = 1e-12;

/// CFL/stability step size for the current state:
/// `cfl * min(dx/|velocity|, 1/|d_x velocity|, 1/|reaction|)` (the last
/// term for system B only), capped by the sampling interval.
pub fn choose_dt(derived: &DerivedFields, kind: SystemKind, cfg: &IntegratorConfig, dx: f64) -> f64 {
    let vel = derived.velocity.sup_norm().max(RATE_FLOOR);
    let stretch = derived.stretch.sup_norm().max(RATE_FLOOR);
    let mut dt = (dx / vel).min(1.0 / stretch);
    if kind == SystemKind::SystemB {
        let r = derived.reaction.as_ref().expect("system B carries a reaction field");
        dt = dt.min(1.0 / r.sup_norm().max(RATE_FLOOR));
    }
    (cfg.cfl * dt).min(cfg.sample_interval)
}

/// One classical RK4 step of the momenta, optionally co-advancing a
/// characteristic bundle through the same stage fields.
pub fn step_rk4(s: &State, dt: f64, mut bundle: Option<&mut CharacteristicBundle>) -> Result<State> {
    assert!(dt > 0.0, "dt must be positive");
    let (k1, d1) = rhs_with_derived(s)?;
    let s2 = advanced(s, 0.5 * dt, &k1);
    let (k2, d2) = rhs_with_derived(&s2)?;
    let s3 = advanced(s, 0.5 * dt, &k2);
    let (k3, d3) = rhs_with_derived(&s3)?;
    let s4 = advanced(s, dt, &k3);
    let (k4, d4) = rhs_with_derived(&s4)?;

    if let Some(b) = bundle.as_deref_mut() {
        b.rk4_advance([&d1, &d2, &d3, &d4], dt);
    }

    let mut m = s.m.clone();
    let mut n = s.n.clone();
    let w = dt / 6.0;
    m.axpy(w, &k1.dm);
    m.axpy(2.0 * w, &k2.dm);
    m.axpy(2.0 * w, &k3.dm);
    m.axpy(w, &k4.dm);
    n.axpy(w, &k1.dn);
    n.axpy(2.0 * w, &k2.dn);
    n.axpy(2.0 * w, &k3.dn);
    n.axpy(w, &k4.dn);
    Ok(State { kind: s.kind, t: s.t + dt, m, n })
}

fn advanced(s: &State, h: f64, k: &Tendency) -> State {
    let mut m = s.m.clone();
    let mut n = s.n.clone();
    m.axpy(h, &k.dm);
    n.axpy(h, &k.dn);
    State { kind: s.kind, t: s.t + h, m, n }
}

/// Scalar RK4 step with the same tableau, for convergence harnesses.
pub fn rk4_scalar_step(f: impl Fn(f64, f64) -> f64, t: f64, y: f64, dt: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    let k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    let k4 = f(t + dt, y + dt * k3);
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Everything an observer sees at a sample time.
pub struct SampleCtx<'a> {
    pub state: &'a State,
    pub derived: &'a DerivedFields,
    pub bundle: Option<&'a CharacteristicBundle>,
    /// Sample counter (0 for the initial state).
    pub index: usize,
}

/// Result of [`run`].
#[derive(Debug)]
pub struct RunOutput {
    pub samples: Vec<State>,
    pub bundle: Option<CharacteristicBundle>,
    pub status: RunStatus,
}

/// March from `s0` until `t_end`, the field cap, or a dt underflow.
///
/// Samples land exactly on multiples of `sample_interval` (dt is clipped to
/// the boundary; boundary times are recomputed as products, not
/// accumulated). The observer runs at every sample including `t = 0` and at
/// the terminal state of an aborted run. Observer failure aborts the run.
pub fn run(
    s0: State,
    cfg: &IntegratorConfig,
    mut bundle: Option<CharacteristicBundle>,
    mut observer: impl FnMut(&SampleCtx) -> std::result::Result<(), String>,
) -> Result<RunOutput> {
    cfg.validate()?;
    s0.check_finite()?;
    let dx = s0.grid().dx();
    let kind = s0.kind;
    let cap = cfg.field_cap * s0.m.sup_norm().max(s0.n.sup_norm()).max(f64::MIN_POSITIVE);

    let mut state = s0;
    let mut samples: Vec<State> = Vec::new();
    let mut boundary_index = 0usize;
    let mut sample_count = 0usize;
    #[allow(unused_assignments)]
    let mut last_observed_t: Option<f64> = None;

    macro_rules! observe {
        ($state:expr, $derived:expr) => {{
            let ctx = SampleCtx {
                state: $state,
                derived: $derived,
                bundle: bundle.as_ref(),
                index: sample_count,
            };
            observer(&ctx).map_err(|message| ChError::Observer { t: $state.t, message })?;
            sample_count += 1;
            last_observed_t = Some($state.t);
            if cfg.retain_samples {
                samples.push($state.clone());
            }
        }};
    }

    let mut derived = reconstruct(&state)?;
    observe!(&state, &derived);

    let status = loop {
        if state.t >= cfg.t_end {
            break RunStatus::Completed;
        }
        let next_boundary = (boundary_index + 1) as f64 * cfg.sample_interval;
        let target = next_boundary.min(cfg.t_end);
        let mut dt = choose_dt(&derived, kind, cfg, dx);
        let remaining = target - state.t;
        if dt >= remaining || remaining - dt < 1e-3 * dt {
            dt = remaining;
        }
        if dt < cfg.dt_min {
            break RunStatus::DtUnderflow { t_stop: state.t };
        }

        match step_rk4(&state, dt, bundle.as_mut()) {
            Ok(next) => {
                if next.check_finite().is_err() {
                    break RunStatus::BlowupDetected {
                        t_stop: state.t,
                        reason: "non-finite field values after step".to_string(),
                    };
                }
                state = next;
            }
            Err(ChError::NonFinite { context }) => {
                break RunStatus::BlowupDetected {
                    t_stop: state.t,
                    reason: format!("non-finite {context} during stage evaluation"),
                };
            }
            Err(e) => return Err(e),
        }

        let sup_m = state.m.sup_norm();
        let sup_n = state.n.sup_norm();
        if sup_m > cap || sup_n > cap {
            let which = if sup_m >= sup_n { "m" } else { "n" };
            break RunStatus::BlowupDetected {
                t_stop: state.t,
                reason: format!(
                    "sup-norm of {which} reached {:.3e}, beyond the cap {:.3e}",
                    sup_m.max(sup_n),
                    cap
                ),
            };
        }

        let hit_target = state.t >= target - f64::EPSILON * target.max(1.0);
        if hit_target {
            state.t = target; // snap; boundary times stay exact multiples
        }
        derived = reconstruct(&state)?;
        if hit_target {
            if target == next_boundary {
                boundary_index += 1;
            }
            observe!(&state, &derived);
        }
    };

    if status != RunStatus::Completed && last_observed_t != Some(state.t) {
        // record the terminal state so diagnostics see the stop time
        if let Ok(d) = reconstruct(&state) {
            observe!(&state, &d);
        }
    }
    let _ = (sample_count, last_observed_t);

    Ok(RunOutput { samples, bundle, status })
}
