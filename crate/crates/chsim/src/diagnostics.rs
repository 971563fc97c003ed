//! Conserved quantities, norms, blow-up indicators, and structural
//! inequalities recorded once per sample.
//!
//! Every record carries the full column set regardless of the system being
//! run; the conservation columns that the current system does not preserve
//! are still well-defined integrals and simply drift. Sup/inf scans are
//! over grid nodes only. Integrals are pointwise products under the
//! periodic trapezoid rule, accumulated sequentially so output files are
//! byte-reproducible.

use crate::dynamics::{DerivedFields, State};
use crate::grid::Field;
use crate::spectral::{h1_norm, integrate, integrate_abs};
use serde::Serialize;

/// One sample of every monitored quantity.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `integral |m|`, `integral |n|`
    pub l1_m: f64,
    pub l1_n: f64,
    /// system A conserved pairings `integral m (v + v_x)`, `integral n (u - u_x)`
    pub cons_a_mv: f64,
    pub cons_a_nu: f64,
    /// system B conserved pairings
    pub cons_b_mvx: f64,
    pub cons_b_nux: f64,
    pub cons_b_mv: f64,
    pub cons_b_nu: f64,
    pub sup_m: f64,
    pub sup_n: f64,
    pub h1_u: f64,
    pub h1_v: f64,
    /// `inf_x (m(v+v_x) - n(u-u_x))`; drives the system A blow-up scenario
    pub indicator_a: f64,
    /// `inf_x (m v_x + n u_x)` and `sup_x |u v_x - v u_x|`; system B scenario
    pub indicator_b_inf: f64,
    pub indicator_b_cross: f64,
    /// running `int_0^t max(sup_m, sup_n)^2 dtau` (continuation functional,
    /// exponent 2 for these cubic-nonlinearity systems)
    pub continuation_q: f64,
    /// `sup_x (|u_x| - |u|)`; nonpositive while sign structure holds
    pub slope_check_u: f64,
    /// support edges at threshold `1e-10 * sup`
    pub support_left_m: f64,
    pub support_right_n: f64,
}

/// Exact CSV header, columns in declaration order.
pub const CSV_HEADER: &str = "t,l1_m,l1_n,consA_mv,consA_nu,consB_mvx,consB_nux,consB_mv,consB_nu,sup_m,sup_n,h1_u,h1_v,indicatorA,indicatorB_inf,indicatorB_cross,continuation_q,slope_check_u,support_left_m,support_right_n";

impl DiagnosticsRecord {
    /// One CSV row; floats as shortest round-trip decimals.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.l1_m,
            self.l1_n,
            self.cons_a_mv,
            self.cons_a_nu,
            self.cons_b_mvx,
            self.cons_b_nux,
            self.cons_b_mv,
            self.cons_b_nu,
            self.sup_m,
            self.sup_n,
            self.h1_u,
            self.h1_v,
            self.indicator_a,
            self.indicator_b_inf,
            self.indicator_b_cross,
            self.continuation_q,
            self.slope_check_u,
            self.support_left_m,
            self.support_right_n
        )
    }
}

fn inf_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn support_edges(f: &Field) -> (f64, f64) {
    let sup = f.sup_norm();
    if sup == 0.0 {
        return (0.0, 0.0);
    }
    let thresh = 1e-10 * sup;
    let nodes = f.grid().nodes();
    let v = f.values();
    let left = v.iter().position(|x| x.abs() > thresh).map_or(0.0, |i| nodes[i]);
    let right = v.iter().rposition(|x| x.abs() > thresh).map_or(0.0, |i| nodes[i]);
    (left, right)
}

/// Compute a record with `continuation_q = 0`; see [`DiagnosticsTrack`] for
/// the time-accumulated version.
pub fn sample(state: &State, derived: &DerivedFields) -> DiagnosticsRecord {
    let m = &state.m;
    let n = &state.n;
    let a = derived.a();
    let b = derived.b();

    let indicator_a = inf_of(
        m.values()
            .iter()
            .zip(b.values())
            .zip(n.values().iter().zip(a.values()))
            .map(|((&mi, &bi), (&ni, &ai))| mi * bi - ni * ai),
    );
    let indicator_b_inf = inf_of(
        m.values()
            .iter()
            .zip(derived.v_x.values())
            .zip(n.values().iter().zip(derived.u_x.values()))
            .map(|((&mi, &vxi), (&ni, &uxi))| mi * vxi + ni * uxi),
    );
    let indicator_b_cross = derived
        .u
        .values()
        .iter()
        .zip(derived.v_x.values())
        .zip(derived.v.values().iter().zip(derived.u_x.values()))
        .fold(0.0_f64, |acc, ((&ui, &vxi), (&vi, &uxi))| {
            acc.max((ui * vxi - vi * uxi).abs())
        });
    let slope_check_u = derived
        .u_x
        .values()
        .iter()
        .zip(derived.u.values())
        .fold(f64::NEG_INFINITY, |acc, (&uxi, &ui)| acc.max(uxi.abs() - ui.abs()));

    let (support_left_m, _) = support_edges(m);
    let (_, support_right_n) = support_edges(n);

    DiagnosticsRecord {
        t: state.t,
        l1_m: integrate_abs(m),
        l1_n: integrate_abs(n),
        cons_a_mv: integrate(&m.mul_pointwise(&b)),
        cons_a_nu: integrate(&n.mul_pointwise(&a)),
        cons_b_mvx: integrate(&m.mul_pointwise(&derived.v_x)),
        cons_b_nux: integrate(&n.mul_pointwise(&derived.u_x)),
        cons_b_mv: integrate(&m.mul_pointwise(&derived.v)),
        cons_b_nu: integrate(&n.mul_pointwise(&derived.u)),
        sup_m: m.sup_norm(),
        sup_n: n.sup_norm(),
        h1_u: h1_norm(&derived.u, &derived.u_x),
        h1_v: h1_norm(&derived.v, &derived.v_x),
        indicator_a,
        indicator_b_inf,
        indicator_b_cross,
        continuation_q: 0.0,
        slope_check_u,
        support_left_m,
        support_right_n,
    }
}

/// Record sequence with the continuation functional accumulated by
/// trapezoid in time.
#[derive(Default)]
pub struct DiagnosticsTrack {
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsTrack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: &State, derived: &DerivedFields) {
        let mut rec = sample(state, derived);
        if let Some(prev) = self.records.last() {
            let f_prev = prev.sup_m.max(prev.sup_n).powi(2);
            let f_now = rec.sup_m.max(rec.sup_n).powi(2);
            rec.continuation_q =
                prev.continuation_q + 0.5 * (rec.t - prev.t) * (f_prev + f_now);
        }
        self.records.push(rec);
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    /// Max relative drift of a conserved column over the whole track,
    /// normalized by `max(|initial|, floor)`.
    pub fn relative_drift(&self, column: impl Fn(&DiagnosticsRecord) -> f64, floor: f64) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let base = column(first).abs().max(floor);
        self.records
            .iter()
            .map(|r| (column(r) - column(first)).abs() / base)
            .fold(0.0, f64::max)
    }
}

/// Exponential-envelope growth rate for the `H^1` energy
/// `X = |u|_{H1}^2 + |v|_{H1}^2` of sign-definite data:
/// `kappa = 1/2 (|(v0+v0x) m0|_L1 + |(u0-u0x) n0|_L1)` for system A (and
/// the cubic reduction), `1/2 (|m0 v0|_L1 + |n0 u0|_L1)` for system B.
pub fn h1_envelope_rate(state0: &State, derived0: &DerivedFields) -> f64 {
    match state0.kind {
        crate::dynamics::SystemKind::SystemB => {
            0.5 * (integrate_abs(&state0.m.mul_pointwise(&derived0.v))
                + integrate_abs(&state0.n.mul_pointwise(&derived0.u)))
        }
        _ => {
            0.5 * (integrate_abs(&state0.m.mul_pointwise(&derived0.b()))
                + integrate_abs(&state0.n.mul_pointwise(&derived0.a())))
        }
    }
}

/// `envelope(t) - actual(t)` for the `H^1` energy, where
/// `envelope(t) = (h1_u(0)^2 + h1_v(0)^2) exp(kappa (t - t0))`.
/// A margin below `-1e-6 * envelope` violates the growth bound.
pub fn h1_envelope_margin(rec: &DiagnosticsRecord, rec0: &DiagnosticsRecord, kappa: f64) -> f64 {
    let x0 = rec0.h1_u * rec0.h1_u + rec0.h1_v * rec0.h1_v;
    let envelope = x0 * (kappa * (rec.t - rec0.t)).exp();
    let actual = rec.h1_u * rec.h1_u + rec.h1_v * rec.h1_v;
    envelope - actual
}

pub const H1_ENVELOPE_REL_TOL: f64 = 1e-6;

/// Separated-support residual: `max |m|` left of `q(t, b)` plus `max |n|`
/// right of `q(t, a)` plus the sup of the system A indicator field, which
/// the separated-support mechanism keeps identically zero.
pub fn support_separation_check(
    state: &State,
    derived: &DerivedFields,
    q_at_b: f64,
    q_at_a: f64,
) -> f64 {
    let nodes = state.grid().nodes();
    let mut m_left: f64 = 0.0;
    let mut n_right: f64 = 0.0;
    for (i, &x) in nodes.iter().enumerate() {
        if x < q_at_b {
            m_left = m_left.max(state.m.values()[i].abs());
        }
        if x > q_at_a {
            n_right = n_right.max(state.n.values()[i].abs());
        }
    }
    let a = derived.a();
    let b = derived.b();
    let indicator_sup = state
        .m
        .values()
        .iter()
        .zip(b.values())
        .zip(state.n.values().iter().zip(a.values()))
        .fold(0.0_f64, |acc, ((&mi, &bi), (&ni, &ai))| {
            acc.max((mi * bi - ni * ai).abs())
        });
    m_left + n_right + indicator_sup
}
