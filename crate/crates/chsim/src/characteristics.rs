//! Characteristic curves, their Jacobians, and the pull-back identities.
//!
//! Along the flow `q_t = velocity(t, q)` the Jacobian obeys
//! `(log q_x)_t = stretch(t, q)`, so `q_x` is evolved in log space and stays
//! positive by construction, matching the diffeomorphism property of the
//! flow map. System B additionally accumulates the reaction phase
//! `1/2 int (u v_x - v u_x)(tau, q) dtau` per seed; the momenta pull back as
//!
//! - systems A / cubic:  `m(t, q(t,x)) q_x(t,x) = m0(x)`,
//! - system B:           `m(t, q) q_x = m0(x) exp(+phase)`,
//!                        `n(t, q) q_x = n0(x) exp(-phase)`.
//!
//! Off-grid values come from trigonometric interpolation, consistent with
//! the spectral field representation. Seed updates are independent and run
//! in parallel across seeds.

use crate::dynamics::{DerivedFields, State, SystemKind};
use crate::grid::Field;
use crate::par;
use crate::spectral::TrigInterp;

#[derive(Clone, Debug)]
struct SeedTrack {
    seed: f64,
    q: f64,
    log_qx: f64,
    phase: f64,
    m0: f64,
    n0: f64,
}

/// Seed points co-advected with a run.
#[derive(Clone, Debug)]
pub struct CharacteristicBundle {
    kind: SystemKind,
    tracks: Vec<SeedTrack>,
    half_length: f64,
    left_box: bool,
}

impl CharacteristicBundle {
    /// Seed the bundle on the initial state. Seeds are sorted; initial
    /// momenta are sampled by trigonometric interpolation.
    pub fn new(state: &State, mut seeds: Vec<f64>) -> Self {
        seeds.sort_by(|a, b| a.partial_cmp(b).expect("seed positions must be comparable"));
        seeds.dedup();
        let m_interp = TrigInterp::new(&state.m);
        let n_interp = TrigInterp::new(&state.n);
        let tracks = seeds
            .into_iter()
            .map(|x| SeedTrack {
                seed: x,
                q: x,
                log_qx: 0.0,
                phase: 0.0,
                m0: m_interp.eval(x),
                n0: n_interp.eval(x),
            })
            .collect();
        CharacteristicBundle {
            kind: state.kind,
            tracks,
            half_length: state.grid().half_length(),
            left_box: false,
        }
    }

    /// Uniform seeds across the joint support of `|m0| + |n0|` plus caller
    /// extras (blow-up probes, support edges).
    pub fn with_default_seeds(state: &State, count: usize, extra: &[f64]) -> Self {
        let mut seeds = default_seed_positions(&state.m, &state.n, count);
        seeds.extend_from_slice(extra);
        Self::new(state, seeds)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn seeds(&self) -> Vec<f64> {
        self.tracks.iter().map(|t| t.seed).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.tracks.iter().map(|t| t.q).collect()
    }

    pub fn jacobians(&self) -> Vec<f64> {
        self.tracks.iter().map(|t| t.log_qx.exp()).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.tracks.iter().map(|t| t.phase).collect()
    }

    pub fn initial_momenta(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.tracks.iter().map(|t| t.m0).collect(),
            self.tracks.iter().map(|t| t.n0).collect(),
        )
    }

    /// Position of the track launched nearest to `x0`.
    pub fn position_of_seed(&self, x0: f64) -> Option<f64> {
        self.tracks
            .iter()
            .min_by(|a, b| {
                (a.seed - x0)
                    .abs()
                    .partial_cmp(&(b.seed - x0).abs())
                    .expect("seed distances must be comparable")
            })
            .map(|t| t.q)
    }

    /// Advance every seed through one RK4 step using the four stage fields
    /// of the co-evolving momentum step (stages at `t, t+dt/2, t+dt/2, t+dt`).
    pub fn rk4_advance(&mut self, stages: [&DerivedFields; 4], dt: f64) {
        self.rk4_advance_mode(par::ExecMode::Auto, stages, dt);
    }

    /// [`Self::rk4_advance`] with an explicit execution mode (seed updates
    /// are independent; the bench suite compares the two paths).
    pub fn rk4_advance_mode(&mut self, mode: par::ExecMode, stages: [&DerivedFields; 4], dt: f64) {
        let vel: Vec<TrigInterp> = stages.iter().map(|d| TrigInterp::new(&d.velocity)).collect();
        let str_: Vec<TrigInterp> = stages.iter().map(|d| TrigInterp::new(&d.stretch)).collect();
        let reac: Option<Vec<TrigInterp>> = if self.kind == SystemKind::SystemB {
            Some(
                stages
                    .iter()
                    .map(|d| {
                        TrigInterp::new(d.reaction.as_ref().expect("system B reaction field"))
                    })
                    .collect(),
            )
        } else {
            None
        };

        par::for_each_slot_mode(mode, &mut self.tracks, |_, tr| {
            let eval = |stage: usize, q: f64| {
                let v = vel[stage].eval(q);
                let s = str_[stage].eval(q);
                let p = reac.as_ref().map_or(0.0, |r| r[stage].eval(q));
                (v, s, p)
            };
            let (k1q, k1l, k1p) = eval(0, tr.q);
            let (k2q, k2l, k2p) = eval(1, tr.q + 0.5 * dt * k1q);
            let (k3q, k3l, k3p) = eval(2, tr.q + 0.5 * dt * k2q);
            let (k4q, k4l, k4p) = eval(3, tr.q + dt * k3q);
            let w = dt / 6.0;
            tr.q += w * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            tr.log_qx += w * (k1l + 2.0 * k2l + 2.0 * k3l + k4l);
            tr.phase += w * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        });

        if !self.left_box && self.tracks.iter().any(|t| t.q.abs() >= self.half_length) {
            self.left_box = true;
            eprintln!(
                "warning: a characteristic left the box [-{l}, {l}); positions continue on the periodic extension",
                l = self.half_length
            );
        }
    }

    /// Per-seed pull-back residuals against the transported initial momenta.
    pub fn pullback_residual(&self, state: &State) -> PullbackResiduals {
        self.pullback_residual_mode(par::ExecMode::Auto, state)
    }

    pub fn pullback_residual_mode(&self, mode: par::ExecMode, state: &State) -> PullbackResiduals {
        assert_eq!(state.kind, self.kind, "bundle and state disagree on the system");
        let m_interp = TrigInterp::new(&state.m);
        let n_interp = TrigInterp::new(&state.n);
        let kind = self.kind;
        let tracks = &self.tracks;
        let mut res: Vec<(f64, f64)> = vec![(0.0, 0.0); tracks.len()];
        par::for_each_slot_mode(mode, &mut res, |i, slot| {
            let tr = &tracks[i];
            let qx = tr.log_qx.exp();
            let (expect_m, expect_n) = match kind {
                SystemKind::SystemB => (tr.m0 * tr.phase.exp(), tr.n0 * (-tr.phase).exp()),
                _ => (tr.m0, tr.n0),
            };
            *slot = (
                m_interp.eval(tr.q) * qx - expect_m,
                n_interp.eval(tr.q) * qx - expect_n,
            );
        });
        PullbackResiduals {
            res_m: res.iter().map(|r| r.0).collect(),
            res_n: res.iter().map(|r| r.1).collect(),
        }
    }

    /// Positions strictly increasing in seed order (sample-resolution check
    /// of the diffeomorphism property).
    pub fn is_monotone(&self) -> bool {
        self.tracks.windows(2).all(|w| w[0].q < w[1].q)
    }
}

pub struct PullbackResiduals {
    pub res_m: Vec<f64>,
    pub res_n: Vec<f64>,
}

impl PullbackResiduals {
    pub fn max_abs(&self) -> f64 {
        self.res_m
            .iter()
            .chain(self.res_n.iter())
            .fold(0.0, |acc, r| acc.max(r.abs()))
    }
}

/// Extrema of the momenta over the grid, for sign-preservation monitoring.
pub fn sign_census(state: &State) -> (f64, f64, f64, f64) {
    (state.m.min(), state.n.min(), state.m.max(), state.n.max())
}

/// Uniform positions across the numerical support of `|m0| + |n0|`.
pub fn default_seed_positions(m0: &Field, n0: &Field, count: usize) -> Vec<f64> {
    let grid = m0.grid();
    let joint: Vec<f64> = m0
        .values()
        .iter()
        .zip(n0.values())
        .map(|(&a, &b)| a.abs() + b.abs())
        .collect();
    let sup = joint.iter().fold(0.0_f64, |a, &b| a.max(b));
    if sup == 0.0 || count == 0 {
        return (0..count)
            .map(|i| -grid.half_length() + (i as f64 + 0.5) * 2.0 * grid.half_length() / count.max(1) as f64)
            .collect();
    }
    let thresh = 1e-10 * sup;
    let first = joint.iter().position(|&v| v > thresh).unwrap_or(0);
    let last = joint.iter().rposition(|&v| v > thresh).unwrap_or(joint.len() - 1);
    let lo = grid.nodes()[first];
    let hi = grid.nodes()[last];
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InitSpec;
    use crate::grid::{Field, Grid1D};
    use std::sync::Arc;

    fn zero_derived(g: &Arc<Grid1D>) -> DerivedFields {
        let z = Field::zeros(g.clone());
        DerivedFields {
            u: z.clone(),
            u_x: z.clone(),
            v: z.clone(),
            v_x: z.clone(),
            velocity: z.clone(),
            stretch: z.clone(),
            reaction: Some(z),
        }
    }

    #[test]
    fn zero_fields_leave_bundle_fixed() {
        let g = Grid1D::new(64, 10.0).unwrap();
        let s = State::new(SystemKind::SystemB, Field::zeros(g.clone()), Field::zeros(g.clone()));
        let mut b = CharacteristicBundle::new(&s, vec![-3.0, 0.0, 2.5]);
        let d = zero_derived(&g);
        for _ in 0..5 {
            b.rk4_advance([&d, &d, &d, &d], 0.1);
        }
        assert_eq!(b.positions(), vec![-3.0, 0.0, 2.5]);
        assert_eq!(b.jacobians(), vec![1.0, 1.0, 1.0]);
        assert_eq!(b.phases(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_velocity_translates_seeds() {
        let g = Grid1D::new(64, 10.0).unwrap();
        let s = State::new(SystemKind::SystemA, Field::zeros(g.clone()), Field::zeros(g.clone()));
        let mut b = CharacteristicBundle::new(&s, vec![-1.0, 1.0]);
        let c = 0.7;
        let mut d = zero_derived(&g);
        d.velocity = Field::from_fn(g, move |_| c);
        let dt = 0.05;
        for _ in 0..20 {
            b.rk4_advance([&d, &d, &d, &d], dt);
        }
        let t = 20.0 * dt;
        assert!((b.positions()[0] - (-1.0 + c * t)).abs() < 1e-12);
        assert!((b.positions()[1] - (1.0 + c * t)).abs() < 1e-12);
        assert_eq!(b.jacobians(), vec![1.0, 1.0]);
    }

    #[test]
    fn pullback_zero_at_t0_and_for_zero_state() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let m0 = InitSpec::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 }.build(&g).unwrap();
        let s = State::new(SystemKind::SystemA, m0.clone(), m0);
        let b = CharacteristicBundle::with_default_seeds(&s, 16, &[]);
        assert!(b.pullback_residual(&s).max_abs() < 1e-13);

        let z = State::new(SystemKind::SystemA, Field::zeros(g.clone()), Field::zeros(g));
        let bz = CharacteristicBundle::new(&z, vec![-2.0, 2.0]);
        assert_eq!(bz.pullback_residual(&z).max_abs(), 0.0);
    }

    #[test]
    fn sign_census_reports_extrema() {
        let g = Grid1D::new(64, 10.0).unwrap();
        let m = Field::from_fn(g.clone(), |x| x.sin());
        let n = Field::from_fn(g, |_| 2.0);
        let s = State::new(SystemKind::SystemA, m, n);
        let (min_m, min_n, max_m, max_n) = sign_census(&s);
        assert!(min_m < -0.99 && max_m > 0.99);
        assert_eq!(min_n, 2.0);
        assert_eq!(max_n, 2.0);
    }

    #[test]
    fn default_seeds_cover_support() {
        let g = Grid1D::new(512, 20.0).unwrap();
        let m0 = InitSpec::Bump { amplitude: 1.0, center: 5.0, radius: 2.0 }.build(&g).unwrap();
        let n0 = InitSpec::Bump { amplitude: 1.0, center: -5.0, radius: 2.0 }.build(&g).unwrap();
        let seeds = default_seed_positions(&m0, &n0, 8);
        assert_eq!(seeds.len(), 8);
        assert!(seeds[0] >= -7.1 && seeds[0] <= -6.9);
        assert!(seeds[7] >= 6.9 && seeds[7] <= 7.1);
    }
}
