//! System definitions and right-hand-side evaluation.
//!
//! Three momentum systems share one state layout. With `u = (1-d_xx)^{-1} m`
//! and `v = (1-d_xx)^{-1} n`:
//!
//! - system A:  `m_t + 1/2 ((u-u_x)(v+v_x) m)_x = 0`, same flux for `n`;
//! - system B:  `m_t + 1/2 ((u v - u_x v_x) m)_x - 1/2 (u v_x - v u_x) m = 0`,
//!   `n` with the reaction sign flipped;
//! - cubic:     `m_t + (m (u^2 - u_x^2))_x = 0`, single component.
//!
//! Setting `v = 2u` reduces both two-component systems to the cubic
//! equation; the cubic right-hand side is implemented independently so the
//! reduction can serve as a cross-check oracle.
//!
//! All fluxes are kept in divergence form `d_x(product)` with de-aliased
//! triple products, which conserves `integral m` to round-off.

use crate::grid::{Field, Grid1D};
use crate::kernel;
use crate::quad::adaptive_simpson;
use crate::spectral::{dealiased_product, derivative, helmholtz_solve};
use crate::{ChError, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Flux `1/2 (u-u_x)(v+v_x)`, no reaction.
    SystemA,
    /// Flux `1/2 (uv - u_x v_x)` plus the `1/2 (u v_x - v u_x)` reaction.
    SystemB,
    /// One-component cubic equation; evolves `m` only, `v = 2u` implied.
    CubicCh,
}

impl SystemKind {
    pub fn is_two_component(self) -> bool {
        !matches!(self, SystemKind::CubicCh)
    }
}

/// The evolved momentum pair at a fixed time.
#[derive(Clone, Debug)]
pub struct State {
    pub kind: SystemKind,
    pub t: f64,
    pub m: Field,
    pub n: Field,
}

impl State {
    pub fn new(kind: SystemKind, m: Field, n: Field) -> Self {
        State { kind, t: 0.0, m, n }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        self.m.grid()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.m.check_finite("state field m")?;
        self.n.check_finite("state field n")
    }
}

/// Velocities and composites reconstructed from the momenta.
#[derive(Clone, Debug)]
pub struct DerivedFields {
    pub u: Field,
    pub u_x: Field,
    pub v: Field,
    pub v_x: Field,
    /// Transport speed multiplying the momenta inside the flux.
    pub velocity: Field,
    /// `d_x velocity` in product form; the characteristic-Jacobian growth
    /// rate (`1/2 (m(v+v_x) - n(u-u_x))` for A, `1/2 (m v_x + n u_x)` for B,
    /// `2 m u_x` for the cubic equation).
    pub stretch: Field,
    /// System B only: `1/2 (u v_x - v u_x)`.
    pub reaction: Option<Field>,
}

impl DerivedFields {
    /// `u - u_x`
    pub fn a(&self) -> Field {
        self.u.sub(&self.u_x)
    }

    /// `v + v_x`
    pub fn b(&self) -> Field {
        self.v.add(&self.v_x)
    }
}

/// Reconstruct `(u, u_x, v, v_x)` and the per-system composites.
pub fn reconstruct(s: &State) -> Result<DerivedFields> {
    s.check_finite()?;
    let u = helmholtz_solve(&s.m);
    let u_x = derivative(&u);
    let (v, v_x) = match s.kind {
        SystemKind::CubicCh => (u.scale(2.0), u_x.scale(2.0)),
        _ => {
            let v = helmholtz_solve(&s.n);
            let v_x = derivative(&v);
            (v, v_x)
        }
    };
    let (velocity, stretch, reaction) = match s.kind {
        SystemKind::SystemA => {
            let a = u.sub(&u_x);
            let b = v.add(&v_x);
            let velocity = dealiased_product(&[&a, &b]).scale(0.5);
            let stretch = dealiased_product(&[&s.m, &b])
                .sub(&dealiased_product(&[&s.n, &a]))
                .scale(0.5);
            (velocity, stretch, None)
        }
        SystemKind::SystemB => {
            let velocity = dealiased_product(&[&u, &v])
                .sub(&dealiased_product(&[&u_x, &v_x]))
                .scale(0.5);
            let stretch = dealiased_product(&[&s.m, &v_x])
                .add(&dealiased_product(&[&s.n, &u_x]))
                .scale(0.5);
            let reaction = dealiased_product(&[&u, &v_x])
                .sub(&dealiased_product(&[&v, &u_x]))
                .scale(0.5);
            (velocity, stretch, Some(reaction))
        }
        SystemKind::CubicCh => {
            let velocity = dealiased_product(&[&u, &u]).sub(&dealiased_product(&[&u_x, &u_x]));
            let stretch = dealiased_product(&[&s.m, &u_x]).scale(2.0);
            (velocity, stretch, None)
        }
    };
    Ok(DerivedFields {
        u,
        u_x,
        v,
        v_x,
        velocity,
        stretch,
        reaction,
    })
}

/// Momentum tendencies `(dm/dt, dn/dt)`.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub dm: Field,
    pub dn: Field,
}

/// Evaluate the right-hand side together with the derived fields it used.
pub fn rhs_with_derived(s: &State) -> Result<(Tendency, DerivedFields)> {
    let d = reconstruct(s)?;
    let tendency = match s.kind {
        SystemKind::SystemA => {
            let a = d.a();
            let b = d.b();
            let dm = derivative(&dealiased_product(&[&a, &b, &s.m])).scale(-0.5);
            let dn = derivative(&dealiased_product(&[&a, &b, &s.n])).scale(-0.5);
            Tendency { dm, dn }
        }
        SystemKind::SystemB => {
            let flux_part = |w: &Field| {
                derivative(
                    &dealiased_product(&[&d.u, &d.v, w])
                        .sub(&dealiased_product(&[&d.u_x, &d.v_x, w])),
                )
                .scale(-0.5)
            };
            let react_part = |w: &Field| {
                dealiased_product(&[&d.u, &d.v_x, w])
                    .sub(&dealiased_product(&[&d.v, &d.u_x, w]))
                    .scale(0.5)
            };
            let dm = flux_part(&s.m).add(&react_part(&s.m));
            let dn = flux_part(&s.n).sub(&react_part(&s.n));
            Tendency { dm, dn }
        }
        SystemKind::CubicCh => {
            let flux = dealiased_product(&[&d.u, &d.u, &s.m])
                .sub(&dealiased_product(&[&d.u_x, &d.u_x, &s.m]));
            let dm = derivative(&flux).scale(-1.0);
            let dn = Field::zeros(s.grid().clone());
            Tendency { dm, dn }
        }
    };
    Ok((tendency, d))
}

pub fn rhs(s: &State) -> Result<Tendency> {
    rhs_with_derived(s).map(|(t, _)| t)
}

// ---------------------------------------------------------------------------
// Initial data families
// ---------------------------------------------------------------------------

/// Named initial-momentum families. Amplitudes may be negative, which is
/// how sign-definite data of either sign is selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Zero,
    /// `amplitude * exp(-((x-center)/width)^2)`
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// Smooth compactly supported profile
    /// `amplitude * exp(1 - 1/(1 - s^2))`, `s = (x-center)/radius`.
    Bump { amplitude: f64, center: f64, radius: f64 },
    /// Peakon momentum `2c delta(x-center)` mollified to width `eps`;
    /// total momentum is exactly `2c`.
    MollifiedPeakon { c: f64, center: f64, eps: f64 },
}

/// `integral_{-1}^{1} exp(1 - 1/(1-s^2)) ds`, the bump normalizer.
pub fn bump_profile_mass() -> f64 {
    use std::sync::OnceLock;
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| adaptive_simpson(&|s| bump_profile(s), -1.0, 1.0, 1e-14))
}

fn bump_profile(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Relative size at the box edge above which data is rejected as not
/// effectively compact.
const EDGE_REL_TOL: f64 = 1e-8;

impl InitSpec {
    /// Realize the family on a grid, validating width and box fit.
    pub fn build(&self, grid: &Arc<Grid1D>) -> Result<Field> {
        let l = grid.half_length();
        let dx = grid.dx();
        let reject = |msg: String| Err(ChError::BadInitialData(msg));
        match *self {
            InitSpec::Zero => Ok(Field::zeros(grid.clone())),
            InitSpec::Gaussian { amplitude, center, width } => {
                if !(width.is_finite() && width >= 4.0 * dx) {
                    return reject(format!("gaussian width {width} below 4 dx = {}", 4.0 * dx));
                }
                // exp(-d^2/w^2) <= EDGE_REL_TOL at the nearest box edge
                let d = l - center.abs();
                if d <= 0.0 || (-(d / width) * (d / width)).exp() > EDGE_REL_TOL {
                    return reject(format!(
                        "gaussian(center {center}, width {width}) does not decay inside the box [-{l}, {l})"
                    ));
                }
                Ok(Field::from_fn(grid.clone(), move |x| {
                    let s = (x - center) / width;
                    amplitude * (-s * s).exp()
                }))
            }
            InitSpec::Bump { amplitude, center, radius } => {
                if !(radius.is_finite() && radius >= 4.0 * dx) {
                    return reject(format!("bump radius {radius} below 4 dx = {}", 4.0 * dx));
                }
                if center - radius <= -l || center + radius >= l {
                    return reject(format!(
                        "bump support [{}, {}] exceeds the box [-{l}, {l})",
                        center - radius,
                        center + radius
                    ));
                }
                Ok(Field::from_fn(grid.clone(), move |x| {
                    amplitude * bump_profile((x - center) / radius)
                }))
            }
            InitSpec::MollifiedPeakon { c, center, eps } => {
                if !(eps.is_finite() && eps >= 4.0 * dx) {
                    return reject(format!("mollifier width {eps} below 4 dx = {}", 4.0 * dx));
                }
                if center - eps <= -l || center + eps >= l {
                    return reject(format!(
                        "mollified peakon support [{}, {}] exceeds the box",
                        center - eps,
                        center + eps
                    ));
                }
                // normalize against the grid quadrature rather than the
                // continuum bump mass, so the discrete momentum is exactly 2c
                let raw = Field::from_fn(grid.clone(), move |x| bump_profile((x - center) / eps));
                let mass = crate::spectral::integrate(&raw);
                debug_assert!((mass - eps * bump_profile_mass()).abs() < 0.01 * mass);
                Ok(raw.scale(2.0 * c / mass))
            }
        }
    }
}

/// Build a full state from the two momentum specs.
pub fn initial_state(kind: SystemKind, m0: &InitSpec, n0: &InitSpec, grid: &Arc<Grid1D>) -> Result<State> {
    let m = m0.build(grid)?;
    let n = n0.build(grid)?;
    Ok(State::new(kind, m, n))
}

/// Reflection `x -> -x` on the grid. Node `x_i` maps to `x_{(n-i) mod n}`;
/// the `-L` node is its own image through periodic wrap.
pub fn reflect(f: &Field) -> Field {
    let n = f.len();
    let v = f.values();
    let values = (0..n).map(|i| v[(n - i) % n]).collect();
    Field::new(f.grid().clone(), values)
}

/// Evaluate `u - u_x` via the one-sided kernel integral (the line-form
/// identity used to monitor sign structure).
pub fn one_sided_a(m: &Field) -> Field {
    kernel::one_sided(m).u_minus_ux
}
