//! Deterministic reachable-set over-approximations.
//!
//! Two engines are provided:
//!
//! * contraction tubes: with `μ(D_x f) ≤ c` and `‖D_u f‖ ≤ ℓ`, every
//!   trajectory from `B(r₁, x*₀)` under inputs in `B(r₂, u*)` stays in
//!   `B(r_t, x*_t)` with `r_t = e^{ct} r₁ + (ℓ/c)(e^{ct} − 1) r₂`;
//! * interval embedding systems: integrating `[ẋ̲; ẋ̄] = [F̲; F̄]` from the
//!   initial box brackets every trajectory at every time.
//!
//! [`transform_system`] applies a linear change of coordinates `y = Tx`, which
//! turns interval boxes in `y` into parallelotopes in `x`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dynamics::{self, InputSignal, SystemModel, Trajectory};
use crate::interval::Interval;
use crate::linalg;
use crate::setcalc::{ConvexSet, Ellipsoid, IntervalBox, WeightedNorm};
use crate::{Error, Matrix, Result, Vector};

pub type InclusionFn = Arc<dyn Fn(f64, &Vector, &Vector, &Vector, &Vector) -> (Vector, Vector) + Send + Sync>;

/// What an inclusion function promises, which decides how it is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InclusionKind {
    /// `F̲ ≤ f(z, w) ≤ F̄` for every `z` in the state box and `w` in the input box.
    Full,
    /// The bound on component `i` only holds on the faces `z_i = x̲_i`
    /// (lower) and `z_i = x̄_i` (upper). This is all the embedding system needs.
    Faces,
    /// `F = (f(x̲, u̲), f(x̄, ū))`; only valid when the system is cooperative and
    /// nondecreasing in the input on the region visited, see [`monotone_check`].
    Endpoint,
}

/// Box-valued bound `(t, x̲, x̄, u̲, ū) ↦ (F̲, F̄)` on the vector field.
#[derive(Clone)]
pub struct InclusionFunction {
    f: InclusionFn,
    kind: InclusionKind,
    state_dim: usize,
    input_dim: usize,
}

impl core::fmt::Debug for InclusionFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("InclusionFunction")
            .field("kind", &self.kind)
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

impl InclusionFunction {
    /// A user-supplied inclusion function in the sense of `F̲ ≤ f ≤ F̄` on boxes.
    pub fn new<F>(state_dim: usize, input_dim: usize, f: F) -> Self
    where
        F: Fn(f64, &Vector, &Vector, &Vector, &Vector) -> (Vector, Vector) + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), kind: InclusionKind::Full, state_dim, input_dim }
    }

    /// `(f(t, x̲, u̲), f(t, x̄, ū))`.
    pub fn endpoint(sys: &SystemModel) -> Self {
        let drift = sys.drift_fn().clone();
        Self {
            f: Arc::new(move |t, xl, xh, ul, uh| (drift(t, xl, ul), drift(t, xh, uh))),
            kind: InclusionKind::Endpoint,
            state_dim: sys.state_dim(),
            input_dim: sys.input_dim(),
        }
    }

    /// Embedding built from a natural interval extension `ext(t, [x], [u])`.
    ///
    /// Component `i` of the lower (upper) bound evaluates the extension on the
    /// box whose `i`-th side is collapsed to `x̲_i` (`x̄_i`). This avoids the
    /// spurious growth a diagonal term would otherwise cause.
    pub fn natural<F>(state_dim: usize, input_dim: usize, ext: F) -> Self
    where
        F: Fn(f64, &[Interval], &[Interval]) -> Vec<Interval> + Send + Sync + 'static,
    {
        let f = move |t: f64, xl: &Vector, xh: &Vector, ul: &Vector, uh: &Vector| {
            let n = xl.len();
            let mut xs: Vec<Interval> = (0..n).map(|i| Interval { lo: xl[i], hi: xh[i] }).collect();
            let us: Vec<Interval> = (0..ul.len()).map(|i| Interval { lo: ul[i], hi: uh[i] }).collect();
            let mut lo = Vector::zeros(n);
            let mut hi = Vector::zeros(n);
            for i in 0..n {
                let keep = xs[i];
                xs[i] = Interval::point(xl[i]);
                lo[i] = ext(t, &xs, &us)[i].lo;
                xs[i] = Interval::point(xh[i]);
                hi[i] = ext(t, &xs, &us)[i].hi;
                xs[i] = keep;
            }
            (lo, hi)
        };
        Self { f: Arc::new(f), kind: InclusionKind::Faces, state_dim, input_dim }
    }

    pub fn kind(&self) -> InclusionKind {
        self.kind
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn eval(&self, t: f64, xl: &Vector, xh: &Vector, ul: &Vector, uh: &Vector) -> Result<(Vector, Vector)> {
        Error::check_dim(self.state_dim, xl.len())?;
        Error::check_dim(self.state_dim, xh.len())?;
        Error::check_dim(self.input_dim, ul.len())?;
        Error::check_dim(self.input_dim, uh.len())?;
        let (lo, hi) = (self.f)(t, xl, xh, ul, uh);
        Error::check_dim(self.state_dim, lo.len())?;
        Error::check_dim(self.state_dim, hi.len())?;
        Ok((lo, hi))
    }

    /// Largest violation of the promised bound over random sub-boxes of
    /// `state_box × input_box` and random points in them (0 when sound on
    /// the sample).
    pub fn sampled_violation(
        &self,
        sys: &SystemModel,
        state_box: &IntervalBox,
        input_box: &IntervalBox,
        n_samples: usize,
        seed: u64,
    ) -> Result<f64> {
        let n = self.state_dim;
        let p = self.input_dim;
        let mut rng = dynamics::NoiseStream::new(seed, 0x1c);
        let mut worst = 0.0_f64;
        let draw = |bx: &IntervalBox, rng: &mut dynamics::NoiseStream| -> (Vector, Vector) {
            let d = bx.dim();
            let mut lo = Vector::zeros(d);
            let mut hi = Vector::zeros(d);
            for i in 0..d {
                let a = bx.lo()[i] + rng.uniform() * (bx.hi()[i] - bx.lo()[i]);
                let b = bx.lo()[i] + rng.uniform() * (bx.hi()[i] - bx.lo()[i]);
                lo[i] = a.min(b);
                hi[i] = a.max(b);
            }
            (lo, hi)
        };
        for _ in 0..n_samples {
            let (xl, xh) = draw(state_box, &mut rng);
            let (ul, uh) = draw(input_box, &mut rng);
            let (fl, fh) = self.eval(0.0, &xl, &xh, &ul, &uh)?;
            let mut z = Vector::zeros(n);
            let mut w = Vector::zeros(p);
            for i in 0..n {
                z[i] = xl[i] + rng.uniform() * (xh[i] - xl[i]);
            }
            for j in 0..p {
                w[j] = ul[j] + rng.uniform() * (uh[j] - ul[j]);
            }
            for i in 0..n {
                match self.kind {
                    InclusionKind::Full => {
                        let f = sys.drift(0.0, &z, &w)?;
                        worst = worst.max(fl[i] - f[i]).max(f[i] - fh[i]);
                    }
                    InclusionKind::Faces | InclusionKind::Endpoint => {
                        let mut zl = z.clone();
                        zl[i] = xl[i];
                        let mut zh = z.clone();
                        zh[i] = xh[i];
                        worst = worst.max(fl[i] - sys.drift(0.0, &zl, &w)?[i]);
                        worst = worst.max(sys.drift(0.0, &zh, &w)?[i] - fh[i]);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Trajectory `t ↦ [x̲_t, x̄_t]` of the embedding system.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTrajectory {
    times: Vec<f64>,
    lo: Vec<Vector>,
    hi: Vec<Vector>,
}

impl EmbeddingTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn lo_states(&self) -> &[Vector] {
        &self.lo
    }

    pub fn hi_states(&self) -> &[Vector] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn box_at_index(&self, k: usize) -> IntervalBox {
        IntervalBox::new(self.lo[k].clone(), self.hi[k].clone()).expect("embedding order is enforced")
    }

    pub fn box_at(&self, t: f64) -> Option<IntervalBox> {
        dynamics::grid_index(&self.times, t).map(|k| self.box_at_index(k))
    }

    /// Smallest box containing every `[x̲_t, x̄_t]`.
    pub fn swept_hull(&self) -> IntervalBox {
        let mut hull = self.box_at_index(0);
        for k in 1..self.len() {
            hull = hull.hull(&self.box_at_index(k)).expect("same dimension");
        }
        hull
    }
}

/// Order slack tolerated between `x̲` and `x̄` before declaring a violation.
pub const ORDER_TOL: f64 = 1e-12;

/// RK4 integration of the `2n`-dimensional embedding system with constant
/// input bounds. An order violation `x̲_i > x̄_i` aborts with
/// [`Error::OrderViolation`].
pub fn embed_integrate(
    inc: &InclusionFunction,
    x0_lo: &Vector,
    x0_hi: &Vector,
    u_lo: &Vector,
    u_hi: &Vector,
    t_end: f64,
    dt: f64,
) -> Result<EmbeddingTrajectory> {
    let n = inc.state_dim;
    Error::check_dim(n, x0_lo.len())?;
    Error::check_dim(n, x0_hi.len())?;
    IntervalBox::new(x0_lo.clone(), x0_hi.clone())?;
    IntervalBox::new(u_lo.clone(), u_hi.clone())?;
    let times = dynamics::time_grid(t_end, dt)?;
    let mut z0 = Vector::zeros(2 * n);
    z0.rows_mut(0, n).copy_from(x0_lo);
    z0.rows_mut(n, n).copy_from(x0_hi);

    let mut lo = Vec::with_capacity(times.len());
    let mut hi = Vec::with_capacity(times.len());
    let mut check = |t: f64, z: &Vector| -> Result<()> {
        for i in 0..n {
            if z[i] > z[n + i] + ORDER_TOL * (1.0 + z[n + i].abs()) {
                return Err(Error::OrderViolation { time: t, component: i, lo: z[i], hi: z[n + i] });
            }
        }
        lo.push(z.rows(0, n).into_owned());
        hi.push(z.rows(n, n).into_owned());
        Ok(())
    };

    let mut z = z0;
    check(times[0], &z)?;
    let rhs = |t: f64, z: &Vector| -> Result<Vector> {
        let (fl, fh) = inc.eval(t, &z.rows(0, n).into_owned(), &z.rows(n, n).into_owned(), u_lo, u_hi)?;
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&fl);
        out.rows_mut(n, n).copy_from(&fh);
        Ok(out)
    };
    for w in times.windows(2) {
        let step = dynamics::rk4_on_grid(rhs, &z, w)?;
        z = step.into_iter().nth(1).expect("two grid points");
        check(w[1], &z)?;
    }
    Ok(EmbeddingTrajectory { times, lo, hi })
}

/// `r_t = e^{ct} r₁ + ℓ r₂ (e^{ct} − 1)/c`, with the `c → 0` limit `ℓ r₂ t`.
pub fn tube_radius(c: f64, ell: f64, r1: f64, r2: f64, t: f64) -> f64 {
    let ct = c * t;
    let growth = if ct.abs() < crate::stochbound::SERIES_THRESHOLD {
        t * (1.0 + ct / 2.0 + ct * ct / 6.0)
    } else {
        ct.exp_m1() / c
    };
    ct.exp() * r1 + ell * r2 * growth
}

/// Nominal trajectory with a norm ball of radius `r_t` around it.
#[derive(Debug, Clone)]
pub struct ContractionTube {
    nominal: Trajectory,
    norm: WeightedNorm,
    c: f64,
    ell: f64,
    r1: f64,
    r2: f64,
}

impl ContractionTube {
    pub fn nominal(&self) -> &Trajectory {
        &self.nominal
    }

    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }

    pub fn radius_at(&self, t: f64) -> f64 {
        tube_radius(self.c, self.ell, self.r1, self.r2, t)
    }

    /// `B(r_t, x*_t)` at a grid time.
    pub fn ball_at(&self, t: f64) -> Result<Ellipsoid> {
        let center =
            self.nominal.state_at(t).ok_or_else(|| Error::arg("requested time is not on the integration grid"))?;
        Ellipsoid::new(center.clone(), self.radius_at(t), self.norm.clone())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn contraction_tube(
    sys: &SystemModel,
    x_star0: &Vector,
    u_star: &InputSignal,
    c: f64,
    ell: f64,
    r1: f64,
    r2: f64,
    norm: &WeightedNorm,
    t_end: f64,
    dt: f64,
) -> Result<ContractionTube> {
    if !(r1 >= 0.0) || !(r2 >= 0.0) {
        return Err(Error::arg("tube radii must be nonnegative"));
    }
    if !c.is_finite() || !(ell >= 0.0) {
        return Err(Error::arg("rate constants must be finite with ell >= 0"));
    }
    Error::check_dim(sys.state_dim(), norm.dim())?;
    let nominal = dynamics::integrate_ode(sys, x_star0, u_star, t_end, dt)?;
    Ok(ContractionTube { nominal, norm: norm.clone(), c, ell, r1, r2 })
}

/// The system in coordinates `y = T x`: `ẏ = T f(t, T⁻¹y, u)`, diffusion `Tσ`.
pub fn transform_system(t_mat: &Matrix, sys: &SystemModel) -> Result<SystemModel> {
    let n = linalg::require_square(t_mat)?;
    Error::check_dim(sys.state_dim(), n)?;
    if !(t_mat.determinant().abs() > 1e-12) {
        return Err(Error::arg("transform is singular"));
    }
    let t_inv = linalg::inverse(t_mat)?;
    let (tm, ti) = (t_mat.clone(), t_inv.clone());
    let f = sys.drift_fn().clone();
    let drift: dynamics::DriftFn = Arc::new(move |t, y, u| &tm * f(t, &(&ti * y), u));
    let (tm, ti) = (t_mat.clone(), t_inv.clone());
    let s = sys.diffusion_fn().clone();
    let diffusion: dynamics::DiffusionFn = Arc::new(move |t, y, u| &tm * s(t, &(&ti * y), u));
    let state_jacobian = sys.state_jacobian_fn().cloned().map(|j| {
        let (tm, ti) = (t_mat.clone(), t_inv.clone());
        let jf: dynamics::JacobianFn = Arc::new(move |t, y, u| &tm * j(t, &(&ti * y), u) * &ti);
        jf
    });
    let input_jacobian = sys.input_jacobian_fn().cloned().map(|j| {
        let (tm, ti) = (t_mat.clone(), t_inv.clone());
        let jf: dynamics::JacobianFn = Arc::new(move |t, y, u| &tm * j(t, &(&ti * y), u));
        jf
    });
    Ok(SystemModel::from_parts(
        (sys.state_dim(), sys.input_dim(), sys.noise_dim()),
        drift,
        diffusion,
        state_jacobian,
        input_jacobian,
    ))
}

/// Result of a sampled cooperativity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub passed: bool,
    /// Magnitude of the most negative off-diagonal (or input) Jacobian entry; 0 if none.
    pub worst_violation: f64,
    pub worst_state: Option<Vector>,
    /// `(row, column, is_input_jacobian)`.
    pub worst_entry: Option<(usize, usize, bool)>,
    pub samples: usize,
}

pub const MONOTONE_TOL: f64 = 1e-9;

/// Samples `D_x f` over `state_box` (Sobol points) and passes iff every
/// off-diagonal entry is `≥ −1e-9`. With an input box, `D_u f ≥ −1e-9` is
/// required as well, since endpoint bounds pair `u̲` with `x̲`.
pub fn monotone_check(
    sys: &SystemModel,
    state_box: &IntervalBox,
    input_box: Option<&IntervalBox>,
    n_samples: usize,
) -> Result<MonotoneReport> {
    let n = sys.state_dim();
    let p = sys.input_dim();
    Error::check_dim(n, state_box.dim())?;
    if let Some(ib) = input_box {
        Error::check_dim(p, ib.dim())?;
    }
    let mut report =
        MonotoneReport { passed: true, worst_violation: 0.0, worst_state: None, worst_entry: None, samples: n_samples };
    let default_u = input_box.map(|b| b.center()).unwrap_or_else(|| Vector::zeros(p));
    for k in 0..n_samples {
        let x = crate::certify::sobol_point(state_box, k as u32, 0);
        let u = match input_box {
            Some(ib) => crate::certify::sobol_point(ib, k as u32, n as u32),
            None => default_u.clone(),
        };
        let jx = sys.state_jacobian(0.0, &x, &u)?;
        for i in 0..n {
            for j in 0..n {
                if i != j && -jx[(i, j)] > report.worst_violation {
                    report.worst_violation = -jx[(i, j)];
                    report.worst_state = Some(x.clone());
                    report.worst_entry = Some((i, j, false));
                }
            }
        }
        if input_box.is_some() && p > 0 {
            let ju = sys.input_jacobian(0.0, &x, &u)?;
            for i in 0..n {
                for j in 0..p {
                    if -ju[(i, j)] > report.worst_violation {
                        report.worst_violation = -ju[(i, j)];
                        report.worst_state = Some(x.clone());
                        report.worst_entry = Some((i, j, true));
                    }
                }
            }
        }
    }
    report.passed = report.worst_violation <= MONOTONE_TOL;
    Ok(report)
}
