//! System models, fixed-step RK4 integration and Euler–Maruyama simulation.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::setcalc::{ConvexSet, Ellipsoid, IntervalBox};
use crate::{Error, Matrix, Result, Vector};

pub type DriftFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Vector + Send + Sync>;
pub type DiffusionFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync>;

/// `dX = f(t,X,u) dt + σ(t,X,u) dW` with `X ∈ ℝⁿ`, `u ∈ ℝᵖ`, `W ∈ ℝᵐ`.
#[derive(Clone)]
pub struct SystemModel {
    state_dim: usize,
    input_dim: usize,
    noise_dim: usize,
    drift: DriftFn,
    diffusion: DiffusionFn,
    state_jacobian: Option<JacobianFn>,
    input_jacobian: Option<JacobianFn>,
}

impl core::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SystemModel")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("noise_dim", &self.noise_dim)
            .field("analytic_jacobian", &self.state_jacobian.is_some())
            .finish()
    }
}

impl SystemModel {
    /// Deterministic model with zero diffusion and `noise_dim` Wiener channels.
    pub fn new<F>(state_dim: usize, input_dim: usize, noise_dim: usize, drift: F) -> Self
    where
        F: Fn(f64, &Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        let n = state_dim;
        let m = noise_dim;
        Self {
            state_dim,
            input_dim,
            noise_dim,
            drift: Arc::new(drift),
            diffusion: Arc::new(move |_, _, _| Matrix::zeros(n, m)),
            state_jacobian: None,
            input_jacobian: None,
        }
    }

    /// Linear drift `A x + B u`, with analytic Jacobians.
    pub fn linear(a: Matrix, b: Option<Matrix>, noise_dim: usize) -> Result<Self> {
        let n = linalg::require_square(&a)?;
        let b = b.unwrap_or_else(|| Matrix::zeros(n, 0));
        Error::check_dim(n, b.nrows())?;
        let p = b.ncols();
        let (a1, b1) = (a.clone(), b.clone());
        let (a2, b2) = (a, b);
        Ok(Self::new(n, p, noise_dim, move |_, x, u| &a1 * x + &b1 * u)
            .with_state_jacobian(move |_, _, _| a2.clone())
            .with_input_jacobian(move |_, _, _| b2.clone()))
    }

    pub fn with_diffusion<G>(mut self, diffusion: G) -> Self
    where
        G: Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        self.diffusion = Arc::new(diffusion);
        self
    }

    /// State- and input-independent diffusion matrix (n×m).
    pub fn with_constant_diffusion(self, sigma: Matrix) -> Result<Self> {
        Error::check_dim(self.state_dim, sigma.nrows())?;
        Error::check_dim(self.noise_dim, sigma.ncols())?;
        Ok(self.with_diffusion(move |_, _, _| sigma.clone()))
    }

    pub fn with_state_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        self.state_jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_input_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(f64, &Vector, &Vector) -> Matrix + Send + Sync + 'static,
    {
        self.input_jacobian = Some(Arc::new(jac));
        self
    }

    pub(crate) fn from_parts(
        dims: (usize, usize, usize),
        drift: DriftFn,
        diffusion: DiffusionFn,
        state_jacobian: Option<JacobianFn>,
        input_jacobian: Option<JacobianFn>,
    ) -> Self {
        Self {
            state_dim: dims.0,
            input_dim: dims.1,
            noise_dim: dims.2,
            drift,
            diffusion,
            state_jacobian,
            input_jacobian,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub(crate) fn drift_fn(&self) -> &DriftFn {
        &self.drift
    }

    pub(crate) fn diffusion_fn(&self) -> &DiffusionFn {
        &self.diffusion
    }

    pub(crate) fn state_jacobian_fn(&self) -> Option<&JacobianFn> {
        self.state_jacobian.as_ref()
    }

    pub(crate) fn input_jacobian_fn(&self) -> Option<&JacobianFn> {
        self.input_jacobian.as_ref()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.state_jacobian.is_some()
    }

    fn check_args(&self, x: &Vector, u: &Vector) -> Result<()> {
        Error::check_dim(self.state_dim, x.len())?;
        Error::check_dim(self.input_dim, u.len())
    }

    pub fn drift(&self, t: f64, x: &Vector, u: &Vector) -> Result<Vector> {
        self.check_args(x, u)?;
        let f = (self.drift)(t, x, u);
        Error::check_dim(self.state_dim, f.len())?;
        Ok(f)
    }

    pub fn diffusion(&self, t: f64, x: &Vector, u: &Vector) -> Result<Matrix> {
        self.check_args(x, u)?;
        let s = (self.diffusion)(t, x, u);
        if s.nrows() != self.state_dim || s.ncols() != self.noise_dim {
            return Err(Error::Dimension { expected: self.state_dim * self.noise_dim, found: s.len() });
        }
        Ok(s)
    }

    /// `D_x f`: the analytic Jacobian when one was supplied, else [`jacobian_fd`].
    pub fn state_jacobian(&self, t: f64, x: &Vector, u: &Vector) -> Result<Matrix> {
        match &self.state_jacobian {
            Some(j) => {
                self.check_args(x, u)?;
                Ok(j(t, x, u))
            }
            None => jacobian_fd(self, t, x, u),
        }
    }

    /// `D_u f`: analytic when supplied, else central differences.
    pub fn input_jacobian(&self, t: f64, x: &Vector, u: &Vector) -> Result<Matrix> {
        match &self.input_jacobian {
            Some(j) => {
                self.check_args(x, u)?;
                Ok(j(t, x, u))
            }
            None => input_jacobian_fd(self, t, x, u),
        }
    }
}

/// Time stamps and states on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vector>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vector>) -> Result<Self> {
        Error::check_dim(times.len(), states.len())?;
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("trajectory times must be strictly increasing"));
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&Vector> {
        self.states.last()
    }

    /// State at a grid time `t` (matched to within `1e-9·max(1,|t|)`).
    pub fn state_at(&self, t: f64) -> Option<&Vector> {
        grid_index(&self.times, t).map(|k| &self.states[k])
    }
}

pub(crate) fn grid_index(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let k = times.partition_point(|&s| s < t - tol);
    (k < times.len() && (times[k] - t).abs() <= tol).then_some(k)
}

/// `{0, dt, 2dt, …, t_end}`; the final step is shortened if `t_end` is not a
/// multiple of `dt`.
pub fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::arg("step size must be positive"));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::arg("final time must be nonnegative"));
    }
    let ratio = t_end / dt;
    let mut steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        steps = ratio.ceil();
    }
    let steps = steps as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    if let Some(last) = times.last_mut() {
        *last = t_end;
    }
    Ok(times)
}

/// Set the input signal is declared to take values in.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSet {
    Box(IntervalBox),
    Ball(Ellipsoid),
}

/// `t ↦ u_t` together with its declared containing set.
#[derive(Clone)]
pub struct InputSignal {
    signal: Arc<dyn Fn(f64) -> Vector + Send + Sync>,
    set: InputSet,
    dim: usize,
}

impl core::fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("InputSignal").field("dim", &self.dim).field("set", &self.set).finish()
    }
}

impl InputSignal {
    pub fn new<F>(signal: F, set: InputSet) -> Self
    where
        F: Fn(f64) -> Vector + Send + Sync + 'static,
    {
        let dim = match &set {
            InputSet::Box(b) => b.dim(),
            InputSet::Ball(e) => e.dim(),
        };
        Self { signal: Arc::new(signal), set, dim }
    }

    pub fn constant(u: Vector) -> Self {
        let set = InputSet::Box(IntervalBox::point(u.clone()));
        Self::new(move |_| u.clone(), set)
    }

    /// The empty input for systems with `p = 0`.
    pub fn none() -> Self {
        Self::constant(Vector::zeros(0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&self) -> &InputSet {
        &self.set
    }

    pub fn at(&self, t: f64) -> Vector {
        (self.signal)(t)
    }

    /// Checks the declared containment at `n + 1` evenly spaced times in `[0, t_end]`.
    pub fn contained_on_samples(&self, t_end: f64, n: usize, tol: f64) -> Result<bool> {
        for k in 0..=n {
            let t = t_end * k as f64 / n.max(1) as f64;
            let u = self.at(t);
            let inside = match &self.set {
                InputSet::Box(b) => b.contains(&u, tol)?,
                InputSet::Ball(e) => e.contains(&u, tol)?,
            };
            if !inside {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Classical fixed-step RK4 for `ẋ = rhs(t, x)` on the given grid.
pub fn rk4_on_grid<F>(mut rhs: F, x0: &Vector, times: &[f64]) -> Result<Vec<Vector>>
where
    F: FnMut(f64, &Vector) -> Result<Vector>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut x = x0.clone();
    if !linalg::vec_finite(&x) {
        return Err(Error::Divergence { time: times.first().copied().unwrap_or(0.0) });
    }
    out.push(x.clone());
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(t, &x)?;
        let k2 = rhs(t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !linalg::vec_finite(&x) {
            return Err(Error::Divergence { time: w[1] });
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// RK4 solution of `ẋ = f(t, x, u_t)` on `{0, dt, …, t_end}`.
pub fn integrate_ode(sys: &SystemModel, x0: &Vector, u: &InputSignal, t_end: f64, dt: f64) -> Result<Trajectory> {
    Error::check_dim(sys.state_dim(), x0.len())?;
    Error::check_dim(sys.input_dim(), u.dim())?;
    let times = time_grid(t_end, dt)?;
    let states = rk4_on_grid(|t, x| sys.drift(t, x, &u.at(t)), x0, &times)?;
    Trajectory::new(times, states)
}

/// Independent standard normal draws for one simulated path.
///
/// Each `(seed, path)` pair owns its own ChaCha8 stream, so paths are
/// reproducible regardless of evaluation order. Normals come from Box–Muller.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path);
        Self { rng }
    }

    /// Fills `out` with standard normals, one Box–Muller pair at a time.
    pub fn fill_normal(&mut self, out: &mut [f64]) {
        let mut k = 0;
        while k < out.len() {
            let u1: f64 = 1.0 - self.rng.random::<f64>();
            let u2: f64 = self.rng.random::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            let th = core::f64::consts::TAU * u2;
            out[k] = r * th.cos();
            if k + 1 < out.len() {
                out[k + 1] = r * th.sin();
            }
            k += 2;
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Euler–Maruyama path with noise drawn from `NoiseStream::new(seed, 0)`.
pub fn simulate_sde(
    sys: &SystemModel,
    x0: &Vector,
    u: &InputSignal,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    simulate_sde_path(sys, x0, u, t_end, dt, seed, 0)
}

/// Euler–Maruyama path number `path` of the family keyed by `seed`.
pub fn simulate_sde_path(
    sys: &SystemModel,
    x0: &Vector,
    u: &InputSignal,
    t_end: f64,
    dt: f64,
    seed: u64,
    path: u64,
) -> Result<Trajectory> {
    let mut noise = NoiseStream::new(seed, path);
    simulate_sde_with(sys, x0, u, t_end, dt, |buf| noise.fill_normal(buf))
}

/// Euler–Maruyama `X_{k+1} = X_k + f h + σ √h ξ_k` where `normals` fills
/// `ξ_k ∈ ℝᵐ` with standard normals at every step.
pub fn simulate_sde_with<N>(
    sys: &SystemModel,
    x0: &Vector,
    u: &InputSignal,
    t_end: f64,
    dt: f64,
    mut normals: N,
) -> Result<Trajectory>
where
    N: FnMut(&mut [f64]),
{
    Error::check_dim(sys.state_dim(), x0.len())?;
    Error::check_dim(sys.input_dim(), u.dim())?;
    let times = time_grid(t_end, dt)?;
    let mut states = Vec::with_capacity(times.len());
    let mut x = x0.clone();
    let mut xi = Vector::zeros(sys.noise_dim());
    states.push(x.clone());
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let ut = u.at(t);
        let f = sys.drift(t, &x, &ut)?;
        let s = sys.diffusion(t, &x, &ut)?;
        normals(xi.as_mut_slice());
        x += f * h + s * &xi * h.sqrt();
        if !linalg::vec_finite(&x) {
            return Err(Error::Divergence { time: w[1] });
        }
        states.push(x.clone());
    }
    Trajectory::new(times, states)
}

fn fd_step(v: f64) -> f64 {
    1e-6 * (1.0 + v.abs())
}

/// Central-difference `D_x f` with step `1e-6·(1 + |x_i|)`.
pub fn jacobian_fd(sys: &SystemModel, t: f64, x: &Vector, u: &Vector) -> Result<Matrix> {
    let n = sys.state_dim();
    sys.check_args(x, u)?;
    let mut jac = Matrix::zeros(n, n);
    for i in 0..n {
        let h = fd_step(x[i]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let col = (sys.drift(t, &xp, u)? - sys.drift(t, &xm, u)?) / (2.0 * h);
        if !linalg::vec_finite(&col) {
            return Err(Error::Numeric("non-finite drift near the Jacobian point".into()));
        }
        jac.set_column(i, &col);
    }
    Ok(jac)
}

/// Central-difference `D_u f`.
pub fn input_jacobian_fd(sys: &SystemModel, t: f64, x: &Vector, u: &Vector) -> Result<Matrix> {
    let (n, p) = (sys.state_dim(), sys.input_dim());
    sys.check_args(x, u)?;
    let mut jac = Matrix::zeros(n, p);
    for i in 0..p {
        let h = fd_step(u[i]);
        let mut up = u.clone();
        let mut um = u.clone();
        up[i] += h;
        um[i] -= h;
        let col = (sys.drift(t, x, &up)? - sys.drift(t, x, &um)?) / (2.0 * h);
        if !linalg::vec_finite(&col) {
            return Err(Error::Numeric("non-finite drift near the Jacobian point".into()));
        }
        jac.set_column(i, &col);
    }
    Ok(jac)
}
