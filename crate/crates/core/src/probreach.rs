//! Probabilistic reachable sets: a deterministic over-approximation of the
//! noise-free reachable set, Minkowski-summed with the P-ball of radius
//! `ρ(t, δ)` that bounds the stochastic deviation with probability `1 − δ`.

use alloc::vec::Vec;

use crate::certify::ContractionCertificate;
use crate::dynamics::{self, InputSignal, SystemModel};
use crate::reach::{self, EmbeddingTrajectory, InclusionFunction, InclusionKind, MonotoneReport};
use crate::setcalc::{ConvexSet, Ellipsoid, IntervalBox, MinkowskiSet, Parallelotope, ReachSet};
use crate::stochbound;
use crate::{Error, Matrix, Result, Vector};

/// `base ⊕ B_P(ρ(t, δ), 0)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbReachSet {
    t: f64,
    delta: f64,
    set: MinkowskiSet,
}

impl ProbReachSet {
    /// Builds the set and attaches the deviation ball of `cert` at `(t, delta)`.
    pub fn new(t: f64, delta: f64, base: ReachSet, cert: &ContractionCertificate) -> Result<Self> {
        let rho = stochbound::radius(cert.c_p(), cert.d_p(), t, delta)?;
        Self::from_parts(t, delta, base, Ellipsoid::centered(rho, cert.norm().clone())?)
    }

    /// Assembles a set from an explicit noise ball, e.g. one read back from disk.
    pub fn from_parts(t: f64, delta: f64, base: ReachSet, noise: Ellipsoid) -> Result<Self> {
        stochbound::check_delta(delta)?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::arg("time must be finite and nonnegative"));
        }
        Ok(Self { t, delta, set: MinkowskiSet::new(base, noise)? })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho(&self) -> f64 {
        self.set.noise_ball().radius()
    }

    pub fn base(&self) -> &ReachSet {
        self.set.base()
    }

    pub fn noise_ball(&self) -> &Ellipsoid {
        self.set.noise_ball()
    }

    pub fn set(&self) -> &MinkowskiSet {
        &self.set
    }

    /// How far `x` lies outside the set, measured in the certificate norm.
    pub fn excess(&self, x: &Vector) -> Result<f64> {
        self.set.excess(x)
    }

    /// Copy with `ρ` multiplied by `factor`.
    pub fn scale_noise(&self, factor: f64) -> Result<Self> {
        Ok(Self { t: self.t, delta: self.delta, set: self.set.scale_noise(factor)? })
    }
}

impl ConvexSet for ProbReachSet {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        self.set.support(d)
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        self.set.contains(x, tol)
    }

    fn center(&self) -> Vector {
        self.set.center()
    }
}

fn checked_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::arg("at least one output time is required"));
    }
    let mut t_end: f64 = 0.0;
    for &t in times {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::arg("output times must be finite and nonnegative"));
        }
        t_end = t_end.max(t);
    }
    Ok(t_end)
}

fn grid_index_or_err(grid: &[f64], t: f64) -> Result<usize> {
    dynamics::grid_index(grid, t).ok_or_else(|| Error::arg("output time is not on the integration grid"))
}

/// Contraction-based sets: base `B_P(r_t, x*_t)` from the certificate's
/// `(c, ℓ)` and the certificate norm.
#[allow(clippy::too_many_arguments)]
pub fn prob_reach_contraction(
    sys: &SystemModel,
    cert: &ContractionCertificate,
    x_star0: &Vector,
    u_star: &InputSignal,
    r1: f64,
    r2: f64,
    delta: f64,
    times: &[f64],
    dt: f64,
) -> Result<Vec<ProbReachSet>> {
    stochbound::check_delta(delta)?;
    let rate = cert.rate().ok_or_else(|| Error::arg("certificate has no input-to-state rate (c, ell)"))?;
    let t_end = checked_times(times)?;
    let tube = reach::contraction_tube(sys, x_star0, u_star, rate.c, rate.ell, r1, r2, cert.norm(), t_end, dt)?;
    times
        .iter()
        .map(|&t| {
            grid_index_or_err(tube.nominal().times(), t)?;
            ProbReachSet::new(t, delta, tube.ball_at(t)?.into(), cert)
        })
        .collect()
}

/// Where the interval bounds on the vector field come from.
#[derive(Debug, Clone)]
pub enum InclusionSource {
    /// Endpoint evaluation of the (possibly transformed) drift; guarded by a
    /// cooperativity check.
    Endpoint,
    /// A user inclusion function in the embedding coordinates.
    Custom(InclusionFunction),
}

/// Inputs of the interval pipeline. With a transform `T`, `initial` and
/// `invariant` are boxes in `y = T x` coordinates.
#[derive(Debug, Clone)]
pub struct IntervalReachSpec {
    pub inclusion: InclusionSource,
    pub initial: IntervalBox,
    pub inputs: IntervalBox,
    pub transform: Option<Matrix>,
    /// Box on which cooperativity is checked; defaults to `initial`.
    pub invariant: Option<IntervalBox>,
    pub monotone_samples: usize,
}

impl IntervalReachSpec {
    pub fn new(initial: IntervalBox, inputs: IntervalBox) -> Self {
        Self {
            inclusion: InclusionSource::Endpoint,
            initial,
            inputs,
            transform: None,
            invariant: None,
            monotone_samples: 10_000,
        }
    }

    pub fn with_transform(mut self, t: Matrix) -> Self {
        self.transform = Some(t);
        self
    }

    pub fn with_invariant(mut self, b: IntervalBox) -> Self {
        self.invariant = Some(b);
        self
    }

    pub fn with_inclusion(mut self, inc: InclusionFunction) -> Self {
        self.inclusion = InclusionSource::Custom(inc);
        self
    }
}

/// Sets produced by [`prob_reach_interval`] plus the evidence behind them.
#[derive(Debug, Clone)]
pub struct IntervalReach {
    pub sets: Vec<ProbReachSet>,
    /// Embedding trajectory in the embedding coordinates.
    pub embedding: EmbeddingTrajectory,
    /// Cooperativity sweeps on the declared box and on the swept hull
    /// (present for endpoint inclusions only).
    pub monotone: Vec<MonotoneReport>,
}

/// Interval-based sets: base `[x̲_t, x̄_t]`, or `T⁻¹[y̲_t, ȳ_t]` with a transform.
///
/// An endpoint inclusion is accepted only if the embedding-coordinate system
/// is cooperative (and nondecreasing in the input) both on the declared box
/// and on the box swept by the embedding trajectory; otherwise the result is
/// [`Error::UnsoundInclusion`].
pub fn prob_reach_interval(
    sys: &SystemModel,
    cert: &ContractionCertificate,
    spec: &IntervalReachSpec,
    delta: f64,
    times: &[f64],
    dt: f64,
) -> Result<IntervalReach> {
    stochbound::check_delta(delta)?;
    let n = sys.state_dim();
    Error::check_dim(n, spec.initial.dim())?;
    Error::check_dim(sys.input_dim(), spec.inputs.dim())?;
    Error::check_dim(n, cert.norm().dim())?;
    let t_end = checked_times(times)?;

    let embed_sys = match &spec.transform {
        Some(t) => reach::transform_system(t, sys)?,
        None => sys.clone(),
    };
    let inc = match &spec.inclusion {
        InclusionSource::Endpoint => InclusionFunction::endpoint(&embed_sys),
        InclusionSource::Custom(inc) => inc.clone(),
    };
    let needs_check = inc.kind() == InclusionKind::Endpoint;
    let input_box = (sys.input_dim() > 0).then_some(&spec.inputs);
    let mut monotone = Vec::new();
    let mut guard = |bx: &IntervalBox| -> Result<()> {
        let rep = reach::monotone_check(&embed_sys, bx, input_box, spec.monotone_samples)?;
        let passed = rep.passed;
        let worst = rep.worst_violation;
        monotone.push(rep);
        if passed {
            Ok(())
        } else {
            Err(Error::UnsoundInclusion(alloc::format!(
                "endpoint inclusion requires a cooperative system; worst off-diagonal Jacobian entry is -{worst:e}"
            )))
        }
    };
    if needs_check {
        guard(spec.invariant.as_ref().unwrap_or(&spec.initial))?;
    }

    let embedding = reach::embed_integrate(
        &inc,
        spec.initial.lo(),
        spec.initial.hi(),
        spec.inputs.lo(),
        spec.inputs.hi(),
        t_end,
        dt,
    )?;
    if needs_check {
        guard(&embedding.swept_hull())?;
    }

    let sets = times
        .iter()
        .map(|&t| {
            let k = grid_index_or_err(embedding.times(), t)?;
            let bx = embedding.box_at_index(k);
            let base: ReachSet = match &spec.transform {
                Some(tm) => Parallelotope::new(tm.clone(), bx)?.into(),
                None => bx.into(),
            };
            ProbReachSet::new(t, delta, base, cert)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalReach { sets, embedding, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::Provenance;
    use crate::pendulum;
    use crate::setcalc::WeightedNorm;
    use crate::DEFAULT_TOL;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn pendulum_cert() -> ContractionCertificate {
        ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0, Provenance::User)
            .unwrap()
            .with_diffusion(&pendulum::diffusion_column())
            .unwrap()
            .with_rate(-0.5, 0.0, Provenance::Proven)
            .unwrap()
    }

    #[test]
    fn noiseless_reduces_to_tube() {
        let sys = pendulum::system();
        let cert = ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0, Provenance::User)
            .unwrap()
            .with_rate(-0.5, 0.0, Provenance::Proven)
            .unwrap();
        let x0 = pendulum::initial_corner();
        let sets =
            prob_reach_contraction(&sys, &cert, &x0, &InputSignal::none(), 0.7, 0.0, 0.01, &[0.0, 1.0], 1e-3).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[1].rho(), 0.0);
        match sets[1].base() {
            ReachSet::Ellipsoid(e) => assert!((e.radius() - 0.7 * (-0.5f64).exp()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pure_noise_spread_around_nominal() {
        let sys = pendulum::system();
        let cert = pendulum_cert();
        let x0 = pendulum::initial_corner();
        let sets =
            prob_reach_contraction(&sys, &cert, &x0, &InputSignal::none(), 0.0, 0.0, 0.01, &[1.0, 2.0, 4.0], 1e-3)
                .unwrap();
        for s in &sets {
            let expect = stochbound::radius(-0.5, cert.d_p(), s.t(), 0.01).unwrap();
            assert!((s.rho() - expect).abs() < 1e-15);
            assert!(s.contains(&s.center(), DEFAULT_TOL).unwrap());
        }
        assert!(sets[0].rho() < sets[1].rho() && sets[1].rho() < sets[2].rho());
    }

    #[test]
    fn off_grid_and_missing_rate() {
        let sys = pendulum::system();
        let x0 = pendulum::initial_corner();
        let cert = pendulum_cert();
        let r = prob_reach_contraction(&sys, &cert, &x0, &InputSignal::none(), 0.0, 0.0, 0.01, &[0.5005, 1.0], 1e-3);
        assert!(r.is_err());
        let bare = ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.01, Provenance::User).unwrap();
        assert!(prob_reach_contraction(&sys, &bare, &x0, &InputSignal::none(), 0.0, 0.0, 0.01, &[1.0], 1e-3).is_err());
        assert!(prob_reach_contraction(&sys, &cert, &x0, &InputSignal::none(), 0.0, 0.0, 0.0, &[1.0], 1e-3).is_err());
    }

    #[test]
    fn point_box_without_noise_is_trajectory() {
        let sys = pendulum::system();
        let cert = ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0, Provenance::User).unwrap();
        let x0 = pendulum::initial_corner();
        let spec = IntervalReachSpec::new(IntervalBox::point(x0.clone()), IntervalBox::empty_dim())
            .with_inclusion(pendulum::natural_inclusion());
        let out = prob_reach_interval(&sys, &cert, &spec, 0.5, &[2.0], 1e-3).unwrap();
        let tr = dynamics::integrate_ode(&sys, &x0, &InputSignal::none(), 2.0, 1e-3).unwrap();
        match out.sets[0].base() {
            ReachSet::Box(b) => {
                assert!((b.lo() - tr.last().unwrap()).amax() < 1e-12);
                assert!((b.hi() - tr.last().unwrap()).amax() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(out.monotone.is_empty());
    }

    #[test]
    fn endpoint_rejected_on_noncooperative_system() {
        let sys = pendulum::system();
        let cert = pendulum_cert();
        let spec = IntervalReachSpec::new(pendulum::initial_box(), IntervalBox::empty_dim());
        match prob_reach_interval(&sys, &cert, &spec, 0.01, &[1.0], 1e-3) {
            Err(Error::UnsoundInclusion(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transformed_pendulum_gives_parallelotopes() {
        let sys = pendulum::system();
        let cert = pendulum_cert();
        let spec = IntervalReachSpec::new(pendulum::transformed_box(), IntervalBox::empty_dim())
            .with_transform(pendulum::transform());
        let out = prob_reach_interval(&sys, &cert, &spec, 0.01, &[1.0, 2.0, 4.0], 1e-3).unwrap();
        assert_eq!(out.monotone.len(), 2);
        assert!(out.monotone.iter().all(|r| r.passed));
        for s in &out.sets {
            assert_eq!(s.base().kind(), "parallelotope");
            assert!(s.rho() > 0.0);
        }
    }

    #[test]
    fn metzler_corner_flips_at_predicted_margin() {
        // Base box at t = 0 is the initial box itself; the noise ball of radius ρ
        // in the identity norm reaches exactly ρ beyond a face.
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.5, -1.0]);
        let sys = SystemModel::linear(a, None, 2).unwrap();
        let cert = ContractionCertificate::new(WeightedNorm::identity(2), -0.5, 0.04, Provenance::User).unwrap();
        let spec = IntervalReachSpec::new(IntervalBox::symmetric(&[1.0, 1.0]).unwrap(), IntervalBox::empty_dim());
        let out = prob_reach_interval(&sys, &cert, &spec, 0.25, &[1.0], 1e-3).unwrap();
        let s = &out.sets[0];
        let hi = match s.base() {
            ReachSet::Box(b) => b.hi().clone(),
            other => panic!("{other:?}"),
        };
        let rho = s.rho();
        let dir = v(&[1.0, 1.0]) / 2f64.sqrt();
        assert!(s.contains(&(&hi + &dir * (rho - 1e-6)), DEFAULT_TOL).unwrap());
        assert!(!s.contains(&(&hi + &dir * (rho + 1e-6)), DEFAULT_TOL).unwrap());
        let d = v(&[0.3, -0.8]);
        let base_support = hi[0] * 0.3 + hi[1] * 0.8;
        assert!((s.support(&d).unwrap() - base_support - rho * d.norm()).abs() < 1e-12);
    }
}
