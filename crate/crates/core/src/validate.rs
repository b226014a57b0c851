//! Monte Carlo coverage of probabilistic reachable sets.
//!
//! Path `k` of a run keyed by `seed` draws its initial state from one ChaCha8
//! stream and its Wiener increments from another, both indexed by `k`. Paths
//! are therefore independent jobs and [`aggregate`] only counts, so any
//! evaluation order (including a parallel one) gives the same report.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{self, InputSignal, NoiseStream, SystemModel};
use crate::probreach::ProbReachSet;
use crate::setcalc::{ConvexSet, Ellipsoid, IntervalBox, Parallelotope};
use crate::{Error, Result, Vector, DEFAULT_TOL};

/// Distribution of initial states: uniform on the given set.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSampler {
    Point(Vector),
    Box(IntervalBox),
    Ellipsoid(Ellipsoid),
    Parallelotope(Parallelotope),
}

impl InitialSampler {
    pub fn dim(&self) -> usize {
        match self {
            Self::Point(x) => x.len(),
            Self::Box(b) => b.dim(),
            Self::Ellipsoid(e) => e.dim(),
            Self::Parallelotope(p) => p.dim(),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Self::Point(_) => "point",
            Self::Box(_) => "uniform-box",
            Self::Ellipsoid(_) => "uniform-ellipsoid",
            Self::Parallelotope(_) => "uniform-parallelotope",
        }
    }

    pub fn sample(&self, rng: &mut NoiseStream) -> Vector {
        match self {
            Self::Point(x) => x.clone(),
            Self::Box(b) => uniform_in_box(b, rng),
            Self::Ellipsoid(e) => {
                // Uniform direction, radius r·U^{1/n}, mapped through P^{-1/2}.
                let n = e.dim();
                let mut z = Vector::zeros(n);
                loop {
                    rng.fill_normal(z.as_mut_slice());
                    if z.norm() > 0.0 {
                        break;
                    }
                }
                let scale = e.radius() * rng.uniform().powf(1.0 / n as f64) / z.norm();
                e.center_ref() + e.norm().sqrt_inv() * (z * scale)
            }
            Self::Parallelotope(p) => p.inverse() * uniform_in_box(p.bounds(), rng),
        }
    }
}

fn uniform_in_box(b: &IntervalBox, rng: &mut NoiseStream) -> Vector {
    Vector::from_iterator(b.dim(), (0..b.dim()).map(|i| b.lo()[i] + rng.uniform() * (b.hi()[i] - b.lo()[i])))
}

/// Inputs applied to simulated paths.
#[derive(Debug, Clone)]
pub enum InputDraw {
    /// Every path follows the nominal signal.
    Nominal(InputSignal),
    /// Each path gets one constant input drawn uniformly from the box.
    UniformConstant(IntervalBox),
}

impl From<InputSignal> for InputDraw {
    fn from(u: InputSignal) -> Self {
        Self::Nominal(u)
    }
}

impl InputDraw {
    fn dim(&self) -> usize {
        match self {
            Self::Nominal(u) => u.dim(),
            Self::UniformConstant(b) => b.dim(),
        }
    }
}

/// Everything needed to simulate one path; shared read-only across paths.
#[derive(Debug, Clone)]
pub struct McSetup<'a> {
    pub sys: &'a SystemModel,
    pub sets: &'a [ProbReachSet],
    pub sampler: &'a InitialSampler,
    pub inputs: &'a InputDraw,
    pub dt: f64,
    pub seed: u64,
}

/// Offset separating the initial-state streams from the noise streams.
const INITIAL_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// State of one path at each checkpoint, or `None` after divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub path: u64,
    pub initial: Vector,
    pub states: Option<Vec<Vector>>,
}

impl McSetup<'_> {
    /// Checks dimensions and grid alignment; returns the final time.
    pub fn validate(&self) -> Result<f64> {
        let n = self.sys.state_dim();
        Error::check_dim(n, self.sampler.dim())?;
        Error::check_dim(self.sys.input_dim(), self.inputs.dim())?;
        if self.sets.is_empty() {
            return Err(Error::arg("no sets to validate"));
        }
        let mut t_end: f64 = 0.0;
        for s in self.sets {
            Error::check_dim(n, s.dim())?;
            t_end = t_end.max(s.t());
        }
        let grid = dynamics::time_grid(t_end, self.dt)?;
        if self.sets.iter().any(|s| dynamics::grid_index(&grid, s.t()).is_none()) {
            return Err(Error::arg("set time is not on the simulation grid"));
        }
        Ok(t_end)
    }

    /// Simulates path `path` and records its state at every set's time.
    pub fn simulate_path(&self, path: u64) -> Result<PathOutcome> {
        let t_end = self.validate()?;
        let mut init_rng = NoiseStream::new(self.seed.wrapping_add(INITIAL_SEED_OFFSET), path);
        let x0 = self.sampler.sample(&mut init_rng);
        let u = match self.inputs {
            InputDraw::Nominal(u) => u.clone(),
            InputDraw::UniformConstant(b) => InputSignal::constant(uniform_in_box(b, &mut init_rng)),
        };
        match dynamics::simulate_sde_path(self.sys, &x0, &u, t_end, self.dt, self.seed, path) {
            Ok(tr) => {
                let states = self
                    .sets
                    .iter()
                    .map(|s| tr.state_at(s.t()).cloned().expect("times checked against the grid"))
                    .collect();
                Ok(PathOutcome { path, initial: x0, states: Some(states) })
            }
            Err(Error::Divergence { .. }) => Ok(PathOutcome { path, initial: x0, states: None }),
            Err(e) => Err(e),
        }
    }
}

/// Coverage of one set.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointCoverage {
    pub set_index: usize,
    pub t: f64,
    pub delta: f64,
    pub n_paths: usize,
    pub n_inside: usize,
    pub n_diverged: usize,
    pub coverage: f64,
    pub target: f64,
    pub slack: f64,
    pub passed: bool,
    /// Largest excess distance (certificate norm) among paths outside the set.
    pub worst_outlier_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub checkpoints: Vec<CheckpointCoverage>,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub sampler: String,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.passed)
    }
}

/// Three binomial standard errors at level `1 − δ`.
pub fn statistical_slack(delta: f64, n_paths: usize) -> f64 {
    3.0 * (delta * (1.0 - delta) / n_paths as f64).sqrt()
}

/// Counts memberships of the outcomes; the order of `outcomes` is irrelevant.
pub fn aggregate(setup: &McSetup<'_>, outcomes: &[PathOutcome]) -> Result<CoverageReport> {
    let n_paths = outcomes.len();
    if n_paths == 0 {
        return Err(Error::arg("no paths to aggregate"));
    }
    let mut checkpoints = Vec::with_capacity(setup.sets.len());
    for (i, s) in setup.sets.iter().enumerate() {
        let mut inside = 0;
        let mut diverged = 0;
        let mut worst: f64 = 0.0;
        for o in outcomes {
            match &o.states {
                None => diverged += 1,
                Some(xs) => {
                    let x = &xs[i];
                    if s.contains(x, DEFAULT_TOL)? {
                        inside += 1;
                    } else {
                        worst = worst.max(s.excess(x)?);
                    }
                }
            }
        }
        let coverage = inside as f64 / n_paths as f64;
        let target = 1.0 - s.delta();
        let slack = statistical_slack(s.delta(), n_paths);
        checkpoints.push(CheckpointCoverage {
            set_index: i,
            t: s.t(),
            delta: s.delta(),
            n_paths,
            n_inside: inside,
            n_diverged: diverged,
            coverage,
            target,
            slack,
            passed: coverage >= target - slack,
            worst_outlier_distance: worst,
        });
    }
    Ok(CoverageReport {
        checkpoints,
        n_paths,
        dt: setup.dt,
        seed: setup.seed,
        sampler: setup.sampler.describe().into(),
    })
}

/// Minimum number of paths accepted by [`monte_carlo_coverage`].
pub const MIN_PATHS: usize = 100;

/// Simulates `n_paths` Euler–Maruyama paths and reports per-set coverage.
pub fn monte_carlo_coverage(
    sys: &SystemModel,
    sets: &[ProbReachSet],
    sampler: &InitialSampler,
    inputs: &InputDraw,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<CoverageReport> {
    monte_carlo_coverage_with_paths(sys, sets, sampler, inputs, n_paths, dt, seed).map(|(r, _)| r)
}

/// [`monte_carlo_coverage`] that also returns every path outcome.
pub fn monte_carlo_coverage_with_paths(
    sys: &SystemModel,
    sets: &[ProbReachSet],
    sampler: &InitialSampler,
    inputs: &InputDraw,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<(CoverageReport, Vec<PathOutcome>)> {
    if n_paths < MIN_PATHS {
        return Err(Error::arg("at least 100 paths are required"));
    }
    let setup = McSetup { sys, sets, sampler, inputs, dt, seed };
    setup.validate()?;
    let outcomes = (0..n_paths as u64).map(|k| setup.simulate_path(k)).collect::<Result<Vec<_>>>()?;
    Ok((aggregate(&setup, &outcomes)?, outcomes))
}
