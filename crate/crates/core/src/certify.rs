//! Contraction certificates `(P, c_P, d_P)` and the input-rate constants `(c, ℓ)`.
//!
//! A certificate for a polytopic Jacobian hull `conv{A_i}` satisfies
//! `A_iᵀP + PA_i ⪯ 2c_P P` at every vertex, which bounds
//! `μ_{2,P}(D_x f) ≤ c_P` everywhere on the hull. [`search_certificate`]
//! minimises `c_P` by bisection, with an inner search over `P = LLᵀ + εI`.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::SystemModel;
use crate::linalg;
use crate::setcalc::{ConvexSet, IntervalBox, WeightedNorm};
use crate::{Error, Matrix, Result, Vector};

/// How a constant was obtained. Sampled values are estimates, not proofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Checked on the vertices of a Jacobian hull.
    Proven,
    /// Largest value seen over a finite sample of the domain.
    Sampled,
    /// Supplied by the user and not checked.
    User,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Proven => "PROVEN",
            Provenance::Sampled => "SAMPLED",
            Provenance::User => "USER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PROVEN" => Some(Provenance::Proven),
            "SAMPLED" => Some(Provenance::Sampled),
            "USER" => Some(Provenance::User),
            _ => None,
        }
    }
}

/// Constants `c` and `ℓ` with `μ(D_x f) ≤ c` and `‖D_u f‖ ≤ ℓ` on the domain.
///
/// The state norm is `‖·‖_{2,P}` of the owning certificate, inputs use the
/// Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputRate {
    pub c: f64,
    pub ell: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCertificate {
    norm: WeightedNorm,
    c_p: f64,
    d_p: f64,
    rate: Option<InputRate>,
    provenance: Provenance,
    margins: Vec<f64>,
}

impl ContractionCertificate {
    pub fn new(norm: WeightedNorm, c_p: f64, d_p: f64, provenance: Provenance) -> Result<Self> {
        if !c_p.is_finite() {
            return Err(Error::arg("c_P must be finite"));
        }
        if !(d_p >= 0.0) || !d_p.is_finite() {
            return Err(Error::arg("d_P must be finite and nonnegative"));
        }
        Ok(Self { norm, c_p, d_p, rate: None, provenance, margins: Vec::new() })
    }

    pub fn with_dp(mut self, d_p: f64) -> Result<Self> {
        if !(d_p >= 0.0) || !d_p.is_finite() {
            return Err(Error::arg("d_P must be finite and nonnegative"));
        }
        self.d_p = d_p;
        Ok(self)
    }

    /// Sets `d_P = tr(σᵀPσ)` for a constant diffusion matrix.
    pub fn with_diffusion(self, sigma: &Matrix) -> Result<Self> {
        let d = compute_dp(sigma, &self.norm)?;
        self.with_dp(d)
    }

    pub fn with_rate(mut self, c: f64, ell: f64, provenance: Provenance) -> Result<Self> {
        if !c.is_finite() || !(ell >= 0.0) || !ell.is_finite() {
            return Err(Error::arg("input-rate constants must be finite with ell >= 0"));
        }
        self.rate = Some(InputRate { c, ell, provenance });
        Ok(self)
    }

    pub fn with_margins(mut self, margins: Vec<f64>) -> Self {
        self.margins = margins;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }

    pub fn c_p(&self) -> f64 {
        self.c_p
    }

    pub fn d_p(&self) -> f64 {
        self.d_p
    }

    pub fn rate(&self) -> Option<&InputRate> {
        self.rate.as_ref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }
}

/// Jacobian hull `conv{A_1, …, A_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexHull {
    vertices: Vec<Matrix>,
}

impl VertexHull {
    pub fn new(vertices: Vec<Matrix>) -> Result<Self> {
        let first = vertices.first().ok_or_else(|| Error::arg("vertex hull is empty"))?;
        let n = linalg::require_square(first)?;
        for a in &vertices {
            Error::check_dim(n, linalg::require_square(a)?)?;
            if !linalg::all_finite(a) {
                return Err(Error::arg("hull vertex has non-finite entries"));
            }
        }
        Ok(Self { vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].nrows()
    }

    pub fn vertices(&self) -> &[Matrix] {
        &self.vertices
    }

    /// `Σ λ_i A_i` for weights on the simplex.
    pub fn combination(&self, weights: &[f64]) -> Result<Matrix> {
        Error::check_dim(self.vertices.len(), weights.len())?;
        let n = self.dim();
        Ok(self.vertices.iter().zip(weights).fold(Matrix::zeros(n, n), |acc, (a, &w)| acc + a * w))
    }

    pub fn with_vertex(&self, a: Matrix) -> Result<Self> {
        let mut v = self.vertices.clone();
        v.push(a);
        Self::new(v)
    }
}

/// `d_P = tr(σᵀ P σ)` for a state-independent diffusion `σ ∈ ℝ^{n×m}`.
pub fn compute_dp(sigma: &Matrix, p: &WeightedNorm) -> Result<f64> {
    Error::check_dim(p.dim(), sigma.nrows())?;
    Ok((sigma.transpose() * p.matrix() * sigma).trace().max(0.0))
}

/// `d_P = tr(P Σ̄)` from a bound `σσᵀ ⪯ Σ̄` that holds over the whole domain.
///
/// Since `tr(σᵀPσ) = tr(P σσᵀ) ≤ tr(P Σ̄)` this is a valid `d_P` for
/// state-dependent diffusions.
pub fn compute_dp_from_covariance_bound(cov_bound: &Matrix, p: &WeightedNorm) -> Result<f64> {
    let n = linalg::require_square(cov_bound)?;
    Error::check_dim(p.dim(), n)?;
    if linalg::asymmetry(cov_bound) > WeightedNorm::SYMMETRY_TOL {
        return Err(Error::arg("covariance bound must be symmetric"));
    }
    if linalg::min_eig_sym(cov_bound) < -1e-12 {
        return Err(Error::arg("covariance bound must be positive semidefinite"));
    }
    Ok((p.matrix() * cov_bound).trace().max(0.0))
}

/// Per-vertex LMI margins `λ_max(A_iᵀP + PA_i − 2c_P P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub margins: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

impl VerificationReport {
    pub fn worst_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const DEFAULT_VERIFY_TOL: f64 = 1e-6;

pub fn lmi_margin(a: &Matrix, p: &Matrix, c_p: f64) -> f64 {
    let m = a.transpose() * p + p * a - p * (2.0 * c_p);
    linalg::max_eig_sym(&m).0
}

pub fn verify_certificate(hull: &VertexHull, p: &WeightedNorm, c_p: f64, tol: f64) -> VerificationReport {
    let margins: Vec<f64> = if hull.dim() == p.dim() {
        hull.vertices().iter().map(|a| lmi_margin(a, p.matrix(), c_p)).collect()
    } else {
        alloc::vec![f64::INFINITY; hull.vertices().len()]
    };
    let passed = margins.iter().all(|&m| m <= tol);
    VerificationReport { margins, tol, passed }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// `(infeasible lower, feasible upper)`; derived from the hull when `None`.
    pub bracket: Option<(f64, f64)>,
    /// Stop once the bracket is narrower than this.
    pub resolution: f64,
    pub max_bisections: usize,
    /// Random restarts of the inner search (restart 0 starts from `P = I`).
    pub restarts: usize,
    /// Subgradient iterations per restart.
    pub inner_iters: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { bracket: None, resolution: 1e-3, max_bisections: 64, restarts: 10, inner_iters: 4000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub certificate: ContractionCertificate,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    pub bisections: usize,
}

/// Smallest certified `c_P` over the hull, with its `P` (`d_P` left at 0).
pub fn search_certificate(hull: &VertexHull, options: &SearchOptions) -> Result<ContractionCertificate> {
    search_certificate_report(hull, options).map(|o| o.certificate)
}

pub fn search_certificate_report(hull: &VertexHull, options: &SearchOptions) -> Result<SearchOutcome> {
    let n = hull.dim();
    let (mut lo, mut hi) = match options.bracket {
        Some(b) => b,
        None => default_bracket(hull),
    };
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::arg("bisection bracket must satisfy lower <= upper"));
    }
    let solver = InnerSearch { hull, options };
    let (lo0, hi0) = (lo, hi);
    let mut best = solver.feasible_p(hi, None).ok_or(Error::Infeasible { lower: lo0, upper: hi0 })?;
    let mut bisections = 0;
    while hi - lo > options.resolution && bisections < options.max_bisections {
        let mid = 0.5 * (lo + hi);
        match solver.feasible_p(mid, Some(&best)) {
            Some(p) => {
                hi = mid;
                best = p;
            }
            None => lo = mid,
        }
        bisections += 1;
    }
    let norm = WeightedNorm::new(best)?;
    // Report the exact measure of the certifying P; it never exceeds `hi`.
    let mut c_p = f64::NEG_INFINITY;
    for a in hull.vertices() {
        c_p = c_p.max(norm.matrix_measure(a)?);
    }
    let c_p = c_p.min(hi);
    let report = verify_certificate(hull, &norm, c_p, DEFAULT_VERIFY_TOL);
    if !report.passed {
        return Err(Error::Numeric("search produced a certificate that fails verification".into()));
    }
    let _ = n;
    let certificate = ContractionCertificate::new(norm, c_p, 0.0, Provenance::Proven)?.with_margins(report.margins);
    Ok(SearchOutcome { certificate, bracket: (lo, hi), bisections })
}

/// `(max_i max Re λ(A_i), max_i μ₂(A_i))`: no `P` beats the first, `P = I`
/// achieves the second.
pub fn default_bracket(hull: &VertexHull) -> (f64, f64) {
    let identity = WeightedNorm::identity(hull.dim());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in hull.vertices() {
        lo = lo.max(linalg::spectral_abscissa(a));
        hi = hi.max(identity.matrix_measure(a).unwrap_or(f64::INFINITY));
    }
    (lo.min(hi), hi)
}

struct InnerSearch<'a> {
    hull: &'a VertexHull,
    options: &'a SearchOptions,
}

const EPS_P: f64 = 1e-8;

impl InnerSearch<'_> {
    /// Some `P ≻ 0` with every vertex margin `≤ 0` at rate `c`, if found.
    fn feasible_p(&self, c: f64, warm: Option<&Matrix>) -> Option<Matrix> {
        let n = self.hull.dim();
        let shifted: Vec<Matrix> = self.hull.vertices().iter().map(|a| a - Matrix::identity(n, n) * c).collect();
        let mut starts: Vec<Matrix> = Vec::new();
        starts.push(Matrix::identity(n, n));
        if let Some(p) = warm {
            if let Some(ch) = (p - Matrix::identity(n, n) * EPS_P).cholesky() {
                starts.push(ch.l());
            } else if let Some(ch) = p.clone().cholesky() {
                starts.push(ch.l());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.seed);
        rng.set_stream(c.to_bits());
        while starts.len() < self.options.restarts.max(1) + usize::from(warm.is_some()) {
            let mut l = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let z: f64 = rng.random::<f64>() * 2.0 - 1.0;
                    l[(i, j)] = if i == j { 0.2 + 2.0 * z.abs() } else { 2.0 * z };
                }
            }
            starts.push(l);
        }

        let mut best: Option<(f64, Matrix)> = None;
        for start in starts {
            let (g, p) = descend(&shifted, start, self.options.inner_iters);
            if best.as_ref().is_none_or(|(bg, _)| g < *bg) {
                best = Some((g, p));
            }
        }
        best.and_then(|(g, p)| (g <= feasibility_slack(&p)).then_some(p))
    }
}

fn feasibility_slack(p: &Matrix) -> f64 {
    1e-12 * p.amax().max(1.0)
}

fn normalize_factor(l: &mut Matrix) {
    let n = l.nrows();
    let row = l.row(n - 1).norm();
    if row > 0.0 {
        *l /= row;
    }
}

fn p_of(l: &Matrix) -> Matrix {
    let n = l.nrows();
    l * l.transpose() + Matrix::identity(n, n) * EPS_P
}

/// `max_i λ_max(B_iᵀP + PB_i)` with the active vertex and eigenvector.
fn objective(shifted: &[Matrix], p: &Matrix) -> (f64, usize, Vector) {
    let mut best = (f64::NEG_INFINITY, 0, Vector::zeros(p.nrows()));
    for (i, b) in shifted.iter().enumerate() {
        let m = b.transpose() * p + p * b;
        let (lam, v) = linalg::max_eig_sym(&m);
        if lam > best.0 {
            best = (lam, i, v);
        }
    }
    best
}

/// Normalised subgradient descent on `g(L) = max_i λ_max(B_iᵀP + PB_i)`,
/// `P = LLᵀ + εI` with `P_nn = 1`. Returns the best `(g, P)` visited; stops
/// as soon as `g` is comfortably negative.
fn descend(shifted: &[Matrix], start: Matrix, iters: usize) -> (f64, Matrix) {
    let n = start.nrows();
    let mut l = start;
    normalize_factor(&mut l);
    let step0 = 0.25 * l.norm().max(1e-3);
    let mut best_p = p_of(&l);
    let mut best_g = objective(shifted, &best_p).0;
    for k in 0..iters {
        let p = p_of(&l);
        let (g, idx, v) = objective(shifted, &p);
        if g < best_g {
            best_g = g;
            best_p = p.clone();
        }
        if best_g < -1e-6 * p.amax() {
            break;
        }
        // ∂λ/∂P = v wᵀ + w vᵀ with w = B v; then ∂/∂L = 2 (∂λ/∂P) L.
        let w = &shifted[idx] * &v;
        let gp = &v * w.transpose() + &w * v.transpose();
        let mut gl = gp * &l * 2.0;
        for i in 0..n {
            for j in (i + 1)..n {
                gl[(i, j)] = 0.0;
            }
        }
        let gn = gl.norm();
        if !(gn > 0.0) || !gn.is_finite() {
            break;
        }
        let step = step0 / ((k + 1) as f64).sqrt();
        l -= gl * (step / gn);
        normalize_factor(&mut l);
    }
    (best_g, best_p)
}

/// Sampled bounds on the state measure and input gain over a state/input box.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Inflated bound on `μ_{2,P}(D_x f)`.
    pub c: f64,
    /// Inflated bound on `‖D_u f‖_{(2),(2,P)}`.
    pub ell: f64,
    pub max_measure: f64,
    pub max_input_gain: f64,
    pub argmax_state: Vector,
    pub argmax_input: Vector,
    pub samples: usize,
    pub provenance: Provenance,
}

pub const SAFETY_FACTOR: f64 = 1.05;

/// Moves `v` by 5% of its magnitude in the conservative (upward) direction.
fn inflate(v: f64) -> f64 {
    v + (SAFETY_FACTOR - 1.0) * v.abs()
}

/// Largest sampled `μ_{2,P}(D_x f)` and `‖D_u f‖` over a Sobol sample of
/// `state_box × input_box`, each inflated by the safety factor.
pub fn estimate_assumption2(
    sys: &SystemModel,
    state_box: &IntervalBox,
    input_box: &IntervalBox,
    p: &WeightedNorm,
    n_samples: usize,
) -> Result<RateEstimate> {
    if n_samples < 100 {
        return Err(Error::arg("at least 100 samples are required"));
    }
    let n = sys.state_dim();
    let m = sys.input_dim();
    Error::check_dim(n, state_box.dim())?;
    Error::check_dim(m, input_box.dim())?;
    Error::check_dim(n, p.dim())?;

    let mut est = RateEstimate {
        c: f64::NEG_INFINITY,
        ell: 0.0,
        max_measure: f64::NEG_INFINITY,
        max_input_gain: 0.0,
        argmax_state: state_box.center(),
        argmax_input: input_box.center(),
        samples: n_samples,
        provenance: Provenance::Sampled,
    };
    for k in 0..n_samples {
        let x = sobol_point(state_box, k as u32, 0);
        let u = sobol_point(input_box, k as u32, n as u32);
        let jx = sys.state_jacobian(0.0, &x, &u)?;
        if !linalg::all_finite(&jx) {
            return Err(Error::Numeric("non-finite state Jacobian".into()));
        }
        let mu = p.matrix_measure(&jx)?;
        if mu > est.max_measure {
            est.max_measure = mu;
            est.argmax_state = x.clone();
            est.argmax_input = u.clone();
        }
        if m > 0 {
            let ju = sys.input_jacobian(0.0, &x, &u)?;
            if !linalg::all_finite(&ju) {
                return Err(Error::Numeric("non-finite input Jacobian".into()));
            }
            est.max_input_gain = est.max_input_gain.max(p.induced_gain(&ju)?);
        }
    }
    est.c = inflate(est.max_measure);
    est.ell = SAFETY_FACTOR * est.max_input_gain;
    Ok(est)
}

/// Sobol point `k` mapped into `bx`, using dimensions `first_dim..`.
pub fn sobol_point(bx: &IntervalBox, k: u32, first_dim: u32) -> Vector {
    let n = bx.dim();
    Vector::from_iterator(
        n,
        (0..n).map(|i| {
            let s = sobol_burley::sample(k, first_dim + i as u32, 0) as f64;
            bx.lo()[i] + s * (bx.hi()[i] - bx.lo()[i])
        }),
    )
}
