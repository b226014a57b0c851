//! Set representations, weighted norms and matrix measures.
//!
//! All sets here are convex and closed: P-weighted balls ([`Ellipsoid`]),
//! axis-aligned boxes ([`IntervalBox`]), linear images of boxes
//! ([`Parallelotope`]) and Minkowski sums of one of those with a centred
//! P-ball ([`MinkowskiSet`]). Every set exposes its support function, which is
//! what [`polygon_outline`] consumes, and an exact (or projection-based)
//! membership test.

use alloc::vec::Vec;

pub use crate::interval::{interval_sin, Interval};
use crate::linalg;
use crate::{Error, Matrix, Result, Vector, DEFAULT_TOL};

/// The norm `‖v‖_{2,P} = sqrt(vᵀ P v)` for a symmetric positive-definite `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    p: Matrix,
    p_inv: Matrix,
    root: Matrix,
    root_inv: Matrix,
}

impl WeightedNorm {
    pub const SYMMETRY_TOL: f64 = 1e-10;

    pub fn new(p: Matrix) -> Result<Self> {
        linalg::require_square(&p)?;
        if !linalg::all_finite(&p) {
            return Err(Error::arg("weight matrix has non-finite entries"));
        }
        if linalg::asymmetry(&p) > Self::SYMMETRY_TOL {
            return Err(Error::arg("weight matrix is not symmetric"));
        }
        let p = linalg::symmetric_part(&p);
        if !(linalg::min_eig_sym(&p) > 0.0) {
            return Err(Error::arg("weight matrix is not positive definite"));
        }
        let (root, root_inv) = linalg::spd_sqrt_pair(&p)?;
        let p_inv = linalg::symmetric_part(&(&root_inv * &root_inv));
        Ok(Self { p, p_inv, root, root_inv })
    }

    pub fn identity(n: usize) -> Self {
        let i = Matrix::identity(n, n);
        Self { p: i.clone(), p_inv: i.clone(), root: i.clone(), root_inv: i }
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: data.len() });
        }
        Self::new(Matrix::from_row_slice(n, n, data))
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn inverse(&self) -> &Matrix {
        &self.p_inv
    }

    /// `P^{1/2}`, the symmetric square root.
    pub fn sqrt(&self) -> &Matrix {
        &self.root
    }

    pub fn sqrt_inv(&self) -> &Matrix {
        &self.root_inv
    }

    pub fn norm_squared(&self, v: &Vector) -> Result<f64> {
        Error::check_dim(self.dim(), v.len())?;
        Ok(v.dot(&(&self.p * v)).max(0.0))
    }

    pub fn norm(&self, v: &Vector) -> Result<f64> {
        self.norm_squared(v).map(f64::sqrt)
    }

    /// Dual norm `sqrt(dᵀ P⁻¹ d)`; the support function of the unit ball.
    pub fn dual_norm(&self, d: &Vector) -> Result<f64> {
        Error::check_dim(self.dim(), d.len())?;
        Ok(d.dot(&(&self.p_inv * d)).max(0.0).sqrt())
    }

    /// `μ_{2,P}(A) = ½ λ_max(P^{1/2} A P^{-1/2} + (P^{1/2} A P^{-1/2})ᵀ)`.
    pub fn matrix_measure(&self, a: &Matrix) -> Result<f64> {
        let n = linalg::require_square(a)?;
        Error::check_dim(self.dim(), n)?;
        if !linalg::all_finite(a) {
            return Err(Error::arg("matrix has non-finite entries"));
        }
        let m = &self.root * a * &self.root_inv;
        Ok(linalg::max_eig_sym(&m).0)
    }

    /// Induced gain of `B: (ℝᵖ, ‖·‖₂) → (ℝⁿ, ‖·‖_{2,P})`, i.e. `‖P^{1/2} B‖₂`.
    pub fn induced_gain(&self, b: &Matrix) -> Result<f64> {
        Error::check_dim(self.dim(), b.nrows())?;
        Ok(linalg::spectral_norm(&(&self.root * b)))
    }

    /// Whether both norms use the same weight up to `rel_tol` (Frobenius).
    pub fn same_as(&self, other: &WeightedNorm, rel_tol: f64) -> bool {
        self.dim() == other.dim() && (&self.p - &other.p).norm() <= rel_tol * self.p.norm()
    }
}

pub fn weighted_norm(v: &Vector, p: &WeightedNorm) -> Result<f64> {
    p.norm(v)
}

pub fn matrix_measure_2p(a: &Matrix, p: &WeightedNorm) -> Result<f64> {
    p.matrix_measure(a)
}

/// Sets described by a support function `h(d) = sup_{x∈S} dᵀx`.
pub trait ConvexSet {
    fn dim(&self) -> usize;
    fn support(&self, d: &Vector) -> Result<f64>;
    fn contains(&self, x: &Vector, tol: f64) -> Result<bool>;
    /// A point of the set, used as its nominal centre.
    fn center(&self) -> Vector;
}

/// Membership at the default tolerance.
pub fn membership<S: ConvexSet + ?Sized>(set: &S, x: &Vector) -> Result<bool> {
    set.contains(x, DEFAULT_TOL)
}

/// `{x : ‖x − center‖_{2,P} ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: Vector,
    radius: f64,
    norm: WeightedNorm,
}

impl Ellipsoid {
    pub fn new(center: Vector, radius: f64, norm: WeightedNorm) -> Result<Self> {
        Error::check_dim(norm.dim(), center.len())?;
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::arg("ellipsoid radius must be finite and nonnegative"));
        }
        Ok(Self { center, radius, norm })
    }

    pub fn centered(radius: f64, norm: WeightedNorm) -> Result<Self> {
        let n = norm.dim();
        Self::new(Vector::zeros(n), radius, norm)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }

    pub fn center_ref(&self) -> &Vector {
        &self.center
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.center.clone(), radius, self.norm.clone())
    }

    /// `min_{a ∈ self} ‖x − a‖_Q` for a possibly different weighted norm `Q`.
    pub fn distance_in(&self, x: &Vector, q: &WeightedNorm) -> Result<f64> {
        Error::check_dim(self.center.len(), x.len())?;
        let offset = x - &self.center;
        if q.same_as(&self.norm, 1e-12) {
            return Ok((q.norm(&offset)? - self.radius).max(0.0));
        }
        if self.norm.norm(&offset)? <= self.radius {
            return Ok(0.0);
        }
        if self.radius == 0.0 {
            return q.norm(&offset);
        }
        // Stationarity of ‖x−a‖²_Q + λ(‖a−c‖²_P − r²): a(λ) = (Q + λP)⁻¹(Qx + λPc).
        let qm = q.matrix();
        let pm = self.norm.matrix();
        let point = |lam: f64| -> Result<Vector> {
            let lhs = qm + pm * lam;
            let rhs = qm * x + (pm * &self.center) * lam;
            lhs.cholesky()
                .map(|c| c.solve(&rhs))
                .ok_or_else(|| Error::Numeric("projection system is not positive definite".into()))
        };
        let outside = |lam: f64| -> Result<bool> { Ok(self.norm.norm(&(point(lam)? - &self.center))? > self.radius) };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut grow = 0;
        while outside(hi)? {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::Numeric("projection multiplier not bracketed".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if outside(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        q.norm(&(x - point(hi)?))
    }
}

impl ConvexSet for Ellipsoid {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        Error::check_dim(self.dim(), d.len())?;
        Ok(d.dot(&self.center) + self.radius * self.norm.dual_norm(d)?)
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(self.norm.norm(&(x - &self.center))? <= self.radius + tol)
    }

    fn center(&self) -> Vector {
        self.center.clone()
    }
}

/// The axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    lo: Vector,
    hi: Vector,
}

impl IntervalBox {
    pub fn new(lo: Vector, hi: Vector) -> Result<Self> {
        Error::check_dim(lo.len(), hi.len())?;
        for i in 0..lo.len() {
            if !(lo[i] <= hi[i]) {
                return Err(Error::arg("box lower bound exceeds upper bound"));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn from_slices(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(lo), Vector::from_column_slice(hi))
    }

    /// `[−h, h]` for a half-width vector `h ≥ 0`.
    pub fn symmetric(half_width: &[f64]) -> Result<Self> {
        let hi = Vector::from_column_slice(half_width);
        Self::new(-&hi, hi)
    }

    pub fn point(x: Vector) -> Self {
        Self { lo: x.clone(), hi: x }
    }

    pub fn empty_dim() -> Self {
        Self { lo: Vector::zeros(0), hi: Vector::zeros(0) }
    }

    pub fn lo(&self) -> &Vector {
        &self.lo
    }

    pub fn hi(&self) -> &Vector {
        &self.hi
    }

    pub fn component(&self, i: usize) -> Interval {
        Interval { lo: self.lo[i], hi: self.hi[i] }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.lo.len()).map(|i| self.component(i)).collect()
    }

    pub fn contains_box(&self, other: &IntervalBox, tol: f64) -> bool {
        self.lo.len() == other.lo.len()
            && (0..self.lo.len()).all(|i| other.lo[i] >= self.lo[i] - tol && other.hi[i] <= self.hi[i] + tol)
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &IntervalBox) -> Result<IntervalBox> {
        Error::check_dim(self.lo.len(), other.lo.len())?;
        Ok(Self { lo: self.lo.zip_map(&other.lo, f64::min), hi: self.hi.zip_map(&other.hi, f64::max) })
    }

    /// `min_{a ∈ box} ‖x − a‖_P` and the minimiser.
    pub fn project_in(&self, x: &Vector, p: &WeightedNorm) -> Result<(f64, Vector)> {
        Error::check_dim(self.lo.len(), x.len())?;
        Error::check_dim(p.dim(), x.len())?;
        let h = p.matrix();
        let g = h * x;
        let a = box_qp(h, &g, &self.lo, &self.hi);
        Ok((p.norm(&(x - &a))?, a))
    }
}

impl ConvexSet for IntervalBox {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        Error::check_dim(self.dim(), d.len())?;
        Ok((0..d.len()).map(|i| (d[i] * self.lo[i]).max(d[i] * self.hi[i])).sum())
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Error::check_dim(self.dim(), x.len())?;
        Ok((0..x.len()).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol))
    }

    fn center(&self) -> Vector {
        (&self.lo + &self.hi) * 0.5
    }
}

/// `T⁻¹[y̲, ȳ] = {x : T x ∈ [y̲, ȳ]}` for a nonsingular `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallelotope {
    transform: Matrix,
    inverse: Matrix,
    bounds: IntervalBox,
}

impl Parallelotope {
    pub const MIN_ABS_DET: f64 = 1e-12;

    pub fn new(transform: Matrix, bounds: IntervalBox) -> Result<Self> {
        let n = linalg::require_square(&transform)?;
        Error::check_dim(n, bounds.dim())?;
        if !(transform.determinant().abs() > Self::MIN_ABS_DET) {
            return Err(Error::arg("parallelotope transform is singular"));
        }
        let inverse = linalg::inverse(&transform)?;
        Ok(Self { transform, inverse, bounds })
    }

    pub fn transform(&self) -> &Matrix {
        &self.transform
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn bounds(&self) -> &IntervalBox {
        &self.bounds
    }

    pub fn project_in(&self, x: &Vector, p: &WeightedNorm) -> Result<(f64, Vector)> {
        Error::check_dim(self.dim(), x.len())?;
        Error::check_dim(p.dim(), x.len())?;
        let m = &self.inverse;
        let pm = p.matrix() * m;
        let h = linalg::symmetric_part(&(m.transpose() * &pm));
        let g = pm.transpose() * x;
        let y = box_qp(&h, &g, self.bounds.lo(), self.bounds.hi());
        let a = m * y;
        Ok((p.norm(&(x - &a))?, a))
    }
}

impl ConvexSet for Parallelotope {
    fn dim(&self) -> usize {
        self.transform.nrows()
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        Error::check_dim(self.dim(), d.len())?;
        self.bounds.support(&(self.inverse.transpose() * d))
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Error::check_dim(self.dim(), x.len())?;
        self.bounds.contains(&(&self.transform * x), tol)
    }

    fn center(&self) -> Vector {
        &self.inverse * self.bounds.center()
    }
}

/// Deterministic reachable-set over-approximation.
#[derive(Debug, Clone, PartialEq)]
pub enum ReachSet {
    Ellipsoid(Ellipsoid),
    Box(IntervalBox),
    Parallelotope(Parallelotope),
}

impl ReachSet {
    pub fn kind(&self) -> &'static str {
        match self {
            ReachSet::Ellipsoid(_) => "ellipsoid",
            ReachSet::Box(_) => "box",
            ReachSet::Parallelotope(_) => "parallelotope",
        }
    }

    /// `min_{a ∈ self} ‖x − a‖_Q`.
    pub fn distance_in(&self, x: &Vector, q: &WeightedNorm) -> Result<f64> {
        match self {
            ReachSet::Ellipsoid(e) => e.distance_in(x, q),
            ReachSet::Box(b) => b.project_in(x, q).map(|r| r.0),
            ReachSet::Parallelotope(p) => p.project_in(x, q).map(|r| r.0),
        }
    }
}

impl ConvexSet for ReachSet {
    fn dim(&self) -> usize {
        match self {
            ReachSet::Ellipsoid(e) => e.dim(),
            ReachSet::Box(b) => b.dim(),
            ReachSet::Parallelotope(p) => p.dim(),
        }
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        match self {
            ReachSet::Ellipsoid(e) => e.support(d),
            ReachSet::Box(b) => b.support(d),
            ReachSet::Parallelotope(p) => p.support(d),
        }
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        match self {
            ReachSet::Ellipsoid(e) => e.contains(x, tol),
            ReachSet::Box(b) => b.contains(x, tol),
            ReachSet::Parallelotope(p) => p.contains(x, tol),
        }
    }

    fn center(&self) -> Vector {
        match self {
            ReachSet::Ellipsoid(e) => e.center(),
            ReachSet::Box(b) => b.center(),
            ReachSet::Parallelotope(p) => p.center(),
        }
    }
}

impl From<Ellipsoid> for ReachSet {
    fn from(e: Ellipsoid) -> Self {
        ReachSet::Ellipsoid(e)
    }
}

impl From<IntervalBox> for ReachSet {
    fn from(b: IntervalBox) -> Self {
        ReachSet::Box(b)
    }
}

impl From<Parallelotope> for ReachSet {
    fn from(p: Parallelotope) -> Self {
        ReachSet::Parallelotope(p)
    }
}

/// `base ⊕ noise`, with `noise` a P-ball centred at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiSet {
    base: ReachSet,
    noise: Ellipsoid,
}

impl MinkowskiSet {
    pub fn new(base: ReachSet, noise: Ellipsoid) -> Result<Self> {
        Error::check_dim(base.dim(), noise.dim())?;
        if noise.center_ref().iter().any(|&c| c != 0.0) {
            return Err(Error::arg("noise ball must be centred at the origin"));
        }
        Ok(Self { base, noise })
    }

    pub fn base(&self) -> &ReachSet {
        &self.base
    }

    pub fn noise_ball(&self) -> &Ellipsoid {
        &self.noise
    }

    /// `max(0, dist_P(x, base) − ρ)`: how far `x` lies outside the sum.
    pub fn excess(&self, x: &Vector) -> Result<f64> {
        let d = self.base.distance_in(x, self.noise.norm())?;
        Ok((d - self.noise.radius()).max(0.0))
    }

    /// Same base with the noise radius multiplied by `factor`.
    pub fn scale_noise(&self, factor: f64) -> Result<Self> {
        Ok(Self { base: self.base.clone(), noise: self.noise.with_radius(self.noise.radius() * factor)? })
    }
}

impl ConvexSet for MinkowskiSet {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn support(&self, d: &Vector) -> Result<f64> {
        Ok(self.base.support(d)? + self.noise.support(d)?)
    }

    fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Error::check_dim(self.dim(), x.len())?;
        // Fast exits before solving the projection.
        if self.base.contains(x, tol)? {
            return Ok(true);
        }
        let d = self.base.distance_in(x, self.noise.norm())?;
        Ok(d <= self.noise.radius() + tol)
    }

    fn center(&self) -> Vector {
        self.base.center()
    }
}

/// Outer polygon of a planar convex set from `n_dirs ≥ 8` supporting half-planes.
///
/// Directions are `(cos θ_k, sin θ_k)` with `θ_k = 2πk/n_dirs`; vertices come
/// back counterclockwise without repeating the first one.
pub fn polygon_outline<S: ConvexSet + ?Sized>(set: &S, n_dirs: usize) -> Result<Vec<[f64; 2]>> {
    if n_dirs < 8 {
        return Err(Error::arg("polygon outline needs at least 8 directions"));
    }
    supporting_polygon(set, n_dirs)
}

/// Same as [`polygon_outline`] without the lower bound on the direction count
/// (still needs at least 3).
pub fn supporting_polygon<S: ConvexSet + ?Sized>(set: &S, n_dirs: usize) -> Result<Vec<[f64; 2]>> {
    if set.dim() != 2 {
        return Err(Error::Unsupported("polygon outlines are only defined for planar sets".into()));
    }
    if n_dirs < 3 {
        return Err(Error::arg("at least 3 directions are needed"));
    }
    let dirs: Vec<(f64, f64)> = (0..n_dirs)
        .map(|k| {
            let th = core::f64::consts::TAU * k as f64 / n_dirs as f64;
            (th.cos(), th.sin())
        })
        .collect();
    let mut h = Vec::with_capacity(n_dirs);
    for &(c, s) in &dirs {
        h.push(set.support(&Vector::from_column_slice(&[c, s]))?);
    }
    let mut verts: Vec<[f64; 2]> = Vec::with_capacity(n_dirs);
    for k in 0..n_dirs {
        let j = (k + 1) % n_dirs;
        let (a1, b1) = dirs[k];
        let (a2, b2) = dirs[j];
        let det = a1 * b2 - a2 * b1;
        let x = (h[k] * b2 - h[j] * b1) / det;
        let y = (a1 * h[j] - a2 * h[k]) / det;
        verts.push([x, y]);
    }
    let scale = verts.iter().fold(1.0_f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
    let close = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) <= 1e-12 * scale;
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(verts.len());
    for v in verts {
        if out.last().is_none_or(|last| !close(last, &v)) {
            out.push(v);
        }
    }
    while out.len() > 1 && close(&out[0], out.last().unwrap()) {
        out.pop();
    }
    Ok(out)
}

/// Strictly convex box-constrained QP `min ½ yᵀH y − gᵀ y, lo ≤ y ≤ hi`,
/// solved by a primal active-set method (finite termination).
pub(crate) fn box_qp(h: &Matrix, g: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    let n = g.len();
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Free,
        Lower,
        Upper,
    }
    let scale = g.amax().max(h.amax()).max(1e-300);
    let eps = 1e-13 * scale;

    // Start from the clamped unconstrained minimiser.
    let unconstrained = solve_spd(h, g).unwrap_or_else(|| g.clone());
    let mut y = Vector::zeros(n);
    let mut state = alloc::vec![State::Free; n];
    for i in 0..n {
        if lo[i] == hi[i] || unconstrained[i] <= lo[i] {
            y[i] = lo[i];
            state[i] = State::Lower;
        } else if unconstrained[i] >= hi[i] {
            y[i] = hi[i];
            state[i] = State::Upper;
        } else {
            y[i] = unconstrained[i];
        }
    }

    for _ in 0..(50 * (n + 1)) {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == State::Free).collect();
        let mut target = y.clone();
        if !free.is_empty() {
            let k = free.len();
            let mut hff = Matrix::zeros(k, k);
            let mut rhs = Vector::zeros(k);
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = g[i];
                for j in 0..n {
                    if state[j] != State::Free {
                        rhs[a] -= h[(i, j)] * y[j];
                    }
                }
                for (b, &j) in free.iter().enumerate() {
                    hff[(a, b)] = h[(i, j)];
                }
            }
            if let Some(z) = solve_spd(&hff, &rhs) {
                for (a, &i) in free.iter().enumerate() {
                    target[i] = z[a];
                }
            }
        }

        let mut alpha = 1.0;
        let mut block: Option<(usize, State)> = None;
        for &i in &free {
            let step = target[i] - y[i];
            if target[i] < lo[i] && step < 0.0 {
                let a = (lo[i] - y[i]) / step;
                if a < alpha {
                    alpha = a;
                    block = Some((i, State::Lower));
                }
            } else if target[i] > hi[i] && step > 0.0 {
                let a = (hi[i] - y[i]) / step;
                if a < alpha {
                    alpha = a;
                    block = Some((i, State::Upper));
                }
            }
        }
        let alpha = alpha.clamp(0.0, 1.0);
        for &i in &free {
            y[i] += alpha * (target[i] - y[i]);
            y[i] = y[i].clamp(lo[i], hi[i]);
        }
        if let Some((i, s)) = block {
            y[i] = if s == State::Lower { lo[i] } else { hi[i] };
            state[i] = s;
            continue;
        }

        let grad = h * &y - g;
        let mut release: Option<(usize, f64)> = None;
        for i in 0..n {
            if lo[i] == hi[i] {
                continue;
            }
            let violation = match state[i] {
                State::Lower => -grad[i],
                State::Upper => grad[i],
                State::Free => continue,
            };
            if violation > eps && release.is_none_or(|(_, v)| violation > v) {
                release = Some((i, violation));
            }
        }
        match release {
            Some((i, _)) => state[i] = State::Free,
            None => return y,
        }
    }
    y
}

fn solve_spd(h: &Matrix, g: &Vector) -> Option<Vector> {
    if let Some(c) = h.clone().cholesky() {
        return Some(c.solve(g));
    }
    h.clone().lu().solve(g)
}
