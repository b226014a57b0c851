//! Acceptance criteria. Each test prints exactly one `PASS`/`FAIL` line
//! (run with `--nocapture` to see them) and then asserts the same outcome.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochreach::certify::{
    compute_dp, lmi_margin, search_certificate, verify_certificate, ContractionCertificate, Provenance, SearchOptions,
    VertexHull, DEFAULT_VERIFY_TOL,
};
use stochreach::dynamics::{self, InputSignal, SystemModel};
use stochreach::pendulum;
use stochreach::probreach::{prob_reach_contraction, prob_reach_interval, IntervalReachSpec};
use stochreach::reach::{self, embed_integrate, tube_radius, InclusionFunction};
use stochreach::setcalc::{ConvexSet, Ellipsoid, IntervalBox, Parallelotope, WeightedNorm};
use stochreach::stochbound::{expectation_bound, radius};
use stochreach::validate::{monte_carlo_coverage, CoverageReport, InitialSampler};
use stochreach::{Matrix, Vector};

const CHECKPOINTS: [f64; 3] = [1.0, 2.0, 4.0];
const DELTA: f64 = 0.01;
const PATHS: usize = 2000;
const SIM_DT: f64 = 1e-3;
const SEED: u64 = 20_240_601;

fn verdict(id: u32, title: &str, passed: bool, elapsed: Duration, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("[acceptance] criterion {id} {tag}: {title}; {detail}; {:.3} s", elapsed.as_secs_f64());
}

fn hull() -> VertexHull {
    VertexHull::new(pendulum::hull()).unwrap()
}

/// Exact contraction rate of the reference `P` on the hull: the largest
/// vertex matrix measure, which bounds `μ_P(D_x f(x))` for every state.
fn reference_rate() -> f64 {
    let norm = pendulum::reference_norm();
    pendulum::hull().iter().map(|a| norm.matrix_measure(a).unwrap()).fold(f64::NEG_INFINITY, f64::max)
}

fn reference_certificate() -> ContractionCertificate {
    let c = reference_rate();
    ContractionCertificate::new(pendulum::reference_norm(), c, 0.0, Provenance::Proven)
        .unwrap()
        .with_diffusion(&pendulum::diffusion_column())
        .unwrap()
        .with_rate(c, 0.0, Provenance::Proven)
        .unwrap()
}

fn coverage_bound() -> f64 {
    0.99 - 3.0 * (0.0099f64 / PATHS as f64).sqrt()
}

fn coverage_detail(rep: &CoverageReport) -> (bool, String) {
    let bound = coverage_bound();
    let ok = rep.checkpoints.iter().all(|c| c.coverage >= bound);
    let per: Vec<String> = rep.checkpoints.iter().map(|c| format!("t={} coverage={:.4}", c.t, c.coverage)).collect();
    (ok, format!("{} (bound {:.4})", per.join(", "), bound))
}

#[test]
fn criterion_1_dp_reproduction() {
    let start = Instant::now();
    let dp = compute_dp(&pendulum::diffusion_column(), &pendulum::reference_norm()).unwrap();
    let elapsed = start.elapsed();
    let passed = (dp - 0.0127).abs() <= 1e-3 && elapsed < Duration::from_millis(1);
    verdict(1, "d_P reproduction", passed, elapsed, &format!("d_P = {dp:.6}, expected 0.0127 +/- 0.001"));
    assert!(passed);
}

#[test]
fn criterion_2_certificate_verification() {
    let h = hull();
    let start = Instant::now();
    let rep = verify_certificate(&h, &pendulum::reference_norm(), pendulum::REFERENCE_C_P, 0.05);
    let elapsed = start.elapsed();
    let worst = rep.worst_margin();
    let passed = rep.passed && worst <= 0.05 && elapsed < Duration::from_millis(10);
    verdict(2, "certificate verification", passed, elapsed, &format!("worst LMI margin {worst:.5} (tol 0.05)"));
    assert!(passed);
}

#[test]
fn criterion_3_certificate_search() {
    let h = hull();
    let start = Instant::now();
    let cert = search_certificate(&h, &SearchOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let rep = verify_certificate(&h, cert.norm(), cert.c_p(), DEFAULT_VERIFY_TOL);
    let passed = cert.c_p() <= -0.45 && rep.passed && elapsed < Duration::from_secs(30);
    verdict(
        3,
        "certificate search",
        passed,
        elapsed,
        &format!("c_P = {:.5} (need <= -0.45), verification margin {:.2e}", cert.c_p(), rep.worst_margin()),
    );
    assert!(passed);
}

#[test]
fn criterion_4_contraction_coverage() {
    let start = Instant::now();
    let sys = pendulum::system();
    let cert = reference_certificate();
    let norm = pendulum::reference_norm();
    let r1 = norm.norm(&pendulum::initial_corner()).unwrap();
    let origin = Vector::zeros(2);
    let none = InputSignal::none();
    let sets = prob_reach_contraction(&sys, &cert, &origin, &none, r1, 0.0, DELTA, &CHECKPOINTS, SIM_DT).unwrap();
    let sampler = InitialSampler::Ellipsoid(Ellipsoid::new(origin, r1, norm).unwrap());
    let rep = monte_carlo_coverage(&sys, &sets, &sampler, &none.into(), PATHS, SIM_DT, SEED).unwrap();
    let elapsed = start.elapsed();
    let (ok, detail) = coverage_detail(&rep);
    let passed = ok && elapsed < Duration::from_secs(120);
    verdict(4, "pendulum coverage, contraction method", passed, elapsed, &detail);
    assert!(passed);
}

#[test]
fn criterion_5_interval_coverage_and_invariance() {
    let start = Instant::now();
    let sys = pendulum::system();
    let cert = reference_certificate();
    let y0 = pendulum::transformed_box();
    let t = pendulum::transform();
    let spec = IntervalReachSpec::new(y0.clone(), IntervalBox::empty_dim())
        .with_transform(t.clone())
        .with_invariant(y0.clone());
    let out = prob_reach_interval(&sys, &cert, &spec, DELTA, &CHECKPOINTS, SIM_DT).unwrap();
    let sampler = InitialSampler::Parallelotope(Parallelotope::new(t, y0.clone()).unwrap());
    let rep =
        monte_carlo_coverage(&sys, &out.sets, &sampler, &InputSignal::none().into(), PATHS, SIM_DT, SEED).unwrap();

    // Forward invariance: every embedding box stays inside Y̅₀ up to t = 4.
    let mut overshoot: f64 = 0.0;
    let mut worst_time = 0.0;
    for k in 0..out.embedding.len() {
        let b = out.embedding.box_at_index(k);
        for i in 0..2 {
            let o = (y0.lo()[i] - b.lo()[i]).max(b.hi()[i] - y0.hi()[i]);
            if o > overshoot {
                overshoot = o;
                worst_time = out.embedding.times()[k];
            }
        }
    }
    let invariant = overshoot <= 1e-12;
    let elapsed = start.elapsed();
    let (ok, detail) = coverage_detail(&rep);
    let passed = ok && invariant && elapsed < Duration::from_secs(120);
    verdict(
        5,
        "pendulum coverage, interval method, forward invariance of Y0",
        passed,
        elapsed,
        &format!(
            "{detail}; invariance {} (max overshoot {overshoot:.3e} at t={worst_time})",
            if invariant { "holds" } else { "violated" }
        ),
    );
    assert!(ok, "coverage below bound: {detail}");
    assert!(invariant, "embedding leaves Y0 by {overshoot:e} at t = {worst_time}");
}

#[test]
fn criterion_6_ou_tightness() {
    let start = Instant::now();
    let (a, sigma) = (-1.0, 0.5);
    let sys = SystemModel::linear(Matrix::from_element(1, 1, a), None, 1)
        .unwrap()
        .with_constant_diffusion(Matrix::from_element(1, 1, sigma))
        .unwrap();
    let times = [0.5, 1.0, 2.0];
    let n = 10_000;
    let x0 = Vector::from_element(1, 0.3);
    let nominal = dynamics::integrate_ode(&sys, &x0, &InputSignal::none(), 2.0, SIM_DT).unwrap();
    let mut sums = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for path in 0..n {
        let tr = dynamics::simulate_sde_path(&sys, &x0, &InputSignal::none(), 2.0, SIM_DT, SEED, path).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let e = tr.state_at(t).unwrap()[0] - nominal.state_at(t).unwrap()[0];
            sums[k] += e * e;
            sq[k] += e.powi(4);
        }
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let mean = sums[k] / n as f64;
        let var = sq[k] / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let bound = expectation_bound(a, sigma * sigma, t).unwrap();
        let z = (mean - bound) / se;
        ok &= z.abs() <= 3.0;
        parts.push(format!("t={t} MC={mean:.5} bound={bound:.5} z={z:+.2}"));
    }
    let elapsed = start.elapsed();
    let passed = ok && elapsed < Duration::from_secs(60);
    verdict(6, "Ornstein-Uhlenbeck tightness", passed, elapsed, &parts.join(", "));
    assert!(passed);
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let l = random_matrix(rng, n, 1.0);
    &l * l.transpose() + Matrix::identity(n, n) * 0.1
}

/// Smallest `c` with `λ_max(AᵀP + PA − 2cP) ≤ 0`, found by bisection on the LMI.
fn lmi_bisection(a: &Matrix, p: &Matrix) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lmi_margin(a, p, mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn measure_lmi_consistency(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let p = WeightedNorm::new(random_spd(rng, n)).unwrap();
        let mut hull_mu = f64::NEG_INFINITY;
        let mut hull_lmi = f64::NEG_INFINITY;
        for _ in 0..k {
            let a = random_matrix(rng, n, 3.0);
            hull_mu = hull_mu.max(p.matrix_measure(&a).unwrap());
            hull_lmi = hull_lmi.max(lmi_bisection(&a, p.matrix()));
        }
        worst = worst.max((hull_mu - hull_lmi).abs() / hull_mu.abs().max(1.0));
    }
    if worst <= 1e-8 {
        Ok(())
    } else {
        Err(format!("measure/LMI disagreement {worst:e}"))
    }
}

fn random_subbox(rng: &mut ChaCha8Rng, b: &IntervalBox) -> IntervalBox {
    let mut lo = b.lo().clone();
    let mut hi = b.hi().clone();
    for i in 0..b.dim() {
        let x: f64 = rng.random_range(b.lo()[i]..=b.hi()[i]);
        let y: f64 = rng.random_range(b.lo()[i]..=b.hi()[i]);
        lo[i] = x.min(y);
        hi[i] = x.max(y);
    }
    IntervalBox::new(lo, hi).unwrap()
}

fn embedding_order_and_monotonicity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let e = Vector::zeros(0);
    let transformed = reach::transform_system(&pendulum::transform(), &pendulum::system()).unwrap();
    let cases: [(InclusionFunction, IntervalBox); 2] = [
        (pendulum::natural_inclusion(), pendulum::initial_box()),
        (InclusionFunction::endpoint(&transformed), pendulum::transformed_box()),
    ];
    for (inc, full) in &cases {
        let outer = embed_integrate(inc, full.lo(), full.hi(), &e, &e, 4.0, 1e-2).map_err(|err| err.to_string())?;
        for _ in 0..20 {
            let sub = random_subbox(rng, full);
            let inner = embed_integrate(inc, sub.lo(), sub.hi(), &e, &e, 4.0, 1e-2).map_err(|err| err.to_string())?;
            for k in 0..inner.len() {
                if !outer.box_at_index(k).contains_box(&inner.box_at_index(k), 1e-12) {
                    return Err(format!("sub-box embedding escapes at t = {}", inner.times()[k]));
                }
            }
        }
    }
    Ok(())
}

fn tube_soundness(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sys = pendulum::system();
    let norm = pendulum::reference_norm();
    let c = reference_rate();
    let r1 = norm.norm(&pendulum::initial_corner()).unwrap();
    let none = InputSignal::none();
    let tube = reach::contraction_tube(&sys, &Vector::zeros(2), &none, c, 0.0, r1, 0.0, &norm, 4.0, 1e-2).unwrap();
    let sampler = InitialSampler::Ellipsoid(Ellipsoid::new(Vector::zeros(2), r1, norm.clone()).unwrap());
    let mut noise = dynamics::NoiseStream::new(rng.random(), 0);
    for _ in 0..1000 {
        let x0 = sampler.sample(&mut noise);
        let tr = dynamics::integrate_ode(&sys, &x0, &none, 4.0, 1e-2).unwrap();
        for (t, x) in tr.times().iter().zip(tr.states()) {
            let d = norm.norm(&(x - tube.nominal().state_at(*t).unwrap())).unwrap();
            if d > tube.radius_at(*t) * (1.0 + 1e-9) + 1e-12 {
                return Err(format!("trajectory leaves the tube at t = {t}"));
            }
        }
    }
    Ok(())
}

fn markov_consistency(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..1000 {
        let c = rng.random_range(-3.0..1.0);
        let d = rng.random_range(0.0..2.0);
        let t = rng.random_range(0.0..5.0);
        let delta = rng.random_range(1e-3..=1.0);
        let e = expectation_bound(c, d, t).unwrap();
        let rho = radius(c, d, t, delta).unwrap();
        if (rho * rho * delta - e).abs() > 1e-12 * e.max(1e-300) {
            return Err(format!("rho^2 delta != E-bound at c={c}, d={d}, t={t}, delta={delta}"));
        }
    }
    Ok(())
}

fn continuity_at_zero() -> Result<(), String> {
    for &t in &[0.1, 1.0, 4.0] {
        let at_zero = expectation_bound(0.0, 0.3, t).unwrap();
        let tube_zero = tube_radius(0.0, 1.5, 0.2, 0.4, t);
        for &c in &[1e-5, -1e-5, 1e-6, -1e-6, 2e-5 / t, -2e-5 / t] {
            let rel = (expectation_bound(c, 0.3, t).unwrap() - at_zero).abs() / at_zero;
            let rel_tube = (tube_radius(c, 1.5, 0.2, 0.4, t) - tube_zero).abs() / tube_zero;
            if rel > 1e-4 || rel_tube > 1e-4 {
                return Err(format!("discontinuity near c = 0 at t = {t}, c = {c}"));
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_7_property_suites() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let results = [
        ("measure/LMI", measure_lmi_consistency(&mut rng)),
        ("embedding order and monotonicity", embedding_order_and_monotonicity(&mut rng)),
        ("tube soundness", tube_soundness(&mut rng)),
        ("Markov consistency", markov_consistency(&mut rng)),
        ("c -> 0 continuity", continuity_at_zero()),
    ];
    let elapsed = start.elapsed();
    let failures: Vec<String> =
        results.iter().filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}"))).collect();
    let passed = failures.is_empty() && elapsed < Duration::from_secs(300);
    let detail = if failures.is_empty() { format!("{} sub-suites hold", results.len()) } else { failures.join("; ") };
    verdict(7, "property suites", passed, elapsed, &detail);
    assert!(passed, "{detail}");
}
