use proptest::prelude::*;
use stochreach::certify::{ContractionCertificate, Provenance};
use stochreach::dynamics::{integrate_ode, InputSignal};
use stochreach::pendulum;
use stochreach::probreach::{prob_reach_contraction, prob_reach_interval, IntervalReachSpec, ProbReachSet};
use stochreach::setcalc::{ConvexSet, IntervalBox};
use stochreach::stochbound::radius;
use stochreach::{Vector, DEFAULT_TOL};

fn cert() -> ContractionCertificate {
    ContractionCertificate::new(pendulum::reference_norm(), -0.5, 0.0, Provenance::User)
        .unwrap()
        .with_diffusion(&pendulum::diffusion_column())
        .unwrap()
        .with_rate(-0.5, 0.0, Provenance::User)
        .unwrap()
}

fn contraction_sets(delta: f64) -> Vec<ProbReachSet> {
    let r1 = pendulum::reference_norm().norm(&pendulum::initial_corner()).unwrap();
    let x0 = Vector::from_column_slice(&[0.1, -0.2]);
    prob_reach_contraction(
        &pendulum::system(),
        &cert(),
        &x0,
        &InputSignal::none(),
        r1,
        0.0,
        delta,
        &[0.5, 1.0, 2.0],
        1e-2,
    )
    .unwrap()
}

fn interval_sets(delta: f64) -> Vec<ProbReachSet> {
    let spec = IntervalReachSpec::new(pendulum::transformed_box(), IntervalBox::empty_dim())
        .with_transform(pendulum::transform());
    prob_reach_interval(&pendulum::system(), &cert(), &spec, delta, &[0.5, 1.0, 2.0], 1e-2).unwrap().sets
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn smaller_delta_gives_larger_sets(d1 in 1e-3..1.0f64, d2 in 1e-3..1.0f64, phase in 0.0..1.0f64) {
        let (small, large) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        for build in [contraction_sets, interval_sets] {
            let (a, b) = (build(small), build(large));
            for (sa, sb) in a.iter().zip(&b) {
                for k in 0..100 {
                    let th = phase + std::f64::consts::TAU * k as f64 / 100.0;
                    let d = Vector::from_column_slice(&[th.cos(), th.sin()]);
                    prop_assert!(sa.support(&d).unwrap() >= sb.support(&d).unwrap() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_radius_grows_with_time(c in -3.0..1.0f64, d in 0.0..1.0f64, t in 0.0..5.0f64, dt in 0.0..1.0f64, delta in 1e-3..1.0f64) {
        prop_assert!(radius(c, d, t + dt, delta).unwrap() >= radius(c, d, t, delta).unwrap());
    }
}

#[test]
fn nominal_endpoint_is_covered() {
    let x0 = Vector::from_column_slice(&[0.1, -0.2]);
    let tr = integrate_ode(&pendulum::system(), &x0, &InputSignal::none(), 2.0, 1e-2).unwrap();
    for s in contraction_sets(0.05) {
        assert!(s.contains(tr.state_at(s.t()).unwrap(), DEFAULT_TOL).unwrap());
    }
    for s in interval_sets(0.05) {
        assert!(s.contains(&s.center(), DEFAULT_TOL).unwrap());
    }
}
