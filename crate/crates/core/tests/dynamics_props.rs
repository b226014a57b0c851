use proptest::prelude::*;
use stochreach::dynamics::{
    integrate_ode, simulate_sde_path, simulate_sde_with, InputSignal, NoiseStream, SystemModel,
};
use stochreach::pendulum;
use stochreach::{Matrix, Vector};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sde_paths_are_bitwise_reproducible(seed in any::<u64>(), path in 0u64..1000, x1 in -0.5..0.5f64) {
        let sys = pendulum::system();
        let x0 = Vector::from_column_slice(&[x1, 0.0]);
        let a = simulate_sde_path(&sys, &x0, &InputSignal::none(), 0.5, 1e-3, seed, path).unwrap();
        let b = simulate_sde_path(&sys, &x0, &InputSignal::none(), 0.5, 1e-3, seed, path).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn rk4_converges_at_fourth_order_on_pendulum() {
    let sys = pendulum::system();
    let x0 = Vector::from_column_slice(&[std::f64::consts::PI / 10.0, 0.2]);
    let end = |dt: f64| integrate_ode(&sys, &x0, &InputSignal::none(), 2.0, dt).unwrap().last().unwrap().clone();
    let (a, b, c) = (end(0.02), end(0.01), end(0.005));
    let order = ((&a - &b).norm() / (&b - &c).norm()).log2();
    assert!(order >= 3.5, "observed order {order}");
}

/// Euler–Maruyama on the OU process `dX = aX dt + σ dW`, driven by a fine
/// Brownian path that is shared with an exact reference process. The
/// discrepancy of mean and variance at t = 1 must shrink as dt decreases.
#[test]
fn euler_maruyama_is_weakly_consistent() {
    let (a, sigma, x0) = (-1.0, 0.5, 1.0);
    let sys = SystemModel::linear(Matrix::from_element(1, 1, a), None, 1)
        .unwrap()
        .with_constant_diffusion(Matrix::from_element(1, 1, sigma))
        .unwrap();
    let fine = 1e-5;
    let n_fine = 100_000;
    let n_paths = 400;
    let dts = [1e-2, 1e-3, 1e-4];
    let mut em = vec![Vec::with_capacity(n_paths); dts.len()];
    let mut exact = Vec::with_capacity(n_paths);
    let mut xi = vec![0.0; n_fine];
    let decay = (a * fine).exp();
    let spread = sigma * ((2.0 * a * fine).exp_m1() / (2.0 * a)).sqrt();
    for path in 0..n_paths as u64 {
        NoiseStream::new(17, path).fill_normal(&mut xi);
        let mut x = x0;
        for z in &xi {
            x = decay * x + spread * z;
        }
        exact.push(x);
        for (k, &dt) in dts.iter().enumerate() {
            let m = (dt / fine).round() as usize;
            let mut chunks = xi.chunks(m);
            let tr = simulate_sde_with(&sys, &Vector::from_element(1, x0), &InputSignal::none(), 1.0, dt, |buf| {
                buf[0] = chunks.next().unwrap().iter().sum::<f64>() / (m as f64).sqrt();
            })
            .unwrap();
            em[k].push(tr.last().unwrap()[0]);
        }
    }
    let moments = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, var)
    };
    let (m_ref, v_ref) = moments(&exact);
    let errs: Vec<(f64, f64)> = em
        .iter()
        .map(|v| {
            let (m, s) = moments(v);
            ((m - m_ref).abs(), (s - v_ref).abs())
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "errors not decreasing: {errs:?}");
    }
    // Exact reference moments agree with the closed form up to sampling error.
    let mean_exact = x0 * a.exp();
    let var_exact = sigma * sigma * (2.0 * a).exp_m1() / (2.0 * a);
    assert!((m_ref - mean_exact).abs() < 4.0 * (var_exact / n_paths as f64).sqrt());
    assert!((v_ref - var_exact).abs() < 4.0 * var_exact * (2.0 / n_paths as f64).sqrt());
}
