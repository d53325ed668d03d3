use efimov_fano::fanofit::{
    fano_gradient, fano_profile, fit_samples, FanoParameters, FitModel, FitParams, FitResult, Seed, WindowMode,
};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

fn mesh(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn fano_data(p: &FanoParameters, e: &[f64]) -> Vec<f64> {
    e.iter().map(|&x| fano_profile(x, p)).collect()
}

/// Fano data with 1% multiplicative Gaussian noise from a fixed stream.
fn noisy(p: &FanoParameters, e: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 0.01).unwrap();
    e.iter().map(|&x| fano_profile(x, p) * (1.0 + rng.sample(n))).collect()
}

fn fano_fit(e: &[f64], s: &[f64]) -> FitResult {
    fit_samples(e, s, FitModel::Fano, Seed::Auto, WindowMode::Auto, None).unwrap()
}

fn fano(r: &FitResult) -> FanoParameters {
    *r.params.fano().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn params() -> impl Strategy<Value = FanoParameters> {
    (0.1f64..10.0, prop_oneof![-8.0f64..-0.5, 0.5f64..8.0], 0.5f64..3.0, 0.05f64..1.0)
        .prop_map(|(s, q, e, g)| FanoParameters::new(s, q, e, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gradient_matches_central_differences(p in params(), e in -2.0f64..6.0) {
        let g = fano_gradient(e, &p);
        let base = p.as_array();
        for k in 0..4 {
            let h = 1e-6 * base[k].abs().max(1e-3);
            let shifted = |d: f64| {
                let mut v = base;
                v[k] += d;
                fano_profile(e, &FanoParameters::new(v[0], v[1], v[2], v[3]).unwrap())
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            // absolute floor for partials that vanish at this sample
            let scale = g[k].abs().max(1e-3 * fano_profile(e, &p).abs().max(p.sigma0) / base[k].abs().max(1e-3));
            prop_assert!((fd - g[k]).abs() <= 1e-6 * scale, "k={} fd={} analytic={}", k, fd, g[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scaling_sigma_scales_only_the_background(p in params(), c in 0.01f64..100.0, seed in 0u64..1000) {
        let e = mesh(p.e_r - 6.0 * p.gamma * p.q.abs().max(1.0), p.e_r + 6.0 * p.gamma * p.q.abs().max(1.0), 120);
        let s = noisy(&p, &e, seed);
        let cs: Vec<f64> = s.iter().map(|x| c * x).collect();
        let (a, b) = (fano(&fano_fit(&e, &s)), fano(&fano_fit(&e, &cs)));
        prop_assert!(rel(b.sigma0, c * a.sigma0) < 1e-9, "{:?} {:?}", a, b);
        prop_assert!(rel(b.q, a.q) < 1e-9);
        prop_assert!(rel(b.e_r, a.e_r) < 1e-9);
        prop_assert!(rel(b.gamma, a.gamma) < 1e-9);
    }

    #[test]
    fn shifting_energy_shifts_only_the_position(p in params(), d in -0.4f64..5.0, seed in 0u64..1000) {
        let e = mesh(p.e_r - 6.0 * p.gamma * p.q.abs().max(1.0), p.e_r + 6.0 * p.gamma * p.q.abs().max(1.0), 120);
        let s = noisy(&p, &e, seed);
        let es: Vec<f64> = e.iter().map(|x| x + d).collect();
        let (a, b) = (fano(&fano_fit(&e, &s)), fano(&fano_fit(&es, &s)));
        prop_assert!((b.e_r - (a.e_r + d)).abs() < 1e-9 * (1.0 + a.e_r.abs()), "{:?} {:?}", a, b);
        prop_assert!(rel(b.q, a.q) < 1e-9);
        prop_assert!(rel(b.gamma, a.gamma) < 1e-9);
        prop_assert!(rel(b.sigma0, a.sigma0) < 1e-9);
    }

    #[test]
    fn refitting_a_converged_fit_is_a_fixed_point(p in params(), seed in 0u64..1000) {
        let e = mesh(p.e_r - 6.0 * p.gamma * p.q.abs().max(1.0), p.e_r + 6.0 * p.gamma * p.q.abs().max(1.0), 120);
        let s = noisy(&p, &e, seed);
        let first = fano_fit(&e, &s);
        prop_assert!(first.converged);
        let again = fit_samples(&e, &s, FitModel::Fano, Seed::Fano(fano(&first)), WindowMode::Auto, None).unwrap();
        let (a, b) = (fano(&first).as_array(), fano(&again).as_array());
        for k in 0..4 {
            prop_assert!(rel(b[k], a[k]) < 1e-12, "{:?} {:?}", a, b);
        }
    }

    #[test]
    fn fitted_zero_matches_the_data_zero(p in params()) {
        let e = mesh(p.e_r - 6.0 * p.gamma * p.q.abs().max(1.0), p.e_r + 6.0 * p.gamma * p.q.abs().max(1.0), 200);
        let r = fano_fit(&e, &fano_data(&p, &e));
        prop_assert!((fano(&r).zero_energy() - p.zero_energy()).abs() < 1e-6, "{:?} vs {:?}", r.params, p);
    }
}

#[test]
fn breit_wigner_loses_to_fano_on_asymmetric_data() {
    let p = FanoParameters::new(1.0, 4.0, 1.63, 0.25).unwrap();
    let e = mesh(0.5, 3.5, 200);
    let s = fano_data(&p, &e);
    let f = fano_fit(&e, &s);
    let b = fit_samples(&e, &s, FitModel::BreitWigner, Seed::Auto, WindowMode::Auto, None).unwrap();
    assert!(matches!(b.params, FitParams::BreitWigner(_)));
    assert!(b.residual_norm > f.residual_norm);
}
