use lrperc::estimators::{
    conductance_decay_experiment, count_edges_above_zero, delta_eff_estimate, edges_above_zero_experiment,
    expected_edges_above_zero, long_edge_exact, long_edge_probability, ConductanceLaw, DecaySource,
};
use lrperc::mc::{ols_slope, Estimate, Exec};
use lrperc::model::{sample_graph, ConnectionFunction, KernelSpec, ModelConfig};
use proptest::prelude::*;

fn agree(a: &Estimate, b: &Estimate) -> bool {
    (a.mean - b.mean).abs() <= 4.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_above_zero_survive_reflection(seed in any::<u64>(), delta in 1.1f64..4.0, n in 2i64..40) {
        let g = sample_graph(&ModelConfig::homogeneous(n, 1.0, delta, seed)).unwrap();
        let reflected = g
            .edges()
            .iter()
            .map(|e| (1 - e.b, 1 - e.a))
            .filter(|&(a, b)| a <= 0 && 0 < b)
            .count() as u64;
        prop_assert_eq!(reflected, count_edges_above_zero(&g));
    }

    #[test]
    fn exact_long_edge_probability_is_non_increasing(delta in 2.0f64..5.0, p in 0.05f64..1.0) {
        let cfg = ModelConfig::homogeneous(512, p, delta, 0);
        let probs: Vec<f64> = (0..=8).map(|k| long_edge_exact(&cfg, k).unwrap().unwrap()).collect();
        for w in probs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15, "{probs:?}");
        }
    }

    #[test]
    fn constant_kernels_match_closed_form(delta in 2.1f64..5.0, c in 0.5f64..2.0, p in 0.1f64..1.0) {
        let scales = [1e2, 1e3, 1e4, 1e5];
        let kernel = KernelSpec::Constant { value: c };
        let phi = ConnectionFunction::Polynomial { p, delta };
        let e = delta_eff_estimate(&kernel, &phi, &scales, 16).unwrap();
        let closed: Vec<f64> = scales.iter().map(|&n: &f64| -((1.0 - 1.0 / n).powi(2) * phi.eval(c * n)).ln()).collect();
        let logs: Vec<f64> = scales.iter().map(|n| n.ln()).collect();
        let want = ols_slope(&logs[e.fit_start..], &closed[e.fit_start..]).unwrap();
        prop_assert!((e.estimate - want).abs() < 1e-8, "{} vs {want}", e.estimate);
    }
}

#[test]
fn long_edges_proliferate_below_exponent_two() {
    // About 2^{k(2 - δ)} long edges are expected at scale k, so monotonicity
    // fails for 1 < δ < 2.
    let cfg = ModelConfig::homogeneous(512, 0.05, 1.2, 0);
    let p1 = long_edge_exact(&cfg, 1).unwrap().unwrap();
    let p6 = long_edge_exact(&cfg, 6).unwrap().unwrap();
    assert!(p6 > p1, "{p1} {p6}");
}

/// Adaptive Simpson on `[a, b]` to relative tolerance `tol`.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let both = left + right;
        if depth == 0 || (both - whole).abs() <= 15.0 * tol * both.abs().max(1e-300) {
            return both + (both - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, tol, depth - 1) + step(f, m, b, fm, frm, fb, right, tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    // Split once up front so a symmetric integrand cannot fool the first test.
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[test]
fn product_kernel_exponent_matches_adaptive_oracle() {
    let kernel = KernelSpec::Product { gamma: 0.4 };
    let phi = ConnectionFunction::Polynomial { p: 1.0, delta: 3.0 };
    let scales = [1e2, 1e3, 1e4, 1e5, 1e6];
    let e = delta_eff_estimate(&kernel, &phi, &scales, 16).unwrap();

    let oracle_integral = |n: f64| {
        let lo = -n.ln();
        let inner = |u: f64| {
            let s = u.exp();
            s * adaptive_simpson(&|v: f64| v.exp() * phi.eval(kernel.eval(s, v.exp()) * n), lo, 0.0, 1e-10)
        };
        adaptive_simpson(&inner, lo, 0.0, 1e-9)
    };
    let ys: Vec<f64> = scales.iter().map(|&n| -oracle_integral(n).ln()).collect();
    let xs: Vec<f64> = scales.iter().map(|n| n.ln()).collect();
    let oracle = ols_slope(&xs[e.fit_start..], &ys[e.fit_start..]).unwrap();
    assert!((e.estimate - oracle).abs() < 0.02, "{} vs oracle {oracle}", e.estimate);
    assert!(e.estimate > 2.0);
}

#[test]
fn weak_decay_window_mean_grows_like_square_root() {
    // Independent oracle: direct evaluation of the window series.
    let oracle = [(1e2f64, 22.0295), (1e3, 72.6549), (1e4, 232.860)];
    let mut logs = Vec::new();
    for (n, want) in oracle {
        let got = expected_edges_above_zero(&ModelConfig::homogeneous(n as i64, 1.0, 1.5, 0)).unwrap();
        assert!((got - want).abs() / want < 1e-5, "n={n}: {got} vs {want}");
        logs.push((n.ln(), got.ln()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
    let slope = ols_slope(&xs, &ys).unwrap();
    assert!((slope - 0.5).abs() < 0.1, "{slope}");
}

#[test]
fn independent_seeds_agree() {
    let cfg = ModelConfig::homogeneous(200, 1.0, 2.5, 0);
    let a = edges_above_zero_experiment(&cfg, 2000, 1, Exec::default()).unwrap();
    let b = edges_above_zero_experiment(&cfg, 2000, 2, Exec::default()).unwrap();
    assert!(agree(&a.count, &b.count), "{:?} vs {:?}", a.count, b.count);

    let law = DecaySource::Law(ConductanceLaw::Exponential { rate: 1.0 });
    let a = conductance_decay_experiment(&law, &[8, 32], 500, 1, Exec::default()).unwrap();
    let b = conductance_decay_experiment(&law, &[8, 32], 500, 2, Exec::default()).unwrap();
    for (x, y) in a.estimates.iter().zip(&b.estimates) {
        assert!(agree(x, y), "{x:?} vs {y:?}");
    }

    let a = long_edge_probability(&cfg, 3, 2000, 1, Exec::default()).unwrap();
    let b = long_edge_probability(&cfg, 3, 2000, 2, Exec::default()).unwrap();
    assert!(agree(&a.probability, &b.probability));
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = ModelConfig::homogeneous(64, 1.0, 2.0, 0);
    let one = edges_above_zero_experiment(&cfg, 300, 7, Exec::with_workers(1)).unwrap();
    let four = edges_above_zero_experiment(&cfg, 300, 7, Exec::with_workers(4)).unwrap();
    assert_eq!(one, four);
}
