use hdproj::simulation::{gen_zero_inflated, NullSetting};
use hdproj::sparse_logistic::{
    default_grid, fit_logistic_lasso, kkt_violation, lambda_max, lasso_path, LassoConfig, DEFAULT_MIN_RATIO,
    DEFAULT_PATH_LEN,
};
use ndarray::{concatenate, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stacked(seed: u64) -> (Array2<f64>, Vec<bool>) {
    let (d, _) = gen_zero_inflated(NullSetting::Alternative, 500, seed).unwrap();
    let x = concatenate(Axis(0), &[d.x().view(), d.z().view()]).unwrap();
    let labels = (0..x.nrows()).map(|i| i < d.n_x()).collect();
    (x, labels)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn path_support_and_kkt_on_zero_inflated_data() {
    let (x, labels) = stacked(31);
    let grid = default_grid(lambda_max(x.view(), &labels).unwrap(), DEFAULT_PATH_LEN, DEFAULT_MIN_RATIO);
    let path = lasso_path(x.view(), &labels, &grid).unwrap();
    assert_eq!(path[0].nonzero_count, 0);
    for fit in &path {
        assert!(kkt_violation(x.view(), &labels, fit).unwrap() <= 1e-4);
        assert_eq!(fit.nonzero_count, fit.beta.iter().filter(|b| **b != 0.0).count());
    }
    // Exact lasso supports can lose a variable deep in the path; every fit
    // here is KKT-certified, so only the upper part is checked for growth.
    let upper: Vec<_> = path.iter().filter(|f| f.lambda >= 0.1 * grid[0]).collect();
    assert!(upper.len() >= 25);
    for pair in upper.windows(2) {
        assert!(
            pair[1].nonzero_count >= pair[0].nonzero_count,
            "support shrank from {} to {} between lambda {} and {}",
            pair[0].nonzero_count,
            pair[1].nonzero_count,
            pair[0].lambda,
            pair[1].lambda
        );
    }
}

#[test]
fn permuted_labels_give_smaller_coefficients() {
    let cfg = LassoConfig::default();
    let norm = |x: &Array2<f64>, labels: &[bool], seed: u64| {
        let fit = fit_logistic_lasso(x.view(), labels, &LassoConfig { seed, ..cfg.clone() }).unwrap();
        fit.beta.dot(&fit.beta).sqrt()
    };
    let (x, labels) = stacked(41);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let permuted: Vec<f64> = (0..100)
        .map(|r| {
            let mut l = labels.clone();
            l.shuffle(&mut rng);
            norm(&x, &l, r)
        })
        .collect();
    let real: Vec<f64> = (0..5)
        .map(|r| {
            let (x, labels) = stacked(100 + r);
            norm(&x, &labels, r)
        })
        .collect();
    assert!(median(permuted.clone()) <= median(real.clone()), "{permuted:?} vs {real:?}");
}
