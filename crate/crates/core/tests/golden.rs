use hdproj::dataset::{Dataset, Direction, FoldPlan};
use hdproj::projection_test::{t_onestep, t_plugin, DirectionProvider, TestOptions};
use hdproj::simulation::{Generator, NullSetting};
use hdproj::{make_folds, Error};
use ndarray::{array, Array1};
use proptest::prelude::*;

// Fold 0 scores: X {1, 3}, Z {0, 2}. Fold 1 scores: X {2, 6}, Z {-1, 1}.
// θ = (2 - 1) + (4 - 0) = 5; σ̂² = (1/2 + 1/2) + (4/2 + 1/2) = 3.5.
#[test]
fn eight_sample_hand_evaluation() {
    let x = array![[1.0, 7.0], [2.0, -3.0], [3.0, 0.5], [6.0, 2.0]];
    let z = array![[0.0, 1.0], [-1.0, 4.0], [2.0, -2.0], [1.0, 0.0]];
    let d = Dataset::new(x, z, None).unwrap();
    let plan = FoldPlan::from_assignments(2, vec![0, 1, 0, 1], vec![0, 1, 0, 1]).unwrap();
    let u = Direction::user(array![1.0, 0.0]).unwrap();
    let r = t_plugin(&d, &plan, &DirectionProvider::Fixed(u), &TestOptions::default()).unwrap();
    assert_eq!(r.theta_hat, 5.0);
    assert!((r.std_error - 3.5f64.sqrt()).abs() < 1e-15);
    assert!((r.statistic - 5.0 / 3.5f64.sqrt()).abs() < 1e-14);
    assert!((r.p_value - 0.00752631516645789).abs() < 1e-12);
    let thetas: Vec<f64> = r.per_fold.iter().map(|f| f.theta).collect();
    assert_eq!(thetas, vec![1.0, 4.0]);
    assert!(r.per_fold.iter().all(|f| f.nonzeros == 1));
}

fn twelve_sample() -> (Dataset, FoldPlan, Vec<Direction>) {
    let x = array![
        [0.3, -1.2, 2.0],
        [1.7, 0.4, -0.5],
        [-0.8, 2.2, 1.1],
        [2.5, -0.3, 0.0],
        [0.9, 1.4, -1.6],
        [-1.1, 0.6, 0.7]
    ];
    let z = array![
        [1.2, 0.1, -0.9],
        [-0.4, -1.5, 0.3],
        [0.8, 0.9, 1.9],
        [-2.0, 0.2, -0.2],
        [0.5, -0.7, 1.0],
        [1.6, 1.3, -1.4]
    ];
    let d = Dataset::new(x, z, None).unwrap();
    let plan = FoldPlan::from_assignments(2, vec![0, 1, 0, 1, 0, 1], vec![1, 0, 0, 1, 1, 0]).unwrap();
    let dirs = vec![
        Direction::user(array![0.6, 0.8, 0.0]).unwrap(),
        Direction::user(array![-0.48, -0.64, 0.6]).unwrap(),
    ];
    (d, plan, dirs)
}

#[test]
fn twelve_sample_brute_force() {
    let (d, plan, dirs) = twelve_sample();
    let r = t_plugin(&d, &plan, &DirectionProvider::PerFold(dirs.clone()), &TestOptions::default()).unwrap();

    let u0 = dirs[0].weights().clone();
    let u1 = dirs[1].weights().clone();
    let u1 = if u0.dot(&u1) < 0.0 { -u1 } else { u1 };
    let us = [u0, u1];
    let scores = |rows: &ndarray::Array2<f64>, assign: &[usize], m: usize| -> Vec<f64> {
        (0..rows.nrows()).filter(|&i| assign[i] == m).map(|i| rows.row(i).dot(&us[m])).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let msd = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64
    };
    let (num, var) = (0..2).fold((0.0, 0.0), |(n, s), m| {
        let sx = scores(d.x(), plan.x_assignment(), m);
        let sz = scores(d.z(), plan.z_assignment(), m);
        (n + mean(&sx) - mean(&sz), s + msd(&sx) / sx.len() as f64 + msd(&sz) / sz.len() as f64)
    });
    let brute = num / var.sqrt();
    assert!((r.statistic - brute).abs() < 1e-12, "{} vs {brute}", r.statistic);
    assert_eq!(r.fold_directions[1], us[1]);
}

proptest! {
    #[test]
    fn scale_and_sign(c in 0.01f64..100.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        prop_assume!(a.abs() + b.abs() > 1e-3);
        let (d, plan, _) = twelve_sample();
        let u = Array1::from(vec![a, b, 0.5]);
        let opts = TestOptions::default();
        let run = |w: Array1<f64>| {
            t_plugin(&d, &plan, &DirectionProvider::Fixed(Direction::user(w).unwrap()), &opts).unwrap()
        };
        let base = run(u.clone());
        let scaled = run(&u * c);
        let flipped = run(-&u);
        prop_assert!((base.statistic - scaled.statistic).abs() <= 1e-10 * base.statistic.abs().max(1.0));
        prop_assert_eq!(flipped.statistic, -base.statistic);
        prop_assert_eq!(flipped.p_value, base.p_value);
    }
}

#[test]
fn onestep_equals_plugin_when_s_is_zero() {
    let g = Generator::spiked(NullSetting::GlobalNull).unwrap().with_sizes(80, 40).unwrap();
    let d = g.sample(17).unwrap();
    let plan = make_folds(d.n_x(), d.n_z(), 2, 3).unwrap();
    let opts = TestOptions {
        oracle: Some(g.spec().clone()),
        ..TestOptions::default()
    };
    assert!(g.spec().oracle_nuisance(1).unwrap().s.iter().all(|v| *v == 0.0));
    let one = t_onestep(&d, &plan, 1, &opts).unwrap();
    let pi = t_plugin(&d, &plan, &DirectionProvider::Pc(1), &opts).unwrap();
    assert!((one.statistic - pi.statistic).abs() <= 1e-12 * pi.statistic.abs().max(1.0));
    assert!((one.theta_hat - pi.theta_hat).abs() <= 1e-12);
}

#[test]
fn estimated_runs_are_deterministic_and_sign_aligned() {
    let g = Generator::spiked(NullSetting::ProjectedNull).unwrap().with_sizes(120, 60).unwrap();
    let d = g.sample(5).unwrap();
    let plan = make_folds(d.n_x(), d.n_z(), 3, 8).unwrap();
    let opts = TestOptions::default();
    let a = t_onestep(&d, &plan, 1, &opts).unwrap();
    assert_eq!(a, t_onestep(&d, &plan, 1, &opts).unwrap());
    let pi = t_plugin(&d, &plan, &DirectionProvider::Pc(1), &opts).unwrap();
    for u in &pi.fold_directions[1..] {
        assert!(u.dot(&pi.fold_directions[0]) >= 0.0);
    }
    assert!(pi.p_value > 0.0 && pi.p_value <= 1.0);
}

#[test]
fn onestep_rejects_a_fixed_provider_and_bad_pc_index() {
    let (d, plan, dirs) = twelve_sample();
    let spec = hdproj::TestSpec::new(hdproj::Statistic::OneStep, DirectionProvider::Fixed(dirs[0].clone()));
    let cf = hdproj::CrossFit::new(&d, &plan).unwrap();
    assert!(matches!(cf.run(&spec), Err(Error::InvalidInput(_))));
    assert!(t_plugin(&d, &plan, &DirectionProvider::Pc(9), &TestOptions::default()).is_err());
}
