use hdproj::estimators::top_eigen;
use hdproj::influence::{influence_value, true_influence, Group};
use hdproj::numeric::{compensated_mean, sample_sd};
use hdproj::simulation::{gen_spiked, gen_blocks, gen_zero_inflated, Generator, NullSetting, PopulationSpec};

fn check_spectrum(spec: &PopulationSpec) {
    let listed = spec.eigvals.as_ref().expect("analytic spectrum");
    let eig = top_eigen(spec.covariance(), spec.p()).unwrap();
    assert_eq!(listed.len(), spec.p());
    for (j, (a, b)) in listed.iter().zip(eig.values.iter()).enumerate() {
        assert!((a - b).abs() < 1e-8, "{}: eigenvalue {} is {b}, listed {a}", spec.label, j + 1);
    }
    for (k, v) in [(1, &spec.v1), (2, &spec.v2)] {
        if let Some(v) = v {
            let lambda = listed[k - 1];
            let resid = spec.sigma().dot(v) - v * lambda;
            assert!(resid.iter().all(|r| r.abs() < 1e-10), "{}: v{k}", spec.label);
        }
    }
}

#[test]
fn analytic_spectra() {
    check_spectrum(Generator::spiked(NullSetting::GlobalNull).unwrap().spec());
    check_spectrum(Generator::zero_inflated(NullSetting::Alternative, 4, 4).unwrap().spec());
    check_spectrum(Generator::blocks(4, 4).unwrap().spec());
}

#[test]
fn shapes_and_determinism() {
    let (a, spec) = gen_spiked(NullSetting::ProjectedNull, 1).unwrap();
    assert_eq!((a.n_x(), a.n_z(), a.p()), (500, 250, 100));
    assert_eq!(spec.projected_difference(1).unwrap(), 0.0);
    let (f, _) = gen_zero_inflated(NullSetting::GlobalNull, 30, 2).unwrap();
    assert_eq!((f.n_x(), f.n_z(), f.p()), (30, 30, 1000));
    assert_eq!(f, gen_zero_inflated(NullSetting::GlobalNull, 30, 2).unwrap().0);
    let (b, _) = gen_blocks(40, 20, 3).unwrap();
    assert_eq!((b.n_x(), b.n_z(), b.p()), (40, 20, 300));
    assert_eq!(b, gen_blocks(40, 20, 3).unwrap().0);
    assert_ne!(b, gen_blocks(40, 20, 4).unwrap().0);
    assert!(gen_zero_inflated(NullSetting::GlobalNull, 3, 1).is_err());
    assert!(gen_blocks(3, 10, 1).is_err());
}

#[test]
fn spiked_sample_mean() {
    let g = Generator::spiked(NullSetting::GlobalNull).unwrap().with_sizes(100_000, 2).unwrap();
    let d = g.sample(11).unwrap();
    let sigma = g.spec().sigma();
    for j in 0..d.p() {
        let col = d.x().column(j).to_vec();
        let se = (sigma[[j, j]] / col.len() as f64).sqrt();
        let err = compensated_mean(&col) - g.spec().mu_x[j];
        assert!(err.abs() < 5.0 * se, "coordinate {j}: error {err}, se {se}");
    }
}

#[test]
fn zero_inflation_fraction() {
    let (d, _) = gen_zero_inflated(NullSetting::Alternative, 500, 8).unwrap();
    let zeros = d.x().iter().chain(d.z().iter()).filter(|v| **v == 0.0).count();
    let total = d.x().len() + d.z().len();
    assert_eq!(total, 1_000_000);
    let frac = zeros as f64 / total as f64;
    assert!((0.495..=0.505).contains(&frac), "zero fraction {frac}");
}

#[test]
fn zero_inflated_moments_off_the_spikes() {
    // Outside the mean support the masked covariance formula is exact.
    let (d, spec) = gen_zero_inflated(NullSetting::GlobalNull, 4000, 21).unwrap();
    for j in [100, 500, 999] {
        let col = d.x().column(j).to_vec();
        let var = sample_sd(&col).powi(2);
        assert!((var - spec.sigma()[[j, j]]).abs() < 0.06, "coordinate {j}: variance {var}");
    }
}

#[test]
fn blocks_support_and_floor() {
    let (d, spec) = gen_blocks(250, 50, 6).unwrap();
    assert!(d.x().iter().chain(d.z().iter()).all(|v| *v == 0.0 || *v >= 0.5));
    let diff = spec.mean_difference();
    let support: Vec<usize> = (0..diff.len()).filter(|&j| diff[j] != 0.0).collect();
    assert_eq!(support, (10..20).collect::<Vec<_>>());
}

#[test]
fn true_influence_is_mean_zero() {
    let g = Generator::spiked(NullSetting::ProjectedNull).unwrap().with_sizes(100_000, 2).unwrap();
    let spec = g.spec();
    let d = g.sample(13).unwrap();
    let vals: Vec<f64> = d.x().rows().into_iter().map(|x| true_influence(x, spec, Group::Control).unwrap()).collect();
    let se = sample_sd(&vals) / (vals.len() as f64).sqrt();
    assert!(compensated_mean(&vals).abs() < 4.0 * se);

    let x = &spec.mu_x + spec.v1.as_ref().unwrap();
    let fit = spec.oracle_nuisance(1).unwrap();
    assert!(influence_value(x.view(), &fit, Group::Control).abs() < 1e-12);
    let null = Generator::spiked(NullSetting::GlobalNull).unwrap();
    assert_eq!(true_influence(x.view(), null.spec(), Group::Treatment).unwrap(), 0.0);
}
