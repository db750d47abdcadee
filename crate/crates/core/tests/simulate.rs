mod common;

use common::acf;
use marsmc_core::model::residuals;
use marsmc_core::rng::{stream, Purpose};
use marsmc_core::simulate::{filter_noise, simulate, simulate_with_noise, table2_dgp, table2_params};
use marsmc_core::{Dgp, ErrorDist, Mat, ModelSpec, Params};

fn univariate(r: usize, s: usize, coef: &[f64], dist: ErrorDist) -> Params {
    let spec = ModelSpec::new(1, r, s, dist).unwrap();
    let mut th = coef.to_vec();
    th.push(1.0);
    if dist.has_nu() {
        th.push(5.0);
    }
    Params::from_raw(spec, th).unwrap()
}

fn column(d: &marsmc_core::Series) -> Vec<f64> {
    d.values().as_slice().to_vec()
}

#[test]
fn zero_filters_give_white_noise() {
    let spec = ModelSpec::new(1, 1, 0, ErrorDist::StudentT).unwrap();
    let p = Params::from_raw(spec, vec![0.0, 1.0, 5.0]).unwrap();
    let y = column(&simulate(&Dgp::new(p, 20_000, 50, 1).unwrap()).unwrap());
    for lag in 1..4 {
        assert!(acf(&y, lag).abs() < 3.0 / (y.len() as f64).sqrt(), "lag {lag}");
    }
}

#[test]
fn causal_and_noncausal_ar1_share_the_autocorrelation() {
    // a purely causal and a purely noncausal AR(1) both have ρ(1) = 0.5
    for (r, s) in [(1, 0), (0, 1)] {
        let p = univariate(r, s, &[0.5], ErrorDist::StudentT);
        let y = column(&simulate(&Dgp::new(p, 20_000, 200, 2).unwrap()).unwrap());
        let a = acf(&y, 1);
        assert!((a - 0.5).abs() < 0.03, "({r},{s}): {a}");
        assert!((acf(&y, 2) - 0.25).abs() < 0.03);
    }
}

#[test]
fn noncausal_path_is_a_time_reversed_causal_path() {
    // with the same noise reversed, MAR(0,1) equals the reversed AR(1)
    let causal = univariate(1, 0, &[0.7], ErrorDist::Cauchy);
    let noncausal = univariate(0, 1, &[0.7], ErrorDist::Cauchy);
    let noise: Vec<f64> = (0..300).map(|t| ((t * 37 % 101) as f64 - 50.0) / 17.0).collect();
    let fwd = filter_noise(
        causal.spec(),
        causal.as_slice(),
        &Mat::from_row_major(300, 1, noise.clone()).unwrap(),
    )
    .unwrap();
    let rev: Vec<f64> = noise.iter().rev().copied().collect();
    let bwd = filter_noise(
        noncausal.spec(),
        noncausal.as_slice(),
        &Mat::from_row_major(300, 1, rev).unwrap(),
    )
    .unwrap();
    for t in 0..300 {
        assert!((fwd.as_slice()[t] - bwd.as_slice()[299 - t]).abs() < 1e-12);
    }
}

#[test]
fn residuals_recover_the_generating_noise() {
    for (dist, tol) in [
        (ErrorDist::StudentT, 1e-6),
        (ErrorDist::SkewedT, 1e-6),
        (ErrorDist::Cauchy, 1e-3),
    ] {
        for seed in 0..20 {
            let dgp = table2_dgp::<f64>(dist, seed);
            let mut rng = stream(seed, Purpose::Simulate, 0, 0, 0);
            let path = simulate_with_noise(&dgp, &mut rng).unwrap();
            let u = residuals(dgp.spec(), dgp.params().as_slice(), &path.data).unwrap();
            let n = 2;
            for t in 0..u.rows() {
                for i in 0..n {
                    let (got, want) = (u[(t, i)], path.noise[(t + 1, i)]);
                    assert!(
                        (got - want).abs() <= tol * want.abs().max(1.0),
                        "{dist:?} seed {seed} t {t}: {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn longer_burn_in_changes_the_centre_negligibly() {
    // same central noise, burn-in doubled on both sides
    let p = table2_params::<f64>(ErrorDist::StudentT);
    let (len, burn) = (150, 200);
    let mut rng = stream(5, Purpose::Simulate, 0, 0, 0);
    let long = simulate_with_noise(&Dgp::new(p.clone(), len + 4 * burn, 50, 0).unwrap(), &mut rng).unwrap();
    let all = long.noise.as_slice();
    let n = 2;
    let short_noise = Mat::from_row_major(len + 2 * burn, n, all[burn * n..(3 * burn + len) * n].to_vec()).unwrap();
    let long_noise = Mat::from_row_major(len + 4 * burn, n, all.to_vec()).unwrap();
    let a = filter_noise(p.spec(), p.as_slice(), &short_noise).unwrap();
    let b = filter_noise(p.spec(), p.as_slice(), &long_noise).unwrap();
    for t in 0..len {
        for i in 0..n {
            let (x, y) = (a[(burn + t, i)], b[(2 * burn + t, i)]);
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "t {t}: {x} vs {y}");
        }
    }
}

#[test]
fn short_burn_in_is_rejected() {
    let p = table2_params::<f64>(ErrorDist::StudentT);
    assert!(Dgp::new(p.clone(), 150, 10, 0).is_err());
    assert!(Dgp::new(p, 150, 50, 0).is_ok());
}

#[test]
fn simulation_is_reproducible_from_the_seed() {
    let dgp = table2_dgp::<f64>(ErrorDist::SkewedT, 11);
    assert_eq!(simulate(&dgp).unwrap().values(), simulate(&dgp).unwrap().values());
    assert_ne!(
        simulate(&dgp).unwrap().values(),
        simulate(&dgp.with_seed(12)).unwrap().values()
    );
}
