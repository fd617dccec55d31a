use comb_stats::comb::{log_partition, CombNatural, CombParams};
use comb_stats::data::{SOYBEAN_COUNTS, SOYBEAN_M};
use comb_stats::inference::{
    jensen_lower_bound, map_estimate, propriety_check, FrequencyTable, GridSpec, Hyperparams,
    Posterior, PosteriorGrid,
};
use comb_stats::special::ln_split_factorial;
use proptest::prelude::*;

fn soybean_hyper() -> Hyperparams {
    let table = FrequencyTable::new(SOYBEAN_M, SOYBEAN_COUNTS.to_vec()).unwrap();
    Hyperparams::flat(SOYBEAN_M)
        .update_batch(&table.sufficient_stats())
        .unwrap()
}

fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-likelihood in natural parameters, without the factors the
/// conjugate kernel drops.
fn log_likelihood(obs: &[usize], m: usize, psi: f64, nu: f64) -> f64 {
    obs.iter()
        .map(|&k| psi * k as f64 - nu * ln_split_factorial(m, k) - log_partition(m, psi, nu))
        .sum()
}

#[test]
fn soybean_statistics_and_hyperparameters() {
    let hyper = soybean_hyper();
    assert_eq!(hyper.a, 74.0);
    assert!((hyper.b - 88.69).abs() < 0.005);
    assert_eq!(hyper.c, 20.0);

    let single = Hyperparams::flat(6).update(3).unwrap();
    assert_eq!(single.a, 3.0);
    assert!((single.b - 36f64.ln()).abs() < 1e-12);
    assert_eq!(single.c, 1.0);
}

#[test]
fn kernel_matches_direct_summation() {
    let hyper = soybean_hyper();
    for (psi, nu) in [(0.3, 0.54), (-1.2, 2.7)] {
        let z: f64 = (0..=SOYBEAN_M)
            .map(|k| {
                let denom: f64 = (1..=k).chain(1..=SOYBEAN_M - k).map(|i| i as f64).product();
                (psi * k as f64).exp() / denom.powf(nu)
            })
            .sum();
        let direct =
            ln_phi(psi) + ln_phi(nu - 1.0) + hyper.a * psi - hyper.b * nu - hyper.c * z.ln();
        let got = Posterior::new(hyper).log_kernel(psi, nu);
        assert!(
            (got - direct).abs() < 1e-10,
            "({psi}, {nu}): {got} vs {direct}"
        );
    }
}

#[test]
fn conjugacy_closure() {
    let points: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let t = i as f64;
            (-2.0 + 0.45 * t, 3.0 - 0.61 * t + 0.2 * (t * 1.7).sin())
        })
        .collect();
    for (seed, (m, p, nu)) in [
        (6, 0.6, 0.5),
        (4, 0.3, 1.0),
        (10, 0.5, 2.0),
        (3, 0.8, -0.7),
        (8, 0.45, 1.4),
    ]
    .into_iter()
    .enumerate()
    {
        let obs = CombParams::new(m, p, nu)
            .unwrap()
            .sample(25 + 5 * seed, seed as u64);
        let prior = Hyperparams::new(0.4, -0.3, 0.5, m).unwrap();
        let post = obs.iter().try_fold(prior, |h, &k| h.update(k)).unwrap();
        let diffs: Vec<f64> = points
            .iter()
            .map(|&(x, y)| {
                Posterior::new(post).log_kernel(x, y)
                    - Posterior::new(prior).log_kernel(x, y)
                    - log_likelihood(&obs, m, x, y)
            })
            .collect();
        for d in &diffs {
            assert!((d - diffs[0]).abs() < 1e-9, "dataset {seed}: {diffs:?}");
        }
    }
}

#[test]
fn soybean_map_has_valid_covariance() {
    let map = map_estimate(&soybean_hyper()).unwrap();
    let s = map.sigma;
    assert!((s[0][1] - s[1][0]).abs() < 1e-10);
    let trace = s[0][0] + s[1][1];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    assert!(trace > 0.0 && det > 0.0);
    assert!(map.grad_norm < 1e-8);

    let fit = map.fitted_counts(SOYBEAN_M, 20.0).unwrap();
    assert!((fit.iter().sum::<f64>() - 20.0).abs() < 1e-9);
}

#[test]
fn five_point_stencil_agrees_near_the_mode() {
    let hyper = soybean_hyper();
    let post = Posterior::new(hyper);
    let map = map_estimate(&hyper).unwrap();
    let f = |x: f64, y: f64| post.log_kernel(x, y);
    for (dx, dy) in [(0.0, 0.0), (0.05, -0.03), (-0.04, 0.06)] {
        let x = [map.psi_hat + dx, map.nu_hat + dy];
        for axis in 0..2 {
            let h = 1e-4 * x[axis].abs().max(1.0);
            let at = |s: f64| {
                if axis == 0 {
                    f(x[0] + s, x[1])
                } else {
                    f(x[0], x[1] + s)
                }
            };
            let central = (at(h) - at(-h)) / (2.0 * h);
            let wide = 1e-2;
            let five = (-at(2.0 * wide) + 8.0 * at(wide) - 8.0 * at(-wide) + at(-2.0 * wide))
                / (12.0 * wide);
            assert!(
                (central - five).abs() < 1e-5,
                "axis {axis} at {x:?}: {central} vs {five}"
            );
        }
    }
}

#[test]
fn grid_normalization_and_mode() {
    let grid =
        PosteriorGrid::evaluate(&Posterior::new(soybean_hyper()), &GridSpec::default()).unwrap();
    assert!((grid.cell_masses().iter().sum::<f64>() - 1.0).abs() < 1e-8);
    let (psi, nu) = grid.argmax();
    let cell = GridSpec::default().psi.spacing();
    assert!((psi - 0.30).abs() <= cell + 1e-12, "psi mode {psi}");
    assert!((nu - 0.54).abs() <= cell + 1e-12, "nu mode {nu}");
}

#[test]
fn prior_only_grid_mode() {
    let grid = PosteriorGrid::evaluate(&Posterior::new(Hyperparams::flat(6)), &GridSpec::default())
        .unwrap();
    assert_eq!(grid.argmax(), (0.0, 1.0));
}

#[test]
fn grid_self_convergence() {
    let post = Posterior::new(soybean_hyper());
    let coarse = PosteriorGrid::evaluate(&post, &GridSpec::default()).unwrap();
    let fine = PosteriorGrid::evaluate(&post, &GridSpec::default().refined()).unwrap();
    // Every coarse node is every other fine node; compare densities there
    // with the coarse trapezoidal weights.
    let (nc, nf) = (coarse.nu_axis().len(), fine.nu_axis().len());
    let masses = coarse.cell_masses();
    let mut tv = 0.0;
    for i in 0..coarse.psi_axis().len() {
        for j in 0..nc {
            let dc = coarse.density(i, j);
            let df = fine.density(2 * i, 2 * j);
            assert_eq!(fine.psi_axis()[2 * i], coarse.psi_axis()[i]);
            if dc > 0.0 {
                tv += masses[i * nc + j] * (1.0 - df / dc).abs();
            }
        }
    }
    assert_eq!(nf, 2 * nc - 1);
    assert!(0.5 * tv < 1e-3, "self-convergence TV {}", 0.5 * tv);
}

#[test]
fn laplace_approximation_is_close_in_total_variation() {
    let hyper = soybean_hyper();
    let map = map_estimate(&hyper).unwrap();
    let grid = PosteriorGrid::evaluate(&Posterior::new(hyper), &GridSpec::default()).unwrap();
    let tv = grid
        .tv_to_normal([map.psi_hat, map.nu_hat], map.sigma)
        .unwrap();
    assert!(tv < 0.05, "Laplace vs grid total variation {tv}");
}

#[test]
fn propriety_soybean() {
    let report = propriety_check(&soybean_hyper(), 4).unwrap();
    assert!(report.converged, "{report:?}");
    assert!(report.levels.last().unwrap().relative_increment < 1e-12);
}

#[test]
fn propriety_extreme_hyper() {
    let hyper = Hyperparams::new(1000.0, 0.0, 1.0, 6).unwrap();
    let report = propriety_check(&hyper, 10).unwrap();
    assert!(report.converged, "{report:?}");
}

#[test]
fn jensen_bound_random_sweep() {
    // xorshift keeps the sweep reproducible without another dependency
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10_000 {
        let m = 1 + (next() * 15.0) as usize;
        let psi = -6.0 + 12.0 * next();
        let nu = -4.0 + 10.0 * next();
        let raw: Vec<f64> = (0..=m).map(|_| next().powi(3)).collect();
        let total: f64 = raw.iter().sum();
        let q: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let lower = jensen_lower_bound(psi, nu, m, &q).unwrap();
        let ln_z = log_partition(m, psi, nu);
        assert!(
            ln_z >= lower - 1e-12 * ln_z.abs().max(1.0),
            "m={m} psi={psi} nu={nu}"
        );

        let own = CombNatural::new(m, psi, nu).unwrap().pmf_table();
        let tight = jensen_lower_bound(psi, nu, m, &own).unwrap();
        assert!(
            (tight - ln_z).abs() < 1e-10,
            "m={m} psi={psi} nu={nu}: {tight} vs {ln_z}"
        );
    }
}

proptest! {
    #[test]
    fn update_order_is_irrelevant(obs in proptest::collection::vec(0usize..=6, 1..30), rot in 0usize..30) {
        let forward = obs.iter().try_fold(Hyperparams::flat(6), |h, &k| h.update(k)).unwrap();
        let mut shuffled = obs.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let other = shuffled.iter().try_fold(Hyperparams::flat(6), |h, &k| h.update(k)).unwrap();
        prop_assert_eq!(forward.a, other.a);
        prop_assert!((forward.b - other.b).abs() < 1e-9);
        prop_assert_eq!(forward.c, other.c);
        let table = FrequencyTable::from_observations(6, &obs).unwrap();
        let batch = Hyperparams::flat(6).update_batch(&table.sufficient_stats()).unwrap();
        prop_assert!((batch.b - forward.b).abs() < 1e-9);
    }
}
