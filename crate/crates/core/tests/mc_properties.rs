use fpt_core::mc::{ks_distance, simulate, simulate_mixture, SimConfig};
use fpt_core::one_sided::levy_cdf;
use fpt_core::time_change::mixture_cdf;
use fpt_core::two_sided::two_sided_cdf;
use fpt_core::{OneSidedBoundary, QuadraticVariationPath, Scenario, ScenarioSet, SeriesControl, TwoSidedBoundary};

fn unit() -> OneSidedBoundary {
    OneSidedBoundary::unit()
}

fn identity() -> QuadraticVariationPath {
    QuadraticVariationPath::identity()
}

#[test]
fn bridge_correction_removes_coarse_grid_bias() {
    let seeds = 20;
    let times = [0.5, 1.0, 2.0];
    let mut bias = [[0.0; 3]; 2];
    for (row, bridge) in [(0, false), (1, true)] {
        for seed in 0..seeds {
            let cfg = SimConfig { n_paths: 50_000, clock_steps: 4, seed, bridge_correction: bridge, horizon: 2.0 };
            let emp = simulate(&identity(), unit().into(), &cfg).unwrap();
            for (j, &t) in times.iter().enumerate() {
                bias[row][j] += (emp.eval(t) - levy_cdf(unit(), t).unwrap()) / seeds as f64;
            }
        }
    }
    for j in 0..times.len() {
        let p = levy_cdf(unit(), times[j]).unwrap();
        let se = (p * (1.0 - p) / (50_000.0 * seeds as f64)).sqrt();
        // a discretely monitored walk misses crossings between steps
        assert!(bias[0][j] < -10.0 * se, "t = {}: raw bias {}", times[j], bias[0][j]);
        assert!(bias[1][j].abs() <= 4.0 * se, "t = {}: bridged bias {} (se {se})", times[j], bias[1][j]);
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let cfg = SimConfig { n_paths: 5_000, seed: 42, ..SimConfig::default() };
    let b = TwoSidedBoundary::new(1.0, -1.5).unwrap();
    let a = simulate(&identity(), b.into(), &cfg).unwrap();
    let again = simulate(&identity(), b.into(), &cfg).unwrap();
    assert_eq!(a.times(), again.times());
    let other = simulate(&identity(), b.into(), &SimConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.times(), other.times());
}

#[test]
fn refinement_agrees_within_binomial_error() {
    let b = TwoSidedBoundary::new(1.0, -1.0).unwrap();
    let n = 100_000;
    let coarse =
        simulate(&identity(), b.into(), &SimConfig { n_paths: n, clock_steps: 20, seed: 3, ..SimConfig::default() })
            .unwrap();
    let fine =
        simulate(&identity(), b.into(), &SimConfig { n_paths: n, clock_steps: 400, seed: 5, ..SimConfig::default() })
            .unwrap();
    for t in [0.5, 1.0, 2.0, 4.0] {
        let (pc, pf) = (coarse.eval(t), fine.eval(t));
        let se = (coarse.standard_error(t).powi(2) + fine.standard_error(t).powi(2)).sqrt();
        assert!((pc - pf).abs() <= 3.0 * se, "t = {t}: {pc} vs {pf}");
    }
}

#[test]
fn one_sided_ks_within_tolerance() {
    let cfg = SimConfig { n_paths: 100_000, seed: 11, ..SimConfig::default() };
    let emp = simulate(&identity(), unit().into(), &cfg).unwrap();
    let ks = ks_distance(&emp, |t| levy_cdf(unit(), t).unwrap());
    // 1.36 / sqrt(n) is the 95% KS quantile for an exact sampler
    assert!(ks <= 0.01, "KS {ks} vs 1.36/sqrt(n) = {}", 1.36 / (cfg.n_paths as f64).sqrt());
}

#[test]
fn two_sided_ks_within_tolerance() {
    let ctl = SeriesControl::default();
    for (i, (g, h)) in [(1.0, -1.0), (1.0, -2.0), (0.5, -1.5)].into_iter().enumerate() {
        let b = TwoSidedBoundary::new(g, h).unwrap();
        let cfg = SimConfig { n_paths: 100_000, seed: 20 + i as u64, ..SimConfig::default() };
        let emp = simulate(&identity(), b.into(), &cfg).unwrap();
        let ks = ks_distance(&emp, |t| two_sided_cdf(b, t, ctl).unwrap());
        assert!(ks <= 0.01, "({g}, {h}): KS {ks}");
    }
}

#[test]
fn symmetric_corridor_splits_evenly() {
    let b = TwoSidedBoundary::new(1.0, -1.0).unwrap();
    let emp =
        simulate(&identity(), b.into(), &SimConfig { n_paths: 100_000, seed: 8, ..SimConfig::default() }).unwrap();
    let (up, down) = (emp.upper_crossings() as f64, emp.lower_crossings() as f64);
    assert!((up - down).abs() <= 3.0 * (up + down).sqrt(), "{up} vs {down}");
}

#[test]
fn remote_lower_barrier_matches_one_sided() {
    let cfg = SimConfig { n_paths: 20_000, seed: 13, ..SimConfig::default() };
    let one = simulate(&identity(), unit().into(), &cfg).unwrap();
    let two = simulate(&identity(), TwoSidedBoundary::new(1.0, -50.0).unwrap().into(), &cfg).unwrap();
    assert_eq!(one.times(), two.times());
    assert_eq!(two.lower_crossings(), 0);
}

#[test]
fn mixture_resampling_matches_analytic_mixture() {
    let ctl = SeriesControl::default();
    let set = ScenarioSet::new(vec![
        Scenario::new(0.3, QuadraticVariationPath::linear(0.5).unwrap(), unit()),
        Scenario::new(0.7, identity(), OneSidedBoundary::new(1.5).unwrap()),
    ])
    .unwrap();
    let emp = simulate_mixture(&set, &SimConfig { n_paths: 100_000, seed: 17, ..SimConfig::default() }).unwrap();
    let ks = ks_distance(&emp, |t| mixture_cdf(&set, t, ctl).unwrap());
    assert!(ks <= 0.015, "KS {ks}");
}
