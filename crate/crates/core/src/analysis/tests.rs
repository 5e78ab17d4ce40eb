use rand::Rng as _;
use rand_distr::StandardNormal;

use super::*;
use crate::gp_sampler::{sample_exact, EnsembleMeta};
use crate::rng;

fn spec(family: Family, h: f64) -> KernelSpec {
    KernelSpec::new(family, h, 0.25, 1.75).unwrap()
}

fn meta() -> EnsembleMeta {
    EnsembleMeta { seed: 0, generator: "test".into(), spec: None, config_digest: None, jitter: 0.0 }
}

#[test]
fn zero_paths_give_zero_covariance() {
    let g = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
    let ens = PathEnsemble::from_paths(g, vec![vec![0.0; 3]; 5], meta()).unwrap();
    let est = empirical_cov(&ens).unwrap();
    assert!(est.cov.iter().all(|&v| v == 0.0));
    assert_eq!(est.max_z(|_, _| 0.0), 0.0);
    let one = PathEnsemble::from_paths(Grid::new(vec![1.0]).unwrap(), vec![vec![1.0]], meta()).unwrap();
    assert!(empirical_cov(&one).is_err());
}

fn iid_normals(n: usize, m: usize, seed: u64) -> PathEnsemble {
    let mut r = rng::stream(seed, 0);
    let paths = (0..n).map(|_| (0..m).map(|_| r.sample(StandardNormal)).collect()).collect();
    PathEnsemble::from_paths(Grid::new((1..=m).map(|k| k as f64).collect()).unwrap(), paths, meta()).unwrap()
}

#[test]
fn iid_columns_give_identity() {
    let est = empirical_cov(&iid_normals(5_000, 4, 1)).unwrap();
    assert!(est.max_z(|i, j| if i == j { 1.0 } else { 0.0 }) < 4.0);
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(est.get(i, j), est.get(j, i));
            assert!(est.se_at(i, j) > 0.0);
        }
    }
}

#[test]
fn standard_error_scales_as_inverse_root_n() {
    let a = empirical_cov(&iid_normals(4_000, 3, 2)).unwrap();
    let b = empirical_cov(&iid_normals(8_000, 3, 3)).unwrap();
    let ratio = a.se_at(0, 0) / b.se_at(0, 0);
    assert!((ratio - 2f64.sqrt()).abs() < 0.1, "{ratio}");
}

#[test]
fn qv_of_constant_path_is_zero_and_grid_checks() {
    let sp = spec(Family::OfBm, 0.75);
    let g = Grid::uniform(1.0 / 1024.0, 300).unwrap();
    let path = vec![3.0; g.len()];
    let eps = 1.0 / 64.0;
    assert_eq!(weighted_qv(&path, &g, eps, 0.25, &sp).unwrap(), 0.0);
    assert_eq!(discrete_qv(&path, &g, eps, 0.25, 0.75).unwrap(), 0.0);
    // eps/16 coarser than the grid step
    assert!(weighted_qv(&path, &g, 1.0 / 256.0, 0.25, &sp).is_err());
    // misaligned eps
    assert!(discrete_qv(&path, &g, 0.01, 0.25, 0.75).is_err());
    // horizon beyond the grid
    assert!(weighted_qv(&path, &g, eps, 0.3, &sp).is_err());
}

#[test]
fn weighted_qv_is_unbiased_for_ofbm() {
    let sp = spec(Family::OfBm, 0.75);
    let eps = 1.0 / 64.0;
    let horizon = 0.25;
    let g = Grid::uniform(eps / 16.0, 16 * 16 + 16).unwrap();
    let ens = sample_exact(&sp, &g, 400, 17).unwrap();
    let vals: Vec<f64> = ens.paths().map(|p| weighted_qv(p, &g, eps, horizon, &sp).unwrap()).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - horizon).abs() < 3.0 * sd / n.sqrt(), "{mean} +- {}", sd / n.sqrt());
    // discrete estimator on the same paths: E U/h = eps floor(T/eps) = T here
    let h_eps = h_osc(eps, &sp).unwrap();
    let us: Vec<f64> = ens.paths().map(|p| discrete_qv(p, &g, eps, horizon, 0.75).unwrap() / h_eps).collect();
    let mu = us.iter().sum::<f64>() / n;
    let su = (us.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mu - horizon).abs() < 3.0 * su / n.sqrt(), "{mu}");
}

#[test]
fn discrete_qv_single_increment() {
    let g = Grid::uniform(0.125, 8).unwrap();
    let path: Vec<f64> = (0..9).map(|k| (k as f64).sin()).collect();
    let u = discrete_qv(&path, &g, 0.5, 0.5, 0.75).unwrap();
    assert_eq!(u, 0.5f64.powf(-0.5) * (path[4] - path[0]).powi(2));
}

#[test]
fn increment_cov_matches_covariance_differences() {
    for (fam, h) in [(Family::OfBm, 0.75), (Family::OsfBm, 0.7), (Family::OnsfBm, 1.25)] {
        let sp = spec(fam, h);
        let c = |x: f64, y: f64| covariance(&sp, x, y).unwrap();
        for tau in [0.5, 2.0, 9.0] {
            let (u, v, s, t) = (0.2, 1.0, 1.5, 2.5);
            let direct = c(v, t + tau) - c(v, s + tau) - c(u, t + tau) + c(u, s + tau);
            let series = increment_cov(&sp, u, v, s, t, tau).unwrap();
            assert!((series - direct).abs() < 1e-10 * direct.abs().max(1e-3), "{fam} tau={tau}: {series} vs {direct}");
        }
    }
}

fn decades() -> Vec<f64> {
    (0..=16).map(|k| 10f64.powf(2.0 + 0.25 * k as f64)).collect()
}

#[test]
fn lrd_profiles_bounded_and_negative_control() {
    for (fam, h) in [(Family::OfBm, 0.75), (Family::OsfBm, 0.75), (Family::OnsfBm, 1.25)] {
        let sp = spec(fam, h);
        let prof = lrd_profile(&sp, (0.0, 1.0, 1.0, 2.0), &decades(), None).unwrap();
        let lo = prof.iter().cloned().fold(f64::MAX, f64::min);
        let hi = prof.iter().cloned().fold(f64::MIN, f64::max);
        assert!(lo > 0.0 && hi / lo < 1.5, "{fam}: {lo}..{hi}");
        let e = lrd_exponent(&sp).unwrap();
        let up = lrd_profile(&sp, (0.0, 1.0, 1.0, 2.0), &decades(), Some(e + 0.2)).unwrap();
        let down = lrd_profile(&sp, (0.0, 1.0, 1.0, 2.0), &decades(), Some(e - 0.2)).unwrap();
        assert!(up.windows(2).all(|w| w[1] > w[0]));
        assert!(down.windows(2).all(|w| w[1] < w[0]));
    }
    assert!(lrd_profile(&spec(Family::OfBm, 0.75), (1.0, 0.5, 1.0, 2.0), &[1.0], None).is_err());
}

#[test]
fn self_similarity_residuals() {
    let grid = [0.3, 1.0, 2.2];
    for (fam, h) in [(Family::OfBm, 0.75), (Family::OsfBm, 0.6), (Family::OnsfBm, 1.3)] {
        let sp = spec(fam, h);
        assert_eq!(selfsim_residual(&sp, 1.0, &grid).unwrap(), 0.0);
        for j in [-3, -1, 2] {
            let r = selfsim_residual(&sp, 0.25f64.powi(j), &grid).unwrap();
            assert!(r < 1e-12 * 0.25f64.powi(j).powf(2.0 * h).max(1.0), "{fam} j={j}: {r}");
        }
        assert!(selfsim_residual(&sp, 16.0 * 1.3, &grid).unwrap() < 1e-10);
    }
    assert_eq!(split_scale(16.0 * 1.3, 0.25).0, -2);
    assert!((split_scale(16.0 * 1.3, 0.25).1 - 1.3).abs() < 1e-14);
    assert_eq!(split_scale(1.0, 0.25), (0, 1.0));
}

#[test]
fn report_serialises() {
    let r = Report::at_most("identity", &[("H", "0.75".into())], 1e-13, 1e-12);
    assert!(r.pass);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["check", "parameters", "statistic", "tolerance", "bound", "pass"] {
        assert!(json.get(key).is_some());
    }
    assert_eq!(json["bound"], "at_most");
    // NaN never passes
    assert!(!Report::at_least("residual", &[], f64::NAN, 1e-6).pass);
    assert!(Report::at_least("residual", &[], 2e-6, 1e-6).pass);
}
