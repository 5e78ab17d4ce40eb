use rand_distr::{Distribution, Exp1};

use super::prelimit::{pair_abs, pair_sum, triple};
use super::*;
use crate::analysis::{combined_max_z, empirical_cov};
use crate::quad::Quad;
use crate::walk::{step, transition_prob};

fn p(m: u32, c: f64) -> HierParams {
    HierParams::new(m, c).unwrap()
}

fn quad2<F: Fn(f64, f64) -> f64>(f: F, s: f64, t: f64) -> f64 {
    // kink on the diagonal: split the inner range there
    let q = Quad::new(1e-12, 1e-10).with_limit(2000);
    q.integrate(
        |v| {
            let pts: Vec<f64> = if v > 0.0 && v < s { vec![0.0, v, s] } else { vec![0.0, s] };
            q.integrate_points(|u| f(u, v), &pts).unwrap().value
        },
        0.0,
        t,
    )
    .unwrap()
    .value
}

#[test]
fn norming_examples() {
    // gamma = ln c / ln(M/c) is -1/2 at c = 1/M and 1/2 at c = M^(1/3)
    let g_neg = p(2, 0.5);
    assert!((g_neg.gamma + 0.5).abs() < 1e-12);
    assert!((norming(Regime::NoBranchLowGamma, 256.0, &g_neg, 1.0).unwrap() - 64.0).abs() < 1e-9);
    // gamma = 1/2 <=> c^3 = M: M = 8, c = 2
    let g_half = p(8, 2.0);
    assert!((g_half.gamma - 0.5).abs() < 1e-12);
    assert!((norming(Regime::BranchMidGamma, 16.0, &g_half, 1.0).unwrap() - 8.0).abs() < 1e-9);
    assert_eq!(norming(Regime::HighGamma, 100.0, &g_half, 1.0).unwrap(), 10.0);
    assert!((norming(Regime::BranchHighDensity, 16.0, &g_neg, 4.0).unwrap() - 16f64.powf(1.25) * 2.0).abs() < 1e-9);
    assert!(norming(Regime::NoBranchLowGamma, 16.0, &g_half, 1.0).is_err());
    assert!(norming(Regime::HighGamma, 16.0, &g_neg, 1.0).is_err());
    assert!(norming(Regime::BranchMidGamma, 16.0, &p(4, 3.0), 1.0).is_err());
    assert!(norming(Regime::BranchHighDensity, 16.0, &g_half, 1.0).is_err());
}

#[test]
fn theta_laws() {
    let cat = ThetaLaw::Categorical(vec![0.25, 0.5, 0.25]);
    assert_eq!(cat.mean(), 1.0);
    assert_eq!(cat.variance(), 0.5);
    assert!(ThetaLaw::Categorical(vec![0.5, 0.4]).validate().is_err());
    assert!(ThetaLaw::Poisson(-1.0).validate().is_err());
    assert!(ThetaLaw::Deterministic(2).scaled(2.0).is_err());
    assert_eq!(ThetaLaw::Poisson(2.0).scaled(3.0).unwrap(), ThetaLaw::Poisson(6.0));
}

fn config(params: HierParams, law: ThetaLaw, branching: Branching, regime: Regime) -> SystemConfig {
    SystemConfig::new(params, law, branching, regime)
}

#[test]
fn initial_counts() {
    let hp = p(2, 0.5);
    let det = config(hp, ThetaLaw::Deterministic(1), Branching::None, Regime::NoBranchLowGamma).with_radius(3);
    let mut r = rng::stream(1, 0);
    let sites = sample_initial(&det, &mut r).unwrap();
    assert_eq!(sites.len(), 8);
    assert_eq!(sites.iter().map(|s| s.1).sum::<u64>(), 8);

    let poi = config(hp, ThetaLaw::Poisson(2.0), Branching::None, Regime::NoBranchLowGamma).with_radius(3);
    let n = 10_000;
    let totals: Vec<f64> =
        (0..n).map(|_| sample_initial(&poi, &mut r).unwrap().iter().map(|s| s.1).sum::<u64>() as f64).collect();
    let mean = totals.iter().sum::<f64>() / n as f64;
    assert!((mean - 16.0).abs() < 3.0 * (16.0 / n as f64).sqrt(), "{mean}");

    let law = ThetaLaw::Categorical(vec![0.2, 0.3, 0.1, 0.4]);
    let cat = config(hp, law.clone(), Branching::None, Regime::NoBranchLowGamma).with_radius(0);
    let xs: Vec<f64> = (0..n).map(|_| sample_initial(&cat, &mut r).unwrap()[0].1 as f64).collect();
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
    let se = ((m4 - var * var) / n as f64).sqrt();
    assert!((var - law.variance()).abs() < 3.0 * se, "{var} vs {}", law.variance());
}

#[test]
fn system_population() {
    let hp = p(2, 0.5);
    let base = config(hp, ThetaLaw::Deterministic(1), Branching::None, Regime::NoBranchLowGamma).with_radius(2);
    let mut r = rng::stream(2, 0);
    let trajs = simulate_system(&base, 5.0, &mut r).unwrap();
    assert_eq!(trajs.len(), 4);
    assert!(trajs.iter().all(|t| t.death_time == f64::INFINITY && t.position_at(4.9).is_some()));

    // criticality: mean population at the horizon equals the initial count
    let crit = SystemConfig { branching: Branching::Critical(1.0), regime: Regime::BranchHighDensity, ..base.clone() };
    let n = 10_000;
    let horizon = 2.0;
    let pops: Vec<f64> = (0..n)
        .map(|_| {
            let trajs = simulate_system(&crit, horizon, &mut r).unwrap();
            trajs.iter().filter(|t| t.death_time > horizon).count() as f64
        })
        .collect();
    let mean = pops.iter().sum::<f64>() / n as f64;
    let var = pops.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - 4.0).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");

    // one particle: expected number of branching events in [0, t] is V t
    let one = SystemConfig { truncation_radius: 0, ..crit.clone() };
    let deaths: Vec<f64> = (0..n)
        .map(|_| simulate_system(&one, horizon, &mut r).unwrap().iter().filter(|t| t.death_time < horizon).count() as f64)
        .collect();
    let mean = deaths.iter().sum::<f64>() / n as f64;
    let var = deaths.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - horizon).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");

    let capped = SystemConfig { population_cap: 3, ..base };
    assert_eq!(simulate_system(&capped, 1.0, &mut r), Err(Error::PopulationCap { cap: 3 }));
}

#[test]
fn occupation_from_sojourns() {
    let x = GroupElement::identity();
    let y = GroupElement::unit(1, 1, 2).unwrap();
    let traj = Trajectory { birth_time: 0.5, death_time: 3.0, start: x.clone(), jumps: vec![(1.0, y), (2.0, x)] };
    let phi = SupportFn::delta(2);
    let occ = occupation_from_trajectories(&[traj], &phi, &[0.0, 0.75, 1.5, 4.0]);
    assert_eq!(occ, vec![0.0, 0.25, 0.5, 1.5]);
}

#[test]
fn support_functions() {
    let f = SupportFn::from_test_fn(&TestFn::Radial(crate::walk::RadialFn::ball_indicator(3, 1, 4)), 3).unwrap();
    assert_eq!(f.radius, 1);
    assert_eq!(f.values, vec![1.0; 3]);
    let unbounded = crate::walk::RadialFn::new(3, vec![1.0, 1.0], 0.5, f64::INFINITY);
    assert!(SupportFn::from_test_fn(&TestFn::Radial(unbounded), 3).is_err());
    let pts = vec![(GroupElement::unit(2, 1, 2).unwrap(), 2.0)];
    let g = SupportFn::from_points(2, &pts).unwrap();
    assert_eq!(g.radius, 2);
    assert_eq!(g.points(), pts);
    assert_eq!(g.get(&GroupElement::unit(2, 1, 2).unwrap()), 2.0);
    assert_eq!(g.get(&GroupElement::unit(5, 1, 2).unwrap()), 0.0);
}

#[test]
fn scale_integrals_match_quadrature() {
    for &(k, s, t) in &[(0.3, 0.5, 1.0), (2.0, 1.0, 0.4), (1e-3, 0.7, 0.7), (7.0, 0.2, 1.3)] {
        let a = quad2(|u, v| (-k * (u - v).abs()).exp(), s, t);
        assert!((pair_abs(k, s, t) - a).abs() < 1e-9 * a, "{k}");
        let b = quad2(|u, v| (-k * (u + v)).exp(), s, t);
        assert!((pair_sum(k, s, t) - b).abs() < 1e-9 * b, "{k}");
        let c = quad2(|u, v| -(-2.0 * k * u.min(v)).exp_m1() / (2.0 * k) * (-k * (u - v).abs()).exp(), s, t);
        assert!((triple(k, s, t) - c).abs() < 1e-9 * c, "{k}: {} vs {c}", triple(k, s, t));
    }
    // the series and closed-form branches of the triple integral meet
    let (s, t) = (0.6, 1.0);
    let edge = 0.5 / (s + t);
    let lo = triple(edge * (1.0 - 1e-13), s, t);
    let hi = triple(edge * (1.0 + 1e-13), s, t);
    assert!((lo - hi).abs() < 1e-11 * lo, "{lo} {hi}");
    assert_eq!(triple(0.0, 1.0, 1.0), 1.0 / 3.0);
}

#[test]
fn nonbranching_prelimit_matches_quadrature() {
    let hp = p(2, 0.5);
    let (s, t, time) = (0.5, 1.0, 4.0f64);
    for law in [ThetaLaw::Poisson(1.0), ThetaLaw::Deterministic(2), ThetaLaw::Categorical(vec![0.5, 0.0, 0.5])] {
        let a = quad2(|u, v| transition_prob(time * (u - v).abs(), 0, &hp).unwrap(), s, t);
        let b = quad2(|u, v| transition_prob(time * (u + v), 0, &hp).unwrap(), s, t);
        let direct = time.powf(1.0 + hp.gamma) * (law.mean() * a + (law.variance() - law.mean()) * b);
        let v = prelimit_cov_nonbranching(s, t, time, &law, &hp).unwrap();
        assert!((v - direct).abs() < 1e-8 * direct.abs(), "{v} vs {direct}");
    }
    assert_eq!(prelimit_cov_nonbranching(0.0, 1.0, 4.0, &ThetaLaw::Poisson(1.0), &hp).unwrap(), 0.0);
}

#[test]
fn nonbranching_prelimit_converges() {
    let hp = p(2, 0.5);
    let law = ThetaLaw::Poisson(1.0);
    for &(s, t) in &[(0.5, 1.0), (1.0, 1.0)] {
        let limit = limit_cov_nonbranching(s, t, &law, &hp).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=8 {
            let v = prelimit_cov_nonbranching(s, t, 4f64.powi(n), &law, &hp).unwrap();
            let err = ((v - limit) / limit).abs();
            assert!(err < prev, "n={n}: {err} >= {prev}");
            prev = err;
        }
        assert!(prev < 0.01, "{prev}");
    }
}

#[test]
fn branching_prelimit_matches_quadrature() {
    let hp = p(9, 2.0);
    let (s, t, time, v) = (0.5, 1.0, 3.0f64, 1.5);
    let first = time.powf(hp.gamma) * quad2(|u, w| transition_prob(time * (u - w).abs(), 0, &hp).unwrap(), s, t);
    // inner r-integral by quadrature too
    let q = Quad::new(1e-13, 1e-11);
    let second = v
        * time.powf(1.0 + hp.gamma)
        * quad2(
            |u, w| {
                let top = u.min(w);
                if top == 0.0 {
                    return 0.0;
                }
                q.integrate(|r| transition_prob(time * (u + w - 2.0 * r), 0, &hp).unwrap(), 0.0, top).unwrap().value
            },
            s,
            t,
        );
    let (i, ii) = prelimit_branching_parts(s, t, time, v, &hp).unwrap();
    assert!((i - first).abs() < 1e-8 * first, "{i} vs {first}");
    assert!((ii - second).abs() < 1e-7 * second, "{ii} vs {second}");
    assert_eq!(prelimit_cov_branching(0.0, t, time, v, &hp).unwrap(), 0.0);
    assert!(prelimit_cov_branching(s, t, time, v, &p(4, 3.0)).is_err());
}

#[test]
fn branching_prelimit_converges() {
    // gamma < 0 with a density multiplier: onsfBm limit
    let hp = p(2, 0.5);
    let limit = limit_cov_branching(1.0, 1.0, 1.0, &hp).unwrap();
    let mut prev = f64::INFINITY;
    for n in 1..=6 {
        let v = prelimit_cov_branching(1.0, 1.0, 4f64.powi(n), 1.0, &hp).unwrap();
        let err = ((v - limit) / limit).abs();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 0.01, "{prev}");
    // 0 < gamma < 1: osfBm limit, error decreasing
    let hp = p(9, 2.0);
    let limit = limit_cov_branching(0.5, 1.0, 1.0, &hp).unwrap();
    let mut prev = f64::INFINITY;
    for n in 1..=6 {
        let v = prelimit_cov_branching(0.5, 1.0, 4.5f64.powi(n), 1.0, &hp).unwrap();
        let err = ((v - limit) / limit).abs();
        assert!(err < prev);
        prev = err;
    }
}

#[test]
fn highgamma_prelimit_and_limit() {
    let hp = p(4, 2.0);
    let o = vec![(GroupElement::identity(), 1.0)];
    let law = ThetaLaw::Poisson(1.0);
    let limit = limit_cov_highgamma(1.0, 1.0, &law, &hp, &o, &o).unwrap();
    assert!((limit - 2.0 * 9.0 / 7.0).abs() < 1e-12);
    let v = prelimit_cov_highgamma(1.0, 1.0, 1e3, &law, &hp, &o, &o).unwrap();
    assert!(((v - limit) / limit).abs() < 0.01, "{v}");
    assert_eq!(prelimit_cov_highgamma(0.0, 1.0, 1e3, &law, &hp, &o, &o).unwrap(), 0.0);
    assert!(prelimit_cov_highgamma(1.0, 1.0, 1e3, &law, &p(4, 1.0), &o, &o).is_err());
    // off-diagonal sites against quadrature of the transition probability
    let y = GroupElement::unit(2, 3, 4).unwrap();
    let py = vec![(y, 1.0)];
    let (s, t, time) = (0.5, 1.0, 5.0f64);
    let direct = time * quad2(|u, w| transition_prob(time * (u - w).abs(), 2, &hp).unwrap(), s, t);
    let v = prelimit_cov_highgamma(s, t, time, &law, &hp, &o, &py).unwrap();
    assert!((v - direct).abs() < 1e-8 * direct, "{v} vs {direct}");
}

/// Does a walk (with branching at rate `v`) from distance `d` put a
/// particle in `B_k` before `tau`?
fn reaches<R: rand::Rng>(d: u32, k: u32, tau: f64, v: f64, hp: &HierParams, rng: &mut R) -> bool {
    let mut stack = vec![(GroupElement::unit(d, 1, hp.m).unwrap(), 0.0)];
    while let Some((mut x, mut t)) = stack.pop() {
        let death = if v > 0.0 { t + Distribution::<f64>::sample(&Exp1, rng) / v } else { f64::INFINITY };
        loop {
            t += Distribution::<f64>::sample(&Exp1, rng);
            if t >= death.min(tau) {
                break;
            }
            x = step(&x, hp, rng);
            if x.norm() <= k {
                return true;
            }
        }
        if death < tau && rng.random::<bool>() {
            stack.push((x.clone(), death));
            stack.push((x, death));
        }
    }
    false
}

#[test]
fn relevance_matches_direct_simulation() {
    let hp = p(3, 1.5);
    for v in [0.0, 1.0] {
        let branching = if v > 0.0 { Branching::Critical(v) } else { Branching::None };
        let regime = if v > 0.0 { Regime::BranchMidGamma } else { Regime::HighGamma };
        let cfg = config(hp, ThetaLaw::Poisson(1.0), branching, regime).with_time(3.0, 1.0).with_radius(12);
        let table = Relevance::new(&cfg, 1).unwrap();
        let mut r = rng::stream(5, v as u64);
        let n = 20_000;
        for (d, tau) in [(2, 3.0), (3, 1.0), (4, 3.0)] {
            let hits = (0..n).filter(|_| reaches(d, 1, tau, v, &hp, &mut r)).count() as f64 / n as f64;
            let h = table.at(d, tau);
            let se = (h * (1.0 - h) / n as f64).sqrt();
            assert!((hits - h).abs() < 4.0 * se, "V={v} d={d}: {hits} vs {h}");
        }
        assert_eq!(table.at(1, 0.5), 1.0);
        assert_eq!(table.at(13, 0.5), 0.0);
        assert_eq!(table.at(3, 0.0), 0.0);
    }
}

fn small_config(branching: Branching) -> SystemConfig {
    let regime = if matches!(branching, Branching::None) { Regime::NoBranchLowGamma } else { Regime::BranchHighDensity };
    config(p(2, 0.5), ThetaLaw::Poisson(1.0), branching, regime).with_time(4.0, 1.0).with_radius(9)
}

#[test]
fn reduced_and_full_simulators_agree() {
    let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let phi = SupportFn::ball_indicator(2, 1).unwrap();
    for branching in [Branching::None, Branching::Critical(1.0)] {
        let cfg = small_config(branching);
        let red = occupation_ensemble(&cfg, &phi, &grid, 4000, 3, Simulator::Reduced).unwrap();
        let full = occupation_ensemble(&cfg, &phi, &grid, 4000, 4, Simulator::Full).unwrap();
        let z = combined_max_z(&empirical_cov(&red).unwrap(), &empirical_cov(&full).unwrap());
        assert!(z < 4.0, "{branching:?}: covariance z {z}");
        for (i, col) in [1, 2].iter().enumerate() {
            let mean = |e: &PathEnsemble| e.paths().map(|x| x[*col]).sum::<f64>() / e.n_paths as f64;
            let sd = |e: &PathEnsemble| {
                let m = mean(e);
                (e.paths().map(|x| (x[*col] - m).powi(2)).sum::<f64>() / (e.n_paths * e.n_paths) as f64).sqrt()
            };
            let z = (mean(&red) - mean(&full)).abs() / (sd(&red).powi(2) + sd(&full).powi(2)).sqrt();
            assert!(z < 4.0, "{branching:?} mean {i}: z {z}");
        }
    }
}

#[test]
fn simulated_covariance_matches_prelimit() {
    let hp = p(2, 0.5);
    let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let phi = SupportFn::delta(2);
    for law in [ThetaLaw::Poisson(1.0), ThetaLaw::Deterministic(1)] {
        let cfg = config(hp, law.clone(), Branching::None, Regime::NoBranchLowGamma)
            .with_time(64.0, 1.0)
            .with_policy_radius(&phi)
            .unwrap();
        let ens = occupation_ensemble(&cfg, &phi, &grid, 2000, 17, Simulator::Reduced).unwrap();
        let est = empirical_cov(&ens).unwrap();
        let t = grid.times();
        let z = est.max_z(|i, j| prelimit_cov_nonbranching(t[i], t[j], 64.0, &law, &hp).unwrap());
        assert!(z < 3.0, "{law:?}: z {z}");
        // exact centring: the mean is zero
        for k in 1..3 {
            let col: Vec<f64> = ens.paths().map(|x| x[k]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let se = (est.get(k, k) / col.len() as f64).sqrt();
            assert!(m.abs() < 3.0 * se, "{law:?}: mean {m}, se {se}");
        }
    }
}

#[test]
fn branching_simulation_matches_prelimit() {
    let hp = p(9, 2.0);
    let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let phi = SupportFn::delta(9);
    let time = 4.5f64.powi(2);
    let cfg = config(hp, ThetaLaw::Poisson(1.0), Branching::Critical(1.0), Regime::BranchMidGamma)
        .with_time(time, 1.0)
        .with_policy_radius(&phi)
        .unwrap();
    let ens = occupation_ensemble(&cfg, &phi, &grid, 2000, 23, Simulator::Reduced).unwrap();
    let est = empirical_cov(&ens).unwrap();
    let t = grid.times();
    let z = est.max_z(|i, j| prelimit_cov_branching(t[i], t[j], time, 1.0, &hp).unwrap());
    assert!(z < 3.0, "z {z}");
}

#[test]
fn occupation_path_basics() {
    let cfg = small_config(Branching::None);
    let grid = Grid::new(vec![0.0, 0.25, 1.0]).unwrap();
    let mut r = rng::stream(8, 0);
    let delta = TestFn::Finite(vec![(GroupElement::identity(), 1.0)]);
    let path = occupation_path(&cfg, &delta, &grid, &mut r).unwrap();
    assert_eq!(path.values[0], 0.0);
    assert_eq!(path.phi, vec![(GroupElement::identity(), 1.0)]);
    let zero = TestFn::Finite(vec![(GroupElement::identity(), 0.0)]);
    let path = occupation_path(&cfg, &zero, &grid, &mut r).unwrap();
    assert!(path.values.iter().all(|v| *v == 0.0));
    let unbounded = TestFn::Radial(crate::walk::RadialFn::new(2, vec![1.0], 1.0, f64::INFINITY));
    assert!(occupation_path(&cfg, &unbounded, &grid, &mut r).is_err());
    let late = Grid::new(vec![0.0, 2.0]).unwrap();
    assert!(occupation_path(&cfg, &delta, &late, &mut r).is_err());
}

#[test]
fn ensembles_are_reproducible() {
    let cfg = small_config(Branching::Critical(1.0));
    let grid = Grid::new(vec![0.0, 1.0]).unwrap();
    let phi = SupportFn::delta(2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| occupation_ensemble(&cfg, &phi, &grid, 50, 9, Simulator::Reduced).unwrap())
    };
    assert_eq!(run(1).values, run(2).values);
}

#[test]
fn truncation_is_sound() {
    let hp = p(2, 0.5);
    let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
    let phi = SupportFn::delta(2);
    let cfg = config(hp, ThetaLaw::Poisson(1.0), Branching::None, Regime::NoBranchLowGamma)
        .with_time(64.0, 1.0)
        .with_policy_radius(&phi)
        .unwrap();
    let r = cfg.truncation_radius;
    let wider = cfg.clone().with_radius(r + 2);
    let a = empirical_cov(&occupation_ensemble(&cfg, &phi, &grid, 1000, 31, Simulator::Reduced).unwrap()).unwrap();
    let b = empirical_cov(&occupation_ensemble(&wider, &phi, &grid, 1000, 31, Simulator::Reduced).unwrap()).unwrap();
    for i in 1..3 {
        for j in 1..3 {
            assert!((a.get(i, j) - b.get(i, j)).abs() < 0.5 * a.se_at(i, j), "({i},{j})");
        }
    }
}

#[test]
fn policy_radius() {
    let hp = p(2, 0.5);
    let phi = SupportFn::delta(2);
    let base = config(hp, ThetaLaw::Poisson(1.0), Branching::None, Regime::NoBranchLowGamma);
    let r1 = truncation_policy(&base.clone().with_time(16.0, 1.0), &phi).unwrap();
    let r2 = truncation_policy(&base.clone().with_time(256.0, 1.0), &phi).unwrap();
    assert!(r2 > r1);
    let ball = SupportFn::ball_indicator(2, 3).unwrap();
    assert!(truncation_policy(&base.with_time(16.0, 1.0), &ball).unwrap() >= 3);
    let too_small = small_config(Branching::None).with_radius(0);
    assert!(Relevance::new(&too_small, 1).is_err());
}

#[test]
fn multi_function_ensembles_share_realisations() {
    let cfg = small_config(Branching::None);
    let grid = Grid::new(vec![0.0, 1.0]).unwrap();
    let phis = vec![SupportFn::delta(2), SupportFn::ball_indicator(2, 1).unwrap()];
    let out = occupation_ensemble_multi(&cfg, &phis, &grid, 20, 5).unwrap();
    assert_eq!(out.len(), 2);
    // occupation of B_1 is at least the occupation of the origin
    let f = cfg.norming().unwrap();
    for (a, b) in out[0].paths().zip(out[1].paths()) {
        let occ_a = a[1] * f + 4.0;
        let occ_b = b[1] * f + 8.0;
        assert!(occ_b >= occ_a - 1e-9);
    }
}
