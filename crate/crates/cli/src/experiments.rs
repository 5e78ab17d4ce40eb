//! One runner per subcommand. Each returns the data files it produced and
//! the checks it ran; writing them out is left to the caller.

use std::fmt::Write as _;

use ultrafbm::analysis::{discrete_qv, empirical_cov, weighted_qv, CovEstimate};
use ultrafbm::gp_sampler::{
    required_j_range, sample_even_part, sample_exact, sample_series, sample_vartheta, write_binary, write_csv,
};
use ultrafbm::kernels::{covariance, h_osc, spatial_cov, spatial_cov_bruteforce, vartheta_cov, write_kernel_table};
use ultrafbm::particles::{
    occupation_ensemble, prelimit_cov_branching, prelimit_cov_highgamma, prelimit_cov_nonbranching, Branching, Regime,
    Simulator, SupportFn, SystemConfig, ThetaLaw,
};
use ultrafbm::rng::derive_seed;
use ultrafbm::verify::{run_suite, Suite};
use ultrafbm::{Error, Family, Grid, HierParams, KernelSpec, PathEnsemble, Report};

use crate::config::{Config, ConfigError};

pub enum Failure {
    Config(ConfigError),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

/// Library errors that reflect bad input are configuration errors; the
/// rest (numerical breakdowns, population caps, i/o) are run failures.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::InvalidElement { .. }
            | Error::Domain(_)
            | Error::Recurrent { .. }
            | Error::Unsupported(_)
            | Error::Grid(_) => Failure::Config(ConfigError { line: None, field: None, message: e.to_string() }),
            _ => Failure::Run(e.to_string()),
        }
    }
}

pub type Outcome = Result<(Vec<(String, Vec<u8>)>, Vec<Report>), Failure>;

fn params(cfg: &Config) -> Result<HierParams, Failure> {
    let m = cfg.get("system.M")?;
    let c = cfg.get("system.c")?;
    HierParams::new(m, c).map_err(|e| cfg.invalid("system.c", e).into())
}

fn kernel(cfg: &Config, hp: &HierParams) -> Result<KernelSpec, Failure> {
    let family: Family = cfg.get("kernel.family")?;
    let h: f64 = cfg.get("kernel.H")?;
    let kappa: f64 = cfg.get("kernel.kappa")?;
    let spec = KernelSpec::from_params(family, h, hp).map_err(|e| cfg.invalid("kernel.H", e))?;
    if kappa == 1.0 {
        Ok(spec)
    } else {
        spec.with_kappa(kappa).map_err(|e| cfg.invalid("kernel.kappa", e).into())
    }
}

fn grid(cfg: &Config) -> Result<Grid, Failure> {
    if cfg.get_opt::<String>("grid.times")?.is_some() {
        let times = cfg.list("grid.times")?;
        Grid::new(times).map_err(|e| cfg.invalid("grid.times", e).into())
    } else {
        let step: f64 = cfg.get("grid.step")?;
        let n: usize = cfg.get("grid.n")?;
        Grid::uniform(step, n).map_err(|e| cfg.invalid("grid.step", e).into())
    }
}

fn ensemble_files(cfg: &Config, ens: &PathEnsemble, files: &mut Vec<(String, Vec<u8>)>) -> Result<(), Failure> {
    let mut csv = Vec::new();
    write_csv(ens, &mut csv)?;
    files.push(("paths.csv".into(), csv));
    if cfg.get::<bool>("output.binary")? {
        let mut bin = Vec::new();
        write_binary(ens, &mut bin)?;
        files.push(("paths.bin".into(), bin));
    }
    Ok(())
}

/// `i,j,s,t,estimate,se,reference` rows.
fn covariance_csv(est: &CovEstimate, reference: &dyn Fn(f64, f64) -> Option<f64>) -> Vec<u8> {
    let mut out = String::from("i,j,s,t,estimate,se,reference\n");
    let g = &est.grid;
    for i in 0..g.len() {
        for j in 0..g.len() {
            let r = reference(g[i], g[j]).map(|x| format!("{x:.17e}")).unwrap_or_default();
            let _ = writeln!(out, "{i},{j},{:.17e},{:.17e},{:.17e},{:.17e},{r}", g[i], g[j], est.get(i, j), est.se_at(i, j));
        }
    }
    out.into_bytes()
}

pub fn kernel_eval(cfg: &Config) -> Outcome {
    let hp = params(cfg)?;
    let spec = kernel(cfg, &hp)?;
    let s: Vec<f64> = cfg.list("eval.s")?;
    let t: Vec<f64> = cfg.list("eval.t")?;
    let mut table = Vec::new();
    write_kernel_table(&spec, &s, &t, &mut table)?;
    Ok((vec![("kernel.csv".into(), table)], Vec::new()))
}

pub fn sample(cfg: &Config, seed: u64) -> Outcome {
    let hp = params(cfg)?;
    let spec = kernel(cfg, &hp)?;
    let grid = grid(cfg)?;
    let n: usize = cfg.get("sample.paths")?;
    let method: String = cfg.get("sample.method")?;
    let t_max = grid.t_max();
    let (ens, reference): (PathEnsemble, Box<dyn Fn(f64, f64) -> Result<f64, Error>>) = match method.as_str() {
        "exact" => (sample_exact(&spec, &grid, n, seed)?, Box::new(move |s, t| covariance(&spec, s, t))),
        "series" => {
            let tol: f64 = cfg.get("sample.tol")?;
            let spec = spec.with_tol(tol).map_err(|e| cfg.invalid("sample.tol", e))?;
            let auto = required_j_range(&spec, 0..=0, t_max, tol * covariance(&spec, t_max, t_max)?.abs());
            let lo = cfg.get_opt("sample.j_min")?.unwrap_or(*auto.start());
            let hi = cfg.get_opt("sample.j_max")?.unwrap_or(*auto.end());
            let ens = sample_series(&spec, &grid, n, lo..=hi, seed).map_err(|e| cfg.invalid("sample.j_min", e))?;
            (ens, Box::new(move |s, t| covariance(&spec, s, t)))
        }
        "even-part" => {
            let even = KernelSpec { family: Family::OsfBm, ..spec };
            (sample_even_part(&spec, &grid, n, seed)?, Box::new(move |s, t| covariance(&even, s, t)))
        }
        "vartheta" => (sample_vartheta(&grid, &hp, n, seed)?, Box::new(move |s, t| vartheta_cov(s, t, &hp))),
        other => return Err(cfg.invalid("sample.method", format!("unknown method '{other}'")).into()),
    };
    let est = empirical_cov(&ens)?;
    let times = grid.times();
    let mut z: f64 = 0.0;
    for i in 0..times.len() {
        for j in 0..times.len() {
            let r = reference(times[i], times[j])?;
            let d = (est.get(i, j) - r).abs();
            let se = est.se_at(i, j);
            z = z.max(if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY });
        }
    }
    let mut files = Vec::new();
    ensemble_files(cfg, &ens, &mut files)?;
    files.push(("covariance.csv".into(), covariance_csv(&est, &|s, t| reference(s, t).ok())));
    let check = Report::at_most(
        "sampled covariance, max z vs analytic covariance",
        &[("method", method.clone()), ("family", spec.family.to_string()), ("H", spec.h.to_string()), ("paths", n.to_string())],
        z,
        cfg.get("sample.z_tol")?,
    );
    Ok((files, vec![check]))
}

fn theta_law(cfg: &Config) -> Result<ThetaLaw, Failure> {
    let raw: String = cfg.get("particles.law")?;
    let bad = |m: String| -> Failure { cfg.invalid("particles.law", m).into() };
    let (kind, arg) = raw.split_once(':').ok_or_else(|| bad("expected kind:parameters".into()))?;
    let law = match kind.trim() {
        "poisson" => ThetaLaw::Poisson(arg.trim().parse().map_err(|e| bad(format!("{e}")))?),
        "deterministic" => ThetaLaw::Deterministic(arg.trim().parse().map_err(|e| bad(format!("{e}")))?),
        "categorical" => ThetaLaw::Categorical(
            arg.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>().map_err(|e| bad(format!("{e}")))?,
        ),
        other => return Err(bad(format!("unknown law '{other}'"))),
    };
    law.validate().map_err(|e| bad(e.to_string()))?;
    Ok(law)
}

fn support(cfg: &Config, m: u32) -> Result<SupportFn, Failure> {
    let raw: String = cfg.get("particles.phi")?;
    let phi = if raw == "delta" {
        Ok(SupportFn::delta(m))
    } else if let Some(r) = raw.strip_prefix("ball:") {
        let r: u32 = r.trim().parse().map_err(|e| cfg.invalid("particles.phi", e))?;
        SupportFn::ball_indicator(m, r)
    } else {
        return Err(cfg.invalid("particles.phi", format!("expected delta or ball:<r>, got '{raw}'")).into());
    };
    phi.map_err(|e| cfg.invalid("particles.phi", e).into())
}

fn system(cfg: &Config, hp: HierParams, law: ThetaLaw, phi: &SupportFn, t_max: f64) -> Result<SystemConfig, Failure> {
    let branching = match cfg.get::<String>("particles.branching")?.as_str() {
        "none" => Branching::None,
        v => Branching::Critical(v.parse().map_err(|e| cfg.invalid("particles.branching", e))?),
    };
    let regime = match cfg.get::<String>("particles.regime")?.as_str() {
        "auto" => match (branching, hp.gamma < 0.0) {
            (Branching::None, true) => Regime::NoBranchLowGamma,
            (Branching::None, false) => Regime::HighGamma,
            (_, true) => Regime::BranchHighDensity,
            (_, false) => Regime::BranchMidGamma,
        },
        r => r.parse().map_err(|e| cfg.invalid("particles.regime", e))?,
    };
    let time: f64 = cfg.get("particles.T")?;
    let intensity: f64 = cfg.get("particles.intensity")?;
    let sys = SystemConfig::new(hp, law, branching, regime).with_time(time, t_max).with_intensity(intensity);
    sys.validate().map_err(|e| cfg.invalid("particles.regime", e))?;
    let sys = match cfg.get::<String>("particles.radius")?.as_str() {
        "auto" => sys.with_policy_radius(phi).map_err(|e| cfg.invalid("particles.radius", e))?,
        r => sys.with_radius(r.parse().map_err(|e| cfg.invalid("particles.radius", e))?),
    };
    Ok(sys)
}

/// Finite-`T` covariance of `<X_T(.), phi>` where a closed form applies.
fn simulate_reference<'a>(sys: &'a SystemConfig, phi: &SupportFn) -> Option<Box<dyn Fn(f64, f64) -> Result<f64, Error> + 'a>> {
    let (hp, time, law) = (sys.params, sys.time_scale, &sys.theta_law);
    let delta = phi.radius == 0 && phi.values == [1.0];
    let unit = sys.intensity == 1.0;
    match (sys.regime, sys.branching) {
        (Regime::NoBranchLowGamma, _) if delta && unit => Some(Box::new(move |s, t| prelimit_cov_nonbranching(s, t, time, law, &hp))),
        (Regime::BranchMidGamma | Regime::BranchHighDensity, Branching::Critical(v))
            if delta && *law == ThetaLaw::Poisson(1.0) && (unit || sys.regime == Regime::BranchHighDensity) =>
        {
            Some(Box::new(move |s, t| prelimit_cov_branching(s, t, time, v, &hp)))
        }
        (Regime::HighGamma, _) if unit => {
            let pts = phi.points();
            Some(Box::new(move |s, t| prelimit_cov_highgamma(s, t, time, law, &hp, &pts, &pts)))
        }
        _ => None,
    }
}

pub fn simulate(cfg: &Config, seed: u64) -> Outcome {
    let hp = params(cfg)?;
    let law = theta_law(cfg)?;
    let phi = support(cfg, hp.m)?;
    let grid = grid(cfg)?;
    let sys = system(cfg, hp, law, &phi, grid.t_max())?;
    let n: usize = cfg.get("particles.replicas")?;
    let simulator = match cfg.get::<String>("particles.simulator")?.as_str() {
        "reduced" => Simulator::Reduced,
        "full" => Simulator::Full,
        other => return Err(cfg.invalid("particles.simulator", format!("unknown simulator '{other}'")).into()),
    };
    let ens = occupation_ensemble(&sys, &phi, &grid, n, seed, simulator)?;
    let est = empirical_cov(&ens)?;
    let reference = simulate_reference(&sys, &phi);
    let mut files = Vec::new();
    ensemble_files(cfg, &ens, &mut files)?;
    files.push(("covariance.csv".into(), covariance_csv(&est, &|s, t| reference.as_ref().and_then(|f| f(s, t).ok()))));
    let mut checks = Vec::new();
    if let Some(f) = &reference {
        let times = grid.times();
        let refs: Vec<f64> =
            (0..times.len() * times.len()).map(|k| f(times[k / times.len()], times[k % times.len()])).collect::<Result<_, _>>()?;
        let z = est.max_z(|i, j| refs[i * times.len() + j]);
        checks.push(Report::at_most(
            "simulated covariance, max z vs finite-T covariance",
            &[
                ("regime", sys.regime.to_string()),
                ("T", sys.time_scale.to_string()),
                ("R", sys.truncation_radius.to_string()),
                ("replicas", n.to_string()),
            ],
            z,
            cfg.get("particles.z_tol")?,
        ));
    }
    Ok((files, checks))
}

pub fn verify(cfg: &Config, seed: u64) -> Outcome {
    let raw: String = cfg.get("verify.suite")?;
    let suites: Vec<Suite> = if raw == "all" {
        Suite::ALL.to_vec()
    } else {
        raw.split(',').map(|s| s.trim().parse().map_err(|e| cfg.invalid("verify.suite", e))).collect::<Result<_, _>>()?
    };
    let mut checks = Vec::new();
    for suite in suites {
        match run_suite(suite, seed) {
            Ok(r) => checks.extend(r),
            Err(e) => checks.push(Report::at_most(&format!("suite {suite} raised: {e}"), &[], f64::INFINITY, 0.0)),
        }
    }
    Ok((Vec::new(), checks))
}

pub fn qv(cfg: &Config, seed: u64) -> Outcome {
    let hp = params(cfg)?;
    let spec = kernel(cfg, &hp)?.with_tol(1e-5)?;
    let paths: usize = cfg.get("qv.paths")?;
    let step_power: i32 = cfg.get("qv.step_power")?;
    let eps_powers: Vec<i32> = cfg.list("qv.eps_powers")?;
    let horizon: f64 = cfg.get("qv.horizon")?;
    let tol: f64 = cfg.get("qv.tol")?;
    if eps_powers.is_empty() || paths == 0 {
        return Err(cfg.invalid("qv.eps_powers", "need at least one eps and one path").into());
    }
    let eps: Vec<f64> = eps_powers.iter().map(|&n| spec.a.powi(n)).collect();
    let step = spec.a.powi(step_power);
    let widest = eps.iter().copied().fold(0.0, f64::max);
    let grid = Grid::uniform(step, ((horizon + widest) / step).ceil() as usize).map_err(|e| cfg.invalid("qv.step_power", e))?;
    let t_max = grid.t_max();
    let range = required_j_range(&spec, 0..=0, t_max, spec.tol * covariance(&spec, t_max, t_max)?);
    let h_eps: Vec<f64> = eps.iter().map(|&e| h_osc(e, &spec)).collect::<Result<_, _>>().map_err(|e| cfg.invalid("kernel.H", e))?;
    let finest = eps_powers.iter().enumerate().max_by_key(|(_, &n)| n).map(|(k, _)| k).unwrap_or(0);
    let mut csv = String::from("path_id,n,eps,v_over_h,u_over_h\n");
    let (mut v_fine, mut u_fine) = (0.0, 0.0);
    // bounded memory: at most 8 paths of the fine grid at a time
    let chunk = 8;
    for c in 0..paths.div_ceil(chunk) {
        let size = chunk.min(paths - c * chunk);
        let ens = sample_series(&spec, &grid, size, range.clone(), derive_seed(seed, c as u64))?;
        for (i, x) in ens.paths().enumerate() {
            for (k, (&e, &h)) in eps.iter().zip(&h_eps).enumerate() {
                let v = weighted_qv(x, &grid, e, horizon, &spec).map_err(|err| cfg.invalid("qv.step_power", err))?;
                let u = discrete_qv(x, &grid, e, horizon, spec.h).map_err(|err| cfg.invalid("qv.step_power", err))? / h;
                if k == finest {
                    v_fine += v;
                    u_fine += u;
                }
                let _ = writeln!(csv, "{},{},{e:.17e},{v:.17e},{u:.17e}", c * chunk + i, eps_powers[k]);
            }
        }
    }
    let (v_mean, u_mean) = (v_fine / paths as f64, u_fine / paths as f64);
    let p = [
        ("family", spec.family.to_string()),
        ("H", spec.h.to_string()),
        ("paths", paths.to_string()),
        ("eps", format!("a^{}", eps_powers[finest])),
    ];
    let checks = vec![
        Report::at_most("mean V_eps/h_eps, relative error to the horizon", &p, (v_mean - horizon).abs() / horizon, tol),
        Report::at_most("mean U_eps/h_eps vs mean V_eps/h_eps, relative difference", &p, (u_mean - v_mean).abs() / v_mean, tol),
    ];
    Ok((vec![("qv.csv".into(), csv.into_bytes())], checks))
}

pub fn spatial(cfg: &Config) -> Outcome {
    let hp = params(cfg)?;
    let radius: u32 = cfg.get("spatial.radius")?;
    let brute_max: f64 = cfg.get("spatial.brute_max")?;
    let mut csv = String::from("s,t,closed_form,vartheta,enumerated\n");
    let (mut worst_brute, mut worst_vartheta): (f64, f64) = (0.0, 0.0);
    let inv_a = 1.0 / hp.a;
    for s in 0..=radius {
        for t in 0..=radius {
            let closed = spatial_cov(s, t, &hp).map_err(|e| cfg.invalid("system.c", e))?;
            let vt = vartheta_cov(inv_a.powi(s as i32), inv_a.powi(t as i32), &hp)?;
            worst_vartheta = worst_vartheta.max((vt - closed).abs() / closed);
            let brute = if (hp.m as f64).powi((s + t) as i32) <= brute_max {
                let b = spatial_cov_bruteforce(s, t, &hp)?;
                worst_brute = worst_brute.max((b - closed).abs() / closed);
                format!("{b:.17e}")
            } else {
                String::new()
            };
            let _ = writeln!(csv, "{s},{t},{closed:.17e},{vt:.17e},{brute}");
        }
    }
    let p = [("M", hp.m.to_string()), ("c", hp.c.to_string()), ("radius", radius.to_string())];
    let checks = vec![
        Report::at_most("ball-sum enumeration vs closed form, max relative error", &p, worst_brute, 1e-10),
        Report::at_most("vartheta covariance at (a^-s, a^-t) vs closed form, max relative error", &p, worst_vartheta, 1e-10),
    ];
    Ok((vec![("spatial.csv".into(), csv.into_bytes())], checks))
}
