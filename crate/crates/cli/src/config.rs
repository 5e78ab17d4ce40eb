//! Flat `section.key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Every accepted key with its default (`None`: optional, no default) and a
/// one-line description.
pub const SCHEMA: &[(&str, Option<&str>, &str)] = &[
    ("run.seed", Some("0"), "master seed (u64)"),
    ("run.threads", None, "worker threads; overrides ULTRAFBM_THREADS"),
    ("output.dir", Some("ultrafbm-out"), "directory for data, report.json and manifest.json"),
    ("output.binary", Some("true"), "also write path ensembles as .bin"),
    ("system.M", Some("2"), "group order M >= 2"),
    ("system.c", Some("0.5"), "walk parameter c in (0, M)"),
    ("kernel.family", Some("ofbm"), "ofbm | osfbm | onsfbm | eta | rho | unified"),
    ("kernel.H", Some("0.75"), "Hurst-type index (U for rho)"),
    ("kernel.kappa", Some("1"), "scale shift kappa in [1, 1/a): b -> kappa b"),
    ("grid.times", None, "comma-separated times; overrides grid.step and grid.n"),
    ("grid.step", Some("0.25"), "uniform grid step"),
    ("grid.n", Some("8"), "number of uniform steps (grid has n + 1 points from 0)"),
    ("eval.s", Some("0.5,1,2"), "kernel-eval: s values"),
    ("eval.t", Some("0.5,1,2"), "kernel-eval: t values"),
    ("sample.method", Some("exact"), "exact | series | even-part | vartheta"),
    ("sample.paths", Some("1000"), "number of paths"),
    ("sample.j_min", None, "series: smallest scale index (default: from the truncation bound)"),
    ("sample.j_max", None, "series: largest scale index (default: from the truncation bound)"),
    ("sample.tol", Some("1e-9"), "series: truncation tolerance relative to the variance at the last time"),
    ("sample.z_tol", Some("4"), "max z of the empirical covariance against the analytic one"),
    ("particles.law", Some("poisson:1"), "poisson:<mean> | deterministic:<k> | categorical:<p0>,<p1>,..."),
    ("particles.branching", Some("none"), "none | critical branching rate V > 0"),
    ("particles.regime", Some("auto"), "auto | no-branch-low-gamma | branch-mid-gamma | branch-high-density | high-gamma"),
    ("particles.T", Some("64"), "time scale T"),
    ("particles.intensity", Some("1"), "initial density multiplier H_T (Poisson laws only)"),
    ("particles.radius", Some("auto"), "truncation radius R, or auto for the policy radius"),
    ("particles.phi", Some("delta"), "delta | ball:<r>"),
    ("particles.replicas", Some("200"), "number of independent systems"),
    ("particles.simulator", Some("reduced"), "reduced | full"),
    ("particles.z_tol", Some("3"), "max z of the empirical covariance against the finite-T covariance"),
    ("verify.suite", Some("all"), "all, or comma-separated suite names"),
    ("qv.paths", Some("20"), "number of paths"),
    ("qv.step_power", Some("8"), "grid step a^k"),
    ("qv.eps_powers", Some("3,4,5,6"), "comma-separated n with eps = a^n"),
    ("qv.horizon", Some("1"), "integration horizon T"),
    ("qv.tol", Some("0.05"), "relative tolerance of the mean of V_eps/h_eps at the finest eps"),
    ("spatial.radius", Some("3"), "largest ball radius"),
    ("spatial.brute_max", Some("1e7"), "largest M^(s+t) checked by enumeration"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field '{k}': {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field '{k}': {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default)]
pub struct Config {
    /// key -> (value, line; 0 for values set on the command line)
    entries: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let err = |field: Option<&str>, message: String| ConfigError { line: Some(line), field: field.map(Into::into), message };
            let (key, value) = body.split_once('=').ok_or_else(|| err(None, "expected 'section.key = value'".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') {
                return Err(err(Some(key), "keys are dotted, e.g. system.M".into()));
            }
            if !SCHEMA.iter().any(|(k, _, _)| *k == key) {
                return Err(err(Some(key), "unknown key".into()));
            }
            if value.is_empty() {
                return Err(err(Some(key), "empty value".into()));
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(err(Some(key), format!("duplicate key (first set on line {first})")));
            }
            entries.insert(key.to_string(), (value.to_string(), line));
        }
        if entries.is_empty() {
            return Err(ConfigError { line: None, field: None, message: "empty config".into() });
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    fn lookup(&self, key: &str) -> Option<(&str, Option<usize>)> {
        debug_assert!(SCHEMA.iter().any(|(k, _, _)| *k == key), "{key} missing from schema");
        self.entries.get(key).map(|(v, l)| (v.as_str(), (*l > 0).then_some(*l)))
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError { line: self.entries.get(key).and_then(|(_, l)| (*l > 0).then_some(*l)), field: Some(key.into()), message }
    }

    /// Raw value, falling back to the schema default.
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.lookup(key).map(|(v, _)| v).or_else(|| SCHEMA.iter().find(|(k, _, _)| *k == key).and_then(|(_, d, _)| *d))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get_opt(key)?.ok_or_else(|| self.error(key, "required".into()))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| self.error(key, format!("cannot parse '{v}': {e}"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key).ok_or_else(|| self.error(key, "required".into()))?;
        raw.split(',').map(|x| x.trim().parse().map_err(|e| self.error(key, format!("cannot parse '{x}': {e}")))).collect()
    }

    /// Wraps a library error raised while interpreting `key`.
    pub fn invalid(&self, key: &str, e: impl fmt::Display) -> ConfigError {
        self.error(key, e.to_string())
    }

    /// `key=value` lines of the explicitly set entries, sorted by key.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, (v, _))| format!("{k}={v}\n")).collect()
    }

    pub fn entries(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}
