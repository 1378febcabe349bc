//! Flat `key = value` experiment configuration with dotted sections.
//!
//! Unknown keys are rejected and every violation is reported at once.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::adversary::DetectorConfig;
use crate::channel::{snr_db_to_noise, ConstellationKind};
use crate::schemes::{select_scheme, LatencyModel, Scheme, SchemeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    ErrorVsAlpha,
    SumVsSnr,
    Table2,
    Roc,
    Kld,
    Robustness,
    Crossover,
    BoundsEval,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::ErrorVsAlpha,
        ExperimentId::SumVsSnr,
        ExperimentId::Table2,
        ExperimentId::Roc,
        ExperimentId::Kld,
        ExperimentId::Robustness,
        ExperimentId::Crossover,
        ExperimentId::BoundsEval,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentId::ErrorVsAlpha => "error-vs-alpha",
            ExperimentId::SumVsSnr => "sum-vs-snr",
            ExperimentId::Table2 => "table2",
            ExperimentId::Roc => "roc",
            ExperimentId::Kld => "kld",
            ExperimentId::Robustness => "robustness",
            ExperimentId::Crossover => "crossover",
            ExperimentId::BoundsEval => "bounds-eval",
        }
    }

    /// Defaults that differ from the global table for this experiment.
    fn default_overrides(&self) -> &'static [(&'static str, &'static str)] {
        match self {
            ExperimentId::ErrorVsAlpha => &[("scheme.n_h", "2"), ("run.trials", "1000000")],
            _ => &[],
        }
    }

    /// Sweep variable and default grid.
    fn sweep_default(&self) -> (SweepVar, &'static str) {
        match self {
            ExperimentId::ErrorVsAlpha => (SweepVar::Alpha, "0.5,0.6,0.7,0.8,0.9,0.95,0.99"),
            ExperimentId::SumVsSnr => (SweepVar::Snr, "15:5:40"),
            ExperimentId::Table2 => (SweepVar::Snr, "20,25,30,30,35"),
            ExperimentId::Roc => (SweepVar::Pfa, "0.01,0.05,0.1,0.2,0.3,0.4,0.5,0.7,0.9"),
            ExperimentId::Kld => (SweepVar::Partial, "0,0.5"),
            ExperimentId::Robustness => (SweepVar::Partial, "0,0.25,0.5"),
            ExperimentId::Crossover => (SweepVar::Alpha, "0.5,0.7,0.9,0.95,0.99,0.999"),
            ExperimentId::BoundsEval => (SweepVar::Alpha, ""),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment {s}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Alpha,
    Snr,
    Partial,
    Pfa,
}

impl SweepVar {
    fn name(&self) -> &'static str {
        match self {
            SweepVar::Alpha => "alpha",
            SweepVar::Snr => "snr",
            SweepVar::Partial => "partial",
            SweepVar::Pfa => "pfa",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVar,
    pub grid: Vec<f64>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub scheme: Scheme,
    pub params: SchemeParams<f64>,
    pub snr_db: f64,
    pub latency: LatencyModel,
    pub detector: DetectorConfig,
    pub sweep: Sweep,
    /// Alpha candidates for Monte Carlo minimizations.
    pub search_alphas: Vec<f64>,
    /// Extra grid: P_UF per table2 row, constellation orders for robustness.
    pub pfa_list: Vec<f64>,
    pub orders: Vec<usize>,
    pub kinds: Vec<ConstellationKind>,
    pub trials: u64,
    pub detector_trials: u64,
    pub alpha_step: f64,
    pub extrapolate: bool,
    pub kld_k: usize,
    pub kld_samples: u64,
    pub kld_replicates: u64,
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    /// Every key with its resolved textual value, in key order.
    pub resolved: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|i| format!("{}: {}", i.key, i.reason))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

/// Recognized keys and their defaults. An empty default means "derived" or
/// "unset".
pub const KEYS: &[(&str, &str)] = &[
    ("detector.delta", "0.842"),
    ("detector.target_pfa", ""),
    ("kld.k", "5"),
    ("kld.replicates", "20"),
    ("kld.samples", "10000"),
    ("latency.m", "40"),
    ("latency.n_fd", "25"),
    ("latency.tau_d", "8"),
    ("latency.tau_p", "2"),
    ("robust.kinds", "psk,qam"),
    ("robust.orders", "8,16"),
    ("run.alpha_step", "0.0001"),
    ("run.detector_trials", "100000"),
    ("run.extrapolate", "false"),
    ("run.output", "out"),
    ("run.search_alphas", "0.8:0.01:0.99,0.991:0.001:0.999"),
    ("run.seed", "1"),
    ("run.trials", "100000"),
    ("run.workers", "0"),
    ("scheme.alpha", "0.99"),
    ("scheme.constellation", "psk"),
    ("scheme.e_a", "0.5"),
    ("scheme.e_h", "1"),
    ("scheme.kind", "auto"),
    ("scheme.m", "4"),
    ("scheme.n", "1"),
    ("scheme.n_h", "1"),
    ("scheme.partial", "0"),
    ("scheme.rho_th", "1e-5"),
    ("scheme.sigma2_ah", "4"),
    ("scheme.snr_db", "35"),
    ("scheme.theta", ""),
    ("sweep.grid", ""),
    ("sweep.variable", ""),
    ("table2.pfa", "0.1,0.1,0.1,0.01,0.01"),
];

/// Raw key/value document; later assignments override earlier ones.
pub type RawConfig = BTreeMap<String, String>;

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_document(text: &str) -> Result<RawConfig, ConfigErrors> {
    let mut out = RawConfig::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            _ => issues.push(ConfigIssue {
                key: format!("line {}", i + 1),
                reason: "expected key = value".into(),
            }),
        }
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(ConfigErrors(issues))
    }
}

/// Parses a grid: comma-separated numbers or `start:step:end` ranges.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let mut v = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => v.push(num(x)?),
            [a, st, b] => {
                let (a, st, b) = (num(a)?, num(st)?, num(b)?);
                if !(st > 0.0) || b < a {
                    return Err(format!("bad range {item}"));
                }
                let n = ((b - a) / st + 1e-9).floor() as usize;
                // Rounded to 12 significant digits so ranges print cleanly.
                v.extend((0..=n).map(|i| {
                    let x = a + i as f64 * st;
                    format!("{x:.12e}").parse::<f64>().unwrap_or(x)
                }));
            }
            _ => return Err(format!("bad grid item {item}")),
        }
    }
    if v.is_empty() {
        return Err("grid is empty".into());
    }
    Ok(v)
}

fn num(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s}"))
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    overrides: &'static [(&'static str, &'static str)],
    issues: Vec<ConfigIssue>,
}

impl Reader<'_> {
    fn text(&self, key: &str) -> String {
        self.raw.get(key).cloned().unwrap_or_else(|| {
            if let Some(d) = self.overrides.iter().find(|(k, _)| *k == key) {
                return d.1.to_string();
            }
            KEYS.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, d)| d.to_string())
                .unwrap_or_default()
        })
    }

    fn fail(&mut self, key: &str, reason: impl Into<String>) {
        self.issues.push(ConfigIssue {
            key: key.into(),
            reason: reason.into(),
        });
    }

    fn parse<T: FromStr>(&mut self, key: &str, fallback: T) -> T {
        let t = self.text(key);
        match t.parse::<T>() {
            Ok(v) => v,
            Err(_) => {
                self.fail(key, format!("cannot parse {t:?}"));
                fallback
            }
        }
    }

    /// Integer that accepts scientific notation such as `1e6`.
    fn count(&mut self, key: &str) -> u64 {
        let t = self.text(key);
        match t.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => v as u64,
            _ => {
                self.fail(key, format!("expected a nonnegative integer, got {t:?}"));
                0
            }
        }
    }

    fn real(&mut self, key: &str) -> f64 {
        let t = self.text(key);
        match num(&t) {
            Ok(v) => v,
            Err(e) => {
                self.fail(key, e);
                f64::NAN
            }
        }
    }

    fn grid(&mut self, key: &str, fallback: &str) -> Vec<f64> {
        let t = self.text(key);
        let t = if t.is_empty() { fallback.to_string() } else { t };
        match parse_grid(&t) {
            Ok(v) => v,
            Err(e) => {
                self.fail(key, e);
                Vec::new()
            }
        }
    }
}

fn kind_from(s: &str) -> Option<ConstellationKind> {
    match s {
        "psk" => Some(ConstellationKind::Psk),
        "qam" => Some(ConstellationKind::Qam),
        _ => None,
    }
}

pub fn kind_name(k: ConstellationKind) -> &'static str {
    match k {
        ConstellationKind::Psk => "psk",
        ConstellationKind::Qam => "qam",
        ConstellationKind::Ook => "ook",
    }
}

/// Resolves defaults and checks every invariant.
pub fn validate_config(
    experiment: ExperimentId,
    raw: &RawConfig,
) -> Result<ExperimentConfig, ConfigErrors> {
    let mut r = Reader {
        raw,
        overrides: experiment.default_overrides(),
        issues: Vec::new(),
    };
    for k in raw.keys() {
        if !KEYS.iter().any(|(known, _)| known == k) {
            r.fail(k, "unknown key");
        }
    }

    let alpha = r.real("scheme.alpha");
    if !(alpha > 0.0 && alpha < 1.0) {
        r.fail("scheme.alpha", "alpha must lie in (0,1)");
    }
    let order = r.parse::<usize>("scheme.m", 4);
    let constellation = {
        let t = r.text("scheme.constellation");
        kind_from(&t).unwrap_or_else(|| {
            r.fail("scheme.constellation", "expected psk or qam");
            ConstellationKind::Psk
        })
    };
    let order_ok = match constellation {
        ConstellationKind::Qam => order >= 4 && order.is_power_of_two(),
        _ => order >= 2,
    };
    if !order_ok {
        r.fail("scheme.m", "order invalid for the constellation");
    }
    let snr_db = r.real("scheme.snr_db");
    let e_a = r.real("scheme.e_a");
    let e_h = r.real("scheme.e_h");
    if !(e_h > 0.0) {
        r.fail("scheme.e_h", "E_H must be > 0");
    }
    if !(e_a >= e_h / 2.0) {
        r.fail("scheme.e_a", "feasibility requires E_A >= E_H/2");
    }
    let n = r.parse::<usize>("scheme.n", 1);
    if n == 0 {
        r.fail("scheme.n", "n must be >= 1");
    }
    let theta = if r.text("scheme.theta").is_empty() {
        std::f64::consts::PI / order.max(1) as f64
    } else {
        r.real("scheme.theta")
    };
    let partial = r.real("scheme.partial");
    if !(partial > -1.0) {
        r.fail("scheme.partial", "large-scale offset must be > -1");
    }
    let rho_th = r.real("scheme.rho_th");
    if !(rho_th >= 0.0) {
        r.fail("scheme.rho_th", "rho_th must be >= 0");
    }
    let sigma2_ah = r.real("scheme.sigma2_ah");
    if !(sigma2_ah > 0.0) {
        r.fail("scheme.sigma2_ah", "sigma2_AH must be > 0");
    }
    let n_h = r.parse::<u32>("scheme.n_h", 1);
    if n_h == 0 {
        r.fail("scheme.n_h", "N_H must be >= 1");
    }

    let lat = LatencyModel {
        m: r.count("latency.m"),
        n_fd: r.count("latency.n_fd"),
        tau_p: r.count("latency.tau_p"),
        tau_d: r.count("latency.tau_d"),
        tau_h: 0,
    };
    let lat = LatencyModel {
        tau_h: lat.tau_p + lat.tau_d,
        ..lat
    };
    if let Err(crate::Error::InvalidParam { key, reason }) = lat.validate() {
        r.fail(&key, reason);
    }
    let scheme = match r.text("scheme.kind").as_str() {
        "auto" => select_scheme(&lat),
        "dtrtf" => Scheme::Dtrtf,
        "llcrtf" => Scheme::Llcrtf,
        _ => {
            r.fail("scheme.kind", "expected auto, dtrtf or llcrtf");
            Scheme::Dtrtf
        }
    };
    if experiment == ExperimentId::ErrorVsAlpha && scheme != Scheme::Dtrtf {
        r.fail("scheme.kind", "error-vs-alpha compares DTRTF decoders; scheme resolves to LLCRTF");
    }

    let delta = r.real("detector.delta");
    if !(delta > 0.0) {
        r.fail("detector.delta", "delta must be > 0");
    }
    let target_pfa = if r.text("detector.target_pfa").is_empty() {
        None
    } else {
        let v = r.real("detector.target_pfa");
        if !(v > 0.0 && v < 1.0) {
            r.fail("detector.target_pfa", "target must lie in (0,1)");
        }
        Some(v)
    };

    let (var, default_grid) = experiment.sweep_default();
    let var_text = r.text("sweep.variable");
    if !var_text.is_empty() && var_text != var.name() {
        r.fail(
            "sweep.variable",
            format!("{experiment} sweeps {}, not {var_text}", var.name()),
        );
    }
    let alpha_text = r.text("scheme.alpha");
    let default_grid = if experiment == ExperimentId::BoundsEval {
        alpha_text.as_str()
    } else {
        default_grid
    };
    let grid = r.grid("sweep.grid", default_grid);
    let grid_ok = grid.iter().all(|&g| match var {
        SweepVar::Alpha => g > 0.0 && g < 1.0,
        SweepVar::Pfa => g > 0.0 && g < 1.0,
        SweepVar::Partial => g > -1.0,
        SweepVar::Snr => true,
    });
    if !grid_ok {
        r.fail("sweep.grid", format!("value outside the {} domain", var.name()));
    }
    if var == SweepVar::Snr && experiment == ExperimentId::SumVsSnr && !grid.windows(2).all(|w| w[0] < w[1]) {
        r.fail("sweep.grid", "SNR grid must be ascending");
    }
    let pfa_list = r.grid("table2.pfa", "");
    if experiment == ExperimentId::Table2 {
        if pfa_list.len() != grid.len() {
            r.fail("table2.pfa", "needs one P_UF per SNR in sweep.grid");
        }
        if !pfa_list.iter().all(|&p| p > 0.0 && p < 1.0) {
            r.fail("table2.pfa", "P_UF must lie in (0,1)");
        }
    }
    let search_alphas = r.grid("run.search_alphas", "");
    if !search_alphas.iter().all(|&a| a > 0.0 && a < 1.0) {
        r.fail("run.search_alphas", "alpha candidates must lie in (0,1)");
    }
    let orders: Vec<usize> = r
        .grid("robust.orders", "")
        .iter()
        .map(|&o| o as usize)
        .collect();
    let kinds: Vec<ConstellationKind> = r
        .text("robust.kinds")
        .split(',')
        .map(str::trim)
        .filter_map(|s| kind_from(s).or_else(|| {
            r.fail("robust.kinds", format!("unknown constellation {s}"));
            None
        }))
        .collect();
    if orders.iter().any(|&o| o < 4 || !o.is_power_of_two()) {
        r.fail("robust.orders", "orders must be powers of two >= 4");
    }

    let trials = r.count("run.trials");
    if trials < 1000 {
        r.fail("run.trials", "at least 1000 trials");
    }
    let detector_trials = r.count("run.detector_trials");
    if detector_trials < 10_000 {
        r.fail("run.detector_trials", "at least 10000 trials");
    }
    let alpha_step = r.real("run.alpha_step");
    if !(alpha_step > 0.0 && alpha_step <= 0.01) {
        r.fail("run.alpha_step", "step must lie in (0, 0.01]");
    }
    let extrapolate = r.parse::<bool>("run.extrapolate", false);
    let kld_k = r.parse::<usize>("kld.k", 5);
    let kld_samples = r.count("kld.samples");
    if kld_k == 0 || kld_samples <= kld_k as u64 {
        r.fail("kld.k", "need 1 <= k < kld.samples");
    }
    let kld_replicates = r.count("kld.replicates");
    if kld_replicates == 0 {
        r.fail("kld.replicates", "at least one replicate");
    }
    let seed = r.count("run.seed");
    let workers = r.parse::<usize>("run.workers", 0);
    let output = PathBuf::from(r.text("run.output"));

    let mut params = SchemeParams::new(alpha, order, snr_db_to_noise(snr_db));
    params.e_a = e_a;
    params.e_h = e_h;
    params.n = n;
    params.theta = theta;
    params.partial = partial;
    params.rho_th = rho_th;
    params.sigma2_ah = sigma2_ah;
    params.n_h = n_h;
    params.constellation = constellation;
    if r.issues.is_empty() {
        if let Err(crate::Error::InvalidParam { key, reason }) = params.validate() {
            r.fail(&key, reason);
        }
    }
    if !r.issues.is_empty() {
        return Err(ConfigErrors(r.issues));
    }

    let resolved = KEYS
        .iter()
        .map(|(k, _)| {
            let v = match *k {
                "scheme.theta" => format!("{theta}"),
                "scheme.kind" => scheme.label().to_string(),
                "sweep.variable" => var.name().to_string(),
                "sweep.grid" => join(&grid),
                _ => r.text(k),
            };
            (k.to_string(), v)
        })
        .collect();

    Ok(ExperimentConfig {
        experiment,
        scheme,
        params,
        snr_db,
        latency: lat,
        detector: DetectorConfig { delta, target_pfa },
        sweep: Sweep {
            variable: var,
            grid,
        },
        search_alphas,
        pfa_list,
        orders,
        kinds,
        trials,
        detector_trials,
        alpha_step,
        extrapolate,
        kld_k,
        kld_samples,
        kld_replicates,
        seed,
        workers,
        output,
        resolved,
    })
}

pub fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = validate_config(ExperimentId::BoundsEval, &RawConfig::new()).unwrap();
        assert_eq!(c.params.e_a, 0.5);
        assert_eq!(c.params.e_h, 1.0);
        assert!((c.params.theta - std::f64::consts::PI / 4.0).abs() < 1e-15);
        assert_eq!(c.scheme, Scheme::Dtrtf);
    }

    #[test]
    fn all_violations_reported() {
        let raw = parse_document("scheme.alpha = 1.0\nscheme.e_a = 0.4\nbogus.key = 3\n").unwrap();
        let e = validate_config(ExperimentId::BoundsEval, &raw).unwrap_err();
        let keys: Vec<&str> = e.0.iter().map(|i| i.key.as_str()).collect();
        assert!(keys.contains(&"scheme.alpha"));
        assert!(keys.contains(&"scheme.e_a"));
        assert!(keys.contains(&"bogus.key"));
    }

    #[test]
    fn malformed_line() {
        assert!(parse_document("just words\n").is_err());
        let d = parse_document("# comment\n\na = 1 # trailing\n").unwrap();
        assert_eq!(d.get("a").map(String::as_str), Some("1"));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("15:5:40").unwrap(), vec![15.0, 20.0, 25.0, 30.0, 35.0, 40.0]);
        assert_eq!(parse_grid("0.991:0.001:0.993").unwrap(), vec![0.991, 0.992, 0.993]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:2").is_err());
    }

    #[test]
    fn scientific_counts() {
        let raw = parse_document("run.trials = 1e6").unwrap();
        assert_eq!(validate_config(ExperimentId::BoundsEval, &raw).unwrap().trials, 1_000_000);
    }
}
