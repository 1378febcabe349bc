//! Dave's side: the instantaneous energy detector, false-alarm calibration,
//! Monte Carlo detection rates, ROC curves and the kNN divergence estimator.

use rand::Rng;

use crate::channel::{complex_gaussian, Constellation, ConstellationKind};
use crate::error::{domain, invalid, Error, Result};
use crate::numerics::{exponential_expectation, marcum_q1};
use crate::schemes::{compute_crossover, FrameModel, Scheme, SchemeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Band half-width.
    pub delta: f64,
    pub target_pfa: Option<f64>,
}

impl DetectorConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(invalid("detector.delta", "delta must be > 0"));
        }
        Ok(Self {
            delta,
            target_pfa: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleLabel {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Fab,
    Fhb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySampleSet {
    pub values: Vec<f64>,
    pub label: SampleLabel,
    pub band: Band,
}

impl EnergySampleSet {
    pub fn new(values: Vec<f64>, label: SampleLabel, band: Band) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(domain("energy", *v, "finite and >= 0"));
        }
        Ok(Self {
            values,
            label,
            band,
        })
    }

    /// Single-column CSV with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("energy\n");
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }
}

/// True iff the normalized energy falls outside `[1 - delta, 1 + delta]`.
pub fn instantaneous_detect(normalized_energy: f64, cfg: &DetectorConfig) -> bool {
    normalized_energy < 1.0 - cfg.delta || normalized_energy > 1.0 + cfg.delta
}

/// The same band test applied around every symbol-energy ring of the
/// alphabet; for PSK this is exactly `instantaneous_detect`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDetector {
    pub delta: f64,
    pub levels: Vec<f64>,
}

impl EnergyDetector {
    pub fn new(delta: f64, alphabet: &Constellation) -> Self {
        let levels = match alphabet.kind {
            ConstellationKind::Psk => vec![1.0],
            _ => alphabet.energy_levels::<f64>(),
        };
        Self { delta, levels }
    }

    /// Distance of `e` from the nearest ring, relative to that ring.
    pub fn deviation(&self, e: f64) -> f64 {
        self.levels
            .iter()
            .map(|&l| (e / l - 1.0).abs())
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn alarm(&self, e: f64) -> bool {
        self.levels
            .iter()
            .all(|&l| e < l * (1.0 - self.delta) || e > l * (1.0 + self.delta))
    }
}

/// Exact false-alarm probability of the unit-energy band detector under
/// Rayleigh fading: given `g = |h|^2`, `2 stat / s^2` is noncentral
/// chi-square with two degrees of freedom and noncentrality
/// `lambda = 2 E_H g / N`.
pub fn psk_false_alarm(delta: f64, noise: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(domain("delta", delta, ">= 0"));
    }
    if !(noise > 0.0) {
        return Err(domain("noise", noise, "N > 0"));
    }
    let err = std::cell::Cell::new(None);
    let f = |g: f64| {
        if g <= 0.0 {
            return 1.0;
        }
        let lam = 2.0 * g / noise;
        let a = lam.sqrt();
        let upper = marcum_q1(a, ((1.0 + delta) * lam).sqrt());
        let lower = if delta < 1.0 {
            marcum_q1(a, ((1.0 - delta) * lam).sqrt()).map(|q| 1.0 - q)
        } else {
            Ok(0.0)
        };
        match (upper, lower) {
            (Ok(u), Ok(l)) => u + l,
            (Err(e), _) | (_, Err(e)) => {
                err.set(Some(e));
                f64::NAN
            }
        }
    };
    let v = exponential_expectation(&f);
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v.clamp(0.0, 1.0)),
    }
}

/// Smallest band half-width whose false-alarm probability on the
/// pre-countermeasure statistic does not exceed `target_pfa`.
///
/// PSK uses the exact expression above and bisection. Other alphabets use the
/// empirical `(1 - target)` quantile of the ring deviation from `trials`
/// simulated slots.
pub fn calibrate_delta<R: Rng + ?Sized>(
    target_pfa: f64,
    noise: f64,
    alphabet: &Constellation,
    trials: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(Error::Unattainable {
            target: target_pfa,
            reason: "target must lie in (0,1)".into(),
        });
    }
    if !(noise > 0.0) {
        return Err(domain("noise", noise, "N > 0"));
    }
    if alphabet.kind == ConstellationKind::Psk {
        let mut hi = 1.0;
        while psk_false_alarm(hi, noise)? > target_pfa {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::Unattainable {
                    target: target_pfa,
                    reason: "no finite band reaches the target".into(),
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if psk_false_alarm(mid, noise)? > target_pfa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(hi);
    }
    if (trials as f64) * target_pfa < 10.0 {
        return Err(Error::Unattainable {
            target: target_pfa,
            reason: format!("{trials} trials resolve fewer than 10 alarms"),
        });
    }
    let det = EnergyDetector::new(0.0, alphabet);
    let pts = alphabet.points::<f64>();
    let mut dev: Vec<f64> = (0..trials)
        .map(|_| {
            let h = complex_gaussian(1.0, rng);
            let y = pts[rng.random_range(0..pts.len())];
            let r = h * y + complex_gaussian(noise, rng);
            det.deviation(r.norm_sqr() / h.norm_sqr())
        })
        .collect();
    dev.sort_by(f64::total_cmp);
    let allowed = (target_pfa * trials as f64).floor() as usize;
    Ok(dev[dev.len() - 1 - allowed.min(dev.len() - 1)])
}

/// Rate estimate with a normal-approximation 95 % half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEstimate {
    pub rate: f64,
    pub half_width: f64,
    pub events: u64,
    pub slots: u64,
}

impl DetectionEstimate {
    pub fn from_counts(events: u64, slots: u64) -> Self {
        let p = events as f64 / slots.max(1) as f64;
        Self {
            rate: p,
            half_width: 1.96 * (p * (1.0 - p) / slots.max(1) as f64).sqrt(),
            events,
            slots,
        }
    }
}

/// Alarm count over `trials` countermeasure slot pairs on f_HB. Dave knows
/// `|h_HD|` exactly and normalizes by `E_H |h_HD|^2`.
pub fn count_detections<R: Rng + ?Sized>(
    scheme: Scheme,
    fm: &FrameModel<f64>,
    tau: f64,
    det: &EnergyDetector,
    trials: u64,
    rng: &mut R,
) -> u64 {
    let m = fm.points.len();
    let e_h = fm.params.e_h;
    let mut alarms = 0;
    for _ in 0..trials {
        let x: bool = rng.random();
        let yk = rng.random_range(0..m);
        let ynk = rng.random_range(0..m);
        let (r, g) = fm.dave_fhb_slot_k(x, yk, rng);
        alarms += det.alarm(r.norm_sqr() / (e_h * g)) as u64;
        let selector = match scheme {
            Scheme::Dtrtf => fm.helper_energy(x, rng) > tau,
            Scheme::Llcrtf => rng.random(),
        };
        let (r, g) = fm.dave_fhb_slot_nk(selector, ynk, rng);
        alarms += det.alarm(r.norm_sqr() / (e_h * g)) as u64;
    }
    alarms
}

/// Per-slot detection rate of the countermeasure on f_HB.
pub fn detection_prob<R: Rng + ?Sized>(
    scheme: Scheme,
    p: &SchemeParams<f64>,
    cfg: &DetectorConfig,
    trials: u64,
    rng: &mut R,
) -> Result<DetectionEstimate> {
    if trials < 10_000 {
        return Err(invalid("run.trials", "detection needs >= 1e4 trials"));
    }
    let fm = FrameModel::new(p)?;
    let tau = match scheme {
        Scheme::Dtrtf => compute_crossover(p)?.tau_opt,
        Scheme::Llcrtf => 0.0,
    };
    let det = EnergyDetector::new(cfg.delta, &p.alphabet()?);
    let events = count_detections(scheme, &fm, tau, &det, trials, rng);
    Ok(DetectionEstimate::from_counts(events, 2 * trials))
}

/// Divergence estimate with the variance of its sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KldEstimate {
    pub value: f64,
    pub variance: f64,
}

/// Distance from `q` to its `k`-th nearest neighbour in sorted `s`, skipping
/// position `skip` if given.
fn kth_distance(s: &[f64], q: f64, k: usize, skip: Option<usize>) -> f64 {
    let pos = s.partition_point(|&v| v < q);
    let (mut l, mut r) = match skip {
        Some(i) => (i as isize - 1, i + 1),
        None => (pos as isize - 1, pos),
    };
    let mut d = 0.0;
    for _ in 0..k {
        let dl = if l >= 0 { q - s[l as usize] } else { f64::INFINITY };
        let dr = if r < s.len() { s[r] - q } else { f64::INFINITY };
        if dl <= dr {
            d = dl;
            l -= 1;
        } else {
            d = dr;
            r += 1;
        }
    }
    d
}

/// One-dimensional k-nearest-neighbour estimate of `D(before || after)`:
/// mean of `ln(nu_k / rho_k)` plus `ln(m / (n - 1))`.
pub fn knn_kld(before: &EnergySampleSet, after: &EnergySampleSet, k: usize) -> Result<KldEstimate> {
    let n = before.values.len();
    let m = after.values.len();
    if k == 0 {
        return Err(invalid("k", "k must be >= 1"));
    }
    if n <= k || m < k {
        return Err(invalid("k", "k must be below both sample sizes"));
    }
    let mut x = before.values.clone();
    let mut y = after.values.clone();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    if x[0] == x[n - 1] || y[0] == y[m - 1] {
        return Err(Error::Degenerate("all values identical".into()));
    }
    let mut terms = Vec::with_capacity(n);
    for (i, &q) in x.iter().enumerate() {
        let rho = kth_distance(&x, q, k, Some(i));
        let nu = kth_distance(&y, q, k, None);
        if rho <= 0.0 || nu <= 0.0 {
            return Err(Error::Degenerate(format!(
                "zero neighbour distance at value {q}"
            )));
        }
        terms.push((nu / rho).ln());
    }
    let nf = n as f64;
    let mean = terms.iter().sum::<f64>() / nf;
    let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (nf - 1.0) / nf;
    Ok(KldEstimate {
        value: mean + (m as f64 / (nf - 1.0)).ln(),
        variance: var,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Degenerate("empty sample".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lam = (ne + 0.12 + 0.11 / ne) * d;
    Ok((d, kolmogorov_q(lam).clamp(0.0, 1.0)))
}

/// Kolmogorov survival function; the theta-function form is used for small
/// arguments where the alternating series does not converge.
fn kolmogorov_q(lam: f64) -> f64 {
    if lam <= 0.0 {
        return 1.0;
    }
    if lam < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lam * lam);
        let s: f64 = (1..=6)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        return 1.0 - (2.0 * std::f64::consts::PI).sqrt() / lam * s;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let t = 2.0 * (-2.0 * kf * kf * lam * lam).exp();
        p += if k % 2 == 1 { t } else { -t };
        if t < 1e-16 {
            break;
        }
    }
    p
}
