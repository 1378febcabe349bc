use std::ops::AddAssign;

use crate::error::{invalid, Result};

/// Integer event counts; additive across shards and workers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TrialTally {
    pub trials: u64,
    pub alice_errors: u64,
    pub helper_k_errors: u64,
    pub helper_nk_errors: u64,
    pub joint_errors: u64,
    pub detections: u64,
    pub detection_slots: u64,
}

impl AddAssign for TrialTally {
    fn add_assign(&mut self, o: Self) {
        self.trials += o.trials;
        self.alice_errors += o.alice_errors;
        self.helper_k_errors += o.helper_k_errors;
        self.helper_nk_errors += o.helper_nk_errors;
        self.joint_errors += o.joint_errors;
        self.detections += o.detections;
        self.detection_slots += o.detection_slots;
    }
}

impl TrialTally {
    /// Records one decoded slot pair.
    pub fn record(&mut self, alice: bool, helper_k: bool, helper_nk: bool) {
        self.trials += 1;
        self.alice_errors += alice as u64;
        self.helper_k_errors += helper_k as u64;
        self.helper_nk_errors += helper_nk as u64;
        self.joint_errors += (alice || helper_k || helper_nk) as u64;
    }

    fn count(&self, which: ErrorKind) -> (u64, u64) {
        match which {
            ErrorKind::Alice => (self.alice_errors, self.trials),
            ErrorKind::HelperK => (self.helper_k_errors, self.trials),
            ErrorKind::HelperNk => (self.helper_nk_errors, self.trials),
            ErrorKind::Joint => (self.joint_errors, self.trials),
            ErrorKind::Detection => (self.detections, self.detection_slots),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Alice,
    HelperK,
    HelperNk,
    Joint,
    Detection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Binomial point estimate with a 95 % interval: normal approximation, or
/// the exact Clopper-Pearson interval when fewer than 20 events were seen.
pub fn estimate_rate(tally: &TrialTally, which: ErrorKind) -> Result<RateEstimate> {
    let (k, n) = tally.count(which);
    if n == 0 {
        return Err(invalid("trials", "no trials recorded"));
    }
    let p = k as f64 / n as f64;
    if k >= 20 {
        let h = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
        return Ok(RateEstimate {
            estimate: p,
            half_width: h,
            lower: (p - h).max(0.0),
            upper: (p + h).min(1.0),
        });
    }
    let (lower, upper) = clopper_pearson(k, n, 0.05);
    Ok(RateEstimate {
        estimate: p,
        half_width: 0.5 * (upper - lower),
        lower,
        upper,
    })
}

/// `P(X <= k)` for `X ~ Bin(n, p)`, summed directly (k is small here).
fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if k >= n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    let ln_q = (-p).ln_1p();
    let mut ln_term = nf * ln_q;
    let mut sum = ln_term.exp();
    for i in 1..=k.min(n) {
        let fi = i as f64;
        ln_term += ((nf - fi + 1.0) / fi).ln() + p.ln() - ln_q;
        sum += ln_term.exp();
    }
    sum.min(1.0)
}

fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    let tail = level / 2.0;
    let solve = |f: &dyn Fn(f64) -> f64| {
        // f is decreasing in p; find f(p) = tail.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let upper = if k >= n { 1.0 } else { solve(&|p| binom_cdf(k, n, p)) };
    let lower = if k == 0 {
        0.0
    } else {
        // P(X >= k) = 1 - cdf(k-1) increases in p.
        solve(&|p| binom_cdf(k - 1, n, p) - (1.0 - 2.0 * tail))
            .max(0.0)
    };
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_interval() {
        let t = TrialTally {
            trials: 10_000,
            joint_errors: 100,
            ..Default::default()
        };
        let r = estimate_rate(&t, ErrorKind::Joint).unwrap();
        assert!((r.estimate - 0.01).abs() < 1e-15);
        assert!((r.half_width - 0.00195).abs() < 1e-4);
    }

    #[test]
    fn zero_events() {
        let t = TrialTally {
            trials: 1000,
            ..Default::default()
        };
        let r = estimate_rate(&t, ErrorKind::Alice).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(r.upper > 0.0);
        // Rule of three.
        assert!((r.upper - 3.69e-3).abs() < 2e-4, "{}", r.upper);
    }

    #[test]
    fn clopper_pearson_small_count() {
        // Exact 95 % interval for 5 / 100.
        let (lo, hi) = clopper_pearson(5, 100, 0.05);
        assert!((lo - 0.01643).abs() < 2e-4, "{lo}");
        assert!((hi - 0.11284).abs() < 2e-4, "{hi}");
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(estimate_rate(&TrialTally::default(), ErrorKind::Joint).is_err());
    }
}
