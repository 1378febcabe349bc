//! Closed-form reliability terms: conditional pairwise error probabilities,
//! their channel-averaged versions and the per-scheme totals.
//!
//! Averaged forms assume unit helper energy (`N_1b = N + 1 - alpha`).

use crate::error::{domain, invalid, Result};
use crate::numerics::{gaussian_q, marcum_q1, QApproxConstants};
use crate::schemes::{CrossoverProbs, Scheme, SchemeParams};
use crate::Real;

/// Every analytic term behind one scheme's bound. Values are unclamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundBreakdown<T> {
    pub pa_avg: [T; 4],
    /// OOK terms of the low-latency scheme; zero for DTRTF.
    pub pa5: T,
    pub pa6: T,
    pub pb_avg: T,
    pub pb2_avg: T,
    pub p_avg1: T,
    pub p_avg2: T,
    pub total: T,
    /// Component of `total` increasing in alpha.
    pub p_up: T,
    /// Component of `total` decreasing in alpha (detector term excluded).
    pub p_down_reliability: T,
}

impl<T: Real> BoundBreakdown<T> {
    pub fn fields(&self) -> Vec<(&'static str, T)> {
        vec![
            ("pa1_avg", self.pa_avg[0]),
            ("pa2_avg", self.pa_avg[1]),
            ("pa3_avg", self.pa_avg[2]),
            ("pa4_avg", self.pa_avg[3]),
            ("pa5", self.pa5),
            ("pa6", self.pa6),
            ("pb_avg", self.pb_avg),
            ("pb2_avg", self.pb2_avg),
            ("p_avg1", self.p_avg1),
            ("p_avg2", self.p_avg2),
            ("total", self.total),
            ("p_up", self.p_up),
            ("p_down_reliability", self.p_down_reliability),
        ]
    }
}

fn check<T: Real>(alpha: T, noise: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(domain("alpha", alpha, "0 < alpha < 1"));
    }
    if !(noise.is_finite() && noise > T::zero()) {
        return Err(domain("noise", noise, "N > 0"));
    }
    Ok(())
}

pub fn n1b<T: Real>(alpha: T, noise: T) -> T {
    noise + T::one() - alpha
}

/// Conditional Alice-bit pairwise errors for adjacent helper symbols with
/// squared mean separation `d2` between the two slot-k hypotheses.
pub fn pa_conditional_with_separation<T: Real>(alpha: T, noise: T, gain: T, d2: T) -> Result<[T; 4]> {
    check(alpha, noise)?;
    if gain.is_nan() || gain < T::zero() {
        return Err(domain("|h|^2", gain, ">= 0"));
    }
    let n1 = n1b(alpha, noise);
    let e = T::one() - alpha;
    let two = T::lit(2.0);
    let r = two * d2 / (e * e);
    let s = two / e * ((n1 / noise).ln() + d2 / e);
    if !(s >= T::zero()) {
        return Err(domain("s", s, "s >= 0"));
    }
    let h = gain.sqrt();
    Ok([
        T::one() - marcum_q1((n1 * r).sqrt(), (noise * s).sqrt())?,
        gaussian_q((alpha / n1).sqrt() * h)?,
        gaussian_q((alpha / noise).sqrt() * h)?,
        marcum_q1((noise * r).sqrt(), (n1 * s).sqrt())?,
    ])
}

/// `(P_A1, P_A2, P_A3, P_A4)` given `|h|^2`. The Marcum arguments use the
/// squared separation `2 alpha |h|^2` of adjacent QPSK points scaled by
/// `sqrt(alpha)`.
pub fn pa_conditional<T: Real>(alpha: T, noise: T, gain: T) -> Result<[T; 4]> {
    pa_conditional_with_separation(alpha, noise, gain, T::lit(2.0) * alpha * gain)
}

/// `ln(1+u)/u`, stable at small `u`.
fn log1p_ratio<T: Real>(u: T) -> T {
    if u < T::lit(1e-5) {
        T::one() - u / T::lit(2.0) + u * u / T::lit(3.0) - u * u * u / T::lit(4.0)
    } else {
        u.ln_1p() / u
    }
}

/// `(N/N_1b)^{N_1b/(1-alpha)}`, continuous up to `alpha = 1` where it is `1/e`.
pub fn pa6<T: Real>(alpha: T, noise: T) -> T {
    let u = (T::one() - alpha) / noise;
    (-(T::one() + u) * log1p_ratio(u)).exp()
}

/// `1 - (N_1b/N)^{N/(alpha-1)}`, continuous up to `alpha = 1` where it is
/// `1 - 1/e`.
pub fn pa5<T: Real>(alpha: T, noise: T) -> T {
    let u = (T::one() - alpha) / noise;
    T::one() - (-log1p_ratio(u)).exp()
}

/// Channel-averaged `P_A1 .. P_A4`.
pub fn pa_avg<T: Real>(alpha: T, noise: T, c: &QApproxConstants<T>) -> Result<[T; 4]> {
    check(alpha, noise)?;
    let n1 = n1b(alpha, noise);
    let e = T::one() - alpha;
    let pa1 = (n1 * alpha.sqrt() / (e * e) + T::one()).recip();
    Ok([
        pa1,
        c.rayleigh_average(alpha / n1),
        c.rayleigh_average(alpha / noise),
        pa6(alpha, noise) * pa1,
    ])
}

/// Nearest distance between the unit set and the boosted, rotated set.
pub fn inter_set_distance<T: Real>(alpha: T, order: usize) -> Result<T> {
    if order < 2 {
        return Err(invalid("order", "M >= 2"));
    }
    let two = T::lit(2.0);
    let v = T::lit(3.0) - alpha
        - two * (two - alpha).sqrt() * (T::PI() / T::lit(order as f64)).cos();
    if !(v >= T::zero()) {
        return Err(domain("d^2", v, ">= 0"));
    }
    Ok(v.sqrt())
}

/// Conditional slot-(n+k) errors `(P_B1, P_B2, P_B3)` for channel magnitude
/// `|h|`: inter-set nearest pairs for B1/B3, same-set neighbours for B2.
pub fn pb_conditional<T: Real>(alpha: T, noise: T, order: usize, h_abs: T) -> Result<[T; 3]> {
    check(alpha, noise)?;
    let d = inter_set_distance(alpha, order)?;
    let same = T::lit(2.0) * (T::PI() / T::lit(order as f64)).sin();
    let k = h_abs / (T::lit(2.0) * noise).sqrt();
    let pb1 = gaussian_q(k * d)?;
    Ok([pb1, gaussian_q(k * same)?, pb1])
}

/// `(P_B^avg, P_B2^avg)`; `gain_var` is the helper channel variance.
pub fn pb_avg<T: Real>(
    alpha: T,
    noise: T,
    order: usize,
    gain_var: T,
    c: &QApproxConstants<T>,
) -> Result<(T, T)> {
    check(alpha, noise)?;
    let d = inter_set_distance(alpha, order)?;
    let two_n = T::lit(2.0) * noise;
    Ok((
        c.rayleigh_average(d * gain_var / two_n),
        c.rayleigh_average(gain_var / two_n),
    ))
}

fn assemble<T: Real>(
    scheme: Scheme,
    alpha: T,
    noise: T,
    order: usize,
    cp: &CrossoverProbs<T>,
    gain_var: T,
) -> Result<BoundBreakdown<T>> {
    let c = QApproxConstants::default();
    let pa = pa_avg(alpha, noise, &c)?;
    let (pb, pb2) = pb_avg(alpha, noise, order, gain_var, &c)?;
    let sum_pa = pa.iter().fold(T::zero(), |acc, &v| acc + v);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    Ok(match scheme {
        Scheme::Dtrtf => {
            let p_avg2 = half
                * (two * cp.p11 * (pb + pb2)
                    + cp.p01 * (T::one() - pb)
                    + two * cp.p00 * pb
                    + cp.p10 * (T::one() - pb));
            BoundBreakdown {
                pa_avg: pa,
                pa5: T::zero(),
                pa6: T::zero(),
                pb_avg: pb,
                pb2_avg: pb2,
                p_avg1: sum_pa,
                p_avg2,
                total: sum_pa + p_avg2,
                p_up: p_avg2,
                p_down_reliability: sum_pa,
            }
        }
        Scheme::Llcrtf => {
            let a5 = pa5(alpha, noise);
            let a6 = pa6(alpha, noise);
            let p_avg1 = (two * sum_pa + a5 + a6) * half;
            let p_avg2 = pb + pb2;
            BoundBreakdown {
                pa_avg: pa,
                pa5: a5,
                pa6: a6,
                pb_avg: pb,
                pb2_avg: pb2,
                p_avg1,
                p_avg2,
                total: p_avg1 + p_avg2,
                p_up: (a5 + a6) * half + p_avg2,
                p_down_reliability: sum_pa,
            }
        }
    })
}

pub fn dtrtf_bound<T: Real>(
    alpha: T,
    noise: T,
    order: usize,
    cp: &CrossoverProbs<T>,
) -> Result<BoundBreakdown<T>> {
    assemble(Scheme::Dtrtf, alpha, noise, order, cp, T::one())
}

pub fn llcrtf_bound<T: Real>(alpha: T, noise: T, order: usize) -> Result<BoundBreakdown<T>> {
    assemble(Scheme::Llcrtf, alpha, noise, order, &CrossoverProbs::perfect(), T::one())
}

/// Bound for a full parameter set. The averaged forms are derived for unit
/// helper variance; with a large-scale offset they are only evaluated when
/// `extrapolate` is set, in which case the offset rescales the slot-(n+k)
/// averages.
pub fn scheme_bound<T: Real>(
    scheme: Scheme,
    p: &SchemeParams<T>,
    cp: &CrossoverProbs<T>,
    extrapolate: bool,
) -> Result<BoundBreakdown<T>> {
    if p.partial != T::zero() && !extrapolate {
        return Err(invalid(
            "scheme.partial",
            "bounds hold for zero large-scale offset; set extrapolate to evaluate anyway",
        ));
    }
    assemble(scheme, p.alpha, p.noise, p.order, cp, p.helper_variance())
}

/// Increasing and decreasing parts of `total + detector_term`.
pub fn monotone_split<T: Real>(
    scheme: Scheme,
    alpha: T,
    noise: T,
    order: usize,
    cp: &CrossoverProbs<T>,
    detector_term: T,
) -> Result<(T, T)> {
    let b = assemble(scheme, alpha, noise, order, cp, T::one())?;
    Ok((b.p_up, b.p_down_reliability + detector_term))
}
