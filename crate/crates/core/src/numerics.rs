//! Special functions: Gaussian Q, the three-term exponential approximation
//! of Q, first-order Marcum Q and regularized incomplete gamma tails.

use crate::error::{domain, Error, Result};
use crate::Real;

/// Weights and exponents of `Q(x) ~ sum k_i exp(-t_i x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QApproxConstants<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

impl<T: Real> Default for QApproxConstants<T> {
    fn default() -> Self {
        Self {
            k1: T::lit(0.168),
            k2: T::lit(0.144),
            k3: T::lit(0.002),
            t1: T::lit(0.876),
            t2: T::lit(0.525),
            t3: T::lit(0.603),
        }
    }
}

impl<T: Real> QApproxConstants<T> {
    pub fn new(k: [T; 3], t: [T; 3]) -> Result<Self> {
        for v in k.iter().chain(t.iter()) {
            if !(v.is_finite() && *v > T::zero()) {
                return Err(domain("q-approx constant", *v, "finite and > 0"));
            }
        }
        Ok(Self {
            k1: k[0],
            k2: k[1],
            k3: k[2],
            t1: t[0],
            t2: t[1],
            t3: t[2],
        })
    }

    fn pairs(&self) -> [(T, T); 3] {
        [(self.k1, self.t1), (self.k2, self.t2), (self.k3, self.t3)]
    }

    /// `E[sum k_i exp(-t_i c g)]` for `g ~ Exp(1)`, i.e. the approximated Q
    /// averaged over a unit Rayleigh power gain with `x^2 = c g`.
    pub fn rayleigh_average(&self, c: T) -> T {
        self.pairs()
            .iter()
            .fold(T::zero(), |acc, &(k, t)| acc + k / (t * c + T::one()))
    }
}

/// Upper tail of the standard normal distribution.
pub fn gaussian_q<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite { name: "x" });
    }
    Ok(T::lit(0.5) * (x / T::SQRT_2()).erfc())
}

pub fn gaussian_q_approx<T: Real>(x: T, c: &QApproxConstants<T>) -> Result<T> {
    if x.is_nan() || x < T::zero() {
        return Err(domain("x", x, "x >= 0"));
    }
    let x2 = x * x;
    Ok(c
        .pairs()
        .iter()
        .fold(T::zero(), |acc, &(k, t)| acc + k * (-t * x2).exp()))
}

/// Regularized incomplete gamma for integer shape. Returns the upper tail
/// `Q(shape, x)` when `upper` is set, otherwise the lower `P(shape, x)`.
pub fn gamma_tail<T: Real>(shape: u32, x: T, upper: bool) -> Result<T> {
    if shape == 0 {
        return Err(domain("shape", shape, "shape >= 1"));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { name: "x" });
    }
    if x < T::zero() {
        return Err(domain("x", x, "x >= 0"));
    }
    let (p, q) = reg_gamma(T::lit(shape as f64), x);
    Ok(if upper { q } else { p })
}

/// (P, Q) pair; whichever side is computed directly keeps full relative
/// accuracy and the other is its complement.
fn reg_gamma<T: Real>(a: T, x: T) -> (T, T) {
    if x == T::zero() {
        return (T::zero(), T::one());
    }
    let eps = T::epsilon();
    let prefactor = (-x + a * x.ln() - a.ln_gamma()).exp();
    if x < a + T::one() {
        let mut ap = a;
        let mut del = T::one() / a;
        let mut sum = del;
        for _ in 0..100_000 {
            ap = ap + T::one();
            del = del * x / ap;
            sum = sum + del;
            if del.abs() < sum.abs() * eps {
                break;
            }
        }
        let p = (sum * prefactor).min(T::one());
        (p, T::one() - p)
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = T::min_positive_value() / eps;
        let mut b = x + T::one() - a;
        let mut c = T::one() / tiny;
        let mut d = T::one() / b;
        let mut h = d;
        let two = T::lit(2.0);
        for i in 1..100_000u32 {
            let fi = T::lit(i as f64);
            let an = -fi * (fi - a);
            b = b + two;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = d.recip();
            let del = d * c;
            h = h * del;
            if (del - T::one()).abs() < eps {
                break;
            }
        }
        let q = (prefactor * h).min(T::one());
        (T::one() - q, q)
    }
}

/// Below this noncentrality the Poisson-mixture series is used.
const SERIES_MAX_A: f64 = 40.0;

/// First-order Marcum Q function `Q_1(a, b)`.
pub fn marcum_q1<T: Real>(a: T, b: T) -> Result<T> {
    if !a.is_finite() {
        return Err(Error::NonFinite { name: "a" });
    }
    if !b.is_finite() {
        return Err(Error::NonFinite { name: "b" });
    }
    if a < T::zero() {
        return Err(domain("a", a, "a >= 0"));
    }
    if b < T::zero() {
        return Err(domain("b", b, "b >= 0"));
    }
    if b == T::zero() {
        return Ok(T::one());
    }
    if a == T::zero() {
        return Ok((-b * b / T::lit(2.0)).exp());
    }
    let v = if a <= T::lit(SERIES_MAX_A) {
        marcum_series(a, b)?
    } else {
        marcum_large_a(a, b)
    };
    Ok(v.max(T::zero()).min(T::one()))
}

/// `Q_1(a,b) = sum_k Pois(k; a^2/2) Q(k+1, b^2/2)`, summed outward from the
/// Poisson mode so that nothing underflows at the start.
fn marcum_series<T: Real>(a: T, b: T) -> Result<T> {
    let half = T::lit(0.5);
    let x = a * a * half;
    let y = b * b * half;
    let k0 = x.floor().to_u32().unwrap_or(0);
    let fk0 = T::lit(k0 as f64);
    let lg = (fk0 + T::one()).ln_gamma();
    let w0 = (-x + fk0 * x.ln() - lg).exp();
    let p0 = (-y + fk0 * y.ln() - lg).exp();
    let g0 = gamma_tail(k0 + 1, y, true)?;
    let tol = T::epsilon();
    let mut sum = w0 * g0;

    // Upward: G_{k+1} = G_k + Pois(k+1; y).
    let (mut w, mut p, mut g) = (w0, p0, g0);
    let mut k = k0;
    for _ in 0..1_000_000 {
        k += 1;
        let fk = T::lit(k as f64);
        w = w * x / fk;
        p = p * y / fk;
        g = (g + p).min(T::one());
        sum = sum + w * g;
        let r = x / (fk + T::one());
        if r < T::one() {
            let tail = w * r / (T::one() - r);
            if tail <= tol * sum || tail < T::min_positive_value() {
                break;
            }
        }
    }

    // Downward: G_{k-1} = G_k - Pois(k; y).
    let (mut w, mut p, mut g) = (w0, p0, g0);
    let mut k = k0;
    while k > 0 {
        let fk = T::lit(k as f64);
        g = (g - p).max(T::zero());
        p = p * fk / y;
        w = w * fk / x;
        k -= 1;
        sum = sum + w * g;
        let r = T::lit(k as f64) / x;
        let tail = w * r / (T::one() - r);
        if tail <= tol * sum || tail < T::min_positive_value() {
            break;
        }
    }
    Ok(sum)
}

/// Large-`a` form: with `x = a + t`, the Rice density times `exp(-a x) I0(a x)`
/// scaling becomes `sqrt(x/a) phi(t) S(a x)`, `S` the Hankel series of the
/// scaled Bessel function. Integrated by composite Gauss-Legendre.
fn marcum_large_a<T: Real>(a: T, b: T) -> T {
    let span = (-T::lit(2.0) * T::min_positive_value().ln()).sqrt();
    let inv_sqrt_2pi = T::one() / (T::lit(2.0) * T::PI()).sqrt();
    let hankel = [
        1.0,
        1.0 / 8.0,
        9.0 / 128.0,
        225.0 / 3072.0,
        11025.0 / 98304.0,
    ]
    .map(T::lit);
    let f = |t: T| {
        let x = a + t;
        let z = (a * x).recip();
        let s = hankel
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * z + c);
        (x / a).sqrt() * (-t * t / T::lit(2.0)).exp() * inv_sqrt_2pi * s
    };
    let s0 = b - a;
    if s0 >= T::zero() {
        if s0 >= span {
            return T::zero();
        }
        integrate(&f, s0, span)
    } else {
        let lo = (-span).max(-a);
        if s0 <= lo {
            return T::one();
        }
        T::one() - integrate(&f, lo, s0)
    }
}

fn integrate<T: Real>(f: &impl Fn(T) -> T, lo: T, hi: T) -> T {
    let pieces = (hi - lo).ceil().to_usize().unwrap_or(1).max(1);
    gauss_legendre(f, lo, hi, pieces)
}

const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Composite 10-point Gauss-Legendre rule over `pieces` equal subintervals.
pub fn gauss_legendre<T: Real>(f: &impl Fn(T) -> T, lo: T, hi: T, pieces: usize) -> T {
    let n = T::lit(pieces.max(1) as f64);
    let h = (hi - lo) / n;
    let half = h / T::lit(2.0);
    let mut total = T::zero();
    for i in 0..pieces.max(1) {
        let mid = lo + h * (T::lit(i as f64) + T::lit(0.5));
        let mut s = T::zero();
        for (&x, &w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
            let dx = half * T::lit(x);
            s = s + T::lit(w) * (f(mid - dx) + f(mid + dx));
        }
        total = total + s * half;
    }
    total
}

/// `E[f(g)]` for `g ~ Exp(1)`, on breakpoints dense near zero so that
/// integrands varying on the noise scale are resolved.
pub fn exponential_expectation<T: Real>(f: &impl Fn(T) -> T) -> T {
    let breaks = [
        0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0,
        16.0, 32.0, 48.0,
    ];
    let g = |t: T| f(t) * (-t).exp();
    breaks
        .windows(2)
        .fold(T::zero(), |acc, w| {
            acc + gauss_legendre(&g, T::lit(w[0]), T::lit(w[1]), 2)
        })
}

/// `ln sum exp(v_i)`, tolerant of `-inf` entries.
pub fn log_sum_exp<T: Real>(v: &[T]) -> T {
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + v.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_basics() {
        assert_eq!(gaussian_q(0.0f64).unwrap(), 0.5);
        assert!((gaussian_q(1.281_551_5f64).unwrap() - 0.1).abs() < 1e-6);
        assert!(gaussian_q(f64::NAN).is_err());
        assert!(gaussian_q(f64::INFINITY).is_err());
    }

    #[test]
    fn approx_values() {
        let c = QApproxConstants::<f64>::default();
        assert!((gaussian_q_approx(0.0, &c).unwrap() - 0.314).abs() < 1e-15);
        let e = 0.168 * (-0.876f64).exp() + 0.144 * (-0.525f64).exp() + 0.002 * (-0.603f64).exp();
        assert!((gaussian_q_approx(1.0, &c).unwrap() - e).abs() < 1e-15);
        assert!(gaussian_q_approx(60.0, &c).unwrap() < 1e-300);
        assert!(gaussian_q_approx(-0.1, &c).is_err());
        assert!(QApproxConstants::new([0.1, 0.0, 0.1], [1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn marcum_edges() {
        assert_eq!(marcum_q1(3.0f64, 0.0).unwrap(), 1.0);
        assert!((marcum_q1(0.0f64, 1.5).unwrap() - (-1.125f64).exp()).abs() < 1e-15);
        assert!(marcum_q1(-1.0f64, 1.0).is_err());
        assert!(marcum_q1(1.0f64, -1.0).is_err());
        assert!(marcum_q1(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn marcum_branches_agree() {
        for &b in &[20.0, 35.0, 39.0, 40.0, 41.0, 45.0, 60.0] {
            let s = marcum_series(40.0f64, b).unwrap();
            let l = marcum_large_a(40.0f64, b);
            assert!((s - l).abs() < 1e-12, "b={b}: {s} vs {l}");
        }
    }

    #[test]
    fn marcum_f32() {
        let v = marcum_q1(1.0f32, 1.0).unwrap();
        assert!((v - 0.732_879_8).abs() < 1e-5, "{v}");
    }

    #[test]
    fn gamma_tail_basics() {
        assert_eq!(gamma_tail(1, 0.0f64, true).unwrap(), 1.0);
        assert!((gamma_tail(1, 2.5f64, true).unwrap() - (-2.5f64).exp()).abs() < 1e-15);
        assert!((gamma_tail(2, 1.0f64, true).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(gamma_tail(0, 1.0f64, true).is_err());
        assert!(gamma_tail(1, -1.0f64, true).is_err());
    }

    #[test]
    fn lse() {
        let v = log_sum_exp(&[f64::NEG_INFINITY, 0.0, 0.0]);
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp::<f64>(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn exp_expectation() {
        let v = exponential_expectation(&|g: f64| g * g);
        assert!((v - 2.0).abs() < 1e-9);
        let v = exponential_expectation(&|g: f64| (-g / 1e-4).exp());
        assert!((v - 1.0 / (1.0 + 1e4)).abs() < 1e-10, "{v}");
    }
}
