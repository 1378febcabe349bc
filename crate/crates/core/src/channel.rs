//! Alphabets, Rayleigh fading, AWGN and seeded random streams.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, invalid, Result};
use crate::Real;

pub type ComplexSample<T> = Complex<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Psk,
    Qam,
    Ook,
}

/// Modulation alphabet. PSK points have unit energy, QAM points are scaled
/// to unit average energy and OOK is `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constellation {
    pub kind: ConstellationKind,
    pub order: usize,
}

impl Constellation {
    pub fn new(kind: ConstellationKind, order: usize) -> Result<Self> {
        match kind {
            ConstellationKind::Psk if order < 2 => Err(invalid("order", "PSK needs M >= 2")),
            ConstellationKind::Qam if order < 4 || !order.is_power_of_two() => {
                Err(invalid("order", "QAM needs M a power of two, M >= 4"))
            }
            ConstellationKind::Ook if order != 2 => Err(invalid("order", "OOK has order 2")),
            _ => Ok(Self { kind, order }),
        }
    }

    pub fn psk(order: usize) -> Result<Self> {
        Self::new(ConstellationKind::Psk, order)
    }

    pub fn qam(order: usize) -> Result<Self> {
        Self::new(ConstellationKind::Qam, order)
    }

    pub fn ook() -> Self {
        Self {
            kind: ConstellationKind::Ook,
            order: 2,
        }
    }

    /// In-phase and quadrature level counts of the rectangular QAM grid.
    fn qam_grid(&self) -> (usize, usize) {
        let bits = self.order.trailing_zeros();
        (1 << bits.div_ceil(2), 1 << (bits / 2))
    }

    pub fn point<T: Real>(&self, index: usize) -> Result<Complex<T>> {
        if index >= self.order {
            return Err(domain("index", index as f64, "0 <= index < M"));
        }
        Ok(self.point_unchecked(index))
    }

    fn point_unchecked<T: Real>(&self, index: usize) -> Complex<T> {
        match self.kind {
            ConstellationKind::Psk => {
                let phi = -T::lit(2.0) * T::PI() * T::lit(index as f64) / T::lit(self.order as f64);
                Complex::from_polar(T::one(), phi)
            }
            ConstellationKind::Qam => {
                let (mi, mq) = self.qam_grid();
                let level = |i: usize, m: usize| T::lit((2 * i) as f64 - (m - 1) as f64);
                let mean_energy = ((mi * mi - 1) + (mq * mq - 1)) as f64 / 3.0;
                let s = T::lit(mean_energy).sqrt().recip();
                Complex::new(level(index % mi, mi) * s, level(index / mi, mq) * s)
            }
            ConstellationKind::Ook => Complex::new(T::lit(index as f64), T::zero()),
        }
    }

    pub fn points<T: Real>(&self) -> Vec<Complex<T>> {
        (0..self.order).map(|i| self.point_unchecked(i)).collect()
    }

    /// Distinct symbol energies, ascending.
    pub fn energy_levels<T: Real>(&self) -> Vec<T> {
        let mut e: Vec<T> = self.points::<T>().iter().map(|p| p.norm_sqr()).collect();
        e.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
        let tol = T::lit(1e-9);
        e.dedup_by(|a, b| (*a - *b).abs() < tol);
        e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingDraw<T> {
    pub coefficient: Complex<T>,
    pub variance: T,
}

/// Keyed random stream: the same `(master_seed, experiment, index)` always
/// yields the same sequence, and distinct keys are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub experiment: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, experiment: u64, index: u64) -> Self {
        Self {
            master_seed,
            experiment,
            index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self.master_seed;
        let mut seed = [0u8; 32];
        let a = splitmix64(&mut state) ^ self.experiment.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        let mut s2 = a;
        let b = splitmix64(&mut s2) ^ self.index.wrapping_mul(0xA076_1D64_78BD_642F);
        let mut s3 = b;
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s3).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
/// Unchecked; used in the inner simulation loops.
#[inline]
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(variance: T, rng: &mut R) -> Complex<T> {
    let s = (variance / T::lit(2.0)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re) * s, T::lit(im) * s)
}

pub fn draw_rayleigh<T: Real, R: Rng + ?Sized>(variance: T, rng: &mut R) -> Result<FadingDraw<T>> {
    if !(variance.is_finite() && variance > T::zero()) {
        return Err(domain("variance", variance, "variance > 0"));
    }
    Ok(FadingDraw {
        coefficient: complex_gaussian(variance, rng),
        variance,
    })
}

/// `scale * point(index) * exp(i phase_offset)`.
pub fn modulate<T: Real>(
    c: &Constellation,
    index: usize,
    scale: T,
    phase_offset: T,
) -> Result<Complex<T>> {
    if scale.is_nan() || scale < T::zero() {
        return Err(domain("scale", scale, "scale >= 0"));
    }
    Ok(c.point::<T>(index)? * Complex::from_polar(scale, phase_offset))
}

pub fn add_awgn<T: Real, R: Rng + ?Sized>(
    s: Complex<T>,
    noise_variance: T,
    rng: &mut R,
) -> Result<Complex<T>> {
    if !(noise_variance.is_finite() && noise_variance > T::zero()) {
        return Err(domain("noise_variance", noise_variance, "N > 0"));
    }
    Ok(s + complex_gaussian(noise_variance, rng))
}

/// `N = 10^(-SNR/10)` for unit helper energy.
pub fn snr_db_to_noise<T: Real>(snr_db: T) -> T {
    T::lit(10.0).powf(-snr_db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psk_reference_points() {
        let c = Constellation::psk(4).unwrap();
        let p0: Complex<f64> = modulate(&c, 0, 1.0, 0.0).unwrap();
        assert!((p0 - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let p1: Complex<f64> = c.point(1).unwrap();
        assert!((p1 - Complex::new(0.0, -1.0)).norm() < 1e-15);
        let s = modulate(&c, 1, (2.0f64 - 0.99).sqrt(), std::f64::consts::FRAC_PI_4).unwrap();
        assert!((s.norm() - 1.01f64.sqrt()).abs() < 1e-15);
        assert!(c.point::<f64>(4).is_err());
    }

    #[test]
    fn unit_average_energy() {
        for c in [
            Constellation::psk(2).unwrap(),
            Constellation::psk(8).unwrap(),
            Constellation::qam(4).unwrap(),
            Constellation::qam(8).unwrap(),
            Constellation::qam(16).unwrap(),
            Constellation::qam(64).unwrap(),
        ] {
            let pts = c.points::<f64>();
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{c:?}: {e}");
        }
        assert_eq!(Constellation::qam(16).unwrap().energy_levels::<f64>().len(), 3);
        assert_eq!(Constellation::qam(8).unwrap().energy_levels::<f64>().len(), 2);
    }

    #[test]
    fn ook_off_symbol() {
        let s: Complex<f64> = modulate(&Constellation::ook(), 0, 3.0, 0.4).unwrap();
        assert_eq!(s.norm(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let mut rng = RngStream::new(1, 0, 0).rng();
        assert!(draw_rayleigh(0.0f64, &mut rng).is_err());
        assert!(add_awgn(Complex::new(0.0f64, 0.0), -1.0, &mut rng).is_err());
        assert!(Constellation::qam(12).is_err());
        assert!(Constellation::psk(1).is_err());
    }

    #[test]
    fn snr_mapping() {
        assert!((snr_db_to_noise(35.0f64) - 10f64.powf(-3.5)).abs() < 1e-18);
    }

    #[test]
    fn streams_deterministic_and_distinct() {
        let a: Vec<u64> = (0..8).map({
            let mut r = RngStream::new(7, 1, 2).rng();
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..8).map({
            let mut r = RngStream::new(7, 1, 2).rng();
            move |_| r.random()
        }).collect();
        let c: Vec<u64> = (0..8).map({
            let mut r = RngStream::new(7, 1, 3).rng();
            move |_| r.random()
        }).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
