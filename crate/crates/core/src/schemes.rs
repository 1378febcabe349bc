//! DTRTF and LLCRTF frame construction on both bands, the helper's
//! full-duplex receive/decide path and latency-driven scheme selection.

use num_complex::Complex;
use rand::Rng;

use crate::channel::{complex_gaussian, Constellation, ConstellationKind, FadingDraw};
use crate::error::{domain, invalid, Result};
use crate::numerics::gamma_tail;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Dtrtf,
    Llcrtf,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Dtrtf => "dtrtf",
            Scheme::Llcrtf => "llcrtf",
        }
    }
}

/// Physical and protocol constants of one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams<T> {
    /// Energy-splitting factor, in (0, 1).
    pub alpha: T,
    /// Constellation order M.
    pub order: usize,
    /// Noise variance N.
    pub noise: T,
    pub e_a: T,
    pub e_h: T,
    /// Slots per half-frame.
    pub n: usize,
    /// Extra phase of the boosted symbol set.
    pub theta: T,
    /// Large-scale offset: helper links have variance `1 + partial`.
    pub partial: T,
    pub rho_th: T,
    pub sigma2_ah: T,
    pub n_h: u32,
    pub constellation: ConstellationKind,
}

impl<T: Real> SchemeParams<T> {
    /// Defaults: E_A = 0.5, E_H = 1, theta = pi/M, sigma2_AH = 4,
    /// rho_th = 1e-5, one helper antenna, PSK, no large-scale offset.
    pub fn new(alpha: T, order: usize, noise: T) -> Self {
        Self {
            alpha,
            order,
            noise,
            e_a: T::lit(0.5),
            e_h: T::one(),
            n: 1,
            theta: T::PI() / T::lit(order.max(1) as f64),
            partial: T::zero(),
            rho_th: T::lit(1e-5),
            sigma2_ah: T::lit(4.0),
            n_h: 1,
            constellation: ConstellationKind::Psk,
        }
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite();
        if !(ok(self.alpha) && self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(invalid("scheme.alpha", "alpha must lie in (0,1)"));
        }
        if !(ok(self.noise) && self.noise > T::zero()) {
            return Err(invalid("scheme.noise", "N must be > 0"));
        }
        if !(ok(self.e_h) && self.e_h > T::zero()) {
            return Err(invalid("scheme.e_h", "E_H must be > 0"));
        }
        if !(ok(self.e_a) && self.e_a >= self.e_h / T::lit(2.0)) {
            return Err(invalid("scheme.e_a", "feasibility requires E_A >= E_H/2"));
        }
        if self.n == 0 {
            return Err(invalid("scheme.n", "n must be >= 1"));
        }
        if !ok(self.theta) {
            return Err(invalid("scheme.theta", "theta must be finite"));
        }
        if !(ok(self.partial) && self.partial > -T::one()) {
            return Err(invalid("scheme.partial", "large-scale offset must be > -1"));
        }
        if !(ok(self.rho_th) && self.rho_th >= T::zero()) {
            return Err(invalid("scheme.rho_th", "rho_th must be >= 0"));
        }
        if !(ok(self.sigma2_ah) && self.sigma2_ah > T::zero()) {
            return Err(invalid("scheme.sigma2_ah", "sigma2_AH must be > 0"));
        }
        if self.n_h == 0 {
            return Err(invalid("scheme.n_h", "N_H must be >= 1"));
        }
        Constellation::new(self.constellation, self.order)
            .map_err(|_| invalid("scheme.m", "order not valid for the constellation kind"))?;
        Ok(())
    }

    pub fn alphabet(&self) -> Result<Constellation> {
        Constellation::new(self.constellation, self.order)
    }

    pub fn helper_variance(&self) -> T {
        T::one() + self.partial
    }
}

/// Delay and coherence parameters that drive scheme selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyModel {
    /// Maximum tolerable wait, in slots.
    pub m: u64,
    /// Raw full-duplex decode delay, in slots.
    pub n_fd: u64,
    /// Coherence block length.
    pub tau_h: u64,
    pub tau_p: u64,
    pub tau_d: u64,
}

impl LatencyModel {
    pub fn new(m: u64, n_fd: u64, tau_p: u64, tau_d: u64) -> Result<Self> {
        let lat = Self {
            m,
            n_fd,
            tau_h: tau_p + tau_d,
            tau_p,
            tau_d,
        };
        lat.validate()?;
        Ok(lat)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_fd == 0 {
            return Err(invalid("latency.n_fd", "must be > 0"));
        }
        if self.tau_p == 0 {
            return Err(invalid("latency.tau_p", "must be >= 1"));
        }
        if self.tau_d == 0 {
            return Err(invalid("latency.tau_d", "must be >= 1"));
        }
        if self.tau_h != self.tau_p + self.tau_d {
            return Err(invalid("latency.tau_h", "must equal tau_p + tau_d"));
        }
        Ok(())
    }
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            m: 40,
            n_fd: 25,
            tau_h: 10,
            tau_p: 2,
            tau_d: 8,
        }
    }
}

/// `(n_fr, n)`: frame-aligned FDR delay and data slots per half-frame.
pub fn effective_fdr_delay(lat: &LatencyModel) -> (u64, u64) {
    let blocks = lat.n_fd.div_ceil(lat.tau_h);
    ((blocks + 1) * lat.tau_h, blocks * lat.tau_d)
}

pub fn select_scheme(lat: &LatencyModel) -> Scheme {
    let (n_fr, _) = effective_fdr_delay(lat);
    if lat.m >= n_fr && lat.m != 0 {
        Scheme::Dtrtf
    } else {
        Scheme::Llcrtf
    }
}

/// Helper's energy-detection threshold and the resulting decision
/// probabilities; `p_ij` is the probability that bit `i` is decided as `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverProbs<T> {
    pub tau_opt: T,
    pub p00: T,
    pub p01: T,
    pub p10: T,
    pub p11: T,
}

impl<T: Real> CrossoverProbs<T> {
    pub fn perfect() -> Self {
        Self {
            tau_opt: T::zero(),
            p00: T::one(),
            p01: T::zero(),
            p10: T::zero(),
            p11: T::one(),
        }
    }

    pub fn prob(&self, from: bool, to: bool) -> T {
        match (from, to) {
            (false, false) => self.p00,
            (false, true) => self.p01,
            (true, false) => self.p10,
            (true, true) => self.p11,
        }
    }

    /// Crossover at an arbitrary threshold, from the two per-antenna scales.
    pub fn at_threshold(n_h: u32, sigma0: T, sigma1: T, tau: T) -> Result<Self> {
        let p01 = gamma_tail(n_h, tau / sigma0, true)?;
        let p10 = gamma_tail(n_h, tau / sigma1, false)?;
        Ok(Self {
            tau_opt: tau,
            p00: T::one() - p01,
            p01,
            p10,
            p11: T::one() - p10,
        })
    }
}

/// Per-antenna variances of the helper's statistic under bits 0 and 1.
pub fn helper_scales<T: Real>(p: &SchemeParams<T>) -> (T, T) {
    let s0 = p.alpha * p.rho_th + p.noise;
    let s1 = (T::one() - p.alpha) * p.e_h * p.sigma2_ah + s0;
    (s0, s1)
}

/// Likelihood-ratio threshold between the two gamma laws of the helper's
/// energy statistic, with the resulting crossover probabilities.
pub fn compute_crossover<T: Real>(p: &SchemeParams<T>) -> Result<CrossoverProbs<T>> {
    let (s0, s1) = helper_scales(p);
    if !(s1 > s0) || !s0.is_finite() || s0 <= T::zero() {
        return Err(domain(
            "(1-alpha) E_H sigma2_AH",
            s1 - s0,
            "signal energy at the helper must be > 0",
        ));
    }
    let nh = T::lit(p.n_h as f64);
    let tau = nh * s0 * s1 * (s1 / s0).ln() / (s1 - s0);
    CrossoverProbs::at_threshold(p.n_h, s0, s1, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotK<T> {
    pub received: Complex<T>,
    pub h_ab: FadingDraw<T>,
    pub h_hb: FadingDraw<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotNk<T> {
    pub received: Complex<T>,
    pub h_hb: FadingDraw<T>,
}

/// One slot pair `(k, n+k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSlotFrame<T> {
    /// Alice's bit `x_k`.
    pub x: bool,
    /// Set selector of slot n+k: the helper's decision of `x_k` under DTRTF,
    /// a fresh uniform bit under LLCRTF.
    pub selector: bool,
    pub b_k: usize,
    pub b_nk: usize,
    /// Transmit symbols on f_HB: Alice's OOK and the helper's symbol in slot k,
    /// the helper's symbol in slot n+k.
    pub tx_alice_k: Complex<T>,
    pub tx_helper_k: Complex<T>,
    pub tx_helper_nk: Complex<T>,
    pub r_k: Complex<T>,
    pub r_nk: Complex<T>,
    pub h_ab: FadingDraw<T>,
    pub h_hb_k: FadingDraw<T>,
    pub h_hb_nk: FadingDraw<T>,
    /// Dummy bit on f_AB and Dave's samples there (first half, second half),
    /// when requested.
    pub x_d: bool,
    pub fab: Option<[Complex<T>; 2]>,
}

impl<T: Real> TwoSlotFrame<T> {
    /// Transmit energy on f_HB in slots k and n+k.
    pub fn fhb_transmit_energy(&self) -> (T, T) {
        (
            self.tx_alice_k.norm_sqr() + self.tx_helper_k.norm_sqr(),
            self.tx_helper_nk.norm_sqr(),
        )
    }
}

/// Precomputed amplitudes and symbol sets for one `SchemeParams`.
#[derive(Debug, Clone)]
pub struct FrameModel<T> {
    pub params: SchemeParams<T>,
    /// Unit-average-energy helper symbols.
    pub points: Vec<Complex<T>>,
    /// Slot n+k symbols for selector 1 (`sqrt(E_H) y`) and selector 0
    /// (`sqrt((2-alpha)E_H) y e^{i theta}`).
    pub plain: Vec<Complex<T>>,
    pub boosted: Vec<Complex<T>>,
    amp_alice: T,
    amp_helper_k: T,
    amp_fab_alice_first: T,
    amp_fab_alice_second: T,
    amp_ah: T,
    helper_var: T,
    si_var: T,
}

impl<T: Real> FrameModel<T> {
    pub fn new(p: &SchemeParams<T>) -> Result<Self> {
        p.validate()?;
        let points = p.alphabet()?.points::<T>();
        let sq_eh = p.e_h.sqrt();
        let boost = Complex::from_polar(((T::lit(2.0) - p.alpha) * p.e_h).sqrt(), p.theta);
        let first = T::lit(2.0) * p.e_a - (T::one() - p.alpha) * p.e_h;
        if first < T::zero() {
            return Err(domain("2 E_A - (1-alpha) E_H", first, ">= 0"));
        }
        Ok(Self {
            params: *p,
            plain: points.iter().map(|&y| y * sq_eh).collect(),
            boosted: points.iter().map(|&y| y * boost).collect(),
            points,
            amp_alice: ((T::one() - p.alpha) * p.e_h).sqrt(),
            amp_helper_k: (p.alpha * p.e_h).sqrt(),
            amp_fab_alice_first: first.sqrt(),
            amp_fab_alice_second: (T::lit(2.0) * p.e_a).sqrt(),
            amp_ah: ((T::one() - p.alpha) * p.e_h).sqrt(),
            helper_var: p.helper_variance(),
            si_var: p.alpha * p.rho_th,
        })
    }

    fn check_index(&self, y: usize) -> Result<()> {
        if y >= self.points.len() {
            return Err(domain("symbol index", y as f64, "0 <= index < M"));
        }
        Ok(())
    }

    fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex<T> {
        complex_gaussian(self.params.noise, rng)
    }

    fn fade<R: Rng + ?Sized>(variance: T, rng: &mut R) -> FadingDraw<T> {
        FadingDraw {
            coefficient: complex_gaussian(variance, rng),
            variance,
        }
    }

    /// Bob's slot-k sample on f_HB.
    pub fn slot_k_fhb<R: Rng + ?Sized>(&self, x: bool, y: usize, rng: &mut R) -> SlotK<T> {
        let h_ab = Self::fade(T::one(), rng);
        let h_hb = Self::fade(self.helper_var, rng);
        let alice = if x { self.amp_alice } else { T::zero() };
        let received = h_ab.coefficient * alice
            + h_hb.coefficient * self.points[y] * self.amp_helper_k
            + self.noise(rng);
        SlotK {
            received,
            h_ab,
            h_hb,
        }
    }

    pub fn slot_nk_symbol(&self, selector: bool, y: usize) -> Complex<T> {
        if selector {
            self.plain[y]
        } else {
            self.boosted[y]
        }
    }

    /// Bob's slot-(n+k) sample; the helper transmits from the set chosen by
    /// `selector` and Alice is silent.
    pub fn slot_nk_fhb<R: Rng + ?Sized>(&self, selector: bool, y: usize, rng: &mut R) -> SlotNk<T> {
        let h_hb = Self::fade(self.helper_var, rng);
        let received = h_hb.coefficient * self.slot_nk_symbol(selector, y) + self.noise(rng);
        SlotNk { received, h_hb }
    }

    /// Helper's received vector in slot k, one entry per antenna.
    pub fn helper_receive<R: Rng + ?Sized>(&self, x: bool, rng: &mut R) -> Vec<Complex<T>> {
        (0..self.params.n_h)
            .map(|_| self.helper_antenna(x, rng))
            .collect()
    }

    fn helper_antenna<R: Rng + ?Sized>(&self, x: bool, rng: &mut R) -> Complex<T> {
        let h_ah = complex_gaussian(self.params.sigma2_ah, rng);
        let si = complex_gaussian(self.si_var, rng);
        let signal = if x { h_ah * self.amp_ah } else { Complex::new(T::zero(), T::zero()) };
        signal + si + self.noise(rng)
    }

    /// Helper's energy statistic `||r~||^2`.
    pub fn helper_energy<R: Rng + ?Sized>(&self, x: bool, rng: &mut R) -> T {
        (0..self.params.n_h).fold(T::zero(), |acc, _| acc + self.helper_antenna(x, rng).norm_sqr())
    }

    /// Dave's sample on f_AB. `x_d` keys both radios in the first half.
    pub fn fab_slot<R: Rng + ?Sized>(&self, x_d: bool, half: Half, rng: &mut R) -> Complex<T> {
        let h_ad = complex_gaussian(T::one(), rng);
        let w = self.noise(rng);
        match half {
            Half::First => {
                let h_hd = complex_gaussian(self.helper_var, rng);
                if x_d {
                    h_ad * self.amp_fab_alice_first + h_hd * self.amp_alice + w
                } else {
                    w
                }
            }
            Half::Second => {
                if x_d {
                    h_ad * self.amp_fab_alice_second + w
                } else {
                    w
                }
            }
        }
    }

    /// Dave's sample on f_AB before the countermeasure: Alice's own OOK.
    pub fn fab_pre<R: Rng + ?Sized>(&self, x: bool, rng: &mut R) -> Complex<T> {
        self.fab_slot(x, Half::Second, rng)
    }

    /// Dave's slot-k sample on f_HB together with `|h_HD|^2`. Alice's OOK is
    /// part of the sample.
    pub fn dave_fhb_slot_k<R: Rng + ?Sized>(&self, x: bool, y: usize, rng: &mut R) -> (Complex<T>, T) {
        let s = self.slot_k_fhb(x, y, rng);
        (s.received, s.h_hb.coefficient.norm_sqr())
    }

    pub fn dave_fhb_slot_nk<R: Rng + ?Sized>(
        &self,
        selector: bool,
        y: usize,
        rng: &mut R,
    ) -> (Complex<T>, T) {
        let s = self.slot_nk_fhb(selector, y, rng);
        (s.received, s.h_hb.coefficient.norm_sqr())
    }

    /// Dave's f_HB sample before the countermeasure: the helper's regular
    /// unit-energy symbol.
    pub fn dave_fhb_pre<R: Rng + ?Sized>(&self, y: usize, rng: &mut R) -> (Complex<T>, T) {
        self.dave_fhb_slot_nk(true, y, rng)
    }

    /// Draws a full slot pair. Under DTRTF the selector is the helper's
    /// energy decision with threshold `cp.tau_opt`, or `x` itself when `cp`
    /// has no crossover.
    pub fn frame<R: Rng + ?Sized>(
        &self,
        scheme: Scheme,
        cp: &CrossoverProbs<T>,
        with_fab: bool,
        rng: &mut R,
    ) -> TwoSlotFrame<T> {
        let m = self.points.len();
        let x: bool = rng.random();
        let b_k = rng.random_range(0..m);
        let b_nk = rng.random_range(0..m);
        let k = self.slot_k_fhb(x, b_k, rng);
        let selector = match scheme {
            // A perfect helper forwards the bit without drawing its statistic.
            Scheme::Dtrtf if cp.p01 == T::zero() && cp.p10 == T::zero() => x,
            Scheme::Dtrtf => self.helper_energy(x, rng) > cp.tau_opt,
            Scheme::Llcrtf => rng.random(),
        };
        let nk = self.slot_nk_fhb(selector, b_nk, rng);
        let x_d: bool = rng.random();
        let fab = with_fab.then(|| {
            [
                self.fab_slot(x_d, Half::First, rng),
                self.fab_slot(x_d, Half::Second, rng),
            ]
        });
        TwoSlotFrame {
            x,
            selector,
            b_k,
            b_nk,
            tx_alice_k: Complex::new(if x { self.amp_alice } else { T::zero() }, T::zero()),
            tx_helper_k: self.points[b_k] * self.amp_helper_k,
            tx_helper_nk: self.slot_nk_symbol(selector, b_nk),
            r_k: k.received,
            r_nk: nk.received,
            h_ab: k.h_ab,
            h_hb_k: k.h_hb,
            h_hb_nk: nk.h_hb,
            x_d,
            fab,
        }
    }
}

pub fn build_slot_k_fhb<T: Real, R: Rng + ?Sized>(
    x_k: bool,
    y_k: usize,
    p: &SchemeParams<T>,
    rng: &mut R,
) -> Result<SlotK<T>> {
    let fm = FrameModel::new(p)?;
    fm.check_index(y_k)?;
    Ok(fm.slot_k_fhb(x_k, y_k, rng))
}

pub fn helper_receive<T: Real, R: Rng + ?Sized>(
    x_k: bool,
    p: &SchemeParams<T>,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    Ok(FrameModel::new(p)?.helper_receive(x_k, rng))
}

pub fn build_slot_nk_fhb_dtrtf<T: Real, R: Rng + ?Sized>(
    x_bar: bool,
    y: usize,
    p: &SchemeParams<T>,
    rng: &mut R,
) -> Result<SlotNk<T>> {
    let fm = FrameModel::new(p)?;
    fm.check_index(y)?;
    Ok(fm.slot_nk_fhb(x_bar, y, rng))
}

/// Same signal shapes as DTRTF, keyed on a uniform bit `x_d`.
pub fn build_slot_nk_fhb_llcrtf<T: Real, R: Rng + ?Sized>(
    x_d: bool,
    y: usize,
    p: &SchemeParams<T>,
    rng: &mut R,
) -> Result<SlotNk<T>> {
    build_slot_nk_fhb_dtrtf(x_d, y, p, rng)
}

pub fn build_fab_slot<T: Real, R: Rng + ?Sized>(
    x_d: bool,
    half: Half,
    p: &SchemeParams<T>,
    rng: &mut R,
) -> Result<Complex<T>> {
    Ok(FrameModel::new(p)?.fab_slot(x_d, half, rng))
}
