//! Bob's decoders: the joint two-slot MAP decoder, the two-stage SODTRTF
//! decoder and the per-slot LLCRTF decoders.
//!
//! Everything is computed in the log domain; the constant `-ln(pi)` of the
//! complex Gaussian density is dropped. Ties go to the lowest hypothesis
//! index.

use num_complex::Complex;

use crate::channel::FadingDraw;
use crate::error::Result;
use crate::schemes::{CrossoverProbs, SchemeParams};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodeHypothesis {
    pub a: bool,
    pub b_k: usize,
    pub b_nk: usize,
}

impl DecodeHypothesis {
    /// Position in the `(a, b_k, b_nk)` lexicographic order.
    pub fn index(&self, m: usize) -> usize {
        (self.a as usize) * m * m + self.b_k * m + self.b_nk
    }

    pub fn from_index(i: usize, m: usize) -> Self {
        Self {
            a: i / (m * m) == 1,
            b_k: (i / m) % m,
            b_nk: i % m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<T> {
    pub hypothesis: DecodeHypothesis,
    pub score: T,
}

/// First index attaining the maximum.
pub fn argmax_first<T: Real>(v: &[T]) -> (usize, T) {
    let mut best = (0, T::neg_infinity());
    for (i, &s) in v.iter().enumerate() {
        if s > best.1 {
            best = (i, s);
        }
    }
    best
}

/// Decoder tables for one operating point.
#[derive(Debug, Clone)]
pub struct Decoder<T> {
    m: usize,
    /// `sqrt(alpha E_H) y_b`, the helper's slot-k contribution before fading.
    slot1: Vec<Complex<T>>,
    /// Slot n+k sets: index `a*M + b`, `a = 0` is the boosted rotated set.
    slot2: Vec<Complex<T>>,
    var: [T; 2],
    ln_var: [T; 2],
    ln_n: T,
}

impl<T: Real> Decoder<T> {
    pub fn new(p: &SchemeParams<T>) -> Result<Self> {
        p.validate()?;
        let points = p.alphabet()?.points::<T>();
        let amp = (p.alpha * p.e_h).sqrt();
        let boost = Complex::from_polar(((T::lit(2.0) - p.alpha) * p.e_h).sqrt(), p.theta);
        let sq_eh = p.e_h.sqrt();
        let slot2 = points
            .iter()
            .map(|&y| y * boost)
            .chain(points.iter().map(|&y| y * sq_eh))
            .collect();
        let v0 = p.noise;
        let v1 = p.noise + (T::one() - p.alpha) * p.e_h;
        Ok(Self {
            m: points.len(),
            slot1: points.iter().map(|&y| y * amp).collect(),
            slot2,
            var: [v0, v1],
            ln_var: [v0.ln(), v1.ln()],
            ln_n: p.noise.ln(),
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    #[inline]
    fn f1(&self, r: Complex<T>, h: Complex<T>, a: usize, b: usize) -> T {
        -self.ln_var[a] - (r - h * self.slot1[b]).norm_sqr() / self.var[a]
    }

    #[inline]
    fn f2(&self, r: Complex<T>, h: Complex<T>, j: usize) -> T {
        -self.ln_n - (r - h * self.slot2[j]).norm_sqr() / self.var[0]
    }

    /// Slot-k log-likelihoods, index `a*M + b`.
    pub fn slot1_scores(&self, r: Complex<T>, h: Complex<T>) -> Vec<T> {
        (0..2)
            .flat_map(|a| (0..self.m).map(move |b| (a, b)))
            .map(|(a, b)| self.f1(r, h, a, b))
            .collect()
    }

    /// Slot n+k log-likelihoods, index `a*M + b`, `a = 0` the boosted set.
    pub fn slot2_scores(&self, r: Complex<T>, h: Complex<T>) -> Vec<T> {
        (0..2 * self.m).map(|j| self.f2(r, h, j)).collect()
    }

    fn best_b1(&self, r: Complex<T>, h: Complex<T>, a: usize) -> (usize, T) {
        let mut best = (0, T::neg_infinity());
        for b in 0..self.m {
            let s = self.f1(r, h, a, b);
            if s > best.1 {
                best = (b, s);
            }
        }
        best
    }

    /// Maximizes the slot-k likelihood over `(a, b_k)`.
    pub fn slot1(&self, r: Complex<T>, h: Complex<T>) -> (bool, usize) {
        let (b0, s0) = self.best_b1(r, h, 0);
        let (b1, s1) = self.best_b1(r, h, 1);
        if s1 > s0 {
            (true, b1)
        } else {
            (false, b0)
        }
    }

    /// Maximizes the slot-(n+k) likelihood over the `2M` points.
    pub fn slot2(&self, r: Complex<T>, h: Complex<T>) -> (bool, usize) {
        let mut best = (0, T::neg_infinity());
        for j in 0..2 * self.m {
            let s = self.f2(r, h, j);
            if s > best.1 {
                best = (j, s);
            }
        }
        (best.0 >= self.m, best.0 % self.m)
    }

    /// `ln sum_{xbar} P_{a,xbar} f2(r | xbar, b)`.
    #[inline]
    fn mixture(&self, r: Complex<T>, h: Complex<T>, lp: [T; 2], b: usize) -> T {
        let u = lp[0] + self.f2(r, h, b);
        let v = lp[1] + self.f2(r, h, self.m + b);
        let hi = u.max(v);
        if hi == T::neg_infinity() {
            return hi;
        }
        hi + ((u - hi).exp() + (v - hi).exp()).ln()
    }

    fn log_crossover(cp: &CrossoverProbs<T>, a: bool) -> [T; 2] {
        [cp.prob(a, false).ln(), cp.prob(a, true).ln()]
    }

    /// Joint MAP over all `2 M^2` hypotheses. The metric factorizes into a
    /// slot-k and a slot-(n+k) part for fixed `a`, so each is maximized
    /// separately; the lowest-index tie rule carries over.
    pub fn jmap(
        &self,
        r_k: Complex<T>,
        r_nk: Complex<T>,
        h_k: Complex<T>,
        h_nk: Complex<T>,
        cp: &CrossoverProbs<T>,
    ) -> DecodeResult<T> {
        let mut best: Option<DecodeResult<T>> = None;
        for a in [false, true] {
            let (b_k, s1) = self.best_b1(r_k, h_k, a as usize);
            let lp = Self::log_crossover(cp, a);
            let mut b2 = (0, T::neg_infinity());
            for b in 0..self.m {
                let s = self.mixture(r_nk, h_nk, lp, b);
                if s > b2.1 {
                    b2 = (b, s);
                }
            }
            let score = s1 + b2.1;
            if best.as_ref().is_none_or(|r| score > r.score) {
                best = Some(DecodeResult {
                    hypothesis: DecodeHypothesis { a, b_k, b_nk: b2.0 },
                    score,
                });
            }
        }
        best.expect("two candidates")
    }

    /// Every JMAP hypothesis score, in `DecodeHypothesis::index` order.
    pub fn jmap_scores(
        &self,
        r_k: Complex<T>,
        r_nk: Complex<T>,
        h_k: Complex<T>,
        h_nk: Complex<T>,
        cp: &CrossoverProbs<T>,
    ) -> Vec<T> {
        let m = self.m;
        (0..2 * m * m)
            .map(|i| {
                let hyp = DecodeHypothesis::from_index(i, m);
                let lp = Self::log_crossover(cp, hyp.a);
                self.f1(r_k, h_k, hyp.a as usize, hyp.b_k) + self.mixture(r_nk, h_nk, lp, hyp.b_nk)
            })
            .collect()
    }
}

pub fn jmap_decode<T: Real>(
    r_k: Complex<T>,
    r_nk: Complex<T>,
    h_k: &FadingDraw<T>,
    h_nk: &FadingDraw<T>,
    cp: &CrossoverProbs<T>,
    p: &SchemeParams<T>,
) -> Result<DecodeResult<T>> {
    Ok(Decoder::new(p)?.jmap(r_k, r_nk, h_k.coefficient, h_nk.coefficient, cp))
}

/// Returns `(a_hat, b_k_hat)`; the SODTRTF decoder ignores `a_hat`.
pub fn sodtrtf_decode_slot1<T: Real>(
    r_k: Complex<T>,
    h_k: &FadingDraw<T>,
    p: &SchemeParams<T>,
) -> Result<(bool, usize)> {
    Ok(Decoder::new(p)?.slot1(r_k, h_k.coefficient))
}

pub fn sodtrtf_decode_slot2<T: Real>(
    r_nk: Complex<T>,
    h_nk: &FadingDraw<T>,
    p: &SchemeParams<T>,
) -> Result<(bool, usize)> {
    Ok(Decoder::new(p)?.slot2(r_nk, h_nk.coefficient))
}

pub fn llcrtf_decode_slot_k<T: Real>(
    r_k: Complex<T>,
    h_k: &FadingDraw<T>,
    p: &SchemeParams<T>,
) -> Result<(bool, usize)> {
    sodtrtf_decode_slot1(r_k, h_k, p)
}

pub fn llcrtf_decode_slot_nk<T: Real>(
    r_nk: Complex<T>,
    h_nk: &FadingDraw<T>,
    p: &SchemeParams<T>,
) -> Result<usize> {
    Ok(sodtrtf_decode_slot2(r_nk, h_nk, p)?.1)
}
