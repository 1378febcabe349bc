//! Independent oracles shared by the integration tests and the acceptance
//! report. Nothing here calls into the crate's numerics.
#![allow(dead_code)]

use covert_relay::bounds::{pa5, pa6, pa_conditional, pb_conditional};
use covert_relay::numerics::{gamma_tail, marcum_q1};
use covert_relay::schemes::{compute_crossover, SchemeParams};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson on [a, b].
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// `e^{-z} I_0(z)` from `(1/pi) int_0^pi e^{z (cos t - 1)} dt`; the periodic
/// integrand makes the trapezoid rule spectrally accurate.
pub fn i0_scaled(z: f64) -> f64 {
    let n = 4000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * z).exp());
    for k in 1..n {
        s += (z * ((k as f64 * h).cos() - 1.0)).exp();
    }
    s * h / std::f64::consts::PI
}

/// `Q_1(a, b) = int_b^inf x exp(-(x^2 + a^2)/2) I_0(a x) dx`.
pub fn marcum_oracle(a: f64, b: f64) -> f64 {
    let f = |x: f64| x * (-(x - a).powi(2) / 2.0).exp() * i0_scaled(a * x);
    let hi = a.max(b) + 40.0;
    if b < a {
        // Split at the peak so Simpson sees both flanks.
        simpson(&f, b, a, 1e-13) + simpson(&f, a, hi, 1e-13)
    } else {
        simpson(&f, b, hi, 1e-13)
    }
}

pub fn poisson_upper(shape: u32, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut s = term;
    for k in 1..shape {
        term *= x / k as f64;
        s += term;
    }
    s
}

/// Worst absolute error of `marcum_q1` against quadrature on a 10 x 10
/// lattice that covers both evaluation branches.
pub fn marcum_lattice_error() -> f64 {
    let a_vals = [0.0f64, 0.3, 1.0, 2.5, 5.0, 12.0, 25.0, 39.0, 45.0, 60.0];
    let offsets = [-4.0, -2.0, -1.0, -0.4, 0.0, 0.3, 1.0, 2.0, 4.0, 6.0];
    let mut worst: f64 = 0.0;
    for &a in &a_vals {
        for &o in &offsets {
            let b = (a + o).max(0.05);
            let got = marcum_q1(a, b).unwrap();
            worst = worst.max((got - marcum_oracle(a, b)).abs());
        }
    }
    worst
}

/// Worst absolute error of both gamma tails against the Poisson sum on a
/// 10 x 10 lattice.
pub fn gamma_lattice_error() -> f64 {
    let xs = [1e-3, 0.05, 0.3, 0.9, 1.7, 3.0, 6.5, 12.0, 25.0, 50.0];
    let mut worst: f64 = 0.0;
    for shape in 1..=10u32 {
        for &x in &xs {
            let want = poisson_upper(shape, x);
            let up = gamma_tail(shape, x, true).unwrap();
            let lo = gamma_tail(shape, x, false).unwrap();
            worst = worst.max((up - want).abs()).max((lo - (1.0 - want)).abs());
        }
    }
    worst
}

pub fn cn(var: f64, rng: &mut ChaCha8Rng) -> C {
    let s = (var / 2.0).sqrt();
    C::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Fraction of draws `r ~ CN(m0, v0)` for which `CN(m1, v1)` has the larger
/// likelihood.
pub fn pairwise(m0: C, v0: f64, m1: C, v1: f64, trials: u64, rng: &mut ChaCha8Rng) -> f64 {
    let ll = |r: C, m: C, v: f64| -v.ln() - (r - m).norm_sqr() / v;
    let mut hits = 0u64;
    for _ in 0..trials {
        let r = m0 + cn(v0, rng);
        hits += (ll(r, m1, v1) > ll(r, m0, v0)) as u64;
    }
    hits as f64 / trials as f64
}

pub fn within_3sd(label: &str, closed: f64, mc: f64, n: u64) -> Result<(), String> {
    let sd = (closed * (1.0 - closed) / n as f64).sqrt().max(1.0 / n as f64);
    if (closed - mc).abs() <= 3.0 * sd {
        Ok(())
    } else {
        Err(format!(
            "{label}: closed {closed} vs mc {mc} ({:.2} sd)",
            (closed - mc).abs() / sd
        ))
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Slot-k Alice terms: each `P_Ai` is a pairwise likelihood comparison
/// between adjacent QPSK points under the OOK-on and OOK-off variances.
pub fn check_slot_k_terms(seed: u64, draws: usize, trials: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let alpha = uniform(&mut rng, 0.3, 0.95);
        let noise = uniform(&mut rng, 0.02, 0.5);
        let gain = uniform(&mut rng, 0.2, 2.0);
        let n1 = noise + 1.0 - alpha;
        let amp = alpha.sqrt() * gain.sqrt();
        let s0 = C::new(amp, 0.0);
        let s1 = C::new(0.0, -amp);
        let pa = pa_conditional(alpha, noise, gain).unwrap();
        let mc = [
            pairwise(s0, n1, s1, noise, trials, &mut rng),
            pairwise(s0, n1, s1, n1, trials, &mut rng),
            pairwise(s0, noise, s1, noise, trials, &mut rng),
            pairwise(s0, noise, s1, n1, trials, &mut rng),
        ];
        for i in 0..4 {
            let label = format!("P_A{} at a={alpha:.3} N={noise:.3} g={gain:.3}", i + 1);
            within_3sd(&label, pa[i], mc[i], trials)?;
        }
    }
    Ok(())
}

/// Slot-(n+k) terms: nearest inter-set pairs both ways and same-set
/// neighbours.
pub fn check_slot_nk_terms(seed: u64, draws: usize, trials: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..draws {
        let alpha = uniform(&mut rng, 0.3, 0.99);
        let noise = uniform(&mut rng, 0.01, 0.3);
        let h = uniform(&mut rng, 0.3, 1.5);
        let m = [4usize, 8, 16][i % 3];
        let pi_m = std::f64::consts::PI / m as f64;
        let unit = C::new(h, 0.0);
        let boosted = C::from_polar(h * (2.0 - alpha).sqrt(), -pi_m);
        let neighbour = C::from_polar(h, -2.0 * pi_m);
        let pb = pb_conditional(alpha, noise, m, h).unwrap();
        let mc = [
            pairwise(unit, noise, boosted, noise, trials, &mut rng),
            pairwise(unit, noise, neighbour, noise, trials, &mut rng),
            pairwise(boosted, noise, unit, noise, trials, &mut rng),
        ];
        for j in 0..3 {
            let label = format!("P_B{} at a={alpha:.3} N={noise:.3} M={m}", j + 1);
            within_3sd(&label, pb[j], mc[j], trials)?;
        }
    }
    Ok(())
}

/// Noncoherent OOK with the ML energy threshold.
pub fn check_ook_terms(seed: u64, draws: usize, trials: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let alpha = uniform(&mut rng, 0.5, 0.999);
        let noise = uniform(&mut rng, 0.001, 0.2);
        let n1 = noise + 1.0 - alpha;
        let tau = noise * n1 * (n1 / noise).ln() / (n1 - noise);
        let (mut e01, mut e10) = (0u64, 0u64);
        for _ in 0..trials {
            e01 += (cn(noise, &mut rng).norm_sqr() > tau) as u64;
            e10 += (cn(n1, &mut rng).norm_sqr() <= tau) as u64;
        }
        within_3sd("P_A6", pa6(alpha, noise), e01 as f64 / trials as f64, trials)?;
        within_3sd("P_A5", pa5(alpha, noise), e10 as f64 / trials as f64, trials)?;
    }
    Ok(())
}

/// Helper energy detection built from raw per-antenna draws.
pub fn check_crossover(seed: u64, draws: usize, trials: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..draws {
        let alpha = uniform(&mut rng, 0.5, 0.999);
        let noise = uniform(&mut rng, 0.001, 0.1);
        let mut p = SchemeParams::new(alpha, 4, noise);
        p.n_h = 1 + (i % 3) as u32;
        p.sigma2_ah = uniform(&mut rng, 1.0, 6.0);
        p.rho_th = [0.0, 1e-5, 1e-3][i % 3];
        let cp = compute_crossover(&p).unwrap();
        let energy = |bit: bool, rng: &mut ChaCha8Rng| -> f64 {
            (0..p.n_h)
                .map(|_| {
                    let sig = if bit {
                        cn(p.sigma2_ah, rng) * ((1.0 - alpha) * p.e_h).sqrt()
                    } else {
                        C::new(0.0, 0.0)
                    };
                    (sig + cn(alpha * p.rho_th, rng) + cn(noise, rng)).norm_sqr()
                })
                .sum()
        };
        let (mut n01, mut n10) = (0u64, 0u64);
        for _ in 0..trials {
            n01 += (energy(false, &mut rng) > cp.tau_opt) as u64;
            n10 += (energy(true, &mut rng) <= cp.tau_opt) as u64;
        }
        within_3sd("P01", cp.p01, n01 as f64 / trials as f64, trials)?;
        within_3sd("P10", cp.p10, n10 as f64 / trials as f64, trials)?;
    }
    Ok(())
}
