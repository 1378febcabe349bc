//! Sharded Monte Carlo kernels. Trials are split into fixed-size shards, each
//! with its own keyed stream, so results do not depend on the worker count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tally::TrialTally;
use crate::adversary::{count_detections, EnergyDetector};
use crate::channel::RngStream;
use crate::decoders::Decoder;
use crate::error::Result;
use crate::schemes::{compute_crossover, CrossoverProbs, FrameModel, Half, Scheme, SchemeParams};

pub const SHARD: u64 = 4096;

/// Stream families; combined with the master seed and shard index.
pub mod streams {
    pub const ERRORS: u64 = 1;
    pub const DETECTION: u64 = 2;
    pub const KLD: u64 = 3;
    pub const CROSSOVER: u64 = 4;
    pub const CALIBRATION: u64 = 5;
    pub const ENERGY: u64 = 6;
}

/// Runs `f` inside a dedicated pool of `workers` threads (0 = all cores).
pub fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}

/// Applies `f(rng, count)` to every shard and returns the results in shard
/// order.
pub fn sharded<A: Send>(
    trials: u64,
    seed: u64,
    family: u64,
    f: impl Fn(&mut ChaCha8Rng, u64) -> A + Sync,
) -> Vec<A> {
    let shards = trials.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let n = SHARD.min(trials - s * SHARD);
            let mut rng = RngStream::new(seed, family, s).rng();
            f(&mut rng, n)
        })
        .collect()
}

fn merge(parts: Vec<TrialTally>) -> TrialTally {
    parts.into_iter().fold(TrialTally::default(), |mut a, b| {
        a += b;
        a
    })
}

/// Error tallies of one operating point. `staged` holds the SODTRTF decoder
/// under DTRTF and the per-slot decoders under LLCRTF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorTallies {
    pub staged: TrialTally,
    pub jmap: Option<TrialTally>,
}

pub fn simulate_errors(
    scheme: Scheme,
    p: &SchemeParams<f64>,
    trials: u64,
    seed: u64,
    with_jmap: bool,
) -> Result<ErrorTallies> {
    let fm = FrameModel::new(p)?;
    let dec = Decoder::new(p)?;
    let cp = match scheme {
        Scheme::Dtrtf => compute_crossover(p)?,
        Scheme::Llcrtf => CrossoverProbs::perfect(),
    };
    let with_jmap = with_jmap && scheme == Scheme::Dtrtf;
    let parts = sharded(trials, seed, streams::ERRORS, |rng, n| {
        let mut staged = TrialTally::default();
        let mut jmap = TrialTally::default();
        for _ in 0..n {
            let f = fm.frame(scheme, &cp, false, rng);
            let (hk, hnk) = (f.h_hb_k.coefficient, f.h_hb_nk.coefficient);
            let (a1, bk) = dec.slot1(f.r_k, hk);
            let (a2, bnk) = dec.slot2(f.r_nk, hnk);
            let a = match scheme {
                Scheme::Dtrtf => a2,
                Scheme::Llcrtf => a1,
            };
            staged.record(a != f.x, bk != f.b_k, bnk != f.b_nk);
            if with_jmap {
                let h = dec.jmap(f.r_k, f.r_nk, hk, hnk, &cp).hypothesis;
                jmap.record(h.a != f.x, h.b_k != f.b_k, h.b_nk != f.b_nk);
            }
        }
        (staged, jmap)
    });
    let (s, j): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    Ok(ErrorTallies {
        staged: merge(s),
        jmap: with_jmap.then(|| merge(j)),
    })
}

/// Detection tally (two slots per trial) at one operating point.
pub fn simulate_detection(
    scheme: Scheme,
    p: &SchemeParams<f64>,
    det: &EnergyDetector,
    trials: u64,
    seed: u64,
) -> Result<TrialTally> {
    let fm = FrameModel::new(p)?;
    let tau = match scheme {
        Scheme::Dtrtf => compute_crossover(p)?.tau_opt,
        Scheme::Llcrtf => 0.0,
    };
    let parts = sharded(trials, seed, streams::DETECTION, |rng, n| TrialTally {
        detections: count_detections(scheme, &fm, tau, det, n, rng),
        detection_slots: 2 * n,
        ..Default::default()
    });
    Ok(merge(parts))
}

/// Detection rates over a set of alpha nodes with common random numbers.
pub fn detection_curve(
    scheme: Scheme,
    base: &SchemeParams<f64>,
    det: &EnergyDetector,
    alphas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| {
            let t = simulate_detection(scheme, &base.with_alpha(a), det, trials, seed)?;
            Ok((a, t.detections as f64 / t.detection_slots as f64))
        })
        .collect()
}

/// Helper decision counts `(bit-0 decided 1, bit-1 decided 0)` over `trials`
/// draws of each bit at threshold `tau`.
pub fn simulate_crossover(p: &SchemeParams<f64>, tau: f64, trials: u64, seed: u64) -> Result<(u64, u64)> {
    let fm = FrameModel::new(p)?;
    let parts = sharded(trials, seed, streams::CROSSOVER, |rng, n| {
        let mut c = (0, 0);
        for _ in 0..n {
            c.0 += (fm.helper_energy(false, rng) > tau) as u64;
            c.1 += (fm.helper_energy(true, rng) <= tau) as u64;
        }
        c
    });
    Ok(parts.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1)))
}

/// Which received-energy population to draw at Dave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// f_AB before the countermeasure: Alice's OOK alone.
    FabPre,
    /// f_AB under the countermeasure, alternating first/second half slots.
    FabPost,
    /// f_HB before the countermeasure: the helper's regular symbols.
    FhbPre,
    /// f_HB under the countermeasure, alternating slot k / slot n+k.
    FhbPost(Scheme),
}

/// Raw received energies `|r|^2` at Dave.
pub fn energy_samples(
    pop: Population,
    p: &SchemeParams<f64>,
    count: u64,
    seed: u64,
    family: u64,
) -> Result<Vec<f64>> {
    use rand::Rng;
    let fm = FrameModel::new(p)?;
    let tau = match pop {
        Population::FhbPost(Scheme::Dtrtf) => compute_crossover(p)?.tau_opt,
        _ => 0.0,
    };
    let m = fm.points.len();
    let parts = sharded(count, seed, family, |rng, n| {
        let mut out = Vec::with_capacity(n as usize);
        let mut carry = None;
        for i in 0..n {
            let r = match pop {
                Population::FabPre => fm.fab_pre(rng.random(), rng),
                Population::FabPost => {
                    let half = if i % 2 == 0 { Half::First } else { Half::Second };
                    fm.fab_slot(rng.random(), half, rng)
                }
                Population::FhbPre => fm.dave_fhb_pre(rng.random_range(0..m), rng).0,
                Population::FhbPost(scheme) => {
                    if let Some(sel) = carry.take() {
                        fm.dave_fhb_slot_nk(sel, rng.random_range(0..m), rng).0
                    } else {
                        let x: bool = rng.random();
                        let r = fm.dave_fhb_slot_k(x, rng.random_range(0..m), rng).0;
                        carry = Some(match scheme {
                            Scheme::Dtrtf => fm.helper_energy(x, rng) > tau,
                            Scheme::Llcrtf => rng.random(),
                        });
                        r
                    }
                }
            };
            out.push(r.norm_sqr());
        }
        out
    });
    Ok(parts.concat())
}

/// Mean transmit energy per f_HB slot over `frames` DTRTF slot pairs.
pub fn mean_fhb_transmit_energy(p: &SchemeParams<f64>, frames: u64, seed: u64) -> Result<f64> {
    let fm = FrameModel::new(p)?;
    let cp = compute_crossover(p)?;
    let parts = sharded(frames, seed, streams::ENERGY, |rng, n| {
        let mut s = 0.0;
        for _ in 0..n {
            let f = fm.frame(Scheme::Dtrtf, &cp, false, rng);
            let (ek, enk) = f.fhb_transmit_energy();
            s += ek + enk;
        }
        s
    });
    Ok(parts.iter().sum::<f64>() / (2 * frames) as f64)
}
