//! Experiment runners. Each returns a plot-ready table; writing it out is left
//! to the caller.

use super::output::{f, Table};
use super::sim::{
    detection_curve, energy_samples, simulate_crossover, simulate_detection, simulate_errors,
    streams, Population,
};
use super::tally::{estimate_rate, ErrorKind, TrialTally};
use crate::adversary::{calibrate_delta, knn_kld, Band, EnergyDetector, EnergySampleSet, SampleLabel};
use crate::bounds::{monotone_split, scheme_bound};
use crate::channel::{snr_db_to_noise, Constellation, ConstellationKind, RngStream};
use crate::config::{kind_name, ExperimentConfig, ExperimentId};
use crate::error::{invalid, Error, Result};
use crate::optimizer::{detector_nodes, grid_minimize, intersection_solve, DetectorCurve};
use crate::schemes::{compute_crossover, CrossoverProbs, Scheme, SchemeParams};

pub fn run(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.experiment {
        ExperimentId::ErrorVsAlpha => run_error_vs_alpha(cfg),
        ExperimentId::SumVsSnr => run_sum_vs_snr(cfg),
        ExperimentId::Table2 => run_table2(cfg),
        ExperimentId::Roc => run_roc(cfg),
        ExperimentId::Kld => run_kld(cfg),
        ExperimentId::Robustness => run_robustness(cfg),
        ExperimentId::Crossover => run_crossover(cfg),
        ExperimentId::BoundsEval => run_bounds_eval(cfg),
    }
}

fn crossover_for(scheme: Scheme, p: &SchemeParams<f64>) -> Result<CrossoverProbs<f64>> {
    match scheme {
        Scheme::Dtrtf => compute_crossover(p),
        Scheme::Llcrtf => Ok(CrossoverProbs::perfect()),
    }
}

fn at_snr(p: &SchemeParams<f64>, snr_db: f64) -> SchemeParams<f64> {
    SchemeParams {
        noise: snr_db_to_noise(snr_db),
        ..*p
    }
}

/// Band half-width for `p`: calibrated when a false-alarm target is set,
/// the configured value otherwise.
pub fn resolve_delta(cfg: &ExperimentConfig, p: &SchemeParams<f64>, target: Option<f64>) -> Result<f64> {
    match target {
        Some(t) => {
            let mut rng = RngStream::new(cfg.seed, streams::CALIBRATION, 0).rng();
            calibrate_delta(t, p.noise, &p.alphabet()?, cfg.detector_trials, &mut rng)
        }
        None => Ok(cfg.detector.delta),
    }
}

fn joint(t: &TrialTally) -> f64 {
    t.joint_errors as f64 / t.trials as f64
}

/// Error and detection rates at one candidate alpha.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPoint {
    pub alpha: f64,
    pub staged: f64,
    pub jmap: Option<f64>,
    pub detection: f64,
}

/// Monte Carlo error and detection over `cfg.search_alphas`, with common
/// random numbers across candidates.
pub fn search_points(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    base: &SchemeParams<f64>,
    det: &EnergyDetector,
    with_jmap: bool,
) -> Result<Vec<SearchPoint>> {
    cfg.search_alphas
        .iter()
        .map(|&a| {
            let p = base.with_alpha(a);
            let e = simulate_errors(scheme, &p, cfg.trials, cfg.seed, with_jmap)?;
            let d = simulate_detection(scheme, &p, det, cfg.detector_trials, cfg.seed)?;
            Ok(SearchPoint {
                alpha: a,
                staged: joint(&e.staged),
                jmap: e.jmap.as_ref().map(joint),
                detection: d.detections as f64 / d.detection_slots as f64,
            })
        })
        .collect()
}

/// `(alpha, sum, error, detection)` minimizing `error + detection`; ties go
/// to the larger alpha.
pub fn minimize_sum(points: &[SearchPoint], error: impl Fn(&SearchPoint) -> f64) -> (f64, f64, f64, f64) {
    let mut best = (f64::NAN, f64::INFINITY, f64::NAN, f64::NAN);
    for p in points {
        let e = error(p);
        let s = e + p.detection;
        if s <= best.1 {
            best = (p.alpha, s, e, p.detection);
        }
    }
    best
}

pub fn run_error_vs_alpha(cfg: &ExperimentConfig) -> Result<Table> {
    if cfg.scheme != Scheme::Dtrtf {
        return Err(invalid("scheme.kind", "error-vs-alpha needs DTRTF"));
    }
    let mut t = Table::new(vec![
        "alpha",
        "pe_jmap",
        "pe_sodtrtf",
        "bound_total",
        "ci_jmap",
        "ci_sodtrtf",
        "undersampled",
        "alice_jmap",
        "helper_k_jmap",
        "helper_nk_jmap",
        "alice_sodtrtf",
        "helper_k_sodtrtf",
        "helper_nk_sodtrtf",
        "delta",
        "seed",
        "trials",
    ]);
    for &a in &cfg.sweep.grid {
        let p = cfg.params.with_alpha(a);
        let bound = scheme_bound(Scheme::Dtrtf, &p, &compute_crossover(&p)?, cfg.extrapolate)?.total;
        let e = simulate_errors(Scheme::Dtrtf, &p, cfg.trials, cfg.seed, true)?;
        let jm = e.jmap.expect("jmap tally requested");
        let rj = estimate_rate(&jm, ErrorKind::Joint)?;
        let rs = estimate_rate(&e.staged, ErrorKind::Joint)?;
        let under = [rj, rs]
            .iter()
            .any(|r| !(r.half_width <= 0.2 * r.estimate));
        let rate = |t: &TrialTally, k| estimate_rate(t, k).map(|r| f(r.estimate));
        t.push(vec![
            f(a),
            f(rj.estimate),
            f(rs.estimate),
            f(bound),
            f(rj.half_width),
            f(rs.half_width),
            under.to_string(),
            rate(&jm, ErrorKind::Alice)?,
            rate(&jm, ErrorKind::HelperK)?,
            rate(&jm, ErrorKind::HelperNk)?,
            rate(&e.staged, ErrorKind::Alice)?,
            rate(&e.staged, ErrorKind::HelperK)?,
            rate(&e.staged, ErrorKind::HelperNk)?,
            f(cfg.detector.delta),
            cfg.seed.to_string(),
            cfg.trials.to_string(),
        ]);
    }
    Ok(t)
}

pub fn run_sum_vs_snr(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "snr_db", "scheme", "sum", "alpha", "error", "detection", "delta", "seed", "trials",
    ]);
    for &snr in &cfg.sweep.grid {
        let p = at_snr(&cfg.params, snr);
        let delta = resolve_delta(cfg, &p, cfg.detector.target_pfa)?;
        let det = EnergyDetector::new(delta, &p.alphabet()?);
        let dt = search_points(cfg, Scheme::Dtrtf, &p, &det, true)?;
        let ll = search_points(cfg, Scheme::Llcrtf, &p, &det, false)?;
        let variants: [(&str, &[SearchPoint], fn(&SearchPoint) -> f64); 3] = [
            ("dtrtf-jmap", &dt, |s| s.jmap.unwrap_or(f64::NAN)),
            ("dtrtf-sodtrtf", &dt, |s| s.staged),
            ("llcrtf", &ll, |s| s.staged),
        ];
        for (name, pts, err) in variants {
            let (a, s, e, d) = minimize_sum(pts, err);
            t.push(vec![
                f(snr),
                name.into(),
                f(s),
                f(a),
                f(e),
                f(d),
                f(delta),
                cfg.seed.to_string(),
                cfg.trials.to_string(),
            ]);
        }
    }
    Ok(t)
}

/// The four optimized alphas of one (SNR, false-alarm target) row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table2Row {
    pub snr_db: f64,
    pub pfa: f64,
    pub delta: f64,
    pub dtrtf_min: f64,
    pub dtrtf_in: f64,
    pub llcrtf_min: f64,
    pub llcrtf_in: f64,
    /// Minimizers with the detector curve restricted to step-0.01 nodes.
    pub dtrtf_min_coarse: f64,
    pub llcrtf_min_coarse: f64,
}

/// Solves both problems for both schemes at one row: analytic error bound
/// plus a Monte Carlo detector curve.
pub fn table2_row(cfg: &ExperimentConfig, snr_db: f64, pfa: f64) -> Result<Table2Row> {
    let p = at_snr(&cfg.params, snr_db);
    let delta = resolve_delta(cfg, &p, Some(pfa))?;
    let det = EnergyDetector::new(delta, &p.alphabet()?);
    let nodes = detector_nodes();
    let mut out = [0.0; 6];
    for (i, scheme) in [Scheme::Dtrtf, Scheme::Llcrtf].into_iter().enumerate() {
        let curve = DetectorCurve::new(detection_curve(
            scheme,
            &p,
            &det,
            &nodes,
            cfg.detector_trials,
            cfg.seed,
        )?)?;
        let coarse = curve.coarse();
        let parts = |a: f64, c: &DetectorCurve| -> (f64, f64) {
            let q = p.with_alpha(a);
            crossover_for(scheme, &q)
                .and_then(|cp| monotone_split(scheme, a, q.noise, q.order, &cp, c.eval(a)))
                .unwrap_or((f64::NAN, f64::NAN))
        };
        let total = |a: f64, c: &DetectorCurve| -> f64 {
            let q = p.with_alpha(a);
            crossover_for(scheme, &q)
                .and_then(|cp| scheme_bound(scheme, &q, &cp, cfg.extrapolate))
                .map(|b| b.total + c.eval(a))
                .unwrap_or(f64::NAN)
        };
        let min = grid_minimize(|a| total(a, &curve), cfg.alpha_step)?;
        let inter = intersection_solve(|a| parts(a, &curve).0, |a| parts(a, &curve).1, 1e-6)?;
        let min_c = grid_minimize(|a| total(a, &coarse), cfg.alpha_step)?;
        out[2 * i] = min.alpha;
        out[2 * i + 1] = inter.alpha;
        out[4 + i] = min_c.alpha;
    }
    Ok(Table2Row {
        snr_db,
        pfa,
        delta,
        dtrtf_min: out[0],
        dtrtf_in: out[1],
        llcrtf_min: out[2],
        llcrtf_in: out[3],
        dtrtf_min_coarse: out[4],
        llcrtf_min_coarse: out[5],
    })
}

/// Rounds to the reporting precision of the alpha grid.
fn grid_round(a: f64, step: f64) -> f64 {
    let digits = (-step.log10()).ceil().max(0.0) as i32 + 2;
    let s = 10f64.powi(digits);
    (a * s).round() / s
}

pub fn run_table2(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "snr_db",
        "pfa",
        "delta",
        "alpha_dt_min",
        "alpha_dt_in",
        "alpha_ll_min",
        "alpha_ll_in",
        "alpha_dt_min_coarse",
        "alpha_ll_min_coarse",
        "seed",
        "trials",
    ]);
    for (&snr, &pfa) in cfg.sweep.grid.iter().zip(&cfg.pfa_list) {
        let r = table2_row(cfg, snr, pfa)?;
        let g = |a| f(grid_round(a, cfg.alpha_step));
        t.push(vec![
            f(snr),
            f(pfa),
            f(r.delta),
            g(r.dtrtf_min),
            g(r.dtrtf_in),
            g(r.llcrtf_min),
            g(r.llcrtf_in),
            g(r.dtrtf_min_coarse),
            g(r.llcrtf_min_coarse),
            cfg.seed.to_string(),
            cfg.detector_trials.to_string(),
        ]);
    }
    Ok(t)
}

/// Detection probability against the calibrated false-alarm rate, with alpha
/// chosen per operating point by minimizing Monte Carlo error plus
/// detection. Anchored at (0,0) and (1,1).
pub fn run_roc(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "pfa", "pd", "ci", "alpha", "delta", "seed", "trials",
    ]);
    let p = cfg.params;
    let errors: Vec<(f64, f64)> = cfg
        .search_alphas
        .iter()
        .map(|&a| {
            let e = simulate_errors(cfg.scheme, &p.with_alpha(a), cfg.trials, cfg.seed, false)?;
            Ok((a, joint(&e.staged)))
        })
        .collect::<Result<_>>()?;
    let anchor = |t: &mut Table, x: &str| {
        t.push(vec![
            x.into(),
            x.into(),
            "0".into(),
            "nan".into(),
            "nan".into(),
            cfg.seed.to_string(),
            "0".into(),
        ])
    };
    anchor(&mut t, "0");
    let mut grid = cfg.sweep.grid.clone();
    grid.sort_by(f64::total_cmp);
    for pfa in grid {
        let delta = resolve_delta(cfg, &p, Some(pfa))?;
        let det = EnergyDetector::new(delta, &p.alphabet()?);
        let mut best = (f64::NAN, f64::INFINITY, 0.0, 0.0);
        for &(a, e) in &errors {
            let d = simulate_detection(cfg.scheme, &p.with_alpha(a), &det, cfg.detector_trials, cfg.seed)?;
            let r = estimate_rate(&d, ErrorKind::Detection)?;
            if e + r.estimate <= best.1 {
                best = (a, e + r.estimate, r.estimate, r.half_width);
            }
        }
        t.push(vec![
            f(pfa),
            f(best.2),
            f(best.3),
            f(best.0),
            f(delta),
            cfg.seed.to_string(),
            cfg.detector_trials.to_string(),
        ]);
    }
    anchor(&mut t, "1");
    Ok(t)
}

/// Mean, mean magnitude and sample deviation of replicate KLD estimates
/// between two populations.
fn kld_replicates(
    cfg: &ExperimentConfig,
    p: &SchemeParams<f64>,
    before: Population,
    after: Population,
    band: Band,
    tag: u64,
) -> Result<(f64, f64, f64)> {
    let r = cfg.kld_replicates;
    let mut vals = Vec::with_capacity(r as usize);
    for i in 0..r {
        let fam = |role: u64| (streams::KLD << 40) | (tag << 24) | (i << 2) | role;
        let x = energy_samples(before, p, cfg.kld_samples, cfg.seed, fam(0))?;
        let y = energy_samples(after, p, cfg.kld_samples, cfg.seed, fam(1))?;
        let x = EnergySampleSet::new(x, SampleLabel::Pre, band)?;
        let y = EnergySampleSet::new(y, SampleLabel::Post, band)?;
        vals.push(knn_kld(&x, &y, cfg.kld_k)?.value);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let abs = vals.iter().map(|v| v.abs()).sum::<f64>() / n;
    let sd = if vals.len() > 1 {
        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((mean, abs, sd))
}

/// kNN divergence between pre- and post-countermeasure energies at Dave on
/// both bands, against a pre-vs-pre baseline (the alpha = 1 limit).
pub fn run_kld(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "band",
        "partial",
        "alpha",
        "kld_mean",
        "kld_abs_mean",
        "kld_sd",
        "baseline_abs_mean",
        "ratio",
        "seed",
        "samples",
        "replicates",
    ]);
    let mut tag = 0;
    for &partial in &cfg.sweep.grid {
        let p = SchemeParams {
            partial,
            ..cfg.params
        };
        for (band, name, pre, post) in [
            (Band::Fhb, "fhb", Population::FhbPre, Population::FhbPost(cfg.scheme)),
            (Band::Fab, "fab", Population::FabPre, Population::FabPost),
        ] {
            tag += 1;
            let (mean, abs, sd) = kld_replicates(cfg, &p, pre, post, band, tag)?;
            let (_, base, _) = kld_replicates(cfg, &p, pre, pre, band, tag + 1000)?;
            t.push(vec![
                name.into(),
                f(partial),
                f(p.alpha),
                f(mean),
                f(abs),
                f(sd),
                f(base),
                f(abs / base),
                cfg.seed.to_string(),
                cfg.kld_samples.to_string(),
                cfg.kld_replicates.to_string(),
            ]);
        }
    }
    Ok(t)
}

/// Optimized error-plus-detection sum across alphabets at zero offset, then
/// across the large-scale offset grid at 8-PSK.
pub fn run_robustness(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "kind", "m", "partial", "delta", "alpha", "sum", "error", "detection", "seed", "trials",
    ]);
    let row = |t: &mut Table, kind: ConstellationKind, m: usize, partial: f64| -> Result<()> {
        let p = SchemeParams {
            order: m,
            constellation: kind,
            partial,
            theta: std::f64::consts::PI / m as f64,
            ..cfg.params
        };
        p.validate()?;
        let delta = resolve_delta(cfg, &p, cfg.detector.target_pfa)?;
        let det = EnergyDetector::new(delta, &Constellation::new(kind, m)?);
        let pts = search_points(cfg, cfg.scheme, &p, &det, false)?;
        let (a, s, e, d) = minimize_sum(&pts, |s| s.staged);
        t.push(vec![
            kind_name(kind).into(),
            m.to_string(),
            f(partial),
            f(delta),
            f(a),
            f(s),
            f(e),
            f(d),
            cfg.seed.to_string(),
            cfg.trials.to_string(),
        ]);
        Ok(())
    };
    for &kind in &cfg.kinds {
        for &m in &cfg.orders {
            row(&mut t, kind, m, 0.0)?;
        }
    }
    for &partial in &cfg.sweep.grid {
        row(&mut t, ConstellationKind::Psk, 8, partial)?;
    }
    Ok(t)
}

/// Closed-form helper crossover probabilities against Monte Carlo counts.
pub fn run_crossover(cfg: &ExperimentConfig) -> Result<Table> {
    let mut t = Table::new(vec![
        "alpha", "tau", "p01", "p10", "p01_mc", "p10_mc", "sd01", "sd10", "seed", "trials",
    ]);
    for &a in &cfg.sweep.grid {
        let p = cfg.params.with_alpha(a);
        let cp = compute_crossover(&p)?;
        let (n01, n10) = simulate_crossover(&p, cp.tau_opt, cfg.trials, cfg.seed)?;
        let n = cfg.trials as f64;
        let sd = |q: f64| (q * (1.0 - q) / n).sqrt();
        t.push(vec![
            f(a),
            f(cp.tau_opt),
            f(cp.p01),
            f(cp.p10),
            f(n01 as f64 / n),
            f(n10 as f64 / n),
            f(sd(cp.p01)),
            f(sd(cp.p10)),
            cfg.seed.to_string(),
            cfg.trials.to_string(),
        ]);
    }
    Ok(t)
}

/// Every term of both closed-form bounds at each alpha of the sweep.
pub fn run_bounds_eval(cfg: &ExperimentConfig) -> Result<Table> {
    let names: Vec<&'static str> = {
        let b = crate::bounds::llcrtf_bound(0.5, 0.1, 4)?;
        b.fields().into_iter().map(|(n, _)| n).collect()
    };
    let mut header = vec!["scheme", "alpha", "snr_db", "m"];
    header.extend(&names);
    let mut t = Table::new(header);
    for &a in &cfg.sweep.grid {
        let p = cfg.params.with_alpha(a);
        for scheme in [Scheme::Dtrtf, Scheme::Llcrtf] {
            let b = scheme_bound(scheme, &p, &crossover_for(scheme, &p)?, cfg.extrapolate)?;
            let mut row = vec![scheme.label().to_string(), f(a), f(cfg.snr_db), p.order.to_string()];
            row.extend(b.fields().into_iter().map(|(_, v)| f(v)));
            t.push(row);
        }
    }
    Ok(t)
}

/// Maps numerical failures onto the error kinds the front end reports.
pub fn is_numerical(e: &Error) -> bool {
    !matches!(e, Error::InvalidParam { .. } | Error::Io { .. })
}
