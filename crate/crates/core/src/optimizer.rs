//! Selection of the energy-splitting factor: grid minimization of an
//! objective and root finding on an increasing/decreasing split.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Grid { step: f64 },
    Intersection { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    pub objective: f64,
    pub method: Method,
}

/// Grid points `k * step` strictly inside (0, 1).
pub fn alpha_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (1..n)
        .map(|k| k as f64 * step)
        .filter(|&a| a > 0.0 && a < 1.0)
        .collect()
}

/// Minimizes `objective` over the grid of spacing `step`; ties resolve to the
/// larger alpha.
pub fn grid_minimize(objective: impl Fn(f64) -> f64, step: f64) -> Result<AlphaSolution> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(invalid("run.alpha_step", "step must lie in (0, 0.01]"));
    }
    let mut best: Option<(f64, f64)> = None;
    for a in alpha_grid(step) {
        let v = objective(a);
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { alpha: a });
        }
        if best.is_none_or(|(_, b)| v <= b) {
            best = Some((a, v));
        }
    }
    let (alpha, objective) = best.expect("non-empty grid");
    Ok(AlphaSolution {
        alpha,
        objective,
        method: Method::Grid { step },
    })
}

/// Pre-scan abscissae: coarse on the bulk of (0,1), fine next to 1 where the
/// interesting crossings live.
fn prescan(eps: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..990).map(|i| eps + i as f64 * 1e-3).collect();
    let mut a = 0.99;
    while a < 1.0 - eps {
        v.push(a);
        a += 1e-5;
    }
    v.push(1.0 - eps);
    v
}

/// Root of `p_up - p_down` by bisection to absolute tolerance `tol`.
///
/// Sign changes are located by a pre-scan. Crossings where `p_up` overtakes
/// `p_down` are preferred; among several, the one with the smallest
/// `p_up + p_down` is refined.
pub fn intersection_solve(
    p_up: impl Fn(f64) -> f64,
    p_down: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<AlphaSolution> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "tolerance must be > 0"));
    }
    let eps = 1e-4;
    let diff = |a: f64| -> Result<f64> {
        let d = p_up(a) - p_down(a);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFiniteObjective { alpha: a })
        }
    };
    let xs = prescan(eps);
    let mut ds = Vec::with_capacity(xs.len());
    for &a in &xs {
        ds.push(diff(a)?);
    }
    let mut rising = Vec::new();
    let mut falling = Vec::new();
    for i in 0..xs.len() - 1 {
        let (d0, d1) = (ds[i], ds[i + 1]);
        if d0 <= 0.0 && d1 > 0.0 {
            rising.push(i);
        } else if d0 > 0.0 && d1 <= 0.0 {
            falling.push(i);
        }
    }
    let candidates = if rising.is_empty() { falling } else { rising };
    let Some(&i) = candidates.iter().min_by(|&&i, &&j| {
        let s = |k: usize| p_up(xs[k]) + p_down(xs[k]);
        s(i).total_cmp(&s(j))
    }) else {
        return Err(Error::NoSignChange {
            lo: xs[0],
            hi: xs[xs.len() - 1],
            diff_lo: ds[0],
            diff_hi: ds[ds.len() - 1],
        });
    };
    let (mut lo, mut hi) = (xs[i], xs[i + 1]);
    let lo_sign = ds[i] > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (diff(mid)? > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(AlphaSolution {
        alpha,
        objective: p_up(alpha) + p_down(alpha),
        method: Method::Intersection { tol },
    })
}

/// Piecewise-linear curve through `(alpha, value)` nodes, constant beyond
/// the end nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorCurve {
    nodes: Vec<(f64, f64)>,
}

impl DetectorCurve {
    pub fn new(mut nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("nodes", "curve needs at least one node"));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn eval(&self, a: f64) -> f64 {
        let n = &self.nodes;
        let i = n.partition_point(|&(x, _)| x < a);
        if i == 0 {
            return n[0].1;
        }
        if i == n.len() {
            return n[n.len() - 1].1;
        }
        let (x0, y0) = n[i - 1];
        let (x1, y1) = n[i];
        y0 + (y1 - y0) * (a - x0) / (x1 - x0)
    }

    /// Keeps only nodes on the coarse step-0.01 lattice.
    pub fn coarse(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .copied()
            .filter(|&(a, _)| ((a * 100.0).round() - a * 100.0).abs() < 1e-9)
            .collect();
        Self { nodes }
    }
}

/// Detector-curve abscissae: step 0.01 up to 0.99, step 0.001 up to 0.999,
/// then 0.9995 and 0.9999.
pub fn detector_nodes() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    v.extend((991..=999).map(|i| i as f64 / 1000.0));
    v.extend([0.9995, 0.9999]);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_quadratic() {
        let s = grid_minimize(|a| (a - 0.7).powi(2), 0.01).unwrap();
        assert!((s.alpha - 0.7).abs() <= 0.01);
        assert!(grid_minimize(|a| a, 0.02).is_err());
    }

    #[test]
    fn ties_prefer_larger_alpha() {
        let s = grid_minimize(|_| 1.0, 0.01).unwrap();
        assert!((s.alpha - 0.99).abs() < 1e-12);
    }

    #[test]
    fn non_finite_reports_alpha() {
        let e = grid_minimize(|a| if a > 0.5 { f64::NAN } else { a }, 0.01).unwrap_err();
        assert!(matches!(e, Error::NonFiniteObjective { alpha } if (alpha - 0.51).abs() < 1e-9));
    }

    #[test]
    fn linear_crossing() {
        let s = intersection_solve(|a| a, |a| 1.0 - a, 1e-4).unwrap();
        assert!((s.alpha - 0.5).abs() < 1e-4);
    }

    #[test]
    fn no_crossing() {
        let e = intersection_solve(|_| 1.0, |_| 0.0, 1e-4).unwrap_err();
        assert!(matches!(e, Error::NoSignChange { .. }));
    }

    #[test]
    fn curve_interpolation() {
        let c = DetectorCurve::new(vec![(0.5, 1.0), (0.1, 0.0)]).unwrap();
        assert_eq!(c.eval(0.0), 0.0);
        assert!((c.eval(0.3) - 0.5).abs() < 1e-12);
        assert_eq!(c.eval(0.9), 1.0);
    }

    #[test]
    fn node_layout() {
        let n = detector_nodes();
        assert_eq!(n.len(), 99 + 9 + 2);
        assert!(n.windows(2).all(|w| w[0] < w[1]));
    }
}
