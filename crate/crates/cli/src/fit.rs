//! Scaling-law model selection for correlator decay and entropy growth.
//!
//! Every candidate is an ordinary least-squares fit in a shared response
//! coordinate (ln|C| for decay, S for entropy), scored by
//! BIC = n·ln(RSS/n) + k·ln n. The lowest score wins; scores closer than
//! `TIE_EPS` are flagged as a tie and the earlier model in the candidate list
//! is kept.

use std::collections::BTreeMap;

use serde::Serialize;
use tngeo_core::stats::{least_squares, LinearFit};

use crate::{CliError, CliResult};

/// Correlator magnitudes below this count as numeric zero.
pub const DECAY_FLOOR: f64 = 1e-14;
pub const TIE_EPS: f64 = 1e-9;
/// Relative RSS floor so exact synthetic data still gives a finite score.
const RSS_FLOOR: f64 = 1e-24;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub k: usize,
    pub rss: f64,
    pub r2: f64,
    pub bic: f64,
}

/// Two-segment decay fit: power law below the crossover, exponential above.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piecewise {
    pub crossover: f64,
    pub power_exponent: f64,
    pub xi: f64,
    pub rss: f64,
    pub bic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    /// "decay" or "entropy".
    pub quantity: String,
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub r2: f64,
    pub residuals: Vec<f64>,
    pub runner_up: String,
    /// BIC(runner-up) − BIC(chosen), ≥ 0.
    pub margin: f64,
    pub tie: bool,
    pub candidates: Vec<Candidate>,
    pub piecewise: Option<Piecewise>,
    /// Points as given, before the floor.
    pub points: Vec<[f64; 2]>,
    pub dropped: usize,
}

impl ScalingReport {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
}

fn bic(rss: f64, n: usize, k: usize, scale: f64) -> f64 {
    let n_f = n as f64;
    let floor = RSS_FLOOR * n_f * scale * scale;
    n_f * (rss.max(floor).max(f64::MIN_POSITIVE) / n_f).ln() + k as f64 * n_f.ln()
}

fn scale_of(ys: &[f64]) -> f64 {
    let s = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn candidate(model: &str, names: &[&str], coef: Vec<f64>, fit: &LinearFit, n: usize, scale: f64) -> Candidate {
    let params = names.iter().map(|s| s.to_string()).zip(coef).collect();
    Candidate {
        model: model.into(),
        params,
        k: fit.coef.len(),
        rss: fit.rss,
        r2: fit.r2,
        bic: bic(fit.rss, n, fit.coef.len(), scale),
    }
}

fn select(
    quantity: &str,
    cands: Vec<(Candidate, LinearFit)>,
    points: Vec<[f64; 2]>,
    dropped: usize,
    piecewise: Option<Piecewise>,
) -> ScalingReport {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| cands[a].0.bic.total_cmp(&cands[b].0.bic).then(a.cmp(&b)));
    let (best, second) = (order[0], order[1]);
    let margin = cands[second].0.bic - cands[best].0.bic;
    let tie = margin < TIE_EPS * (1.0 + cands[best].0.bic.abs());
    // on a tie keep the model listed first
    let best = if tie { best.min(second) } else { best };
    let runner_up = if best == second { order[0] } else { second };
    let (chosen, fit) = &cands[best];
    ScalingReport {
        quantity: quantity.into(),
        model: chosen.model.clone(),
        params: chosen.params.clone(),
        r2: fit.r2,
        residuals: fit.residuals.clone(),
        runner_up: cands[runner_up].0.model.clone(),
        margin,
        tie,
        candidates: cands.iter().map(|(c, _)| c.clone()).collect(),
        piecewise,
        points,
        dropped,
    }
}

fn check_finite(points: &[(f64, f64)]) -> CliResult<()> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(CliError::Numeric("non-finite point".into()));
    }
    Ok(())
}

/// Exponential vs power-law decay of |C(r)|.
pub fn fit_decay(points: &[(f64, f64)]) -> CliResult<ScalingReport> {
    check_finite(points)?;
    if points.iter().any(|&(r, _)| r <= 0.0) {
        return Err(CliError::Config("decay fit needs r > 0".into()));
    }
    if points.iter().any(|&(_, c)| c < 0.0) {
        return Err(CliError::Config("decay fit takes magnitudes |C| ≥ 0".into()));
    }
    let mut kept: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, c)| c >= DECAY_FLOOR).collect();
    let dropped = points.len() - kept.len();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    if kept.len() < 5 {
        return Err(CliError::Numeric(format!(
            "{} points above the {DECAY_FLOOR:e} floor ({dropped} dropped); need 5",
            kept.len()
        )));
    }
    let r: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let n = r.len();
    let scale = scale_of(&y);
    let line: [&dyn Fn(f64) -> f64; 2] = [&|_| 1.0, &|v| v];
    let exp = least_squares(&r, &y, &line).map_err(numeric)?;
    let lr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let pow = least_squares(&lr, &y, &line).map_err(numeric)?;
    let xi = -1.0 / exp.slope();
    let cands = vec![
        (candidate("exponential", &["amplitude", "xi"], vec![exp.intercept().exp(), xi], &exp, n, scale), exp),
        (candidate("power", &["amplitude", "exponent"], vec![pow.intercept().exp(), -pow.slope()], &pow, n, scale), pow),
    ];
    let piecewise = piecewise_decay(&r, &y, scale)?;
    let raw = points.iter().map(|&(a, b)| [a, b]).collect();
    Ok(select("decay", cands, raw, dropped, piecewise))
}

/// Best split into a power-law head and an exponential tail, at least three
/// points per side; None when the grid is too short.
fn piecewise_decay(r: &[f64], y: &[f64], scale: f64) -> CliResult<Option<Piecewise>> {
    let n = r.len();
    let line: [&dyn Fn(f64) -> f64; 2] = [&|_| 1.0, &|v| v];
    let mut best: Option<Piecewise> = None;
    for s in 3..n.saturating_sub(2) {
        let lr: Vec<f64> = r[..s].iter().map(|v| v.ln()).collect();
        let head = least_squares(&lr, &y[..s], &line).map_err(numeric)?;
        let tail = least_squares(&r[s..], &y[s..], &line).map_err(numeric)?;
        let rss = head.rss + tail.rss;
        if best.as_ref().is_none_or(|b| rss < b.rss) {
            best = Some(Piecewise {
                crossover: (r[s - 1] * r[s]).sqrt(),
                power_exponent: -head.slope(),
                xi: -1.0 / tail.slope(),
                rss,
                // two lines plus the split point
                bic: bic(rss, n, 5, scale),
            });
        }
    }
    Ok(best)
}

pub const ENTROPY_MODELS: [&str; 4] = ["constant", "log", "linear", "n log n"];

/// Constant, log₂L, L or L·log₂L growth of S(L) (or of a min-cut count).
pub fn fit_entropy(points: &[(f64, f64)]) -> CliResult<ScalingReport> {
    check_finite(points)?;
    if points.len() < 4 {
        return Err(CliError::Config(format!("entropy fit needs at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|&(l, _)| l < 1.0) {
        return Err(CliError::Config("entropy fit needs L ≥ 1".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(CliError::Config("degenerate grid: fewer than 4 distinct L".into()));
    }
    let l: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let s: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let n = l.len();
    let scale = scale_of(&s);
    let one: &dyn Fn(f64) -> f64 = &|_| 1.0;
    let growth: [(&str, &dyn Fn(f64) -> f64); 3] =
        [("log", &|v: f64| v.log2()), ("linear", &|v| v), ("n log n", &|v: f64| v * v.log2())];
    let c = least_squares(&l, &s, &[one]).map_err(numeric)?;
    let mut cands = vec![(candidate("constant", &["a"], c.coef.clone(), &c, n, scale), c)];
    for (name, f) in growth {
        let fit = least_squares(&l, &s, &[one, f]).map_err(numeric)?;
        cands.push((candidate(name, &["a", "b"], fit.coef.clone(), &fit, n, scale), fit));
    }
    let raw = points.iter().map(|&(a, b)| [a, b]).collect();
    Ok(select("entropy", cands, raw, 0, None))
}

fn numeric(e: tngeo_core::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rs: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        rs.map(|r| (r, f(r))).collect()
    }

    #[test]
    fn synthetic_exponential() {
        let rep = fit_decay(&sample((1..=20).map(f64::from), |r| 0.7 * (-r / 3.0).exp())).unwrap();
        assert_eq!(rep.model, "exponential");
        assert!((rep.param("xi").unwrap() - 3.0).abs() < 0.03);
        assert_eq!(rep.runner_up, "power");
        assert!(rep.margin > 0.0 && !rep.tie);
    }

    #[test]
    fn synthetic_power() {
        let rep = fit_decay(&sample((1..=7).map(|k| f64::from(1 << k)), |r| r.powi(-2))).unwrap();
        assert_eq!(rep.model, "power");
        assert!((rep.param("exponent").unwrap() - 2.0).abs() < 0.02);
        assert!(rep.r2 > 0.999);
    }

    #[test]
    fn combined_decay_crossover() {
        let rep = fit_decay(&sample((2..=100).map(f64::from), |r| (-r / 20.0).exp() / (r * r))).unwrap();
        let pw = rep.piecewise.unwrap();
        assert!((10.0..=40.0).contains(&pw.crossover), "crossover {}", pw.crossover);
    }

    #[test]
    fn floor_drops_and_counts() {
        let mut pts = sample((1..=6).map(f64::from), |r| (-r).exp());
        pts.push((7.0, 1e-15));
        pts.push((8.0, 0.0));
        let rep = fit_decay(&pts).unwrap();
        assert_eq!(rep.dropped, 2);
        assert_eq!(rep.points.len(), 8);
        assert_eq!(rep.residuals.len(), 6);
        assert!(fit_decay(&pts[..4]).is_err());
        assert!(fit_decay(&[(1.0, -1.0); 6]).is_err());
    }

    #[test]
    fn entropy_classes() {
        let ls = || (1..=6).map(|k| f64::from(1 << k));
        let rep = fit_entropy(&sample(ls(), |_| 1.5)).unwrap();
        assert_eq!(rep.model, "constant");
        let rep = fit_entropy(&sample(ls(), |l| l.log2() / 3.0)).unwrap();
        assert_eq!(rep.model, "log");
        assert!((rep.param("b").unwrap() - 1.0 / 3.0).abs() < 0.02 / 3.0);
        let rep = fit_entropy(&sample(ls(), |l| 2.0 * l + 1.0)).unwrap();
        assert_eq!(rep.model, "linear");
        let rep = fit_entropy(&sample(ls(), |l| l * l.log2())).unwrap();
        assert_eq!(rep.model, "n log n");
    }

    #[test]
    fn entropy_rejects_degenerate_grid() {
        assert!(fit_entropy(&[(2.0, 1.0), (2.0, 1.1), (4.0, 1.0), (4.0, 1.2)]).is_err());
        assert!(fit_entropy(&[(2.0, 1.0), (4.0, 1.0), (8.0, 1.0)]).is_err());
    }
}
