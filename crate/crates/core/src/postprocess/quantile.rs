use std::collections::BTreeMap;

use crate::hydro::{ForecastArchive, PairSet};
use crate::nn::MinMax;
use crate::verify::mean;
use crate::{Error, Result, MAX_LEAD, MEMBERS};

pub const MIN_QR_PAIRS: usize = 20;

/// `τ_k = (k − ½)/n` for `k = 1..=n`.
pub fn default_quantile_levels(n: usize) -> Vec<f64> {
    (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect()
}

pub fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Mean pinball loss of `e − a − b·x`.
pub fn pinball_loss(x: &[f64], e: &[f64], tau: f64, a: f64, b: f64) -> f64 {
    x.iter().zip(e).map(|(x, e)| pinball(e - a - b * x, tau)).sum::<f64>() / e.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrOptions {
    pub max_iterations: usize,
    pub base_step: f64,
    pub rel_tolerance: f64,
    /// Freeze the slope at zero.
    pub intercept_only: bool,
}

impl Default for QrOptions {
    fn default() -> Self {
        QrOptions {
            max_iterations: 10_000,
            base_step: 0.5,
            rel_tolerance: 1e-10,
            intercept_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileFit {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    /// Mean pinball loss at the solution.
    pub loss: f64,
    pub iterations: usize,
}

/// Intercept minimizing the pinball loss of `r − a`: the ⌈nτ⌉-th order
/// statistic.
fn optimal_intercept(r: &mut [f64], tau: f64) -> f64 {
    let n = r.len();
    let k = ((n as f64 * tau).ceil() as usize).clamp(1, n) - 1;
    let (_, v, _) = r.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Pinball loss with the intercept profiled out, and that intercept.
fn profile(x: &[f64], e: &[f64], tau: f64, b: f64, buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(x.iter().zip(e).map(|(x, e)| e - b * x));
    let a = optimal_intercept(buf, tau);
    (pinball_loss(x, e, tau, a, b), a)
}

/// Subgradient descent on min–max normalized data, returning `(a, b)` in
/// original units.
fn subgradient(x: &[f64], e: &[f64], tau: f64, opts: &QrOptions) -> Result<(f64, f64, usize)> {
    let sx = MinMax::fit(x)?;
    let se = MinMax::fit(e)?;
    let xs: Vec<f64> = x.iter().map(|v| sx.forward(*v)).collect();
    let es: Vec<f64> = e.iter().map(|v| se.forward(*v)).collect();
    let n = xs.len() as f64;
    let fit_slope = !opts.intercept_only && !sx.is_degenerate();

    let (mut a, mut b) = (0.0, 0.0);
    let mut best = (pinball_loss(&xs, &es, tau, a, b), a, b);
    let mut prev = best.0;
    let mut iterations = 0;
    for it in 1..=opts.max_iterations {
        iterations = it;
        let (mut ga, mut gb) = (0.0, 0.0);
        for (xv, ev) in xs.iter().zip(&es) {
            let u = ev - a - b * xv;
            let g = if u < 0.0 { 1.0 - tau } else { -tau };
            ga += g;
            gb += g * xv;
        }
        let step = opts.base_step / (it as f64).sqrt();
        a -= step * ga / n;
        if fit_slope {
            b -= step * gb / n;
        }
        let loss = pinball_loss(&xs, &es, tau, a, b);
        if !loss.is_finite() {
            return Err(Error::Fit(format!("pinball loss diverged at iteration {it} (τ = {tau})")));
        }
        if loss < best.0 {
            best = (loss, a, b);
        }
        if (prev - loss).abs() <= opts.rel_tolerance * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        prev = loss;
    }
    let (_, a, b) = best;
    let width_x = if sx.is_degenerate() { 1.0 } else { sx.max - sx.min };
    let width_e = if se.is_degenerate() { 1.0 } else { se.max - se.min };
    let b_orig = b * width_e / width_x;
    let a_orig = se.min + width_e * a - b_orig * sx.min;
    Ok((a_orig, b_orig, iterations))
}

/// Fits one quantile level of `e ≈ a + b·x`.
///
/// Deterministic subgradient descent on normalized data locates the
/// solution; an exact line search over the slope with the intercept
/// profiled out as an order statistic then refines it to the optimum of
/// the piecewise-linear loss.
pub fn fit_quantile(x: &[f64], e: &[f64], tau: f64, opts: &QrOptions) -> Result<QuantileFit> {
    if x.len() != e.len() || e.is_empty() {
        return Err(Error::input("quantile regression needs equal, non-empty x and e"));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::input(format!("quantile level {tau} outside (0, 1)")));
    }
    if x.iter().chain(e).any(|v| !v.is_finite()) {
        return Err(Error::input("quantile regression data must be finite"));
    }
    if e.iter().all(|v| *v == e[0]) {
        return Ok(QuantileFit {
            tau,
            a: e[0],
            b: 0.0,
            loss: 0.0,
            iterations: 0,
        });
    }
    let (a0, b0, iterations) = subgradient(x, e, tau, opts)?;
    let start_loss = pinball_loss(x, e, tau, a0, b0);
    let mut buf = Vec::with_capacity(e.len());

    let fixed_slope = opts.intercept_only || x.iter().all(|v| *v == x[0]);
    let b = if fixed_slope {
        0.0
    } else {
        line_search_slope(x, e, tau, b0, &mut buf)?
    };
    let (loss, a) = profile(x, e, tau, b, &mut buf);
    if !loss.is_finite() || (!fixed_slope && loss > start_loss * (1.0 + 1e-9) + 1e-12) {
        return Err(Error::Fit(format!(
            "τ = {tau}: refinement did not improve on descent (loss {loss} vs {start_loss})"
        )));
    }
    Ok(QuantileFit {
        tau,
        a,
        b,
        loss,
        iterations,
    })
}

fn line_search_slope(x: &[f64], e: &[f64], tau: f64, b0: f64, buf: &mut Vec<f64>) -> Result<f64> {
    let spread_e = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread_x = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut width = (spread_e.max(1e-12) / spread_x).max(b0.abs() * 1e-3).max(1e-12);
    let g = |b: f64, buf: &mut Vec<f64>| profile(x, e, tau, b, buf).0;

    // bracket a minimizer of the convex profile around b0
    let mut center = b0;
    let mut gc = g(center, buf);
    let mut bracketed = false;
    for _ in 0..200 {
        let (gl, gr) = (g(center - width, buf), g(center + width, buf));
        if gr < gc {
            center += width;
            gc = gr;
        } else if gl < gc {
            center -= width;
            gc = gl;
        } else {
            bracketed = true;
            break;
        }
        width *= 2.0;
    }
    if !bracketed {
        return Err(Error::Fit(format!("τ = {tau}: could not bracket the optimal slope")));
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (center - width, center + width);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut gcv, mut gdv) = (g(c, buf), g(d, buf));
    for _ in 0..400 {
        if hi - lo <= 1e-13 * (1.0 + center.abs()) {
            break;
        }
        if gcv <= gdv {
            hi = d;
            d = c;
            gdv = gcv;
            c = hi - inv_phi * (hi - lo);
            gcv = g(c, buf);
        } else {
            lo = c;
            c = d;
            gcv = gdv;
            d = lo + inv_phi * (hi - lo);
            gdv = g(d, buf);
        }
    }
    let candidates = [lo, c, d, hi, center];
    let best = candidates
        .iter()
        .map(|&b| (g(b, buf), b))
        .min_by(|p, q| p.0.total_cmp(&q.0))
        .expect("non-empty");
    Ok(best.1)
}

/// Per-lead quantile coefficients of the ensemble-mean error.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRegressionModel {
    pub levels: Vec<f64>,
    pub per_lead: BTreeMap<u32, Vec<QuantileFit>>,
}

/// Fits `obs − mean ≈ a_τ + b_τ·mean` for every level, per lead.
pub fn fit_quantile_regression(pair_sets: &[PairSet], levels: &[f64], opts: &QrOptions) -> Result<QuantileRegressionModel> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::input("quantile levels must be strictly increasing within (0, 1)"));
    }
    let mut per_lead = BTreeMap::new();
    for set in pair_sets {
        if set.len() < MIN_QR_PAIRS {
            return Err(Error::input(format!(
                "lead {}: {} pairs, quantile regression needs at least {MIN_QR_PAIRS}",
                set.lead,
                set.len()
            )));
        }
        let x = set.ensemble_means();
        let e: Vec<f64> = x.iter().zip(set.observations()).map(|(m, y)| y - m).collect();
        let fits = levels
            .iter()
            .map(|&tau| fit_quantile(&x, &e, tau, opts).map_err(|err| Error::Fit(format!("lead {}: {err}", set.lead))))
            .collect::<Result<Vec<_>>>()?;
        per_lead.insert(set.lead, fits);
    }
    Ok(QuantileRegressionModel {
        levels: levels.to_vec(),
        per_lead,
    })
}

impl QuantileRegressionModel {
    /// Members for one ensemble mean, floored at zero and sorted.
    pub fn members(&self, lead: u32, ensemble_mean: f64) -> Option<Vec<f64>> {
        let fits = self.per_lead.get(&lead)?;
        let mut m: Vec<f64> = fits
            .iter()
            .map(|f| (ensemble_mean + f.a + f.b * ensemble_mean).max(0.0))
            .collect();
        m.sort_by(f64::total_cmp);
        Some(m)
    }
}

/// Rebuilds an ensemble around each raw ensemble mean.
pub fn apply_quantile_regression(model: &QuantileRegressionModel, archive: &ForecastArchive) -> Result<ForecastArchive> {
    if model.levels.len() != MEMBERS {
        return Err(Error::input(format!(
            "{} quantile levels cannot fill a {MEMBERS}-member archive",
            model.levels.len()
        )));
    }
    let mut out = ForecastArchive::empty(archive.issue_dates().to_vec());
    for (k, &issue) in archive.issue_dates().iter().enumerate() {
        for lead in 1..=MAX_LEAD {
            let Some(ens) = archive.ensemble_at(k, lead) else { continue };
            let Some(members) = model.members(lead, mean(&ens)) else { continue };
            for (m, v) in members.into_iter().enumerate() {
                out.set(issue, lead, m, v)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn errors(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.5, 2.0).unwrap();
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    fn grid_argmin(e: &[f64], tau: f64, step: f64) -> (f64, f64) {
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let x = vec![0.0; e.len()];
        let mut best = (f64::INFINITY, lo);
        let mut a = lo;
        while a <= hi {
            let l = pinball_loss(&x, e, tau, a, 0.0);
            if l < best.0 {
                best = (l, a);
            }
            a += step;
        }
        best
    }

    #[test]
    fn pinball_definition() {
        assert_eq!(pinball(2.0, 0.9), 1.8);
        assert!((pinball(-2.0, 0.9) - 0.2).abs() < 1e-15);
        assert_eq!(pinball(0.0, 0.3), 0.0);
    }

    #[test]
    fn levels() {
        let t = default_quantile_levels(11);
        assert_eq!(t.len(), 11);
        assert!((t[0] - 0.5 / 11.0).abs() < 1e-15 && (t[10] - 10.5 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn intercept_only_median() {
        let e = errors(201, 3);
        let x = vec![1.0; e.len()];
        let opts = QrOptions {
            intercept_only: true,
            ..QrOptions::default()
        };
        let fit = fit_quantile(&x, &e, 0.5, &opts).unwrap();
        let mut sorted = e.clone();
        sorted.sort_by(f64::total_cmp);
        assert!((fit.a - sorted[100]).abs() < 1e-6);
        assert_eq!(fit.b, 0.0);
    }

    #[test]
    fn intercept_only_matches_grid() {
        let e = errors(301, 8);
        let x: Vec<f64> = (0..301).map(|k| k as f64).collect();
        let opts = QrOptions {
            intercept_only: true,
            ..QrOptions::default()
        };
        let step = 1e-3;
        for tau in [0.1, 0.5, 0.9] {
            let fit = fit_quantile(&x, &e, tau, &opts).unwrap();
            let (grid_loss, grid_a) = grid_argmin(&e, tau, step);
            assert!(fit.loss <= grid_loss + 1e-12, "τ {tau}");
            // the grid point nearest the optimum lies within one step of it
            assert!((fit.a - grid_a).abs() <= step, "τ {tau}: {} vs {grid_a}", fit.a);
        }
    }

    #[test]
    fn identical_errors() {
        let x: Vec<f64> = (0..30).map(f64::from).collect();
        let fit = fit_quantile(&x, &vec![-1.25; 30], 0.7, &QrOptions::default()).unwrap();
        assert_eq!((fit.a, fit.b, fit.loss), (-1.25, 0.0, 0.0));
    }

    #[test]
    fn recovers_a_linear_quantile() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..2000).map(|_| rng.random_range(0.0..50.0)).collect();
        let e: Vec<f64> = x.iter().map(|v| 1.0 + 0.2 * v + rng.random_range(-1.0..1.0)).collect();
        let fit = fit_quantile(&x, &e, 0.5, &QrOptions::default()).unwrap();
        assert!((fit.b - 0.2).abs() < 0.01 && (fit.a - 1.0).abs() < 0.2, "{fit:?}");
        let descent_only = {
            let (a, b, _) = subgradient(&x, &e, 0.5, &QrOptions::default()).unwrap();
            pinball_loss(&x, &e, 0.5, a, b)
        };
        assert!(fit.loss <= descent_only);
        // no slope perturbation improves the loss
        for db in [-1e-6, 1e-6] {
            let mut buf = Vec::new();
            assert!(profile(&x, &e, 0.5, fit.b + db, &mut buf).0 >= fit.loss - 1e-12);
        }
    }

    #[test]
    fn bad_inputs() {
        let opts = QrOptions::default();
        assert!(fit_quantile(&[], &[], 0.5, &opts).is_err());
        assert!(fit_quantile(&[1.0], &[1.0], 1.0, &opts).is_err());
        assert!(fit_quantile(&[1.0, f64::NAN], &[1.0, 2.0], 0.5, &opts).is_err());
    }

    #[test]
    fn members_are_sorted_and_non_negative() {
        let fits = [(-3.0, 0.5), (0.0, -0.1), (1.0, 0.0)]
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| QuantileFit {
                tau: (k as f64 + 0.5) / 3.0,
                a,
                b,
                loss: 0.0,
                iterations: 0,
            })
            .collect();
        let model = QuantileRegressionModel {
            levels: vec![1.0 / 6.0, 0.5, 5.0 / 6.0],
            per_lead: BTreeMap::from([(1, fits)]),
        };
        let m = model.members(1, 2.0).unwrap();
        assert_eq!(m, vec![0.0, 1.8, 3.0]);
        assert!(model.members(2, 2.0).is_none());
    }
}
