use std::io::Write;

use serde::Serialize;

use super::simulate::{SimulationConfig, Simulator, Step};
use super::spec::{portfolio_from_lambda, DiffusionSpec};
use crate::linalg::{bilinear, dot, mat_vec, mean_stderr, pairwise_sum};
use crate::market::MarketPath;
use crate::rough::{DiscreteMeasure, LiftKind};
use crate::universal::{cover_gap_from_wealth, member_wealths, CoverGapReport, FunctionFamily};
use crate::{Error, Result};

/// Mean and standard error of one Monte Carlo curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Curve {
    /// Column-wise statistics of per-path rows.
    pub fn from_paths(name: &str, rows: &[Vec<f64>]) -> Curve {
        let n = rows[0].len();
        let mut column = vec![0.0; rows.len()];
        let (mut mean, mut stderr) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            for (c, r) in column.iter_mut().zip(rows) {
                *c = r[k];
            }
            let (m, s) = mean_stderr(&column);
            mean.push(m);
            stderr.push(s);
        }
        Curve {
            name: name.to_string(),
            mean,
            stderr,
        }
    }

    pub fn last(&self) -> (f64, f64) {
        (*self.mean.last().unwrap(), *self.stderr.last().unwrap())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCResult {
    pub times: Vec<f64>,
    pub curves: Vec<Curve>,
    pub metadata: serde_json::Value,
}

impl MCResult {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }

    /// `t,curve,mean,stderr`, curves in insertion order.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,curve,mean,stderr")?;
        for c in &self.curves {
            for (k, t) in self.times.iter().enumerate() {
                writeln!(out, "{t},{},{},{}", c.name, c.mean[k], c.stderr[k])?;
            }
        }
        Ok(())
    }
}

fn record_times(config: &SimulationConfig) -> Result<(Vec<usize>, Vec<f64>)> {
    let steps = config.record_steps()?;
    let times = steps.iter().map(|&k| k as f64 * config.step).collect();
    Ok((steps, times))
}

/// Records `values()` at node 0 and after each recorded step.
struct Recorder<'a> {
    steps: &'a [usize],
    next: usize,
    rows: Vec<Vec<f64>>,
}

impl<'a> Recorder<'a> {
    fn new(steps: &'a [usize], width: usize) -> Self {
        Recorder {
            steps,
            next: 1,
            rows: vec![vec![0.0; steps.len()]; width],
        }
    }

    /// Call after step `index`, i.e. at node `index + 1`.
    fn offer(&mut self, index: usize, values: &[f64]) {
        if self.next < self.steps.len() && self.steps[self.next] == index + 1 {
            for (row, v) in self.rows.iter_mut().zip(values) {
                row[self.next] = *v;
            }
            self.next += 1;
        }
    }
}

fn metadata(spec: &DiffusionSpec, config: &SimulationConfig) -> serde_json::Value {
    serde_json::json!({ "spec": spec, "config": config })
}

/// `r = π/μ` for the portfolio with drift coefficient `λ`.
fn ratio(mu: &[f64], lambda: &[f64]) -> Vec<f64> {
    let shift = 1.0 - dot(mu, lambda);
    lambda.iter().map(|l| l + shift).collect()
}

fn increment(s: &Step) -> Vec<f64> {
    s.next.iter().zip(s.mu).map(|(a, b)| a - b).collect()
}

/// `½ E ∫_0^t λ^T c λ ds` and the pathwise `E log V̂_t` on the record grid.
pub fn expected_log_optimal(spec: &DiffusionSpec, config: &SimulationConfig) -> Result<MCResult> {
    let sim = Simulator::new(spec, config)?;
    let (steps, times) = record_times(config)?;
    let per_path = sim.map_paths(|sim, p| {
        let mut rec = Recorder::new(&steps, 2);
        let (mut half, mut log_v) = (0.0, 0.0);
        let mut failure = None;
        sim.walk(p, |s| {
            let lambda = match spec.lambda(s.mu) {
                Ok(l) => l,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            let density = bilinear(&lambda, s.cov, &lambda);
            let r = ratio(s.mu, &lambda);
            half += 0.5 * density * s.dt;
            log_v += dot(&r, &increment(s)) - 0.5 * bilinear(&r, s.cov, &r) * s.dt;
            rec.offer(s.index, &[half, log_v]);
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(rec.rows)
    })?;
    let half: Vec<Vec<f64>> = per_path.iter().map(|r| r[0].clone()).collect();
    let logv: Vec<Vec<f64>> = per_path.iter().map(|r| r[1].clone()).collect();
    Ok(MCResult {
        times,
        curves: vec![Curve::from_paths("half_integral", &half), Curve::from_paths("log_wealth", &logv)],
        metadata: metadata(spec, config),
    })
}

/// Plug-in estimate of the best vol-stabilised `α` for a drift matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaStar {
    pub alpha: f64,
    /// `E ∫ (1/μ)^T B μ ds` with its standard error.
    pub numerator: (f64, f64),
    /// `E ∫ sum 1/μ^i ds - d² T` with its standard error.
    pub denominator: (f64, f64),
}

/// `α* = 2 E[N] / E[D] - 1` from per-path integrals.
pub fn alpha_star_from_integrals(numerators: &[f64], denominators: &[f64]) -> Result<AlphaStar> {
    let numerator = mean_stderr(numerators);
    let denominator = mean_stderr(denominators);
    if !(denominator.0.abs() > 2.0 * denominator.1) {
        return Err(Error::IllPosed(format!(
            "denominator {} is within two standard errors ({}) of zero",
            denominator.0, denominator.1
        )));
    }
    Ok(AlphaStar {
        alpha: 2.0 * numerator.0 / denominator.0 - 1.0,
        numerator,
        denominator,
    })
}

struct AlphaIntegrals {
    numerator: f64,
    reciprocal_sum: f64,
}

impl AlphaIntegrals {
    fn accumulate(&mut self, s: &Step, drift: &[f64]) {
        let d = s.mu.len();
        let inv: Vec<f64> = s.mu.iter().map(|m| 1.0 / m).collect();
        self.numerator += dot(&inv, &mat_vec(drift, d, d, s.mu)) * s.dt;
        self.reciprocal_sum += inv.iter().sum::<f64>() * s.dt;
    }
}

/// Simulates under `spec` and evaluates `α*` against the drift matrix `drift`.
pub fn alpha_star(spec: &DiffusionSpec, config: &SimulationConfig, drift: &[f64]) -> Result<AlphaStar> {
    let d = spec.dim();
    if drift.len() != d * d {
        return Err(Error::Dimension("drift matrix must be d x d".into()));
    }
    let sim = Simulator::new(spec, config)?;
    let horizon = config.horizon;
    let per_path = sim.map_paths(|sim, p| {
        let mut acc = AlphaIntegrals {
            numerator: 0.0,
            reciprocal_sum: 0.0,
        };
        sim.walk(p, |s| acc.accumulate(s, drift))?;
        Ok((acc.numerator, acc.reciprocal_sum - (d * d) as f64 * horizon))
    })?;
    let (n, dd): (Vec<f64>, Vec<f64>) = per_path.into_iter().unzip();
    alpha_star_from_integrals(&n, &dd)
}

/// Two expected-log-wealth curves on the same paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Figure1 {
    pub result: MCResult,
    pub alpha_star: AlphaStar,
}

/// `E log V̂_t` under the true `λ` against `E log V_t` of the vol-stabilised
/// portfolio with the fitted `α*`, plus their paired difference `gap`.
pub fn figure1(spec: &DiffusionSpec, config: &SimulationConfig) -> Result<Figure1> {
    let sim = Simulator::new(spec, config)?;
    let (steps, times) = record_times(config)?;
    let d = spec.dim();
    let drift = spec.drift_matrix();
    let horizon = config.horizon;
    struct PathRecord {
        rows: Vec<Vec<f64>>,
        numerator: f64,
        denominator: f64,
    }
    let per_path = sim.map_paths(|sim, p| {
        let mut rec = Recorder::new(&steps, 3);
        let mut acc = AlphaIntegrals {
            numerator: 0.0,
            reciprocal_sum: 0.0,
        };
        // log V̂, ∫ (1/μ)·dμ and ∫ (1/μ)^T c (1/μ) ds
        let (mut log_v, mut x, mut y) = (0.0, 0.0, 0.0);
        let mut failure = None;
        sim.walk(p, |s| {
            let lambda = match spec.lambda(s.mu) {
                Ok(l) => l,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            };
            let inc = increment(s);
            let r = ratio(s.mu, &lambda);
            log_v += dot(&r, &inc) - 0.5 * bilinear(&r, s.cov, &r) * s.dt;
            let inv: Vec<f64> = s.mu.iter().map(|m| 1.0 / m).collect();
            x += dot(&inv, &inc);
            y += bilinear(&inv, s.cov, &inv) * s.dt;
            acc.accumulate(s, &drift);
            rec.offer(s.index, &[log_v, x, y]);
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(PathRecord {
            rows: rec.rows,
            numerator: acc.numerator,
            denominator: acc.reciprocal_sum - (d * d) as f64 * horizon,
        })
    })?;
    let numerators: Vec<f64> = per_path.iter().map(|r| r.numerator).collect();
    let denominators: Vec<f64> = per_path.iter().map(|r| r.denominator).collect();
    let star = alpha_star_from_integrals(&numerators, &denominators)?;
    // The vol-stabilised ratio is κ/μ modulo the constant direction.
    let kappa = (1.0 + star.alpha) / (2.0 * spec.gamma);
    let optimal: Vec<Vec<f64>> = per_path.iter().map(|r| r.rows[0].clone()).collect();
    let alpha_curves: Vec<Vec<f64>> = per_path
        .iter()
        .map(|r| {
            r.rows[1]
                .iter()
                .zip(&r.rows[2])
                .map(|(x, y)| kappa * x - 0.5 * kappa * kappa * y)
                .collect()
        })
        .collect();
    let gaps: Vec<Vec<f64>> = optimal
        .iter()
        .zip(&alpha_curves)
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u - v).collect())
        .collect();
    let mut meta = metadata(spec, config);
    meta["alpha_star"] = serde_json::to_value(star).expect("plain numbers");
    Ok(Figure1 {
        result: MCResult {
            times,
            curves: vec![
                Curve::from_paths("log_optimal", &optimal),
                Curve::from_paths("alpha_optimal", &alpha_curves),
                Curve::from_paths("gap", &gaps),
            ],
            metadata: meta,
        },
        alpha_star: star,
    })
}

/// Per-path `∫_0^T λ^T c λ ds`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub values: Vec<f64>,
    pub all_finite: bool,
}

pub fn structure_condition_report(spec: &DiffusionSpec, config: &SimulationConfig) -> Result<StructureReport> {
    let sim = Simulator::new(spec, config)?;
    let values = sim.map_paths(|sim, p| {
        let mut total = 0.0;
        sim.walk(p, |s| {
            total += spec.growth_density(s.mu).unwrap_or(f64::NAN) * s.dt;
        })?;
        Ok(total)
    })?;
    let all_finite = values.iter().all(|v| v.is_finite());
    Ok(StructureReport { values, all_finite })
}

/// Aggregate relative error of realised `[μ]^{ii}` against `∫ c^{ii}(μ) ds`.
pub fn realized_covariation_error(spec: &DiffusionSpec, config: &SimulationConfig) -> Result<f64> {
    let sim = Simulator::new(spec, config)?;
    let d = spec.dim();
    let per_path = sim.map_paths(|sim, p| {
        let (mut realized, mut model) = (0.0, 0.0);
        sim.walk(p, |s| {
            for i in 0..d {
                let dx = s.next[i] - s.mu[i];
                realized += dx * dx;
                model += s.cov[i * d + i] * s.dt;
            }
        })?;
        Ok((realized, model))
    })?;
    let (r, m): (Vec<f64>, Vec<f64>) = per_path.into_iter().unzip();
    let (r, m) = (pairwise_sum(&r), pairwise_sum(&m));
    Ok((r - m).abs() / m)
}

/// Long-horizon growth rates of the log-optimal and universal portfolios.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub horizons: Vec<f64>,
    /// `(1/T) ½ ∫ λ^T c λ ds`, averaged over paths.
    pub growth_estimate: Vec<f64>,
    /// `(1/T) log V̂_T`, averaged over paths.
    pub log_optimal_rate: Vec<f64>,
    /// `(1/T) log V^{π^ν}_T`, averaged over paths; empty without a family.
    pub universal_rate: Vec<f64>,
    /// `|log_optimal_rate - growth_estimate| / growth_estimate`
    pub relative_gap: Vec<f64>,
    /// Cover-gap curve per path.
    #[serde(skip)]
    pub cover: Vec<CoverGapReport>,
    /// Scaled Cover gap averaged over paths, per horizon.
    pub mean_gap_scaled: Vec<f64>,
}

/// Runs `config.paths` long paths and evaluates growth rates at `horizons`.
pub fn ergodic_growth_rate(
    spec: &DiffusionSpec,
    config: &SimulationConfig,
    horizons: &[f64],
    family: Option<&FunctionFamily>,
) -> Result<ErgodicReport> {
    let sim = Simulator::new(spec, config)?;
    let grid = config.grid()?;
    let marks = horizons.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
    struct PathOut {
        growth: Vec<f64>,
        log_v: Vec<f64>,
        universal: Vec<f64>,
        cover: Option<CoverGapReport>,
    }
    let per_path = sim.map_paths(|sim, p| {
        let (mut half, mut log_v) = (0.0, 0.0);
        let mut halves = vec![0.0; grid.len()];
        let mut logs = vec![0.0; grid.len()];
        let mut failure = None;
        let path = {
            let d = spec.dim();
            let mut data = Vec::with_capacity(grid.len() * d);
            sim.walk(p, |s| {
                if s.index == 0 {
                    data.extend_from_slice(s.mu);
                }
                data.extend_from_slice(s.next);
                let lambda = match spec.lambda(s.mu) {
                    Ok(l) => l,
                    Err(e) => {
                        failure.get_or_insert(e);
                        return;
                    }
                };
                let r = ratio(s.mu, &lambda);
                let density = bilinear(&r, s.cov, &r);
                half += 0.5 * density * s.dt;
                log_v += dot(&r, &increment(s)) - 0.5 * density * s.dt;
                halves[s.index + 1] = half;
                logs[s.index + 1] = log_v;
            })?;
            crate::path::SampledPath::new(grid.clone(), d, data)?
        };
        if let Some(e) = failure {
            return Err(e);
        }
        let (universal, cover) = match family {
            Some(fam) => {
                let market = MarketPath::from_weights(path, LiftKind::LeftPoint)?;
                let wealth = member_wealths(fam, &market)?;
                let measure = DiscreteMeasure::uniform(fam.len())?;
                let cover = cover_gap_from_wealth(&wealth, &measure, &market, horizons)?;
                let u = cover.rows.iter().map(|r| r.log_universal).collect();
                (u, Some(cover))
            }
            None => (Vec::new(), None),
        };
        Ok(PathOut {
            growth: marks.iter().map(|&k| halves[k]).collect(),
            log_v: marks.iter().map(|&k| logs[k]).collect(),
            universal,
            cover,
        })
    })?;
    let n = per_path.len() as f64;
    let average = |get: &dyn Fn(&PathOut) -> &Vec<f64>, j: usize| -> f64 {
        let xs: Vec<f64> = per_path.iter().map(|p| get(p)[j]).collect();
        pairwise_sum(&xs) / n
    };
    let mut report = ErgodicReport {
        horizons: horizons.to_vec(),
        growth_estimate: Vec::new(),
        log_optimal_rate: Vec::new(),
        universal_rate: Vec::new(),
        relative_gap: Vec::new(),
        cover: per_path.iter().filter_map(|p| p.cover.clone()).collect(),
        mean_gap_scaled: Vec::new(),
    };
    for (j, &t) in horizons.iter().enumerate() {
        let g = average(&|p| &p.growth, j) / t;
        let l = average(&|p| &p.log_v, j) / t;
        report.growth_estimate.push(g);
        report.log_optimal_rate.push(l);
        report.relative_gap.push(if g > 0.0 { (l - g).abs() / g } else { 0.0 });
        if family.is_some() {
            report.universal_rate.push(average(&|p| &p.universal, j) / t);
            let gaps: Vec<f64> = report.cover.iter().map(|c| c.rows[j].gap_scaled).collect();
            report.mean_gap_scaled.push(pairwise_sum(&gaps) / n);
        }
    }
    Ok(report)
}

/// Log-optimal weights along a path, `π̂(μ_k)` per node.
pub fn log_optimal_along(spec: &DiffusionSpec, mu: &crate::path::SampledPath) -> Result<crate::path::SampledPath> {
    let mut failure = None;
    let out = mu.map(mu.dim(), |_, x| match spec.lambda(x) {
        Ok(l) => portfolio_from_lambda(x, &l),
        Err(e) => {
            failure.get_or_insert(e);
            vec![0.0; x.len()]
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_start_at_zero() {
        let spec = DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, 0.0).unwrap();
        let mut cfg = SimulationConfig::new(0.01, 2.0, 64, 3);
        cfg.record_every = 20;
        let f = figure1(&spec, &cfg).unwrap();
        for c in &f.result.curves {
            assert_eq!(c.mean[0], 0.0);
            assert_eq!(c.mean.len(), 11);
        }
    }

    #[test]
    fn kernel_only_lambda_has_no_growth() {
        let spec = DiffusionSpec::custom(vec![0.0; 9], 3, 0.5, 3.0).unwrap();
        let cfg = SimulationConfig::new(0.01, 0.5, 4, 1);
        let rep = structure_condition_report(&spec, &cfg).unwrap();
        assert!(rep.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn degenerate_drift_gives_minus_one() {
        let spec = DiffusionSpec::vol_stabilized(1.0, 0.5, 0.0, 3).unwrap();
        let cfg = SimulationConfig::new(0.01, 1.0, 16, 5);
        let a = alpha_star(&spec, &cfg, &[0.0; 9]).unwrap();
        assert_eq!(a.alpha, -1.0);
    }
}
