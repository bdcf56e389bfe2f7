use std::io::Write;

use super::functions::{GeneratingFunction, VectorField};
use super::{MarketPath, PortfolioPath};
use crate::linalg::{bilinear, mat_vec, outer, trace_pairing};
use crate::path::{Partition, SampledPath};
use crate::rough::convergence::running_sum;
use crate::rough::{compensated_integral, controlled_integral, young_integral, ConvergenceReport};
use crate::{Error, Result};

fn partition_for(market: &MarketPath, partition: Option<&Partition>) -> Result<Partition> {
    match partition {
        Some(p) => {
            p.check_fits(market.grid())?;
            Ok(p.clone())
        }
        None => Ok(market.full_partition()),
    }
}

fn check_dim(pi: &SampledPath, market: &MarketPath) -> Result<()> {
    if pi.dim() != market.dim() || pi.grid() != market.grid() {
        return Err(Error::Dimension("portfolio and market do not match".into()));
    }
    Ok(())
}

/// `τ^π_{ij} = (π - e_i)^T a (π - e_j)` for one covariance increment `a`.
fn tau_cell(pi: &[f64], a: &[f64], out: &mut [f64]) {
    let d = pi.len();
    let api = mat_vec(a, d, d, pi);
    let quad = crate::linalg::dot(pi, &api);
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = quad - api[i] - api[j] + a[i * d + j];
        }
    }
}

/// Running relative covariance `τ^π` (row-major `d x d`) with left-node weights.
pub fn relative_covariance(pi: &SampledPath, market: &MarketPath, partition: Option<&Partition>) -> Result<SampledPath> {
    check_dim(pi, market)?;
    let d = market.dim();
    let part = partition_for(market, partition)?;
    let mut a = vec![0.0; d * d];
    let data = running_sum(&part, d * d, |s, t, out| {
        market.covariance_increment(s, t, &mut a);
        tau_cell(pi.value(s), &a, out);
    });
    SampledPath::new(market.grid().clone(), d * d, data)
}

/// Running excess growth `½ (sum π^i a^{ii} - π^T a π)`.
pub fn excess_growth(pi: &SampledPath, market: &MarketPath, partition: Option<&Partition>) -> Result<SampledPath> {
    check_dim(pi, market)?;
    let d = market.dim();
    let part = partition_for(market, partition)?;
    let mut a = vec![0.0; d * d];
    let data = running_sum(&part, 1, |s, t, out| {
        market.covariance_increment(s, t, &mut a);
        let p = pi.value(s);
        let diag: f64 = (0..d).map(|i| p[i] * a[i * d + i]).sum();
        out[0] = 0.5 * (diag - bilinear(p, &a, p));
    });
    SampledPath::new(market.grid().clone(), 1, data)
}

/// Excess growth written through the market's relative covariance.
pub fn excess_growth_via_tau(pi: &SampledPath, market: &MarketPath, partition: Option<&Partition>) -> Result<SampledPath> {
    check_dim(pi, market)?;
    let d = market.dim();
    let part = partition_for(market, partition)?;
    let mut a = vec![0.0; d * d];
    let mut tau = vec![0.0; d * d];
    let mu = market.weights();
    let data = running_sum(&part, 1, |s, t, out| {
        market.covariance_increment(s, t, &mut a);
        tau_cell(mu.value(s), &a, &mut tau);
        let p = pi.value(s);
        let diag: f64 = (0..d).map(|i| p[i] * tau[i * d + i]).sum();
        out[0] = 0.5 * (diag - bilinear(p, &tau, p));
    });
    SampledPath::new(market.grid().clone(), 1, data)
}

/// Wealth of a portfolio and its decomposition, node by node.
#[derive(Clone, Debug)]
pub struct WealthRecord {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    pub relative: Vec<f64>,
    pub log_relative: Vec<f64>,
    pub int_term: Vec<f64>,
    pub cov_term: Vec<f64>,
}

impl WealthRecord {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,W,V,logV,int_term,cov_term")?;
        for k in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.times[k],
                self.wealth[k],
                self.relative[k],
                self.log_relative[k],
                self.int_term[k],
                self.cov_term[k]
            )?;
        }
        Ok(())
    }
}

/// `W^π = exp(∫ (π/S) dS - ½ sum ∫ π^i π^j / (S^i S^j) d[S]^{ij})` and `V = W^π / W^μ`.
pub fn wealth(pi: &PortfolioPath, market: &MarketPath, partition: Option<&Partition>) -> Result<WealthRecord> {
    check_dim(pi.value(), market)?;
    let part = partition_for(market, partition)?;
    let d = market.dim();
    let pi_s = pi.against_prices(market)?;
    let inv = crate::rough::ControlledPath::identity(market.price_lift().clone()).reciprocal()?;
    let ratio = pi_s.product(&inv)?;
    let int_term = compensated_integral(&ratio, Some(&part))?;
    let half = ratio
        .value()
        .map(d * d, |_, r| outer(r, r).into_iter().map(|v| 0.5 * v).collect())?;
    let cov_term = young_integral(&half, market.price_bracket().path(), Some(&part))?;
    let n = market.len();
    let mut rec = WealthRecord {
        times: market.grid().times().to_vec(),
        wealth: Vec::with_capacity(n),
        relative: Vec::with_capacity(n),
        log_relative: Vec::with_capacity(n),
        int_term: int_term.data().to_vec(),
        cov_term: cov_term.data().to_vec(),
    };
    for k in 0..n {
        let log_w = rec.int_term[k] - rec.cov_term[k];
        let log_v = log_w - market.market_wealth()[k].ln();
        rec.wealth.push(log_w.exp());
        rec.log_relative.push(log_v);
        rec.relative.push(log_v.exp());
    }
    Ok(rec)
}

/// `log V^π` and its two terms.
#[derive(Clone, Debug)]
pub struct LogRelativeWealth {
    pub int_term: Vec<f64>,
    pub cov_term: Vec<f64>,
    pub log_relative: Vec<f64>,
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (0.019855071751231912, 0.050614268145188344),
    (0.10166676129318664, 0.11119051722668717),
    (0.2372337950418355, 0.15685332293894352),
    (0.4082826787521751, 0.18134189168918088),
    (0.5917173212478248, 0.18134189168918088),
    (0.7627662049581645, 0.15685332293894352),
    (0.8983332387068134, 0.11119051722668717),
    (0.9801449282487681, 0.050614268145188344),
];

/// `∫ r(x)·dx` along the piecewise-linear interpolation of `path`.
pub fn line_integral(field: &dyn VectorField, path: &SampledPath) -> Vec<f64> {
    let d = path.dim();
    let mut out = Vec::with_capacity(path.len());
    out.push(0.0);
    let mut acc = 0.0;
    let mut x = vec![0.0; d];
    for k in 0..path.len() - 1 {
        let a = path.value(k);
        let inc = path.increment(k, k + 1);
        let mut seg = 0.0;
        for (node, w) in GAUSS_LEGENDRE_8 {
            for i in 0..d {
                x[i] = a[i] + node * inc[i];
            }
            seg += w * crate::linalg::dot(&field.value(&x), &inc);
        }
        acc += seg;
        out.push(acc);
    }
    out
}

/// `log V^π = ∫ (π/μ) dμ - ½ sum ∫ π^i π^j dτ^μ_{ij}`.
///
/// On zero-bracket markets a portfolio given by a ratio field is integrated
/// exactly along the piecewise-linear weights; otherwise compensated sums
/// along `partition` are used.
pub fn log_relative_wealth(
    pi: &PortfolioPath,
    market: &MarketPath,
    partition: Option<&Partition>,
) -> Result<LogRelativeWealth> {
    check_dim(pi.value(), market)?;
    let part = partition_for(market, partition)?;
    let d = market.dim();
    let int_term = match (market.has_zero_bracket(), pi.ratio_field()) {
        (true, Some(field)) => line_integral(field.as_ref(), market.weights()),
        _ => {
            let ratio = pi.ratio(market)?;
            controlled_integral(&ratio, &market.weights_controlled(), Some(&part))?
                .data()
                .to_vec()
        }
    };
    let cov_term = if market.has_zero_bracket() {
        vec![0.0; market.len()]
    } else {
        let mu = market.weights();
        let piv = pi.value();
        let mut a = vec![0.0; d * d];
        let mut tau = vec![0.0; d * d];
        running_sum(&part, 1, |s, t, out| {
            market.covariance_increment(s, t, &mut a);
            tau_cell(mu.value(s), &a, &mut tau);
            let p = piv.value(s);
            out[0] = 0.5 * bilinear(p, &tau, p);
        })
    };
    let log_relative = int_term.iter().zip(&cov_term).map(|(a, b)| a - b).collect();
    Ok(LogRelativeWealth {
        int_term,
        cov_term,
        log_relative,
    })
}

/// Both sides of the master formula, level by level.
#[derive(Clone, Debug)]
pub struct MasterFormulaReport {
    pub gaps: ConvergenceReport,
    pub lhs_terminal: Vec<f64>,
    pub rhs_terminal: Vec<f64>,
}

/// `log G(μ_t)/G(μ_0) - ½ sum ∫ (∂²_{ij} G / G)(μ) μ^i μ^j dτ^μ_{ij}` along one partition.
pub fn master_formula_rhs(g: &dyn GeneratingFunction, market: &MarketPath, partition: &Partition) -> Result<Vec<f64>> {
    partition.check_fits(market.grid())?;
    let d = market.dim();
    let mu = market.weights();
    let mut a = vec![0.0; d * d];
    let mut tau = vec![0.0; d * d];
    let correction = if market.has_zero_bracket() {
        vec![0.0; market.len()]
    } else {
        running_sum(partition, 1, |s, t, out| {
            market.covariance_increment(s, t, &mut a);
            let x = mu.value(s);
            tau_cell(x, &a, &mut tau);
            let h = g.scaled_hessian(x);
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += h[i * d + j] * x[i] * x[j] * tau[i * d + j];
                }
            }
            out[0] = 0.5 * acc;
        })
    };
    let g0 = g.log_value(mu.value(0));
    Ok((0..market.len())
        .map(|k| g.log_value(mu.value(k)) - g0 - correction[k])
        .collect())
}

/// Sup-gap between `log V^{π^G}` and the master-formula right-hand side per level.
pub fn master_formula_check(
    g: std::sync::Arc<dyn GeneratingFunction>,
    market: &MarketPath,
    partitions: &[Partition],
    labels: &[u32],
) -> Result<MasterFormulaReport> {
    if partitions.is_empty() || partitions.len() != labels.len() {
        return Err(Error::Parameter("need one label per partition level".into()));
    }
    let pi = PortfolioPath::functionally_generated(g.clone(), market)?;
    let mut report = MasterFormulaReport {
        gaps: ConvergenceReport::default(),
        lhs_terminal: Vec::new(),
        rhs_terminal: Vec::new(),
    };
    for (part, &label) in partitions.iter().zip(labels) {
        let lhs = log_relative_wealth(&pi, market, Some(part))?.log_relative;
        let rhs = master_formula_rhs(g.as_ref(), market, part)?;
        let gap = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.gaps.push(label, part.mesh(market.grid()), gap);
        report.lhs_terminal.push(*lhs.last().unwrap());
        report.rhs_terminal.push(*rhs.last().unwrap());
    }
    Ok(report)
}

/// Relative wealth from `V_{k+1} = V_k (1 + r_k·Δμ + r'_k : A_k)` on the sampling grid.
///
/// The step is linear in `(r, r')`, so mixtures of portfolios mix wealth exactly.
pub fn discrete_wealth(pi: &PortfolioPath, market: &MarketPath) -> Result<Vec<f64>> {
    let ratio = pi.ratio(market)?;
    let lift = market.weight_lift();
    let d = market.dim();
    let n = market.len();
    let mut out = Vec::with_capacity(n);
    let mut v = 1.0;
    out.push(v);
    let mut area = vec![0.0; d * d];
    for k in 0..n - 1 {
        lift.area_into(k, k + 1, &mut area);
        let inc = lift.increment(k, k + 1);
        let step = crate::linalg::dot(ratio.value().value(k), &inc)
            + trace_pairing(ratio.derivative().value(k), &area, d);
        v *= 1.0 + step;
        if !(v > 0.0) {
            return Err(Error::Instability(format!("wealth recursion left (0, ∞) at node {}", k + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::functions::{ConstantGenerator, EntropyLike};
    use crate::path::TimeGrid;
    use crate::rough::LiftKind;
    use std::sync::Arc;

    fn market(kind: LiftKind) -> MarketPath {
        let grid = TimeGrid::dyadic(1.0, 8).unwrap();
        let prices = SampledPath::from_fn(grid, 3, |t| {
            vec![
                1.0 + 0.3 * (40.0 * t).sin(),
                1.2 + 0.2 * (31.0 * t).cos(),
                0.8 + 0.1 * (57.0 * t).sin(),
            ]
        })
        .unwrap();
        MarketPath::from_prices(prices, kind).unwrap()
    }

    #[test]
    fn market_relative_covariance_annihilates_weights() {
        let m = market(LiftKind::LeftPoint);
        let tau = relative_covariance(m.weights(), &m, None).unwrap();
        // τ^μ is built cell by cell, so check the increment identity on cells.
        for k in 0..m.len() - 1 {
            let inc = tau.increment(k, k + 1);
            let mu = m.weights().value(k);
            for i in 0..3 {
                let s: f64 = (0..3).map(|j| mu[j] * inc[i * 3 + j]).sum();
                assert!(s.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn excess_growth_two_ways() {
        let m = market(LiftKind::LeftPoint);
        let pi = PortfolioPath::constant(&[0.2, 0.3, 0.5], &m).unwrap();
        let a = excess_growth(pi.value(), &m, None).unwrap();
        let b = excess_growth_via_tau(pi.value(), &m, None).unwrap();
        assert!(a.sup_distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn market_portfolio_has_unit_relative_wealth() {
        let m = market(LiftKind::LeftPoint);
        let pi = PortfolioPath::market(&m).unwrap();
        let rec = wealth(&pi, &m, None).unwrap();
        // Compensated sums of log W^μ carry a discretisation error on one grid.
        for k in 0..m.len() {
            assert!(rec.log_relative[k].abs() < 1e-4, "{}", rec.log_relative[k]);
        }
        let lrw = log_relative_wealth(&pi, &m, None).unwrap();
        assert!(lrw.log_relative.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_generator_master_formula_is_exact() {
        let m = market(LiftKind::LeftPoint);
        let parts = crate::path::dyadic_partitions(m.grid(), 5..=6).unwrap();
        let r = master_formula_check(Arc::new(ConstantGenerator { dim: 3 }), &m, &parts, &[5, 6]).unwrap();
        assert!(r.gaps.gaps().iter().all(|g| *g < 1e-12));
    }

    #[test]
    fn zero_bracket_master_formula_is_exact() {
        let m = market(LiftKind::Geometric);
        let parts = crate::path::dyadic_partitions(m.grid(), 5..=6).unwrap();
        let g = Arc::new(EntropyLike { dim: 3, scale: 1.0 });
        let r = master_formula_check(g, &m, &parts, &[5, 6]).unwrap();
        assert!(r.gaps.gaps().iter().all(|g| *g < 1e-12), "{:?}", r.gaps);
    }
}
