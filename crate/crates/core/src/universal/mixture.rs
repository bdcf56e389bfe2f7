use rayon::prelude::*;

use super::clock::growth_clock_trajectory;
use super::family::FunctionFamily;
use crate::linalg::pairwise_sum;
use crate::market::{discrete_wealth, MarketPath, PortfolioPath};
use crate::path::SampledPath;
use crate::rough::{ControlledPath, DiscreteMeasure};
use crate::{Error, Result};

fn check_measure(family: &FunctionFamily, measure: &DiscreteMeasure) -> Result<()> {
    if measure.len() != family.len() {
        return Err(Error::Mixture(format!(
            "{} weights for {} members",
            measure.len(),
            family.len()
        )));
    }
    Ok(())
}

/// Relative wealth of every member from the shared discrete recursion.
pub fn member_wealths(family: &FunctionFamily, market: &MarketPath) -> Result<Vec<Vec<f64>>> {
    (0..family.len())
        .into_par_iter()
        .map(|i| discrete_wealth(&family.member(i, market)?, market))
        .collect()
}

/// The wealth-weighted mixture of a family together with the member wealths.
#[derive(Clone, Debug)]
pub struct UniversalPortfolio {
    pub portfolio: PortfolioPath,
    pub member_wealth: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl UniversalPortfolio {
    /// `sum_i w_i V^i` at every node, summed in member order.
    pub fn mixed_wealth(&self) -> Vec<f64> {
        mixed_wealth(&self.member_wealth, &self.weights)
    }
}

pub(crate) fn mixed_wealth(member_wealth: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = member_wealth[0].len();
    let mut terms = vec![0.0; weights.len()];
    (0..n)
        .map(|k| {
            for (i, w) in weights.iter().enumerate() {
                terms[i] = w * member_wealth[i][k];
            }
            pairwise_sum(&terms)
        })
        .collect()
}

/// `π^ν_t = sum_i w_i V^i_t π^i_t / sum_i w_i V^i_t`, derivatives mixed alike.
pub fn universal_portfolio(
    family: &FunctionFamily,
    measure: &DiscreteMeasure,
    market: &MarketPath,
) -> Result<UniversalPortfolio> {
    check_measure(family, measure)?;
    let members: Vec<PortfolioPath> = (0..family.len())
        .into_par_iter()
        .map(|i| family.member(i, market))
        .collect::<Result<_>>()?;
    let member_wealth: Vec<Vec<f64>> = members
        .par_iter()
        .map(|pi| discrete_wealth(pi, market))
        .collect::<Result<_>>()?;
    let weights = measure.weights().to_vec();
    let portfolio = mix(&members, &member_wealth, &weights, market)?;
    Ok(UniversalPortfolio {
        portfolio,
        member_wealth,
        weights,
    })
}

fn mix(members: &[PortfolioPath], wealth: &[Vec<f64>], weights: &[f64], market: &MarketPath) -> Result<PortfolioPath> {
    let d = market.dim();
    let n = market.len();
    let mut value = vec![0.0; n * d];
    let mut derivative = vec![0.0; n * d * d];
    let mut mass = vec![0.0; weights.len()];
    for k in 0..n {
        for (i, w) in weights.iter().enumerate() {
            mass[i] = w * wealth[i][k];
        }
        let total = pairwise_sum(&mass);
        for (i, pi) in members.iter().enumerate() {
            let omega = mass[i] / total;
            if omega == 0.0 {
                continue;
            }
            for (acc, v) in value[k * d..(k + 1) * d].iter_mut().zip(pi.value().value(k)) {
                *acc += omega * v;
            }
            for (acc, v) in derivative[k * d * d..(k + 1) * d * d]
                .iter_mut()
                .zip(pi.derivative().value(k))
            {
                *acc += omega * v;
            }
        }
    }
    let grid = market.grid().clone();
    PortfolioPath::new(ControlledPath::new(
        SampledPath::new(grid.clone(), d, value)?,
        SampledPath::new(grid, d * d, derivative)?,
        market.weight_lift().clone(),
    )?)
}

/// Max over the grid of `|V^{π^ν} - sum_i w_i V^i|`.
pub fn mixture_wealth_identity(family: &FunctionFamily, measure: &DiscreteMeasure, market: &MarketPath) -> Result<f64> {
    let u = universal_portfolio(family, measure, market)?;
    let direct = discrete_wealth(&u.portfolio, market)?;
    Ok(direct
        .iter()
        .zip(u.mixed_wealth())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// The best member at one horizon, with an optional local refinement.
#[derive(Clone, Debug, PartialEq)]
pub struct BestMember {
    pub index: usize,
    pub log_wealth: f64,
    pub refined: Option<RefinedMember>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinedMember {
    pub coefficients: Vec<f64>,
    pub log_wealth: f64,
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    // Strict comparison keeps the lowest index on ties.
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// `argmax_i V^i_T`; with `refine`, one coordinate-descent pass with step halving
/// over the winner's coefficients, staying under the family cap.
pub fn best_retrospective(family: &FunctionFamily, market: &MarketPath, t: f64, refine: bool) -> Result<BestMember> {
    let market = market.up_to(t)?;
    let wealth = member_wealths(family, &market)?;
    let (index, log_wealth) = argmax(wealth.iter().map(|v| v.last().unwrap().ln()));
    let refined = if refine {
        Some(refine_member(family, &market, &family.coefficients[index], log_wealth)?)
    } else {
        None
    };
    Ok(BestMember {
        index,
        log_wealth,
        refined,
    })
}

fn terminal_log_wealth(family: &FunctionFamily, market: &MarketPath, c: &[f64]) -> f64 {
    family
        .portfolio(c, market)
        .and_then(|pi| discrete_wealth(&pi, market))
        .map(|v| v.last().unwrap().ln())
        .unwrap_or(f64::NEG_INFINITY)
}

fn refine_member(family: &FunctionFamily, market: &MarketPath, start: &[f64], start_value: f64) -> Result<RefinedMember> {
    let mut best = start.to_vec();
    let mut best_value = start_value;
    let scale = start.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(family.k_cap / 4.0);
    for i in 0..best.len() {
        let mut step = scale / 2.0;
        for _ in 0..4 {
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut trial = best.clone();
                trial[i] += sign * step;
                if !family.within_cap(&trial) {
                    continue;
                }
                let v = terminal_log_wealth(family, market, &trial);
                if v > best_value {
                    best = trial;
                    best_value = v;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
    }
    Ok(RefinedMember {
        coefficients: best,
        log_wealth: best_value,
    })
}

/// One row of the Cover-gap experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverRow {
    pub t: f64,
    pub log_best: f64,
    pub log_universal: f64,
    pub lambda: f64,
    pub gap_scaled: f64,
    pub winner: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverGapReport {
    pub rows: Vec<CoverRow>,
    /// Least-squares slope of the scaled gap against `T`.
    pub slope: f64,
    /// Terminal scaled gap below the initial one and negative slope.
    pub decreasing: bool,
}

impl CoverGapReport {
    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "T,logVstar,logVuniversal,lambdaT,gap_scaled,winner")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t, r.log_best, r.log_universal, r.lambda, r.gap_scaled, r.winner
            )?;
        }
        if !self.decreasing {
            writeln!(out, "WARN,,,,,")?;
        }
        Ok(())
    }

    /// The scaled gap as a path over the requested horizons.
    pub fn as_path(&self) -> Result<SampledPath> {
        let grid = crate::path::TimeGrid::new(self.rows.iter().map(|r| r.t).collect())?;
        SampledPath::new(grid, 1, self.rows.iter().map(|r| r.gap_scaled).collect())
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Rows for the Cover-gap curve from precomputed member wealths.
pub fn cover_gap_from_wealth(
    member_wealth: &[Vec<f64>],
    measure: &DiscreteMeasure,
    market: &MarketPath,
    horizons: &[f64],
) -> Result<CoverGapReport> {
    if member_wealth.len() != measure.len() {
        return Err(Error::Mixture("one weight per member required".into()));
    }
    let clocks = growth_clock_trajectory(market, horizons)?;
    let universal = mixed_wealth(member_wealth, measure.weights());
    let mut rows = Vec::with_capacity(horizons.len());
    for clock in clocks {
        let k = market.grid().index_of(clock.t)?;
        let (winner, log_best) = argmax(member_wealth.iter().map(|v| v[k].ln()));
        let log_universal = universal[k].ln();
        let gap = log_best - log_universal;
        let gap_scaled = if clock.lambda > 0.0 { gap / clock.lambda } else { 0.0 };
        rows.push(CoverRow {
            t: clock.t,
            log_best,
            log_universal,
            lambda: clock.lambda,
            gap_scaled,
            winner,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gap_scaled).collect();
    let slope = least_squares_slope(&xs, &ys);
    let decreasing = ys.len() >= 2 && ys[ys.len() - 1] < ys[0] && slope < 0.0;
    Ok(CoverGapReport { rows, slope, decreasing })
}

/// `T -> (log V*_T - log V^{π^ν}_T) / λ(T)` at each requested horizon.
pub fn cover_gap_trajectory(
    family: &FunctionFamily,
    measure: &DiscreteMeasure,
    market: &MarketPath,
    horizons: &[f64],
) -> Result<CoverGapReport> {
    check_measure(family, measure)?;
    let wealth = member_wealths(family, market)?;
    cover_gap_from_wealth(&wealth, measure, market, horizons)
}
