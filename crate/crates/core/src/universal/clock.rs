use crate::linalg::{dist, norm};
use crate::market::{MarketPath, PortfolioPath};
use crate::path::pvar::pvar_dp_prefixes;
use crate::path::ControlFunction;
use crate::rough::ControlledPath;
use crate::{Error, Result};

/// Prefix dynamic programmes beyond this many nodes run on an evenly thinned grid.
pub const CLOCK_NODE_LIMIT: usize = 8192;

/// Pairwise admissibility checks beyond this many nodes use an evenly thinned sample.
pub const ADMISSIBILITY_NODE_LIMIT: usize = 400;

/// Nodes `0..=last`, thinned to at most `limit` while keeping both ends.
pub(crate) fn thinned_nodes(last: usize, limit: usize) -> Vec<usize> {
    let n = last + 1;
    let stride = n.div_ceil(limit.max(2) - 1).max(1);
    let mut nodes: Vec<usize> = (0..=last).step_by(stride).collect();
    if *nodes.last().unwrap() != last {
        nodes.push(last);
    }
    nodes
}

/// Growth-clock quantities on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClockValues {
    pub t: f64,
    /// `||μ||_{p,[0,T]}`
    pub weight_variation: f64,
    /// `||𝕄||_{p/2,[0,T]}` of the weights lift.
    pub area_variation: f64,
    /// `sum_i [μ]^{ii}_T`
    pub bracket_trace: f64,
    pub xi: f64,
    /// `(1 + ||μ||_p^2) ξ_T`
    pub lambda: f64,
    /// False when the variations are lower bounds from a thinned grid.
    pub exact: bool,
}

/// Clock values at each of `times`, which must be grid nodes.
pub fn growth_clock_trajectory(market: &MarketPath, times: &[f64]) -> Result<Vec<ClockValues>> {
    let grid = market.grid();
    let idx = times.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
    let last = idx.iter().copied().max().unwrap_or(0);
    let nodes = thinned_nodes(last, CLOCK_NODE_LIMIT);
    let exact = nodes.len() == last + 1;
    let lift = market.weight_lift();
    let weights = market.weights();
    let p = lift.p();
    let mu_prefix = pvar_dp_prefixes(nodes.len(), p, |i, j| {
        dist(weights.value(nodes[i]), weights.value(nodes[j]))
    });
    let area_prefix = pvar_dp_prefixes(nodes.len(), p / 2.0, |i, j| norm(&lift.area(nodes[i], nodes[j])));
    let bracket = market.weight_bracket();
    let d = market.dim();
    idx.iter()
        .zip(times)
        .map(|(&k, &t)| {
            // Largest thinned node not after k; exact grids hit k itself.
            let pos = match nodes.binary_search(&k) {
                Ok(p) => p,
                Err(p) => p - 1,
            };
            let weight_variation = mu_prefix[pos].powf(1.0 / p);
            let area_variation = area_prefix[pos].powf(2.0 / p);
            let b = bracket.value(k);
            let bracket_trace: f64 = (0..d).map(|i| b[i * d + i]).sum();
            let xi = weight_variation + area_variation + bracket_trace;
            Ok(ClockValues {
                t,
                weight_variation,
                area_variation,
                bracket_trace,
                xi,
                lambda: (1.0 + weight_variation * weight_variation) * xi,
                exact: exact || nodes[pos] == k,
            })
        })
        .collect()
}

pub fn growth_clock(market: &MarketPath, t: f64) -> Result<ClockValues> {
    Ok(growth_clock_trajectory(market, &[t])?[0])
}

/// `q' = q + 1/2` and `r'` from `1/r' = 1/p + 1/q'`.
pub fn default_exponents(p: f64, q: f64) -> (f64, f64) {
    let q_prime = q + 0.5;
    (q_prime, 1.0 / (1.0 / p + 1.0 / q_prime))
}

/// The seminorm of a ratio path on `[0, t_k]` for every node `k`.
pub fn ratio_seminorm_prefixes(ratio: &ControlledPath, q_prime: f64) -> Result<Vec<f64>> {
    let p = ratio.lift().p();
    if !(q_prime > ratio.q()) {
        return Err(Error::Parameter(format!(
            "q' = {q_prime} must exceed q = {}",
            ratio.q()
        )));
    }
    let r_prime = 1.0 / (1.0 / p + 1.0 / q_prime);
    let last = ratio.len() - 1;
    let nodes = thinned_nodes(last, CLOCK_NODE_LIMIT);
    let derivative = ratio.derivative();
    let initial = norm(ratio.value().value(0)) + norm(derivative.value(0));
    let deriv_prefix = pvar_dp_prefixes(nodes.len(), q_prime, |i, j| {
        dist(derivative.value(nodes[i]), derivative.value(nodes[j]))
    });
    let rem_prefix = pvar_dp_prefixes(nodes.len(), r_prime, |i, j| norm(&ratio.remainder(nodes[i], nodes[j])));
    let mut out = Vec::with_capacity(last + 1);
    let mut pos = 0;
    for k in 0..=last {
        while pos + 1 < nodes.len() && nodes[pos + 1] <= k {
            pos += 1;
        }
        out.push(initial + deriv_prefix[pos].powf(1.0 / q_prime) + rem_prefix[pos].powf(1.0 / r_prime));
    }
    Ok(out)
}

/// `|π_0/μ_0| + |(π/μ)'_0| + ||(π/μ)'||_{q',[0,T]} + ||R^{π/μ}||_{r',[0,T]}`.
pub fn seminorm(pi: &PortfolioPath, market: &MarketPath, t: f64, q_prime: f64) -> Result<f64> {
    let k = market.grid().index_of(t)?;
    let ratio = pi.ratio(market)?;
    let ratio = ratio.truncate_with(std::sync::Arc::new(market.weight_lift().truncate(k)?))?;
    Ok(*ratio_seminorm_prefixes(&ratio, q_prime)?.last().unwrap())
}

/// Membership test for the admissible set with bound `M` and control `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub initial_bound: f64,
    /// `sup |(π/μ)'_{s,t}|^q / c(s,t)`
    pub derivative_ratio: f64,
    /// `sup |R^{π/μ}_{s,t}|^r / c(s,t)`
    pub remainder_ratio: f64,
    pub m_bound: f64,
    pub sampled_nodes: usize,
    pub admissible: bool,
}

fn ratio_of(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

pub fn admissibility_check(
    pi: &PortfolioPath,
    market: &MarketPath,
    m_bound: f64,
    control: &ControlFunction,
) -> Result<AdmissibilityReport> {
    if control.path().len() != market.len() {
        return Err(Error::Dimension("control must live on the market grid".into()));
    }
    let ratio = pi.ratio(market)?;
    let (q, r) = (ratio.q(), ratio.r());
    let derivative = ratio.derivative();
    let initial_bound = norm(ratio.value().value(0)) + norm(derivative.value(0));
    let nodes = thinned_nodes(market.len() - 1, ADMISSIBILITY_NODE_LIMIT);
    let cpath = control.path();
    let mut derivative_ratio = 0.0_f64;
    let mut remainder_ratio = 0.0_f64;
    for a in 0..nodes.len() {
        let row = pvar_dp_prefixes(nodes.len() - a, control.p(), |i, j| {
            dist(cpath.value(nodes[a + i]), cpath.value(nodes[a + j]))
        });
        for b in a + 1..nodes.len() {
            let (s, t) = (nodes[a], nodes[b]);
            let c = control.scale() * row[b - a];
            let dv = dist(derivative.value(s), derivative.value(t)).powf(q);
            let rv = norm(&ratio.remainder(s, t)).powf(r);
            derivative_ratio = derivative_ratio.max(ratio_of(dv, c));
            remainder_ratio = remainder_ratio.max(ratio_of(rv, c));
        }
    }
    Ok(AdmissibilityReport {
        initial_bound,
        derivative_ratio,
        remainder_ratio,
        m_bound,
        sampled_nodes: nodes.len(),
        admissible: initial_bound <= m_bound && derivative_ratio <= 1.0 && remainder_ratio <= 1.0,
    })
}

/// Schedule and constants for the metric on portfolios.
#[derive(Clone, Debug)]
pub struct MetricSpec<'a> {
    pub control: &'a ControlFunction,
    pub m_bound: f64,
    /// Defaults to `q + 1/2` when `None`.
    pub q_prime: Option<f64>,
    /// `β_N`; defaults to `N`.
    pub beta: fn(f64) -> f64,
}

fn identity_schedule(n: f64) -> f64 {
    n
}

impl<'a> MetricSpec<'a> {
    pub fn new(control: &'a ControlFunction, m_bound: f64) -> Self {
        MetricSpec {
            control,
            m_bound,
            q_prime: None,
            beta: identity_schedule,
        }
    }
}

/// `sup_N p_N(π - φ) / (β_N γ_N)` over integer horizons `N` on the grid
/// (or the terminal time alone when the horizon is below 1).
pub fn metric_d_beta(pi: &PortfolioPath, phi: &PortfolioPath, market: &MarketPath, spec: &MetricSpec) -> Result<f64> {
    let a = pi.ratio(market)?;
    let b = phi.ratio(market)?;
    let diff = ControlledPath::linear_combination(&[&a, &b], &[1.0, -1.0])?;
    let (q, r) = (diff.q(), diff.r());
    let q_prime = spec.q_prime.unwrap_or(q + 0.5);
    let prefixes = ratio_seminorm_prefixes(&diff, q_prime)?;
    let grid = market.grid();
    let horizon = grid.horizon();
    let horizons: Vec<f64> = if horizon < 1.0 {
        vec![horizon]
    } else {
        (1..=horizon.floor() as usize).map(|n| n as f64).collect()
    };
    let mut best = 0.0_f64;
    for n in horizons {
        let k = grid.floor_index(n);
        let c = spec.control.eval(0, k);
        let gamma = 1.0 + spec.m_bound + c.powf(1.0 / q) + c.powf(1.0 / r);
        best = best.max(prefixes[k] / ((spec.beta)(n) * gamma));
    }
    Ok(best)
}
