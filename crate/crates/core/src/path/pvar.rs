use super::SampledPath;
use crate::linalg::{dist, norm};
use crate::{Error, Result};

/// Largest window handled by the exact quadratic-time dynamic programme.
pub const EXACT_NODE_LIMIT: usize = 20_000;

/// Result of a p-variation computation: exact when `lower == upper`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PVariation {
    pub lower: f64,
    pub upper: f64,
}

impl PVariation {
    fn exact(v: f64) -> Self {
        PVariation { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// The exact value, or the lower end of the bracket.
    pub fn value(&self) -> f64 {
        self.lower
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p-variation needs p >= 1, got {p}")));
    }
    Ok(())
}

/// `max` over partitions of `sum |xi(t_k, t_{k+1})|^p` on local nodes `0..n`.
///
/// `xi(i, j)` must return the norm of the increment between nodes `i < j`.
pub fn pvar_dp(n: usize, p: f64, xi: impl Fn(usize, usize) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut best = vec![0.0_f64; n];
    for j in 1..n {
        let mut m = 0.0_f64;
        for i in 0..j {
            let v = best[i] + xi(i, j).powf(p);
            if v > m {
                m = v;
            }
        }
        best[j] = m;
    }
    best[n - 1]
}

/// The dynamic programme started at local node 0, returning every prefix value.
pub fn pvar_dp_prefixes(n: usize, p: f64, xi: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut best = vec![0.0_f64; n];
    for j in 1..n {
        let mut m = 0.0_f64;
        for i in 0..j {
            let v = best[i] + xi(i, j).powf(p);
            if v > m {
                m = v;
            }
        }
        best[j] = m;
    }
    best
}

fn window_indices(path: &SampledPath, window: Option<(f64, f64)>) -> Result<(usize, usize)> {
    match window {
        None => Ok((0, path.len() - 1)),
        Some((s, t)) => {
            let a = path.grid().index_of(s)?;
            let b = path.grid().index_of(t)?;
            if a > b {
                return Err(Error::Parameter(format!("window [{s}, {t}] is reversed")));
            }
            Ok((a, b))
        }
    }
}

fn coarse_nodes(a: usize, b: usize) -> Vec<usize> {
    let n = b - a + 1;
    let stride = n.div_ceil(EXACT_NODE_LIMIT - 1).max(1);
    let mut nodes: Vec<usize> = (a..=b).step_by(stride).collect();
    if *nodes.last().unwrap() != b {
        nodes.push(b);
    }
    nodes
}

/// `||S||_{p,[s,t]}^p`, the p-th power of the p-variation.
///
/// Windows beyond [`EXACT_NODE_LIMIT`] nodes get a bracket: the exact value on
/// an evenly thinned grid from below, and `diam^(p-1) * total variation` from above.
pub fn p_variation(path: &SampledPath, p: f64, window: Option<(f64, f64)>) -> Result<PVariation> {
    check_p(p)?;
    let (a, b) = window_indices(path, window)?;
    p_variation_nodes(path, p, a, b)
}

pub fn p_variation_nodes(path: &SampledPath, p: f64, a: usize, b: usize) -> Result<PVariation> {
    check_p(p)?;
    if b <= a {
        return Ok(PVariation::exact(0.0));
    }
    if b - a < EXACT_NODE_LIMIT {
        let v = pvar_dp(b - a + 1, p, |i, j| dist(path.value(a + i), path.value(a + j)));
        return Ok(PVariation::exact(v));
    }
    let nodes = coarse_nodes(a, b);
    let lower = pvar_dp(nodes.len(), p, |i, j| {
        dist(path.value(nodes[i]), path.value(nodes[j]))
    });
    let mut total = 0.0;
    let mut radius = 0.0_f64;
    for k in a..b {
        total += dist(path.value(k), path.value(k + 1));
        radius = radius.max(dist(path.value(a), path.value(k + 1)));
    }
    let upper = (2.0 * radius).powf(p - 1.0) * total;
    Ok(PVariation {
        lower,
        upper: upper.max(lower),
    })
}

/// `||S||_{p,[s,t]}`.
pub fn p_variation_norm(path: &SampledPath, p: f64, window: Option<(f64, f64)>) -> Result<PVariation> {
    let v = p_variation(path, p, window)?;
    Ok(PVariation {
        lower: v.lower.powf(1.0 / p),
        upper: v.upper.powf(1.0 / p),
    })
}

/// `||Xi||_{p}` over node indices `a..=b` for a two-parameter process.
///
/// `xi(i, j)` is the increment for global node indices `i < j`, returned as a
/// flat vector whose Euclidean norm is used. Beyond the exact limit only the
/// thinned lower bound is available and the upper end is infinite.
pub fn two_param_p_variation(
    a: usize,
    b: usize,
    p: f64,
    xi: impl Fn(usize, usize) -> Vec<f64>,
) -> Result<PVariation> {
    check_p(p)?;
    if b <= a {
        return Ok(PVariation::exact(0.0));
    }
    if b - a < EXACT_NODE_LIMIT {
        let v = pvar_dp(b - a + 1, p, |i, j| norm(&xi(a + i, a + j)));
        return Ok(PVariation::exact(v.powf(1.0 / p)));
    }
    let nodes = coarse_nodes(a, b);
    let lower = pvar_dp(nodes.len(), p, |i, j| norm(&xi(nodes[i], nodes[j])));
    Ok(PVariation {
        lower: lower.powf(1.0 / p),
        upper: f64::INFINITY,
    })
}
