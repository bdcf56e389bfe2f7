use super::pvar::{pvar_dp, pvar_dp_prefixes};
use super::SampledPath;
use crate::linalg::dist;
use crate::{Error, Result};

/// `c(s, t) = scale * ||S||_{p,[s,t]}^p` evaluated on grid node indices.
#[derive(Clone, Debug)]
pub struct ControlFunction {
    path: SampledPath,
    p: f64,
    scale: f64,
}

impl ControlFunction {
    pub fn new(path: SampledPath, p: f64, scale: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Parameter(format!("control exponent must be >= 1, got {p}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(format!("control scale must be positive, got {scale}")));
        }
        Ok(ControlFunction { path, p, scale })
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, s: usize, t: usize) -> f64 {
        if t <= s {
            return 0.0;
        }
        let path = &self.path;
        self.scale * pvar_dp(t - s + 1, self.p, |i, j| dist(path.value(s + i), path.value(s + j)))
    }

    /// `c(s, t)` for every `t >= s`, indexed by `t - s`.
    pub fn row(&self, s: usize) -> Vec<f64> {
        let path = &self.path;
        pvar_dp_prefixes(path.len() - s, self.p, |i, j| {
            dist(path.value(s + i), path.value(s + j))
        })
        .into_iter()
        .map(|v| self.scale * v)
        .collect()
    }

    /// Checks `c(s,u) + c(u,t) <= c(s,t)` on every node triple.
    ///
    /// Cubic in the grid size, so intended for short paths.
    pub fn check_superadditive(&self, tol: f64) -> Result<()> {
        let n = self.path.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|s| self.row(s)).collect();
        for s in 0..n {
            for u in s..n {
                for t in u..n {
                    let lhs = rows[s][u - s] + rows[u][t - u];
                    let rhs = rows[s][t - s];
                    if lhs > rhs + tol {
                        return Err(Error::NotAControl(format!(
                            "c({s},{u}) + c({u},{t}) = {lhs} exceeds c({s},{t}) = {rhs}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
