use std::sync::Arc;

use super::RoughLift;
use crate::linalg::max_abs;
use crate::path::SampledPath;
use crate::{Error, Result};

/// A path `F` in `R^m` with Gubinelli derivative `F'` in `R^{m x d}` against a lift.
#[derive(Clone, Debug)]
pub struct ControlledPath {
    value: SampledPath,
    derivative: SampledPath,
    lift: Arc<RoughLift>,
    q: f64,
}

impl ControlledPath {
    pub fn new(value: SampledPath, derivative: SampledPath, lift: Arc<RoughLift>) -> Result<Self> {
        let d = lift.dim();
        let m = value.dim();
        if value.grid() != lift.grid() || derivative.grid() != lift.grid() {
            return Err(Error::Dimension(
                "controlled path must live on the grid of its lift".into(),
            ));
        }
        if derivative.dim() != m * d {
            return Err(Error::Dimension(format!(
                "derivative of a {m}-dimensional path against a {d}-dimensional lift needs {} entries, got {}",
                m * d,
                derivative.dim()
            )));
        }
        let q = lift.p();
        Ok(ControlledPath {
            value,
            derivative,
            lift,
            q,
        })
    }

    /// `Y = f(S)` with `Y' = Df(S)`, both from analytic evaluators.
    pub fn from_function(
        lift: Arc<RoughLift>,
        m: usize,
        f: impl Fn(&[f64]) -> Vec<f64>,
        df: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let d = lift.dim();
        let value = lift.path().map(m, |_, x| f(x))?;
        let derivative = lift.path().map(m * d, |_, x| df(x))?;
        ControlledPath::new(value, derivative, lift)
    }

    /// The driving path itself, with identity derivative.
    pub fn identity(lift: Arc<RoughLift>) -> Self {
        let d = lift.dim();
        let derivative = lift
            .path()
            .map(d * d, |_, _| crate::linalg::identity(d))
            .expect("identity has the right shape");
        ControlledPath::new(lift.path().clone(), derivative, lift).expect("shapes agree")
    }

    pub fn constant(lift: Arc<RoughLift>, value: &[f64]) -> Self {
        let d = lift.dim();
        let m = value.len();
        let v = lift.path().map(m, |_, _| value.to_vec()).expect("shape");
        let dv = lift.path().map(m * d, |_, _| vec![0.0; m * d]).expect("shape");
        ControlledPath::new(v, dv, lift).expect("shapes agree")
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        if !(q >= 2.0) {
            return Err(Error::Parameter(format!("q must be at least 2, got {q}")));
        }
        self.q = q;
        Ok(self)
    }

    pub fn value(&self) -> &SampledPath {
        &self.value
    }

    pub fn derivative(&self) -> &SampledPath {
        &self.derivative
    }

    pub fn lift(&self) -> &Arc<RoughLift> {
        &self.lift
    }

    pub fn dim(&self) -> usize {
        self.value.dim()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `r` with `1/r = 1/p + 1/q`.
    pub fn r(&self) -> f64 {
        1.0 / (1.0 / self.lift.p() + 1.0 / self.q)
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn same_reference(&self, other: &ControlledPath) -> bool {
        Arc::ptr_eq(&self.lift, &other.lift)
    }

    /// `R_{s,t} = F_{s,t} - F'_s S_{s,t}`.
    pub fn remainder(&self, s: usize, t: usize) -> Vec<f64> {
        let d = self.lift.dim();
        let inc = self.lift.increment(s, t);
        let fp = self.derivative.value(s);
        let (fs, ft) = (self.value.value(s), self.value.value(t));
        (0..self.dim())
            .map(|i| {
                let lin: f64 = (0..d).map(|j| fp[i * d + j] * inc[j]).sum();
                ft[i] - fs[i] - lin
            })
            .collect()
    }

    fn check_same(&self, other: &ControlledPath) -> Result<()> {
        if !self.same_reference(other) {
            return Err(Error::ReferenceMismatch);
        }
        Ok(())
    }

    /// Componentwise product; a scalar factor is broadcast over the other.
    ///
    /// `((FG)')^{ij} = F'^{ij} G^i + F^i G'^{ij}`.
    pub fn product(&self, other: &ControlledPath) -> Result<ControlledPath> {
        self.check_same(other)?;
        let (m1, m2) = (self.dim(), other.dim());
        let m = if m1 == m2 || m2 == 1 {
            m1
        } else if m1 == 1 {
            m2
        } else {
            return Err(Error::Dimension(format!("cannot multiply dimensions {m1} and {m2}")));
        };
        let d = self.lift.dim();
        let idx = |mi: usize, i: usize| if mi == 1 { 0 } else { i };
        let value = self.value.map(m, |k, f| {
            let g = other.value.value(k);
            (0..m).map(|i| f[idx(m1, i)] * g[idx(m2, i)]).collect()
        })?;
        let derivative = self.value.map(m * d, |k, f| {
            let g = other.value.value(k);
            let fp = self.derivative.value(k);
            let gp = other.derivative.value(k);
            let mut out = vec![0.0; m * d];
            for i in 0..m {
                let (a, b) = (idx(m1, i), idx(m2, i));
                for j in 0..d {
                    out[i * d + j] = fp[a * d + j] * g[b] + f[a] * gp[b * d + j];
                }
            }
            out
        })?;
        ControlledPath::new(value, derivative, self.lift.clone())
    }

    /// Componentwise `1 / F` with derivative `-F' / F^2`.
    pub fn reciprocal(&self) -> Result<ControlledPath> {
        if let Some(k) = self.value.data().iter().position(|&v| v == 0.0) {
            return Err(Error::Domain(format!(
                "cannot invert a path vanishing at node {}",
                k / self.dim()
            )));
        }
        let d = self.lift.dim();
        let m = self.dim();
        let value = self.value.map(m, |_, f| f.iter().map(|v| 1.0 / v).collect())?;
        let derivative = self.value.map(m * d, |k, f| {
            let fp = self.derivative.value(k);
            let mut out = vec![0.0; m * d];
            for i in 0..m {
                for j in 0..d {
                    out[i * d + j] = -fp[i * d + j] / (f[i] * f[i]);
                }
            }
            out
        })?;
        ControlledPath::new(value, derivative, self.lift.clone())
    }

    /// `sum_k w_k Y_k` with derivatives mixed by the same weights.
    pub fn linear_combination(paths: &[&ControlledPath], weights: &[f64]) -> Result<ControlledPath> {
        let first = paths
            .first()
            .ok_or_else(|| Error::Parameter("empty linear combination".into()))?;
        if weights.len() != paths.len() {
            return Err(Error::Dimension("one weight per path required".into()));
        }
        for p in paths {
            first.check_same(p)?;
            if p.dim() != first.dim() {
                return Err(Error::Dimension("paths in a combination must share a dimension".into()));
            }
        }
        let mix = |get: &dyn Fn(&ControlledPath) -> &SampledPath| -> Result<SampledPath> {
            let base = get(first);
            let mut data = vec![0.0; base.data().len()];
            for (p, w) in paths.iter().zip(weights) {
                for (acc, v) in data.iter_mut().zip(get(p).data()) {
                    *acc += w * v;
                }
            }
            SampledPath::new(base.grid().clone(), base.dim(), data)
        };
        let value = mix(&|p| &p.value)?;
        let derivative = mix(&|p| &p.derivative)?;
        ControlledPath::new(value, derivative, first.lift.clone())
    }

    /// The path restricted to nodes `0..=last`, controlled by the truncated lift.
    pub fn truncate_with(&self, lift: Arc<RoughLift>) -> Result<ControlledPath> {
        let last = lift.len() - 1;
        ControlledPath::new(self.value.truncate(last)?, self.derivative.truncate(last)?, lift)
    }
}

/// Largest violation of `R^{FG} = R^F G_s + F_s R^G + F_{s,t} G_{s,t}` over the given pairs.
pub fn product_remainder_residual(
    f: &ControlledPath,
    g: &ControlledPath,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::Dimension("product remainder needs equal dimensions".into()));
    }
    let fg = f.product(g)?;
    let mut worst = 0.0_f64;
    for (s, t) in pairs {
        let lhs = fg.remainder(s, t);
        let rf = f.remainder(s, t);
        let rg = g.remainder(s, t);
        let (fs, gs) = (f.value.value(s), g.value.value(s));
        let fi = f.value.increment(s, t);
        let gi = g.value.increment(s, t);
        let r: Vec<f64> = (0..f.dim())
            .map(|i| lhs[i] - (rf[i] * gs[i] + fs[i] * rg[i] + fi[i] * gi[i]))
            .collect();
        worst = worst.max(max_abs(&r));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;

    fn lift() -> Arc<RoughLift> {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let path = SampledPath::from_fn(grid, 2, |t| vec![(5.0 * t).sin(), (3.0 * t).cos()]).unwrap();
        Arc::new(RoughLift::left_point(path, 2.5).unwrap())
    }

    #[test]
    fn product_remainder_identity_is_exact() {
        let l = lift();
        let f = ControlledPath::from_function(
            l.clone(),
            2,
            |x| vec![x[0].exp(), x[0] * x[1]],
            |x| vec![x[0].exp(), 0.0, x[1], x[0]],
        )
        .unwrap();
        let g = ControlledPath::identity(l);
        let pairs = (0..16).flat_map(|s| (s..17).map(move |t| (s, t)));
        assert!(product_remainder_residual(&f, &g, pairs).unwrap() < 1e-14);
    }

    #[test]
    fn mismatched_lifts_are_rejected() {
        let a = ControlledPath::identity(lift());
        let b = ControlledPath::identity(lift());
        assert!(matches!(a.product(&b), Err(Error::ReferenceMismatch)));
    }

    #[test]
    fn reciprocal_derivative_is_analytic() {
        let l = lift();
        let f = ControlledPath::from_function(
            l.clone(),
            1,
            |x| vec![2.0 + x[0]],
            |_| vec![1.0, 0.0],
        )
        .unwrap();
        let inv = f.reciprocal().unwrap();
        let x = l.path().value(3);
        let expected = -1.0 / ((2.0 + x[0]) * (2.0 + x[0]));
        assert!((inv.derivative().value(3)[0] - expected).abs() < 1e-15);
    }
}
