use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Drift family of a simplex diffusion sharing `c^{ij}(x) = γ x^i (δ_ij - x^j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `B^{ij} = (1+α)/2 (1 - d δ_ij)`.
    VolStabilized { alpha: f64, dim: usize },
    /// Three assets with `B = [[-p, q, r], [p, -q, 0], [0, 0, -r]]`.
    Polynomial { p: f64, q: f64, r: f64 },
    /// Arbitrary drift matrix, row-major.
    Custom { dim: usize, drift: Vec<f64> },
}

/// `dμ = c(μ) λ(μ) dt + sqrt(c(μ)) dW` with `c λ = B μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub gamma: f64,
    /// Additive offset `C` of `λ` along the kernel of `c`.
    #[serde(default)]
    pub offset: f64,
}

impl DiffusionSpec {
    pub fn vol_stabilized(alpha: f64, gamma: f64, offset: f64, dim: usize) -> Result<Self> {
        let spec = DiffusionSpec {
            kind: ModelKind::VolStabilized { alpha, dim },
            gamma,
            offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(p: f64, q: f64, r: f64, gamma: f64, offset: f64) -> Result<Self> {
        let spec = DiffusionSpec {
            kind: ModelKind::Polynomial { p, q, r },
            gamma,
            offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(drift: Vec<f64>, dim: usize, gamma: f64, offset: f64) -> Result<Self> {
        let spec = DiffusionSpec {
            kind: ModelKind::Custom { dim, drift },
            gamma,
            offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the model inequalities, naming the one that fails.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Spec(format!("γ > 0 violated: γ = {}", self.gamma)));
        }
        if !self.offset.is_finite() {
            return Err(Error::Spec("offset C must be finite".into()));
        }
        match &self.kind {
            ModelKind::VolStabilized { alpha, dim } => {
                if *dim < 2 {
                    return Err(Error::Spec(format!("d >= 2 violated: d = {dim}")));
                }
                if !(*alpha > self.gamma - 1.0) {
                    return Err(Error::Spec(format!(
                        "α > γ - 1 violated: α = {alpha}, γ = {}",
                        self.gamma
                    )));
                }
            }
            ModelKind::Polynomial { p, q, r } => {
                if !(*p > 0.0 && *q > 0.0 && *r > 0.0) {
                    return Err(Error::Spec(format!("p, q, r > 0 violated: p = {p}, q = {q}, r = {r}")));
                }
                let m = p.min(*q).min(*r);
                if !(2.0 * m - self.gamma >= 0.0) {
                    return Err(Error::Spec(format!(
                        "2 min(p, q, r) - γ >= 0 violated: 2 * {m} - {} < 0",
                        self.gamma
                    )));
                }
            }
            ModelKind::Custom { dim, drift } => {
                if *dim < 2 || drift.len() != dim * dim {
                    return Err(Error::Spec(format!("custom drift needs a {dim}x{dim} matrix with d >= 2")));
                }
                for j in 0..*dim {
                    let s: f64 = (0..*dim).map(|i| drift[i * dim + j]).sum();
                    if s.abs() > 1e-12 {
                        return Err(Error::Spec(format!("column {j} of B sums to {s}, not 0")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::VolStabilized { dim, .. } | ModelKind::Custom { dim, .. } => *dim,
            ModelKind::Polynomial { .. } => 3,
        }
    }

    /// `B`, row-major.
    pub fn drift_matrix(&self) -> Vec<f64> {
        let d = self.dim();
        match &self.kind {
            ModelKind::VolStabilized { alpha, .. } => {
                let h = (1.0 + alpha) / 2.0;
                (0..d * d)
                    .map(|e| if e / d == e % d { h * (1.0 - d as f64) } else { h })
                    .collect()
            }
            ModelKind::Polynomial { p, q, r } => vec![-p, *q, *r, *p, -q, 0.0, 0.0, 0.0, -r],
            ModelKind::Custom { drift, .. } => drift.clone(),
        }
    }

    /// `c(x)`, row-major.
    pub fn covariance(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut c = vec![0.0; d * d];
        covariance_into(self.gamma, x, &mut c);
        c
    }

    /// `λ(x)` from the closed form when one exists, otherwise [`solve_lambda`].
    pub fn lambda(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.closed_form_lambda(x) {
            Some(l) => Ok(l),
            None => solve_lambda(self, x),
        }
    }

    pub fn closed_form_lambda(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (g, c) = (self.gamma, self.offset);
        match &self.kind {
            ModelKind::VolStabilized { alpha, .. } => {
                Some(x.iter().map(|xi| (1.0 + alpha) / (2.0 * g * xi) + c).collect())
            }
            ModelKind::Polynomial { p, q, r } => Some(vec![
                (r - p + q * x[1] / x[0] + r * x[2] / x[0]) / g + c,
                (r - q + p * x[0] / x[1]) / g + c,
                c,
            ]),
            ModelKind::Custom { .. } => None,
        }
    }

    /// `λ^T c λ` at `x`.
    pub fn growth_density(&self, x: &[f64]) -> Result<f64> {
        let l = self.lambda(x)?;
        Ok(crate::linalg::bilinear(&l, &self.covariance(x), &l))
    }
}

pub(crate) fn covariance_into(gamma: f64, x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for i in 0..d {
        for j in 0..d {
            let delta = if i == j { x[i] } else { 0.0 };
            out[i * d + j] = gamma * (delta - x[i] * x[j]);
        }
    }
}

/// Solves `c(x) λ = B x` by pseudo-inverse and adds `C 1` along the kernel.
pub fn solve_lambda(spec: &DiffusionSpec, x: &[f64]) -> Result<Vec<f64>> {
    let d = spec.dim();
    if x.len() != d {
        return Err(Error::Dimension(format!("point of length {} for a {d}-asset model", x.len())));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("λ is only defined at interior points".into()));
    }
    let c = DMatrix::from_row_slice(d, d, &spec.covariance(x));
    let rhs = nalgebra::DVector::from_vec(crate::linalg::mat_vec(&spec.drift_matrix(), d, d, x));
    let svd = c.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let tol = 1e-12 * largest.max(f64::MIN_POSITIVE);
    let null = svd.singular_values.iter().filter(|s| **s <= tol).count();
    if null > 1 {
        return Err(Error::IllPosed(format!(
            "c(x) has {null} negligible singular values; only the constant direction is expected"
        )));
    }
    let solve = |b: &nalgebra::DVector<f64>| {
        svd.solve(b, tol)
            .map_err(|e| Error::IllPosed(format!("pseudo-inverse failed: {e}")))
    };
    let mut sol = solve(&rhs)?;
    // Refinement steps; the bare SVD solve leaves residuals near 1e-9 on some inputs.
    for _ in 0..2 {
        let residual = &rhs - &c * &sol;
        sol += solve(&residual)?;
    }
    Ok(sol.iter().map(|v| v + spec.offset).collect())
}

/// `π^i = x^i (λ^i + 1 - sum_j x^j λ^j)`.
pub fn log_optimal_portfolio(spec: &DiffusionSpec, x: &[f64]) -> Result<Vec<f64>> {
    let l = spec.lambda(x)?;
    Ok(portfolio_from_lambda(x, &l))
}

pub(crate) fn portfolio_from_lambda(x: &[f64], lambda: &[f64]) -> Vec<f64> {
    let shift = 1.0 - crate::linalg::dot(x, lambda);
    x.iter().zip(lambda).map(|(xi, li)| xi * (li + shift)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_asset_covariance_at_centre() {
        let spec = DiffusionSpec::vol_stabilized(1.0, 1.0, 0.0, 2).unwrap();
        assert_eq!(spec.covariance(&[0.5, 0.5]), vec![0.25, -0.25, -0.25, 0.25]);
    }

    #[test]
    fn closed_forms_solve_the_linear_system() {
        let x = [0.2, 0.5, 0.3];
        for spec in [
            DiffusionSpec::vol_stabilized(0.7, 0.5, 1.3, 3).unwrap(),
            DiffusionSpec::polynomial(0.15, 0.3, 0.2, 0.25, -2.0).unwrap(),
        ] {
            let l = spec.closed_form_lambda(&x).unwrap();
            let cl = crate::linalg::mat_vec(&spec.covariance(&x), 3, 3, &l);
            let bx = crate::linalg::mat_vec(&spec.drift_matrix(), 3, 3, &x);
            assert!(crate::linalg::dist(&cl, &bx) < 1e-12);
        }
    }

    #[test]
    fn inequalities_are_named() {
        match DiffusionSpec::vol_stabilized(-0.9, 0.5, 0.0, 3) {
            Err(Error::Spec(m)) => assert!(m.contains("α > γ - 1")),
            other => panic!("{other:?}"),
        }
        match DiffusionSpec::polynomial(0.1, 0.3, 0.2, 0.25, 0.0) {
            Err(Error::Spec(m)) => assert!(m.contains("2 min(p, q, r) - γ")),
            other => panic!("{other:?}"),
        }
        assert!(DiffusionSpec::custom(vec![1.0, 0.0, 0.0, 0.0], 2, 1.0, 0.0).is_err());
    }

    #[test]
    fn zero_drift_gives_offset() {
        let spec = DiffusionSpec::custom(vec![0.0; 9], 3, 0.5, 2.5).unwrap();
        let l = solve_lambda(&spec, &[0.2, 0.3, 0.5]).unwrap();
        assert!(l.iter().all(|v| (v - 2.5).abs() < 1e-12));
        let pi = log_optimal_portfolio(&spec, &[0.2, 0.3, 0.5]).unwrap();
        assert!(crate::linalg::dist(&pi, &[0.2, 0.3, 0.5]) < 1e-12);
    }

    #[test]
    fn json_shape() {
        let s: DiffusionSpec =
            serde_json::from_str(r#"{"kind":"polynomial","p":0.15,"q":0.3,"r":0.2,"gamma":0.25}"#).unwrap();
        assert_eq!(s.dim(), 3);
        assert!(s.validate().is_ok());
    }
}
