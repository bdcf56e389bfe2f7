use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::equation::{controlled_equation_portfolio, AffineQuadraticMatrixField, MatrixField};
use crate::market::functions::{AffineQuadraticBasis, AffineQuadraticField, LogPolynomial};
use crate::market::{GeneratingFunction, MarketPath, PortfolioPath};
use crate::{Error, Result};

/// Points of the closed simplex with coordinates in multiples of `1/(per_axis - 1)`.
pub fn simplex_mesh(dim: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let steps = per_axis.saturating_sub(1).max(1);
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    fn rec(i: usize, left: usize, counts: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        let dim = counts.len();
        if i == dim - 1 {
            counts[i] = left;
            out.push(counts.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, steps, out);
        }
    }
    if dim > 0 {
        rec(0, steps, &mut counts, steps, &mut out);
    }
    out
}

/// Sample density of the mesh used to enforce the C² cap.
pub const MESH_PER_AXIS: usize = 21;

/// What a family's coefficient vectors parametrise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `log G` on the affine-quadratic basis.
    Generated,
    /// `F` on the affine-quadratic basis, one row per component.
    Controlled,
    /// Matrix field `f` of a controlled equation, one row per entry.
    ControlledEquation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    AffineQuadratic,
}

/// A finite grid of functions with a common C² cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFamily {
    pub kind: FamilyKind,
    pub dim: usize,
    #[serde(default)]
    pub basis: Basis,
    /// One coefficient vector per member.
    pub coefficients: Vec<Vec<f64>>,
    pub k_cap: f64,
    #[serde(default)]
    pub alpha: f64,
    /// Initial value of the controlled equation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
}

impl FunctionFamily {
    pub fn new(kind: FamilyKind, dim: usize, coefficients: Vec<Vec<f64>>, k_cap: f64) -> Result<Self> {
        let family = FunctionFamily {
            kind,
            dim,
            basis: Basis::AffineQuadratic,
            coefficients,
            k_cap,
            alpha: 0.0,
            xi0: None,
        };
        family.validate()?;
        Ok(family)
    }

    pub fn with_initial(mut self, xi0: Vec<f64>) -> Result<Self> {
        self.xi0 = Some(xi0);
        self.validate()?;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let family: FunctionFamily =
            serde_json::from_str(text).map_err(|e| Error::input(Some(e.line() as u64), e.to_string()))?;
        family.validate()?;
        Ok(family)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family serialises")
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Coefficients per member for this kind and dimension.
    pub fn member_len(&self) -> usize {
        let nb = AffineQuadraticBasis { dim: self.dim }.len();
        match self.kind {
            FamilyKind::Generated => nb,
            FamilyKind::Controlled => self.dim * nb,
            FamilyKind::ControlledEquation => self.dim * self.dim * nb,
        }
    }

    /// Checks shapes and the C² cap of every member on the simplex mesh.
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Family("dimension must be at least 2".into()));
        }
        if self.is_empty() {
            return Err(Error::Family("empty family".into()));
        }
        if !(self.k_cap > 0.0) {
            return Err(Error::Family(format!("C² cap must be positive, got {}", self.k_cap)));
        }
        if self.kind == FamilyKind::ControlledEquation {
            match &self.xi0 {
                Some(x) if x.len() == self.dim => {}
                _ => return Err(Error::Family("controlled-equation family needs xi0 of length dim".into())),
            }
        }
        let mesh = simplex_mesh(self.dim, MESH_PER_AXIS);
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.len() != self.member_len() {
                return Err(Error::Family(format!(
                    "member {i} has {} coefficients, expected {}",
                    c.len(),
                    self.member_len()
                )));
            }
            let norm = self.c2_norm(c, &mesh)?;
            if norm > self.k_cap * (1.0 + 1e-12) {
                return Err(Error::Family(format!(
                    "member {i} has C² norm {norm} above the cap {}",
                    self.k_cap
                )));
            }
        }
        Ok(())
    }

    /// Sup over `mesh` of the largest of value, first and second derivative norms.
    pub fn c2_norm(&self, coefficients: &[f64], mesh: &[Vec<f64>]) -> Result<f64> {
        let d = self.dim;
        Ok(match self.kind {
            FamilyKind::Generated => {
                let g = LogPolynomial::new(d, coefficients.to_vec())?;
                let hess = crate::linalg::norm(&g.log_hessian(&mesh[0]));
                mesh.iter()
                    .map(|x| g.log_value(x).abs().max(crate::linalg::norm(&g.log_gradient(x))))
                    .fold(hess, f64::max)
            }
            FamilyKind::Controlled => {
                let f = AffineQuadraticField::new(d, coefficients.to_vec())?;
                mesh.iter().map(|x| f.c2_norm_at(x)).fold(0.0, f64::max)
            }
            FamilyKind::ControlledEquation => {
                let f = AffineQuadraticMatrixField::new(d, coefficients.to_vec())?;
                mesh.iter().map(|x| f.c2_norm_at(x)).fold(0.0, f64::max)
            }
        })
    }

    pub fn within_cap(&self, coefficients: &[f64]) -> bool {
        let mesh = simplex_mesh(self.dim, MESH_PER_AXIS);
        coefficients.len() == self.member_len()
            && self
                .c2_norm(coefficients, &mesh)
                .is_ok_and(|n| n <= self.k_cap * (1.0 + 1e-12))
    }

    /// The portfolio generated by one coefficient vector.
    pub fn portfolio(&self, coefficients: &[f64], market: &MarketPath) -> Result<PortfolioPath> {
        if market.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "family of dimension {} on a {}-asset market",
                self.dim,
                market.dim()
            )));
        }
        let d = self.dim;
        match self.kind {
            FamilyKind::Generated => {
                let g: Arc<dyn GeneratingFunction> = Arc::new(LogPolynomial::new(d, coefficients.to_vec())?);
                PortfolioPath::functionally_generated(g, market)
            }
            FamilyKind::Controlled => PortfolioPath::functionally_controlled(
                Arc::new(AffineQuadraticField::new(d, coefficients.to_vec())?),
                market,
            ),
            FamilyKind::ControlledEquation => {
                let f: Arc<dyn MatrixField> = Arc::new(AffineQuadraticMatrixField::new(d, coefficients.to_vec())?);
                let xi0 = self.xi0.as_ref().expect("validated");
                controlled_equation_portfolio(f, xi0, market)
            }
        }
    }

    pub fn member(&self, index: usize, market: &MarketPath) -> Result<PortfolioPath> {
        let c = self
            .coefficients
            .get(index)
            .ok_or_else(|| Error::Parameter(format!("no member {index}")))?;
        self.portfolio(c, market)
    }

    /// Affine controlled fields `F(x) = A x + b` on a uniform grid: `b = 0` and `A`
    /// with entries drawn from `values` along the first row. Always contains `F = 0`
    /// when `values` contains 0.
    pub fn affine_grid(dim: usize, values: &[f64], k_cap: f64) -> Result<Self> {
        let nb = AffineQuadraticBasis { dim }.len();
        let mut members = Vec::new();
        for &a in values {
            for &b in values {
                let mut c = vec![0.0; dim * nb];
                c[1 + 1] = a;
                c[nb + 1] = b;
                members.push(c);
            }
        }
        FunctionFamily::new(FamilyKind::Controlled, dim, members, k_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_size_and_sums() {
        let m = simplex_mesh(3, 21);
        assert_eq!(m.len(), 231);
        assert!(m.iter().all(|x| (x.iter().sum::<f64>() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn json_round_trip() {
        let f = FunctionFamily::affine_grid(3, &[-0.5, 0.0, 0.5], 2.0).unwrap();
        assert_eq!(f.len(), 9);
        let back = FunctionFamily::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn cap_is_enforced() {
        let nb = AffineQuadraticBasis { dim: 2 }.len();
        let mut c = vec![0.0; 2 * nb];
        c[0] = 3.0;
        assert!(matches!(
            FunctionFamily::new(FamilyKind::Controlled, 2, vec![c], 1.0),
            Err(Error::Family(_))
        ));
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(FunctionFamily::new(FamilyKind::Generated, 3, vec![vec![0.0; 3]], 1.0).is_err());
    }
}
