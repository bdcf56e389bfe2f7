//! Portfolio-generating functions and vector fields on the simplex.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A vector field `F : Δ^d -> R^d` with analytic Jacobian `∂_j F^i` (row-major).
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> Vec<f64>;
}

/// A positive generating function described through `log G`.
pub trait GeneratingFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn log_value(&self, x: &[f64]) -> f64;
    fn log_gradient(&self, x: &[f64]) -> Vec<f64>;
    fn log_hessian(&self, x: &[f64]) -> Vec<f64>;

    /// `∂²_{ij} G / G = ∂²_{ij} log G + ∂_i log G ∂_j log G`.
    fn scaled_hessian(&self, x: &[f64]) -> Vec<f64> {
        let g = self.log_gradient(x);
        let mut h = self.log_hessian(x);
        let d = g.len();
        for i in 0..d {
            for j in 0..d {
                h[i * d + j] += g[i] * g[j];
            }
        }
        h
    }
}

/// `∇ log G` seen as a vector field.
pub struct LogGradient(pub Arc<dyn GeneratingFunction>);

impl VectorField for LogGradient {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.0.log_gradient(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        self.0.log_hessian(x)
    }
}

/// `G(x) = exp(-scale * sum x_i log x_i)`.
#[derive(Clone, Debug)]
pub struct EntropyLike {
    pub dim: usize,
    pub scale: f64,
}

impl GeneratingFunction for EntropyLike {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_value(&self, x: &[f64]) -> f64 {
        -self.scale * x.iter().map(|v| v * v.ln()).sum::<f64>()
    }
    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| -self.scale * (v.ln() + 1.0)).collect()
    }
    fn log_hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = -self.scale / x[i];
        }
        h
    }
}

/// `G(x) = prod x_i^{w_i}`; generates the constant-weight portfolio `w`.
#[derive(Clone, Debug)]
pub struct GeometricMean {
    pub weights: Vec<f64>,
}

impl GeneratingFunction for GeometricMean {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn log_value(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v.ln()).sum()
    }
    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(x).map(|(w, v)| w / v).collect()
    }
    fn log_hessian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            h[i * d + i] = -self.weights[i] / (x[i] * x[i]);
        }
        h
    }
}

/// `G(x) = (sum x_i^p)^{1/p}`.
#[derive(Clone, Debug)]
pub struct Diversity {
    pub dim: usize,
    pub p: f64,
}

impl GeneratingFunction for Diversity {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.powf(self.p)).sum::<f64>().ln() / self.p
    }
    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        let s: f64 = x.iter().map(|v| v.powf(self.p)).sum();
        x.iter().map(|v| v.powf(self.p - 1.0) / s).collect()
    }
    fn log_hessian(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p;
        let d = x.len();
        let s: f64 = x.iter().map(|v| v.powf(p)).sum();
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let cross = p * x[i].powf(p - 1.0) * x[j].powf(p - 1.0) / (s * s);
                h[i * d + j] = -cross;
            }
            h[i * d + i] += (p - 1.0) * x[i].powf(p - 2.0) / s;
        }
        h
    }
}

/// `G = 1`; generates the market portfolio.
#[derive(Clone, Debug)]
pub struct ConstantGenerator {
    pub dim: usize,
}

impl GeneratingFunction for ConstantGenerator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn log_value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn log_gradient(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim]
    }
    fn log_hessian(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0; self.dim * self.dim]
    }
}

/// Affine-plus-quadratic monomials `1, x_j, x_j x_k (j <= k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AffineQuadraticBasis {
    pub dim: usize,
}

impl AffineQuadraticBasis {
    pub fn len(&self) -> usize {
        1 + self.dim + self.dim * (self.dim + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(move |j| (j..self.dim).map(move |k| (j, k)))
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.push(1.0);
        out.extend_from_slice(&x[..self.dim]);
        out.extend(self.pairs().map(|(j, k)| x[j] * x[k]));
        out
    }

    /// Row `b` holds `∂_m φ_b`.
    pub fn gradients(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; self.len() * d];
        for j in 0..d {
            out[(1 + j) * d + j] = 1.0;
        }
        for (b, (j, k)) in self.pairs().enumerate() {
            let row = (1 + d + b) * d;
            out[row + j] += x[k];
            out[row + k] += x[j];
        }
        out
    }

    /// Block `b` holds the constant Hessian of `φ_b`.
    pub fn hessians(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; self.len() * d * d];
        for (b, (j, k)) in self.pairs().enumerate() {
            let base = (1 + d + b) * d * d;
            out[base + j * d + k] += 1.0;
            out[base + k * d + j] += 1.0;
        }
        out
    }
}

/// `F^i(x) = sum_b θ_{ib} φ_b(x)` on the affine-plus-quadratic basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineQuadraticField {
    basis: AffineQuadraticBasis,
    coefficients: Vec<f64>,
}

impl AffineQuadraticField {
    /// `coefficients` has one row of basis weights per output component.
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        let basis = AffineQuadraticBasis { dim };
        if coefficients.len() != dim * basis.len() {
            return Err(Error::Parameter(format!(
                "affine-quadratic field in dimension {dim} needs {} coefficients, got {}",
                dim * basis.len(),
                coefficients.len()
            )));
        }
        Ok(AffineQuadraticField { basis, coefficients })
    }

    /// `F(x) = A x + b`.
    pub fn affine(matrix: &[f64], offset: &[f64]) -> Result<Self> {
        let d = offset.len();
        if matrix.len() != d * d {
            return Err(Error::Dimension("affine field needs a square matrix".into()));
        }
        let nb = AffineQuadraticBasis { dim: d }.len();
        let mut c = vec![0.0; d * nb];
        for i in 0..d {
            c[i * nb] = offset[i];
            for j in 0..d {
                c[i * nb + 1 + j] = matrix[i * d + j];
            }
        }
        AffineQuadraticField::new(d, c)
    }

    pub fn basis(&self) -> AffineQuadraticBasis {
        self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Sup over `x` of the value, first and second derivatives, each in Euclidean norm.
    pub fn c2_norm_at(&self, x: &[f64]) -> f64 {
        let d = self.basis.dim;
        let nb = self.basis.len();
        let v = norm_of(&self.value(x));
        let j = norm_of(&self.jacobian(x));
        let hs = self.basis.hessians();
        let mut second = vec![0.0; d * d * d];
        for i in 0..d {
            for b in 0..nb {
                let c = self.coefficients[i * nb + b];
                if c != 0.0 {
                    for e in 0..d * d {
                        second[i * d * d + e] += c * hs[b * d * d + e];
                    }
                }
            }
        }
        v.max(j).max(norm_of(&second))
    }
}

fn norm_of(x: &[f64]) -> f64 {
    crate::linalg::norm(x)
}

impl VectorField for AffineQuadraticField {
    fn dim(&self) -> usize {
        self.basis.dim
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        let phi = self.basis.values(x);
        let nb = phi.len();
        (0..self.basis.dim)
            .map(|i| crate::linalg::dot(&self.coefficients[i * nb..(i + 1) * nb], &phi))
            .collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = self.basis.dim;
        let nb = self.basis.len();
        let grads = self.basis.gradients(x);
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for b in 0..nb {
                let c = self.coefficients[i * nb + b];
                if c == 0.0 {
                    continue;
                }
                for m in 0..d {
                    out[i * d + m] += c * grads[b * d + m];
                }
            }
        }
        out
    }
}

/// `log G(x) = sum_b θ_b φ_b(x)` on the affine-plus-quadratic basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LogPolynomial {
    basis: AffineQuadraticBasis,
    coefficients: Vec<f64>,
}

impl LogPolynomial {
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        let basis = AffineQuadraticBasis { dim };
        if coefficients.len() != basis.len() {
            return Err(Error::Parameter(format!(
                "log-polynomial generator in dimension {dim} needs {} coefficients, got {}",
                basis.len(),
                coefficients.len()
            )));
        }
        Ok(LogPolynomial { basis, coefficients })
    }

    /// `∇ log G` as an affine field, whose C² norm bounds the generator.
    pub fn gradient_field(&self) -> AffineQuadraticField {
        let d = self.basis.dim;
        let nb = self.basis.len();
        let mut c = vec![0.0; d * nb];
        let hs = self.basis.hessians();
        for i in 0..d {
            c[i * nb] = self.coefficients[1 + i];
            for b in 0..nb {
                let w = self.coefficients[b];
                if w == 0.0 {
                    continue;
                }
                for m in 0..d {
                    c[i * nb + 1 + m] += w * hs[b * d * d + i * d + m];
                }
            }
        }
        AffineQuadraticField::new(d, c).expect("shape fixed above")
    }
}

impl GeneratingFunction for LogPolynomial {
    fn dim(&self) -> usize {
        self.basis.dim
    }
    fn log_value(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.coefficients, &self.basis.values(x))
    }
    fn log_gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.basis.dim;
        let grads = self.basis.gradients(x);
        (0..d)
            .map(|m| {
                (0..self.basis.len())
                    .map(|b| self.coefficients[b] * grads[b * d + m])
                    .sum()
            })
            .collect()
    }
    fn log_hessian(&self, _: &[f64]) -> Vec<f64> {
        let d = self.basis.dim;
        let hs = self.basis.hessians();
        let mut out = vec![0.0; d * d];
        for b in 0..self.basis.len() {
            for e in 0..d * d {
                out[e] += self.coefficients[b] * hs[b * d * d + e];
            }
        }
        out
    }
}

/// JSON description of a generating function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Entropy { scale: f64 },
    Geometric { weights: Vec<f64> },
    Diversity { p: f64 },
    Constant,
    LogPolynomial { coefficients: Vec<f64> },
}

impl GeneratorSpec {
    pub fn build(&self, dim: usize) -> Result<Arc<dyn GeneratingFunction>> {
        Ok(match self {
            GeneratorSpec::Entropy { scale } => Arc::new(EntropyLike { dim, scale: *scale }),
            GeneratorSpec::Geometric { weights } => {
                if weights.len() != dim {
                    return Err(Error::Dimension("one weight per asset required".into()));
                }
                Arc::new(GeometricMean {
                    weights: weights.clone(),
                })
            }
            GeneratorSpec::Diversity { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::Parameter(format!("diversity exponent must lie in (0, 1], got {p}")));
                }
                Arc::new(Diversity { dim, p: *p })
            }
            GeneratorSpec::Constant => Arc::new(ConstantGenerator { dim }),
            GeneratorSpec::LogPolynomial { coefficients } => {
                Arc::new(LogPolynomial::new(dim, coefficients.clone())?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn Fn(&[f64]) -> f64, grad: &[f64], x: &[f64]) {
        let h = 1e-6;
        for i in 0..x.len() {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-6, "component {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn generator_gradients_match_differences() {
        let x = [0.2, 0.3, 0.5];
        let gens: Vec<Box<dyn GeneratingFunction>> = vec![
            Box::new(EntropyLike { dim: 3, scale: 0.7 }),
            Box::new(GeometricMean { weights: vec![0.1, 0.3, 0.6] }),
            Box::new(Diversity { dim: 3, p: 0.5 }),
            Box::new(LogPolynomial::new(3, (0..10).map(|k| 0.1 * k as f64 - 0.3).collect()).unwrap()),
        ];
        for g in &gens {
            fd_check(&|y| g.log_value(y), &g.log_gradient(&x), &x);
            let h = g.log_hessian(&x);
            for i in 0..3 {
                fd_check(&|y| g.log_gradient(y)[i], &h[i * 3..i * 3 + 3], &x);
            }
        }
    }

    #[test]
    fn field_jacobian_matches_differences() {
        let f = AffineQuadraticField::new(3, (0..30).map(|k| ((k * 7) % 11) as f64 / 11.0 - 0.4).collect()).unwrap();
        let x = [0.25, 0.35, 0.4];
        let jac = f.jacobian(&x);
        for i in 0..3 {
            fd_check(&|y| f.value(y)[i], &jac[i * 3..i * 3 + 3], &x);
        }
    }

    #[test]
    fn log_polynomial_gradient_field_agrees() {
        let g = LogPolynomial::new(3, vec![0.3, 0.1, -0.2, 0.5, 0.7, -0.1, 0.2, 0.4, 0.0, -0.6]).unwrap();
        let field = g.gradient_field();
        let x = [0.1, 0.6, 0.3];
        let a = g.log_gradient(&x);
        let b = field.value(&x);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec: GeneratorSpec = serde_json::from_str(r#"{"kind":"entropy","scale":0.5}"#).unwrap();
        assert_eq!(spec, GeneratorSpec::Entropy { scale: 0.5 });
        assert!(GeneratorSpec::Geometric { weights: vec![1.0] }.build(3).is_err());
    }
}
