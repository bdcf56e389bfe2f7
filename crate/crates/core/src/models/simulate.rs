use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{covariance_into, DiffusionSpec};
use crate::path::{SampledPath, TimeGrid};
use crate::{Error, Result};

/// Starting point of every simulated path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Initial {
    Fixed(Vec<f64>),
    Named(NamedInitial),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedInitial {
    /// `(1/d, ..., 1/d)`
    Centre,
    /// Uniform on the simplex, drawn from the path's own stream.
    Uniform,
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Named(NamedInitial::Centre)
    }
}

fn default_epsilon() -> f64 {
    1e-4
}

fn default_record_every() -> usize {
    100
}

/// Euler scheme and Monte Carlo settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub step: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub initial: Initial,
    /// Output curves keep every this many Euler steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl SimulationConfig {
    pub fn new(step: f64, horizon: f64, paths: usize, seed: u64) -> Self {
        SimulationConfig {
            step,
            horizon,
            paths,
            seed,
            epsilon: default_epsilon(),
            initial: Initial::default(),
            record_every: default_record_every(),
        }
    }

    /// Number of Euler steps; the horizon must be a multiple of the step.
    pub fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Parameter(format!(
                "step and horizon must be positive, got {} and {}",
                self.step, self.horizon
            )));
        }
        let n = (self.horizon / self.step).round();
        if (n * self.step - self.horizon).abs() > 1e-9 * self.horizon || n < 1.0 {
            return Err(Error::Parameter(format!(
                "horizon {} is not a multiple of the step {}",
                self.horizon, self.step
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.steps()?;
        if self.paths == 0 {
            return Err(Error::Parameter("at least one path is required".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / dim as f64) {
            return Err(Error::Parameter(format!("ε must lie in (0, 1/{dim}), got {}", self.epsilon)));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be positive".into()));
        }
        if let Initial::Fixed(x) = &self.initial {
            if x.len() != dim || (x.iter().sum::<f64>() - 1.0).abs() > 1e-12 || x.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Parameter("initial point must be an interior simplex point of the model's dimension".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.horizon, self.steps()?)
    }

    /// Step indices kept in output curves, always including both ends.
    pub fn record_steps(&self) -> Result<Vec<usize>> {
        let n = self.steps()?;
        let mut out: Vec<usize> = (0..=n).step_by(self.record_every).collect();
        if *out.last().unwrap() != n {
            out.push(n);
        }
        Ok(out)
    }
}

/// Renormalises to sum one and raises components below `ε` to `ε`, taking the
/// added mass proportionally from the rest. With two or more components the
/// result lies in `[ε, 1-ε]`.
pub fn project_to_interior(x: &mut [f64], eps: f64) {
    let total: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= total;
    }
    let d = x.len();
    let mut fixed = vec![false; d];
    for _ in 0..d {
        let mut changed = false;
        for i in 0..d {
            if !fixed[i] && x[i] < eps {
                x[i] = eps;
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let fixed_mass: f64 = (0..d).filter(|i| fixed[*i]).map(|i| x[i]).sum();
        let free_mass: f64 = (0..d).filter(|i| !fixed[*i]).map(|i| x[i]).sum();
        if free_mass > 0.0 {
            let scale = (1.0 - fixed_mass) / free_mass;
            for i in 0..d {
                if !fixed[i] {
                    x[i] *= scale;
                }
            }
        }
    }
}

/// Symmetric square root with negative eigenvalues floored at zero.
pub fn psd_sqrt(m: &[f64], d: usize) -> Vec<f64> {
    let eig = DMatrix::from_row_slice(d, d, m).symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut out = vec![0.0; d * d];
    for k in 0..d {
        let s = eig.eigenvalues[k].max(0.0).sqrt();
        if s == 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += s * q[(i, k)] * q[(j, k)];
            }
        }
    }
    out
}

/// One Euler step as seen by a path visitor.
pub struct Step<'a> {
    pub index: usize,
    pub dt: f64,
    pub mu: &'a [f64],
    pub next: &'a [f64],
    /// `c(μ_k)`, row-major.
    pub cov: &'a [f64],
}

/// Euler-Maruyama for the simplex diffusion with per-path ChaCha streams.
pub struct Simulator<'a> {
    spec: &'a DiffusionSpec,
    config: &'a SimulationConfig,
    drift: Vec<f64>,
    steps: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a DiffusionSpec, config: &'a SimulationConfig) -> Result<Self> {
        spec.validate()?;
        config.validate(spec.dim())?;
        Ok(Simulator {
            spec,
            config,
            drift: spec.drift_matrix(),
            steps: config.steps()?,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn spec(&self) -> &DiffusionSpec {
        self.spec
    }

    pub fn config(&self) -> &SimulationConfig {
        self.config
    }

    fn rng(&self, path: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(path);
        rng
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let d = self.spec.dim();
        let mut x = match &self.config.initial {
            Initial::Fixed(x) => x.clone(),
            Initial::Named(NamedInitial::Centre) => vec![1.0 / d as f64; d],
            Initial::Named(NamedInitial::Uniform) => {
                let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        };
        project_to_interior(&mut x, self.config.epsilon);
        x
    }

    /// Runs path `path`, calling `visit` once per step in time order.
    pub fn walk(&self, path: u64, mut visit: impl FnMut(&Step)) -> Result<()> {
        let d = self.spec.dim();
        let dt = self.config.step;
        let sdt = dt.sqrt();
        let mut rng = self.rng(path);
        let mut mu = self.initial(&mut rng);
        let mut next = vec![0.0; d];
        let mut cov = vec![0.0; d * d];
        let mut z = vec![0.0; d];
        for k in 0..self.steps {
            covariance_into(self.spec.gamma, &mu, &mut cov);
            let root = psd_sqrt(&cov, d);
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            for i in 0..d {
                let mut drift = 0.0;
                let mut noise = 0.0;
                for j in 0..d {
                    drift += self.drift[i * d + j] * mu[j];
                    noise += root[i * d + j] * z[j];
                }
                next[i] = mu[i] + drift * dt + noise * sdt;
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability(format!(
                    "non-finite weight at step {} of path {path}; try a smaller step than {dt}",
                    k + 1
                )));
            }
            project_to_interior(&mut next, self.config.epsilon);
            visit(&Step {
                index: k,
                dt,
                mu: &mu,
                next: &next,
                cov: &cov,
            });
            std::mem::swap(&mut mu, &mut next);
        }
        Ok(())
    }

    /// The full sampled path of one stream.
    pub fn path(&self, path: u64) -> Result<SampledPath> {
        let d = self.spec.dim();
        let mut data = Vec::with_capacity((self.steps + 1) * d);
        let mut first = true;
        self.walk(path, |s| {
            if first {
                data.extend_from_slice(s.mu);
                first = false;
            }
            data.extend_from_slice(s.next);
        })?;
        SampledPath::new(self.config.grid()?, d, data)
    }

    /// Runs `f` on every path in parallel and returns results in path order.
    pub fn map_paths<R: Send>(&self, f: impl Fn(&Simulator, u64) -> Result<R> + Sync) -> Result<Vec<R>> {
        (0..self.config.paths as u64)
            .into_par_iter()
            .map(|p| f(self, p))
            .collect()
    }
}

/// Every path of the ensemble, held in memory.
pub fn simulate_market_weights(spec: &DiffusionSpec, config: &SimulationConfig) -> Result<Vec<SampledPath>> {
    let sim = Simulator::new(spec, config)?;
    sim.map_paths(|s, p| s.path(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_keeps_simplex_and_floor() {
        let mut x = vec![-0.2, 0.7, 0.5];
        project_to_interior(&mut x, 1e-4);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(x.iter().all(|v| *v >= 1e-4 && *v <= 1.0 - 1e-4));
        assert_eq!(x[0], 1e-4);
    }

    #[test]
    fn sqrt_squares_back() {
        let spec = DiffusionSpec::vol_stabilized(1.0, 0.5, 0.0, 3).unwrap();
        let c = spec.covariance(&[0.2, 0.3, 0.5]);
        let r = psd_sqrt(&c, 3);
        let rr = crate::linalg::mat_mul(&r, &r, 3, 3, 3);
        assert!(crate::linalg::dist(&rr, &c) < 1e-14);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let spec = DiffusionSpec::vol_stabilized(1.0, 0.5, 0.0, 3).unwrap();
        let cfg = SimulationConfig::new(0.01, 1.0, 3, 42);
        let a = simulate_market_weights(&spec, &cfg).unwrap();
        let b = simulate_market_weights(&spec, &cfg).unwrap();
        assert_eq!(a[1].data(), b[1].data());
        assert_ne!(a[0].data(), a[1].data());
    }

    #[test]
    fn horizon_must_fit_step() {
        let cfg = SimulationConfig::new(0.3, 1.0, 1, 0);
        assert!(cfg.steps().is_err());
    }
}
