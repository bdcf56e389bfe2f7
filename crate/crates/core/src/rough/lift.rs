use crate::linalg::{max_abs, outer_into};
use crate::path::{pvar, PVariation, SampledPath, TimeGrid};
use crate::{Error, Result};

/// How the second level of a lift was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftKind {
    /// Left-point Riemann sums of `S ⊗ dS` on the sampling grid.
    LeftPoint,
    /// The piecewise-linear interpolation's own iterated integral; its bracket vanishes.
    Geometric,
    /// Any other construction, e.g. the canonical lift of a controlled path.
    Constructed,
}

/// A path together with its running iterated integral `I_t`.
///
/// The area is `A_{s,t} = I_t - I_s - S_s ⊗ S_{s,t}`, so Chen's relation holds
/// identically for every construction.
#[derive(Clone, Debug)]
pub struct RoughLift {
    path: SampledPath,
    iterated: Vec<f64>,
    p: f64,
    kind: LiftKind,
}

pub const DEFAULT_P: f64 = 2.5;

fn check_lift_p(p: f64) -> Result<()> {
    if !(2.0..3.0).contains(&p) {
        return Err(Error::Parameter(format!("rough path exponent must lie in [2, 3), got {p}")));
    }
    Ok(())
}

impl RoughLift {
    pub fn left_point(path: SampledPath, p: f64) -> Result<Self> {
        check_lift_p(p)?;
        let d = path.dim();
        let n = path.len();
        let mut iterated = vec![0.0; n * d * d];
        let mut cell = vec![0.0; d * d];
        for k in 0..n - 1 {
            let inc = path.increment(k, k + 1);
            outer_into(path.value(k), &inc, &mut cell);
            let (prev, next) = iterated.split_at_mut((k + 1) * d * d);
            let prev = &prev[k * d * d..];
            for (i, v) in next[..d * d].iter_mut().enumerate() {
                *v = prev[i] + cell[i];
            }
        }
        Ok(RoughLift {
            path,
            iterated,
            p,
            kind: LiftKind::LeftPoint,
        })
    }

    pub fn geometric(path: SampledPath, p: f64) -> Result<Self> {
        check_lift_p(p)?;
        let d = path.dim();
        let n = path.len();
        let mut iterated = vec![0.0; n * d * d];
        for k in 0..n - 1 {
            let inc = path.increment(k, k + 1);
            let left = path.value(k);
            for i in 0..d {
                for j in 0..d {
                    let cell = left[i] * inc[j] + 0.5 * inc[i] * inc[j];
                    iterated[(k + 1) * d * d + i * d + j] = iterated[k * d * d + i * d + j] + cell;
                }
            }
        }
        Ok(RoughLift {
            path,
            iterated,
            p,
            kind: LiftKind::Geometric,
        })
    }

    /// Wraps a running iterated integral built elsewhere.
    pub fn from_iterated(path: SampledPath, iterated: Vec<f64>, p: f64) -> Result<Self> {
        check_lift_p(p)?;
        let d = path.dim();
        if iterated.len() != path.len() * d * d {
            return Err(Error::Dimension("iterated integral has the wrong length".into()));
        }
        Ok(RoughLift {
            path,
            iterated,
            p,
            kind: LiftKind::Constructed,
        })
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn grid(&self) -> &TimeGrid {
        self.path.grid()
    }

    pub fn dim(&self) -> usize {
        self.path.dim()
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kind(&self) -> LiftKind {
        self.kind
    }

    pub fn has_zero_bracket(&self) -> bool {
        self.kind == LiftKind::Geometric
    }

    pub fn iterated(&self, k: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.iterated[k * dd..(k + 1) * dd]
    }

    pub fn increment(&self, s: usize, t: usize) -> Vec<f64> {
        self.path.increment(s, t)
    }

    /// Writes `A_{s,t}` (row-major, `d x d`) into `out`.
    pub fn area_into(&self, s: usize, t: usize, out: &mut [f64]) {
        let d = self.dim();
        let left = self.path.value(s);
        let right = self.path.value(t);
        let (is, it) = (self.iterated(s), self.iterated(t));
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                out[idx] = it[idx] - is[idx] - left[i] * (right[j] - left[j]);
            }
        }
    }

    pub fn area(&self, s: usize, t: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim() * self.dim()];
        self.area_into(s, t, &mut out);
        out
    }

    /// Area between two grid times.
    pub fn area_at(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let a = self.grid().index_of(s)?;
        let b = self.grid().index_of(t)?;
        Ok(self.area(a, b))
    }

    /// `A_{s,t} - A_{s,u} - A_{u,t} - S_{s,u} ⊗ S_{u,t}`, largest entry in absolute value.
    pub fn chen_residual(&self, s: usize, u: usize, t: usize) -> f64 {
        let d = self.dim();
        let st = self.area(s, t);
        let su = self.area(s, u);
        let ut = self.area(u, t);
        let x = self.increment(s, u);
        let y = self.increment(u, t);
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                let r = st[idx] - su[idx] - ut[idx] - x[i] * y[j];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// `||A||_{p/2}` over the whole grid.
    pub fn area_variation(&self) -> Result<PVariation> {
        pvar::two_param_p_variation(0, self.len() - 1, self.p / 2.0, |s, t| self.area(s, t))
    }

    /// The lift of `S - offset`; areas and bracket are unchanged.
    pub fn shifted(&self, offset: &[f64]) -> Result<RoughLift> {
        let d = self.dim();
        let path = self.path.shifted(offset)?;
        let s0 = self.path.value(0).to_vec();
        let mut iterated = self.iterated.clone();
        for k in 0..self.len() {
            let sk = self.path.value(k);
            for i in 0..d {
                for j in 0..d {
                    iterated[k * d * d + i * d + j] -= offset[i] * (sk[j] - s0[j]);
                }
            }
        }
        Ok(RoughLift {
            path,
            iterated,
            p: self.p,
            kind: self.kind,
        })
    }

    /// The lift cut at node `last`.
    pub fn truncate(&self, last: usize) -> Result<RoughLift> {
        let d = self.dim();
        Ok(RoughLift {
            path: self.path.truncate(last)?,
            iterated: self.iterated[..(last + 1) * d * d].to_vec(),
            p: self.p,
            kind: self.kind,
        })
    }

    /// The bracket `[S]_t = S_{0,t} ⊗ S_{0,t} - 2 Sym(A_{0,t})`.
    pub fn bracket(&self) -> Bracket {
        let d = self.dim();
        let n = self.len();
        let mut data = vec![0.0; n * d * d];
        if self.kind != LiftKind::Geometric {
            let mut area = vec![0.0; d * d];
            for k in 1..n {
                self.area_into(0, k, &mut area);
                let inc = self.increment(0, k);
                let row = &mut data[k * d * d..(k + 1) * d * d];
                for i in 0..d {
                    for j in 0..d {
                        row[i * d + j] =
                            inc[i] * inc[j] - (area[i * d + j] + area[j * d + i]);
                    }
                }
            }
        }
        Bracket {
            path: SampledPath::new(self.grid().clone(), d * d, data)
                .expect("bracket has the grid's shape"),
            dim: d,
        }
    }
}

/// The quadratic variation path of a lift, stored as `d x d` matrices.
#[derive(Clone, Debug)]
pub struct Bracket {
    path: SampledPath,
    dim: usize,
}

impl Bracket {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn path(&self) -> &SampledPath {
        &self.path
    }

    pub fn value(&self, k: usize) -> &[f64] {
        self.path.value(k)
    }

    pub fn increment(&self, s: usize, t: usize) -> Vec<f64> {
        self.path.increment(s, t)
    }

    /// Largest entry of `[S]_T`.
    pub fn terminal_trace(&self) -> f64 {
        let last = self.path.last();
        (0..self.dim).map(|i| last[i * self.dim + i]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.path.data().iter().all(|&v| v == 0.0)
    }
}

/// Running `sum ΔS ⊗ ΔS` over the sampling grid.
pub fn bracket_partition_sum(path: &SampledPath) -> SampledPath {
    let d = path.dim();
    let n = path.len();
    let mut data = vec![0.0; n * d * d];
    let mut cell = vec![0.0; d * d];
    for k in 0..n - 1 {
        let inc = path.increment(k, k + 1);
        outer_into(&inc, &inc, &mut cell);
        for i in 0..d * d {
            data[(k + 1) * d * d + i] = data[k * d * d + i] + cell[i];
        }
    }
    SampledPath::new(path.grid().clone(), d * d, data).expect("shape fixed above")
}

/// Largest violation of `Sym(A_{s,t}) = (S_{s,t} ⊗ S_{s,t} - [S]_{s,t}) / 2` over the given pairs.
pub fn bracket_identity_residual(
    lift: &RoughLift,
    bracket: &Bracket,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> f64 {
    let d = lift.dim();
    let mut worst = 0.0_f64;
    for (s, t) in pairs {
        let area = lift.area(s, t);
        let inc = lift.increment(s, t);
        let br = bracket.increment(s, t);
        let mut r = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let sym = 0.5 * (area[i * d + j] + area[j * d + i]);
                r[i * d + j] = sym - 0.5 * (inc[i] * inc[j] - br[i * d + j]);
            }
        }
        worst = worst.max(max_abs(&r));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lift_of(values: Vec<f64>, d: usize) -> RoughLift {
        let grid = TimeGrid::uniform(1.0, values.len() / d - 1).unwrap();
        RoughLift::left_point(SampledPath::new(grid, d, values).unwrap(), 2.5).unwrap()
    }

    #[test]
    fn linear_path_area_tends_to_half() {
        let grid = TimeGrid::dyadic(1.0, 12).unwrap();
        let path = SampledPath::from_fn(grid.clone(), 1, |t| vec![t]).unwrap();
        let lift = RoughLift::left_point(path, 2.5).unwrap();
        let a = lift.area(0, grid.len() - 1)[0];
        assert!((a - 0.5 * (1.0 - grid.mesh())).abs() < 1e-14);
    }

    #[test]
    fn chen_on_small_example() {
        let lift = lift_of(vec![0.0, 0.0, 1.0, 0.5, 0.3, 2.0, -1.0, 1.0], 2);
        for s in 0..4 {
            for u in s..4 {
                for t in u..4 {
                    assert!(lift.chen_residual(s, u, t) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn bracket_equals_squared_increments() {
        let lift = lift_of(vec![0.0, 0.3, -0.2, 0.9, 0.1], 1);
        let br = lift.bracket();
        let sum = bracket_partition_sum(lift.path());
        assert!(br.path().sup_distance(&sum).unwrap() < 1e-15);
        let expected = 0.09 + 0.25 + 1.21 + 0.64;
        assert!((br.terminal_trace() - expected).abs() < 1e-14);
    }

    #[test]
    fn geometric_lift_has_zero_bracket() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let path = SampledPath::from_fn(grid, 2, |t| vec![t.sin(), t * t]).unwrap();
        let lift = RoughLift::geometric(path, 2.5).unwrap();
        assert!(lift.bracket().is_zero());
        let sym = lift.area(0, 8);
        let inc = lift.increment(0, 8);
        for i in 0..2 {
            for j in 0..2 {
                let s = 0.5 * (sym[i * 2 + j] + sym[j * 2 + i]);
                assert!((s - 0.5 * inc[i] * inc[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exponent_must_be_rough() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let path = SampledPath::new(grid, 1, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(RoughLift::left_point(path, 3.5).is_err());
    }
}
