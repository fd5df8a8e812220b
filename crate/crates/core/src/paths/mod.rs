//! Time grids, sampled paths and their per-cell interpolants.

mod io;
mod process;
mod seminorm;

pub use io::{read_csv, write_csv};
pub use process::{
    sample_path, sample_path_with_stream, CovarianceModel, DeterministicPath, ProcessKind,
    ProcessSpec,
};
pub use seminorm::{
    check_holder_gagliardo_bounds, gagliardo_seminorm, holder_seminorm, sup_norm, w1_norm_left,
    winf_norm_right, BoundPair, HolderGagliardoReport, SeminormParams,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Values above this are treated as divergent and replaced by `+inf`.
pub const OVERFLOW_GUARD: f64 = 1e300;

pub(crate) fn guard(v: f64) -> f64 {
    if v.is_finite() && v.abs() <= OVERFLOW_GUARD {
        v
    } else if v.is_nan() {
        f64::INFINITY
    } else {
        f64::INFINITY.copysign(v)
    }
}

/// A strictly increasing discretization `0 = t_0 < ... < t_N = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    times: Vec<f64>,
    step: Option<f64>,
}

impl Grid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return invalid("a grid needs at least two nodes");
        }
        if times[0] != 0.0 {
            return invalid("grid must start at 0");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return invalid("grid times must be finite and strictly increasing");
        }
        let n = times.len() - 1;
        let t_end = times[n];
        let h = t_end / n as f64;
        let tol = 8.0 * f64::EPSILON * t_end;
        let uniform = times
            .iter()
            .enumerate()
            .all(|(i, &t)| (t - i as f64 * h).abs() <= tol);
        Ok(Self {
            times,
            step: uniform.then_some(h),
        })
    }

    /// `n` equally spaced nodes on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("grid length must be positive, got {t_end}"));
        }
        if n < 2 {
            return invalid(format!("a grid needs at least two nodes, got {n}"));
        }
        let cells = (n - 1) as f64;
        let mut times: Vec<f64> = (0..n).map(|i| t_end * (i as f64 / cells)).collect();
        times[n - 1] = t_end;
        Ok(Self {
            times,
            step: Some(t_end / cells),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn is_uniform(&self) -> bool {
        self.step.is_some()
    }

    /// Common step of a uniform grid.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    /// Index of the node equal to `t` (within a relative `1e-9` of the step).
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.t_end() / (self.len() - 1) as f64;
        let i = self.times.partition_point(|&s| s < t - tol);
        (i < self.len() && (self.times[i] - t).abs() <= tol).then_some(i)
    }

    /// Trapezoid weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![0.0; n];
        for k in 0..n - 1 {
            let h = self.times[k + 1] - self.times[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        w
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.len() - 1 {
            s += 0.5 * (self.times[k + 1] - self.times[k]) * (values[k] + values[k + 1]);
        }
        s
    }
}

pub fn make_uniform_grid(t_end: f64, n: usize) -> Result<Grid> {
    Grid::uniform(t_end, n)
}

/// How a path is continued between nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterpRule {
    #[default]
    PiecewiseLinear,
    /// Constant on each `(t_{k}, t_{k+1}]`, equal to the value at `t_{k+1}`.
    LeftConstant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    grid: Arc<Grid>,
    values: Vec<f64>,
    rule: InterpRule,
}

impl SampledPath {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, rule: InterpRule) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "path has {} values for {} grid nodes",
                values.len(),
                grid.len()
            ));
        }
        Ok(Self { grid, values, rule })
    }

    pub fn linear(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, InterpRule::PiecewiseLinear)
    }

    /// Nodal evaluation of `f` on `grid`.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.times().iter().map(|&t| f(t)).collect();
        Self {
            grid,
            values,
            rule: InterpRule::PiecewiseLinear,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rule(&self) -> InterpRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn with_rule(mut self, rule: InterpRule) -> Self {
        self.rule = rule;
        self
    }

    /// Pointwise image `g(x(t_j))`, keeping grid and rule.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| g(v)).collect(),
            rule: self.rule,
        }
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.times() == other.grid.times()
    }

    /// `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return invalid("paths live on different grids");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
            rule: self.rule,
        })
    }

    /// Interpolated value at `t ∈ [0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let times = self.grid.times();
        let n = times.len();
        if t <= times[0] {
            return self.values[0];
        }
        if t >= times[n - 1] {
            return self.values[n - 1];
        }
        let k = times.partition_point(|&s| s <= t) - 1;
        if times[k] == t {
            return self.values[k];
        }
        match self.rule {
            InterpRule::LeftConstant => self.values[k + 1],
            InterpRule::PiecewiseLinear => {
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                self.values[k] + w * (self.values[k + 1] - self.values[k])
            }
        }
    }

    /// Every `stride`-th node, keeping both endpoints aligned.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let cells = self.len() - 1;
        if stride == 0 || cells % stride != 0 {
            return invalid(format!("stride {stride} does not divide {cells} cells"));
        }
        let times: Vec<f64> = self.times().iter().step_by(stride).copied().collect();
        let values = self.values.iter().step_by(stride).copied().collect();
        let grid = match self.grid.step() {
            Some(_) => Grid::uniform(self.grid.t_end(), times.len())?,
            None => Grid::new(times)?,
        };
        Self::new(Arc::new(grid), values, self.rule)
    }
}

/// A path as nodes plus one linear piece per open cell.
///
/// `lo[k]` and `hi[k]` are the one-sided limits of the interpolant at the
/// left and right end of cell `k`; for a piecewise-linear path they equal the
/// nodal values, for a left-constant path both equal `node[k + 1]`. Keeping
/// the cell values separate from the nodes makes time reversal exact.
#[derive(Clone, Debug)]
pub(crate) struct Cells {
    pub times: Vec<f64>,
    pub step: Option<f64>,
    pub node: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cells {
    pub fn from_path(path: &SampledPath) -> Self {
        let v = path.values();
        let n = v.len() - 1;
        let (lo, hi) = match path.rule() {
            InterpRule::PiecewiseLinear => (v[..n].to_vec(), v[1..].to_vec()),
            InterpRule::LeftConstant => (v[1..].to_vec(), v[1..].to_vec()),
        };
        Self {
            times: path.times().to_vec(),
            step: path.grid().step(),
            node: v.to_vec(),
            lo,
            hi,
        }
    }

    /// Same function read backwards in time, `s ↦ x(T - s)`.
    pub fn reversed(&self) -> Self {
        let t_end = self.times[self.times.len() - 1];
        let mut times: Vec<f64> = self.times.iter().rev().map(|&t| t_end - t).collect();
        times[0] = 0.0;
        let mut lo = self.hi.clone();
        lo.reverse();
        let mut hi = self.lo.clone();
        hi.reverse();
        let mut node = self.node.clone();
        node.reverse();
        Self {
            times,
            step: self.step,
            node,
            lo,
            hi,
        }
    }

    pub fn len(&self) -> usize {
        self.node.len()
    }

    /// Distance `t_j - t_k` using the exact step on uniform grids.
    #[inline]
    pub fn dist(&self, j: usize, k: usize) -> f64 {
        match self.step {
            Some(h) => (j - k) as f64 * h,
            None => self.times[j] - self.times[k],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_examples() {
        let g = make_uniform_grid(1.0, 3).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0]);
        let g = make_uniform_grid(2.0, 2).unwrap();
        assert_eq!(g.times(), &[0.0, 2.0]);
        let g = make_uniform_grid(1.0, 5).unwrap();
        assert_eq!(g.step(), Some(0.25));
        assert_eq!(g.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_uniform_grid(0.0, 3).is_err());
        assert!(make_uniform_grid(-1.0, 3).is_err());
        assert!(make_uniform_grid(1.0, 1).is_err());
        assert!(Grid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Grid::new(vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn nonuniform_detection() {
        assert!(Grid::new(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap().is_uniform());
        assert!(!Grid::new(vec![0.0, 0.2, 1.0]).unwrap().is_uniform());
    }

    #[test]
    fn node_lookup() {
        let g = make_uniform_grid(1.0, 9).unwrap();
        assert_eq!(g.node_index(0.375), Some(3));
        assert_eq!(g.node_index(1.0), Some(8));
        assert_eq!(g.node_index(0.3), None);
    }

    #[test]
    fn eval_rules() {
        let g = Arc::new(make_uniform_grid(1.0, 3).unwrap());
        let p = SampledPath::linear(g.clone(), vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(p.eval(0.25), 0.5);
        assert_eq!(p.eval(0.75), 2.0);
        let c = p.clone().with_rule(InterpRule::LeftConstant);
        assert_eq!(c.eval(0.25), 1.0);
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(0.5000001), 3.0);
    }

    #[test]
    fn reversal_is_an_involution() {
        let g = Arc::new(Grid::new(vec![0.0, 0.1, 0.5, 1.0]).unwrap());
        let p = SampledPath::new(g, vec![1.0, 2.0, -1.0, 4.0], InterpRule::LeftConstant).unwrap();
        let c = Cells::from_path(&p);
        let r = c.reversed();
        assert_eq!(r.node, vec![4.0, -1.0, 2.0, 1.0]);
        assert_eq!(r.lo, vec![4.0, -1.0, 2.0]);
        let rr = r.reversed();
        assert_eq!(rr.lo, c.lo);
        assert_eq!(rr.hi, c.hi);
        assert!((rr.times[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let g = Arc::new(make_uniform_grid(1.0, 9).unwrap());
        let p = SampledPath::from_fn(g, |t| t * t);
        let s = p.subsample(4).unwrap();
        assert_eq!(s.values(), &[0.0, 0.25, 1.0]);
        assert!(p.subsample(3).is_err());
    }
}
