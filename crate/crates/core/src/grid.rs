//! Grids on the half-line and on the strip `(0, L) × (0, y_max)`, plus the
//! polynomial weights used by every weighted norm.

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest node count accepted for any grid.
pub const MIN_NODES: usize = 16;
/// Largest ratio between adjacent spacings on a graded grid.
pub const MAX_SPACING_RATIO: f64 = 1.2;
/// Default geometric stretching of graded grids.
pub const DEFAULT_STRETCH: f64 = 1.05;
/// Default truncation in the fast (boundary-layer) variable.
pub const DEFAULT_Y_MAX: f64 = 40.0;
/// Default truncation in the slow (outer) variable.
pub const DEFAULT_Y_MAX_OUTER: f64 = 20.0;
/// Default small excess exponent standing in for `0+`.
pub const DEFAULT_SIGMA: f64 = 0.05;

/// The bracket `⟨y⟩ = √(1 + y²)`.
#[inline]
pub fn bracket(y: f64) -> f64 {
    libm::sqrt(1.0 + y * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Graded,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    nodes: Vec<f64>,
    y_max: f64,
    kind: GridKind,
}

/// Monotone node set on `[0, y_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid1D {
    nodes: Vec<f64>,
    kind: GridKind,
}

impl TryFrom<GridRepr> for Grid1D {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        let g = Grid1D::from_nodes(r.nodes, r.kind)?;
        if (g.y_max() - r.y_max).abs() > 1e-12 * r.y_max.abs().max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "y_max {} does not match last node {}",
                r.y_max,
                g.y_max()
            )));
        }
        Ok(g)
    }
}

impl From<Grid1D> for GridRepr {
    fn from(g: Grid1D) -> Self {
        let y_max = g.y_max();
        GridRepr { nodes: g.nodes, y_max, kind: g.kind }
    }
}

impl Grid1D {
    pub fn uniform(y_max: f64, n: usize) -> Result<Self> {
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(Error::InvalidGrid(format!("y_max must be positive, got {y_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let h = y_max / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        nodes[n - 1] = y_max;
        Ok(Grid1D { nodes, kind: GridKind::Uniform })
    }

    /// Geometric grid starting with spacing `h0`, stretched by `ratio` per
    /// cell until the spacing reaches `h_cap`, then uniform. The nodes are
    /// rescaled so the last one lands on `y_max`.
    pub fn graded(y_max: f64, h0: f64, ratio: f64, h_cap: f64) -> Result<Self> {
        if !(y_max > 0.0 && h0 > 0.0 && h_cap >= h0) {
            return Err(Error::InvalidGrid(format!(
                "graded grid needs 0 < h0 <= h_cap and y_max > 0 (h0={h0}, h_cap={h_cap}, y_max={y_max})"
            )));
        }
        if !(1.0..=MAX_SPACING_RATIO).contains(&ratio) {
            return Err(Error::InvalidGrid(format!("stretch ratio {ratio} outside [1, {MAX_SPACING_RATIO}]")));
        }
        let mut nodes = Vec::new();
        nodes.push(0.0);
        let mut y = 0.0;
        let mut h = h0;
        while y < y_max {
            y += h;
            nodes.push(y);
            h = (h * ratio).min(h_cap);
        }
        let scale = y_max / y;
        for v in nodes.iter_mut() {
            *v *= scale;
        }
        let last = nodes.len() - 1;
        nodes[last] = y_max;
        if nodes.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "graded grid has only {} nodes; reduce h0",
                nodes.len()
            )));
        }
        Grid1D::from_nodes(nodes, GridKind::Graded)
    }

    pub fn from_nodes(nodes: Vec<f64>, kind: GridKind) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first node must be 0, got {}", nodes[0])));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(format!("nodes not strictly increasing at {}", w[0])));
            }
        }
        if kind == GridKind::Graded {
            for w in nodes.windows(3) {
                let r = (w[2] - w[1]) / (w[1] - w[0]);
                if r > MAX_SPACING_RATIO + 1e-9 || 1.0 / r > MAX_SPACING_RATIO + 1e-9 {
                    return Err(Error::InvalidGrid(format!(
                        "adjacent spacing ratio {r} exceeds {MAX_SPACING_RATIO} near y = {}",
                        w[1]
                    )));
                }
            }
        }
        Ok(Grid1D { nodes, kind })
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    #[inline]
    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Largest cell width.
    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Smallest cell width.
    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Index of the cell `[y_i, y_{i+1}]` containing `y` (clamped to the grid).
    pub fn locate(&self, y: f64) -> usize {
        let n = self.nodes.len();
        if y <= self.nodes[0] {
            return 0;
        }
        if y >= self.nodes[n - 1] {
            return n - 2;
        }
        match self.nodes.binary_search_by(|v| v.partial_cmp(&y).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Samples `f` on the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&y| f(y)).collect()
    }

    /// Grid with every cell split in two.
    pub fn refined(&self) -> Result<Self> {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.y_max());
        Grid1D::from_nodes(nodes, self.kind)
    }
}

/// Uniform x-nodes on `[0, L]` times a grid in the normal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_nodes: Vec<f64>,
    pub y_grid: Grid1D,
    pub length: f64,
}

impl Grid2D {
    pub fn new(length: f64, nx: usize, y_grid: Grid1D) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidGrid(format!("strip length must be positive, got {length}")));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 x-nodes, got {nx}")));
        }
        let dx = length / (nx - 1) as f64;
        let mut x_nodes: Vec<f64> = (0..nx).map(|i| i as f64 * dx).collect();
        x_nodes[nx - 1] = length;
        Ok(Grid2D { x_nodes, y_grid, length })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.x_nodes.len()
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.y_grid.len()
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / (self.nx() - 1) as f64
    }

    /// Flat row-major index, x outer.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny() + j
    }
}

/// Positive weight applied inside a weighted L² norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// `⟨y⟩^m`.
    PolyBracket { m: f64 },
    /// `⟨y⟩ / v` for a sampled positive outer trace `v`.
    InvV1e { trace: Vec<f64> },
    /// Arbitrary sampled positive weight.
    Custom { values: Vec<f64> },
}

impl WeightSpec {
    pub fn unit() -> Self {
        WeightSpec::PolyBracket { m: 0.0 }
    }

    pub fn sample(&self, grid: &Grid1D) -> Result<Vec<f64>> {
        let w: Vec<f64> = match self {
            WeightSpec::PolyBracket { m } => {
                if *m == 0.0 {
                    alloc::vec![1.0; grid.len()]
                } else {
                    grid.sample(|y| libm::pow(bracket(y), *m))
                }
            }
            WeightSpec::InvV1e { trace } => {
                crate::error::check_len(grid.len(), trace.len())?;
                grid.nodes().iter().zip(trace).map(|(&y, &v)| bracket(y) / v).collect()
            }
            WeightSpec::Custom { values } => {
                crate::error::check_len(grid.len(), values.len())?;
                values.clone()
            }
        };
        if let Some(bad) = w.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::SignViolation(format!(
                "weight not strictly positive at node {bad} (value {})",
                w[bad]
            )));
        }
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_endpoints() {
        let g = Grid1D::uniform(40.0, 101).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.y_max(), 40.0);
        assert!((g.max_spacing() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn graded_respects_ratio_and_endpoint() {
        let g = Grid1D::graded(40.0, 0.01, DEFAULT_STRETCH, 0.5).unwrap();
        assert_eq!(g.y_max(), 40.0);
        assert_eq!(g.kind(), GridKind::Graded);
        assert!(g.min_spacing() < 0.011);
        assert!(g.max_spacing() <= 0.51);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::uniform(1.0, 8).is_err());
        let mut nodes: Vec<f64> = (0..20).map(|i| i as f64).collect();
        nodes[5] = 4.0;
        assert!(Grid1D::from_nodes(nodes, GridKind::Uniform).is_err());
        let jumpy: Vec<f64> = (0..20).map(|i| (i * i) as f64).collect();
        assert!(Grid1D::from_nodes(jumpy, GridKind::Graded).is_err());
    }

    #[test]
    fn locate_finds_cells() {
        let g = Grid1D::uniform(15.0, 16).unwrap();
        assert_eq!(g.locate(0.0), 0);
        assert_eq!(g.locate(3.5), 3);
        assert_eq!(g.locate(3.0), 3);
        assert_eq!(g.locate(15.0), 14);
    }

    #[test]
    fn weights_positive() {
        let g = Grid1D::uniform(10.0, 21).unwrap();
        let w = WeightSpec::PolyBracket { m: 1.0 }.sample(&g).unwrap();
        assert!((w[20] - bracket(10.0)).abs() < 1e-14);
        let bad = WeightSpec::InvV1e { trace: alloc::vec![-1.0; 21] };
        assert!(bad.sample(&g).is_err());
    }
}
