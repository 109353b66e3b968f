//! Uniform grids on flat model domains.
//!
//! Two domains are supported: the flat torus with period 2π per axis and the
//! Euclidean box `[-R, R]^n` with reflecting (zero-flux) walls. Nodes are
//! cell centers, so `points_per_axis * h` equals the period (torus) or `2R`
//! (box) exactly and midpoint quadrature benefits from the decay of the
//! weights at box walls.

use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Kind of model domain carrying the grid.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DomainKind {
    /// Flat torus, period 2π per axis.
    PeriodicTorus,
    /// Box `[-R, R]^n` with reflecting walls.
    EuclideanBox,
}

/// Uniform cell-centered grid on a 1-D or 2-D model domain.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<S> {
    domain: DomainKind,
    dim: usize,
    points_per_axis: usize,
    extent: S,
    h: S,
}

impl<S: Scalar> GridSpec<S> {
    /// Flat torus grid; the extent is the fixed period 2π.
    pub fn torus(dim: usize, points_per_axis: usize) -> Result<Self> {
        let period = S::real(2.0) * S::PI();
        Self::new(DomainKind::PeriodicTorus, dim, points_per_axis, period)
    }

    /// Box grid on `[-half_width, half_width]^dim` with reflecting walls.
    pub fn euclidean_box(dim: usize, points_per_axis: usize, half_width: S) -> Result<Self> {
        Self::new(DomainKind::EuclideanBox, dim, points_per_axis, half_width)
    }

    pub fn new(domain: DomainKind, dim: usize, points_per_axis: usize, extent: S) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(ModelError::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 8 {
            return Err(ModelError::InvalidGrid(format!(
                "points_per_axis must be >= 8, got {points_per_axis}"
            )));
        }
        if !(extent > S::zero()) {
            return Err(ModelError::InvalidGrid("extent must be positive".into()));
        }
        let span = match domain {
            DomainKind::PeriodicTorus => extent,
            DomainKind::EuclideanBox => S::real(2.0) * extent,
        };
        let h = span / S::real(points_per_axis as f64);
        Ok(GridSpec { domain, dim, points_per_axis, extent, h })
    }

    pub fn domain(&self) -> DomainKind {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Half-width `R` for boxes, period 2π for tori.
    pub fn extent(&self) -> S {
        self.extent
    }

    /// Grid spacing.
    pub fn h(&self) -> S {
        self.h
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^n`.
    pub fn cell_volume(&self) -> S {
        match self.dim {
            1 => self.h,
            _ => self.h * self.h,
        }
    }

    fn coord(&self, i: usize) -> S {
        let ih = S::real(i as f64) * self.h;
        match self.domain {
            DomainKind::PeriodicTorus => ih,
            DomainKind::EuclideanBox => -self.extent + ih + self.h * S::real(0.5),
        }
    }

    /// Per-axis integer coordinates of a flat node index (row-major, x fastest).
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx % self.points_per_axis, idx / self.points_per_axis],
        }
    }

    pub fn ravel(&self, ix: usize, iy: usize) -> usize {
        match self.dim {
            1 => ix,
            _ => iy * self.points_per_axis + ix,
        }
    }

    /// Position of a node; the second component is zero in 1-D.
    pub fn pos(&self, idx: usize) -> [S; 2] {
        let [ix, iy] = self.unravel(idx);
        match self.dim {
            1 => [self.coord(ix), S::zero()],
            _ => [self.coord(ix), self.coord(iy)],
        }
    }

    /// Neighbor one step along `axis` (`dir = ±1`); `None` across a box wall.
    pub fn neighbor(&self, idx: usize, axis: usize, dir: isize) -> Option<usize> {
        let n = self.points_per_axis;
        let [ix, iy] = self.unravel(idx);
        let c = if axis == 0 { ix } else { iy } as isize;
        let moved = c + dir;
        let wrapped = match self.domain {
            DomainKind::PeriodicTorus => moved.rem_euclid(n as isize) as usize,
            DomainKind::EuclideanBox => {
                if moved < 0 || moved >= n as isize {
                    return None;
                }
                moved as usize
            }
        };
        Some(if axis == 0 { self.ravel(wrapped, iy) } else { self.ravel(ix, wrapped) })
    }

    /// Samples a function of position into a node field.
    pub fn sample(&self, f: impl Fn([S; 2]) -> S) -> Vec<S> {
        (0..self.len()).map(|i| f(self.pos(i))).collect()
    }

    /// True if `idx` is at least `layers` cells away from every box wall.
    /// On the torus every node qualifies.
    pub fn is_interior(&self, idx: usize, layers: usize) -> bool {
        match self.domain {
            DomainKind::PeriodicTorus => true,
            DomainKind::EuclideanBox => {
                let n = self.points_per_axis;
                let [ix, iy] = self.unravel(idx);
                let ok = |c: usize| c >= layers && c + layers < n;
                match self.dim {
                    1 => ok(ix),
                    _ => ok(ix) && ok(iy),
                }
            }
        }
    }
}
