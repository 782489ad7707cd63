//! Masked uniform grids and cell-centered grid functions.
//!
//! A [`MaskedGrid`] is a uniform lattice of cells of side `h` in dimension 1
//! or 2, with an activity mask selecting the cells whose centers lie inside
//! the domain. Everything downstream (rearrangements, inequality checks,
//! solvers) works on the active cells only; inactive cells represent the
//! zero extension of the function outside the domain.
//!
//! Internally both dimensions use the same `[e0, e1]` layout with `e1 = 1`
//! in 1D; flat cell indices are row-major with x fastest (`flat = iy*e0 +
//! ix`). That flat order is the fixed tie-break order every deterministic
//! sort in the crate relies on.
//!
//! For shape-built grids each active cell also records, along every stencil
//! arm whose neighbor is inactive (or outside the lattice), the distance
//! from the cell center to the true domain boundary along that arm, found by
//! bisection. The Poisson solver imposes the Dirichlet zero there; grids
//! built from a bare mask default to `h/2` (the cell face), treating the
//! mask as a union of whole cells.

use std::io::{BufRead, Write as IoWrite};
use std::sync::Arc;

use crate::error::Error;
use crate::fmt::fmt_g;
use crate::tol;

/// Geometric domain description used to build masks and boundary distances.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Open interval (min, max) on the line.
    Interval {
        min: f64,
        max: f64,
    },
    /// Open axis-aligned rectangle.
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    Annulus {
        center: [f64; 2],
        inner: f64,
        outer: f64,
    },
    /// Rectangle minus its closed upper-right quadrant.
    LShape {
        min: [f64; 2],
        max: [f64; 2],
    },
    /// Simple polygon, even-odd rule, vertices in order.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Point-membership test. `p[1]` is ignored in 1D.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Shape::Interval { min, max } => *min < p[0] && p[0] < *max,
            Shape::Rectangle { min, max } => {
                min[0] < p[0] && p[0] < max[0] && min[1] < p[1] && p[1] < max[1]
            }
            Shape::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy < radius * radius
            }
            Shape::Annulus {
                center,
                inner,
                outer,
            } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let r2 = dx * dx + dy * dy;
                inner * inner < r2 && r2 < outer * outer
            }
            Shape::LShape { min, max } => {
                let mid = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
                min[0] < p[0]
                    && p[0] < max[0]
                    && min[1] < p[1]
                    && p[1] < max[1]
                    && !(p[0] >= mid[0] && p[1] >= mid[1])
            }
            Shape::Polygon { vertices } => polygon_contains(vertices, p),
        }
    }

    /// Natural bounding box of the shape, as (min, max) per axis.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Interval { min, max } => vec![(*min, *max)],
            Shape::Rectangle { min, max } | Shape::LShape { min, max } => {
                vec![(min[0], max[0]), (min[1], max[1])]
            }
            Shape::Disk { center, radius } => vec![
                (center[0] - radius, center[0] + radius),
                (center[1] - radius, center[1] + radius),
            ],
            Shape::Annulus { center, outer, .. } => vec![
                (center[0] - outer, center[0] + outer),
                (center[1] - outer, center[1] + outer),
            ],
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                vec![(lo[0], hi[0]), (lo[1], hi[1])]
            }
        }
    }
}

fn polygon_contains(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (vertices[i][0], vertices[i][1]);
        let (xj, yj) = (vertices[j][0], vertices[j][1]);
        if (yi > p[1]) != (yj > p[1]) {
            let x_cross = xi + (p[1] - yi) * (xj - xi) / (yj - yi);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Masked uniform grid. Construct via [`make_masked_grid`],
/// [`MaskedGrid::from_mask`], or the symmetrization routines.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGrid {
    dim: usize,
    origin: [f64; 2],
    h: f64,
    extents: [usize; 2],
    mask: Vec<bool>,
    /// Flat indices of active cells, ascending.
    active: Vec<usize>,
    /// flat index -> rank in `active`, or usize::MAX.
    rank: Vec<usize>,
    /// Codimension split (n, m): first n axes are symmetrized, last m kept.
    split: Option<(usize, usize)>,
    /// Per active cell: distance to the Dirichlet boundary along arms
    /// [x-, x+, y-, y+]; 0.0 marks an interior arm (active neighbor).
    arms: Vec<[f64; 4]>,
}

/// Build a grid over `bbox` (one `(min, max)` pair per axis) with cell size
/// `h`, activating cells whose centers the shape contains.
///
/// The lattice covers `[min, min + e*h)` per axis with `e = round(len/h)`
/// cells, so coverage can differ from the box by less than one cell.
/// Boundary-arm distances are located by bisection on the shape and clamped
/// below at [`tol::MIN_ARM_FRACTION`]` * h`.
pub fn make_masked_grid(
    bbox: &[(f64, f64)],
    h: f64,
    shape: &Shape,
) -> Result<Arc<MaskedGrid>, Error> {
    let dim = shape.dim();
    if bbox.len() != dim {
        return Err(Error::BadParameter(
            "bounding box rank must match shape dimension",
        ));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter("cell size must be positive and finite"));
    }
    let mut extents = [1usize; 2];
    let mut origin = [0.0f64; 2];
    origin[1] = -0.5 * h; // 1D convention: the single y-row is centered at 0
    for (a, &(lo, hi)) in bbox.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::BadParameter(
                "bounding box must have positive extent",
            ));
        }
        if h > hi - lo {
            return Err(Error::ResolutionTooCoarse);
        }
        extents[a] = (((hi - lo) / h).round() as usize).max(1);
        origin[a] = lo;
    }
    let total = extents[0] * extents[1];
    let mut mask = vec![false; total];
    for iy in 0..extents[1] {
        for ix in 0..extents[0] {
            let flat = iy * extents[0] + ix;
            let c = center_of(origin, h, extents, flat);
            mask[flat] = shape.contains(c);
        }
    }
    let mut grid = MaskedGrid::assemble(dim, origin, h, extents, mask, None)?;
    grid.compute_arms_from_shape(shape);
    Ok(Arc::new(grid))
}

fn center_of(origin: [f64; 2], h: f64, extents: [usize; 2], flat: usize) -> [f64; 2] {
    let ix = flat % extents[0];
    let iy = flat / extents[0];
    [
        origin[0] + (ix as f64 + 0.5) * h,
        origin[1] + (iy as f64 + 0.5) * h,
    ]
}

impl MaskedGrid {
    fn assemble(
        dim: usize,
        origin: [f64; 2],
        h: f64,
        extents: [usize; 2],
        mask: Vec<bool>,
        split: Option<(usize, usize)>,
    ) -> Result<MaskedGrid, Error> {
        debug_assert!(dim == 1 || dim == 2);
        debug_assert!(dim == 2 || extents[1] == 1);
        let total = extents[0] * extents[1];
        if mask.len() != total {
            return Err(Error::BadParameter("mask length must equal cell count"));
        }
        let active: Vec<usize> = (0..total).filter(|&i| mask[i]).collect();
        if active.is_empty() {
            return Err(Error::DegenerateDomain);
        }
        let mut rank = vec![usize::MAX; total];
        for (r, &flat) in active.iter().enumerate() {
            rank[flat] = r;
        }
        let mut grid = MaskedGrid {
            dim,
            origin,
            h,
            extents,
            mask,
            active,
            rank,
            split: None,
            arms: Vec::new(),
        };
        grid.default_arms();
        if let Some((n, m)) = split {
            grid.validate_split(n, m)?;
            grid.split = Some((n, m));
        }
        Ok(grid)
    }

    /// Build directly from an explicit mask. `origin` positions cell (0, 0)'s
    /// lower corner; boundary arms default to the cell face `h/2`.
    pub fn from_mask(
        dim: usize,
        origin: [f64; 2],
        h: f64,
        extents: [usize; 2],
        mask: Vec<bool>,
        split: Option<(usize, usize)>,
    ) -> Result<Arc<MaskedGrid>, Error> {
        if dim != 1 && dim != 2 {
            return Err(Error::BadParameter("dimension must be 1 or 2"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::BadParameter("cell size must be positive and finite"));
        }
        if dim == 1 && extents[1] != 1 {
            return Err(Error::BadParameter("1D grids must have a single row"));
        }
        Ok(Arc::new(MaskedGrid::assemble(
            dim, origin, h, extents, mask, split,
        )?))
    }

    /// Cell-face boundary distances (h/2) on every masked-off arm.
    fn default_arms(&mut self) {
        let half = 0.5 * self.h;
        let mut arms = vec![[0.0f64; 4]; self.active.len()];
        for (r, &flat) in self.active.iter().enumerate() {
            for axis in 0..self.dim {
                for (side, up) in [(0usize, false), (1usize, true)] {
                    if self.neighbor(flat, axis, up).is_none() {
                        arms[r][2 * axis + side] = half;
                    }
                }
            }
        }
        self.arms = arms;
    }

    /// Replace default arm distances with bisected distances to the shape
    /// boundary. Only arms already marked as boundary are touched.
    fn compute_arms_from_shape(&mut self, shape: &Shape) {
        let h = self.h;
        let min_t = tol::MIN_ARM_FRACTION;
        let lo_cover = self.origin;
        let hi_cover = [
            self.origin[0] + self.extents[0] as f64 * h,
            self.origin[1] + self.extents[1] as f64 * h,
        ];
        let covered = |p: [f64; 2]| -> bool {
            p[0] >= lo_cover[0] && p[0] <= hi_cover[0] && p[1] >= lo_cover[1] && p[1] <= hi_cover[1]
        };
        for (r, &flat) in self.active.iter().enumerate().collect::<Vec<_>>() {
            let c = self.center(flat);
            for axis in 0..self.dim {
                for (side, sign) in [(0usize, -1.0f64), (1usize, 1.0f64)] {
                    if self.arms[r][2 * axis + side] == 0.0 {
                        continue;
                    }
                    // In-domain at t=0, out at t=1 (neighbor center or edge).
                    let point = |t: f64| -> [f64; 2] {
                        let mut p = c;
                        p[axis] += sign * t * h;
                        p
                    };
                    let mut lo = 0.0f64;
                    let mut hi = 1.0f64;
                    if shape.contains(point(1.0)) && covered(point(1.0)) {
                        // Neighbor is masked off for a reason other than the
                        // shape along this straight arm (cannot happen for
                        // center-sampled masks, but stay safe): keep h/2.
                        continue;
                    }
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if shape.contains(point(mid)) && covered(point(mid)) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let t = 0.5 * (lo + hi);
                    self.arms[r][2 * axis + side] = (t.max(min_t)) * h;
                }
            }
        }
    }

    /// Return a copy of this grid carrying the codimension split (n, m).
    pub fn with_split(&self, n: usize, m: usize) -> Result<Arc<MaskedGrid>, Error> {
        let mut g = self.clone();
        g.validate_split(n, m)?;
        g.split = Some((n, m));
        Ok(Arc::new(g))
    }

    fn validate_split(&self, n: usize, m: usize) -> Result<(), Error> {
        if n == 0 || n > 2 || n + m != self.dim {
            return Err(Error::IncompatibleAxes);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn extents(&self) -> [usize; 2] {
        self.extents
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    /// Total lattice cells (active or not).
    pub fn total_cells(&self) -> usize {
        self.extents[0] * self.extents[1]
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Flat indices of active cells, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, flat: usize) -> bool {
        self.mask[flat]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Rank of a flat index among active cells.
    pub fn rank_of(&self, flat: usize) -> Option<usize> {
        let r = self.rank[flat];
        (r != usize::MAX).then_some(r)
    }

    /// Measure of one cell, `h^dim`.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Measure of the active region, `count * h^dim`.
    pub fn measure(&self) -> f64 {
        (self.active.len() as f64) * self.cell_measure()
    }

    /// Center coordinates of a cell; `[1]` is 0 in 1D.
    pub fn center(&self, flat: usize) -> [f64; 2] {
        center_of(self.origin, self.h, self.extents, flat)
    }

    /// Flat index of the axis neighbor, if inside the lattice and active.
    pub fn neighbor(&self, flat: usize, axis: usize, up: bool) -> Option<usize> {
        let ix = flat % self.extents[0];
        let iy = flat / self.extents[0];
        let (mut i, ext) = if axis == 0 {
            (ix, self.extents[0])
        } else {
            (iy, self.extents[1])
        };
        if up {
            if i + 1 >= ext {
                return None;
            }
            i += 1;
        } else {
            if i == 0 {
                return None;
            }
            i -= 1;
        }
        let nb = if axis == 0 {
            iy * self.extents[0] + i
        } else {
            i * self.extents[0] + ix
        };
        self.mask[nb].then_some(nb)
    }

    /// Boundary distance along an arm of an active cell (by rank);
    /// `None` when the neighbor is active (interior arm).
    pub fn arm_distance(&self, rank: usize, axis: usize, up: bool) -> Option<f64> {
        let d = self.arms[rank][2 * axis + usize::from(up)];
        (d != 0.0).then_some(d)
    }

    /// Active flats grouped for sorted pairing: one group per kept-axis row
    /// when the split has m ≥ 1, a single global group otherwise. Within a
    /// group, flats ascend (x ascending).
    pub fn pairing_rows(&self) -> Vec<Vec<usize>> {
        match self.split {
            Some((_, m)) if m >= 1 => self.rows(),
            _ => vec![self.active.clone()],
        }
    }

    /// Active flats per y-row (index = iy), x ascending. Empty rows included.
    pub fn rows(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.extents[1]];
        for &flat in &self.active {
            rows[flat / self.extents[0]].push(flat);
        }
        rows
    }
}

/// Nonnegative function sampled at active cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<MaskedGrid>,
    /// One value per active cell, indexed by rank.
    values: Vec<f64>,
}

impl GridFunction {
    /// Sample `f` at active cell centers. Values must be ≥ 0 and finite.
    pub fn from_fn(
        grid: Arc<MaskedGrid>,
        f: impl Fn([f64; 2]) -> f64,
    ) -> Result<GridFunction, Error> {
        let values: Vec<f64> = grid.active().iter().map(|&fl| f(grid.center(fl))).collect();
        GridFunction::from_values(grid, values)
    }

    /// Wrap per-active-cell values (rank order). Validates sign/finiteness.
    pub fn from_values(grid: Arc<MaskedGrid>, values: Vec<f64>) -> Result<GridFunction, Error> {
        if values.len() != grid.active_count() {
            return Err(Error::BadParameter(
                "value count must equal active cell count",
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::BadParameter(
                "grid function values must be nonnegative and finite",
            ));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Arc<MaskedGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a flat cell index; zero extension off the mask.
    pub fn value_at(&self, flat: usize) -> f64 {
        match self.grid.rank_of(flat) {
            Some(r) => self.values[r],
            None => 0.0,
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Integral over the domain: (sum of values in rank order) * h^dim.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    /// Rebind the same values to a split-carrying copy of the grid.
    pub fn with_split(&self, n: usize, m: usize) -> Result<GridFunction, Error> {
        let grid = self.grid.with_split(n, m)?;
        Ok(GridFunction {
            grid,
            values: self.values.clone(),
        })
    }

    /// Apply `f` to every value (result must stay nonnegative/finite).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction, Error> {
        GridFunction::from_values(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Discrete Lipschitz constant of the zero extension: max difference
    /// quotient over stencil arms, counting the jump to 0 across boundary
    /// arms. This is what the summation-by-parts error bounds see, so
    /// tolerance models use it rather than the interior-only slope.
    pub fn lip_estimate(&self) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let mut lip = 0.0f64;
        for (r, &flat) in g.active().iter().enumerate() {
            let vc = self.values[r];
            for axis in 0..g.dim() {
                for up in [false, true] {
                    let vn = match g.neighbor(flat, axis, up) {
                        Some(nb) => self.value_at(nb),
                        None => 0.0,
                    };
                    lip = lip.max((vc - vn).abs() / h);
                }
            }
        }
        lip
    }

    /// Multilinear interpolation of the zero-extended function at `p`
    /// (cell-center lattice; 0 outside the covered box).
    pub fn sample_linear(&self, p: [f64; 2]) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let e = g.extents();
        let o = g.origin();
        // Continuous index: cell centers sit at index i + 0.5.
        let cx = (p[0] - o[0]) / h - 0.5;
        let cy = if g.dim() == 2 {
            (p[1] - o[1]) / h - 0.5
        } else {
            0.0
        };
        let fx = cx.floor();
        let fy = cy.floor();
        let tx = cx - fx;
        let ty = cy - fy;
        let ix = fx as isize;
        let iy = fy as isize;
        let lookup = |jx: isize, jy: isize| -> f64 {
            if jx < 0 || jy < 0 || jx >= e[0] as isize || jy >= e[1] as isize {
                return 0.0;
            }
            self.value_at(jy as usize * e[0] + jx as usize)
        };
        if g.dim() == 1 {
            return (1.0 - tx) * lookup(ix, 0) + tx * lookup(ix + 1, 0);
        }
        (1.0 - ty) * ((1.0 - tx) * lookup(ix, iy) + tx * lookup(ix + 1, iy))
            + ty * ((1.0 - tx) * lookup(ix, iy + 1) + tx * lookup(ix + 1, iy + 1))
    }

    /// Finite-difference gradient of the zero extension.
    ///
    /// Per axis: central difference when both neighbors are active;
    /// one-sided across the masked arm (inactive value = 0) when exactly one
    /// is; 0 when the cell is isolated along the axis.
    pub fn gradient_fd(&self) -> VectorField {
        let g = &self.grid;
        let h = g.h();
        let mut comps = vec![vec![0.0f64; self.values.len()]; g.dim()];
        for (r, &flat) in g.active().iter().enumerate() {
            let vc = self.values[r];
            for (axis, comp) in comps.iter_mut().enumerate() {
                let lo = g.neighbor(flat, axis, false);
                let hi = g.neighbor(flat, axis, true);
                comp[r] = match (lo, hi) {
                    (Some(l), Some(u)) => (self.value_at(u) - self.value_at(l)) / (2.0 * h),
                    (Some(_), None) => (0.0 - vc) / h,
                    (None, Some(_)) => (vc - 0.0) / h,
                    (None, None) => 0.0,
                };
            }
        }
        VectorField {
            grid: self.grid.clone(),
            comps,
        }
    }
}

/// Per-active-cell vector data (one component vector per axis).
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<MaskedGrid>,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Arc<MaskedGrid>, comps: Vec<Vec<f64>>) -> Result<VectorField, Error> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.active_count()) {
            return Err(Error::BadParameter("vector field shape must match grid"));
        }
        Ok(VectorField { grid, comps })
    }

    pub fn grid(&self) -> &Arc<MaskedGrid> {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    /// Euclidean magnitude at an active cell rank.
    pub fn magnitude(&self, rank: usize) -> f64 {
        let mut s = 0.0;
        for c in &self.comps {
            s += c[rank] * c[rank];
        }
        s.sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.active_count()).fold(0.0f64, |a, r| a.max(self.magnitude(r)))
    }

    /// `∫ Σ_{a ∈ axes} self_a · other_a`: rank-ascending sum times h^dim.
    pub fn dot_integral_axes(&self, other: &VectorField, axes: &[usize]) -> f64 {
        debug_assert_eq!(self.grid.active_count(), other.grid.active_count());
        let mut s = 0.0;
        for r in 0..self.grid.active_count() {
            for &a in axes {
                s += self.comps[a][r] * other.comps[a][r];
            }
        }
        s * self.grid.cell_measure()
    }

    /// Dot integral over all axes.
    pub fn dot_integral(&self, other: &VectorField) -> f64 {
        let axes: Vec<usize> = (0..self.grid.dim()).collect();
        self.dot_integral_axes(other, &axes)
    }
}

/// True when the two functions live on equal grids (pointer or structural).
pub fn same_grid(a: &Arc<MaskedGrid>, b: &Arc<MaskedGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

// ---------------------------------------------------------------------------
// Interchange format
// ---------------------------------------------------------------------------

/// Write grid + function: header `dim h e0 [e1]`, then one `index mask value`
/// row per lattice cell (inactive cells carry value 0).
pub fn write_grid_function(out: &mut dyn IoWrite, f: &GridFunction) -> Result<(), Error> {
    let g = f.grid();
    if g.dim() == 1 {
        writeln!(out, "1 {} {}", fmt_g(g.h()), g.extents()[0])?;
    } else {
        writeln!(
            out,
            "2 {} {} {}",
            fmt_g(g.h()),
            g.extents()[0],
            g.extents()[1]
        )?;
    }
    for flat in 0..g.total_cells() {
        let active = g.is_active(flat);
        writeln!(
            out,
            "{} {} {}",
            flat,
            u8::from(active),
            fmt_g(if active { f.value_at(flat) } else { 0.0 })
        )?;
    }
    Ok(())
}

pub fn write_grid_function_to_path(path: &std::path::Path, f: &GridFunction) -> Result<(), Error> {
    let mut buf = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid_function(&mut buf, f)?;
    Ok(())
}

/// Read a grid function written by [`write_grid_function`].
///
/// The format stores no origin, so the loaded lattice is re-centered at the
/// coordinate origin; boundary arms take the cell-face default. Splits are
/// not stored either — apply [`GridFunction::with_split`] afterwards.
pub fn read_grid_function(input: &mut dyn BufRead) -> Result<GridFunction, Error> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let bad = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.into(),
    };
    if head.len() < 3 {
        return Err(bad(1, "header needs `dim h extents`"));
    }
    let dim: usize = head[0].parse().map_err(|_| bad(1, "bad dimension"))?;
    if dim != 1 && dim != 2 {
        return Err(bad(1, "dimension must be 1 or 2"));
    }
    if head.len() != 2 + dim {
        return Err(bad(1, "header extent count must match dimension"));
    }
    let h: f64 = head[1].parse().map_err(|_| bad(1, "bad cell size"))?;
    if !(h.is_finite() && h > 0.0) {
        return Err(bad(1, "cell size must be positive"));
    }
    let mut extents = [1usize; 2];
    for a in 0..dim {
        extents[a] = head[2 + a].parse().map_err(|_| bad(1, "bad extent"))?;
        if extents[a] == 0 {
            return Err(bad(1, "extent must be positive"));
        }
    }
    let total = extents[0] * extents[1];
    let mut mask = vec![false; total];
    let mut values = Vec::new();
    let mut seen = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(bad(lineno, "cell rows are `index mask value`"));
        }
        let idx: usize = cols[0].parse().map_err(|_| bad(lineno, "bad cell index"))?;
        if idx != seen {
            return Err(bad(lineno, "cell indices must be 0..total in order"));
        }
        if idx >= total {
            return Err(bad(lineno, "cell index out of range"));
        }
        let m: u8 = cols[1].parse().map_err(|_| bad(lineno, "bad mask flag"))?;
        let v: f64 = cols[2].parse().map_err(|_| bad(lineno, "bad value"))?;
        match m {
            0 => {
                if v != 0.0 {
                    return Err(bad(lineno, "inactive cells must carry value 0"));
                }
            }
            1 => {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(bad(lineno, "values must be nonnegative and finite"));
                }
                mask[idx] = true;
                values.push(v);
            }
            _ => return Err(bad(lineno, "mask flag must be 0 or 1")),
        }
        seen += 1;
    }
    if seen != total {
        return Err(bad(seen + 1, "missing cell rows"));
    }
    let origin = [
        -0.5 * extents[0] as f64 * h,
        if dim == 2 {
            -0.5 * extents[1] as f64 * h
        } else {
            -0.5 * h
        },
    ];
    let grid = MaskedGrid::from_mask(dim, origin, h, extents, mask, None)?;
    GridFunction::from_values(grid, values)
}

pub fn read_grid_function_from_path(path: &std::path::Path) -> Result<GridFunction, Error> {
    let mut buf = std::io::BufReader::new(std::fs::File::open(path)?);
    read_grid_function(&mut buf)
}
