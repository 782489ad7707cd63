//! Rearrangements and symmetrizations: distribution functions, the
//! decreasing rearrangement u*, Schwarz and Steiner symmetrization,
//! extremal couples for the Hardy–Littlewood inequality, and the
//! chain-rule machinery for composed profiles.
//!
//! Conventions used throughout:
//!
//! * the rank order of cells is (value descending, flat cell index
//!   ascending) — the fixed lexicographic tie-break every exactness
//!   guarantee relies on;
//! * the rank measure of a cell is `rank * h^dim`, i.e. the measure of
//!   cells with strictly larger value plus the tie-class offset;
//! * resampling onto a symmetric mask places the k-th largest value into
//!   the k-th most central cell (ties by flat index), which evaluates
//!   u*(ω_n rⁿ) at exact cell measures instead of approximate radii and
//!   preserves value multisets bitwise.

use crate::error::Error;
use crate::grid::{GridFunction, MaskedGrid, VectorField};
use crate::profile::{RadialProfile, StepProfile};
use crate::tol;

/// Volume of the unit ball in dimension n (n ∈ {1, 2}).
pub fn ball_coeff(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => panic!("ball dimension must be 1 or 2"),
    }
}

/// Measure of the superlevel set {u > t}: `count * h^dim`.
pub fn distribution_function(u: &GridFunction, t: f64) -> Result<f64, Error> {
    if !(t >= 0.0) {
        return Err(Error::NegativeThreshold);
    }
    let count = u.values().iter().filter(|&&v| v > t).count();
    Ok(count as f64 * u.grid().cell_measure())
}

/// Active-cell ranks ordered by (value descending, rank ascending).
/// Rank ascending coincides with flat-index ascending on a masked grid.
pub(crate) fn ranks_by_value_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("grid values are finite")
            .then(a.cmp(&b))
    });
    order
}

/// The decreasing rearrangement u* as a step profile with one step per
/// cell (ties are kept as separate equal steps, so the profile's value
/// multiset is exactly the cell multiset).
pub fn decreasing_rearrangement(u: &GridFunction) -> StepProfile {
    let mut vals = u.values().to_vec();
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).expect("grid values are finite"));
    StepProfile::from_cell_values(vals, u.grid().cell_measure())
        .expect("sorted cell values form a valid profile")
}

/// Symmetric (ball) resampling of the value multiset of `u` onto a fresh
/// centered lattice with the same cell size: the k-th largest value goes
/// to the k-th most central cell.
fn symmetric_resample(u: &GridFunction) -> Result<GridFunction, Error> {
    let g = u.grid();
    let n = g.dim();
    let h = g.h();
    let m_cells = g.active_count();
    let total = g.measure();
    let omega = ball_coeff(n);
    let r_outer = match n {
        1 => total / 2.0,
        _ => (total / omega).sqrt(),
    };
    let half = (r_outer / h).ceil() as usize + 1;
    let mut extents = [1usize; 2];
    let mut origin = [0.0f64, -0.5 * h];
    for e in extents.iter_mut().take(n) {
        *e = 2 * half;
    }
    for o in origin.iter_mut().take(n) {
        *o = -(half as f64) * h;
    }
    let total_cells = extents[0] * extents[1];
    if total_cells < m_cells {
        return Err(Error::BadParameter("resample lattice cannot hold the mass"));
    }
    // Center-out cell order: (squared radius ascending, flat ascending).
    let mut order: Vec<(f64, usize)> = (0..total_cells)
        .map(|flat| {
            let ix = flat % extents[0];
            let iy = flat / extents[0];
            let x = origin[0] + (ix as f64 + 0.5) * h;
            let y = if n == 2 {
                origin[1] + (iy as f64 + 0.5) * h
            } else {
                0.0
            };
            (x * x + y * y, flat)
        })
        .collect();
    order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let chosen: Vec<usize> = order[..m_cells].iter().map(|&(_, f)| f).collect();
    let mut mask = vec![false; total_cells];
    for &f in &chosen {
        mask[f] = true;
    }
    let out_grid = MaskedGrid::from_mask(n, origin, h, extents, mask, g.split())?;
    let mut sorted = u.values().to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("grid values are finite"));
    let mut values = vec![0.0f64; m_cells];
    for (k, &flat) in chosen.iter().enumerate() {
        values[out_grid.rank_of(flat).expect("chosen cells are active")] = sorted[k];
    }
    GridFunction::from_values(out_grid, values)
}

/// Schwarz rearrangement: the radial profile u★(r) = u*(ω_n rⁿ) on
/// `nodes` equally spaced radii, plus the resampled grid function on the
/// centered ball mask.
///
/// Requires full symmetrization: the grid must carry no split or an
/// (n, 0) split.
pub fn schwarz_rearrangement(
    u: &GridFunction,
    nodes: usize,
) -> Result<(RadialProfile, GridFunction), Error> {
    let g = u.grid();
    if let Some((_, m)) = g.split() {
        if m != 0 {
            return Err(Error::IncompatibleAxes);
        }
    }
    if nodes < 2 {
        return Err(Error::BadParameter(
            "radial profiles need at least two nodes",
        ));
    }
    let n = g.dim();
    let omega = ball_coeff(n);
    let total = g.measure();
    let r_outer = match n {
        1 => total / 2.0,
        _ => (total / omega).sqrt(),
    };
    let ustar = decreasing_rearrangement(u);
    let mut radii = Vec::with_capacity(nodes);
    let mut values = Vec::with_capacity(nodes);
    for j in 0..nodes {
        let r = r_outer * j as f64 / (nodes - 1) as f64;
        let s = match n {
            1 => omega * r,
            _ => omega * r * r,
        };
        radii.push(r);
        values.push(ustar.eval_clamped(s.min(total)));
    }
    let profile = RadialProfile::new(n, radii, values)?;
    let resampled = symmetric_resample(u)?;
    Ok((profile, resampled))
}

/// Steiner symmetrization in codimension n: per kept-axis slice, the
/// slice's values are rearranged onto the centered interval of the
/// slice's measure. With m = 0 this is the full symmetric resampling.
pub fn steiner_symmetrization(u: &GridFunction) -> Result<GridFunction, Error> {
    let g = u.grid();
    let (n, m) = g.split().ok_or(Error::NoCodimensionSplit)?;
    if m == 0 {
        return symmetric_resample(u);
    }
    // dim = 2, n = 1, m = 1: rearrange each y-row in x.
    debug_assert_eq!(g.dim(), 2);
    let e = g.extents();
    let h = g.h();
    let origin = [-0.5 * e[0] as f64 * h, g.origin()[1]];
    let mut mask = vec![false; e[0] * e[1]];
    let mut staged: Vec<(usize, f64)> = Vec::with_capacity(g.active_count());
    for (iy, row) in g.rows().iter().enumerate() {
        let mj = row.len();
        if mj == 0 {
            continue;
        }
        let mut vals: Vec<f64> = row.iter().map(|&fl| u.value_at(fl)).collect();
        vals.sort_unstable_by(|a, b| b.partial_cmp(a).expect("grid values are finite"));
        let start = (e[0] - mj) / 2;
        // Center-out order of the target cells: (|x| ascending, flat asc).
        let mut cells: Vec<(f64, usize)> = (start..start + mj)
            .map(|ix| {
                let x = origin[0] + (ix as f64 + 0.5) * h;
                (x.abs(), iy * e[0] + ix)
            })
            .collect();
        cells.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for (k, &(_, flat)) in cells.iter().enumerate() {
            mask[flat] = true;
            staged.push((flat, vals[k]));
        }
    }
    // A mask that already was row-centered symmetrizes to itself; keep
    // the input grid (and its boundary-arm data) in that case.
    let out_grid = if origin[0] == g.origin()[0] && mask.as_slice() == g.mask() {
        g.clone()
    } else {
        MaskedGrid::from_mask(2, origin, h, e, mask, Some((n, m)))?
    };
    let mut values = vec![0.0f64; staged.len()];
    for (flat, v) in staged {
        values[out_grid.rank_of(flat).expect("staged cells are active")] = v;
    }
    GridFunction::from_values(out_grid, values)
}

/// Extremal Hardy–Littlewood partner: w(cell) = W(rank-measure of cell),
/// where the rank measure is `rank * h^dim` in the fixed (value desc,
/// cell index asc) order. Guarantees Σu·w·h^dim = Σu*·W exactly.
pub fn extremal_for(u: &GridFunction, w_profile: &StepProfile) -> Result<GridFunction, Error> {
    let g = u.grid();
    let measure = g.measure();
    let total = w_profile.total();
    if (total - measure).abs() > tol::MEASURE_REL * total.max(measure) {
        return Err(Error::IncompatibleProfile);
    }
    let hd = g.cell_measure();
    let order = ranks_by_value_desc(u.values());
    let mut values = vec![0.0f64; order.len()];
    for (k, &rank) in order.iter().enumerate() {
        values[rank] = w_profile.eval_clamped(k as f64 * hd);
    }
    GridFunction::from_values(g.clone(), values)
}

/// Composed-profile gradient via the chain rule: per cell,
/// ∇w = [W′(s)/(u*)′(s)]·∇u at s = μ_u(u(cell)), with both derivatives
/// taken as symmetric quotients over the shared measure window. The
/// factor is 0 where the u*-quotient vanishes (flat zones wider than the
/// window; the key condition forces W flat there too).
pub fn chain_rule_gradient(
    u: &GridFunction,
    w_profile: &StepProfile,
) -> Result<VectorField, Error> {
    let ustar = decreasing_rearrangement(u);
    let (ok, _c) = check_key_condition(w_profile, &ustar)?;
    if !ok {
        return Err(Error::ExtremalNotSobolev);
    }
    let g = u.grid();
    let hd = g.cell_measure();
    let window = ustar.default_window(hd);
    // Sorted copy for O(log M) rank-measure lookups.
    let sorted = ustar.values();
    let grad = u.gradient_fd();
    let mut comps = vec![vec![0.0f64; g.active_count()]; g.dim()];
    for rank in 0..g.active_count() {
        let v = u.values()[rank];
        // Measure of cells strictly above v (descending list prefix).
        let above = sorted.partition_point(|&x| x > v);
        let s = above as f64 * hd;
        let du = ustar.window_quotient(s, window);
        let factor = if du == 0.0 {
            0.0
        } else {
            w_profile.window_quotient(s, window) / du
        };
        for (axis, comp) in comps.iter_mut().enumerate() {
            comp[rank] = factor * grad.component(axis)[rank];
        }
    }
    VectorField::new(g.clone(), comps)
}

/// Measure window (in cells) for the mu_prime chord. Lattice level-set
/// counts carry an oscillatory discrepancy of tens of cells (radius
/// shells cluster), so each chord endpoint is additionally averaged
/// over a half-window band — the combination pushes the noise well
/// under the curvature bias at this width.
const MU_WINDOW_CELLS: usize = 1024;
/// Value classes carrying at least this fraction of the total measure
/// are treated as plateaus of u (μ_u jumps there).
const MU_PLATEAU_FRACTION: f64 = 0.05;

/// Difference-quotient estimate of μ_u′(t) through the step profile:
/// μ′ = 1/(u*)′ at s = μ_u(t), with (u*)′ taken as a symmetric chord of
/// u* over a fixed measure window. A direct level-set count over the
/// resulting value window must reproduce the window measure (the
/// reciprocal identity); plateaus fail that check or the plateau guards
/// and raise an error.
pub fn mu_prime(u: &GridFunction, t: f64) -> Result<f64, Error> {
    if !t.is_finite() {
        return Err(Error::BadParameter("threshold must be finite"));
    }
    if t < 0.0 {
        return Err(Error::NegativeThreshold);
    }
    let max = u.max();
    if t == 0.0 || t >= max {
        return Err(Error::PlateauDerivative);
    }
    let hd = u.grid().cell_measure();
    let total = u.grid().measure();
    // μ_u jumps at values u takes on macroscopic measure.
    let class = u.values().iter().filter(|&&v| v == t).count() as f64 * hd;
    if class >= MU_PLATEAU_FRACTION * total {
        return Err(Error::PlateauDerivative);
    }
    let ustar = decreasing_rearrangement(u);
    let s = distribution_function(u, t)?;
    let window = MU_WINDOW_CELLS.min(u.grid().active_count() / 4).max(2) as f64 * hd;
    let s_lo = (s - 0.5 * window).max(0.0);
    let s_hi = (s + 0.5 * window).min(total);
    if s_hi <= s_lo {
        return Err(Error::PlateauDerivative);
    }
    // Band-averaged endpoint read: mean of u* over a half-window band,
    // exact through the concentration integral. Clamped bands shift the
    // point the average represents, so each read reports its effective
    // center alongside the value.
    let band = 0.5 * (s_hi - s_lo);
    let averaged = |center: f64| -> (f64, f64) {
        let lo = (center - 0.5 * band).max(0.0);
        let hi = (center + 0.5 * band).min(total);
        let mean = (ustar.concentration_clamped(hi) - ustar.concentration_clamped(lo)) / (hi - lo);
        (mean, 0.5 * (lo + hi))
    };
    let (t_hi, c_lo) = averaged(s_lo);
    let (t_lo, c_hi) = averaged(s_hi);
    if t_hi <= t_lo || c_hi <= c_lo {
        return Err(Error::PlateauDerivative);
    }
    let est = -(c_hi - c_lo) / (t_hi - t_lo);
    // A window with no values strictly inside is a jump of μ_u: the
    // chord spans a gap in the range of u, not a graph segment.
    if !u.values().iter().any(|&v| v > t_lo && v < t_hi) {
        return Err(Error::PlateauDerivative);
    }
    // Reciprocal identity: the level-set count across (t_lo, t_hi] must
    // match the measure window; a plateau inside the window inflates the
    // count and fails the ratio test.
    let count = u
        .values()
        .iter()
        .filter(|&&v| v > t_lo && v <= t_hi)
        .count();
    let product = (c_hi - c_lo) / (count as f64 * hd);
    if !(product > 1.0 / 3.0 && product < 3.0) {
        return Err(Error::PlateauDerivative);
    }
    Ok(est)
}

/// Key condition for the chain rule: every step drop of W is bounded by
/// C times the matching drop of u*. Returns the smallest such C, or
/// `(false, ∞)` when W drops across a u*-plateau.
pub fn check_key_condition(w: &StepProfile, ustar: &StepProfile) -> Result<(bool, f64), Error> {
    let (tw, tu) = (w.total(), ustar.total());
    if (tw - tu).abs() > tol::MEASURE_REL * tw.max(tu) {
        return Err(Error::IncompatibleProfile);
    }
    let end = tw.min(tu);
    let mut c_max = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < w.steps() && j < ustar.steps() {
        let wb = w.breaks()[i + 1];
        let ub = ustar.breaks()[j + 1];
        let next = wb.min(ub);
        if next >= end {
            break; // the final breakpoint is not an interior drop
        }
        let mut dw = 0.0;
        let mut du = 0.0;
        if wb == next {
            dw = w.values()[i] - w.values()[i + 1];
            i += 1;
        }
        if ub == next {
            du = ustar.values()[j] - ustar.values()[j + 1];
            j += 1;
        }
        if dw > 0.0 {
            if du <= 0.0 {
                return Ok((false, f64::INFINITY));
            }
            c_max = c_max.max(dw / du);
        }
    }
    Ok((true, c_max))
}

/// Discrete proxy for "no flat zones": no two active cells share an
/// identical value strictly between 0 and the maximum. Ties at the
/// maximum (apex plateau) and at 0 are exempt.
pub fn check_no_flat_zones(u: &GridFunction) -> bool {
    let mut vals = u.values().to_vec();
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).expect("grid values are finite"));
    let max = vals[0];
    vals.windows(2)
        .all(|w| w[0] != w[1] || w[0] == max || w[0] == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_masked_grid, GridFunction, Shape};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn disk_grid(h: f64) -> Arc<MaskedGrid> {
        make_masked_grid(
            &[(-1.0, 1.0), (-1.0, 1.0)],
            h,
            &Shape::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
        )
        .unwrap()
    }

    fn unit_interval_grid(h: f64) -> Arc<MaskedGrid> {
        make_masked_grid(&[(0.0, 1.0)], h, &Shape::Interval { min: 0.0, max: 1.0 }).unwrap()
    }

    fn cone_on_disk(h: f64) -> GridFunction {
        let g = disk_grid(h);
        GridFunction::from_fn(g, |p| (1.0 - (p[0] * p[0] + p[1] * p[1]).sqrt()).max(0.0)).unwrap()
    }

    #[test]
    fn distribution_function_counts_cells() {
        let g = unit_interval_grid(0.25);
        let u = GridFunction::from_values(g, vec![0.1, 0.9, 0.5, 0.9]).unwrap();
        assert_eq!(distribution_function(&u, 0.0).unwrap(), 4.0 * 0.25);
        assert_eq!(distribution_function(&u, 0.5).unwrap(), 2.0 * 0.25);
        assert_eq!(distribution_function(&u, 0.95).unwrap(), 0.0);
        assert!(matches!(
            distribution_function(&u, -0.5),
            Err(Error::NegativeThreshold)
        ));
    }

    #[test]
    fn rearrangement_is_equimeasurable_bitwise_even_for_decimal_h() {
        // h = 0.1 is not a binary fraction; the identity still holds
        // bitwise because both sides compute (count as f64) * cell_measure.
        let g = unit_interval_grid(0.1);
        let u = GridFunction::from_fn(g, |p| (p[0] * 7.0).sin().abs()).unwrap();
        let p = decreasing_rearrangement(&u);
        for k in 0..=64 {
            let t = u.max() * k as f64 / 64.0;
            let a = distribution_function(&u, t).unwrap();
            let b = p.distribution(t).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "t = {t}");
        }
    }

    #[test]
    fn rearrangement_preserves_the_value_multiset_exactly() {
        let u = cone_on_disk(0.125);
        let p = decreasing_rearrangement(&u);
        let mut original = u.values().to_vec();
        original.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(p.values().len(), original.len());
        for (a, b) in p.values().iter().zip(&original) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rearrangement_is_order_preserving() {
        let g = unit_interval_grid(0.125);
        let u = GridFunction::from_fn(g.clone(), |p| p[0]).unwrap();
        let v = GridFunction::from_fn(g, |p| p[0] + 0.25 * (p[0] * 13.0).sin().abs()).unwrap();
        let (pu, pv) = (decreasing_rearrangement(&u), decreasing_rearrangement(&v));
        for (a, b) in pu.values().iter().zip(pv.values()) {
            assert!(a <= b);
        }
    }

    #[test]
    fn schwarz_profile_and_resample_on_cone() {
        let u = cone_on_disk(1.0 / 32.0);
        let (profile, resampled) = schwarz_rearrangement(&u, 257).unwrap();
        // Profile endpoints: near max at r = 0, minimum value at R.
        assert!(profile.values()[0] >= profile.values()[128]);
        assert_relative_eq!(
            profile.outer_radius(),
            (u.grid().measure() / std::f64::consts::PI).sqrt(),
            max_relative = 1e-12
        );
        // Value multiset preserved bitwise => all p-norms preserved.
        let mut a = u.values().to_vec();
        let mut b = resampled.values().to_vec();
        a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        // The resampled function is radially nonincreasing: center-out
        // order sees nonincreasing values.
        let g = resampled.grid();
        let mut cells: Vec<(f64, usize)> = g
            .active()
            .iter()
            .map(|&fl| {
                let c = g.center(fl);
                (c[0] * c[0] + c[1] * c[1], fl)
            })
            .collect();
        cells.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut prev = f64::INFINITY;
        for &(_, fl) in &cells {
            let v = resampled.value_at(fl);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn schwarz_resampling_is_idempotent_bitwise() {
        let u = cone_on_disk(1.0 / 16.0);
        let (_, once) = schwarz_rearrangement(&u, 65).unwrap();
        let (_, twice) = schwarz_rearrangement(&once, 65).unwrap();
        assert_eq!(once.grid().extents(), twice.grid().extents());
        assert_eq!(once.values().len(), twice.values().len());
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn schwarz_rejects_partial_splits() {
        let u = cone_on_disk(0.25).with_split(1, 1).unwrap();
        assert!(matches!(
            schwarz_rearrangement(&u, 65),
            Err(Error::IncompatibleAxes)
        ));
    }

    #[test]
    fn steiner_requires_a_split() {
        let u = cone_on_disk(0.25);
        assert!(matches!(
            steiner_symmetrization(&u),
            Err(Error::NoCodimensionSplit)
        ));
    }

    #[test]
    fn steiner_centers_each_row_and_preserves_row_multisets() {
        let g = make_masked_grid(
            &[(0.0, 1.0), (0.0, 1.0)],
            0.125,
            &Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            },
        )
        .unwrap()
        .with_split(1, 1)
        .unwrap();
        let u = GridFunction::from_fn(g.clone(), |p| {
            (p[0] * 9.1).sin().abs() + 0.3 * (p[1] * 5.7).cos().abs()
        })
        .unwrap();
        let s = steiner_symmetrization(&u).unwrap();
        let rows_in = g.rows();
        let rows_out = s.grid().rows();
        for (rin, rout) in rows_in.iter().zip(&rows_out) {
            assert_eq!(rin.len(), rout.len());
            // Row multiset preserved bitwise -> per-row max exact.
            let mut a: Vec<f64> = rin.iter().map(|&f| u.value_at(f)).collect();
            let mut b: Vec<f64> = rout.iter().map(|&f| s.value_at(f)).collect();
            a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            // Row is contiguous and centered.
            if !rout.is_empty() {
                let e0 = s.grid().extents()[0];
                let ix0 = rout[0] % e0;
                let ix1 = rout[rout.len() - 1] % e0;
                assert_eq!(ix1 - ix0 + 1, rout.len());
                assert_eq!(ix0, (e0 - rout.len()) / 2);
            }
            // Values nonincreasing along the center-out order.
            let mut order: Vec<(f64, usize)> = rout
                .iter()
                .map(|&f| (s.grid().center(f)[0].abs(), f))
                .collect();
            order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut prev = f64::INFINITY;
            for &(_, f) in &order {
                let v = s.value_at(f);
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn steiner_is_idempotent_bitwise() {
        let g = make_masked_grid(
            &[(-0.5, 0.5), (0.0, 1.0)],
            0.0625,
            &Shape::Rectangle {
                min: [-0.5, 0.0],
                max: [0.5, 1.0],
            },
        )
        .unwrap()
        .with_split(1, 1)
        .unwrap();
        let u = GridFunction::from_fn(g, |p| (p[0] * 11.0).cos().abs() + p[1]).unwrap();
        let once = steiner_symmetrization(&u).unwrap();
        let twice = steiner_symmetrization(&once).unwrap();
        assert_eq!(**once.grid(), **twice.grid());
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn steiner_of_symmetric_input_is_a_fixed_point() {
        let g = make_masked_grid(
            &[(-0.5, 0.5), (0.0, 1.0)],
            0.0625,
            &Shape::Rectangle {
                min: [-0.5, 0.0],
                max: [0.5, 1.0],
            },
        )
        .unwrap()
        .with_split(1, 1)
        .unwrap();
        // Symmetric nonincreasing in x on each row already.
        let u = GridFunction::from_fn(g, |p| (1.0 - p[0].abs()) * (1.0 + p[1])).unwrap();
        let s = steiner_symmetrization(&u).unwrap();
        for (a, b) in s.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn extremal_identity_returns_u_wherever_values_are_unique() {
        let u = cone_on_disk(1.0 / 16.0);
        let ustar = decreasing_rearrangement(&u);
        let w = extremal_for(&u, &ustar).unwrap();
        // Even with radius ties, W = u* places the tied value at every
        // rank of the tie class, so w = u bitwise everywhere.
        for (a, b) in w.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn extremal_for_squared_profile_gives_u_squared() {
        let u = cone_on_disk(1.0 / 16.0);
        let ustar = decreasing_rearrangement(&u);
        let wsq = ustar.map_values(|v| v * v).unwrap();
        let w = extremal_for(&u, &wsq).unwrap();
        for (a, &b) in w.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), (b * b).to_bits());
        }
    }

    #[test]
    fn extremal_measure_mismatch_is_rejected() {
        let u = cone_on_disk(0.25);
        let wrong = StepProfile::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!(matches!(
            extremal_for(&u, &wrong),
            Err(Error::IncompatibleProfile)
        ));
    }

    #[test]
    fn extremal_on_flat_zone_takes_multiple_values_but_keeps_hl_equality() {
        // u two-valued with a flat zone of measure 0.5; W strictly drops.
        let g = unit_interval_grid(0.25);
        let u = GridFunction::from_values(g.clone(), vec![1.0, 1.0, 0.5, 0.5]).unwrap();
        let w_prof =
            StepProfile::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        let w = extremal_for(&u, &w_prof).unwrap();
        // Tie class {cells 0, 1} gets distinct W values in index order.
        assert_eq!(w.values(), &[4.0, 3.0, 2.0, 1.0]);
        // HL equality: Σ u w h = Σ u*_k W(k h) exactly.
        let hd = 0.25;
        let lhs: f64 = u
            .values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * hd;
        let ustar = decreasing_rearrangement(&u);
        let rhs: f64 = (0..4)
            .map(|k| ustar.values()[k] * w_prof.eval_clamped(k as f64 * hd))
            .sum::<f64>()
            * hd;
        assert_eq!(lhs.to_bits(), rhs.to_bits());
    }

    #[test]
    fn chain_rule_identity_profile_reproduces_the_gradient() {
        let u = cone_on_disk(1.0 / 32.0);
        let ustar = decreasing_rearrangement(&u);
        let grad_w = chain_rule_gradient(&u, &ustar).unwrap();
        let grad_u = u.gradient_fd();
        let mut nonzero = 0usize;
        for r in 0..u.grid().active_count() {
            for axis in 0..2 {
                let a = grad_w.component(axis)[r];
                let b = grad_u.component(axis)[r];
                // factor is exactly 1.0 wherever the window sees a drop.
                if a != 0.0 {
                    assert_eq!(a.to_bits(), b.to_bits());
                    nonzero += 1;
                }
            }
        }
        assert!(nonzero > u.grid().active_count() / 2);
    }

    #[test]
    fn chain_rule_squared_profile_matches_2u_grad_u() {
        let u = cone_on_disk(1.0 / 64.0);
        let ustar = decreasing_rearrangement(&u);
        let wsq = ustar.map_values(|v| v * v).unwrap();
        let grad_w = chain_rule_gradient(&u, &wsq).unwrap();
        let grad_u = u.gradient_fd();
        let g = u.grid();
        let max = u.max();
        let mut worst = 0.0f64;
        for (r, &flat) in g.active().iter().enumerate() {
            let v = u.values()[r];
            // Stay away from apex and support edge where windows clip.
            if v < 0.2 * max || v > 0.8 * max {
                continue;
            }
            let c = g.center(flat);
            let rad = (c[0] * c[0] + c[1] * c[1]).sqrt();
            if rad < 0.1 {
                continue;
            }
            for axis in 0..2 {
                let expected = 2.0 * v * grad_u.component(axis)[r];
                let got = grad_w.component(axis)[r];
                worst = worst.max((got - expected).abs());
            }
        }
        // Windowed-quotient ratio error is O(window * |u*' slope|); the
        // bound below was measured and holds with ~2x headroom.
        assert!(worst < 0.05, "worst chain-rule deviation {worst}");
    }

    #[test]
    fn chain_rule_rejects_profiles_violating_the_key_condition() {
        let g = unit_interval_grid(0.25);
        let u = GridFunction::from_values(g, vec![1.0, 1.0, 0.5, 0.5]).unwrap();
        // W drops inside u*'s plateaus.
        let w_prof =
            StepProfile::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            chain_rule_gradient(&u, &w_prof),
            Err(Error::ExtremalNotSobolev)
        ));
    }

    #[test]
    fn mu_prime_on_1d_ramp_is_minus_one() {
        let g = unit_interval_grid(1.0 / 128.0);
        let u = GridFunction::from_fn(g, |p| p[0]).unwrap();
        let est = mu_prime(&u, 0.3).unwrap();
        assert!((est + 1.0).abs() < 0.05, "mu' = {est}");
    }

    #[test]
    fn mu_prime_on_cone_matches_minus_2_pi_one_minus_t() {
        let u = cone_on_disk(1.0 / 64.0);
        let est = mu_prime(&u, 0.5).unwrap();
        let exact = -2.0 * std::f64::consts::PI * 0.5;
        assert!(
            (est - exact).abs() < 0.05 * exact.abs(),
            "mu'(0.5) = {est}, exact {exact}"
        );
    }

    #[test]
    fn mu_prime_reciprocal_identity_within_ten_percent_at_fine_h() {
        let g = unit_interval_grid(1.0 / 128.0);
        // Smooth strictly monotone profile.
        let u = GridFunction::from_fn(g, |p| (1.0 - p[0] * p[0]).max(0.0)).unwrap();
        for &t in &[0.2, 0.4, 0.6, 0.8] {
            let est = mu_prime(&u, t).unwrap();
            let ustar = decreasing_rearrangement(&u);
            let s = distribution_function(&u, t).unwrap();
            let w = ustar.default_window(u.grid().cell_measure());
            let du = ustar.window_quotient(s, w);
            let product = est * du;
            assert!(
                (product - 1.0).abs() < 0.10,
                "reciprocal product {product} at t = {t}"
            );
        }
    }

    #[test]
    fn mu_prime_rejects_plateaus_and_bad_thresholds() {
        // Two-valued function: μ jumps at the plateau value 0.5.
        let g = unit_interval_grid(1.0 / 32.0);
        let u = GridFunction::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.5 }).unwrap();
        assert!(matches!(mu_prime(&u, 0.5), Err(Error::PlateauDerivative)));
        assert!(matches!(mu_prime(&u, -1.0), Err(Error::NegativeThreshold)));
        assert!(matches!(mu_prime(&u, 1.5), Err(Error::PlateauDerivative)));
        assert!(matches!(mu_prime(&u, 0.0), Err(Error::PlateauDerivative)));
    }

    #[test]
    fn key_condition_identity_and_scaling() {
        let u = cone_on_disk(1.0 / 16.0);
        let ustar = decreasing_rearrangement(&u);
        let (ok, c) = check_key_condition(&ustar, &ustar).unwrap();
        assert!(ok);
        assert_relative_eq!(c, 1.0, max_relative = 1e-12);
        let doubled = ustar.map_values(|v| 2.0 * v).unwrap();
        let (ok2, c2) = check_key_condition(&doubled, &ustar).unwrap();
        assert!(ok2);
        assert_relative_eq!(c2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn key_condition_detects_drops_across_plateaus() {
        // ustar flat on [0.25, 0.75), W strictly decreasing there.
        let ustar =
            StepProfile::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![3.0, 2.0, 2.0, 1.0]).unwrap();
        let w =
            StepProfile::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        let (ok, c) = check_key_condition(&w, &ustar).unwrap();
        assert!(!ok);
        assert!(c.is_infinite());
    }

    #[test]
    fn no_flat_zones_examples() {
        // Off-center cone: squared radii all distinct -> true.
        let g = disk_grid(0.125);
        let u = GridFunction::from_fn(g.clone(), |p| {
            let dx = p[0] - 0.013;
            let dy = p[1] - 0.0077;
            (1.0 - (dx * dx + dy * dy).sqrt()).max(0.0)
        })
        .unwrap();
        assert!(check_no_flat_zones(&u));
        // Two-valued step function -> false.
        let two = GridFunction::from_fn(g.clone(), |p| if p[0] < 0.0 { 1.0 } else { 0.5 }).unwrap();
        assert!(!check_no_flat_zones(&two));
        // Constant function: vacuously true (ties sit at the maximum).
        let konst = GridFunction::from_fn(g, |_| 2.0).unwrap();
        assert!(check_no_flat_zones(&konst));
    }
}
