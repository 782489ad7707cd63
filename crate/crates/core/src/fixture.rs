//! Seeded fixture generation: shape specs, source-function specs, and
//! comparison-profile specs, shared by the verification suite and the
//! command line.
//!
//! Spec strings are a tiny grammar, `name` or `name(arg, ...)`:
//!
//! shapes — `square`, `rect(w,h)` (centered), `disk(r)`, `annulus(ri,ro)`,
//! `lshape`, `tilted-rect(deg)` (a 1.2 x 0.6 rectangle rotated about the
//! origin, 30 degrees by default), `interval(a,b)`;
//!
//! functions — `cone`, `plane`, `tent-sum(k)`, `bump`, `indicator(<shape>)`,
//! `random-lipschitz(L)`;
//!
//! comparison profiles — `ustar`, `ustar-sq`, `trunc(gamma)`, `zero`.
//!
//! Everything is deterministic: the seeded specs draw from a ChaCha8 stream
//! in a fixed order, the rest ignore the seed entirely.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::grid::{make_masked_grid, GridFunction, MaskedGrid, Shape};
use crate::profile::StepProfile;
use crate::rearrange::decreasing_rearrangement;

/// Split `name(args)` into the name and the raw argument string.
fn split_spec(spec: &str) -> Result<(&str, Option<&str>), Error> {
    let s = spec.trim();
    match s.find('(') {
        None => Ok((s, None)),
        Some(i) => {
            if !s.ends_with(')') {
                return Err(Error::BadFunctionSpec(format!(
                    "unbalanced parentheses in `{s}`"
                )));
            }
            Ok((&s[..i], Some(&s[i + 1..s.len() - 1])))
        }
    }
}

fn numeric_args(name: &str, raw: Option<&str>, want: &[usize]) -> Result<Vec<f64>, Error> {
    let vals: Vec<f64> = match raw {
        None => Vec::new(),
        Some(r) if r.trim().is_empty() => Vec::new(),
        Some(r) => r
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::BadFunctionSpec(format!("`{name}`: bad argument `{a}`")))
            })
            .collect::<Result<_, _>>()?,
    };
    if !want.contains(&vals.len()) {
        return Err(Error::BadFunctionSpec(format!(
            "`{name}` takes {want:?} arguments, got {}",
            vals.len()
        )));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadFunctionSpec(format!(
            "`{name}`: arguments must be finite"
        )));
    }
    Ok(vals)
}

/// Parse a shape spec string.
pub fn parse_shape(spec: &str) -> Result<Shape, Error> {
    let (name, raw) = split_spec(spec)?;
    match name {
        "square" => {
            numeric_args(name, raw, &[0])?;
            Ok(Shape::Rectangle {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            })
        }
        "rect" => {
            let a = numeric_args(name, raw, &[2])?;
            if a[0] <= 0.0 || a[1] <= 0.0 {
                return Err(Error::BadFunctionSpec(
                    "`rect`: sides must be positive".into(),
                ));
            }
            Ok(Shape::Rectangle {
                min: [-0.5 * a[0], -0.5 * a[1]],
                max: [0.5 * a[0], 0.5 * a[1]],
            })
        }
        "disk" => {
            let a = numeric_args(name, raw, &[0, 1])?;
            let r = a.first().copied().unwrap_or(1.0);
            if r <= 0.0 {
                return Err(Error::BadFunctionSpec(
                    "`disk`: radius must be positive".into(),
                ));
            }
            Ok(Shape::Disk {
                center: [0.0, 0.0],
                radius: r,
            })
        }
        "annulus" => {
            let a = numeric_args(name, raw, &[2])?;
            if !(0.0 < a[0] && a[0] < a[1]) {
                return Err(Error::BadFunctionSpec(
                    "`annulus`: need 0 < inner < outer".into(),
                ));
            }
            Ok(Shape::Annulus {
                center: [0.0, 0.0],
                inner: a[0],
                outer: a[1],
            })
        }
        "lshape" => {
            numeric_args(name, raw, &[0])?;
            Ok(Shape::LShape {
                min: [0.0, 0.0],
                max: [1.0, 1.0],
            })
        }
        "tilted-rect" => {
            let a = numeric_args(name, raw, &[0, 1, 3])?;
            let deg = a.first().copied().unwrap_or(30.0);
            let (w, ht) = if a.len() == 3 {
                (a[1], a[2])
            } else {
                (1.2, 0.6)
            };
            if w <= 0.0 || ht <= 0.0 {
                return Err(Error::BadFunctionSpec(
                    "`tilted-rect`: sides must be positive".into(),
                ));
            }
            let (c, s) = (deg.to_radians().cos(), deg.to_radians().sin());
            let half = [0.5 * w, 0.5 * ht];
            let corners = [
                [-half[0], -half[1]],
                [half[0], -half[1]],
                [half[0], half[1]],
                [-half[0], half[1]],
            ];
            let vertices = corners
                .iter()
                .map(|[x, y]| [c * x - s * y, s * x + c * y])
                .collect();
            Ok(Shape::Polygon { vertices })
        }
        "interval" => {
            let a = numeric_args(name, raw, &[0, 2])?;
            let (lo, hi) = if a.len() == 2 {
                (a[0], a[1])
            } else {
                (0.0, 1.0)
            };
            if lo >= hi {
                return Err(Error::BadFunctionSpec("`interval`: need min < max".into()));
            }
            Ok(Shape::Interval { min: lo, max: hi })
        }
        other => Err(Error::BadFunctionSpec(format!("unknown shape `{other}`"))),
    }
}

/// Build the masked grid for a shape at cell size `h`, using the shape's
/// own bounding box.
pub fn grid_for(shape: &Shape, h: f64) -> Result<Arc<MaskedGrid>, Error> {
    make_masked_grid(&shape.bounding_box(), h, shape)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Cone,
    Plane,
    TentSum(usize),
    Bump,
    Indicator(Shape),
    RandomLipschitz(f64),
}

/// Parse a source-function spec string.
pub fn parse_function(spec: &str) -> Result<FunctionSpec, Error> {
    let (name, raw) = split_spec(spec)?;
    match name {
        "cone" => {
            numeric_args(name, raw, &[0])?;
            Ok(FunctionSpec::Cone)
        }
        "plane" => {
            numeric_args(name, raw, &[0])?;
            Ok(FunctionSpec::Plane)
        }
        "bump" => {
            numeric_args(name, raw, &[0])?;
            Ok(FunctionSpec::Bump)
        }
        "tent-sum" => {
            let a = numeric_args(name, raw, &[1])?;
            if a[0] < 1.0 || a[0].fract() != 0.0 || a[0] > 64.0 {
                return Err(Error::BadFunctionSpec(
                    "`tent-sum`: count must be an integer in 1..=64".into(),
                ));
            }
            Ok(FunctionSpec::TentSum(a[0] as usize))
        }
        "indicator" => match raw {
            Some(inner) if !inner.trim().is_empty() => {
                Ok(FunctionSpec::Indicator(parse_shape(inner)?))
            }
            _ => Err(Error::BadFunctionSpec(
                "`indicator` needs a shape argument".into(),
            )),
        },
        "random-lipschitz" => {
            let a = numeric_args(name, raw, &[1])?;
            if a[0] <= 0.0 {
                return Err(Error::BadFunctionSpec(
                    "`random-lipschitz`: constant must be positive".into(),
                ));
            }
            Ok(FunctionSpec::RandomLipschitz(a[0]))
        }
        other => Err(Error::BadFunctionSpec(format!(
            "unknown function spec `{other}`"
        ))),
    }
}

fn grid_box(grid: &MaskedGrid) -> ([f64; 2], [f64; 2]) {
    let o = grid.origin();
    let e = grid.extents();
    let h = grid.h();
    let width = [e[0] as f64 * h, e[1] as f64 * h];
    let center = [o[0] + 0.5 * width[0], o[1] + 0.5 * width[1]];
    (center, width)
}

fn dist(p: [f64; 2], c: [f64; 2], dim: usize) -> f64 {
    let dx = p[0] - c[0];
    if dim == 1 {
        dx.abs()
    } else {
        (dx * dx + (p[1] - c[1]) * (p[1] - c[1])).sqrt()
    }
}

/// Generate a fixture function on a grid. Specs without randomness ignore
/// the seed; `tent-sum` and `random-lipschitz` draw their parameters from
/// `ChaCha8Rng::seed_from_u64(seed)` in a fixed order, so equal seeds give
/// bitwise-equal outputs.
///
/// `random-lipschitz(L)` is a sum of six signed cones whose slope
/// magnitudes are scaled to add up to exactly `L`, clipped nonnegative, so
/// the result is L-Lipschitz by construction.
pub fn gen_fixture(
    spec: &FunctionSpec,
    grid: &Arc<MaskedGrid>,
    seed: u64,
) -> Result<GridFunction, Error> {
    let dim = grid.dim();
    let (center, width) = grid_box(grid);
    let diam = if dim == 1 {
        width[0]
    } else {
        (width[0] * width[0] + width[1] * width[1]).sqrt()
    };
    match spec {
        FunctionSpec::Cone => {
            GridFunction::from_fn(grid.clone(), |p| (1.0 - dist(p, center, dim)).max(0.0))
        }
        FunctionSpec::Plane => GridFunction::from_fn(grid.clone(), |p| {
            let y = if dim == 1 { 0.0 } else { p[1] - center[1] };
            (0.25 + 0.15 * (p[0] - center[0]) + 0.1 * y).max(0.0)
        }),
        FunctionSpec::Bump => {
            let r0 = 0.4
                * if dim == 1 {
                    width[0]
                } else {
                    width[0].min(width[1])
                };
            GridFunction::from_fn(grid.clone(), |p| {
                let rho = dist(p, center, dim) / r0;
                if rho < 1.0 {
                    (1.0 - 1.0 / (1.0 - rho * rho)).exp()
                } else {
                    0.0
                }
            })
        }
        FunctionSpec::Indicator(shape) => {
            GridFunction::from_fn(grid.clone(), |p| if shape.contains(p) { 1.0 } else { 0.0 })
        }
        FunctionSpec::TentSum(k) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tents: Vec<([f64; 2], f64, f64)> = Vec::with_capacity(*k);
            for _ in 0..*k {
                let cx = center[0] + width[0] * (rng.gen::<f64>() - 0.5);
                let cy = center[1] + width[1] * (rng.gen::<f64>() - 0.5);
                let radius = diam * (0.15 + 0.35 * rng.gen::<f64>());
                let amp = 0.2 + 0.8 * rng.gen::<f64>();
                tents.push(([cx, cy], radius, amp));
            }
            GridFunction::from_fn(grid.clone(), |p| {
                tents
                    .iter()
                    .map(|&(c, r, a)| a * (1.0 - dist(p, c, dim) / r).max(0.0))
                    .sum()
            })
        }
        FunctionSpec::RandomLipschitz(l) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let count = 6;
            let mut cones: Vec<([f64; 2], f64, f64)> = Vec::with_capacity(count);
            let mut slope_sum = 0.0;
            for _ in 0..count {
                let cx = center[0] + width[0] * (rng.gen::<f64>() - 0.5);
                let cy = center[1] + width[1] * (rng.gen::<f64>() - 0.5);
                let radius = diam * (0.25 + 0.5 * rng.gen::<f64>());
                let slope =
                    (0.1 + 0.9 * rng.gen::<f64>()) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                slope_sum += slope.abs();
                cones.push(([cx, cy], radius, slope));
            }
            let scale = l / slope_sum;
            let eval = |cones: &[([f64; 2], f64, f64)], p: [f64; 2]| {
                cones
                    .iter()
                    .map(|&(c, r, s)| s * scale * (r - dist(p, c, dim)).max(0.0))
                    .sum::<f64>()
                    .max(0.0)
            };
            // Signed cones can cancel to zero everywhere on the mask; fall
            // back to the same draw with all slopes positive and the first
            // cone widened to cover the whole box, which is positive on
            // every active cell and keeps the slope-magnitude sum at L.
            let flat = grid
                .active()
                .iter()
                .all(|&fl| eval(&cones, grid.center(fl)) == 0.0);
            if flat {
                for cone in &mut cones {
                    cone.2 = cone.2.abs();
                }
                cones[0].0 = center;
                cones[0].1 = 0.75 * diam;
            }
            GridFunction::from_fn(grid.clone(), move |p| eval(&cones, p))
        }
    }
}

/// Parse-and-generate convenience used by the CLI.
pub fn gen_fixture_str(
    spec: &str,
    grid: &Arc<MaskedGrid>,
    seed: u64,
) -> Result<GridFunction, Error> {
    gen_fixture(&parse_function(spec)?, grid, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WSpec {
    UStar,
    UStarSquared,
    Truncated(f64),
    Zero,
}

/// Parse a comparison-profile spec string.
pub fn parse_w(spec: &str) -> Result<WSpec, Error> {
    let (name, raw) = split_spec(spec)?;
    match name {
        "ustar" => {
            numeric_args(name, raw, &[0])?;
            Ok(WSpec::UStar)
        }
        "ustar-sq" => {
            numeric_args(name, raw, &[0])?;
            Ok(WSpec::UStarSquared)
        }
        "trunc" => {
            let a = numeric_args(name, raw, &[1])?;
            if a[0] <= 0.0 {
                return Err(Error::BadFunctionSpec(
                    "`trunc`: level must be positive".into(),
                ));
            }
            Ok(WSpec::Truncated(a[0]))
        }
        "zero" => {
            numeric_args(name, raw, &[0])?;
            Ok(WSpec::Zero)
        }
        other => Err(Error::BadFunctionSpec(format!(
            "unknown comparison spec `{other}`"
        ))),
    }
}

/// Build the nonincreasing comparison profile a spec describes, derived
/// from the decreasing rearrangement of `u`.
pub fn w_profile_for(spec: &WSpec, u: &GridFunction) -> Result<StepProfile, Error> {
    let base = decreasing_rearrangement(u);
    let breaks = base.breaks().to_vec();
    let values: Vec<f64> = match spec {
        WSpec::UStar => return Ok(base),
        WSpec::UStarSquared => base.values().iter().map(|v| v * v).collect(),
        WSpec::Truncated(gamma) => base.values().iter().map(|v| v.min(*gamma)).collect(),
        WSpec::Zero => vec![0.0; base.values().len()],
    };
    StepProfile::new(breaks, values)
}
