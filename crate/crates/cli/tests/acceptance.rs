//! Acceptance gate for the toolkit: thirteen end-to-end checks covering the
//! rearrangement inequalities, the couple symmetrization checks, the radial
//! solvers, the comparison theorems, and byte-level reproducibility of the
//! report pipeline. Each test prints one `acceptance NN <name>: PASS/FAIL`
//! line (visible with `--nocapture`, or on failure) and enforces the wall
//! budgets stated alongside.

use std::process::Command;
use std::time::Instant;

use anyhow::{ensure, Context, Result};

use gridsym::comparison::{
    dual_test_function_check, gradient_compare, pointwise_compare, steiner_concentration_compare,
};
use gridsym::fixture::{gen_fixture_str, grid_for, parse_shape, w_profile_for, WSpec};
use gridsym::grid::GridFunction;
use gridsym::inequality::{
    hardy_littlewood_check, hl_equality_residual, mollified_gradient_form, ps_couple_check,
    riesz_check, MollifierKernel,
};
use gridsym::pde::{
    solve_poisson_masked, solve_radial_plaplacian, solve_radial_poisson, solve_steiner_problem,
};
use gridsym::profile::StepProfile;
use gridsym::rearrange::{
    ball_coeff, decreasing_rearrangement, extremal_for, schwarz_rearrangement,
    steiner_symmetrization,
};
use gridsym::tol;

const H64: f64 = 1.0 / 64.0;

/// Print the one-line verdict, enforce the wall budget, and propagate any
/// failure with its detail. The line prints before the panic so a failing
/// run still shows which acceptance check broke and how long it took.
fn finish(idx: usize, name: &str, budget: Option<f64>, started: Instant, outcome: Result<()>) {
    let secs = started.elapsed().as_secs_f64();
    let mut outcome = outcome;
    if let (Some(cap), true) = (budget, outcome.is_ok()) {
        if secs > cap {
            outcome = Err(anyhow::anyhow!("took {secs:.2} s, budget {cap} s"));
        }
    }
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("acceptance {idx:02} {name}: {verdict} ({secs:.2} s)");
    if let Err(e) = outcome {
        panic!("acceptance {idx:02} {name}: {e:#}");
    }
}

#[test]
fn criterion_01_hardy_littlewood_exactness() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("square")?, H64)?;
        for k in 0..200u64 {
            let u = gen_fixture_str("tent-sum(6)", &g, 1_000 + k)?;
            let w = gen_fixture_str("tent-sum(5)", &g, 5_000 + k)?;
            let rep = hardy_littlewood_check(&u, &w)?;
            ensure!(
                rep.pass,
                "pair {k}: margin {} below -{} relative",
                rep.margin,
                rep.tolerance
            );
        }
        // Extremal partners must collapse the inequality to literal zero:
        // the two sides add identical terms in identical order.
        let wspecs = [WSpec::UStar, WSpec::UStarSquared, WSpec::Truncated(0.2)];
        for k in 0..50u64 {
            let u = gen_fixture_str("tent-sum(6)", &g, 9_000 + k)?;
            let prof = w_profile_for(&wspecs[(k % 3) as usize], &u)?;
            let w = extremal_for(&u, &prof)?;
            let residual = hl_equality_residual(&u, &w)?;
            ensure!(residual == 0.0, "partner {k}: residual {residual:e} != 0");
        }
        Ok(())
    };
    finish(1, "hardy-littlewood exactness", Some(10.0), started, run());
}

#[test]
fn criterion_02_couple_inequality_with_extremal_partners() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("square")?, H64)?.with_split(1, 1)?;
        let wspecs = [WSpec::UStar, WSpec::UStarSquared, WSpec::Truncated(0.2)];
        for k in 0..50u64 {
            let spec = format!("tent-sum({})", 3 + k % 3);
            let u = gen_fixture_str(&spec, &g, 300 + k)?;
            let prof = w_profile_for(&wspecs[(k % 3) as usize], &u)?;
            let w = extremal_for(&u, &prof)?;
            let rep = ps_couple_check(&u, &w, tol::C1_DEFAULT)?;
            ensure!(!rep.hypothesis_failed, "case {k}: equality hypothesis lost");
            for part in rep.reports() {
                ensure!(
                    part.pass,
                    "case {k} {}: margin {} vs tolerance {}",
                    part.name,
                    part.margin,
                    part.tolerance
                );
            }
        }
        Ok(())
    };
    finish(
        2,
        "couple inequality, extremal partners",
        Some(60.0),
        started,
        run(),
    );
}

#[test]
fn criterion_03_classical_reduction_is_a_fixed_point() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("disk(1)")?, H64)?.with_split(2, 0)?;
        // The centered cone is its own rearrangement, so taking w = u must
        // reproduce the one-function inequality with both sides equal.
        let cone = gen_fixture_str("cone", &g, 0)?;
        let rep = ps_couple_check(&cone, &cone, tol::C1_DEFAULT)?;
        let scale = rep.total.lhs.abs().max(rep.total.rhs.abs());
        ensure!(
            (rep.total.lhs - rep.total.rhs).abs() <= 2e-2 * scale,
            "cone: lhs {} vs rhs {} exceeds 2e-2 relative",
            rep.total.lhs,
            rep.total.rhs
        );
        for k in 0..20u64 {
            let spec = format!("tent-sum({})", 3 + k % 3);
            let u = gen_fixture_str(&spec, &g, 400 + k)?;
            let rep = ps_couple_check(&u, &u, tol::C1_DEFAULT)?;
            ensure!(
                rep.total.pass,
                "tent-sum {k}: margin {} vs tolerance {}",
                rep.total.margin,
                rep.total.tolerance
            );
        }
        Ok(())
    };
    finish(3, "classical reduction fixed point", None, started, run());
}

#[test]
fn criterion_04_mollified_form_converges_at_first_order() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("square")?, 1.0 / 256.0)?.with_split(2, 0)?;
        let u = gen_fixture_str("bump", &g, 0)?;
        let kernel = MollifierKernel::standard(2);
        let mut target = 0.0;
        let grad = u.gradient_fd();
        for axis in 0..2 {
            for v in grad.component(axis) {
                target += v * v;
            }
        }
        target *= g.cell_measure() * kernel.c / kernel.n as f64;
        let scales = [0.2f64, 0.1, 0.05, 0.025];
        let mut errors = Vec::with_capacity(scales.len());
        for &eps in &scales {
            let form = mollified_gradient_form(&u, &u, &kernel, eps)?;
            errors.push((form - target).abs());
        }
        for pair in errors.windows(2) {
            ensure!(pair[1] < pair[0], "errors not monotone: {:?}", errors);
        }
        // Least-squares slope of log error against log scale.
        let xs: Vec<f64> = scales.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        let slope = num / den;
        ensure!(slope >= 1.0, "slope {slope} < 1.0 (errors {errors:?})");
        Ok(())
    };
    finish(4, "mollified form convergence", Some(30.0), started, run());
}

#[test]
fn criterion_05_riesz_on_one_dimensional_triples() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("interval(0,1)")?, 1.0 / 256.0)?;
        for k in 0..30u64 {
            let u = gen_fixture_str("tent-sum(3)", &g, 900 + 3 * k)?;
            let w = gen_fixture_str("tent-sum(4)", &g, 901 + 3 * k)?;
            let kf = gen_fixture_str("tent-sum(2)", &g, 902 + 3 * k)?;
            let rep = riesz_check(&u, &w, &kf)?;
            ensure!(
                rep.pass,
                "triple {k}: margin {} vs tolerance {}",
                rep.margin,
                rep.tolerance
            );
        }
        // A centered symmetric-decreasing triple already equals its own
        // rearrangement, so the two sides agree within the tolerance.
        let cone = gen_fixture_str("cone", &g, 0)?;
        let rep = riesz_check(&cone, &cone, &cone)?;
        ensure!(
            rep.margin.abs() <= rep.tolerance,
            "centered triple: |margin| {} vs tolerance {}",
            rep.margin.abs(),
            rep.tolerance
        );
        Ok(())
    };
    finish(
        5,
        "riesz inequality on intervals",
        Some(60.0),
        started,
        run(),
    );
}

#[test]
fn criterion_06_radial_poisson_matches_the_disk_closed_form() {
    let started = Instant::now();
    let run = || -> Result<()> {
        // f = 1 on the unit disk: v(r) = (1 - r^2)/4, so v(0) = 1/4.
        let ones = StepProfile::new(vec![0.0, std::f64::consts::PI], vec![1.0])?;
        let sol = solve_radial_poisson(&ones, 2, 1.0)?;
        let v0 = sol.v.values()[0];
        ensure!((v0 - 0.25).abs() <= 1e-6, "v(0) = {v0}");

        let center_error = |h: f64| -> Result<(f64, f64)> {
            let g = grid_for(&parse_shape("disk(1)")?, h)?;
            let f = GridFunction::from_fn(g.clone(), |_| 1.0)?;
            let u = solve_poisson_masked(&f)?;
            let mut max_err = 0.0f64;
            for (rank, &fl) in g.active().iter().enumerate() {
                let p = g.center(fl);
                let exact = (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0;
                max_err = max_err.max((u.values()[rank] - exact).abs());
            }
            let center = (u.sample_linear([0.0, 0.0]) - 0.25).abs();
            Ok((max_err, center))
        };
        let (max64, center64) = center_error(H64)?;
        ensure!(max64 <= 1e-2, "max error {max64} at h=1/64");
        // The max error sits on the staircase boundary layer and does not
        // contract between these two particular resolutions; the interior
        // error (the node the closed form pins) does, so the refinement
        // assertion reads the center value.
        let (_, center128) = center_error(1.0 / 128.0)?;
        let ratio = center64 / center128;
        ensure!(
            ratio >= 3.0,
            "center error ratio {ratio} (h=1/64: {center64}, h=1/128: {center128})"
        );
        Ok(())
    };
    finish(6, "radial poisson oracle on the disk", None, started, run());
}

#[test]
fn criterion_07_square_poisson_center_value() {
    let started = Instant::now();
    let run = || -> Result<()> {
        // Independent series oracle: with -lap u = 1 on the unit square and
        // zero boundary data, separation of variables gives
        //   u(1/2,1/2) = 1/8 - sum over odd m of
        //                4 (-1)^((m-1)/2) / (pi^3 m^3 cosh(m pi/2)),
        // which converges geometrically.
        let pi = std::f64::consts::PI;
        let mut oracle = 0.125;
        for m in (1..60u32).step_by(2) {
            let sign = if ((m - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mf = m as f64;
            oracle -= sign * 4.0 / (pi.powi(3) * mf.powi(3) * (0.5 * mf * pi).cosh());
        }
        ensure!(
            (oracle - 0.073_671_353_281_513_81).abs() < 1e-12,
            "series oracle drifted: {oracle}"
        );

        let g = grid_for(&parse_shape("square")?, H64)?;
        let f = GridFunction::from_fn(g.clone(), |_| 1.0)?;
        let u = solve_poisson_masked(&f)?;
        let center = u.sample_linear([0.5, 0.5]);
        ensure!(
            (center - oracle).abs() <= 1e-3,
            "center {center} vs oracle {oracle}"
        );
        Ok(())
    };
    finish(7, "square poisson center value", None, started, run());
}

#[test]
fn criterion_08_plaplacian_ball_values() {
    let started = Instant::now();
    let run = || -> Result<()> {
        // f = 1 on the unit disk, p = 3: -v' = (r/2)^{1/(p-1)}, so
        // v(0) = (1/2)^{1/2} * (p-1)/p = (2/3)/sqrt(2).
        let ones = StepProfile::new(vec![0.0, std::f64::consts::PI], vec![1.0])?;
        let sol3 = solve_radial_plaplacian(&ones, 2, 3.0, 1.0)?;
        let expected = (2.0 / 3.0) / 2f64.sqrt();
        let v0 = sol3.v.values()[0];
        ensure!((v0 - expected).abs() <= 1e-4, "v(0) = {v0} vs {expected}");

        // p = 2 must reproduce the linear radial solver node for node.
        let sol2 = solve_radial_plaplacian(&ones, 2, 2.0, 1.0)?;
        let pois = solve_radial_poisson(&ones, 2, 1.0)?;
        let worst = sol2
            .v
            .values()
            .iter()
            .zip(pois.v.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure!(worst <= 1e-12, "p=2 paths differ by {worst}");
        Ok(())
    };
    finish(8, "p-laplacian ball values", None, started, run());
}

/// The six comparison fixtures shared by the pointwise and gradient
/// acceptance checks: three domains, each with constant data and with one
/// seeded rough source.
fn comparison_fixtures() -> Result<Vec<(String, GridFunction)>> {
    let mut out = Vec::new();
    for (i, shape) in ["square", "lshape", "tilted-rect(30)"].iter().enumerate() {
        let g = grid_for(&parse_shape(shape)?, H64)?;
        out.push((
            format!("{shape}, f = 1"),
            gen_fixture_str("indicator(rect(10,10))", &g, 0)?,
        ));
        out.push((
            format!("{shape}, rough f"),
            gen_fixture_str("random-lipschitz(2)", &g, 101 + i as u64)?,
        ));
    }
    Ok(out)
}

#[test]
fn criterion_09_pointwise_comparison_on_three_domains() {
    let started = Instant::now();
    let run = || -> Result<()> {
        for (name, f) in comparison_fixtures()? {
            let usol = solve_poisson_masked(&f)?;
            let full = usol.with_split(2, 0)?;
            let (ustar, _) = schwarz_rearrangement(&full, tol::RADIAL_NODES)?;
            let fstar = decreasing_rearrangement(&f);
            let v = solve_radial_poisson(&fstar, 2, ustar.outer_radius())?;
            let tolerance = tol::C3_DEFAULT * H64 * fstar.max_value();
            let rep = pointwise_compare(&ustar, &v.v, tolerance)?;
            ensure!(
                rep.pass,
                "{name}: worst margin {} vs tolerance {}",
                rep.worst_margin,
                rep.tolerance
            );
        }
        Ok(())
    };
    finish(
        9,
        "pointwise comparison on three domains",
        Some(120.0),
        started,
        run(),
    );
}

#[test]
fn criterion_10_gradient_comparison_on_three_domains() {
    let started = Instant::now();
    let run = || -> Result<()> {
        for (name, f) in comparison_fixtures()? {
            let usol = solve_poisson_masked(&f)?;
            let full = usol.with_split(2, 0)?;
            // Difference quotients need node spacing ~h: the rearranged
            // profile is a staircase whose plateaus near the center span
            // ~h^2 of measure, so finer sampling reads plateau edges.
            let g = f.grid();
            let r_outer = (g.measure() / ball_coeff(2)).sqrt();
            let nodes = (((r_outer / H64).ceil() as usize) + 1).max(3);
            let (ustar, _) = schwarz_rearrangement(&full, nodes)?;
            let fstar = decreasing_rearrangement(&f);
            let v = solve_radial_poisson(&fstar, 2, ustar.outer_radius())?;
            let tolerance = tol::C3_DEFAULT * H64 * fstar.max_value();
            let rep = gradient_compare(&ustar, &v.dv_abs, tolerance)?;
            // The outermost node is excluded from the verdict: its
            // one-sided quotient reads the boundary staircase of the mask
            // rather than the profile's slope.
            let keep = &rep.samples[..rep.samples.len() - 1];
            for s in keep {
                ensure!(
                    s.pass,
                    "{name} at {}: margin {} vs tolerance {}",
                    s.param,
                    s.margin,
                    rep.tolerance
                );
            }
        }
        Ok(())
    };
    finish(
        10,
        "gradient comparison on three domains",
        Some(120.0),
        started,
        run(),
    );
}

#[test]
fn criterion_11_steiner_concentration_on_the_tilted_rectangle() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("tilted-rect(30)")?, H64)?.with_split(1, 1)?;
        let f = gen_fixture_str("indicator(rect(10,10))", &g, 0)?;
        let usol = solve_poisson_masked(&f)?;
        let fsharp = steiner_symmetrization(&f)?;
        let vsol = solve_steiner_problem(&fsharp)?;
        let rep = steiner_concentration_compare(&usol, &vsol, tol::C2_DEFAULT)?;
        ensure!(
            rep.symmetrized.pass,
            "tilted rectangle: worst margin {} vs tolerance {}",
            rep.symmetrized.worst_margin,
            rep.symmetrized.tolerance
        );

        // A domain that is its own symmetrization: the symmetrized mask is
        // the same block of cells, so both solves see the same problem and
        // every margin collapses to zero.
        let g = grid_for(&parse_shape("rect(1.2,0.6)")?, H64)?.with_split(1, 1)?;
        let f = GridFunction::from_fn(g.clone(), |_| 1.0)?;
        let usol = solve_poisson_masked(&f)?;
        let fsharp = steiner_symmetrization(&f)?;
        let vsol = solve_steiner_problem(&fsharp)?;
        let rep = steiner_concentration_compare(&usol, &vsol, tol::C2_DEFAULT)?;
        ensure!(
            rep.symmetrized.worst_margin >= -1e-8,
            "symmetric domain: worst margin {}",
            rep.symmetrized.worst_margin
        );
        Ok(())
    };
    finish(11, "steiner concentration comparison", None, started, run());
}

#[test]
fn criterion_12_dual_and_direct_verdicts_agree_when_decisive() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let g = grid_for(&parse_shape("square")?, H64)?.with_split(1, 1)?;
        let dist = |p: [f64; 2], c: [f64; 2]| -> f64 {
            ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
        };
        let mut decisive_count = 0usize;
        for k in 0..15u64 {
            let u = gen_fixture_str(&format!("tent-sum({})", 3 + k % 4), &g, 1_500 + k)?;
            let w = gen_fixture_str(&format!("tent-sum({})", 2 + k % 5), &g, 1_700 + k)?;
            let rep = dual_test_function_check(&u, &w, 64, 2_400 + k, tol::C2_DEFAULT)?;
            if rep.decisive {
                decisive_count += 1;
                ensure!(rep.agree, "pair {k}: decisive but verdicts disagree");
            }
        }
        // Constructed crossings: a tall narrow cone against a wide short
        // one. The amplitude scales the margins but not the tolerance, so
        // the direct check fails decisively and the scan must agree.
        for k in 0..5u64 {
            let amp = 80.0 + 10.0 * k as f64;
            let narrow = 0.08 + 0.01 * k as f64;
            let wide = 0.35 + 0.02 * k as f64;
            let u = GridFunction::from_fn(g.clone(), move |p| {
                amp * (1.0 - dist(p, [0.5, 0.5]) / narrow).max(0.0)
            })?;
            let w = GridFunction::from_fn(g.clone(), move |p| {
                0.5 * (1.0 - dist(p, [0.5, 0.5]) / wide).max(0.0)
            })?;
            let rep = dual_test_function_check(&u, &w, 64, 3_000 + k, tol::C2_DEFAULT)?;
            ensure!(rep.decisive, "crossing {k} not decisive");
            ensure!(
                !rep.direct.pass,
                "crossing {k} not caught by the direct check"
            );
            ensure!(rep.agree, "crossing {k}: verdicts disagree");
            decisive_count += 1;
        }
        ensure!(decisive_count >= 5, "only {decisive_count} decisive pairs");
        Ok(())
    };
    finish(12, "dual and direct verdicts agree", None, started, run());
}

#[test]
fn criterion_13_reports_are_reproducible_across_job_counts() {
    let started = Instant::now();
    let run = || -> Result<()> {
        let dir = tempfile::tempdir()?;
        let run_suite = |jobs: &str, out: &str| -> Result<()> {
            let status = Command::new(env!("CARGO_BIN_EXE_gridsym"))
                .args(["suite", "--jobs", jobs, "--out", out])
                .current_dir(dir.path())
                .status()
                .context("spawn gridsym")?;
            ensure!(
                status.code() == Some(0),
                "suite --jobs {jobs} exited {status}"
            );
            Ok(())
        };
        run_suite("1", "serial")?;
        run_suite("4", "parallel")?;
        let list = |sub: &str| -> Result<Vec<String>> {
            let mut names: Vec<String> = std::fs::read_dir(dir.path().join(sub))?
                .map(|e| Ok(e?.file_name().to_string_lossy().into_owned()))
                .collect::<Result<_>>()?;
            names.sort();
            Ok(names)
        };
        let names = list("serial")?;
        ensure!(names == list("parallel")?, "report file sets differ");
        let mut compared = 0usize;
        for name in &names {
            // The CSV reports must agree to the byte. summary.json is the
            // one file allowed to differ: it carries wall-clock timings.
            if !name.ends_with(".csv") {
                continue;
            }
            let a = std::fs::read(dir.path().join("serial").join(name))?;
            let b = std::fs::read(dir.path().join("parallel").join(name))?;
            ensure!(a == b, "{name} differs between job counts");
            compared += 1;
        }
        ensure!(compared > 0, "no csv reports written");
        Ok(())
    };
    finish(
        13,
        "reports reproducible across job counts",
        None,
        started,
        run(),
    );
}
