//! `gridsym` — fixtures, symmetrizations, inequality checks, Dirichlet
//! solves, comparison theorems, and full report suites from the command
//! line.
//!
//! Exit codes: 0 when every executed check passes, 1 when an inequality or
//! comparison check fails, 2 on configuration or solver errors. All numeric
//! output is printed with 17 significant digits.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use gridsym::error::Error;
use gridsym::fixture::{gen_fixture_str, grid_for, parse_function, parse_shape, parse_w};
use gridsym::fmt::fmt_g;
use gridsym::grid::write_grid_function_to_path;
use gridsym::pde::{solve_poisson_masked, solve_radial_plaplacian};
use gridsym::rearrange::{
    ball_coeff, decreasing_rearrangement, schwarz_rearrangement, steiner_symmetrization,
};
use gridsym::suite::{
    default_suite_config, parse_suite_config, run_suite, CheckKind, SuiteCase, SuiteConfig, WChoice,
};

#[derive(Parser)]
#[command(
    name = "gridsym",
    version,
    about = "Rearrangements, symmetrizations, and symmetrization-based PDE comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Suite configuration file; the bundled default suite when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for reports and data files (default: current directory,
    /// or `gridsym-reports` for `suite`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for suite cases; 0 means one per core.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,
    /// Promote hypothesis-failure warnings to failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Fixture seed.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    seed: u64,
    /// Grid cell size.
    #[arg(long, global = true, default_value_t = 0.015625, value_name = "REAL")]
    h: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded fixture; write the grid function and its
    /// decreasing rearrangement.
    Gen(FixtureArgs),
    /// Symmetrize a seeded fixture (decreasing, Steiner, or Schwarz).
    Symmetrize(SymmetrizeArgs),
    /// Run one inequality check (hl, riesz, ps, nonlinear-ps, weak-form).
    Verify(CheckArgs),
    /// Solve the Dirichlet problem with the fixture as source.
    Solve(SolveArgs),
    /// Run one comparison check (talenti-steiner, talenti-schwarz,
    /// gradient, dual).
    Compare(CheckArgs),
    /// Run every case of the configured suite and emit CSV reports.
    Suite,
}

#[derive(Args)]
struct FixtureArgs {
    /// Domain spec: square, rect(w,h), disk(r), annulus(ri,ro), lshape,
    /// tilted-rect(deg), interval(a,b).
    #[arg(long)]
    shape: String,
    /// Function spec: cone, plane, tent-sum(k), bump, indicator(shape),
    /// random-lipschitz(L).
    #[arg(long)]
    function: String,
    /// Codimension split `n,m`.
    #[arg(long, value_name = "N,M")]
    split: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymmetrizeMode {
    /// Decreasing rearrangement as a step profile.
    Rearrange,
    /// Steiner symmetrization on the grid (needs a split).
    Steiner,
    /// Schwarz rearrangement onto the centered ball.
    Schwarz,
}

#[derive(Args)]
struct SymmetrizeArgs {
    #[command(flatten)]
    fixture: FixtureArgs,
    #[arg(long, value_enum, default_value_t = SymmetrizeMode::Steiner)]
    mode: SymmetrizeMode,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    fixture: FixtureArgs,
    /// Check name.
    #[arg(long)]
    check: String,
    /// Comparison-function spec: ustar, ustar-sq, trunc(gamma), zero, or
    /// `partner` for an independently seeded second fixture.
    #[arg(long, default_value = "ustar")]
    w: String,
    /// Exponent for the nonlinear paths.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    fixture: FixtureArgs,
    /// Exponent: 2 for the masked Poisson solver, otherwise the radial
    /// p-Laplacian on ball domains.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

fn main() {
    // Die quietly when the reader closes the pipe (e.g. `gridsym suite |
    // head`), like any other filter, instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen(args) => gen(&args, &cli.common),
        Command::Symmetrize(args) => symmetrize(&args, &cli.common),
        Command::Verify(args) => single_check(&args, &cli.common, false),
        Command::Compare(args) => single_check(&args, &cli.common, true),
        Command::Solve(args) => solve(&args, &cli.common),
        Command::Suite => suite(&cli.common),
    }
}

fn parse_split(raw: &Option<String>) -> anyhow::Result<Option<(usize, usize)>> {
    let Some(raw) = raw else { return Ok(None) };
    let (a, b) = raw
        .split_once(',')
        .ok_or_else(|| anyhow::anyhow!("--split expects `n,m`"))?;
    Ok(Some((
        a.trim().parse().context("bad split component")?,
        b.trim().parse().context("bad split component")?,
    )))
}

fn build_fixture(
    args: &FixtureArgs,
    common: &Common,
) -> anyhow::Result<gridsym::grid::GridFunction> {
    let shape = parse_shape(&args.shape)?;
    let mut grid = grid_for(&shape, common.h)?;
    if let Some((n, m)) = parse_split(&args.split)? {
        grid = grid.with_split(n, m)?;
    }
    Ok(gen_fixture_str(&args.function, &grid, common.seed)?)
}

fn out_dir(common: &Common, default: &str) -> anyhow::Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

fn gen(args: &FixtureArgs, common: &Common) -> anyhow::Result<i32> {
    let u = build_fixture(args, common)?;
    let dir = out_dir(common, ".")?;
    let data = dir.join("fixture.dat");
    write_grid_function_to_path(&data, &u)?;
    let star = decreasing_rearrangement(&u);
    let profile = dir.join("fixture-profile.csv");
    let mut f = std::fs::File::create(&profile)?;
    star.write_csv(&mut f)?;
    println!("cells = {}", u.grid().active_count());
    println!("measure = {}", fmt_g(u.grid().measure()));
    println!("max = {}", fmt_g(star.max_value()));
    println!("mass = {}", fmt_g(star.integral_power(1.0)));
    println!("wrote {}", data.display());
    println!("wrote {}", profile.display());
    Ok(0)
}

fn symmetrize(args: &SymmetrizeArgs, common: &Common) -> anyhow::Result<i32> {
    let u = build_fixture(&args.fixture, common)?;
    let dir = out_dir(common, ".")?;
    match args.mode {
        SymmetrizeMode::Rearrange => {
            let star = decreasing_rearrangement(&u);
            let path = dir.join("ustar.csv");
            let mut f = std::fs::File::create(&path)?;
            star.write_csv(&mut f)?;
            println!("steps = {}", star.steps());
            println!("max = {}", fmt_g(star.max_value()));
            println!("wrote {}", path.display());
        }
        SymmetrizeMode::Steiner => {
            let sym = steiner_symmetrization(&u)?;
            let path = dir.join("symmetrized.dat");
            write_grid_function_to_path(&path, &sym)?;
            let hd = u.grid().cell_measure();
            let mass: f64 = sym.values().iter().map(|v| v * hd).sum();
            println!("mass = {}", fmt_g(mass));
            println!("wrote {}", path.display());
        }
        SymmetrizeMode::Schwarz => {
            let (profile, resampled) = schwarz_rearrangement(&u, gridsym::tol::RADIAL_NODES)?;
            let ppath = dir.join("schwarz-profile.csv");
            let mut f = std::fs::File::create(&ppath)?;
            profile.write_csv(&mut f)?;
            let dpath = dir.join("schwarz.dat");
            write_grid_function_to_path(&dpath, &resampled)?;
            println!("outer_radius = {}", fmt_g(profile.outer_radius()));
            println!("center_value = {}", fmt_g(profile.values()[0]));
            println!("wrote {}", ppath.display());
            println!("wrote {}", dpath.display());
        }
    }
    Ok(0)
}

fn single_check(args: &CheckArgs, common: &Common, comparison: bool) -> anyhow::Result<i32> {
    let kind = CheckKind::parse(&args.check)
        .ok_or_else(|| anyhow::anyhow!("unknown check `{}`", args.check))?;
    let inequality_kinds = [
        CheckKind::Hl,
        CheckKind::Riesz,
        CheckKind::Ps,
        CheckKind::NonlinearPs,
        CheckKind::WeakForm,
    ];
    let allowed = if comparison {
        !inequality_kinds.contains(&kind)
    } else {
        inequality_kinds.contains(&kind)
    };
    if !allowed {
        let (this, other) = if comparison {
            ("compare", "verify")
        } else {
            ("verify", "compare")
        };
        anyhow::bail!("check `{}` belongs to `{other}`, not `{this}`", args.check);
    }
    let case = SuiteCase {
        id: "cli".into(),
        shape: parse_shape(&args.fixture.shape)?,
        h: common.h,
        split: parse_split(&args.fixture.split)?,
        function: parse_function(&args.fixture.function)?,
        w: if args.w == "partner" {
            WChoice::Partner
        } else {
            WChoice::Profile(parse_w(&args.w)?)
        },
        p: args.p,
        seed: common.seed,
        checks: vec![kind],
    };
    let cfg = SuiteConfig {
        cases: vec![case],
        timings: false,
        ..SuiteConfig::default()
    };
    // Reports always land in a directory; without --out a temporary one
    // that vanishes after the rows are printed.
    let tmp;
    let dir = match &common.out {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            d.clone()
        }
        None => {
            tmp = tempdir()?;
            tmp.clone()
        }
    };
    let outcome = run_suite(&cfg, &dir, common.jobs, common.strict);
    let result = outcome.map(|o| {
        println!("name,case,h,lhs,rhs,margin,tolerance,pass");
        for (_, row) in &o.rows {
            println!("{}", row.csv_row());
        }
        o.exit_code
    });
    if common.out.is_none() {
        let _ = std::fs::remove_dir_all(&dir);
    }
    Ok(result?)
}

fn tempdir() -> anyhow::Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("gridsym-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn solve(args: &SolveArgs, common: &Common) -> anyhow::Result<i32> {
    let f = build_fixture(&args.fixture, common)?;
    let dir = out_dir(common, ".")?;
    if args.p == 2.0 {
        let u = solve_poisson_masked(&f)?;
        let path = dir.join("solution.dat");
        write_grid_function_to_path(&path, &u)?;
        let g = u.grid();
        let e = g.extents();
        let center = [
            g.origin()[0] + 0.5 * e[0] as f64 * g.h(),
            g.origin()[1] + 0.5 * e[1] as f64 * g.h(),
        ];
        let hd = g.cell_measure();
        let mass: f64 = u.values().iter().map(|v| v * hd).sum();
        let max = u.values().iter().cloned().fold(0.0, f64::max);
        println!("center = {}", fmt_g(u.sample_linear(center)));
        println!("max = {}", fmt_g(max));
        println!("mass = {}", fmt_g(mass));
        println!("wrote {}", path.display());
    } else {
        let shape = parse_shape(&args.fixture.shape)?;
        if !matches!(
            shape,
            gridsym::grid::Shape::Disk { .. } | gridsym::grid::Shape::Interval { .. }
        ) {
            return Err(Error::BadParameter("p != 2 solves need a ball domain").into());
        }
        let dim = f.grid().dim();
        let fstar = decreasing_rearrangement(&f);
        let r_outer = (f.grid().measure() / ball_coeff(dim)).powf(1.0 / dim as f64);
        let sol = solve_radial_plaplacian(&fstar, dim, args.p, r_outer)?;
        let vpath = dir.join("radial-v.csv");
        let mut vf = std::fs::File::create(&vpath)?;
        sol.v.write_csv(&mut vf)?;
        let dpath = dir.join("radial-dv.csv");
        let mut df = std::fs::File::create(&dpath)?;
        sol.dv_abs.write_csv(&mut df)?;
        println!("center = {}", fmt_g(sol.v.values()[0]));
        println!("outer_radius = {}", fmt_g(r_outer));
        println!("wrote {}", vpath.display());
        println!("wrote {}", dpath.display());
    }
    Ok(0)
}

fn suite(common: &Common) -> anyhow::Result<i32> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        None => default_suite_config().to_string(),
    };
    let cfg = parse_suite_config(&text)?;
    let dir = out_dir(common, "gridsym-reports")?;
    let outcome = run_suite(&cfg, &dir, common.jobs, common.strict)?;
    println!(
        "cases = {} rows = {} pass = {} fail = {} skipped = {}",
        cfg.cases.len(),
        outcome.rows.len(),
        outcome.pass_count,
        outcome.fail_count,
        outcome.skip_count
    );
    for path in &outcome.written {
        println!("wrote {}", path.display());
    }
    Ok(outcome.exit_code)
}
