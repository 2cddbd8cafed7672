//! Command-line surface for the gaussim library: generate measures, push
//! bodies forward, solve the inverse problem, verify, export.
//!
//! Exit codes: 0 success/converged, 1 io or schema failure, 2 the problem
//! was rejected as inadmissible, 3 the solver detected degeneracy, 4 the
//! iteration budget ran out.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use gaussim::io;
use gaussim::measure;
use gaussim::solver::{self, SolveOptions};
use gaussim::{DensityField, Measure, Polytope, SolveStatus, SphereGrid, Vec3};

const EXIT_OK: i32 = 0;
const EXIT_ERROR: i32 = 1;
const EXIT_INADMISSIBLE: i32 = 2;
const EXIT_DEGENERATE: i32 = 3;
const EXIT_MAX_ITERS: i32 = 4;

#[derive(Parser)]
#[command(
    name = "gaussim",
    version,
    about = "Gauss image measures of convex bodies and the inverse solver",
    long_about = "Compute weighted Gauss image measures of convex polytopes \
                  (dimensions 2 and 3), solve the inverse problem of \
                  prescribing them, and verify the results. All commands are \
                  deterministic: the same inputs produce byte-identical \
                  outputs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a measure file: a uniform density, a one-sided bump
    /// density, or the image measure of a stored body.
    GenMeasure(GenMeasureArgs),
    /// Push a body forward to its weighted image measure.
    GaussImage(GaussImageArgs),
    /// Solve for a body whose weighted image measure matches a target.
    Solve(SolveArgs),
    /// Recompute residual diagnostics for a body against a target.
    Verify(VerifyArgs),
    /// Evaluate the support and radial entropies of a body.
    Entropy(EntropyArgs),
    /// Inspect a measure: mass, symmetry, hemisphere concentration.
    CheckMeasure(CheckMeasureArgs),
    /// Convert stored bodies to OBJ/CSV/JSON, or dump a grid as JSON.
    Export(ExportArgs),
    /// Emit per-direction CSV profiles for external plotting.
    PlotData(PlotDataArgs),
}

#[derive(Args)]
struct GenMeasureArgs {
    /// uniform | bump | from-body
    #[arg(long)]
    kind: String,
    /// Ambient dimension (2 or 3); for from-body taken from the body.
    #[arg(long)]
    dim: Option<usize>,
    /// Grid refinement level for density output.
    #[arg(long, default_value_t = 2)]
    level: u32,
    /// Constant value for the uniform kind.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Bump baseline.
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Bump amplitude: density is c1 + c2 * max(0, <u, axis>)^power.
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    c2: f64,
    /// Bump exponent.
    #[arg(long, default_value_t = 2.0)]
    power: f64,
    /// Bump axis, comma-separated components (defaults to the first
    /// coordinate axis).
    #[arg(long)]
    axis: Option<String>,
    /// Symmetrize the generated density (bump kind).
    #[arg(long)]
    even: bool,
    /// Body file for the from-body kind.
    #[arg(long)]
    body: Option<PathBuf>,
    /// Weight exponent for the from-body kind (0 = plain image measure).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p: f64,
    /// Source density file for the from-body kind; defaults to the
    /// uniform density on the grid at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GaussImageArgs {
    #[arg(long)]
    body: PathBuf,
    /// Source density file; defaults to the uniform density at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    level: u32,
    /// Weight exponent (0 = plain image measure).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Target measure file.
    #[arg(long)]
    mu: PathBuf,
    /// Source density file; defaults to the uniform density at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    level: u32,
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    /// Force every iterate to be origin-symmetric (required for p < 0).
    #[arg(long)]
    even: bool,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    /// Quadrature depth override for the objective.
    #[arg(long)]
    quad_depth: Option<u32>,
    /// Reproducibility tag echoed into the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the recovered body as JSON.
    #[arg(long)]
    export_body: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    body: PathBuf,
    #[arg(long)]
    mu: PathBuf,
    /// Source density file; defaults to the uniform density at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    level: u32,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p: f64,
    /// Also compute the pointwise curvature-equation residual.
    #[arg(long)]
    ma: bool,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    body: PathBuf,
    /// Source density file; defaults to the uniform density at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    level: u32,
    #[arg(long, default_value_t = 2)]
    quad_depth: u32,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckMeasureArgs {
    #[arg(long)]
    mu: PathBuf,
    /// Exponent to check admissibility for (omit for a plain summary).
    #[arg(long, allow_hyphen_values = true)]
    p: Option<f64>,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Body file to convert.
    #[arg(long)]
    body: Option<PathBuf>,
    /// obj (dim 3) | csv (dim 2) | json
    #[arg(long, default_value = "json")]
    format: String,
    /// Dump the standard grid at this dimension/level as JSON instead of
    /// converting a body.
    #[arg(long)]
    grid_dim: Option<usize>,
    #[arg(long)]
    grid_level: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotDataArgs {
    #[arg(long)]
    body: PathBuf,
    /// Source density file; defaults to the uniform density at --level.
    #[arg(long)]
    lambda: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    level: u32,
    /// Target measure to tabulate residuals against.
    #[arg(long)]
    mu: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    p: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.chain().any(|cause| {
                matches!(
                    cause.downcast_ref::<gaussim::Error>(),
                    Some(gaussim::Error::Admissibility(_))
                )
            }) {
                EXIT_INADMISSIBLE
            } else {
                EXIT_ERROR
            }
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> anyhow::Result<i32> {
    match command {
        Command::GenMeasure(args) => cmd_gen_measure(args),
        Command::GaussImage(args) => cmd_gauss_image(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Entropy(args) => cmd_entropy(args),
        Command::CheckMeasure(args) => cmd_check_measure(args),
        Command::Export(args) => cmd_export(args),
        Command::PlotData(args) => cmd_plot_data(args),
    }
}

// ---------------------------------------------------------------------
// Shared loading helpers

fn load_measure(path: &Path) -> anyhow::Result<Measure> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut warnings = Vec::new();
    let m = io::measure_from_json(&bytes, &mut warnings)
        .with_context(|| format!("parsing {}", path.display()))?;
    for w in warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(m)
}

fn load_body(path: &Path) -> anyhow::Result<Polytope> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    io::body_from_json(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// The source density: either a stored density measure, or the uniform
/// density on the standard grid at `level`.
fn load_lambda(
    path: &Option<PathBuf>,
    dim: usize,
    level: u32,
) -> anyhow::Result<DensityField> {
    match path {
        Some(path) => match load_measure(path)? {
            Measure::Density(d) => {
                if d.grid.dim != dim {
                    bail!(
                        "source density in {} has dimension {}, expected {dim}",
                        path.display(),
                        d.grid.dim
                    );
                }
                Ok(d)
            }
            Measure::Atomic(_) => bail!(
                "source measure in {} is atomic; the source must be a density",
                path.display()
            ),
        },
        None => {
            let grid = Arc::new(SphereGrid::build(dim, level)?);
            Ok(DensityField::lebesgue(grid))
        }
    }
}

fn parse_axis(text: &Option<String>, dim: usize) -> anyhow::Result<Vec3> {
    let axis = match text {
        None => {
            return Ok(if dim == 2 {
                Vec3::planar(1.0, 0.0)
            } else {
                Vec3::new(1.0, 0.0, 0.0)
            })
        }
        Some(text) => {
            let parts = text
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .with_context(|| format!("parsing axis {text:?}"))?;
            match (dim, parts.len()) {
                (2, 2) => Vec3::planar(parts[0], parts[1]),
                (3, 3) => Vec3::new(parts[0], parts[1], parts[2]),
                _ => bail!("axis {text:?} has {} components in dimension {dim}", parts.len()),
            }
        }
    };
    if axis.norm() < 1e-12 {
        bail!("axis must be nonzero");
    }
    Ok(axis.normalized())
}

fn write_out(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    io::write_atomic(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn emit_report(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => write_out(path, bytes),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------
// Commands

fn cmd_gen_measure(args: GenMeasureArgs) -> anyhow::Result<i32> {
    let measure = match args.kind.as_str() {
        "uniform" => {
            let dim = args.dim.ok_or_else(|| anyhow!("--dim is required for uniform"))?;
            let grid = Arc::new(SphereGrid::build(dim, args.level)?);
            Measure::Density(DensityField::uniform(grid, args.c)?)
        }
        "bump" => {
            let dim = args.dim.ok_or_else(|| anyhow!("--dim is required for bump"))?;
            let axis = parse_axis(&args.axis, dim)?;
            let grid = Arc::new(SphereGrid::build(dim, args.level)?);
            let values: Vec<f64> = grid
                .dirs
                .iter()
                .map(|u| args.c1 + args.c2 * u.dot(&axis).max(0.0).powf(args.power))
                .collect();
            let density = Measure::Density(DensityField::new(grid, values)?);
            if args.even {
                measure::symmetrize_even(&density)?
            } else {
                density
            }
        }
        "from-body" => {
            let body_path = args
                .body
                .as_ref()
                .ok_or_else(|| anyhow!("--body is required for from-body"))?;
            let body = load_body(body_path)?;
            let lambda = load_lambda(&args.lambda, body.dim, args.level)?;
            let gim = gaussim::gauss::lp_gauss_image_measure(&body, &lambda, args.p)?;
            Measure::Atomic(gim.to_atomic()?)
        }
        other => bail!("unknown measure kind {other:?} (expected uniform, bump or from-body)"),
    };
    write_out(&args.out, &io::measure_to_json(&measure)?)?;
    println!(
        "wrote {} ({} total mass {:.12})",
        args.out.display(),
        match &measure {
            Measure::Atomic(a) => format!("{} atoms,", a.dirs.len()),
            Measure::Density(d) => format!("density on {} cells,", d.grid.len()),
        },
        measure::total_mass(&measure)?
    );
    Ok(EXIT_OK)
}

fn cmd_gauss_image(args: GaussImageArgs) -> anyhow::Result<i32> {
    let body = load_body(&args.body)?;
    let lambda = load_lambda(&args.lambda, body.dim, args.level)?;
    let gim = gaussim::gauss::lp_gauss_image_measure(&body, &lambda, args.p)?;
    let atomic = gim.to_atomic()?;
    write_out(&args.out, &io::measure_to_json(&Measure::Atomic(atomic))?)?;
    println!(
        "wrote {} ({} atoms, total mass {:.12})",
        args.out.display(),
        gim.entries.len(),
        gim.total()
    );
    Ok(EXIT_OK)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<i32> {
    let mu = load_measure(&args.mu)?;
    let lambda = load_lambda(&args.lambda, mu.dim(), args.level)?;

    let mut opts = SolveOptions::new(args.p);
    opts.max_iters = args.max_iters;
    opts.grad_tol = args.grad_tol;
    opts.residual_tol = args.residual_tol;
    opts.enforce_even = args.even;
    opts.quad_depth = args.quad_depth;
    opts.seed = args.seed;

    let report = solver::solve(&mu, &lambda, &opts)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }

    let echo = serde_json::json!({
        "p": opts.p,
        "max_iters": opts.max_iters,
        "grad_tol": opts.grad_tol,
        "residual_tol": opts.residual_tol,
        "initial_step": opts.initial_step,
        "armijo_c": opts.armijo_c,
        "backtrack_factor": opts.backtrack_factor,
        "enforce_even": opts.enforce_even,
        "degeneracy_ratio_cap": opts.degeneracy_ratio_cap,
        "quad_depth": opts.quad_depth,
        "seed": opts.seed,
        "grid_level": lambda.grid.level,
        "grid_dim": lambda.grid.dim,
    });
    write_out(&args.out, &io::solve_report_to_json(&report, echo)?)?;
    if let Some(body_path) = &args.export_body {
        write_out(body_path, &io::body_to_json(&report.body)?)?;
    }
    println!(
        "{}: residual {:.3e}, gradient {:.3e}, {} iterations",
        io::status_name(report.status),
        report.residual,
        report.grad_inf_norm,
        report.iterations
    );
    Ok(match report.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::DegeneracyDetected => EXIT_DEGENERATE,
        SolveStatus::MaxIters => EXIT_MAX_ITERS,
    })
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let body = load_body(&args.body)?;
    let mu = load_measure(&args.mu)?;
    let lambda = load_lambda(&args.lambda, body.dim, args.level)?;
    let gim = gaussim::gauss::lp_gauss_image_measure(&body, &lambda, args.p)?;
    let mut report = gaussim::verify::measure_residual(&mu, &gim)?;
    let mut warnings = Vec::new();

    if args.ma {
        let grid = &lambda.grid;
        let mu_w = measure::weights_on_grid(&mu, grid)?;
        let f: Vec<f64> = mu_w
            .iter()
            .zip(&grid.areas)
            .map(|(m, a)| m / a)
            .collect();
        let ma = gaussim::verify::ma_residual(&body, grid, &f, &lambda.values, args.p)?;
        warnings.extend(ma.warnings.clone());
        report.ma_pointwise = Some(ma.residuals);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let bytes = io::residual_report_to_json(&report, body.dim, &warnings)?;
    emit_report(&args.out, &bytes)?;
    Ok(EXIT_OK)
}

fn cmd_entropy(args: EntropyArgs) -> anyhow::Result<i32> {
    let body = load_body(&args.body)?;
    let lambda = load_lambda(&args.lambda, body.dim, args.level)?;
    let g = gaussim::entropy::entropy_g(&body, &lambda, args.quad_depth)?;
    let e = gaussim::entropy::entropy_e(&body, &lambda, args.quad_depth)?;
    let json = serde_json::json!({
        "entropy_support": g,
        "entropy_radial": e,
        "quad_depth": args.quad_depth,
        "grid_level": lambda.grid.level,
    });
    emit_report(&args.out, format!("{json:#}\n").as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_check_measure(args: CheckMeasureArgs) -> anyhow::Result<i32> {
    let mu = load_measure(&args.mu)?;
    let total = measure::total_mass(&mu)?;
    let even = measure::check_even(&mu, 1e-9);
    let (vanishes, subsphere_note) = measure::check_great_subsphere_vanishing(&mu);
    let hemisphere = measure::check_not_hemisphere_concentrated(&mu, args.p.unwrap_or(1.0))?;

    let mut admissible = true;
    let mut reasons: Vec<String> = Vec::new();
    if let Some(p) = args.p {
        if p > 0.0 && !hemisphere.ok {
            admissible = false;
            reasons.push("target measure is concentrated in a closed hemisphere".into());
        }
        if p < 0.0 {
            if !even {
                admissible = false;
                reasons.push("target measure must be even when the exponent is negative".into());
            }
            if !vanishes {
                reasons.push(format!("note: {subsphere_note}"));
            }
        }
        if p == 0.0 {
            admissible = false;
            reasons.push("p must be nonzero".into());
        }
    }

    let json = serde_json::json!({
        "dim": mu.dim(),
        "total_mass": total,
        "even": even,
        "hemisphere_ok": hemisphere.ok,
        "hemisphere_min_support": hemisphere.min_phi,
        "great_subsphere_vanishing": vanishes,
        "admissible": if args.p.is_some() { Some(admissible) } else { None },
        "reasons": reasons,
    });
    emit_report(&args.out, format!("{json:#}\n").as_bytes())?;
    Ok(if admissible { EXIT_OK } else { EXIT_INADMISSIBLE })
}

fn cmd_export(args: ExportArgs) -> anyhow::Result<i32> {
    if let (Some(dim), Some(level)) = (args.grid_dim, args.grid_level) {
        let grid = SphereGrid::build(dim, level)?;
        write_out(&args.out, &io::grid_to_json(&grid)?)?;
        println!("wrote {} ({} directions)", args.out.display(), grid.len());
        return Ok(EXIT_OK);
    }
    let body_path = args
        .body
        .as_ref()
        .ok_or_else(|| anyhow!("either --body or --grid-dim/--grid-level is required"))?;
    let body = load_body(body_path)?;
    let bytes = match args.format.as_str() {
        "json" => io::body_to_json(&body)?,
        "obj" => io::body_to_obj(&body)?.into_bytes(),
        "csv" => io::body_to_csv(&body)?.into_bytes(),
        other => bail!("unknown export format {other:?} (expected json, obj or csv)"),
    };
    write_out(&args.out, &bytes)?;
    println!("wrote {}", args.out.display());
    Ok(EXIT_OK)
}

fn cmd_plot_data(args: PlotDataArgs) -> anyhow::Result<i32> {
    let body = load_body(&args.body)?;
    let lambda = load_lambda(&args.lambda, body.dim, args.level)?;
    let grid = &lambda.grid;

    let radius: Vec<f64> = grid
        .dirs
        .iter()
        .map(|u| body.radial(u))
        .collect::<gaussim::Result<_>>()?;
    let cell_mass = lambda.cell_masses();
    let gim = gaussim::gauss::lp_gauss_image_measure(&body, &lambda, args.p)?;
    let image_w =
        measure::weights_on_grid(&Measure::Atomic(gim.to_atomic()?), grid)?;

    let mut columns: Vec<(&str, &[f64])> = vec![
        ("radius", &radius),
        ("source_cell_mass", &cell_mass),
        ("image_mass", &image_w),
    ];
    let residual: Vec<f64>;
    let mu_w: Vec<f64>;
    if let Some(mu_path) = &args.mu {
        let mu = load_measure(mu_path)?;
        mu_w = measure::weights_on_grid(&mu, grid)?;
        residual = mu_w
            .iter()
            .zip(&image_w)
            .map(|(a, b)| (a - b).abs())
            .collect();
        columns.push(("target_mass", &mu_w));
        columns.push(("abs_residual", &residual));
    }
    let csv = io::field_csv(grid, &columns)?;
    write_out(&args.out, csv.as_bytes())?;
    println!("wrote {} ({} rows)", args.out.display(), grid.len());
    Ok(EXIT_OK)
}
