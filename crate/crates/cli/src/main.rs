use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqe::io::{read_points_csv, write_csv, write_points_csv, ParamsFile};
use eqe::radial::entropy_elliptical;
use eqe::{
    density_grid, fit_data, log_norm_const, sample_elliptical, BlockSplit, EllipticalParams,
    EqeError, Feasibility, Marginal, Model, NormMethod, RadialCdfTable, RadialParams,
    SeededGenerator,
};
use serde_json::json;

mod selfcheck;

#[derive(Parser)]
#[command(
    name = "eqe",
    version,
    about = "Elliptical quartic exponential distribution tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Log normalization constant ln Z_D
    Logz(LogzArgs),
    /// Density on a square grid (D = 2), CSV "x1,x2,density"
    PdfGrid(PdfGridArgs),
    /// Draw points, CSV with header x1..xD
    Sample(SampleArgs),
    /// Fit parameters to a CSV of points
    Fit(FitArgs),
    /// Differential entropy in nats
    Entropy(ParamsArg),
    /// Marginal density of the first block along r1, plus its peaks
    Marginal(MarginalArgs),
    /// Run the built-in oracle suite
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct ParamsArg {
    /// JSON parameter file
    #[arg(long)]
    params: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Pcf,
    Quad,
}

#[derive(Args)]
struct LogzArgs {
    #[arg(long, conflicts_with_all = ["dim", "lambda1", "lambda2"])]
    params: Option<PathBuf>,
    #[arg(long, requires_all = ["lambda1", "lambda2"])]
    dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
}

#[derive(Args)]
struct PdfGridArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    xmin: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    xmax: f64,
    #[arg(long, default_value_t = 201)]
    npts: usize,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Independent generator streams; output is their concatenation
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Spherical,
    Elliptical,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "elliptical")]
    model: ModelArg,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MarginalArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    dim1: usize,
    #[arg(long)]
    rmax: f64,
    #[arg(long, default_value_t = 401)]
    npts: usize,
    /// CSV "r1,marginal_density"; the peak list goes to stdout
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, hide = true)]
    inject_failure: bool,
}

/// A failed command: message and process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<EqeError> for Failure {
    fn from(e: EqeError) -> Self {
        let code = match e.root() {
            EqeError::Infeasible(_) => 4,
            _ if e.is_numerical() => 3,
            _ => 2,
        };
        let message = if code == 4 {
            format!("infeasible: {e}")
        } else {
            e.to_string()
        };
        Self { code, message }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Logz(a) => logz(a),
        Command::PdfGrid(a) => pdf_grid(a),
        Command::Sample(a) => sample(a),
        Command::Fit(a) => fit(a),
        Command::Entropy(a) => entropy(a),
        Command::Marginal(a) => marginal(a),
        Command::Selfcheck(a) => selfcheck::run(a.inject_failure),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_params(path: &Path) -> Result<ParamsFile, Failure> {
    let file = File::open(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    ParamsFile::from_reader(BufReader::new(file))
        .map_err(|e| e.context(path.display().to_string()).into())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("json serializes")
    );
}

fn logz(a: LogzArgs) -> CmdResult {
    let p = match (&a.params, a.dim, a.lambda1, a.lambda2) {
        (Some(path), ..) => load_params(path)?.radial()?,
        (None, Some(d), Some(l1), Some(l2)) => RadialParams::new(d, l1, l2)?,
        _ => {
            return Err(Failure::usage(
                "give --params FILE or --dim, --lambda1 and --lambda2",
            ))
        }
    };
    let method = match a.method {
        Method::Auto => NormMethod::Auto,
        Method::Pcf => NormMethod::Pcf,
        Method::Quad => NormMethod::Quadrature,
    };
    let z = log_norm_const(&p, method)?;
    print_json(&json!({"log_z": z.value, "method": z.provenance.as_str()}));
    Ok(())
}

fn pdf_grid(a: PdfGridArgs) -> CmdResult {
    let p = load_params(&a.params)?.elliptical()?;
    let grid = density_grid(&p, a.xmin, a.xmax, a.npts)?;
    let header = ["x1", "x2", "density"];
    match &a.out {
        Some(path) => write_csv(create(path)?, &header, grid)?,
        None => write_csv(io::stdout().lock(), &header, grid)?,
    }
    Ok(())
}

fn sample(a: SampleArgs) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    if a.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let p = load_params(&a.params)?.elliptical()?;
    let points = if a.workers == 1 {
        sample_elliptical(&p, a.n, &mut SeededGenerator::new(a.seed))?
    } else {
        let table = RadialCdfTable::build(*p.radial())?;
        eqe::sampling::apply_affine(&p, table.sample_parallel(a.n, a.seed, a.workers))
    };
    write_points_csv(create(&a.out)?, &points)?;
    Ok(())
}

fn fit(a: FitArgs) -> CmdResult {
    let file =
        File::open(&a.input).map_err(|e| Failure::usage(format!("{}: {e}", a.input.display())))?;
    let data = read_points_csv(BufReader::new(file))
        .map_err(|e| e.context(a.input.display().to_string()))?;
    let model = match a.model {
        ModelArg::Spherical => Model::Spherical,
        ModelArg::Elliptical => Model::Elliptical,
    };
    let report = fit_data(&data, model)?;
    if report.feasibility == Feasibility::NearGaussianBoundary {
        eprintln!("warning: moments lie close to the Gaussian limit; the fitted lambda2 is poorly determined");
    }
    let text = ParamsFile::from_fit(&report).to_json();
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}")
                .and_then(|_| w.flush())
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn entropy(a: ParamsArg) -> CmdResult {
    let p: EllipticalParams = load_params(&a.params)?.elliptical()?;
    let h = entropy_elliptical(&p)?;
    print_json(&json!({"entropy_nats": h}));
    Ok(())
}

fn marginal(a: MarginalArgs) -> CmdResult {
    let file = load_params(&a.params)?;
    if !file.is_spherical() {
        return Err(Failure::usage(
            "marginal curves need a spherical parameter file (no mu or sigma)",
        ));
    }
    let p = file.radial()?;
    if a.dim1 == 0 || a.dim1 >= p.dim() {
        return Err(Failure::usage(format!(
            "--dim1 must be between 1 and {}",
            p.dim() - 1
        )));
    }
    if !(a.rmax > 0.0 && a.rmax.is_finite()) || a.npts < 2 {
        return Err(Failure::usage(
            "--rmax must be positive and --npts at least 2",
        ));
    }
    let m = Marginal::new(p, BlockSplit::new(a.dim1, p.dim() - a.dim1)?)?;
    let mut rows = Vec::with_capacity(a.npts);
    for i in 0..a.npts {
        let r = a.rmax * i as f64 / (a.npts - 1) as f64;
        rows.push([r, m.log_density_q(r * r)?.exp()]);
    }
    write_csv(create(&a.out)?, &["r1", "marginal_density"], rows)?;
    let peaks = m.peaks()?;
    print_json(&json!({"dim1": a.dim1, "peaks": peaks}));
    Ok(())
}
