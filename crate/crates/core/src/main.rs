use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use bpfid::harness::{
    build_scenario, run_sweep_on, solve_cell, write_pgm, ExperimentSpec, FidelityChoice, ImageSource, L2Kind,
    PriorSpec, ScenarioKind, SolverSpec,
};
use bpfid::linops::{condition_number_sq, spectrum, SpectralDecomposition};
use bpfid::solvers::{equivalence_check, IdbpConfig};
use bpfid::tikhonov::{check_observations, NoiseSpec, SpectrumRegime};
use bpfid::{Error, Vector};

/// Least-squares vs back-projection fidelity experiments.
#[derive(Parser, Debug)]
#[command(name = "bpfid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Singular value summary of a scenario operator.
    Spectrum(ScenarioArgs),
    /// Reconstruct one image at a single beta.
    Solve(ExperimentArgs),
    /// Sweep the beta (and eps) grid and write CSV rows.
    Sweep(ExperimentArgs),
    /// Check the LS/BP bias, variance and MSE orderings.
    VerifyObservations(ObservationArgs),
    /// Compare IDBP iterates with ISTA on the BP cost.
    IdbpEquiv(EquivArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Srx3,
    Deblur9,
    Cs,
    Inpaint,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FidelityName {
    Ls,
    Bp,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SolverName {
    Closed,
    Ista,
    Fista,
    Idbp,
    Cg,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "srx3")]
    scenario: ScenarioName,
    /// Measurement ratio m/n (CS) or kept-pixel ratio (inpainting).
    #[arg(long, default_value_t = 0.5)]
    mratio: f64,
    /// Side length of the square image grid.
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// 8-bit grayscale PGM; the built-in phantom when omitted.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_enum, default_value = "bp")]
    fidelity: FidelityName,
    /// Pseudo-inverse loading(s): a value or comma-separated list.
    #[arg(long)]
    eps: Option<String>,
    /// l2 | l2fd | l2fd-sparse | tv | denoiser:NAME
    #[arg(long, default_value = "l2")]
    prior: String,
    /// Comma-separated list or log-spaced range LO:HI:COUNT.
    #[arg(long, default_value = "0.001:1:4")]
    beta: String,
    /// Noise standard deviation.
    #[arg(long, conflicts_with = "snr")]
    sigma: Option<f64>,
    /// Noise level as a signal-to-noise ratio in dB.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, value_enum, default_value = "closed")]
    solver: SolverName,
    /// Iteration count; scenario- and prior-dependent default.
    #[arg(long)]
    iters: Option<usize>,
    /// Noise realisations per cell.
    #[arg(long, default_value_t = 5)]
    draws: usize,
    /// Record wall-clock time per cell.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct ObservationArgs {
    /// Comma-separated singular values; the signal is all ones.
    #[arg(long, conflicts_with = "scenario")]
    spectrum: Option<String>,
    /// Use a scenario operator and the phantom instead of --spectrum.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioName>,
    #[arg(long, default_value_t = 0.5)]
    mratio: f64,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Regularisation weight of the LS estimator.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Regularisation weight of the BP estimator; defaults to --beta.
    #[arg(long)]
    beta_bp: Option<f64>,
}

#[derive(Args, Debug)]
struct EquivArgs {
    #[arg(long, value_enum, default_value = "inpaint")]
    scenario: ScenarioName,
    #[arg(long, default_value_t = 0.5)]
    mratio: f64,
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// identity | median | l2 | l2fd | tv
    #[arg(long, default_value = "median")]
    denoiser: String,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failure with its exit code: 1 for usage errors, 2 for runtime errors.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::VerifyObservations(args) => cmd_verify(&args),
        Command::IdbpEquiv(args) => cmd_equiv(&args),
    }
}

fn scenario_kind(name: ScenarioName, ratio: f64) -> Result<ScenarioKind, Failure> {
    let label = match name {
        ScenarioName::Srx3 => "srx3",
        ScenarioName::Deblur9 => "deblur9",
        ScenarioName::Cs => "cs",
        ScenarioName::Inpaint => "inpaint",
    };
    ScenarioKind::parse(label, ratio).map_err(|e| Failure::Usage(format!("--mratio: {e}")))
}

fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("{flag}: cannot parse '{s}' as a number"))))
        .collect()
}

/// `a,b,c` or `lo:hi:count` (log-spaced, endpoints included).
fn parse_betas(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let betas = match parts.as_slice() {
        [lo, hi, count] => {
            let lo = parse_list("--beta", lo)?[0];
            let hi = parse_list("--beta", hi)?[0];
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("--beta: cannot parse count '{count}'")))?;
            if !(lo > 0.0 && hi >= lo) || count == 0 {
                return Err(Failure::Usage("--beta: range needs 0 < LO <= HI and COUNT >= 1".into()));
            }
            if count == 1 {
                vec![lo]
            } else {
                // Base 10 keeps decade endpoints such as 0.01 exact.
                let (a, b) = (lo.log10(), hi.log10());
                let mut betas: Vec<f64> =
                    (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect();
                betas[0] = lo;
                betas[count - 1] = hi;
                betas
            }
        }
        [_] => parse_list("--beta", text)?,
        _ => return Err(Failure::Usage(format!("--beta: expected a list or LO:HI:COUNT, got '{text}'"))),
    };
    if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
        return Err(Failure::Usage("--beta: values must be positive".into()));
    }
    Ok(betas)
}

fn parse_prior(text: &str) -> Result<PriorSpec, Failure> {
    Ok(match text {
        "l2" => PriorSpec::L2(L2Kind::Identity),
        "l2fd" => PriorSpec::L2(L2Kind::FiniteDifference),
        "l2fd-sparse" => PriorSpec::L2(L2Kind::SparseFiniteDifference),
        "tv" => PriorSpec::Tv,
        other => match other.strip_prefix("denoiser:") {
            Some(name) if ["identity", "median", "l2", "l2fd", "tv"].contains(&name) => PriorSpec::Denoiser(name.into()),
            _ => return Err(Failure::Usage(format!("--prior: unknown prior '{other}'"))),
        },
    })
}

fn image_source(path: &Option<PathBuf>) -> ImageSource {
    path.clone().map(ImageSource::Pgm).unwrap_or(ImageSource::Phantom)
}

fn experiment_spec(args: &ExperimentArgs) -> Result<ExperimentSpec, Failure> {
    let s = &args.scenario;
    let noise = match (args.sigma, args.snr) {
        (_, Some(db)) => NoiseSpec::snr_db(db),
        (sigma, None) => NoiseSpec::sigma(sigma.unwrap_or(0.0)),
    }
    .map_err(|e| Failure::Usage(format!("--sigma/--snr: {e}")))?;
    let spec = ExperimentSpec {
        scenario: scenario_kind(s.scenario, s.mratio)?,
        image: image_source(&s.image),
        size: s.size,
        noise,
        fidelity: match args.fidelity {
            FidelityName::Ls => FidelityChoice::Ls,
            FidelityName::Bp => FidelityChoice::Bp,
        },
        eps: match &args.eps {
            Some(text) => parse_list("--eps", text)?,
            None => Vec::new(),
        },
        prior: parse_prior(&args.prior)?,
        betas: parse_betas(&args.beta)?,
        solver: match args.solver {
            SolverName::Closed => SolverSpec::Closed,
            SolverName::Ista => SolverSpec::Ista,
            SolverName::Fista => SolverSpec::Fista,
            SolverName::Idbp => SolverSpec::Idbp,
            SolverName::Cg => SolverSpec::Cg,
        },
        iters: args.iters,
        seed: s.seed,
        draws: args.draws,
        timing: args.timing,
    };
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(spec)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_provenance(spec: &ExperimentSpec) {
    eprintln!("# spec {spec:?}");
    eprintln!("# spec_hash {} iterations {}", spec.hash(), spec.iterations());
}

fn cmd_spectrum(args: &ScenarioArgs) -> Result<(), Failure> {
    let kind = scenario_kind(args.scenario, args.mratio)?;
    eprintln!("# spectrum scenario={kind} size={} seed={}", args.size, args.seed);
    let scn = build_scenario(kind, &image_source(&args.image), args.size, args.seed)?;
    let spec = spectrum(&scn.op)?;
    let lambda_sq = spec.lambda_sq();
    let mut out = output(&args.out)?;
    writeln!(out, "m {}", spec.m())?;
    writeln!(out, "n {}", spec.n())?;
    writeln!(out, "lambda1_sq {:.6e}", lambda_sq[0])?;
    writeln!(out, "lambdam_sq {:.6e}", lambda_sq[lambda_sq.len() - 1])?;
    writeln!(out, "condition {:.6e}", condition_number_sq(&spec))?;
    Ok(())
}

fn cmd_solve(args: &ExperimentArgs) -> Result<(), Failure> {
    let spec = experiment_spec(args)?;
    print_provenance(&spec);
    let scn = build_scenario(spec.scenario, &spec.image, spec.size, spec.seed)?;
    let sigma = spec.noise.resolve(&scn.clean);
    let eps = spec.eps_grid(sigma)[0];
    let beta = spec.betas[0];
    let (x, row) = solve_cell(&spec, &scn, beta, eps, 0)?;
    let summary = format!(
        "scenario={} fidelity={} prior={} beta={} eps={} sigma_e={} psnr_db={:.4} mse={:.6} iters={}",
        row.scenario,
        row.fidelity,
        row.prior,
        row.beta,
        row.eps,
        row.sigma_e,
        row.psnr_db,
        row.mse,
        row.iters.unwrap_or(0)
    );
    match &args.scenario.out {
        Some(path) if path.extension().is_some_and(|e| e == "pgm") => {
            write_pgm(Path::new(path), &x, scn.shape)?;
            println!("{summary}");
        }
        path => writeln!(output(path)?, "{summary}")?,
    }
    Ok(())
}

fn cmd_sweep(args: &ExperimentArgs) -> Result<(), Failure> {
    let spec = experiment_spec(args)?;
    print_provenance(&spec);
    let scn = build_scenario(spec.scenario, &spec.image, spec.size, spec.seed)?;
    let result = run_sweep_on(&spec, &scn)?;
    for row in result.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "# failed cell beta={} eps={} seed={}: {}",
            row.beta,
            row.eps,
            row.seed,
            row.error.as_deref().unwrap_or_default()
        );
    }
    result.write_csv(output(&args.scenario.out)?)?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_verify(args: &ObservationArgs) -> Result<(), Failure> {
    if !(args.beta > 0.0) || args.beta_bp.is_some_and(|b| !(b > 0.0)) {
        return Err(Failure::Usage("--beta and --beta-bp must be positive".into()));
    }
    if !(args.sigma >= 0.0) {
        return Err(Failure::Usage("--sigma must be >= 0".into()));
    }
    let (spec, x) = match (&args.spectrum, args.scenario) {
        (Some(text), _) => {
            let sv = parse_list("--spectrum", text)?;
            let n = sv.len();
            let spec = SpectralDecomposition::from_singular_values(sv, n).map_err(|e| Failure::Usage(format!("--spectrum: {e}")))?;
            (spec, Vector::from_element(n, 1.0))
        }
        (None, Some(name)) => {
            let scn = build_scenario(scenario_kind(name, args.mratio)?, &ImageSource::Phantom, args.size, args.seed)?;
            (spectrum(&scn.op)?, scn.truth)
        }
        (None, None) => return Err(Failure::Usage("one of --spectrum or --scenario is required".into())),
    };
    let beta_bp = args.beta_bp.unwrap_or(args.beta);
    let gamma = vec![1.0; spec.m()];
    let report = check_observations(&spec, &x, &gamma, args.beta, beta_bp, args.sigma)?;
    eprintln!("# verify-observations beta_ls={} beta_bp={beta_bp} sigma_e={} m={} n={}", args.beta, args.sigma, spec.m(), spec.n());
    println!("Obs1: per-direction bias/variance ordering: {}", verdict(report.directions_hold));
    match (report.regime, report.noiseless_ordering_holds) {
        (SpectrumRegime::AllBelowOne, Some(ok)) => println!("Obs2: all λ<1 ⇒ MSE_BP<MSE_LS: {}", verdict(ok)),
        (SpectrumRegime::AllAboveOne, Some(ok)) => println!("Obs2: all λ>1 ⇒ MSE_BP>MSE_LS: {}", verdict(ok)),
        _ => println!(
            "Obs2: mixed spectrum, no fixed ordering (noiseless MSE_LS={:.6e}, MSE_BP={:.6e})",
            report.noiseless_ls, report.noiseless_bp
        ),
    }
    let matched_ok = report.matched_holds && (!report.matched_strict_expected || report.matched_strict_holds);
    println!(
        "Obs3: β_BP=β_LS/λ₁²={:.6e} ⇒ bias²_BP≤bias²_LS ({:.6e} vs {:.6e}): {}",
        report.matched_beta_bp,
        report.matched_bias_bp,
        report.matched_bias_ls,
        verdict(matched_ok)
    );
    println!(
        "MSE at sigma_e={}: LS={:.6e} (bias² {:.6e}, var {:.6e}), BP={:.6e} (bias² {:.6e}, var {:.6e})",
        args.sigma,
        report.mse_ls.mse,
        report.mse_ls.bias_sq,
        report.mse_ls.variance,
        report.mse_bp.mse,
        report.mse_bp.bias_sq,
        report.mse_bp.variance
    );
    if report.all_hold() {
        Ok(())
    } else {
        Err(Failure::Runtime("an observation check failed".into()))
    }
}

fn cmd_equiv(args: &EquivArgs) -> Result<(), Failure> {
    let kind = scenario_kind(args.scenario, args.mratio)?;
    let scn = build_scenario(kind, &ImageSource::Phantom, args.size, args.seed)?;
    let denoiser = bpfid::harness::named_denoiser(&args.denoiser, &scn).map_err(|e| Failure::Usage(format!("--denoiser: {e}")))?;
    let cfg = IdbpConfig { sigma_e: args.sigma, delta: args.delta, iters: args.iters, eps: args.eps, record_trace: false };
    eprintln!("# idbp-equiv scenario={kind} size={} denoiser={} {cfg:?}", args.size, args.denoiser);
    let (y, _) = bpfid::harness::add_noise(&scn.clean, &NoiseSpec::Sigma(args.sigma), args.seed.wrapping_add(1))?;
    let x0 = scn.initial_guess(&y)?;
    let deviation = equivalence_check(Arc::clone(&scn.op), &y, &denoiser, &cfg, &x0)?;
    println!("max deviation {deviation:.3e} over {} iterations: {}", args.iters, verdict(deviation <= 1e-10));
    Ok(())
}
