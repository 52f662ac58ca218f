use std::io::{Read, Write};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::metrics::{mse, psnr_from_mse};
use super::noise::add_noise;
use super::scenario::{build_scenario, ImageSource, Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::fidelity::{ls_lipschitz, FidelityTerm};
use crate::linops::{spectrum, PseudoInverse, SpectralCoefficients};
use crate::priors::{Denoiser, ProximalPrior, TvConfig, TvPrior};
use crate::solvers::{idbp_with, prox_gradient, IdbpConfig, ProxStepConfig};
use crate::tikhonov::{gamma_from_prior, mse_bp, mse_ls, L2Prior, NoiseSpec, TikhonovSolver};
use crate::Vector;

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 13] = [
    "scenario", "fidelity", "prior", "beta", "eps", "sigma_e", "seed", "psnr_db", "mse", "bias_sq", "variance", "iters",
    "wall_ms",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityChoice {
    Ls,
    Bp,
}

impl FidelityChoice {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ls => "ls",
            Self::Bp => "bp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum L2Kind {
    Identity,
    FiniteDifference,
    SparseFiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PriorSpec {
    L2(L2Kind),
    Tv,
    /// A named plug-in denoiser: `identity`, `median`, `l2`, `l2fd` or `tv`.
    Denoiser(String),
}

impl PriorSpec {
    pub fn label(&self) -> String {
        match self {
            Self::L2(L2Kind::Identity) => "l2".into(),
            Self::L2(L2Kind::FiniteDifference) => "l2fd".into(),
            Self::L2(L2Kind::SparseFiniteDifference) => "l2fd-sparse".into(),
            Self::Tv => "tv".into(),
            Self::Denoiser(name) => format!("denoiser:{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverSpec {
    /// Exact minimiser of the l2-regularised cost.
    Closed,
    /// A fixed number of CG steps on the normal equations from zero.
    Cg,
    Ista,
    Fista,
    /// IDBP with `δ = √β − σ_e`.
    Idbp,
}

impl SolverSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Closed => "closed",
            Self::Cg => "cg",
            Self::Ista => "ista",
            Self::Fista => "fista",
            Self::Idbp => "idbp",
        }
    }
}

/// Everything that determines a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioKind,
    pub image: ImageSource,
    pub size: usize,
    pub noise: NoiseSpec,
    pub fidelity: FidelityChoice,
    /// Pseudo-inverse loadings to sweep (BP only); empty selects the
    /// default, `0.01σ_e²` for deblurring and 0 otherwise.
    pub eps: Vec<f64>,
    pub prior: PriorSpec,
    pub betas: Vec<f64>,
    pub solver: SolverSpec,
    /// Iteration count; `None` selects [`ExperimentSpec::default_iters`].
    pub iters: Option<usize>,
    pub seed: u64,
    /// Noise realisations per cell (a single one when noiseless).
    pub draws: usize,
    /// Record wall-clock times (makes the output non-reproducible).
    pub timing: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::SrX3,
            image: ImageSource::Phantom,
            size: 64,
            noise: NoiseSpec::Sigma(0.0),
            fidelity: FidelityChoice::Bp,
            eps: Vec::new(),
            prior: PriorSpec::L2(L2Kind::Identity),
            betas: vec![1e-3, 1e-2, 1e-1, 1.0],
            solver: SolverSpec::Closed,
            iters: None,
            seed: 0,
            draws: 5,
            timing: false,
        }
    }
}

impl ExperimentSpec {
    /// 100 for TV on SR/deblurring, 500 for TV on CS, 200 otherwise, and
    /// a single CG step.
    pub fn default_iters(&self) -> usize {
        match (self.solver, &self.prior) {
            (SolverSpec::Closed, _) => 0,
            (SolverSpec::Cg, _) => 1,
            (_, PriorSpec::Tv) => match self.scenario {
                ScenarioKind::CompressedSensing { .. } => 500,
                _ => 100,
            },
            _ => 200,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iters.unwrap_or_else(|| self.default_iters())
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument("beta grid must be non-empty and strictly positive".into()));
        }
        if self.eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidArgument("eps values must be finite and >= 0".into()));
        }
        if self.draws == 0 {
            return Err(Error::InvalidArgument("draws must be >= 1".into()));
        }
        let l2 = matches!(self.prior, PriorSpec::L2(_));
        if matches!(self.solver, SolverSpec::Closed | SolverSpec::Cg) && !l2 {
            return Err(Error::InvalidArgument(format!("solver {} needs an l2 prior", self.solver.label())));
        }
        if self.solver == SolverSpec::Idbp && self.fidelity != FidelityChoice::Bp {
            return Err(Error::InvalidArgument("idbp runs on the BP fidelity only".into()));
        }
        if self.solver == SolverSpec::Cg && self.iterations() == 0 {
            return Err(Error::InvalidArgument("cg needs at least one iteration".into()));
        }
        Ok(())
    }

    /// Loadings to sweep for a resolved noise level.
    pub fn eps_grid(&self, sigma_e: f64) -> Vec<f64> {
        match self.fidelity {
            FidelityChoice::Ls => vec![0.0],
            FidelityChoice::Bp if !self.eps.is_empty() => self.eps.clone(),
            FidelityChoice::Bp => match self.scenario {
                ScenarioKind::Deblur9 => vec![0.01 * sigma_e * sigma_e],
                _ => vec![0.0],
            },
        }
    }

    /// Hex SHA-256 of the spec's debug representation.
    pub fn hash(&self) -> String {
        Sha256::digest(format!("{self:?}").as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One (β, ε, noise draw) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub fidelity: String,
    pub prior: String,
    pub beta: f64,
    pub eps: f64,
    pub sigma_e: f64,
    pub seed: u64,
    pub psnr_db: f64,
    /// Per-pixel squared error `‖x̂ − x‖²/n`.
    pub mse: f64,
    /// Analytic per-pixel squared bias and variance (l2 closed form only).
    pub bias_sq: Option<f64>,
    pub variance: Option<f64>,
    pub iters: Option<usize>,
    pub wall_ms: Option<f64>,
    /// Failure message of a cell; such rows carry NaN metrics.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub spec_hash: String,
    pub seed: u64,
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepResult {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.fidelity.clone(),
                r.prior.clone(),
                r.beta.to_string(),
                r.eps.to_string(),
                r.sigma_e.to_string(),
                r.seed.to_string(),
                r.psnr_db.to_string(),
                r.mse.to_string(),
                fmt_opt(r.bias_sq),
                fmt_opt(r.variance),
                fmt_opt(r.iters),
                fmt_opt(r.wall_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses rows written by [`SweepResult::write_csv`]; provenance is
    /// not part of the CSV and comes back empty.
    pub fn parse_csv(input: impl Read) -> Result<Vec<SweepRow>> {
        let mut reader = csv::Reader::from_reader(input);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(Error::InvalidArgument(format!("unexpected CSV header {header:?}")));
        }
        let num = |s: &str, col: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::InvalidArgument(format!("bad {col} value '{s}'")))
        };
        let opt = |s: &str, col: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, col).map(Some)
            }
        };
        let mut rows = Vec::new();
        for record in reader.records() {
            let r = record?;
            let iters = if r[11].is_empty() {
                None
            } else {
                Some(r[11].parse().map_err(|_| Error::InvalidArgument(format!("bad iters value '{}'", &r[11])))?)
            };
            rows.push(SweepRow {
                scenario: r[0].to_owned(),
                fidelity: r[1].to_owned(),
                prior: r[2].to_owned(),
                beta: num(&r[3], "beta")?,
                eps: num(&r[4], "eps")?,
                sigma_e: num(&r[5], "sigma_e")?,
                seed: r[6].parse().map_err(|_| Error::InvalidArgument(format!("bad seed value '{}'", &r[6])))?,
                psnr_db: num(&r[7], "psnr_db")?,
                mse: num(&r[8], "mse")?,
                bias_sq: opt(&r[9], "bias_sq")?,
                variance: opt(&r[10], "variance")?,
                iters,
                wall_ms: opt(&r[12], "wall_ms")?,
                error: None,
            });
        }
        Ok(rows)
    }
}

/// Noise seed of draw `d` in a sweep seeded with `seed`.
pub fn draw_seed(seed: u64, d: usize) -> u64 {
    seed.wrapping_add(1 + d as u64)
}

fn l2_prior(kind: L2Kind, scn: &Scenario) -> L2Prior {
    match kind {
        L2Kind::Identity => L2Prior::Identity,
        L2Kind::FiniteDifference => L2Prior::finite_difference(scn.shape),
        L2Kind::SparseFiniteDifference => L2Prior::sparse_finite_difference(scn.shape),
    }
}

/// Resolves a plug-in denoiser by name for images of the scenario's shape.
pub fn named_denoiser(name: &str, scn: &Scenario) -> Result<Denoiser> {
    Ok(match name {
        "identity" => Denoiser::identity(),
        "median" => Denoiser::median3x3(scn.shape),
        "l2" => Denoiser::from_l2(L2Prior::Identity),
        "l2fd" => Denoiser::from_l2(L2Prior::finite_difference(scn.shape)),
        "tv" => Denoiser::from_tv(scn.shape, TvConfig::default()),
        other => return Err(Error::InvalidArgument(format!("unknown denoiser '{other}'"))),
    })
}

fn denoiser_for(spec: &ExperimentSpec, scn: &Scenario) -> Result<Denoiser> {
    match &spec.prior {
        PriorSpec::L2(kind) => Ok(Denoiser::from_l2(l2_prior(*kind, scn))),
        PriorSpec::Tv => Ok(Denoiser::from_tv(scn.shape, TvConfig::default())),
        PriorSpec::Denoiser(name) => named_denoiser(name, scn),
    }
}

fn prox_prior(spec: &ExperimentSpec, scn: &Scenario) -> Result<Box<dyn ProximalPrior>> {
    Ok(match &spec.prior {
        PriorSpec::L2(kind) => Box::new(l2_prior(*kind, scn)),
        PriorSpec::Tv => Box::new(TvPrior::new(scn.shape)),
        PriorSpec::Denoiser(name) => Box::new(named_denoiser(name, scn)?.as_prox()),
    })
}

/// Spectral data for analytic columns of l2 closed-form cells.
struct Analytic {
    coeffs: SpectralCoefficients,
    gamma_sq: Vec<f64>,
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    scn: &'a Scenario,
    sigma_e: f64,
    iters: usize,
    lipschitz: Option<f64>,
    analytic: Option<Analytic>,
}

impl Context<'_> {
    fn observations(&self, d: usize) -> Result<Vector> {
        Ok(add_noise(&self.scn.clean, &NoiseSpec::Sigma(self.sigma_e), draw_seed(self.spec.seed, d))?.0)
    }

    fn draws(&self) -> usize {
        if self.sigma_e == 0.0 {
            1
        } else {
            self.spec.draws
        }
    }

    fn row(&self, fidelity: &str, prior: String, beta: f64, eps: f64, d: usize) -> SweepRow {
        SweepRow {
            scenario: self.spec.scenario.label().into(),
            fidelity: fidelity.into(),
            prior,
            beta,
            eps,
            sigma_e: self.sigma_e,
            seed: draw_seed(self.spec.seed, d),
            psnr_db: f64::NAN,
            mse: f64::NAN,
            bias_sq: None,
            variance: None,
            iters: None,
            wall_ms: None,
            error: None,
        }
    }

    fn finish(&self, mut row: SweepRow, started: Instant, outcome: Result<(Vector, usize)>) -> SweepRow {
        match outcome.and_then(|(x, iters)| Ok((mse(&x, &self.scn.truth)?, iters))) {
            Ok((err, iters)) => {
                row.mse = err;
                row.psnr_db = psnr_from_mse(err);
                row.iters = Some(iters);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        if self.spec.timing {
            row.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        row
    }

    fn baseline_rows(&self) -> Vec<SweepRow> {
        (0..self.draws())
            .map(|d| {
                let started = Instant::now();
                let row = self.row("bicubic", "none".into(), 0.0, 0.0, d);
                let outcome = self.observations(d).and_then(|y| Ok((self.scn.bicubic_baseline(&y)?, 0)));
                self.finish(row, started, outcome)
            })
            .collect()
    }

    fn cell_rows(&self, beta: f64, eps: f64, pinv: Option<&PseudoInverse>) -> Vec<SweepRow> {
        let label = self.spec.fidelity.label();
        let prior_label = self.spec.prior.label();
        let analytic = self.analytic.as_ref().map(|a| {
            let n = self.scn.shape.len() as f64;
            let breakdown = match self.spec.fidelity {
                FidelityChoice::Ls => mse_ls(&a.coeffs, &a.gamma_sq, beta, self.sigma_e),
                FidelityChoice::Bp => mse_bp(&a.coeffs, &a.gamma_sq, beta, self.sigma_e, eps),
            };
            breakdown.map(|b| (b.bias_sq / n, b.variance / n))
        });
        let setup = self.prepare(beta, pinv);
        (0..self.draws())
            .map(|d| {
                let started = Instant::now();
                let mut row = self.row(label, prior_label.clone(), beta, eps, d);
                if let Some(Ok((b, v))) = analytic {
                    row.bias_sq = Some(b);
                    row.variance = Some(v);
                }
                let outcome = match &setup {
                    Ok(setup) => self.observations(d).and_then(|y| self.solve(setup, &y, beta, pinv)),
                    Err(e) => Err(Error::InvalidArgument(e.to_string())),
                };
                self.finish(row, started, outcome)
            })
            .collect()
    }

    fn prepare(&self, beta: f64, pinv: Option<&PseudoInverse>) -> Result<Setup> {
        Ok(match (self.spec.solver, &self.spec.prior) {
            (SolverSpec::Closed | SolverSpec::Cg, PriorSpec::L2(kind)) => {
                let prior = l2_prior(*kind, self.scn);
                Setup::Tikhonov(match pinv {
                    Some(p) => TikhonovSolver::back_projection(p.clone(), beta, prior)?,
                    None => TikhonovSolver::least_squares(self.scn.op.clone(), beta, prior)?,
                })
            }
            (SolverSpec::Ista | SolverSpec::Fista, _) => Setup::Prox(prox_prior(self.spec, self.scn)?),
            (SolverSpec::Idbp, _) => {
                let delta = beta.sqrt() - self.sigma_e;
                if delta < 0.0 {
                    return Err(Error::InvalidArgument(format!("idbp needs sqrt(beta) >= sigma_e, got beta = {beta}")));
                }
                Setup::Idbp(denoiser_for(self.spec, self.scn)?, delta)
            }
            _ => return Err(Error::InvalidArgument("solver needs an l2 prior".into())),
        })
    }

    fn solve(&self, setup: &Setup, y: &Vector, beta: f64, pinv: Option<&PseudoInverse>) -> Result<(Vector, usize)> {
        match setup {
            Setup::Tikhonov(solver) if self.spec.solver == SolverSpec::Closed => Ok((solver.solve(y)?, 0)),
            Setup::Tikhonov(solver) => {
                let out = solver.cg(y, &Vector::zeros(self.scn.shape.len()), self.iters, 0.0)?;
                Ok((out.solution, out.iterations))
            }
            Setup::Prox(prior) => {
                let fid = match pinv {
                    Some(p) => FidelityTerm::back_projection_with(p.clone(), y.clone())?,
                    None => FidelityTerm::least_squares_with_lipschitz(
                        self.scn.op.clone(),
                        y.clone(),
                        self.lipschitz.expect("LS Lipschitz constant"),
                    )?,
                };
                let cfg = match self.spec.solver {
                    SolverSpec::Ista => ProxStepConfig::ista(beta, self.iters),
                    _ => ProxStepConfig::fista(beta, self.iters),
                };
                let x0 = self.scn.initial_guess(y)?;
                Ok((prox_gradient(&fid, prior.as_ref(), &cfg, &x0, None)?.solution, self.iters))
            }
            Setup::Idbp(denoiser, delta) => {
                let pinv = pinv.expect("idbp pseudo-inverse");
                let cfg = IdbpConfig { sigma_e: self.sigma_e, delta: *delta, iters: self.iters, eps: pinv.eps(), record_trace: false };
                let x0 = self.scn.initial_guess(y)?;
                Ok((idbp_with(pinv, y, denoiser, &cfg, &x0, None, |_, _| {})?.solution, self.iters))
            }
        }
    }
}

enum Setup {
    Tikhonov(TikhonovSolver),
    Prox(Box<dyn ProximalPrior>),
    Idbp(Denoiser, f64),
}

fn analytic_data(spec: &ExperimentSpec, scn: &Scenario) -> Option<Analytic> {
    let PriorSpec::L2(kind) = spec.prior else { return None };
    if spec.solver != SolverSpec::Closed {
        return None;
    }
    let decomposition = spectrum(&scn.op).ok()?;
    let gamma = gamma_from_prior(&l2_prior(kind, scn), &decomposition).ok()?;
    let coeffs = decomposition.coefficients(&scn.truth).ok()?;
    Some(Analytic { coeffs, gamma_sq: gamma.gamma_sq })
}

/// Runs every (β, ε, draw) cell of `spec`. Cells run in parallel and are
/// returned in (β, ε, draw) order; SR sweeps start with bicubic rows.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let scn = build_scenario(spec.scenario, &spec.image, spec.size, spec.seed)?;
    run_sweep_on(spec, &scn)
}

/// [`run_sweep`] on an already built scenario.
pub fn run_sweep_on(spec: &ExperimentSpec, scn: &Scenario) -> Result<SweepResult> {
    spec.validate()?;
    let sigma_e = spec.noise.resolve(&scn.clean);
    let needs_lipschitz = spec.fidelity == FidelityChoice::Ls && matches!(spec.solver, SolverSpec::Ista | SolverSpec::Fista);
    let ctx = Context {
        spec,
        scn,
        sigma_e,
        iters: spec.iterations(),
        lipschitz: if needs_lipschitz { Some(ls_lipschitz(&scn.op)?) } else { None },
        analytic: analytic_data(spec, scn),
    };
    let pinvs: Vec<(f64, Option<PseudoInverse>)> = spec
        .eps_grid(sigma_e)
        .into_iter()
        .map(|eps| match spec.fidelity {
            FidelityChoice::Ls => Ok((eps, None)),
            FidelityChoice::Bp => Ok((eps, Some(PseudoInverse::new(Arc::clone(&scn.op), eps)?))),
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(f64, f64, Option<&PseudoInverse>)> = spec
        .betas
        .iter()
        .flat_map(|&beta| pinvs.iter().map(move |(eps, p)| (beta, *eps, p.as_ref())))
        .collect();
    let mut rows = if spec.scenario == ScenarioKind::SrX3 { ctx.baseline_rows() } else { Vec::new() };
    let cell_rows: Vec<Vec<SweepRow>> = cells.par_iter().map(|&(beta, eps, pinv)| ctx.cell_rows(beta, eps, pinv)).collect();
    rows.extend(cell_rows.into_iter().flatten());
    Ok(SweepResult { rows, spec_hash: spec.hash(), seed: spec.seed })
}

/// Solves one (β, ε, draw) cell and returns the estimate with its row.
pub fn solve_cell(spec: &ExperimentSpec, scn: &Scenario, beta: f64, eps: f64, d: usize) -> Result<(Vector, SweepRow)> {
    spec.validate()?;
    let sigma_e = spec.noise.resolve(&scn.clean);
    let needs_lipschitz = spec.fidelity == FidelityChoice::Ls && matches!(spec.solver, SolverSpec::Ista | SolverSpec::Fista);
    let ctx = Context {
        spec,
        scn,
        sigma_e,
        iters: spec.iterations(),
        lipschitz: if needs_lipschitz { Some(ls_lipschitz(&scn.op)?) } else { None },
        analytic: None,
    };
    let pinv = match spec.fidelity {
        FidelityChoice::Ls => None,
        FidelityChoice::Bp => Some(PseudoInverse::new(Arc::clone(&scn.op), eps)?),
    };
    let started = Instant::now();
    let setup = ctx.prepare(beta, pinv.as_ref())?;
    let y = ctx.observations(d)?;
    let (x, iters) = ctx.solve(&setup, &y, beta, pinv.as_ref())?;
    let row = ctx.row(spec.fidelity.label(), spec.prior.label(), beta, if pinv.is_some() { eps } else { 0.0 }, d);
    let row = ctx.finish(row, started, Ok((x.clone(), iters)));
    Ok((x, row))
}
