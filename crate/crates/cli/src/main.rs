//! `fluxring` command-line front end.

mod angle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fluxring::analysis::{
    limit_trace, lowest_sector, partition_curve, scan_flux, spiral_state, thermal_scan,
    verify_block_lemma, verify_doubling, verify_even, verify_odd, verify_relation,
    verify_singlet, ThermalOptions, VerificationReport, DEFAULT_GRID,
};
use fluxring::basis::{decompose_blocks, Sector, SectorBasis};
use fluxring::fixtures::{self, DEFAULT_SEED};
use fluxring::model::{Interaction, ModelSpec};
use fluxring::operators::{build_hamiltonian, build_total_spin};
use fluxring::spectra::{format_significant, ground, GroundOptions, Solver};

use crate::angle::parse_angle;

#[derive(Parser)]
#[command(name = "fluxring", version, about = "Hubbard rings threaded by a magnetic flux")]
struct Cli {
    /// Worker threads for grid scans (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground energy, degeneracy, gap and spin content of one sector.
    Spectrum(SpectrumArgs),
    /// Ground energy over a uniform flux grid, as CSV.
    Scan(ScanArgs),
    /// Necklace blocks of the hard-core sector, as JSON.
    Blocks(BlocksArgs),
    /// Runs a verifier and exits 0 on pass, 1 on fail.
    Verify(VerifyArgs),
    /// Log partition function over a flux grid, as CSV.
    Thermo(ThermoArgs),
    /// Writes a model file.
    GenFixture(FixtureArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Override the flux; radians or a multiple of pi such as `1/2pi`.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Treat the model as hard-core (`U = inf`).
    #[arg(long)]
    hardcore: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<ModelSpec> {
        let text = fs::read_to_string(&self.model)
            .with_context(|| format!("reading {}", self.model.display()))?;
        let mut spec = ModelSpec::from_json(&text)
            .with_context(|| format!("in model file {}", self.model.display()))?;
        if self.hardcore {
            spec = spec.with_interaction(Interaction::HardCore)?;
        }
        if let Some(phi) = self.phi {
            spec = spec.with_flux(phi);
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct SectorArgs {
    /// Up-spin count (default: the lowest `S_z >= 0` sector).
    #[arg(long, requires = "ndown")]
    nup: Option<usize>,
    /// Down-spin count.
    #[arg(long, requires = "nup")]
    ndown: Option<usize>,
}

impl SectorArgs {
    fn resolve(&self, spec: &ModelSpec) -> Result<Sector> {
        match (self.nup, self.ndown) {
            (Some(up), Some(down)) => {
                if up + down != spec.particles() {
                    bail!(
                        "--nup {up} --ndown {down} do not add up to the model's N = {}",
                        spec.particles()
                    );
                }
                Ok(Sector::new(up, down))
            }
            _ => Ok(lowest_sector(spec.particles())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverChoice {
    Auto,
    Dense,
    Lanczos,
}

impl From<SolverChoice> for Solver {
    fn from(s: SolverChoice) -> Self {
        match s {
            SolverChoice::Auto => Solver::Auto,
            SolverChoice::Dense => Solver::Dense,
            SolverChoice::Lanczos => Solver::Lanczos,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "auto")]
    solver: SolverChoice,
    /// Shorthand for `--solver dense`.
    #[arg(long, conflicts_with_all = ["lanczos", "solver"])]
    dense: bool,
    /// Shorthand for `--solver lanczos`.
    #[arg(long, conflicts_with = "solver")]
    lanczos: bool,
}

impl SolverArgs {
    fn solver(&self) -> Solver {
        if self.dense {
            Solver::Dense
        } else if self.lanczos {
            Solver::Lanczos
        } else {
            self.solver.into()
        }
    }
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sector: SectorArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write the Hamiltonian as `row col re im` lines.
    #[arg(long, value_name = "PATH")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sector: SectorArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BlocksArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sector: SectorArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Claim {
    Even,
    Odd,
    Doubling,
    Singlet,
    Relation,
    Spiral,
    Blocks,
    Thermo,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    claim: Claim,
    #[command(flatten)]
    model: ModelArgs,
    /// Also verify this many copies of the model with redrawn hopping
    /// magnitudes.
    #[arg(long, default_value_t = 0)]
    seeds: u64,
    /// Base seed for the redrawn copies.
    #[arg(long, env = "FLUXRING_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Flux grid (default: 90 for `blocks`, 720 otherwise).
    #[arg(long)]
    grid: Option<usize>,
    /// Inverse temperatures for `thermo`.
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// For `spiral`: follow the finite-U ground state towards the hard-core
    /// limit at U = 10, 100, 1000, 10000.
    #[arg(long)]
    trace_limit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThermoArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sector: SectorArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    beta: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Uniform,
    RandomHop,
    Remark5,
    Extended,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(value_enum)]
    name: Fixture,
    /// Ring length (ignored by `remark5`).
    #[arg(long, short = 'L', default_value_t = 4)]
    sites: usize,
    /// Particle number (ignored by `remark5`).
    #[arg(long, short = 'N', default_value_t = 2)]
    particles: usize,
    #[arg(long, env = "FLUXRING_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Strong-bond amplitude of `remark5`.
    #[arg(long, default_value_t = 50.0)]
    t: f64,
    /// On-site interaction: a number or `inf`.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<String>,
    /// Flux, placed on the last bond.
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn spectrum(args: &SpectrumArgs) -> Result<()> {
    let spec = args.model.load()?;
    let basis = SectorBasis::for_model(&spec, args.sector.resolve(&spec)?)?;
    let h = build_hamiltonian(&spec, &basis)?;
    if let Some(path) = &args.dump_matrix {
        fs::write(path, h.to_coordinate_text())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let opts = GroundOptions {
        solver: args.solver.solver(),
        ..GroundOptions::default()
    };
    let mut info = ground(&h, &opts)?;
    info.resolve_spin(&build_total_spin(&basis))?;
    emit(None, &with_newline(serde_json::to_string_pretty(&info)?))
}

fn scan(args: &ScanArgs) -> Result<()> {
    let spec = args.model.load()?;
    let sector = args.sector.resolve(&spec)?;
    let curve = scan_flux(&spec, sector, args.grid, args.solver.solver())?;
    emit(args.out.as_deref(), &curve.to_csv("phi,energy"))
}

fn blocks(args: &BlocksArgs) -> Result<()> {
    let spec = args.model.load()?;
    if !spec.is_hardcore() {
        bail!("blocks are defined for hard-core models; pass --hardcore or use U = \"inf\"");
    }
    let sector = match (args.sector.nup, args.sector.ndown) {
        (Some(_), Some(_)) => args.sector.resolve(&spec)?,
        _ => Sector::balanced(spec.particles()),
    };
    let basis = SectorBasis::for_model(&spec, sector)?;
    let rows: Vec<serde_json::Value> = decompose_blocks(&basis, &spec)?
        .iter()
        .map(|b| {
            serde_json::json!({
                "period": b.period,
                "dimension": b.dim(),
                "representative": b.representative.to_string(),
            })
        })
        .collect();
    emit(None, &with_newline(serde_json::to_string_pretty(&rows)?))
}

/// The model itself followed by `count` copies with redrawn magnitudes.
fn instances(spec: &ModelSpec, count: u64, seed: u64) -> Result<Vec<ModelSpec>> {
    let mut out = vec![spec.clone()];
    for k in 0..count {
        let drawn = fixtures::random_hop(spec.sites(), spec.particles(), seed.wrapping_add(k))?;
        out.push(spec.with_magnitudes(&drawn.magnitudes())?);
    }
    Ok(out)
}

fn verify_one(claim: Claim, spec: &ModelSpec, args: &VerifyArgs) -> Result<VerificationReport> {
    let grid = args.grid.unwrap_or(match claim {
        Claim::Blocks => 90,
        _ => DEFAULT_GRID,
    });
    let report = match claim {
        Claim::Even => verify_even(spec, grid)?,
        Claim::Odd => verify_odd(spec, grid)?,
        Claim::Doubling => verify_doubling(spec, grid)?,
        Claim::Singlet => verify_singlet(spec)?,
        Claim::Relation => verify_relation(spec)?,
        Claim::Spiral => {
            let (_, mut report) = spiral_state(spec)?;
            if args.trace_limit {
                let trace = limit_trace(spec, &[10.0, 100.0, 1000.0, 10000.0])?;
                for (k, v) in trace.observations {
                    report.observe(format!("limit: {k}"), v);
                }
            }
            report
        }
        Claim::Blocks => verify_block_lemma(spec, grid)?,
        Claim::Thermo => {
            let mut opts = ThermalOptions {
                grid,
                ..ThermalOptions::default()
            };
            if !args.beta.is_empty() {
                opts.betas = args.beta.clone();
            }
            thermal_scan(spec, &opts)?
        }
    };
    Ok(report)
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let spec = args.model.load()?;
    let mut reports = instances(&spec, args.seeds, args.seed)?
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut r = verify_one(args.claim, s, args)?;
            if k > 0 {
                r.instance = format!("{} (magnitudes seed {})", r.instance, args.seed + k as u64 - 1);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let report = if reports.len() == 1 {
        reports.remove(0)
    } else {
        let claim = reports[0].claim.clone();
        let instance = format!("{} and {} redrawn copies", reports[0].instance, args.seeds);
        VerificationReport::combine(claim, instance, reports)
    };
    emit(args.out.as_deref(), &with_newline(report.to_json()))?;
    for failure in report.failures() {
        eprintln!(
            "failed: {} (measured {}, tolerance {})",
            failure.name, failure.measured, failure.tolerance
        );
    }
    Ok(report.passed)
}

fn thermo(args: &ThermoArgs) -> Result<()> {
    let spec = args.model.load()?;
    let sector = args.sector.resolve(&spec)?;
    let curves = args
        .beta
        .iter()
        .map(|&b| partition_curve(&spec, sector, b, args.grid))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("phi,beta,log_partition\n");
    for (beta, curve) in args.beta.iter().zip(&curves) {
        for (phi, v) in curve.grid.iter().zip(&curve.values) {
            out.push_str(&format!(
                "{},{},{}\n",
                format_significant(*phi, 12),
                format_significant(*beta, 12),
                format_significant(*v, 12)
            ));
        }
    }
    emit(args.out.as_deref(), &out)
}

fn parse_interaction(text: &str, sites: usize) -> Result<Interaction> {
    if matches!(text.to_ascii_lowercase().as_str(), "inf" | "infinity") {
        return Ok(Interaction::HardCore);
    }
    let u: f64 = text
        .parse()
        .map_err(|_| anyhow!("--u expects a number or `inf`, got `{text}`"))?;
    Ok(Interaction::Finite(vec![u; sites]))
}

fn gen_fixture(args: &FixtureArgs) -> Result<()> {
    let (l, n) = (args.sites, args.particles);
    let mut spec = match args.name {
        Fixture::Uniform => fixtures::uniform(l, n)?,
        Fixture::RandomHop => fixtures::random_hop(l, n, args.seed)?,
        Fixture::Remark5 => fixtures::remark5(args.t)?,
        Fixture::Extended => fixtures::extended(l, n, args.seed)?,
    };
    if let Some(u) = &args.u {
        spec = spec.with_interaction(parse_interaction(u, spec.sites())?)?;
    }
    if let Some(phi) = args.phi {
        spec = spec.with_flux(phi);
    }
    emit(args.out.as_deref(), &with_newline(spec.to_json()))
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Spectrum(a) => spectrum(a)?,
        Command::Scan(a) => scan(a)?,
        Command::Blocks(a) => blocks(a)?,
        Command::Verify(a) => return verify(a),
        Command::Thermo(a) => thermo(a)?,
        Command::GenFixture(a) => gen_fixture(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
