//! Command-line runner: named experiments, JSON configuration, seeded and reproducible output.

pub mod error;
pub mod experiments;
pub mod table;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{Map, Value};

use error::{CliError, CliResult};
use experiments::*;
use table::Provenance;

#[derive(Debug, Parser)]
#[command(name = "ontolab", version, about = "Deterministic automata and their quantum descriptions")]
pub struct Cli {
    /// JSON file {experiment, params, seed, out}; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for result files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "ONTOLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the experiment catalogue.
    List,
    /// Run the invariant batteries and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        suite: verify::Suite,
    },
    /// Run the experiment named in --config.
    Run,
    /// Hamiltonians from unitaries and their Fourier approximations.
    #[command(subcommand)]
    Hilbert(HilbertCmd),
    /// Cogwheel and permutation models.
    #[command(subcommand)]
    Cogwheel(CogwheelCmd),
    /// Spin-ℓ rotator and its beable basis.
    #[command(subcommand)]
    Rotator(RotatorCmd),
    /// Lattice (Q,P) basis of the continuum line.
    #[command(subcommand)]
    Pq(PqCmd),
    /// Hidden-variable model of photon pair correlations.
    #[command(subcommand)]
    Bell(BellCmd),
    /// Integer field automaton on a lattice.
    #[command(subcommand)]
    Lattice2d(Lattice2dCmd),
    /// Radial beables of a massless spinor.
    #[command(subcommand)]
    Neutrino(NeutrinoCmd),
    /// Integer Hamiltonian evolution along energy contours.
    #[command(subcommand)]
    Dham(DhamCmd),
    /// Commutator expansions and automaton Hamiltonian densities.
    #[command(subcommand)]
    Bch(BchCmd),
    /// Second-quantised permutations and Fock spectra.
    #[command(subcommand)]
    Fermi2q(Fermi2qCmd),
}

#[derive(Debug, Subcommand)]
pub enum HilbertCmd {
    OmegaCurves(OmegaCurvesArgs),
}

#[derive(Debug, Subcommand)]
pub enum CogwheelCmd {
    Spectrum(CogwheelSpectrumArgs),
    Clock(CogwheelClockArgs),
}

#[derive(Debug, Subcommand)]
pub enum RotatorCmd {
    Matrices(RotatorMatricesArgs),
}

#[derive(Debug, Subcommand)]
pub enum PqCmd {
    Wavelet(PqWaveletArgs),
    Edge(PqEdgeArgs),
}

#[derive(Debug, Subcommand)]
pub enum BellCmd {
    Chsh(BellChshArgs),
    Mousedrop(BellMousedropArgs),
}

#[derive(Debug, Subcommand)]
pub enum Lattice2dCmd {
    Run(Lattice2dRunArgs),
    Dispersion(Lattice2dDispersionArgs),
}

#[derive(Debug, Subcommand)]
pub enum NeutrinoCmd {
    Correlations(NeutrinoCorrelationsArgs),
}

#[derive(Debug, Subcommand)]
pub enum DhamCmd {
    Orbit(DhamOrbitArgs),
    Speed(DhamSpeedArgs),
}

#[derive(Debug, Subcommand)]
pub enum BchCmd {
    Compare(BchCompareArgs),
}

#[derive(Debug, Subcommand)]
pub enum Fermi2qCmd {
    Spectrum(Fermi2qSpectrumArgs),
}

impl Command {
    fn experiment(self) -> Option<ExperimentArgs> {
        use ExperimentArgs as E;
        Some(match self {
            Command::List | Command::Verify { .. } | Command::Run => return None,
            Command::Hilbert(HilbertCmd::OmegaCurves(a)) => E::OmegaCurves(a),
            Command::Cogwheel(CogwheelCmd::Spectrum(a)) => E::CogwheelSpectrum(a),
            Command::Cogwheel(CogwheelCmd::Clock(a)) => E::CogwheelClock(a),
            Command::Rotator(RotatorCmd::Matrices(a)) => E::RotatorMatrices(a),
            Command::Pq(PqCmd::Wavelet(a)) => E::PqWavelet(a),
            Command::Pq(PqCmd::Edge(a)) => E::PqEdge(a),
            Command::Bell(BellCmd::Chsh(a)) => E::BellChsh(a),
            Command::Bell(BellCmd::Mousedrop(a)) => E::BellMousedrop(a),
            Command::Lattice2d(Lattice2dCmd::Run(a)) => E::Lattice2dRun(a),
            Command::Lattice2d(Lattice2dCmd::Dispersion(a)) => E::Lattice2dDispersion(a),
            Command::Neutrino(NeutrinoCmd::Correlations(a)) => E::NeutrinoCorrelations(a),
            Command::Dham(DhamCmd::Orbit(a)) => E::DhamOrbit(a),
            Command::Dham(DhamCmd::Speed(a)) => E::DhamSpeed(a),
            Command::Bch(BchCmd::Compare(a)) => E::BchCompare(a),
            Command::Fermi2q(Fermi2qCmd::Spectrum(a)) => E::Fermi2qSpectrum(a),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let pool = match cli.threads {
        Some(0) => return Err(CliError::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let mut buffer = Vec::new();
    let code = pool.install(|| execute(cli, &mut buffer))?;
    stdout.write_all(&buffer)?;
    Ok(code)
}

fn execute(cli: Cli, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    match cli.command {
        Command::List => {
            for e in CATALOGUE {
                let kind = if e.stochastic { "seeded" } else { "exact" };
                writeln!(stdout, "{:<24} {:<7} {}", e.name, kind, e.description)?;
            }
            Ok(0)
        }
        Command::Verify { suite } => {
            let report = verify::run(suite);
            let text = serde_json::to_string_pretty(&report.to_json())? + "\n";
            emit(&text, "verify.json", cli.out.as_deref(), stdout)?;
            Ok(if report.passed { 0 } else { 3 })
        }
        command => {
            let args = match (command.experiment(), &config) {
                (Some(args), Some(c)) if c.experiment != args.name() => {
                    return Err(CliError::Config(format!("config is for {:?}, command runs {:?}", c.experiment, args.name())));
                }
                (Some(args), c) => args.overlay(c.as_ref().map(|c| &c.params))?,
                (None, Some(c)) => ExperimentArgs::from_params(&c.experiment, &c.params)?,
                (None, None) => return Err(CliError::Config("run needs --config".into())),
            }
            .with_defaults();
            let seed = cli.seed.or(config.as_ref().and_then(|c| c.seed));
            let out = cli.out.or(config.and_then(|c| c.out));
            let entry = CATALOGUE.iter().find(|e| e.name == args.name()).expect("every experiment is catalogued");
            if entry.stochastic && seed.is_none() {
                return Err(CliError::Config(format!("{} is stochastic and needs a seed", entry.name)));
            }
            let output = args.execute(seed)?;
            let provenance = Provenance {
                experiment: args.name().into(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed,
                params: args.params_json(),
            };
            let text = output.render(&provenance)?;
            emit(&text, &format!("{}.{}", args.name(), output.extension()), out.as_deref(), stdout)?;
            Ok(0)
        }
    }
}

fn emit(text: &str, file: &str, dir: Option<&Path>, stdout: &mut Vec<u8>) -> CliResult<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(file), text)?;
        }
        None => stdout.extend_from_slice(text.as_bytes()),
    }
    Ok(())
}
