//! `faithsim`: rate regions, protocol simulations and lemma checks from the shell.
//!
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 invariant
//! violation or failed check, 4 size cap exceeded.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use faithsim::experiment::{self, DistortionJson, Problem};
use faithsim::Error;
use serde::Serialize;

use config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "faithsim", version, about = "Faithful simulation of distributed quantum measurements")]
struct Cli {
    /// Command to run; `--command` is equivalent.
    #[arg(value_enum)]
    command: Option<Command>,
    #[arg(long = "command", value_enum, hide = true)]
    command_flag: Option<Command>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem file: {"rho_ab": .., "decomposition": ..}.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in problem (example1, binary-correlated, product, qubit-inside).
    #[arg(long)]
    fixture: Option<String>,
    /// Write results here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seeds, comma separated.
    #[arg(long = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Blocklengths, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    ns: Vec<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    rt1: Option<f64>,
    #[arg(long)]
    rt2: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    /// Common-randomness rate of side A (overridden by --n1).
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    /// Rate pairs for packing-sweep, as r1:r2 separated by commas.
    #[arg(long = "pairs", value_delimiter = ',', value_parser = parse_pair)]
    pairs: Vec<(f64, f64)>,
    /// Perturbation weight for covering-check.
    #[arg(long)]
    eps: Option<f64>,
    /// Distortion file for rd-eval: {"observable": .., "recon": {"(u,v)": ..}}.
    #[arg(long)]
    distortion: Option<PathBuf>,
    /// Skip the packing column of simulate/sweep.
    #[arg(long)]
    no_packing: bool,
    /// Record wall-clock time per row (breaks byte-identical reruns).
    #[arg(long)]
    timing: bool,
}

fn nonempty<T: Clone>(v: &[T]) -> Option<Vec<T>> {
    (!v.is_empty()).then(|| v.to_vec())
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected r1:r2, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((p(a)?, p(b)?))
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Invariant(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Cap(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Invariant(m) | Failure::Cap(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Input(e.to_string()),
            Error::CapExceeded { .. } => Failure::Cap(e.to_string()),
            other => Failure::Invariant(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

impl Cli {
    fn flags(&self) -> Result<RunConfig, Failure> {
        let command = match (self.command, self.command_flag) {
            (Some(a), Some(b)) if a != b => {
                return Err(Failure::Input("positional command and --command disagree".into()))
            }
            (a, b) => a.or(b),
        };
        Ok(RunConfig {
            command,
            input: self.input.clone(),
            fixture: self.fixture.clone(),
            output: self.output.clone(),
            seeds: nonempty(&self.seeds),
            ns: nonempty(&self.ns),
            eta: self.eta,
            delta: self.delta,
            tol: self.tol,
            rt1: self.rt1,
            rt2: self.rt2,
            r1: self.r1,
            r2: self.r2,
            grid: None,
            n1: self.n1,
            n2: self.n2,
            c1: self.c1,
            c2: self.c2,
            packing: self.no_packing.then_some(false),
            timing: self.timing.then_some(true),
            pairs: nonempty(&self.pairs),
            eps: self.eps,
            distortion: match &self.distortion {
                Some(p) => Some(parse_json::<DistortionJson>(p)?),
                None => None,
            },
        })
    }

    fn resolve(&self) -> Result<RunConfig, Failure> {
        let file = match &self.config {
            Some(p) => parse_json::<RunConfig>(p)?,
            None => RunConfig::default(),
        };
        Ok(file.overlay(self.flags()?))
    }
}

fn problem(cfg: &RunConfig) -> Result<Problem, Failure> {
    match (&cfg.input, &cfg.fixture) {
        (Some(_), Some(_)) => Err(Failure::Input("give either --input or --fixture, not both".into())),
        (Some(p), None) => Ok(Problem::from_json_str(&p.display().to_string(), &read(p)?).map_err(|e| {
            match e {
                Error::Parse(m) => Failure::Input(format!("{}: {m}", p.display())),
                other => other.into(),
            }
        })?),
        (None, f) => Ok(Problem::fixture(f.as_deref().unwrap_or("example1")).map_err(|e| Failure::Input(e.to_string()))?),
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s.into_bytes()
}

fn csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    experiment::write_csv(rows, &mut buf)?;
    Ok(buf)
}

/// Returns the bytes to emit and, for checks, whether they passed.
fn run(cfg: &RunConfig) -> Result<(Vec<u8>, Option<String>), Failure> {
    let cmd = cfg
        .command
        .ok_or_else(|| Failure::Input("no command given (try `faithsim region`)".into()))?;
    let p = problem(cfg)?;
    match cmd {
        Command::Region => Ok((json(&p.region()?), None)),
        Command::Simulate => Ok((csv(&experiment::simulate(&p, &cfg.simulate_config())?)?, None)),
        Command::Sweep => {
            if !cfg.has_grid() {
                return Err(Failure::Input("sweep needs a rate grid (`grid` in the config, or --rt1/--rt2/--r1/--r2)".into()));
            }
            Ok((csv(&experiment::simulate(&p, &cfg.simulate_config())?)?, None))
        }
        Command::FmCheck => {
            let c = p.fm_check()?;
            if c.equal {
                Ok((b"EQUAL\n".to_vec(), None))
            } else {
                let why = format!("projected system:\n{}\ndirect system:\n{}", c.projected, c.direct);
                Ok((b"NOT EQUAL\n".to_vec(), Some(why)))
            }
        }
        Command::CoveringCheck => {
            let sim = cfg.simulate_config();
            let rows = experiment::covering_check(&p, &sim.seeds, cfg.eps.unwrap_or(0.1), cfg.tol())?;
            let bad = rows.iter().filter(|r| !r.holds).count();
            let why = (bad > 0).then(|| format!("mutual covering failed for {bad} of {} seeds", rows.len()));
            Ok((csv(&rows)?, why))
        }
        Command::PackingSweep => {
            let sim = cfg.simulate_config();
            let pairs = cfg.pairs.clone().unwrap_or_else(|| vec![(0.25, 0.25), (0.75, 0.75)]);
            let rows = experiment::packing_sweep(&p, &sim.ns, &sim.seeds, &pairs, sim.delta)?;
            Ok((csv(&rows)?, None))
        }
        Command::RdEval => {
            let d = cfg
                .distortion
                .as_ref()
                .ok_or_else(|| Failure::Input("rd-eval needs --distortion or `distortion` in the config".into()))?;
            Ok((json(&experiment::rd_eval(&p, d)?), None))
        }
    }
}

fn emit(bytes: &[u8], output: Option<&Path>) -> io::Result<()> {
    match output {
        Some(path) => fs::write(path, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|cfg| {
        let (bytes, failed_check) = run(&cfg)?;
        emit(&bytes, cfg.output.as_deref())
            .map_err(|e| Failure::Input(format!("cannot write output: {e}")))?;
        match failed_check {
            Some(why) => Err(Failure::Invariant(why)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("faithsim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
