//! Thin command-line adapter over the pcorder library. Every subcommand
//! prints the underlying module serialization unchanged; exit codes are
//! 0 for success, 1 for usage errors, 2 for domain errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pcorder::engine::{chain_compare, compare_auto, Query, Relation, Rho2};
use pcorder::gaussian::CovarianceMatrix;
use pcorder::graph::MixedGraph;
use pcorder::polytree::{locate_junction, modsel_classify, parse_probes};
use pcorder::separation::{d_separated, m_separated, ug_separated};
use pcorder::tree::completeness_witness;
use pcorder::verify::{chain_profile, linear_grid, monte_carlo_check, sweep, Claim};

#[derive(Parser)]
#[command(
    name = "pcorder",
    version,
    about = "Qualitative orderings of squared partial correlations on graphical Markov models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the structural class of a graph file
    Classify(ClassifyArgs),
    /// Decide graphical separation between two vertex sets
    Separate(SeparateArgs),
    /// Evaluate rho2 from a covariance CSV
    Pcor(PcorArgs),
    /// Compare rho2 quantities, auto-selecting the theorem that applies
    Compare(CompareArgs),
    /// Order rho2(a,c|Z1) against rho2(a,c|Z2) on a tree
    Chain(ChainArgs),
    /// Emit two covariance witnesses realizing both strict orders
    Witness(WitnessArgs),
    /// Classify whether adding z raises or lowers rho2(a,c|b)
    Modsel(ModselArgs),
    /// Locate the junction segment of a hidden branch from probe signs
    Locate(LocateArgs),
    /// Monte Carlo check of a claimed ordering
    Mc(McArgs),
    /// Sweep one parameter and tabulate rho2 queries as CSV
    Sweep(SweepArgs),
    /// Two-sided chain profile as CSV
    Profile(ProfileArgs),
}

/// A graph given either as a positional path or via --graph.
#[derive(Args)]
struct GraphSource {
    #[arg(value_name = "GRAPH")]
    path: Option<PathBuf>,
    #[arg(long = "graph", value_name = "FILE", conflicts_with = "path")]
    flag: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    graph: GraphSource,
}

#[derive(Args)]
struct SeparateArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a", value_delimiter = ',', required = true)]
    a: Vec<String>,
    #[arg(long = "c", value_delimiter = ',', required = true)]
    c: Vec<String>,
    #[arg(long = "z", value_delimiter = ',')]
    z: Vec<String>,
}

#[derive(Args)]
struct PcorArgs {
    #[arg(long = "cov", value_name = "FILE")]
    cov: PathBuf,
    #[arg(value_name = "A")]
    a: String,
    #[arg(value_name = "C")]
    c: String,
    #[arg(long = "given", value_delimiter = ',')]
    given: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "c")]
    c: String,
    #[arg(long = "x")]
    x: Option<String>,
    #[arg(long = "B", value_delimiter = ',')]
    b: Vec<String>,
    #[arg(long = "z")]
    z: String,
    #[arg(long = "zprime")]
    zprime: Option<String>,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "c")]
    c: String,
    #[arg(long = "Z1", value_delimiter = ',')]
    z1: Vec<String>,
    #[arg(long = "Z2", value_delimiter = ',')]
    z2: Vec<String>,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "c")]
    c: String,
    #[arg(long = "Z1", value_delimiter = ',', required = true)]
    z1: Vec<String>,
    #[arg(long = "Z2", value_delimiter = ',', required = true)]
    z2: Vec<String>,
}

#[derive(Args)]
struct ModselArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "c")]
    c: String,
    #[arg(long = "b")]
    b: String,
    #[arg(long = "z")]
    z: String,
}

#[derive(Args)]
struct LocateArgs {
    #[command(flatten)]
    graph: GraphSource,
    /// CSV of probe rows `vertex,sign` with sign in {+,-,0}
    #[arg(value_name = "PROBES")]
    probes: Option<PathBuf>,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "b")]
    b: String,
}

#[derive(Copy, Clone, ValueEnum)]
enum RelArg {
    Le,
    Ge,
    Eq,
}

impl From<RelArg> for Relation {
    fn from(r: RelArg) -> Relation {
        match r {
            RelArg::Le => Relation::Le,
            RelArg::Ge => Relation::Ge,
            RelArg::Eq => Relation::Eq,
        }
    }
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    graph: GraphSource,
    #[arg(long = "a")]
    a: String,
    #[arg(long = "c")]
    c: String,
    #[arg(long = "Z1", value_delimiter = ',')]
    z1: Vec<String>,
    #[arg(long = "Z2", value_delimiter = ',')]
    z2: Vec<String>,
    #[arg(long = "rel", value_enum, default_value = "le")]
    rel: RelArg,
    #[arg(long = "trials", default_value_t = 1000)]
    trials: u32,
    /// Seed for the parameter sampler; required so runs are reproducible
    #[arg(long = "seed")]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphSource,
    /// Edge coefficient as `tail->head`, or a vertex label for its noise
    /// variance
    #[arg(long = "param")]
    param: String,
    /// Grid as LO:HI:N; defaults to -2:2:41 for coefficients and
    /// 0.1:4:41 for noise variances
    #[arg(long = "grid", value_name = "LO:HI:N", allow_hyphen_values = true)]
    grid: Option<String>,
    /// Query `a,c|z1,z2` (conditionates optional); repeatable
    #[arg(long = "query", required = true)]
    queries: Vec<String>,
    /// Accepted for interface parity with mc; sweeps are deterministic
    #[arg(long = "seed")]
    _seed: u64,
    #[arg(long = "out", value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(value_name = "N_LEFT")]
    n_left: usize,
    #[arg(value_name = "N_RIGHT")]
    n_right: usize,
    #[arg(long = "out", value_name = "FILE")]
    out: Option<PathBuf>,
}

enum AppError {
    Usage(String),
    Domain(String),
}

impl From<pcorder::Error> for AppError {
    fn from(err: pcorder::Error) -> AppError {
        AppError::Domain(err.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

impl GraphSource {
    fn load(&self) -> Result<MixedGraph, AppError> {
        let path = self
            .path
            .as_ref()
            .or(self.flag.as_ref())
            .ok_or_else(|| AppError::Usage("missing graph file (positional or --graph)".into()))?;
        let text = read(path)?;
        Ok(MixedGraph::parse(&text)?)
    }
}

fn read(path: &PathBuf) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|err| AppError::Domain(format!("{}: {err}", path.display())))
}

fn to_set(labels: &[String]) -> BTreeSet<String> {
    labels.iter().cloned().collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>, AppError> {
    let bad = || AppError::Usage(format!("grid must be LO:HI:N, got {text}"));
    let mut parts = text.split(':');
    let (lo, hi, n) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(lo), Some(hi), Some(n), None) => (lo, hi, n),
        _ => return Err(bad()),
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok(linear_grid(lo, hi, n))
}

fn parse_query(text: &str) -> Result<Rho2, AppError> {
    let bad = || AppError::Usage(format!("query must be a,c|z1,z2 with optional conditionates, got {text}"));
    let (correlates, given) = match text.split_once('|') {
        Some((l, r)) => (l, r),
        None => (text, ""),
    };
    let pair: Vec<&str> = correlates.split(',').map(str::trim).collect();
    let [a, c] = pair.as_slice() else {
        return Err(bad());
    };
    if a.is_empty() || c.is_empty() {
        return Err(bad());
    }
    let given: BTreeSet<String> = given
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    Ok(Rho2::new(a, c, given))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), AppError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|err| AppError::Domain(format!("{}: {err}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::Classify(args) => {
            println!("{}", args.graph.load()?.classify());
        }
        Command::Separate(args) => {
            let g = args.graph.load()?;
            let (a, c, z) = (to_set(&args.a), to_set(&args.c), to_set(&args.z));
            let class = g.classify();
            let separated = if class.is_undirected() {
                ug_separated(&g, &a, &c, &z)?
            } else if g.is_dag_structure() {
                d_separated(&g, &a, &c, &z)?
            } else {
                m_separated(&g, &a, &c, &z)?
            };
            println!("{separated}");
        }
        Command::Pcor(args) => {
            let s = CovarianceMatrix::from_csv(&read(&args.cov)?)?;
            let value = s.partial_correlation_sq(&args.a, &args.c, &to_set(&args.given))?;
            println!("{value:?}");
        }
        Command::Compare(args) => {
            let g = args.graph.load()?;
            let verdict = compare_auto(
                &g,
                &args.a,
                &args.c,
                args.x.as_deref(),
                &to_set(&args.b),
                &args.z,
                args.zprime.as_deref(),
            )?;
            print!("{}", verdict.to_report());
        }
        Command::Chain(args) => {
            let g = args.graph.load()?;
            let query = Query::new(&args.a, &args.c, to_set(&args.z1), to_set(&args.z2))?;
            print!("{}", chain_compare(&g, &query)?.to_report());
        }
        Command::Witness(args) => {
            let g = args.graph.load()?;
            let (s1, s2) =
                completeness_witness(&g, &args.a, &args.c, &to_set(&args.z1), &to_set(&args.z2))?;
            print!("{}\n{}", s1.to_csv(), s2.to_csv());
        }
        Command::Modsel(args) => {
            let g = args.graph.load()?;
            println!("{}", modsel_classify(&g, &args.a, &args.c, &args.b, &args.z)?);
        }
        Command::Locate(args) => {
            let g = args.graph.load()?;
            let path = args
                .probes
                .as_ref()
                .ok_or_else(|| AppError::Usage("missing probes file".into()))?;
            let probes = parse_probes(&read(path)?)?;
            println!("{}", locate_junction(&g, &probes, &args.a, &args.b)?);
        }
        Command::Mc(args) => {
            let g = args.graph.load()?;
            let claim = Claim::new(
                Rho2::new(&args.a, &args.c, to_set(&args.z1)),
                Rho2::new(&args.a, &args.c, to_set(&args.z2)),
                args.rel.into(),
            )?;
            println!("{}", monte_carlo_check(&g, &claim, args.trials, args.seed)?);
        }
        Command::Sweep(args) => {
            let g = args.graph.load()?;
            let grid = match &args.grid {
                Some(text) => parse_grid(text)?,
                None if args.param.contains("->") => linear_grid(-2.0, 2.0, 41),
                None => linear_grid(0.1, 4.0, 41),
            };
            let queries: Vec<Rho2> = args
                .queries
                .iter()
                .map(|q| parse_query(q))
                .collect::<Result<_, _>>()?;
            let table = sweep(&g, &args.param, &grid, &queries)?;
            emit(args.out.as_ref(), &table.to_csv())?;
        }
        Command::Profile(args) => {
            let table = chain_profile(args.n_left, args.n_right)?;
            emit(args.out.as_ref(), &table.to_csv())?;
        }
    }
    Ok(())
}
