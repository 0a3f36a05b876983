//! Command-line front end: simulation, structure learning, conditioning-set
//! discovery, effect estimation, benchmarks and graph queries.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aivip::{
    aivip_with_test, conditioning_set_mag, conditioning_set_pag, dag_to_mag, format_sig, generate,
    generate_with_latents, learn_pag, m_separated, roles_by_name, run_benchmark, tsls, tslsciv, two_stage,
    wald_estimate, BenchMethod, BenchmarkConfig, Dataset, EstimateResult, EstimatorSpec, FirstStage, FisherZ, Group,
    IvRoles, LearnerConfig, MixedGraph, ProjectionSpec, SepQuery, SimSpec, Variant,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "aivip", version, about = "Conditioning-set discovery and IV estimation with latent confounders")]
struct Cli {
    /// Significant digits for numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Learn a PAG from data.
    Learn(LearnArgs),
    /// Find the conditioning set for an instrument from a graph or from data.
    Discover(DiscoverArgs),
    /// Estimate the effect of the treatment on the outcome.
    Estimate(EstimateArgs),
    /// Mean bias over replicated synthetic datasets.
    Benchmark(BenchmarkArgs),
    /// Project a DAG with latent nodes onto a MAG.
    Project(ProjectArgs),
    /// Test m-separation (d-separation on DAGs).
    Msep(MsepArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_group)]
    group: Group,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_variant, default_value = "consistent")]
    variant: Variant,
    #[arg(long, default_value_t = 20)]
    noise_covariates: usize,
    #[arg(long, default_value_t = 0.2)]
    noise_correlation: f64,
    /// Append the latent columns.
    #[arg(long)]
    latents: bool,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct LearnerOpts {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Largest conditioning set tried.
    #[arg(long, default_value_t = 3, conflicts_with = "unbounded")]
    max_cond_size: usize,
    /// No bound on conditioning-set size.
    #[arg(long)]
    unbounded: bool,
    /// Run the Possible-D-SEP pruning stage.
    #[arg(long)]
    possible_dsep: bool,
    /// Orient only colliders supported by every separating set.
    #[arg(long)]
    conservative: bool,
}

impl LearnerOpts {
    fn config(&self) -> LearnerConfig {
        LearnerConfig {
            alpha: self.alpha,
            max_cond_size: if self.unbounded { None } else { Some(self.max_cond_size) },
            use_possible_dsep: self.possible_dsep,
            conservative_colliders: self.conservative,
        }
    }
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    learner: LearnerOpts,
    /// Output graph file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GraphInput {
    Mag,
    Pag,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["graph", "data"]))]
struct DiscoverArgs {
    /// MAG or PAG in graph text format.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Learn a PAG from this CSV first.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pag")]
    kind: GraphInput,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    iv: String,
    #[command(flatten)]
    learner: LearnerOpts,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EstimateMethod {
    Aivip,
    Tsls,
    Tslsciv,
    Wald,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FirstStageArg {
    Linear,
    Logistic,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    treatment: String,
    #[arg(long)]
    outcome: String,
    #[arg(long)]
    iv: String,
    /// Explicit conditioning set for the two-stage estimator.
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with = "method")]
    z: Option<Vec<String>>,
    #[arg(long, value_enum)]
    method: Option<EstimateMethod>,
    #[arg(long, value_enum, default_value = "linear")]
    first_stage: FirstStageArg,
    /// Columns of Z interacted with the fitted treatment.
    #[arg(long, value_delimiter = ',')]
    interactions: Vec<String>,
    #[command(flatten)]
    learner: LearnerOpts,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_group, default_value = "I,II")]
    groups: Vec<Group>,
    #[arg(long, value_delimiter = ',', default_value = "2000,5000,10000")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "aivip,tsls,tslsciv")]
    methods: Vec<BenchMethod>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_parser = parse_variant, default_value = "consistent")]
    variant: Variant,
    #[arg(long, default_value_t = 20)]
    noise_covariates: usize,
    #[command(flatten)]
    learner: LearnerOpts,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    /// DAG in graph text format.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    latent: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MsepArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    z: Vec<String>,
}

fn parse_group(s: &str) -> Result<Group, String> {
    s.parse().map_err(|e: aivip::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: aivip::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<BenchMethod, String> {
    s.parse().map_err(|e: aivip::Error| e.to_string())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create `{}`", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_data(path: &Path) -> Result<Dataset> {
    let f = File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
    Dataset::read_csv(f).with_context(|| format!("reading `{}`", path.display()))
}

fn read_graph(path: &Path) -> Result<MixedGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    MixedGraph::parse(&text).with_context(|| format!("parsing `{}`", path.display()))
}

fn learn_from_data(data: &Dataset, opts: &LearnerOpts) -> Result<MixedGraph> {
    let config = opts.config();
    let test = FisherZ::new(data, config.alpha)?;
    Ok(learn_pag(&test, &config)?)
}

fn simulate(args: &SimulateArgs, precision: usize) -> Result<()> {
    let spec = SimSpec {
        variant: args.variant,
        noise_covariates: args.noise_covariates,
        noise_correlation: args.noise_correlation,
        ..SimSpec::new(args.group, args.n, args.seed)
    };
    let data = if args.latents { generate_with_latents(&spec)? } else { generate(&spec)? };
    let mut out = output(args.out.as_deref())?;
    data.write_csv(&mut out, precision)?;
    out.flush()?;
    Ok(())
}

fn learn(args: &LearnArgs) -> Result<()> {
    let data = read_data(&args.data)?;
    let pag = learn_from_data(&data, &args.learner)?;
    let mut out = output(args.out.as_deref())?;
    write!(out, "{pag}")?;
    out.flush()?;
    Ok(())
}

fn discover(args: &DiscoverArgs) -> Result<()> {
    let (g, from_data) = match (&args.graph, &args.data) {
        (Some(p), _) => (read_graph(p)?, false),
        (None, Some(p)) => (learn_from_data(&read_data(p)?, &args.learner)?, true),
        (None, None) => unreachable!("clap enforces a source"),
    };
    let roles = IvRoles::by_name(&g, &args.treatment, &args.outcome, &args.iv)?;
    let z = if !from_data && args.kind == GraphInput::Mag {
        conditioning_set_mag(&g, &roles)?
    } else {
        conditioning_set_pag(&g, &roles)?
    };
    let mut out = io::stdout().lock();
    writeln!(out, "z={}", g.names_of(&z).join(","))?;
    if from_data {
        write!(out, "{g}")?;
    }
    Ok(())
}

fn print_estimate(r: &EstimateResult, precision: usize) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "method={}", r.method)?;
    writeln!(out, "beta_hat={}", format_sig(r.beta_hat, precision))?;
    writeln!(out, "z={}", r.z_used.join(","))?;
    writeln!(out, "sigma_sw={}", format_sig(r.sigma_sw, precision))?;
    if let Some(s) = r.sigma_sy {
        writeln!(out, "sigma_sy={}", format_sig(s, precision))?;
    }
    for c in &r.interaction_coefs {
        writeln!(out, "interaction_coef={}", format_sig(*c, precision))?;
    }
    Ok(())
}

fn estimate(args: &EstimateArgs, precision: usize) -> Result<()> {
    let data = read_data(&args.data)?;
    let roles = roles_by_name(&data, &args.treatment, &args.outcome, &args.iv)?;
    let interactions = args.interactions.iter().map(|s| data.index_of(s)).collect::<aivip::Result<Vec<_>>>()?;
    let spec = EstimatorSpec {
        first_stage: match args.first_stage {
            FirstStageArg::Linear => FirstStage::Linear,
            FirstStageArg::Logistic => FirstStage::Logistic,
        },
        interactions,
    };
    let r = match (&args.z, args.method.unwrap_or(EstimateMethod::Aivip)) {
        (Some(z), _) => {
            let z = z.iter().map(|s| data.index_of(s)).collect::<aivip::Result<Vec<_>>>()?;
            two_stage(&data, &roles, &z, &spec)?
        }
        (None, EstimateMethod::Aivip) => {
            let config = args.learner.config();
            let test = FisherZ::new(&data, config.alpha)?;
            aivip_with_test(&data, &roles, &test, &config, &spec)?.0
        }
        (None, EstimateMethod::Tsls) => tsls(&data, &roles)?,
        (None, EstimateMethod::Tslsciv) => tslsciv(&data, &roles)?,
        (None, EstimateMethod::Wald) => wald_estimate(&data, &roles)?,
    };
    print_estimate(&r, precision)
}

fn benchmark(args: &BenchmarkArgs, precision: usize) -> Result<()> {
    let config = BenchmarkConfig {
        variant: args.variant,
        noise_covariates: args.noise_covariates,
        learner: args.learner.config(),
        ..BenchmarkConfig::new(args.groups.clone(), args.sizes.clone(), args.methods.clone(), args.reps, args.seed)
    };
    let report = run_benchmark(&config)?;
    let mut out = output(args.out.as_deref())?;
    report.write_csv(&mut out, precision)?;
    out.flush()?;
    for row in &report.rows {
        for f in &row.failures {
            eprintln!("warning: group {} n={} {}: {f}", row.group, row.n, row.method);
        }
    }
    Ok(())
}

fn project(args: &ProjectArgs) -> Result<()> {
    let dag = read_graph(&args.graph)?;
    let latent: Vec<&str> = args.latent.iter().map(String::as_str).collect();
    let mag = dag_to_mag(&ProjectionSpec::new(dag, &latent)?);
    let mut out = output(args.out.as_deref())?;
    write!(out, "{mag}")?;
    out.flush()?;
    Ok(())
}

fn msep(args: &MsepArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let z: Vec<&str> = args.z.iter().map(String::as_str).collect();
    let q = SepQuery::by_name(&g, &args.x, &args.y, &z)?;
    let r = m_separated(&g, &q)?;
    let mut out = io::stdout().lock();
    writeln!(out, "separated={}", r.separated)?;
    if let Some(p) = &r.witness {
        writeln!(out, "witness={}", p.render(&g))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let p = cli.precision;
    match &cli.command {
        Command::Simulate(a) => simulate(a, p),
        Command::Learn(a) => learn(a),
        Command::Discover(a) => discover(a),
        Command::Estimate(a) => estimate(a, p),
        Command::Benchmark(a) => benchmark(a, p),
        Command::Project(a) => project(a),
        Command::Msep(a) => msep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
