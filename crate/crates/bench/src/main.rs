use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ctnet_core::bench::{self, MatrixConfig, RunConfig};
use ctnet_core::markov;
use ctnet_core::oracle::{max_sequence_len, Configuration, OptOracle};
use ctnet_core::report::{self, format_real, Format, RunReport};
use ctnet_core::{PolicyKind, WorkloadKind, WorkloadSpec};

#[derive(Parser)]
#[command(name = "ctnet-bench", version, about = "Simulate self-adjusting complete-tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve one workload with one policy.
    Run(RunArgs),
    /// Every combination of policies, workloads and sizes, over several seeds.
    Matrix(MatrixArgs),
    /// Random-Push mean depth and mean W per rank.
    DepthStats(DepthArgs),
    /// Exact checks on the depth chain.
    MarkovCheck(MarkovArgs),
    /// Compare online policies against the offline optimum on tiny trees.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum WorkloadName {
    Uniform,
    Zipf,
    Cyclic,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatName {
    Csv,
    Json,
}

impl From<FormatName> for Format {
    fn from(f: FormatName) -> Self {
        match f {
            FormatName::Csv => Format::Csv,
            FormatName::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct WorkloadArgs {
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Working-set size for the cyclic workload (default: n / 2).
    #[arg(long)]
    subset: Option<usize>,
    /// Trace file, one item id per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl WorkloadArgs {
    fn kind(&self, name: WorkloadName, n: usize) -> Result<WorkloadKind> {
        Ok(match name {
            WorkloadName::Uniform => WorkloadKind::Uniform,
            WorkloadName::Zipf => WorkloadKind::Zipf { alpha: self.alpha },
            WorkloadName::Cyclic => WorkloadKind::Cyclic {
                subset: self.subset.unwrap_or((n / 2).max(1)),
            },
            WorkloadName::Trace => WorkloadKind::Trace {
                path: self.trace.clone().context("--workload trace needs --trace <path>")?,
            },
        })
    }
}

#[derive(Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatName::Csv)]
    format: FormatName,
    /// Append to --out instead of overwriting it.
    #[arg(long)]
    append: bool,
}

impl Output {
    fn write(&self, reports: &[RunReport]) -> Result<()> {
        let format = self.format.into();
        match &self.out {
            Some(path) if self.append => report::append(reports, format, path)?,
            Some(path) => report::emit(reports, format, path)?,
            None => {
                let stdout = std::io::stdout().lock();
                match format {
                    Format::Csv => report::write_csv(stdout, reports, true)?,
                    Format::Json => report::write_json(stdout, reports)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_policy)]
    algo: PolicyKind,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = WorkloadName::Uniform)]
    workload: WorkloadName,
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    #[command(flatten)]
    workload_args: WorkloadArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Count requests after which the tree is not MRU.
    #[arg(long)]
    check_mru: bool,
    /// Also compute the offline optimum (n <= 7, short sequences only).
    #[arg(long)]
    oracle: bool,
    /// Include the mean depth per rank.
    #[arg(long)]
    depth_by_rank: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct MatrixArgs {
    /// Comma-separated policies (default: all).
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    algo: Vec<PolicyKind>,
    /// Comma-separated tree sizes.
    #[arg(long, value_delimiter = ',', default_value = "15,63,255")]
    n: Vec<usize>,
    /// Comma-separated workloads.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform,zipf,cyclic")]
    workload: Vec<WorkloadName>,
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    #[command(flatten)]
    workload_args: WorkloadArgs,
    /// Master seed; replicate r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of replicates.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    check_mru: bool,
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DepthArgs {
    #[arg(long, default_value_t = 255)]
    n: usize,
    #[arg(long, value_enum, default_value_t = WorkloadName::Uniform)]
    workload: WorkloadName,
    /// Requests per seed after warmup.
    #[arg(long, default_value_t = 6000)]
    m: usize,
    /// Requests per seed before sampling starts (default: 10 n).
    #[arg(long)]
    warmup: Option<usize>,
    #[command(flatten)]
    workload_args: WorkloadArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 24)]
    seeds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MarkovArgs {
    /// Comma-separated chain sizes.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64")]
    i: Vec<usize>,
    #[arg(long, default_value_t = 1024)]
    w_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 7)]
    n: usize,
    /// Sequence length.
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random sequences.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> std::result::Result<PolicyKind, String> {
    s.parse().map_err(|e: ctnet_core::Error| e.to_string())
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let kind = a.workload_args.kind(a.workload, a.n)?;
    let config = RunConfig {
        policy: a.algo,
        workload: WorkloadSpec {
            kind,
            n: a.n,
            m: a.m,
            seed: a.seed,
        },
        check_mru: a.check_mru,
        oracle: a.oracle,
        depth_by_rank: a.depth_by_rank,
    };
    let r = bench::run(&config)?;
    a.output.write(&[r])
}

fn cmd_matrix(a: MatrixArgs) -> Result<()> {
    let policies = if a.algo.is_empty() {
        PolicyKind::ALL.to_vec()
    } else {
        a.algo
    };
    let mut reports = Vec::new();
    for &n in &a.n {
        let kinds = a
            .workload
            .iter()
            .map(|&w| a.workload_args.kind(w, n))
            .collect::<Result<Vec<_>>>()?;
        let config = MatrixConfig {
            policies: policies.clone(),
            workloads: kinds,
            sizes: vec![n],
            m: a.m,
            master_seed: a.seed,
            seeds: a.seeds,
            check_mru: a.check_mru,
            oracle: a.oracle,
        };
        reports.extend(bench::run_matrix(&config)?);
    }
    a.output.write(&reports)
}

fn cmd_depth_stats(a: DepthArgs) -> Result<()> {
    let kind = a.workload_args.kind(a.workload, a.n)?;
    let warmup = a.warmup.unwrap_or(10 * a.n);
    let seeds: Vec<u64> = (0..a.seeds as u64).map(|r| a.seed.wrapping_add(r)).collect();
    let stats = bench::depth_stats(&kind, a.n, a.m, warmup, &seeds)?;
    let mut out = sink(&a.out)?;
    writeln!(out, "rank,depth_samples,mean_depth,depth_bound,w_samples,mean_w,w_bound")?;
    for r in 1..=stats.max_rank() {
        let cell = |x: Option<f64>| x.map(format_real).unwrap_or_default();
        writeln!(
            out,
            "{r},{},{},{},{},{},{}",
            stats.depth_count[r],
            cell(stats.mean_depth(r)),
            format_real((r as f64).log2() + 3.0),
            stats.w_count[r],
            cell(stats.mean_w(r)),
            2 * r - 1
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_markov_check(a: MarkovArgs) -> Result<()> {
    if a.w_max < 2 {
        bail!("--w-max must be at least 2");
    }
    let mut out = sink(&a.out)?;
    writeln!(out, "i,max_expected_minus_bound,concave")?;
    let mut ok = true;
    for &i in &a.i {
        if i == 0 {
            bail!("chain sizes must be positive");
        }
        let e = markov::expected_states(i, a.w_max);
        let worst = (2..=a.w_max)
            .map(|w| e[w] - markov::expected_state_bound(w))
            .fold(f64::NEG_INFINITY, f64::max);
        let concave = markov::concavity_check(i, a.w_max);
        ok &= worst < 0.0 && concave;
        writeln!(out, "{i},{},{concave}", format_real(worst))?;
    }
    let worst_binomial = (1..=50)
        .map(|w| (markov::binomial_identity(w) - 1.0).abs())
        .fold(0.0, f64::max);
    ok &= worst_binomial < 1e-9;
    writeln!(out, "# binomial identity max error over w <= 50: {}", format_real(worst_binomial))?;
    out.flush()?;
    if !ok {
        bail!("a chain check failed");
    }
    Ok(())
}

fn cmd_oracle_check(a: OracleArgs) -> Result<()> {
    let limit = max_sequence_len(a.n).with_context(|| format!("the offline oracle supports n in {{1, 3, 7}}, got {}", a.n))?;
    if a.m > limit {
        bail!("sequences longer than {limit} are refused for n = {}", a.n);
    }
    let oracle = OptOracle::new(a.n)?;
    let online = [PolicyKind::MoveHalf, PolicyKind::RandomPush, PolicyKind::MaxPush, PolicyKind::Fixed];
    let mut out = sink(&a.out)?;
    write!(out, "seed,sequence,ws_bound,opt_cost")?;
    for p in online {
        write!(out, ",{p}")?;
    }
    writeln!(out)?;
    for r in 0..a.seeds as u64 {
        let seed = a.seed.wrapping_add(r);
        let spec = WorkloadSpec::uniform(a.n, a.m, seed);
        let seq = ctnet_core::workloads::generate(&spec)?;
        let init = Configuration::identity(a.n)?;
        let opt = oracle.opt_cost(&seq.items, &init)?;
        let mut costs = Vec::new();
        let mut ws = 0.0;
        for p in online {
            let mut policy = bench::make_policy(p, a.n, &seq.items, seed)?;
            let sim = bench::simulate(&mut policy, a.n, &seq.items, false)?;
            if sim.net.ledger.total() < opt {
                bail!("{p} beat the offline optimum on seed {seed}");
            }
            ws = sim.net.ws.total;
            costs.push(sim.net.ledger.total());
        }
        let ids: Vec<String> = seq.items.iter().map(ToString::to_string).collect();
        write!(out, "{seed},{},{},{opt}", ids.join(" "), format_real(ws))?;
        for c in costs {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::DepthStats(a) => cmd_depth_stats(a),
        Command::MarkovCheck(a) => cmd_markov_check(a),
        Command::OracleCheck(a) => cmd_oracle_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
