//! `mechalign`: simulate playtraces, chart mechanic alignment and classify playstyles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;

use mechalign::arena::{builtin_level, run_batch_with, AgentPersona, GameKind};
use mechalign::report::{
    build_profiles, classify, read_profiles, render_svg, unknown_agent_id, write_csv,
    write_profiles, ChartStyle, Metric, ReportError,
};
use mechalign::{
    compute_chart, ChartOptions, Condition, Corpus, EstimationError, Outcome, TraceError,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  I/O or parse failure
  2  invalid arguments
  3  no winning traces (pass --no-win-fallback to chart anyway)
  4  unknown agent id collides with a reference agent";

#[derive(Debug, Parser)]
#[command(name = "mechalign", version, about, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play scripted personas on a built-in level and write a trace log.
    #[command(after_help = EXIT_CODES)]
    Simulate(SimulateArgs),
    /// Compute the alignment chart of a trace log and write CSV (and SVG).
    #[command(after_help = EXIT_CODES)]
    Analyze(AnalyzeArgs),
    /// Write one playstyle profile per agent of a trace log.
    #[command(after_help = EXIT_CODES)]
    Profiles(ProfilesArgs),
    /// Rank profiles by distance to the playstyle of unknown traces.
    #[command(after_help = EXIT_CODES)]
    Classify(ClassifyArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// keyquest, buttergrid or pelletmaze.
    #[arg(long)]
    game: GameKind,
    /// Comma-separated personas.
    #[arg(long, value_delimiter = ',', required = true)]
    agents: Vec<AgentPersona>,
    /// Episodes per persona.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace log to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Comma-separated agents to chart (default: every agent).
    #[arg(long, value_delimiter = ',')]
    agents: Option<Vec<String>>,
    /// Score systemic rewards as 0 when no trace is a win.
    #[arg(long)]
    no_win_fallback: bool,
}

#[derive(Debug, Args)]
struct ProfilesArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    profiles: PathBuf,
    /// Trace log the profiles were built from.
    #[arg(long)]
    reference: PathBuf,
    /// Trace log of a single agent not present in the reference.
    #[arg(long)]
    unknown: PathBuf,
    #[arg(long, default_value = "l1")]
    metric: Metric,
}

/// A flag combination that can only be rejected after parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        let estimation = cause.downcast_ref::<EstimationError>().or_else(|| {
            match cause.downcast_ref::<ReportError>() {
                Some(ReportError::Estimation(e)) => Some(e),
                _ => None,
            }
        });
        if let Some(EstimationError::EmptyCondition(_)) = estimation {
            return 3;
        }
        if let Some(ReportError::AgentCollision(_)) = cause.downcast_ref::<ReportError>() {
            return 4;
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Profiles(args) => profiles(args),
        Command::Classify(args) => classify_cmd(args),
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Corpus::parse(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

/// Writes `path` through a temporary file in the same directory, so a failed
/// run never leaves a truncated file behind.
fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp =
        NamedTempFile::new_in(dir).with_context(|| format!("cannot write {}", path.display()))?;
    let mut out = BufWriter::new(tmp);
    write(&mut out)
        .and_then(|()| out.flush())
        .with_context(|| format!("cannot write {}", path.display()))?;
    let tmp = out.into_inner().map_err(|e| e.into_error())?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = builtin_level(args.game.as_str())?;
    let corpus = run_batch_with(&spec, &args.agents, args.episodes, args.seed)?;
    write_atomic(&args.out, |w| corpus.write(w))?;

    let mut seen = Vec::new();
    let mut rates = Vec::new();
    for persona in &args.agents {
        let name = persona.as_str();
        if seen.contains(&name) {
            continue;
        }
        seen.push(name);
        let view = corpus.filter(&Condition::agent(name))?;
        let wins = view.traces().filter(|t| t.outcome == Outcome::Win).count();
        rates.push(format!("{name} {:.3}", wins as f64 / view.len() as f64));
    }
    println!(
        "wrote {} traces to {}; win rate: {}",
        corpus.len(),
        args.out.display(),
        rates.join(", ")
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    if args.out_svg.as_deref() == Some(args.out_csv.as_path()) {
        bail!(UsageError("--out-csv and --out-svg must differ".into()));
    }
    let corpus = read_corpus(&args.traces)?;
    if let Some(agents) = &args.agents {
        if let Some(missing) = agents.iter().find(|a| !corpus.has_agent(a)) {
            bail!(UsageError(format!(
                "--agents: {} has no traces in {}",
                TraceError::UnknownAgent(missing.clone()),
                args.traces.display()
            )));
        }
    }
    let options = ChartOptions {
        no_win_fallback: args.no_win_fallback,
    };
    let chart = compute_chart(&corpus, args.agents.as_deref(), options)?;
    let svg = match &args.out_svg {
        Some(_) => Some(render_svg(&chart, &ChartStyle::default())?),
        None => None,
    };
    write_atomic(&args.out_csv, |w| write_csv(&chart, w))?;
    if let (Some(path), Some(svg)) = (&args.out_svg, &svg) {
        write_atomic(path, |w| w.write_all(svg.as_bytes()))?;
    }

    if chart.no_win_fallback {
        println!("no winning traces: systemic scores set to 0");
    }
    let mut systemic = chart.systemic_by_mechanic();
    systemic.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let top: Vec<String> = systemic
        .iter()
        .take(2)
        .map(|(m, e)| format!("{m} ({e:+.6})"))
        .collect();
    println!("top systemic: {}", top.join(", "));
    for agent in &chart.agents {
        let points = || chart.points.iter().filter(|p| &p.agent_id == agent);
        let max = points().reduce(|a, b| if b.agential > a.agential { b } else { a });
        let min = points().reduce(|a, b| if b.agential < a.agential { b } else { a });
        if let (Some(max), Some(min)) = (max, min) {
            println!(
                "{agent}: most positive {} ({:+.6}), most negative {} ({:+.6})",
                max.mechanic, max.agential, min.mechanic, min.agential
            );
        }
    }
    Ok(())
}

fn profiles(args: ProfilesArgs) -> Result<()> {
    let corpus = read_corpus(&args.traces)?;
    let profiles = build_profiles(&corpus)?;
    write_atomic(&args.out, |w| write_profiles(&profiles, w))?;
    println!(
        "wrote {} profiles to {}",
        profiles.len(),
        args.out.display()
    );
    Ok(())
}

fn classify_cmd(args: ClassifyArgs) -> Result<()> {
    let file = File::open(&args.profiles)
        .with_context(|| format!("cannot open {}", args.profiles.display()))?;
    let profiles = read_profiles(BufReader::new(file))
        .with_context(|| format!("cannot parse {}", args.profiles.display()))?;
    let reference = read_corpus(&args.reference)?;
    let unknown = read_corpus(&args.unknown)?;
    let agent = unknown_agent_id(&unknown)?;
    let ranked = classify(&profiles, &unknown, &reference, args.metric)?;
    println!(
        "metric {}: {} ({} traces) against {} profiles",
        args.metric,
        agent,
        unknown.len(),
        profiles.len()
    );
    for (rank, r) in ranked.iter().enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, r.agent, r.distance);
    }
    Ok(())
}
