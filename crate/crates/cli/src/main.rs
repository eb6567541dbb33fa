//! Command-line frontend: score a stream, evaluate scores against labels,
//! run the standard parameter sweep, or generate labeled synthetic corpora.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on data errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use isconna::detector::DetectorError;
use isconna::eval::{auroc, roc_points, LabeledScores};
use isconna::guarantee::{adjusted_statistic, threshold, GuaranteeConfig};
use isconna::ingest::{
    self, generate, load_labels, parse_edge_csv, read_scores, Injection, InjectionKind, SynthSpec,
};
use isconna::{ComponentScores, EdgeRecord, EnDetector64, EoDetector, Params64};

const DEFAULT_ROWS: usize = 2;
const DEFAULT_COLS: usize = 3000;

#[derive(Parser)]
#[command(
    name = "isconna",
    version,
    about = "Streaming edge-stream anomaly scoring with count-min sketches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score an edge stream, one score per record.
    Score(ScoreArgs),
    /// Compute AUROC of a score file against a label file.
    Eval(EvalArgs),
    /// Run the standard parameter grid and emit per-config AUROC rows.
    Sweep(SweepArgs),
    /// Generate a labeled synthetic edge stream.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Variant {
    /// Edge-only detector.
    Eo,
    /// Edge-node detector (edge, source and destination instances merged).
    En,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Eo => "eo",
            Variant::En => "en",
        }
    }
}

fn parse_weight(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("weight must be finite and non-negative".into())
    }
}

fn parse_unit_closed(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err("must lie in [0, 1]".into())
    }
}

fn parse_unit_open(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie in (0, 1)".into())
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

#[derive(Args)]
struct ScoreArgs {
    /// Input edge stream: one "s,d,t" line per record, sorted by timestamp.
    #[arg(long)]
    input: PathBuf,
    /// Output score file, one score per record in input order.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Variant::Eo)]
    variant: Variant,
    /// Burst (frequency) weight.
    #[arg(long, value_parser = parse_weight, default_value_t = 1.0)]
    alpha: f64,
    /// Occurrence-width weight.
    #[arg(long, value_parser = parse_weight, default_value_t = 1.0)]
    beta: f64,
    /// Absence-gap weight.
    #[arg(long, value_parser = parse_weight, default_value_t = 0.5)]
    gamma: f64,
    /// Scale factor applied to current counters at timestamp boundaries.
    #[arg(long, value_parser = parse_unit_closed, default_value_t = 0.7)]
    zeta: f64,
    /// Sketch rows [default: 2, or derived from --delta in threshold mode].
    #[arg(long, value_parser = parse_positive)]
    rows: Option<usize>,
    /// Sketch columns [default: 3000, or derived from --epsilon in threshold mode].
    #[arg(long, value_parser = parse_positive)]
    cols: Option<usize>,
    #[arg(long, env = "ISCONNA_SEED", default_value_t = 42)]
    seed: u64,
    /// Sketch error budget; with --delta, adds a 0/1 flag column driven by
    /// the adjusted burst statistic.
    #[arg(long, value_parser = parse_unit_open, requires = "delta")]
    epsilon: Option<f64>,
    /// False-positive budget for the flag column.
    #[arg(long, value_parser = parse_unit_open, requires = "epsilon")]
    delta: Option<f64>,
    /// Run one absence sweep per skipped timestamp instead of one per
    /// transition.
    #[arg(long)]
    multi_sweep: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Score file, one decimal per line.
    #[arg(long)]
    scores: PathBuf,
    /// Label file, one 0/1 per line.
    #[arg(long)]
    labels: PathBuf,
    /// Optional ROC-point CSV (fpr,tpr) for plotting.
    #[arg(long)]
    roc_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Output CSV: variant,alpha,beta,gamma,zeta,rows,cols,auroc.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_ROWS)]
    rows: usize,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_COLS)]
    cols: usize,
    #[arg(long, env = "ISCONNA_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Output edge stream CSV.
    #[arg(long)]
    output: PathBuf,
    /// Output label file aligned with the stream.
    #[arg(long)]
    labels_out: PathBuf,
    #[arg(long, value_parser = parse_positive, default_value_t = 16)]
    types: usize,
    #[arg(long, default_value_t = 600)]
    horizon: u64,
    /// Records per edge type per active timestamp.
    #[arg(long, default_value_t = 10)]
    base_rate: u32,
    /// On-run width of the periodic pattern.
    #[arg(long, default_value_t = 5)]
    width: u32,
    /// Off-gap length of the periodic pattern.
    #[arg(long, default_value_t = 5)]
    gap: u32,
    #[arg(long, env = "ISCONNA_SEED", default_value_t = 42)]
    seed: u64,
    /// Per-type pattern override "TYPE:WIDTH:GAP" on top of the uniform
    /// --width/--gap; repeatable. A width at or above the horizon keeps the
    /// type always on.
    #[arg(long = "pattern", value_name = "SPEC")]
    patterns: Vec<String>,
    /// Planted anomaly: "burst:TYPE:START:MAG", "width:TYPE:START:MAG" or
    /// "gap:TYPE:START:MAG"; repeatable.
    #[arg(long = "inject", value_name = "SPEC")]
    injections: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(args) => cmd_score(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

enum AnyDetector {
    Eo(EoDetector),
    En(EnDetector64),
}

impl AnyDetector {
    fn build(
        variant: Variant,
        params: Params64,
        rows: usize,
        cols: usize,
        seed: u64,
        multi_sweep: bool,
    ) -> Result<Self> {
        Ok(match variant {
            Variant::Eo => {
                AnyDetector::Eo(EoDetector::new(params, rows, cols, seed)?.with_multi_sweep(multi_sweep))
            }
            Variant::En => AnyDetector::En(
                EnDetector64::new(params, rows, cols, seed)?.with_multi_sweep(multi_sweep),
            ),
        })
    }

    fn process(&mut self, e: EdgeRecord) -> Result<(f64, ComponentScores<f64>), DetectorError> {
        match self {
            AnyDetector::Eo(d) => d.process_edge(e),
            AnyDetector::En(d) => d.process_edge(e),
        }
    }

    fn score_stream(&mut self, records: &[EdgeRecord]) -> Result<Vec<f64>, DetectorError> {
        match self {
            AnyDetector::Eo(d) => d.score_stream(records),
            AnyDetector::En(d) => d.score_stream(records),
        }
    }

    fn burst_counts(&self, s: u64, d: u64) -> (f64, f64, f64) {
        match self {
            AnyDetector::Eo(det) => det.burst_counts(s, d),
            AnyDetector::En(det) => det.burst_counts(s, d),
        }
    }
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let guarantee = match (args.epsilon, args.delta) {
        (Some(e), Some(d)) => Some(GuaranteeConfig::new(e, d)?),
        _ => None,
    };
    // In threshold mode an unspecified geometry is widened to what the
    // (epsilon, delta) budget requires.
    let (rows, cols) = match guarantee {
        Some(cfg) => {
            let (gr, gc) = cfg.size();
            (
                args.rows.unwrap_or(DEFAULT_ROWS.max(gr)),
                args.cols.unwrap_or(DEFAULT_COLS.max(gc)),
            )
        }
        None => (
            args.rows.unwrap_or(DEFAULT_ROWS),
            args.cols.unwrap_or(DEFAULT_COLS),
        ),
    };
    eprintln!(
        "# score variant={} alpha={} beta={} gamma={} zeta={} rows={} cols={} seed={} epsilon={} delta={} multi-sweep={} input={} output={}",
        args.variant.name(),
        args.alpha,
        args.beta,
        args.gamma,
        args.zeta,
        rows,
        cols,
        args.seed,
        args.epsilon.map_or("none".into(), |v| v.to_string()),
        args.delta.map_or("none".into(), |v| v.to_string()),
        args.multi_sweep,
        args.input.display(),
        args.output.display(),
    );

    let stream = parse_edge_csv(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let params = Params64::new(args.alpha, args.beta, args.gamma, args.zeta)?;
    let mut detector = AnyDetector::build(
        args.variant,
        params,
        rows,
        cols,
        args.seed,
        args.multi_sweep,
    )?;

    let started = Instant::now();
    let (scores, flags) = match guarantee {
        Some(cfg) => {
            let epsilon = cfg.epsilon();
            let thr = threshold(cfg.delta())?;
            let mut scores = Vec::with_capacity(stream.len());
            let mut flag_column = Vec::with_capacity(stream.len());
            for &record in &stream.records {
                let (score, _) = detector.process(record)?;
                scores.push(score);
                let (cur, acc, total) = detector.burst_counts(record.s, record.d);
                let g = adjusted_statistic(cur, total, acc, record.t as f64, epsilon);
                flag_column.push(g > thr);
            }
            (scores, Some(flag_column))
        }
        None => (detector.score_stream(&stream.records)?, None),
    };
    let elapsed = started.elapsed();

    match &flags {
        Some(flags) => ingest::write_flagged_scores(&args.output, &scores, flags)?,
        None => ingest::write_scores(&args.output, &scores)?,
    }
    let rate = scores.len() as f64 / elapsed.as_secs_f64().max(1e-12);
    eprintln!(
        "scored {} records in {:.3}s ({:.0} records/sec)",
        scores.len(),
        elapsed.as_secs_f64(),
        rate
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let scores =
        read_scores(&args.scores).with_context(|| format!("reading {}", args.scores.display()))?;
    let labels = load_labels(&args.labels, scores.len())
        .with_context(|| format!("reading {}", args.labels.display()))?;
    let labeled = LabeledScores::new(scores, labels)?;
    if let Some(path) = &args.roc_out {
        let points = roc_points(&labeled)?;
        let mut out = String::from("fpr,tpr\n");
        for (fpr, tpr) in points {
            out.push_str(&format!("{fpr},{tpr}\n"));
        }
        std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{:.4}", auroc(&labeled)?);
    Ok(())
}

/// The standard grid: scale factors {0, 0.3, 0.5, 0.7}, burst weight 1, and
/// (width, gap) weightings {(0,0), (1,0.5), (1,1)}, for both variants.
fn sweep_grid(rows: usize, cols: usize) -> Vec<(Variant, f64, f64, f64, f64, usize, usize)> {
    let mut grid = Vec::new();
    for variant in [Variant::Eo, Variant::En] {
        for &(beta, gamma) in &[(0.0, 0.0), (1.0, 0.5), (1.0, 1.0)] {
            for &zeta in &[0.0, 0.3, 0.5, 0.7] {
                grid.push((variant, 1.0, beta, gamma, zeta, rows, cols));
            }
        }
    }
    grid
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    eprintln!(
        "# sweep rows={} cols={} seed={} input={} labels={} output={}",
        args.rows,
        args.cols,
        args.seed,
        args.input.display(),
        args.labels.display(),
        args.output.display(),
    );
    let stream = parse_edge_csv(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let labels = load_labels(&args.labels, stream.len())
        .with_context(|| format!("reading {}", args.labels.display()))?;
    let records: Arc<[EdgeRecord]> = stream.records.into();
    let labels: Arc<[u8]> = labels.into();

    let grid = sweep_grid(args.rows, args.cols);
    let mut results: Vec<(usize, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(variant, alpha, beta, gamma, zeta, rows, cols))| -> Result<(usize, f64)> {
            let params = Params64::new(alpha, beta, gamma, zeta)?;
            let mut detector = AnyDetector::build(variant, params, rows, cols, args.seed, false)?;
            let scores = detector.score_stream(&records)?;
            let labeled = LabeledScores::new(scores, labels.to_vec())?;
            Ok((i, auroc(&labeled)?))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|&(i, _)| i);

    let mut out = String::from("variant,alpha,beta,gamma,zeta,rows,cols,auroc\n");
    for (i, auc) in results {
        let (variant, alpha, beta, gamma, zeta, rows, cols) = grid[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6}\n",
            variant.name(),
            alpha,
            beta,
            gamma,
            zeta,
            rows,
            cols,
            auc
        ));
    }
    std::fs::write(&args.output, out)
        .with_context(|| format!("writing {}", args.output.display()))?;
    eprintln!("swept {} configurations", grid.len());
    Ok(())
}

fn parse_pattern(spec: &str) -> Result<(usize, u32, u32)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [edge_type, width, gap] = parts.as_slice() else {
        anyhow::bail!("pattern must be TYPE:WIDTH:GAP, got {spec:?}");
    };
    Ok((
        edge_type.parse().context("pattern TYPE")?,
        width.parse().context("pattern WIDTH")?,
        gap.parse().context("pattern GAP")?,
    ))
}

fn parse_injection(spec: &str) -> Result<Injection> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [kind, edge_type, start, magnitude] = parts.as_slice() else {
        anyhow::bail!("injection must be KIND:TYPE:START:MAG, got {spec:?}");
    };
    let kind = match *kind {
        "burst" => InjectionKind::Burst,
        "width" => InjectionKind::WidthChange,
        "gap" => InjectionKind::GapChange,
        other => anyhow::bail!("unknown injection kind {other:?} (burst|width|gap)"),
    };
    Ok(Injection {
        kind,
        edge_type: edge_type.parse().context("injection TYPE")?,
        start: start.parse().context("injection START")?,
        magnitude: magnitude.parse().context("injection MAG")?,
    })
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    eprintln!(
        "# synth types={} horizon={} base-rate={} width={} gap={} seed={} patterns={:?} injections={:?} output={} labels-out={}",
        args.types,
        args.horizon,
        args.base_rate,
        args.width,
        args.gap,
        args.seed,
        args.patterns,
        args.injections,
        args.output.display(),
        args.labels_out.display(),
    );
    let injections = args
        .injections
        .iter()
        .map(|s| parse_injection(s))
        .collect::<Result<Vec<_>>>()?;
    let mut patterns = vec![(args.width, args.gap); args.types];
    for spec in &args.patterns {
        let (edge_type, width, gap) = parse_pattern(spec)?;
        anyhow::ensure!(edge_type < args.types, "pattern targets unknown type {edge_type}");
        patterns[edge_type] = (width, gap);
    }
    let spec = SynthSpec::new(args.types, args.horizon, args.base_rate, patterns, args.seed)?
        .with_injections(injections)?;
    let stream = generate(&spec);
    ingest::write_stream_csv(&args.output, &stream)?;
    ingest::write_labels(
        &args.labels_out,
        stream.labels.as_deref().unwrap_or_default(),
    )?;
    eprintln!("generated {} records", stream.len());
    Ok(())
}
