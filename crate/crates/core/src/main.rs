//! Command-line frontend for the materialized view advisor.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use mview_advisor::objectives::ObjectiveKind;
use mview_advisor::pipeline::{run_advisor, AdvisorOptions};
use mview_advisor::selection::BudgetOverflow;
use mview_advisor::views::MergeGate;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Profit,
    Ratio,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MergeGateArg {
    /// Keep a merged view when cost(v12) >= (cost(v1)+cost(v2)) * x.
    Paper,
    /// Keep a merged view when cost(v12) <= (cost(v1)+cost(v2)) * x.
    Inverted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OverflowArg {
    /// Pass over candidates that do not fit the remaining budget.
    Skip,
    /// Stop selecting at the first unaffordable best candidate.
    Stop,
}

/// Select materialized views for a GPSJ workload over a star schema.
#[derive(Debug, Parser)]
#[command(name = "mview-advisor", version)]
struct Cli {
    /// Workload file: semicolon-terminated GPSJ statements.
    #[arg(long)]
    workload: PathBuf,

    /// Statistics file: JSON star-schema statistics.
    #[arg(long)]
    stats: PathBuf,

    /// Objective function driving greedy selection.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Profit)]
    objective: ObjectiveArg,

    /// Storage budget in bytes (required for ratio and hybrid).
    #[arg(long)]
    budget: Option<u64>,

    /// Hybrid threshold on remaining/storage.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,

    /// Merge-effectiveness factor x.
    #[arg(long = "merge-x", default_value_t = 0.33)]
    merge_x: f64,

    /// Direction of the merge cost gate.
    #[arg(long = "merge-gate", value_enum, default_value_t = MergeGateArg::Paper)]
    merge_gate: MergeGateArg,

    /// %update / %query proportion used by the maintenance charge.
    #[arg(long = "update-query-ratio", default_value_t = 0.0)]
    update_query_ratio: f64,

    /// Use Cardenas when ms(F)/ms(v) is at least this large.
    #[arg(long = "cardenas-threshold", default_value_t = 100.0)]
    cardenas_threshold: f64,

    /// Seed for reproducible runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write CREATE MATERIALIZED VIEW statements here.
    #[arg(long = "output-ddl")]
    output_ddl: Option<PathBuf>,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Write the clustering step trace here.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// What to do when the best view does not fit the remaining budget.
    #[arg(long = "budget-overflow", value_enum, default_value_t = OverflowArg::Skip)]
    budget_overflow: OverflowArg,
}

fn main() -> ExitCode {
    // clap's own exit code for usage errors is 2, which this tool reserves
    // for internal invariant violations; remap usage problems to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> mview_advisor::Result<()> {
    let workload_text = fs::read_to_string(&cli.workload)?;
    let stats_text = fs::read_to_string(&cli.stats)?;

    let opts = AdvisorOptions {
        objective: match cli.objective {
            ObjectiveArg::Profit => ObjectiveKind::Profit,
            ObjectiveArg::Ratio => ObjectiveKind::Ratio,
            ObjectiveArg::Hybrid => ObjectiveKind::Hybrid,
        },
        budget_bytes: cli.budget.map(|b| b as f64),
        alpha: cli.alpha,
        merge_x: cli.merge_x,
        merge_gate: match cli.merge_gate {
            MergeGateArg::Paper => MergeGate::Paper,
            MergeGateArg::Inverted => MergeGate::Inverted,
        },
        update_query_ratio: cli.update_query_ratio,
        cardenas_threshold: cli.cardenas_threshold,
        seed: cli.seed,
        budget_overflow: match cli.budget_overflow {
            OverflowArg::Skip => BudgetOverflow::Skip,
            OverflowArg::Stop => BudgetOverflow::Stop,
        },
    };

    let outcome = run_advisor(&workload_text, &stats_text, &opts)?;

    let report_json = serde_json::to_string_pretty(&outcome.report)
        .expect("report serialization cannot fail")
        + "\n";
    match &cli.report {
        Some(path) => fs::write(path, &report_json)?,
        None => print!("{report_json}"),
    }
    if let Some(path) = &cli.output_ddl {
        fs::write(path, &outcome.ddl)?;
    }
    if let Some(path) = &cli.trace {
        fs::write(path, &outcome.clustering_trace)?;
    }

    let s = &outcome.report.selection;
    eprintln!(
        "{} queries, {} clusters, {} candidates; selected {} view(s), {:.0} bytes; \
         estimated workload cost {:.0} -> {:.0}; covering rate {:.2}",
        outcome.report.workload.queries,
        outcome.report.clustering.clusters,
        outcome.report.candidates.total,
        s.views.len(),
        s.total_bytes,
        s.workload_cost_before,
        s.workload_cost_after,
        s.covering_rate,
    );
    Ok(())
}
