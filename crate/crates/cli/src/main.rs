//! `gnss-cpd`: contact plan design driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnss_cpd::CpdError;

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(name = "gnss-cpd", version, about = "GNSS inter-satellite link contact plan design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan an FSA range and write plan, metrics and manifest.
    Run(RunArgs),
    /// Evaluate a Ka-band link budget, printing every term.
    Linkbudget(LinkBudgetArgs),
    /// Largest per-user run count one superframe delivers without penalty.
    Capacity(ScenarioArgs),
    /// Visibility matrix CSV for an FSA range.
    Visibility(ScenarioArgs),
    /// LP-format export of one superframe model.
    Lp(LpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerKind {
    Ilp,
    Fcp,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON; the bundled BeiDou scenario when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Demand preset: case0, case1, case2, case1*, case2*, case3*, logical1, logical3.
    #[arg(long)]
    pub preset: Option<String>,
    /// FSA index `A`, half-open range `A..B`, or inclusive `A..=B`.
    #[arg(long, default_value = "0")]
    pub fsa: String,
    /// Solver wall-clock limit per superframe, seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Relative MIP gap tolerance.
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u32>,
    /// MILP backend: highs or exhaustive.
    #[arg(long)]
    pub backend: Option<String>,
    /// Output file or directory, depending on the command.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, value_enum, default_value = "ilp")]
    pub scheduler: SchedulerKind,
}

#[derive(Debug, Args)]
pub struct LinkBudgetArgs {
    /// Carrier frequency, GHz.
    #[arg(long)]
    pub freq: f64,
    /// Range, km.
    #[arg(long)]
    pub dist: f64,
    /// Transmit EIRP, dBW.
    #[arg(long)]
    pub eirp: f64,
    /// Receive antenna gain, dBi.
    #[arg(long)]
    pub gain: f64,
    /// System noise temperature, K.
    #[arg(long, default_value_t = gnss_cpd::link_budget::DEFAULT_T_SYS_K)]
    pub tsys: f64,
    /// Implementation loss, dB.
    #[arg(long, default_value_t = gnss_cpd::link_budget::DEFAULT_L_ADC_DB)]
    pub ladc: f64,
    /// Tracking threshold, dB-Hz.
    #[arg(long, default_value_t = 25.0)]
    pub threshold: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    pub superframe: u32,
}

/// Exit status for an error category.
pub fn exit_code(err: &CpdError) -> u8 {
    match err.kind() {
        "infeasible" => 3,
        "no-incumbent" => 4,
        "solver" => 1,
        _ => 2,
    }
}

fn error_json(err: &CpdError) -> serde_json::Value {
    let mut detail = serde_json::json!({
        "kind": err.kind(),
        "message": err.to_string(),
        "exit_code": exit_code(err),
    });
    let inner = match err {
        CpdError::Horizon { first, .. } => first.as_ref(),
        e => e,
    };
    match inner {
        CpdError::Infeasible { fsa, superframe, families } => {
            detail["fsa"] = (*fsa).into();
            detail["superframe"] = (*superframe).into();
            detail["families"] = families.clone().into();
        }
        CpdError::NoIncumbent { fsa, superframe } => {
            detail["fsa"] = (*fsa).into();
            detail["superframe"] = (*superframe).into();
        }
        _ => {}
    }
    serde_json::json!({ "error": detail })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CpdError::invalid("arguments", e.to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Linkbudget(a) => commands::linkbudget(&a),
        Command::Capacity(a) => commands::capacity(&a),
        Command::Visibility(a) => commands::visibility(&a),
        Command::Lp(a) => commands::lp(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
