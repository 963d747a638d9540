use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gnss_cpd::capacity::capacity_probe;
use gnss_cpd::fcp::FcpScheduler;
use gnss_cpd::link_budget::{link_feasible, LinkBudgetInput};
use gnss_cpd::milp::{backend_by_name, default_backend, Backend, SolveOptions};
use gnss_cpd::presets::{self, Preset};
use gnss_cpd::service::{derive_fsa_request, run_horizon, AcceptAll, IlpScheduler, Scheduler};
use gnss_cpd::{cpd, load_scenario, metrics, visibility, CpdError, Result, Scenario};

use crate::manifest::{config_hash, Manifest, SolverInfo};
use crate::{LinkBudgetArgs, LpArgs, RunArgs, ScenarioArgs, SchedulerKind};

/// Parses `A`, `A..B` (half-open) or `A..=B`.
pub fn parse_fsa_range(text: &str, horizon: u32) -> Result<Range<u32>> {
    let bad = || CpdError::invalid("fsa", format!("`{text}` is not `A`, `A..B` or `A..=B`"));
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    let range = if let Some((a, b)) = text.split_once("..=") {
        num(a)?..num(b)?.checked_add(1).ok_or_else(bad)?
    } else if let Some((a, b)) = text.split_once("..") {
        num(a)?..num(b)?
    } else {
        let a = num(text)?;
        a..a + 1
    };
    if range.start >= range.end || range.end > horizon {
        return Err(CpdError::invalid(
            "fsa",
            format!("range {}..{} is empty or outside the horizon of {horizon} states", range.start, range.end),
        ));
    }
    Ok(range)
}

fn load(args: &ScenarioArgs) -> Result<(Scenario, Option<Preset>)> {
    let mut scenario = match &args.scenario {
        Some(p) => load_scenario(p)?,
        None => presets::beidou(),
    };
    let preset = match &args.preset {
        Some(name) => {
            let p: Preset = name.parse()?;
            scenario = p.apply(&scenario)?;
            Some(p)
        }
        None => None,
    };
    let mut ilp = scenario.ilp.clone();
    if let Some(t) = args.time_limit {
        ilp.time_limit_s = t;
    }
    if let Some(g) = args.gap {
        ilp.gap_tolerance = g;
    }
    if let Some(s) = args.seed {
        ilp.seed = s;
    }
    Ok((scenario.with_ilp(ilp)?, preset))
}

fn solve_options(s: &Scenario) -> Result<SolveOptions> {
    if !(s.ilp.time_limit_s > 0.0) || !(s.ilp.gap_tolerance >= 0.0) {
        return Err(CpdError::invalid("ilp", "time limit must be positive and gap non-negative"));
    }
    Ok(SolveOptions {
        time_limit: Duration::from_secs_f64(s.ilp.time_limit_s),
        gap: s.ilp.gap_tolerance,
        seed: s.ilp.seed,
        ..SolveOptions::default()
    })
}

fn backend(args: &ScenarioArgs) -> Result<Box<dyn Backend>> {
    match &args.backend {
        None => Ok(default_backend()),
        Some(name) => backend_by_name(name).ok_or_else(|| CpdError::invalid("backend", format!("unknown backend `{name}`"))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> CpdError {
    CpdError::Io { path: path.display().to_string(), source }
}

pub fn run(args: &RunArgs) -> Result<()> {
    let a = &args.common;
    let (scenario, preset) = load(a)?;
    let range = parse_fsa_range(&a.fsa, scenario.grid.horizon_fsa_count)?;
    let opts = solve_options(&scenario)?;
    let (sched, solver): (Box<dyn Scheduler>, SolverInfo) = match args.scheduler {
        SchedulerKind::Ilp => {
            let be = backend(a)?;
            let info = SolverInfo { scheduler: "ilp".into(), backend: Some(be.name().into()), version: be.version() };
            (Box::new(IlpScheduler::new(be, opts)), info)
        }
        SchedulerKind::Fcp => (
            Box::new(FcpScheduler),
            SolverInfo { scheduler: "fcp".into(), backend: None, version: format!("gnss-cpd {}", env!("CARGO_PKG_VERSION")) },
        ),
    };
    // Refuse early so a capability problem is a config error, not a run failure.
    sched.check_capability(&scenario.requirements)?;

    let outcome = run_horizon(&scenario, range.clone(), sched.as_ref(), &AcceptAll)?;
    let report = metrics::report(&scenario, &outcome);

    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("gnss-cpd-out"));
    let mut outputs: Vec<(String, String)> = vec![
        ("plan.csv".into(), outcome.plan.to_csv_string()),
        ("plan.json".into(), outcome.plan.to_json()),
        ("metrics.json".into(), report.to_json()),
        ("metrics_per_fsa.csv".into(), report.per_fsa_csv()),
        ("satisfaction.csv".into(), report.satisfaction_csv()),
    ];
    for (name, series) in report.plot_series() {
        outputs.push((format!("plots/{name}.csv"), series));
    }
    for (name, text) in &outputs {
        write_file(&out.join(name), text)?;
    }

    let options = format!(
        "scheduler={:?};fsa={}..{};backend={:?};time_limit={};gap={};seed={}",
        args.scheduler, range.start, range.end, solver.backend, scenario.ilp.time_limit_s, scenario.ilp.gap_tolerance, scenario.ilp.seed
    );
    let manifest = Manifest {
        tool: "gnss-cpd",
        tool_version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.name.clone(),
        preset: preset.map(|p| p.to_string()),
        fsa_start: range.start,
        fsa_end: range.end,
        config_hash: config_hash(&[&scenario.to_json(), &options]),
        solver,
        solver_seed: scenario.ilp.seed,
        time_limit_s: scenario.ilp.time_limit_s,
        gap: scenario.ilp.gap_tolerance,
        outputs: outputs.iter().map(|(n, _)| n.clone()).collect(),
    };
    write_file(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;

    let first_penalty: u32 = outcome
        .fsas
        .iter()
        .filter_map(|f| f.plans.first())
        .filter(|p| p.solved())
        .map(|p| p.deficits.values().sum::<u32>())
        .sum();
    let summary = serde_json::json!({
        "scheduler": outcome.plan.scheduler,
        "fsa_start": range.start,
        "fsa_end": range.end,
        "superframes": outcome.plan.superframes.len(),
        "solved_superframes": outcome.solve_count(),
        "first_superframe_penalty": first_penalty,
        "unmet_runs": outcome.fsas.iter().flat_map(|f| f.unmet.values()).sum::<u32>(),
        "mean_avg_delay": report.mean_avg_delay,
        "max_delay": report.max_delay,
        "mean_pdop": report.mean_pdop,
        "mean_utilization": report.mean_utilization,
        "satisfaction": report.satisfaction,
        "out": out.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

pub fn linkbudget(a: &LinkBudgetArgs) -> Result<()> {
    if !(a.freq > 0.0 && a.dist > 0.0 && a.tsys > 0.0) {
        return Err(CpdError::invalid("linkbudget", "frequency, distance and noise temperature must be positive"));
    }
    let input = LinkBudgetInput { t_sys_k: a.tsys, l_adc_db: a.ladc, ..LinkBudgetInput::new(a.freq, a.dist, a.eirp, a.gain) };
    let b = input.evaluate();
    let feasible = link_feasible(b.cn0_dbhz, a.threshold);
    if a.json {
        let mut v = serde_json::to_value(b).expect("budget serializes");
        v["threshold_dbhz"] = a.threshold.into();
        v["feasible"] = feasible.into();
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("frequency          {:>10.3} GHz", a.freq);
        println!("distance           {:>10.1} km", a.dist);
        println!("wavelength         {:>10.6} m", b.wavelength_m);
        println!("free-space loss    {:>10.2} dB", b.free_space_loss_db);
        println!("eirp               {:>10.2} dBW", a.eirp);
        println!("rx gain            {:>10.2} dBi", a.gain);
        println!("received power     {:>10.2} dBW", b.received_power_dbw);
        println!("t_sys              {:>10.1} K", a.tsys);
        println!("noise density      {:>10.2} dBW/Hz", b.noise_density_dbw_hz);
        println!("l_adc              {:>10.2} dB", a.ladc);
        println!("C/N0               {:>10.2} dB-Hz", b.cn0_dbhz);
        println!("threshold          {:>10.2} dB-Hz", a.threshold);
        println!("feasible           {:>10}", feasible);
    }
    Ok(())
}

pub fn capacity(a: &ScenarioArgs) -> Result<()> {
    let (scenario, _) = load(a)?;
    let range = parse_fsa_range(&a.fsa, scenario.grid.horizon_fsa_count)?;
    let opts = solve_options(&scenario)?;
    let be = backend(a)?;
    let mut results = Vec::new();
    for fsa in range {
        results.push(capacity_probe(&scenario, fsa, be.as_ref(), &opts)?);
    }
    let text = serde_json::to_string_pretty(&results).expect("capacity serializes");
    match &a.out {
        Some(p) => write_file(p, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

pub fn visibility(a: &ScenarioArgs) -> Result<()> {
    let (scenario, _) = load(a)?;
    let range = parse_fsa_range(&a.fsa, scenario.grid.horizon_fsa_count)?;
    let fsas: Vec<u32> = range.collect();
    let mut buf = Vec::new();
    for (i, vm) in visibility::horizon_visibility(&scenario, &fsas).iter().enumerate() {
        vm.write_csv(&mut buf, i == 0)?;
    }
    match &a.out {
        Some(p) => write_file(p, std::str::from_utf8(&buf).expect("csv is utf-8")),
        None => std::io::stdout().write_all(&buf).map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

/// Exports the model for one superframe with the full per-FSA demand.
pub fn lp(a: &LpArgs) -> Result<()> {
    let (scenario, _) = load(&a.common)?;
    let range = parse_fsa_range(&a.common.fsa, scenario.grid.horizon_fsa_count)?;
    if a.superframe >= scenario.grid.superframes_per_fsa() {
        return Err(CpdError::invalid("superframe", format!("{} is past the last superframe", a.superframe)));
    }
    let raw = visibility::fsa_visibility(&scenario, range.start);
    let y = visibility::preprocess_users(&raw, &scenario.requirements, &scenario)?;
    let us = derive_fsa_request(&scenario.requirements, range.start).into();
    let model = cpd::build_model(&y, &us, &scenario.ilp, scenario.grid.slots_per_superframe(), a.superframe)?;
    let text = model.to_lp();
    match &a.common.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
