//! Times one superframe solve per preset: `solve_probe <preset> [fsa] [none|links|ranging]`.

use std::time::Instant;

use gnss_cpd::metrics::{self, Partition};
use gnss_cpd::milp::{default_backend, SolveOptions};
use gnss_cpd::presets::{self, Preset};
use gnss_cpd::service::{derive_fsa_request, IlpScheduler, Scheduler, SuperframeContext};
use gnss_cpd::visibility;

fn main() {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().unwrap_or_else(|| "case0".into()).parse().expect("preset");
    let fsa: u32 = args.next().map_or(0, |a| a.parse().expect("fsa index"));
    let mut scenario = preset.apply(&presets::beidou()).expect("preset applies");
    if let Some(tb) = args.next() {
        scenario.ilp.tie_break = serde_json::from_value(serde_json::Value::String(tb)).expect("tie-break");
    }
    let raw = visibility::fsa_visibility(&scenario, fsa);
    let y = visibility::preprocess_users(&raw, &scenario.requirements, &scenario).expect("preprocess");
    let us = derive_fsa_request(&scenario.requirements, fsa).into();
    let sched = IlpScheduler::new(default_backend(), SolveOptions::default());
    let ctx = SuperframeContext { scenario: &scenario, raw: &raw, y_prime: &y, request: &us, superframe: 0 };
    let t = Instant::now();
    let plan = sched.schedule(&ctx).expect("solve");
    let part = Partition { anchors: raw.anchors.clone(), non_anchors: raw.non_anchors.clone() };
    let sats = part.satellites().collect();
    let k = scenario.grid.slots_per_superframe();
    println!(
        "{preset} fsa {fsa}: {:.2}s throughput {} deficits {:?} utilization {:.3} anchors {}",
        t.elapsed().as_secs_f64(),
        metrics::throughput(std::slice::from_ref(&plan), &part),
        plan.deficits,
        metrics::utilization(std::slice::from_ref(&plan), &sats, k),
        part.anchors.len()
    );
}
