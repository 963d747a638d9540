//! Plan quality metrics: throughput, relay delay, ranging diversity, PDOP,
//! link utilization and user satisfaction.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::plan::{ContactKind, SuperframePlan};
use crate::scenario::{NodeId, Scenario};
use crate::service::{FsaOutcome, HorizonOutcome};

/// Anchor / non-anchor split of the satellites for one FSA state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub anchors: BTreeSet<NodeId>,
    pub non_anchors: BTreeSet<NodeId>,
}

impl Partition {
    pub fn satellites(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.anchors.union(&self.non_anchors).copied()
    }
}

/// Non-anchor ↔ anchor slot contacts over the given superframes.
pub fn throughput(plans: &[SuperframePlan], part: &Partition) -> u32 {
    plans
        .iter()
        .flat_map(|p| &p.contacts)
        .filter(|c| {
            (part.non_anchors.contains(&c.a) && part.anchors.contains(&c.b))
                || (part.non_anchors.contains(&c.b) && part.anchors.contains(&c.a))
        })
        .count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delay {
    /// Mean wait before each anchor contact, in slots.
    pub avg: f64,
    /// Longest wait inside a single superframe.
    pub max: u32,
    /// Longest wait across the concatenated slot sequence.
    pub max_cross_boundary: u32,
}

/// Wait statistics of one 0/1 anchor-contact row split into superframe segments.
pub fn row_delay(segments: &[Vec<bool>]) -> Delay {
    let mut max = 0;
    for seg in segments {
        let mut run = 0;
        for &on in seg {
            run = if on { 0 } else { run + 1 };
            max = max.max(run);
        }
    }
    let (mut run, mut cross, mut waits, mut contacts) = (0u32, 0u32, 0u64, 0u64);
    for &on in segments.iter().flatten() {
        if on {
            waits += run as u64;
            contacts += 1;
            run = 0;
        } else {
            run += 1;
            cross = cross.max(run);
        }
    }
    let avg = if contacts == 0 { run as f64 } else { waits as f64 / contacts as f64 };
    Delay { avg, max, max_cross_boundary: cross }
}

/// Per-non-anchor delay over consecutive superframes.
pub fn delays(plans: &[SuperframePlan], part: &Partition, k: u32) -> BTreeMap<NodeId, Delay> {
    part.non_anchors
        .iter()
        .map(|&n| {
            let segs: Vec<Vec<bool>> = plans
                .iter()
                .map(|p| {
                    let mut row = vec![false; k as usize];
                    for c in &p.contacts {
                        if let Some(o) = c.other(n) {
                            if part.anchors.contains(&o) && (c.slot as usize) < row.len() {
                                row[c.slot as usize] = true;
                            }
                        }
                    }
                    row
                })
                .collect();
            (n, row_delay(&segs))
        })
        .collect()
}

/// Distinct GNSS partners per satellite in one superframe.
pub fn ranging_links(plan: &SuperframePlan, part: &Partition) -> BTreeMap<NodeId, u32> {
    let mut partners: BTreeMap<NodeId, BTreeSet<NodeId>> = part.satellites().map(|s| (s, BTreeSet::new())).collect();
    for c in plan.contacts.iter().filter(|c| c.kind == ContactKind::GnssGnss) {
        partners.entry(c.a).or_default().insert(c.b);
        partners.entry(c.b).or_default().insert(c.a);
    }
    partners.into_iter().map(|(s, p)| (s, p.len() as u32)).collect()
}

/// PDOP of `sat` ranging to `partners`; `None` below four partners or when
/// the geometry is singular.
pub fn pdop(sat: &Vector3<f64>, partners: &[Vector3<f64>]) -> Option<f64> {
    if partners.len() < 4 {
        return None;
    }
    let mut hth = Matrix4::<f64>::zeros();
    for p in partners {
        let u = (p - sat).normalize();
        let row = nalgebra::RowVector4::new(-u.x, -u.y, -u.z, 1.0);
        hth += row.transpose() * row;
    }
    let sv = hth.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo <= 0.0 || hi / lo > 1e12 {
        return None;
    }
    let q = hth.try_inverse()?;
    Some((q[(0, 0)] + q[(1, 1)] + q[(2, 2)]).sqrt())
}

/// PDOP per satellite at the superframe midpoint.
pub fn superframe_pdop(scenario: &Scenario, plan: &SuperframePlan, part: &Partition) -> BTreeMap<NodeId, Option<f64>> {
    let t = scenario.grid.superframe_midpoint(plan.fsa, plan.superframe);
    let mut partners: BTreeMap<NodeId, BTreeSet<NodeId>> = part.satellites().map(|s| (s, BTreeSet::new())).collect();
    for c in plan.contacts.iter().filter(|c| c.kind == ContactKind::GnssGnss) {
        partners.entry(c.a).or_default().insert(c.b);
        partners.entry(c.b).or_default().insert(c.a);
    }
    partners
        .into_iter()
        .map(|(s, ps)| {
            let value = scenario.state(s, t).and_then(|me| {
                let pos: Vec<Vector3<f64>> = ps.iter().filter_map(|&p| scenario.state(p, t)).map(|st| st.position).collect();
                pdop(&me.position, &pos)
            });
            (s, value)
        })
        .collect()
}

/// Mean over satellites of the fraction of slots with an active link.
pub fn utilization(plans: &[SuperframePlan], satellites: &BTreeSet<NodeId>, k: u32) -> f64 {
    if satellites.is_empty() || plans.is_empty() {
        return 0.0;
    }
    let mut active: BTreeMap<NodeId, BTreeSet<(usize, u32)>> = BTreeMap::new();
    for (i, p) in plans.iter().enumerate() {
        for c in &p.contacts {
            for n in [c.a, c.b] {
                if satellites.contains(&n) {
                    active.entry(n).or_default().insert((i, c.slot));
                }
            }
        }
    }
    let total = (plans.len() as u32 * k) as f64;
    satellites.iter().map(|s| active.get(s).map_or(0, |a| a.len()) as f64 / total).sum::<f64>() / satellites.len() as f64
}

/// Delivered standard runs over requested runs per user, across the horizon.
pub fn satisfaction(fsas: &[FsaOutcome]) -> BTreeMap<NodeId, f64> {
    let mut req: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut got: BTreeMap<NodeId, u64> = BTreeMap::new();
    for f in fsas {
        for (&u, &c) in &f.requested {
            *req.entry(u).or_default() += c as u64;
        }
        for (&u, &c) in &f.delivered {
            *got.entry(u).or_default() += c as u64;
        }
    }
    req.into_iter()
        .map(|(u, r)| (u, if r == 0 { 1.0 } else { (got.get(&u).copied().unwrap_or(0) as f64 / r as f64).min(1.0) }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsaMetrics {
    pub fsa: u32,
    pub anchors: usize,
    pub solves: u32,
    pub throughput: u32,
    /// Mean over non-anchors of their average wait.
    pub avg_delay: f64,
    /// Mean over non-anchors of their intra-superframe maximum wait.
    pub mean_max_delay: f64,
    /// Largest intra-superframe wait of any non-anchor.
    pub max_delay: u32,
    pub max_delay_cross_boundary: u32,
    pub min_ranging_links: u32,
    pub mean_ranging_links: f64,
    /// Mean of defined per-satellite PDOP values over the state.
    pub mean_pdop: Option<f64>,
    pub undefined_pdop: usize,
    pub utilization: f64,
    pub solve_time_s: f64,
}

pub fn fsa_metrics(scenario: &Scenario, outcome: &FsaOutcome, part: &Partition) -> FsaMetrics {
    let k = scenario.grid.slots_per_superframe();
    let plans = &outcome.plans;
    let d = delays(plans, part, k);
    let n = d.len().max(1) as f64;
    let ranging: Vec<u32> = plans.iter().flat_map(|p| ranging_links(p, part).into_values()).collect();
    let mut pdops = Vec::new();
    let mut undefined = 0;
    for p in plans {
        for v in superframe_pdop(scenario, p, part).into_values() {
            match v {
                Some(x) => pdops.push(x),
                None => undefined += 1,
            }
        }
    }
    let sats: BTreeSet<NodeId> = part.satellites().collect();
    FsaMetrics {
        fsa: outcome.fsa,
        anchors: part.anchors.len(),
        solves: outcome.solves,
        throughput: throughput(plans, part),
        avg_delay: d.values().map(|x| x.avg).sum::<f64>() / n,
        mean_max_delay: d.values().map(|x| x.max as f64).sum::<f64>() / n,
        max_delay: d.values().map(|x| x.max).max().unwrap_or(0),
        max_delay_cross_boundary: d.values().map(|x| x.max_cross_boundary).max().unwrap_or(0),
        min_ranging_links: ranging.iter().copied().min().unwrap_or(0),
        mean_ranging_links: if ranging.is_empty() { 0.0 } else { ranging.iter().sum::<u32>() as f64 / ranging.len() as f64 },
        mean_pdop: if pdops.is_empty() { None } else { Some(pdops.iter().sum::<f64>() / pdops.len() as f64) },
        undefined_pdop: undefined,
        utilization: utilization(plans, &sats, k),
        solve_time_s: plans.iter().filter_map(|p| p.meta.as_ref()).map(|m| m.wall_time_s).sum(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheduler: String,
    pub fsa_count: usize,
    pub solved_superframes: u32,
    pub per_fsa: Vec<FsaMetrics>,
    /// User name → satisfaction ratio.
    pub satisfaction: BTreeMap<String, f64>,
    pub mean_avg_delay: f64,
    pub max_delay: u32,
    pub max_delay_cross_boundary: u32,
    pub mean_pdop: Option<f64>,
    pub mean_utilization: f64,
    pub min_ranging_links: u32,
    pub total_solve_time_s: f64,
}

pub fn report(scenario: &Scenario, outcome: &HorizonOutcome) -> MetricsReport {
    let per_fsa: Vec<FsaMetrics> = outcome
        .fsas
        .iter()
        .map(|f| {
            let vm = crate::visibility::fsa_visibility(scenario, f.fsa);
            let part = Partition { anchors: vm.anchors, non_anchors: vm.non_anchors };
            fsa_metrics(scenario, f, &part)
        })
        .collect();
    let n = per_fsa.len().max(1) as f64;
    let pdops: Vec<f64> = per_fsa.iter().filter_map(|m| m.mean_pdop).collect();
    MetricsReport {
        scheduler: outcome.plan.scheduler.clone(),
        fsa_count: per_fsa.len(),
        solved_superframes: outcome.solve_count(),
        satisfaction: satisfaction(&outcome.fsas)
            .into_iter()
            .map(|(u, s)| (scenario.nodes[u].name.clone(), s))
            .collect(),
        mean_avg_delay: per_fsa.iter().map(|m| m.avg_delay).sum::<f64>() / n,
        max_delay: per_fsa.iter().map(|m| m.max_delay).max().unwrap_or(0),
        max_delay_cross_boundary: per_fsa.iter().map(|m| m.max_delay_cross_boundary).max().unwrap_or(0),
        mean_pdop: if pdops.is_empty() { None } else { Some(pdops.iter().sum::<f64>() / pdops.len() as f64) },
        mean_utilization: per_fsa.iter().map(|m| m.utilization).sum::<f64>() / n,
        min_ranging_links: per_fsa.iter().map(|m| m.min_ranging_links).min().unwrap_or(0),
        total_solve_time_s: per_fsa.iter().map(|m| m.solve_time_s).sum(),
        per_fsa,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per FSA state.
    pub fn per_fsa_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for m in &self.per_fsa {
            w.serialize(m).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }

    pub fn satisfaction_csv(&self) -> String {
        let mut out = String::from("user,satisfaction\n");
        for (u, s) in &self.satisfaction {
            out.push_str(&format!("{u},{s}\n"));
        }
        out
    }

    /// Plot-data series `x,y`: anchor count against throughput and delays.
    pub fn plot_series(&self) -> BTreeMap<&'static str, String> {
        let series = |f: &dyn Fn(&FsaMetrics) -> String| {
            let mut s = String::from("x,y\n");
            for m in &self.per_fsa {
                s.push_str(&format!("{},{}\n", m.anchors, f(m)));
            }
            s
        };
        BTreeMap::from([
            ("throughput_vs_anchors", series(&|m| m.throughput.to_string())),
            ("avg_delay_vs_anchors", series(&|m| m.avg_delay.to_string())),
            ("max_delay_vs_anchors", series(&|m| m.max_delay.to_string())),
            ("utilization_vs_anchors", series(&|m| m.utilization.to_string())),
            ("ranging_vs_anchors", series(&|m| m.mean_ranging_links.to_string())),
            ("pdop_vs_anchors", series(&|m| m.mean_pdop.map_or("nan".into(), |p| p.to_string()))),
        ])
    }
}
