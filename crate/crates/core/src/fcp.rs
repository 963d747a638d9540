//! Fair contact plan baseline: per-slot maximum-cardinality matching weighted
//! towards pairs that have met least often in the superframe.

use std::collections::BTreeMap;

use mwmatching::{Matching, Weight, SENTINEL};

use crate::error::{CpdError, Result};
use crate::milp::Status;
use crate::plan::{Contact, ContactKind, SolveMeta, SuperframePlan, UserRun};
use crate::scenario::{NodeId, UserRequirement};
use crate::service::{Scheduler, SuperframeContext, SuperframeRequest};
use crate::visibility::VisibilityMatrix;

/// Numerator of the inverse-count fairness weight (divisible by 1..=10).
const FAIRNESS_SCALE: i64 = 2520;
/// Levels of the lexicographic tie-break perturbation.
const TIE_LEVELS: i64 = 64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FairnessState {
    pub pair_counts: BTreeMap<(NodeId, NodeId), u32>,
    pub quota: BTreeMap<NodeId, u32>,
}

fn capability(us: &SuperframeRequest) -> Result<()> {
    match us.entries.iter().find(|e| e.b > 1) {
        Some(e) => Err(CpdError::Capability(format!(
            "fcp cannot provide multi-slot links (user {} asks for b = {})",
            e.user_id, e.b
        ))),
        None => Ok(()),
    }
}

/// Schedules one superframe.
pub fn fcp_schedule(y_prime: &VisibilityMatrix, us: &SuperframeRequest, k: u32, superframe: u32) -> Result<SuperframePlan> {
    capability(us)?;
    let start = std::time::Instant::now();
    let sats: Vec<NodeId> = y_prime.satellites().collect();
    let mut state = FairnessState {
        pair_counts: BTreeMap::new(),
        quota: us.entries.iter().map(|e| (e.user_id, e.c)).collect(),
    };
    let mut plan = SuperframePlan::empty(y_prime.fsa_index, superframe);

    // Candidate pairs in lexicographic order; their rank drives the tie-break.
    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for (a, &i) in sats.iter().enumerate() {
        for &j in &sats[a + 1..] {
            if y_prime.get(i, j) {
                pairs.push((i, j));
            }
        }
    }
    for e in &us.entries {
        for &s in &sats {
            if y_prime.get(e.user_id, s) {
                pairs.push((e.user_id.min(s), e.user_id.max(s)));
            }
        }
    }
    pairs.sort();
    let rank: BTreeMap<(NodeId, NodeId), i64> = pairs.iter().enumerate().map(|(r, &p)| (p, r as i64)).collect();

    // User pairs matched in the previous slot; repeating one would stretch a
    // single-slot run past its length.
    let mut last_user_pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for slot in 0..k {
        // Vertex list: each satellite once, each user once per usable terminal.
        let mut owner: Vec<NodeId> = sats.clone();
        for e in &us.entries {
            let q = state.quota[&e.user_id];
            for _ in 0..e.d.min(q) {
                owner.push(e.user_id);
            }
        }
        let unit = TIE_LEVELS * (owner.len() as i64 / 2 + 1);
        let mut edges = Vec::new();
        for (vi, &ni) in owner.iter().enumerate() {
            for (vj, &nj) in owner.iter().enumerate().skip(vi + 1) {
                if ni == nj {
                    continue;
                }
                let key = (ni.min(nj), ni.max(nj));
                let Some(&r) = rank.get(&key) else { continue };
                if last_user_pairs.contains(&key) {
                    continue;
                }
                let count = state.pair_counts.get(&key).copied().unwrap_or(0) as i64;
                let fair = (FAIRNESS_SCALE / (1 + count)).max(1);
                let tie = TIE_LEVELS - 1 - r * TIE_LEVELS / pairs.len() as i64;
                let w = fair * unit + tie;
                edges.push((vi, vj, Weight::try_from(w).map_err(|_| CpdError::Solver("fcp weight overflow".into()))?));
            }
        }
        if edges.is_empty() {
            last_user_pairs.clear();
            continue;
        }
        last_user_pairs.clear();
        let mate = Matching::new(edges).max_cardinality().solve();
        for (vi, &vj) in mate.iter().enumerate() {
            if vj == SENTINEL || vj < vi || vj >= owner.len() {
                continue;
            }
            let (ni, nj) = (owner[vi], owner[vj]);
            let key = (ni.min(nj), ni.max(nj));
            *state.pair_counts.entry(key).or_default() += 1;
            let user = [ni, nj].into_iter().find(|n| state.quota.contains_key(n));
            let kind = match user {
                Some(u) => {
                    *state.quota.get_mut(&u).expect("quota tracked") -= 1;
                    let sat = if u == ni { nj } else { ni };
                    plan.runs.push(UserRun { user: u, sat, start: slot, len: 1, receiver: None });
                    last_user_pairs.push(key);
                    ContactKind::GnssUser
                }
                None => ContactKind::GnssGnss,
            };
            plan.contacts.push(Contact::new(slot, ni, nj, kind));
        }
    }

    let throughput = plan
        .contacts
        .iter()
        .filter(|c| {
            (y_prime.non_anchors.contains(&c.a) && y_prime.anchors.contains(&c.b))
                || (y_prime.non_anchors.contains(&c.b) && y_prime.anchors.contains(&c.a))
        })
        .count() as u32;
    plan.deficits = state.quota.clone();
    plan.meta = Some(SolveMeta {
        scheduler: "fcp".into(),
        status: Status::Optimal,
        objective: throughput as f64,
        throughput,
        gap: 0.0,
        wall_time_s: start.elapsed().as_secs_f64(),
        clamped_l_min: BTreeMap::new(),
    });
    plan.sort();
    Ok(plan)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FcpScheduler;

impl Scheduler for FcpScheduler {
    fn name(&self) -> String {
        "fcp".into()
    }

    fn check_capability(&self, reqs: &[UserRequirement]) -> Result<()> {
        match reqs.iter().find(|r| r.b > 1) {
            Some(r) => Err(CpdError::Capability(format!(
                "fcp cannot provide multi-slot links (user {} asks for b = {})",
                r.user_id, r.b
            ))),
            None => Ok(()),
        }
    }

    fn schedule(&self, ctx: &SuperframeContext<'_>) -> Result<SuperframePlan> {
        fcp_schedule(ctx.y_prime, ctx.request, ctx.scenario.grid.slots_per_superframe(), ctx.superframe)
    }
}
