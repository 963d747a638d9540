//! Plan-level rule checks on emitted superframe plans, for any scheduler.

use std::collections::{BTreeMap, BTreeSet};

use crate::plan::{ContactKind, SuperframePlan};
use crate::scenario::{IlpParams, NodeId, RangingFloor, UserRequirement};
use crate::visibility::VisibilityMatrix;

/// Which optional rules apply; terminal limits, visibility and run shape always do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanRules {
    pub l_min: Option<u32>,
    pub ranging_floor: RangingFloor,
    pub t_m: Option<u32>,
}

impl PlanRules {
    /// Everything the ILP guarantees.
    pub fn ilp(params: &IlpParams) -> Self {
        PlanRules { l_min: Some(params.l_min), ranging_floor: params.ranging_floor, t_m: Some(params.t_m) }
    }

    /// Only the structural rules; what any matching-based plan must satisfy.
    pub fn structural() -> Self {
        PlanRules { l_min: None, ranging_floor: RangingFloor::Strict, t_m: None }
    }
}

/// Violations of the rules in `plan`; empty when the plan is valid.
pub fn plan_violations(
    plan: &SuperframePlan,
    y_prime: &VisibilityMatrix,
    reqs: &[UserRequirement],
    rules: &PlanRules,
    k: u32,
) -> Vec<String> {
    let mut out = Vec::new();
    let req = |n: NodeId| reqs.iter().find(|r| r.user_id == n);
    let tag = format!("fsa {} superframe {}", plan.fsa, plan.superframe);

    let mut degree: BTreeMap<(NodeId, u32), u32> = BTreeMap::new();
    let mut partners: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for c in &plan.contacts {
        if c.a >= c.b || c.slot >= k {
            out.push(format!("{tag}: malformed contact {c:?}"));
            continue;
        }
        if !y_prime.get(c.a, c.b) {
            out.push(format!("{tag}: contact {}-{} at slot {} between nodes that cannot see each other", c.a, c.b, c.slot));
        }
        let sats = (y_prime.is_satellite(c.a), y_prime.is_satellite(c.b));
        let kind_ok = match c.kind {
            ContactKind::GnssGnss => sats == (true, true),
            ContactKind::GnssUser => (sats.0 ^ sats.1) && req(if sats.0 { c.b } else { c.a }).is_some(),
        };
        if !kind_ok {
            out.push(format!("{tag}: contact {}-{} mis-tagged as {}", c.a, c.b, c.kind.as_str()));
        }
        if c.kind == ContactKind::GnssGnss {
            partners.entry(c.a).or_default().insert(c.b);
            partners.entry(c.b).or_default().insert(c.a);
        }
        *degree.entry((c.a, c.slot)).or_default() += 1;
        *degree.entry((c.b, c.slot)).or_default() += 1;
    }
    for (&(n, t), &d) in &degree {
        let cap = req(n).map_or(1, |r| r.d);
        if d > cap {
            out.push(format!("{tag}: node {n} has {d} links in slot {t}, limit {cap}"));
        }
    }

    if let Some(l_min) = rules.l_min {
        for s in y_prime.satellites() {
            let floor = match rules.ranging_floor {
                RangingFloor::Strict => l_min,
                RangingFloor::ClampToVisible => l_min.min(y_prime.visible_satellite_count(s) as u32),
            };
            let have = partners.get(&s).map_or(0, |p| p.len() as u32);
            if have < floor {
                out.push(format!("{tag}: satellite {s} ranges with {have} partners, floor {floor}"));
            }
        }
    }

    if let Some(tm) = rules.t_m.filter(|&tm| tm <= k) {
        for &n in &y_prime.non_anchors {
            let row: Vec<bool> = (0..k)
                .map(|t| plan.contacts_at(t).any(|c| c.other(n).is_some_and(|o| y_prime.anchors.contains(&o))))
                .collect();
            for w in 0..=(k - tm) as usize {
                if !row[w..w + tm as usize].iter().any(|&b| b) {
                    out.push(format!("{tag}: non-anchor {n} waits past slot {} without an anchor", w + tm as usize - 1));
                }
            }
        }
    }

    let linked = |t: u32, a: NodeId, b: NodeId| plan.contacts_at(t).any(|c| c.involves(a) && c.involves(b));
    for r in &plan.runs {
        match req(r.user) {
            Some(q) if q.b == r.len => {}
            Some(q) => out.push(format!("{tag}: run {r:?} has length {}, requested {}", r.len, q.b)),
            None => out.push(format!("{tag}: run {r:?} for a node without a request")),
        }
        if r.start + r.len > k || !(r.start..r.start + r.len).all(|t| linked(t, r.user, r.sat)) {
            out.push(format!("{tag}: run {r:?} not backed by contacts"));
        }
        if plan.runs.iter().any(|o| o.user == r.user && o.sat == r.sat && o.start == r.start + 1) {
            out.push(format!("{tag}: run {r:?} overruns into the next slot"));
        }
    }
    for c in plan.contacts.iter().filter(|c| c.kind == ContactKind::GnssUser) {
        if !plan.runs.iter().any(|r| r.covers(c.slot) && c.involves(r.user) && c.involves(r.sat)) {
            out.push(format!("{tag}: user contact {}-{} at slot {} outside every standard run", c.a, c.b, c.slot));
        }
    }
    out
}

/// Largest number of consecutive slots `n` spends without an anchor contact
/// inside the plan.
pub fn intra_max_wait(plan: &SuperframePlan, y_prime: &VisibilityMatrix, n: NodeId, k: u32) -> u32 {
    let mut run = 0;
    let mut worst = 0;
    for t in 0..k {
        let met = plan.contacts_at(t).any(|c| c.other(n).is_some_and(|o| y_prime.anchors.contains(&o)));
        run = if met { 0 } else { run + 1 };
        worst = worst.max(run);
    }
    worst
}
