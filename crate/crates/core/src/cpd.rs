//! Per-superframe 0-1 ILP: builder, solve with re-check, and plan extraction.
//!
//! Variables are folded over unordered pairs, so link symmetry is structural,
//! and only visible pairs get link variables.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};
use crate::milp::{Backend, Model, SolveOptions, Status, VarId};
use crate::plan::{Contact, ContactKind, SolveMeta, SuperframePlan, UserRun};
use crate::scenario::{IlpParams, NodeId, RangingFloor, TieBreak};
use crate::service::SuperframeRequest;
use crate::visibility::VisibilityMatrix;

/// Constraint family tags carried on every model row.
pub mod family {
    pub const GNSS_DEGREE: &str = "gnss-degree";
    pub const USER_DEGREE: &str = "user-degree";
    pub const RANGING_INDICATOR: &str = "ranging-indicator";
    pub const RANGING_DIVERSITY: &str = "ranging-diversity";
    pub const ANCHOR_CONTACT: &str = "anchor-contact";
    pub const DELAY_WINDOW: &str = "delay-window";
    pub const RUN_UPPER: &str = "run-upper";
    pub const RUN_LOWER: &str = "run-lower";
    pub const RUN_OVERRUN: &str = "run-overrun";
    pub const SERVICE_COUNT: &str = "service-count";
}

pub type Pair = (NodeId, NodeId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDemand {
    pub user: NodeId,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

#[derive(Debug, Clone)]
pub struct IlpModel {
    pub fsa: u32,
    pub superframe: u32,
    pub k: u32,
    pub params: IlpParams,
    pub milp: Model,
    pub anchors: BTreeSet<NodeId>,
    pub non_anchors: BTreeSet<NodeId>,
    pub users: Vec<UserDemand>,
    /// Link variables per visible pair, indexed by slot.
    pub x: BTreeMap<Pair, Vec<VarId>>,
    /// Ranging indicators over GNSS–GNSS pairs.
    pub l: BTreeMap<Pair, VarId>,
    /// Anchor-contact indicators per non-anchor, indexed by slot.
    pub psi: BTreeMap<NodeId, Vec<VarId>>,
    /// Run-start indicators per (user, satellite), indexed by start slot.
    pub r: BTreeMap<Pair, Vec<VarId>>,
    pub p: BTreeMap<NodeId, VarId>,
    /// Ranging-diversity floor per satellite after clamping to its visible count.
    pub l_min: BTreeMap<NodeId, u32>,
    /// Objective scale that keeps the tie-break term below one unit of the primary objective.
    pub primary_scale: f64,
    /// Absolute gap that still proves the primary term optimal, given an
    /// integral penalty weight.
    pub tie_slack: f64,
}

impl IlpModel {
    pub fn is_satellite(&self, n: NodeId) -> bool {
        self.anchors.contains(&n) || self.non_anchors.contains(&n)
    }

    pub fn satellites(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.anchors.union(&self.non_anchors).copied()
    }

    pub fn demand(&self, user: NodeId) -> Option<&UserDemand> {
        self.users.iter().find(|u| u.user == user)
    }

    pub fn clamped(&self) -> BTreeMap<NodeId, u32> {
        self.l_min
            .iter()
            .filter(|(_, &v)| v < self.params.l_min)
            .map(|(&k, &v)| (k, v))
            .collect()
    }

    pub fn to_lp(&self) -> String {
        crate::milp::lp_format::to_lp(&self.milp, &format!("fsa {} superframe {}", self.fsa, self.superframe))
    }
}

/// Builds the superframe model from preprocessed visibility and residual demand.
pub fn build_model(
    y_prime: &VisibilityMatrix,
    us: &SuperframeRequest,
    params: &IlpParams,
    k: u32,
    superframe: u32,
) -> Result<IlpModel> {
    if params.m_big <= k {
        return Err(CpdError::BigMTooSmall { m_big: params.m_big, slots: k });
    }
    let sats: BTreeSet<NodeId> = y_prime.satellites().collect();
    let mut users = Vec::new();
    for e in &us.entries {
        if e.user_id >= y_prime.len() {
            return Err(CpdError::UnknownNode(e.user_id));
        }
        if sats.contains(&e.user_id) {
            return Err(CpdError::invalid("request", format!("node {} is a GNSS satellite, not a user", e.user_id)));
        }
        if e.b < 1 || e.b > k || e.c < 1 || e.d < 1 {
            return Err(CpdError::invalid("request", format!("entry for user {} out of bounds", e.user_id)));
        }
        users.push(UserDemand { user: e.user_id, b: e.b, c: e.c, d: e.d });
    }

    let mut m = Model::new();
    let ks = k as usize;

    // Link variables only where visible.
    let mut x: BTreeMap<Pair, Vec<VarId>> = BTreeMap::new();
    let gnss_pairs: Vec<Pair> = sats
        .iter()
        .flat_map(|&i| sats.range(i + 1..).map(move |&j| (i, j)))
        .filter(|&(i, j)| y_prime.get(i, j))
        .collect();
    let mut user_pairs: Vec<Pair> = Vec::new();
    for u in &users {
        for &s in &sats {
            if y_prime.get(u.user, s) {
                user_pairs.push((u.user.min(s), u.user.max(s)));
            }
        }
    }
    for &(i, j) in gnss_pairs.iter().chain(&user_pairs) {
        let vars = (0..k).map(|t| m.add_binary(format!("x_{i}_{j}_{t}"), 0.0)).collect();
        x.insert((i, j), vars);
    }

    // Terminal limits per slot.
    let mut incident: BTreeMap<NodeId, Vec<Pair>> = BTreeMap::new();
    for &(i, j) in x.keys() {
        incident.entry(i).or_default().push((i, j));
        incident.entry(j).or_default().push((i, j));
    }
    for (&n, pairs) in &incident {
        let (fam, cap) = match users.iter().find(|u| u.user == n) {
            Some(u) => (family::USER_DEGREE, u.d as f64),
            None => (family::GNSS_DEGREE, 1.0),
        };
        for t in 0..ks {
            let coeffs = pairs.iter().map(|p| (x[p][t], 1.0)).collect();
            m.add_le(fam, format!("n{n}_k{t}"), coeffs, cap);
        }
    }

    // Ranging indicators and diversity floor.
    let mut l = BTreeMap::new();
    for &(i, j) in &gnss_pairs {
        let lv = m.add_binary(format!("l_{i}_{j}"), 0.0);
        let mut lo: Vec<(VarId, f64)> = x[&(i, j)].iter().map(|&v| (v, 1.0)).collect();
        lo.push((lv, -1.0));
        m.add_ge(family::RANGING_INDICATOR, format!("lo_{i}_{j}"), lo.clone(), 0.0);
        let hi: Vec<(VarId, f64)> = x[&(i, j)]
            .iter()
            .map(|&v| (v, 1.0))
            .chain(std::iter::once((lv, -(params.m_big as f64))))
            .collect();
        m.add_le(family::RANGING_INDICATOR, format!("hi_{i}_{j}"), hi, 0.0);
        l.insert((i, j), lv);
    }
    let mut l_min = BTreeMap::new();
    for &s in &sats {
        let mine: Vec<(VarId, f64)> = l.iter().filter(|((i, j), _)| *i == s || *j == s).map(|(_, &v)| (v, 1.0)).collect();
        let floor = match params.ranging_floor {
            RangingFloor::Strict => params.l_min,
            RangingFloor::ClampToVisible => params.l_min.min(mine.len() as u32),
        };
        if floor < params.l_min {
            log::warn!(
                "satellite {s} sees only {} GNSS partners; ranging floor lowered from {} to {floor}",
                mine.len(),
                params.l_min
            );
        }
        l_min.insert(s, floor);
        if floor > 0 {
            m.add_ge(family::RANGING_DIVERSITY, format!("s{s}"), mine, floor as f64);
        }
    }

    // Anchor contact indicators and the delay windows.
    // The tie-break term stays below `tie_span`; scaling the primary
    // objective by twice that lets the search stop within `tie_span` of the
    // bound and still be optimal on the primary term.
    // With user demand in the model the tie-break term slows the search by an
    // order of magnitude, so only demand-free superframes carry it.
    let tie_break = if us.is_empty() { params.tie_break } else { TieBreak::None };
    let tie_span = match tie_break {
        TieBreak::Links => ((sats.len() / 2) as u32 * k + 1) as f64,
        TieBreak::Ranging => (gnss_pairs.len() + 1) as f64,
        TieBreak::None => 0.0,
    };
    let primary_scale = if tie_span > 0.0 { 2.0 * tie_span } else { 1.0 };
    let tie_slack = if tie_span > 0.0 && params.penalty.fract() == 0.0 { tie_span - 1.0 } else { 0.0 };
    let mut psi = BTreeMap::new();
    for &n in &y_prime.non_anchors {
        let vars: Vec<VarId> = (0..k).map(|t| m.add_binary(format!("psi_{n}_{t}"), primary_scale)).collect();
        for t in 0..ks {
            let mut coeffs: Vec<(VarId, f64)> = y_prime
                .anchors
                .iter()
                .filter_map(|&a| x.get(&(n.min(a), n.max(a))).map(|v| (v[t], 1.0)))
                .collect();
            coeffs.push((vars[t], -1.0));
            m.add_eq(family::ANCHOR_CONTACT, format!("n{n}_k{t}"), coeffs, 0.0);
        }
        if k >= params.t_m {
            for w in 0..=(k - params.t_m) as usize {
                let coeffs = (w..w + params.t_m as usize).map(|t| (vars[t], 1.0)).collect();
                m.add_ge(family::DELAY_WINDOW, format!("n{n}_w{w}"), coeffs, 1.0);
            }
        }
        psi.insert(n, vars);
    }

    // User runs.
    let mut r = BTreeMap::new();
    let mut p = BTreeMap::new();
    for u in &users {
        let b = u.b as usize;
        let mut all_r = Vec::new();
        for &s in &sats {
            let key = (u.user.min(s), u.user.max(s));
            let Some(xs) = x.get(&key) else { continue };
            let starts: Vec<VarId> = (0..=ks - b).map(|t| m.add_binary(format!("r_{}_{s}_{t}", u.user), 0.0)).collect();
            for (t, &rv) in starts.iter().enumerate() {
                for dt in 0..b {
                    m.add_le(family::RUN_UPPER, format!("u{}_s{s}_k{t}_d{dt}", u.user), vec![(rv, 1.0), (xs[t + dt], -1.0)], 0.0);
                }
                let mut lower: Vec<(VarId, f64)> = (0..b).map(|dt| (xs[t + dt], -1.0)).collect();
                lower.push((rv, 1.0));
                m.add_ge(family::RUN_LOWER, format!("u{}_s{s}_k{t}", u.user), lower, 1.0 - b as f64);
            }
            for t in 0..starts.len().saturating_sub(1) {
                m.add_le(family::RUN_OVERRUN, format!("u{}_s{s}_k{t}", u.user), vec![(starts[t], 1.0), (starts[t + 1], 1.0)], 1.0);
            }
            all_r.extend(starts.iter().map(|&v| (v, 1.0)));
            r.insert((u.user, s), starts);
        }
        let pv = m.add_var(format!("p_{}", u.user), 0.0, u.c as f64, true, -params.penalty * primary_scale);
        all_r.push((pv, 1.0));
        m.add_eq(family::SERVICE_COUNT, format!("u{}", u.user), all_r, u.c as f64);
        p.insert(u.user, pv);
    }

    match tie_break {
        TieBreak::Links => {
            for pair in &gnss_pairs {
                for &v in &x[pair] {
                    m.vars[v.0].obj = 1.0;
                }
            }
        }
        TieBreak::Ranging => {
            for &v in l.values() {
                m.vars[v.0].obj = 1.0;
            }
        }
        TieBreak::None => {}
    }

    Ok(IlpModel {
        fsa: y_prime.fsa_index,
        superframe,
        k,
        params: params.clone(),
        milp: m,
        anchors: y_prime.anchors.clone(),
        non_anchors: y_prime.non_anchors.clone(),
        users,
        x,
        l,
        psi,
        r,
        p,
        l_min,
        primary_scale,
        tie_slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpSolution {
    pub status: Status,
    /// Σψ − C·Σp.
    pub objective: f64,
    pub throughput: u32,
    pub penalty_sum: u32,
    pub gap: f64,
    pub wall_time: Duration,
    pub backend: String,
    pub x: BTreeMap<Pair, Vec<bool>>,
    pub l: BTreeMap<Pair, bool>,
    pub psi: BTreeMap<NodeId, Vec<bool>>,
    pub r: BTreeMap<Pair, Vec<bool>>,
    pub p: BTreeMap<NodeId, u32>,
}

fn bit(values: &[f64], v: VarId) -> bool {
    values[v.0] > 0.5
}

/// Solves the model and re-verifies the result outside the solver.
pub fn solve(model: &IlpModel, backend: &dyn Backend, opts: &SolveOptions) -> Result<IlpSolution> {
    let opts = &SolveOptions { abs_gap: opts.abs_gap.max(model.tie_slack), ..*opts };
    let res = backend.solve(&model.milp, opts)?;
    match res.status {
        Status::Infeasible => {
            return Err(CpdError::Infeasible {
                fsa: model.fsa,
                superframe: model.superframe,
                families: probe_infeasibility(model, backend, opts),
            })
        }
        Status::TimeLimitNoIncumbent => {
            return Err(CpdError::NoIncumbent {
                fsa: model.fsa,
                superframe: model.superframe,
            })
        }
        Status::Optimal | Status::FeasibleWithGap => {}
    }
    let v = &res.values;
    let flags = |vars: &Vec<VarId>| vars.iter().map(|&id| bit(v, id)).collect::<Vec<bool>>();
    let mut p = BTreeMap::new();
    for (&u, &pv) in &model.p {
        let val = v.get(pv.0).copied().ok_or(CpdError::MissingDeficit(u))?;
        p.insert(u, val.round().max(0.0) as u32);
    }
    let psi: BTreeMap<NodeId, Vec<bool>> = model.psi.iter().map(|(&n, vars)| (n, flags(vars))).collect();
    let throughput = psi.values().flatten().filter(|&&b| b).count() as u32;
    let penalty_sum: u32 = p.values().sum();
    let sol = IlpSolution {
        status: res.status,
        objective: throughput as f64 - model.params.penalty * penalty_sum as f64,
        throughput,
        penalty_sum,
        gap: res.gap,
        wall_time: res.wall_time,
        backend: backend.name().to_string(),
        x: model.x.iter().map(|(&k, vars)| (k, flags(vars))).collect(),
        l: model.l.iter().map(|(&k, &id)| (k, bit(v, id))).collect(),
        psi,
        r: model.r.iter().map(|(&k, vars)| (k, flags(vars))).collect(),
        p,
    };
    let violations = check(model, &sol);
    if !violations.is_empty() {
        return Err(CpdError::Solver(format!(
            "solution failed independent re-check: {}",
            violations.join("; ")
        )));
    }
    Ok(sol)
}

/// Families whose removal alone makes an infeasible model feasible; both
/// structural families when neither does.
fn probe_infeasibility(model: &IlpModel, backend: &dyn Backend, opts: &SolveOptions) -> Vec<String> {
    let candidates = [family::RANGING_DIVERSITY, family::DELAY_WINDOW];
    let mut found = Vec::new();
    for fam in candidates {
        if !model.milp.rows.iter().any(|r| r.family == fam) {
            continue;
        }
        let mut relaxed = model.milp.clone();
        relaxed.rows.retain(|r| r.family != fam);
        if let Ok(res) = backend.solve(&relaxed, opts) {
            if matches!(res.status, Status::Optimal | Status::FeasibleWithGap) {
                found.push(fam.to_string());
            }
        }
    }
    if found.is_empty() {
        candidates.iter().filter(|f| model.milp.rows.iter().any(|r| &r.family == *f)).map(|f| f.to_string()).collect()
    } else {
        found
    }
}

/// Independent re-evaluation of every hard constraint from raw assignments.
pub fn check(model: &IlpModel, sol: &IlpSolution) -> Vec<String> {
    let mut out = Vec::new();
    let k = model.k as usize;
    for (&(i, j), xs) in &sol.x {
        if i >= j {
            out.push(format!("pair ({i},{j}) not in canonical order"));
        }
        if !model.x.contains_key(&(i, j)) && xs.iter().any(|&b| b) {
            out.push(format!("link ({i},{j}) between nodes that cannot see each other"));
        }
        if xs.len() != k {
            out.push(format!("pair ({i},{j}) has {} slots, expected {k}", xs.len()));
        }
    }
    let active = |i: NodeId, j: NodeId, t: usize| sol.x.get(&(i.min(j), i.max(j))).is_some_and(|v| v[t]);
    let mut degree: BTreeMap<(NodeId, usize), u32> = BTreeMap::new();
    for (&(i, j), xs) in &sol.x {
        for (t, &on) in xs.iter().enumerate() {
            if on {
                *degree.entry((i, t)).or_default() += 1;
                *degree.entry((j, t)).or_default() += 1;
            }
        }
    }
    for (&(n, t), &deg) in &degree {
        let cap = model.demand(n).map_or(1, |u| u.d);
        if !model.is_satellite(n) && model.demand(n).is_none() {
            out.push(format!("node {n} is neither a satellite nor a requesting user"));
        }
        if deg > cap {
            out.push(format!("node {n} has {deg} links in slot {t}, limit {cap}"));
        }
    }
    for s in model.satellites() {
        let partners = sol
            .x
            .iter()
            .filter(|((i, j), xs)| (*i == s && model.is_satellite(*j) || *j == s && model.is_satellite(*i)) && xs.iter().any(|&b| b))
            .count() as u32;
        let floor = model.l_min.get(&s).copied().unwrap_or(model.params.l_min);
        if partners < floor {
            out.push(format!("satellite {s} has {partners} ranging partners, floor {floor}"));
        }
    }
    for (&(i, j), &lv) in &sol.l {
        let total = sol.x.get(&(i, j)).map_or(0, |v| v.iter().filter(|&&b| b).count()) as u32;
        if lv != (total > 0) || total > model.params.m_big * lv as u32 {
            out.push(format!("ranging indicator ({i},{j}) inconsistent with {total} links"));
        }
    }
    for &n in &model.non_anchors {
        let row: Vec<bool> = (0..k).map(|t| model.anchors.iter().any(|&a| active(n, a, t))).collect();
        if sol.psi.get(&n) != Some(&row) {
            out.push(format!("anchor-contact row of {n} inconsistent with links"));
        }
        let tm = model.params.t_m as usize;
        if k >= tm {
            for w in 0..=k - tm {
                if !row[w..w + tm].iter().any(|&b| b) {
                    out.push(format!("non-anchor {n} has no anchor contact in slots {w}..{}", w + tm - 1));
                }
            }
        }
    }
    for u in &model.users {
        let b = u.b as usize;
        let mut served = 0u32;
        for s in model.satellites() {
            let Some(starts) = sol.r.get(&(u.user, s)) else { continue };
            for (t, &on) in starts.iter().enumerate() {
                let full = (t..t + b).all(|tt| active(u.user, s, tt));
                if on != full {
                    out.push(format!("run start ({}, {s}, {t}) = {on} but links cover {full}", u.user));
                }
                if on && starts.get(t + 1) == Some(&true) {
                    out.push(format!("run ({}, {s}) overruns at slot {t}", u.user));
                }
                served += on as u32;
            }
        }
        let p = sol.p.get(&u.user).copied();
        if p.map(|p| served + p) != Some(u.c) {
            out.push(format!("user {} served {served} runs with deficit {p:?}, requested {}", u.user, u.c));
        }
    }
    let throughput = sol.psi.values().flatten().filter(|&&b| b).count() as u32;
    let expected = throughput as f64 - model.params.penalty * sol.p.values().sum::<u32>() as f64;
    if (expected - sol.objective).abs() > 1e-6 {
        out.push(format!("objective {} does not match recomputed {expected}", sol.objective));
    }
    out
}

/// Slot-indexed contact list for the solved superframe, with runs and deficits.
pub fn extract_plan(model: &IlpModel, sol: &IlpSolution) -> Result<SuperframePlan> {
    if !matches!(sol.status, Status::Optimal | Status::FeasibleWithGap) {
        return Err(CpdError::NoSolution(format!("{:?}", sol.status)));
    }
    let mut plan = SuperframePlan::empty(model.fsa, model.superframe);
    for (&(i, j), xs) in &sol.x {
        let kind = if model.is_satellite(i) && model.is_satellite(j) {
            ContactKind::GnssGnss
        } else {
            ContactKind::GnssUser
        };
        for (t, &on) in xs.iter().enumerate() {
            if on {
                plan.contacts.push(Contact::new(t as u32, i, j, kind));
            }
        }
    }
    for (&(u, s), starts) in &sol.r {
        let b = model.demand(u).map_or(1, |d| d.b);
        for (t, &on) in starts.iter().enumerate() {
            if on {
                plan.runs.push(UserRun { user: u, sat: s, start: t as u32, len: b, receiver: None });
            }
        }
    }
    plan.deficits = sol.p.clone();
    plan.meta = Some(SolveMeta {
        scheduler: format!("ilp/{}", sol.backend),
        status: sol.status,
        objective: sol.objective,
        throughput: sol.throughput,
        gap: sol.gap,
        wall_time_s: sol.wall_time.as_secs_f64(),
        clamped_l_min: model.clamped(),
    });
    plan.sort();
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::exhaustive::Exhaustive;
    use crate::oracle::brute_force;
    use crate::service::RequestEntry;
    use proptest::prelude::*;

    fn params(l_min: u32, t_m: u32) -> IlpParams {
        IlpParams { l_min, t_m, m_big: 30, ..IlpParams::default() }
    }

    /// Satellites `0..sats` with the first `anchors` anchored, plus users after them.
    fn matrix(sats: usize, anchors: usize, users: usize) -> VisibilityMatrix {
        let mut vm = VisibilityMatrix::new(0, sats + users);
        for i in 0..sats {
            for j in i + 1..sats + users {
                vm.set(i, j, true);
            }
            if i < anchors {
                vm.anchors.insert(i);
            } else {
                vm.non_anchors.insert(i);
            }
        }
        vm
    }

    fn request(user: NodeId, b: u32, c: u32, d: u32) -> SuperframeRequest {
        SuperframeRequest { entries: vec![RequestEntry { user_id: user, b, c, d }] }
    }

    fn backends() -> Vec<Box<dyn Backend>> {
        let mut v: Vec<Box<dyn Backend>> = vec![Box::new(Exhaustive::default())];
        #[cfg(feature = "highs")]
        v.push(Box::new(crate::milp::highs::HighsBackend));
        v
    }

    #[test]
    fn two_anchors_one_non_anchor() {
        let m = build_model(&matrix(3, 2, 0), &SuperframeRequest::default(), &params(1, 3), 3, 0).unwrap();
        assert!(m.r.is_empty() && m.p.is_empty());
        for be in backends() {
            let sol = solve(&m, be.as_ref(), &SolveOptions::default()).unwrap();
            assert_eq!(sol.objective, 3.0, "{}", be.name());
            let plan = extract_plan(&m, &sol).unwrap();
            assert_eq!(plan.contacts.len(), 3);
            assert!(plan.contacts.iter().all(|c| c.kind == ContactKind::GnssGnss));
        }
    }

    #[test]
    fn user_run_coexists_with_full_service() {
        let m = build_model(&matrix(3, 2, 1), &request(3, 2, 1, 1), &params(1, 3), 3, 0).unwrap();
        for be in backends() {
            let sol = solve(&m, be.as_ref(), &SolveOptions::default()).unwrap();
            assert_eq!(sol.objective, 3.0, "{}", be.name());
            assert_eq!(sol.p[&3], 0);
            let plan = extract_plan(&m, &sol).unwrap();
            let run = plan.runs[0];
            // extra substandard contacts may remain; postprocessing strips them
            let user_slots: Vec<u32> = plan.contacts.iter().filter(|c| c.other(3) == Some(run.sat)).map(|c| c.slot).collect();
            assert_eq!(user_slots, vec![run.start, run.start + 1]);
        }
    }

    #[test]
    fn ranging_floor_above_neighbourhood_is_infeasible() {
        let m = build_model(&matrix(3, 2, 0), &SuperframeRequest::default(), &params(3, 3), 3, 0).unwrap();
        for be in backends() {
            match solve(&m, be.as_ref(), &SolveOptions::default()) {
                Err(CpdError::Infeasible { families, .. }) => assert_eq!(families, vec![family::RANGING_DIVERSITY.to_string()]),
                other => panic!("expected infeasible, got {other:?}"),
            }
        }
        let clamped = IlpParams { ranging_floor: RangingFloor::ClampToVisible, ..params(3, 3) };
        let m = build_model(&matrix(3, 2, 0), &SuperframeRequest::default(), &clamped, 3, 0).unwrap();
        assert_eq!(m.clamped().len(), 3);
        assert!(solve(&m, &Exhaustive::default(), &SolveOptions::default()).is_ok());
    }

    #[test]
    fn run_starts_respect_index_bound() {
        let m = build_model(&matrix(3, 2, 1), &request(3, 2, 1, 1), &params(1, 3), 3, 0).unwrap();
        assert!(m.r.values().all(|v| v.len() == 2));
        assert_eq!(m.r.len(), 3);
    }

    #[test]
    fn user_degree_bound_follows_terminals() {
        let m = build_model(&matrix(3, 2, 1), &request(3, 1, 1, 2), &params(1, 3), 3, 0).unwrap();
        let rows: Vec<&crate::milp::Row> = m.milp.rows.iter().filter(|r| r.family == family::USER_DEGREE).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.hi == 2.0));
    }

    #[test]
    fn empty_user_set_has_core_families() {
        let m = build_model(&matrix(6, 3, 0), &SuperframeRequest::default(), &params(2, 3), 20, 0).unwrap();
        let fams = m.milp.families();
        for f in [family::GNSS_DEGREE, family::RANGING_INDICATOR, family::RANGING_DIVERSITY, family::ANCHOR_CONTACT, family::DELAY_WINDOW] {
            assert!(fams.iter().any(|g| g == f), "{f} missing");
        }
        assert!(!fams.iter().any(|g| g == family::SERVICE_COUNT));
    }

    #[test]
    fn small_big_m_is_rejected() {
        let p = IlpParams { m_big: 20, ..params(1, 3) };
        assert!(matches!(
            build_model(&matrix(3, 2, 0), &SuperframeRequest::default(), &p, 20, 0),
            Err(CpdError::BigMTooSmall { .. })
        ));
    }

    #[test]
    fn checker_flags_tampered_solution() {
        let m = build_model(&matrix(3, 2, 0), &SuperframeRequest::default(), &params(1, 3), 3, 0).unwrap();
        let mut sol = solve(&m, &Exhaustive::default(), &SolveOptions::default()).unwrap();
        for xs in sol.x.values_mut() {
            xs.iter_mut().for_each(|b| *b = true);
        }
        assert!(!check(&m, &sol).is_empty());
    }

    #[derive(Debug, Clone)]
    struct Instance {
        vm: VisibilityMatrix,
        us: SuperframeRequest,
        params: IlpParams,
        k: u32,
    }

    fn instance() -> impl Strategy<Value = Instance> {
        (3usize..=5, 1u32..=4, any::<bool>()).prop_flat_map(|(n, k, with_user)| {
            let sats = if with_user { n - 1 } else { n };
            (
                Just((n, k, with_user, sats)),
                proptest::collection::vec(any::<bool>(), n * n),
                proptest::collection::vec(any::<bool>(), sats),
                (1..=k, 1u32..=2, 1u32..=2),
                (0u32..=2, 1u32..=3, prop_oneof![Just(1000.0), Just(0.5), Just(2.0)], any::<bool>()),
            )
        })
        .prop_map(|((n, k, with_user, sats), vis, anchor_bits, (b, c, d), (l_min, t_m, penalty, clamp))| {
            let mut vm = VisibilityMatrix::new(0, n);
            for i in 0..sats {
                for j in i + 1..n {
                    vm.set(i, j, vis[i * n + j]);
                }
                if anchor_bits[i] {
                    vm.anchors.insert(i);
                } else {
                    vm.non_anchors.insert(i);
                }
            }
            let us = if with_user { request(n - 1, b, c, d) } else { SuperframeRequest::default() };
            let ranging_floor = if clamp { RangingFloor::ClampToVisible } else { RangingFloor::Strict };
            Instance { vm, us, params: IlpParams { l_min, t_m, penalty, ranging_floor, ..params(0, 1) }, k }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

        #[test]
        fn solver_matches_enumeration(inst in instance()) {
            let truth = brute_force(&inst.vm, &inst.us, &inst.params, inst.k);
            let m = build_model(&inst.vm, &inst.us, &inst.params, inst.k, 0).unwrap();
            for be in backends() {
                match (solve(&m, be.as_ref(), &SolveOptions::default()), truth) {
                    (Ok(sol), Some(t)) => prop_assert!((sol.objective - t).abs() < 1e-6, "{}: {} vs {}", be.name(), sol.objective, t),
                    (Err(CpdError::Infeasible { .. }), None) => {}
                    (got, t) => prop_assert!(false, "{}: {:?} vs oracle {:?}", be.name(), got.map(|s| s.objective), t),
                }
            }
        }

        #[test]
        fn one_more_request_costs_at_most_one_penalty(inst in instance()) {
            prop_assume!(!inst.us.is_empty());
            let mut more = inst.us.clone();
            more.entries[0].c += 1;
            let be = Exhaustive::default();
            let a = build_model(&inst.vm, &inst.us, &inst.params, inst.k, 0).and_then(|m| solve(&m, &be, &SolveOptions::default()));
            let b = build_model(&inst.vm, &more, &inst.params, inst.k, 0).and_then(|m| solve(&m, &be, &SolveOptions::default()));
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(b.objective >= a.objective - inst.params.penalty - 1e-9);
                // throughput can only rise if the extra run is also served
                if b.throughput > a.throughput && b.penalty_sum > a.penalty_sum {
                    prop_assert!((b.objective - (a.objective - inst.params.penalty)).abs() < 1e-9);
                }
            }
        }
    }
}
