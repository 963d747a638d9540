//! FSA-level service procedure: demand derivation, the flag state machine,
//! postprocessing of user runs and horizon assembly.

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpd;
use crate::error::{CpdError, Result};
use crate::milp::{Backend, SolveOptions};
use crate::plan::{ContactKind, HorizonPlan, SuperframePlan, UserRun};
use crate::scenario::{IlpParams, NodeId, Scenario, UserRequirement};
use crate::visibility::{self, VisibilityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestEntry {
    pub user_id: NodeId,
    pub b: u32,
    /// Runs still wanted.
    pub c: u32,
    pub d: u32,
}

/// User demand for one FSA state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsaRequest {
    pub entries: Vec<RequestEntry>,
}

/// Residual user demand carried from one superframe to the next.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperframeRequest {
    pub entries: Vec<RequestEntry>,
}

impl SuperframeRequest {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, user: NodeId) -> Option<&RequestEntry> {
        self.entries.iter().find(|e| e.user_id == user)
    }
}

impl From<FsaRequest> for SuperframeRequest {
    fn from(f: FsaRequest) -> Self {
        SuperframeRequest { entries: f.entries }
    }
}

/// Users whose occurrence interval divides `fsa_index`.
pub fn derive_fsa_request(reqs: &[UserRequirement], fsa_index: u32) -> FsaRequest {
    FsaRequest {
        entries: reqs
            .iter()
            .filter(|r| r.a > 0 && fsa_index % r.a == 0)
            .map(|r| RequestEntry { user_id: r.user_id, b: r.b, c: r.c, d: r.d })
            .collect(),
    }
}

/// Sets each entry to its deficit and drops satisfied entries.
pub fn update_request(us: &SuperframeRequest, deficits: &BTreeMap<NodeId, u32>) -> Result<SuperframeRequest> {
    let mut out = Vec::new();
    for e in &us.entries {
        let p = *deficits.get(&e.user_id).ok_or(CpdError::MissingDeficit(e.user_id))?;
        if p > 0 {
            out.push(RequestEntry { c: p.min(e.c), ..*e });
        }
    }
    Ok(SuperframeRequest { entries: out })
}

/// Drops every GNSS–user contact slot not covered by a standard run.
pub fn strip_substandard(plan: &SuperframePlan, us: &SuperframeRequest) -> SuperframePlan {
    let mut out = plan.clone();
    out.runs.retain(|r| us.get(r.user).is_some_and(|e| e.b == r.len));
    let runs = out.runs.clone();
    out.contacts.retain(|c| {
        c.kind == ContactKind::GnssGnss
            || runs
                .iter()
                .any(|r| r.covers(c.slot) && c.involves(r.user) && c.involves(r.sat))
    });
    out
}

/// Everything a scheduler sees for one superframe.
pub struct SuperframeContext<'a> {
    pub scenario: &'a Scenario,
    pub raw: &'a VisibilityMatrix,
    pub y_prime: &'a VisibilityMatrix,
    pub request: &'a SuperframeRequest,
    pub superframe: u32,
}

pub trait Scheduler: Send + Sync {
    fn name(&self) -> String;

    /// Rejects demand this scheduler cannot serve, before any FSA runs.
    fn check_capability(&self, _reqs: &[UserRequirement]) -> Result<()> {
        Ok(())
    }

    fn schedule(&self, ctx: &SuperframeContext<'_>) -> Result<SuperframePlan>;
}

pub struct IlpScheduler {
    pub backend: Box<dyn Backend>,
    pub opts: SolveOptions,
    /// Overrides the scenario's ILP parameters when set.
    pub params: Option<IlpParams>,
}

impl IlpScheduler {
    pub fn new(backend: Box<dyn Backend>, opts: SolveOptions) -> Self {
        IlpScheduler { backend, opts, params: None }
    }
}

impl Scheduler for IlpScheduler {
    fn name(&self) -> String {
        format!("ilp/{}", self.backend.name())
    }

    fn schedule(&self, ctx: &SuperframeContext<'_>) -> Result<SuperframePlan> {
        let params = self.params.as_ref().unwrap_or(&ctx.scenario.ilp);
        let k = ctx.scenario.grid.slots_per_superframe();
        let model = cpd::build_model(ctx.y_prime, ctx.request, params, k, ctx.superframe)?;
        let sol = cpd::solve(&model, self.backend.as_ref(), &self.opts)?;
        cpd::extract_plan(&model, &sol)
    }
}

/// Whether a user takes an offered run, and through which member.
pub trait AcceptancePolicy: Send + Sync {
    /// `None` declines; `Some(member)` accepts, `member` set for logical users.
    fn accept(&self, run: &UserRun, req: &UserRequirement, raw: &VisibilityMatrix) -> Option<Option<NodeId>>;
}

/// Accepts every offer; a logical user receives on its lowest-id member that
/// sees the serving satellite.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl AcceptancePolicy for AcceptAll {
    fn accept(&self, run: &UserRun, req: &UserRequirement, raw: &VisibilityMatrix) -> Option<Option<NodeId>> {
        if !req.logical {
            return Some(None);
        }
        let member = req.member_ids.iter().copied().filter(|&m| raw.get(m, run.sat)).min();
        member.map(Some)
    }
}

fn apply_policy(plan: &mut SuperframePlan, scenario: &Scenario, raw: &VisibilityMatrix, policy: &dyn AcceptancePolicy) {
    let mut declined = Vec::new();
    for run in plan.runs.iter_mut() {
        let Some(req) = scenario.requirement(run.user) else { continue };
        match policy.accept(run, req, raw) {
            Some(member) => run.receiver = member,
            None => declined.push(*run),
        }
    }
    if declined.is_empty() {
        return;
    }
    plan.runs.retain(|r| !declined.contains(r));
    for r in &declined {
        *plan.deficits.entry(r.user).or_default() += 1;
    }
    plan.contacts.retain(|c| {
        !declined.iter().any(|r| r.covers(c.slot) && c.involves(r.user) && c.involves(r.sat))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsaOutcome {
    pub fsa: u32,
    pub plans: Vec<SuperframePlan>,
    pub solves: u32,
    pub anchors: usize,
    /// Runs asked for, per user, in this FSA.
    pub requested: BTreeMap<NodeId, u32>,
    /// Standard runs delivered, per user.
    pub delivered: BTreeMap<NodeId, u32>,
    /// Demand left when the FSA ended.
    pub unmet: BTreeMap<NodeId, u32>,
}

/// Runs the superframe loop over one FSA state.
pub fn run_fsa(
    scenario: &Scenario,
    fsa_index: u32,
    scheduler: &dyn Scheduler,
    policy: &dyn AcceptancePolicy,
) -> Result<FsaOutcome> {
    let raw = visibility::fsa_visibility(scenario, fsa_index);
    let y_prime = visibility::preprocess_users(&raw, &scenario.requirements, scenario)?;
    let uf = derive_fsa_request(&scenario.requirements, fsa_index);
    let requested = uf.entries.iter().map(|e| (e.user_id, e.c)).collect();
    let mut delivered: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut us: SuperframeRequest = uf.into();
    let mut flag = if us.is_empty() { 1 } else { 0 };
    let mut cached: Option<SuperframePlan> = None;
    let mut plans = Vec::new();
    let mut solves = 0;
    let none = SuperframeRequest::default();

    for sf in 0..scenario.grid.superframes_per_fsa() {
        let plan = match flag {
            0 => {
                let ctx = SuperframeContext { scenario, raw: &raw, y_prime: &y_prime, request: &us, superframe: sf };
                let mut plan = strip_substandard(&scheduler.schedule(&ctx)?, &us);
                solves += 1;
                apply_policy(&mut plan, scenario, &raw, policy);
                for r in &plan.runs {
                    *delivered.entry(r.user).or_default() += 1;
                }
                us = update_request(&us, &plan.deficits)?;
                if us.is_empty() {
                    flag = 1;
                }
                plan
            }
            1 => {
                let ctx = SuperframeContext { scenario, raw: &raw, y_prime: &y_prime, request: &none, superframe: sf };
                let plan = scheduler.schedule(&ctx)?;
                solves += 1;
                cached = Some(plan.clone());
                flag = 2;
                plan
            }
            _ => cached.as_ref().expect("flag 2 follows a cached plan").replicate(sf),
        };
        plans.push(plan);
    }
    let unmet: BTreeMap<NodeId, u32> = us.entries.iter().map(|e| (e.user_id, e.c)).collect();
    if !unmet.is_empty() {
        log::warn!("fsa {fsa_index}: demand left unmet at state end: {unmet:?}");
    }
    Ok(FsaOutcome {
        fsa: fsa_index,
        plans,
        solves,
        anchors: raw.anchors.len(),
        requested,
        delivered,
        unmet,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonOutcome {
    pub plan: HorizonPlan,
    pub fsas: Vec<FsaOutcome>,
}

impl HorizonOutcome {
    pub fn solve_count(&self) -> u32 {
        self.fsas.iter().map(|f| f.solves).sum()
    }
}

/// Runs every FSA in `fsas`, in parallel, and concatenates the plans.
pub fn run_horizon(
    scenario: &Scenario,
    fsas: Range<u32>,
    scheduler: &dyn Scheduler,
    policy: &dyn AcceptancePolicy,
) -> Result<HorizonOutcome> {
    if fsas.end > scenario.grid.horizon_fsa_count || fsas.start >= fsas.end {
        return Err(CpdError::invalid(
            "fsa",
            format!("range {}..{} outside horizon of {} states", fsas.start, fsas.end, scenario.grid.horizon_fsa_count),
        ));
    }
    scheduler.check_capability(&scenario.requirements)?;
    let results: Vec<Result<FsaOutcome>> = fsas
        .clone()
        .into_par_iter()
        .map(|f| run_fsa(scenario, f, scheduler, policy))
        .collect();
    let mut outcomes = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => errors.push(e),
        }
    }
    if let Some(first) = errors.into_iter().reduce(|a, _| a) {
        let count = fsas.len() - outcomes.len();
        return Err(if count == 1 { first } else { CpdError::Horizon { count, first: Box::new(first) } });
    }
    let plan = HorizonPlan {
        scheduler: scheduler.name(),
        superframes: outcomes.iter().flat_map(|o| o.plans.iter().cloned()).collect(),
    };
    Ok(HorizonOutcome { plan, fsas: outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::Contact;

    #[test]
    fn occurrence_rule() {
        let reqs = [UserRequirement::new(7, [2, 3, 4, 1])];
        assert_eq!(
            derive_fsa_request(&reqs, 0).entries,
            vec![RequestEntry { user_id: 7, b: 3, c: 4, d: 1 }]
        );
        assert!(derive_fsa_request(&reqs, 1).entries.is_empty());
        assert_eq!(derive_fsa_request(&reqs, 2).entries.len(), 1);
        let every_third = [UserRequirement::new(1, [3, 2, 4, 1])];
        let hits: Vec<u32> = (0..9).filter(|&f| !derive_fsa_request(&every_third, f).entries.is_empty()).collect();
        assert_eq!(hits, vec![0, 3, 6]);
    }

    #[test]
    fn request_update() {
        let us = SuperframeRequest { entries: vec![RequestEntry { user_id: 7, b: 3, c: 4, d: 1 }] };
        let two = BTreeMap::from([(7, 2)]);
        assert_eq!(update_request(&us, &two).unwrap().entries[0].c, 2);
        assert!(update_request(&us, &BTreeMap::from([(7, 0)])).unwrap().is_empty());
        assert_eq!(update_request(&us, &BTreeMap::from([(7, 4)])).unwrap(), us);
        assert!(matches!(update_request(&us, &BTreeMap::new()), Err(CpdError::MissingDeficit(7))));
    }

    fn plan_with(contacts: Vec<Contact>, runs: Vec<UserRun>) -> SuperframePlan {
        let mut p = SuperframePlan::empty(0, 0);
        p.contacts = contacts;
        p.runs = runs;
        p
    }

    #[test]
    fn substandard_contacts_are_removed() {
        let us = SuperframeRequest { entries: vec![RequestEntry { user_id: 9, b: 3, c: 3, d: 1 }] };
        let short = plan_with(
            vec![
                Contact::new(4, 2, 9, ContactKind::GnssUser),
                Contact::new(5, 2, 9, ContactKind::GnssUser),
                Contact::new(5, 0, 1, ContactKind::GnssGnss),
            ],
            vec![],
        );
        let out = strip_substandard(&short, &us);
        assert_eq!(out.contacts, vec![Contact::new(5, 0, 1, ContactKind::GnssGnss)]);

        let run = UserRun { user: 9, sat: 2, start: 4, len: 3, receiver: None };
        let full = plan_with((4..7).map(|t| Contact::new(t, 2, 9, ContactKind::GnssUser)).collect(), vec![run]);
        let out = strip_substandard(&full, &us);
        assert_eq!(out, full);
        assert_eq!(strip_substandard(&out, &us), out);

        let internal = plan_with(vec![Contact::new(0, 0, 1, ContactKind::GnssGnss)], vec![]);
        assert_eq!(strip_substandard(&internal, &us), internal);
    }
}
