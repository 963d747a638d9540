//! Slot-indexed contact plans and their CSV / JSON forms.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CpdError, Result};
use crate::milp::Status;
use crate::scenario::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContactKind {
    GnssGnss,
    GnssUser,
}

impl ContactKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactKind::GnssGnss => "gnss-gnss",
            ContactKind::GnssUser => "gnss-user",
        }
    }
}

/// One slot of link between `a` and `b` (`a < b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contact {
    pub slot: u32,
    pub a: NodeId,
    pub b: NodeId,
    pub kind: ContactKind,
}

impl Contact {
    pub fn new(slot: u32, i: NodeId, j: NodeId, kind: ContactKind) -> Self {
        Contact {
            slot,
            a: i.min(j),
            b: i.max(j),
            kind,
        }
    }

    pub fn involves(&self, n: NodeId) -> bool {
        self.a == n || self.b == n
    }

    pub fn other(&self, n: NodeId) -> Option<NodeId> {
        if self.a == n {
            Some(self.b)
        } else if self.b == n {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A standard user run: `len` consecutive slots from `start` between `sat` and `user`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserRun {
    pub user: NodeId,
    pub sat: NodeId,
    pub start: u32,
    pub len: u32,
    /// Member node that takes the link, for logical users.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receiver: Option<NodeId>,
}

impl UserRun {
    pub fn covers(&self, slot: u32) -> bool {
        slot >= self.start && slot < self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub scheduler: String,
    pub status: Status,
    /// Throughput minus weighted penalty.
    pub objective: f64,
    pub throughput: u32,
    pub gap: f64,
    pub wall_time_s: f64,
    /// Satellites whose ranging-diversity floor was lowered to their visible count.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clamped_l_min: BTreeMap<NodeId, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperframePlan {
    pub fsa: u32,
    pub superframe: u32,
    pub contacts: Vec<Contact>,
    pub runs: Vec<UserRun>,
    /// Unserved runs per requesting user after this superframe.
    pub deficits: BTreeMap<NodeId, u32>,
    /// Present when this superframe was solved; absent when replicated.
    pub meta: Option<SolveMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicated_from: Option<u32>,
}

impl SuperframePlan {
    pub fn empty(fsa: u32, superframe: u32) -> Self {
        SuperframePlan {
            fsa,
            superframe,
            contacts: vec![],
            runs: vec![],
            deficits: BTreeMap::new(),
            meta: None,
            replicated_from: None,
        }
    }

    pub fn solved(&self) -> bool {
        self.meta.is_some()
    }

    /// Copy of this plan carried into superframe `superframe`, without user service.
    pub fn replicate(&self, superframe: u32) -> Self {
        SuperframePlan {
            superframe,
            meta: None,
            replicated_from: Some(self.superframe),
            ..self.clone()
        }
    }

    pub fn contacts_at(&self, slot: u32) -> impl Iterator<Item = &Contact> {
        self.contacts.iter().filter(move |c| c.slot == slot)
    }

    pub fn sort(&mut self) {
        self.contacts.sort();
        self.runs.sort();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HorizonPlan {
    pub scheduler: String,
    pub superframes: Vec<SuperframePlan>,
}

impl HorizonPlan {
    pub fn solve_count(&self) -> usize {
        self.superframes.iter().filter(|p| p.solved()).count()
    }

    pub fn fsa(&self, fsa: u32) -> impl Iterator<Item = &SuperframePlan> {
        self.superframes.iter().filter(move |p| p.fsa == fsa)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| CpdError::PlanCsv(e.to_string());
        w.write_record(["fsa", "superframe", "slot", "node_a", "node_b", "kind"]).map_err(err)?;
        for sf in &self.superframes {
            for c in &sf.contacts {
                w.write_record([
                    sf.fsa.to_string(),
                    sf.superframe.to_string(),
                    c.slot.to_string(),
                    c.a.to_string(),
                    c.b.to_string(),
                    c.kind.as_str().to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| CpdError::PlanCsv(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// One row of a plan CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlanRow {
    pub fsa: u32,
    pub superframe: u32,
    pub slot: u32,
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub kind: ContactKind,
}

/// Parses a plan CSV with the `fsa,superframe,slot,node_a,node_b,kind` header.
pub fn parse_plan_csv(text: &str) -> Result<Vec<PlanRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CpdError::PlanCsv(e.to_string()))?.clone();
    let want = ["fsa", "superframe", "slot", "node_a", "node_b", "kind"];
    if header.iter().collect::<Vec<_>>() != want {
        return Err(CpdError::PlanCsv(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<PlanRow>().enumerate() {
        let row = rec.map_err(|e| CpdError::PlanCsv(format!("row {}: {e}", i + 1)))?;
        if row.node_a >= row.node_b {
            return Err(CpdError::PlanCsv(format!("row {}: node_a must be below node_b", i + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HorizonPlan {
        let mut p = SuperframePlan::empty(0, 0);
        p.contacts = vec![
            Contact::new(0, 3, 1, ContactKind::GnssGnss),
            Contact::new(1, 2, 40, ContactKind::GnssUser),
        ];
        let q = p.replicate(1);
        HorizonPlan {
            scheduler: "ilp".into(),
            superframes: vec![p, q],
        }
    }

    #[test]
    fn csv_round_trip() {
        let h = sample();
        let text = h.to_csv_string();
        assert!(text.starts_with("fsa,superframe,slot,node_a,node_b,kind\n0,0,0,1,3,gnss-gnss\n"));
        let rows = parse_plan_csv(&text).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3], PlanRow { fsa: 0, superframe: 1, slot: 1, node_a: 2, node_b: 40, kind: ContactKind::GnssUser });
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(parse_plan_csv("a,b\n1,2\n").is_err());
        assert!(parse_plan_csv("fsa,superframe,slot,node_a,node_b,kind\n0,0,0,3,1,gnss-gnss\n").is_err());
        assert!(parse_plan_csv("fsa,superframe,slot,node_a,node_b,kind\n0,0,0,1,3,laser\n").is_err());
        assert!(parse_plan_csv("fsa,superframe,slot,node_a,node_b,kind\n").unwrap().is_empty());
    }

    #[test]
    fn json_mirror_round_trips() {
        let h = sample();
        let back: HorizonPlan = serde_json::from_str(&h.to_json()).unwrap();
        assert_eq!(back, h);
        assert_eq!(h.solve_count(), 0);
        assert_eq!(h.superframes[1].replicated_from, Some(0));
    }
}
