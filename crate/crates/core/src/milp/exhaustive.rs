//! Depth-first branch and bound with bound propagation, for small pure-integer models.
//!
//! Exact on any model whose variables are all integer with finite bounds. Meant
//! for oracle-scale instances and for builds without an external solver.

use std::time::{Duration, Instant};

use super::{Backend, MilpResult, Model, SolveOptions, Status};
use crate::error::{CpdError, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Exhaustive {
    /// Safety valve on explored nodes, in addition to the time limit.
    pub node_limit: u64,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Exhaustive { node_limit: 50_000_000 }
    }
}

impl Backend for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn version(&self) -> String {
        env!("CARGO_PKG_VERSION").to_string()
    }

    fn solve(&self, model: &Model, opts: &SolveOptions) -> Result<MilpResult> {
        for v in &model.vars {
            if !v.integer || !v.lb.is_finite() || !v.ub.is_finite() {
                return Err(CpdError::Solver(format!(
                    "exhaustive backend needs bounded integer variables; `{}` is not",
                    v.name
                )));
            }
        }
        let start = Instant::now();
        let mut s = Search::new(model, start + opts.time_limit, self.node_limit);
        s.slack = opts.abs_gap.max(EPS);
        let root_ok = s.propagate((0..model.rows.len()).collect());
        let root_bound = s.bound();
        if root_ok {
            s.dfs();
        }
        let wall_time = start.elapsed();
        Ok(match (s.best.take(), s.aborted) {
            (Some((obj, values)), false) => MilpResult {
                status: Status::Optimal,
                objective: obj,
                gap: 0.0,
                values,
                wall_time,
            },
            (Some((obj, values)), true) => MilpResult {
                status: Status::FeasibleWithGap,
                objective: obj,
                gap: relative_gap(root_bound, obj),
                values,
                wall_time,
            },
            (None, false) => empty(Status::Infeasible, wall_time),
            (None, true) => empty(Status::TimeLimitNoIncumbent, wall_time),
        })
    }
}

fn empty(status: Status, wall_time: Duration) -> MilpResult {
    MilpResult {
        status,
        objective: f64::NAN,
        gap: f64::INFINITY,
        values: vec![],
        wall_time,
    }
}

fn relative_gap(bound: f64, obj: f64) -> f64 {
    ((bound - obj) / obj.abs().max(1.0)).max(0.0)
}

struct Search<'a> {
    m: &'a Model,
    lb: Vec<f64>,
    ub: Vec<f64>,
    var_rows: Vec<Vec<usize>>,
    trail: Vec<(usize, f64, f64)>,
    best: Option<(f64, Vec<f64>)>,
    deadline: Instant,
    nodes: u64,
    node_limit: u64,
    /// Prune subtrees that cannot beat the incumbent by more than this.
    slack: f64,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn new(m: &'a Model, deadline: Instant, node_limit: u64) -> Self {
        let mut var_rows = vec![Vec::new(); m.vars.len()];
        for (r, row) in m.rows.iter().enumerate() {
            for (v, _) in &row.coeffs {
                var_rows[v.0].push(r);
            }
        }
        Search {
            m,
            lb: m.vars.iter().map(|v| v.lb.ceil()).collect(),
            ub: m.vars.iter().map(|v| v.ub.floor()).collect(),
            var_rows,
            trail: Vec::new(),
            best: None,
            deadline,
            nodes: 0,
            node_limit,
            slack: EPS,
            aborted: false,
        }
    }

    fn bound(&self) -> f64 {
        self.m.obj_offset
            + self
                .m
                .vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.obj * self.lb[i]).max(v.obj * self.ub[i]))
                .sum::<f64>()
    }

    fn set(&mut self, v: usize, lb: f64, ub: f64) {
        self.trail.push((v, self.lb[v], self.ub[v]));
        self.lb[v] = lb;
        self.ub[v] = ub;
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, lb, ub) = self.trail.pop().unwrap();
            self.lb[v] = lb;
            self.ub[v] = ub;
        }
    }

    /// Activity-based bound tightening to a fixed point. False on a conflict.
    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; self.m.rows.len()];
        for &r in &queue {
            queued[r] = true;
        }
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &self.m.rows[r];
            let (mut min_act, mut max_act) = (0.0, 0.0);
            for &(v, a) in &row.coeffs {
                let (lo, hi) = (a * self.lb[v.0], a * self.ub[v.0]);
                min_act += lo.min(hi);
                max_act += lo.max(hi);
            }
            if min_act > row.hi + EPS || max_act < row.lo - EPS {
                return false;
            }
            for &(v, a) in &row.coeffs {
                let v = v.0;
                if a == 0.0 {
                    continue;
                }
                let (lo_c, hi_c) = {
                    let (p, q) = (a * self.lb[v], a * self.ub[v]);
                    (p.min(q), p.max(q))
                };
                let (mut nlb, mut nub) = (self.lb[v], self.ub[v]);
                if row.hi.is_finite() {
                    let room = row.hi - (min_act - lo_c);
                    if a > 0.0 {
                        nub = nub.min((room / a + EPS).floor());
                    } else {
                        nlb = nlb.max((room / a - EPS).ceil());
                    }
                }
                if row.lo.is_finite() {
                    let need = row.lo - (max_act - hi_c);
                    if a > 0.0 {
                        nlb = nlb.max((need / a - EPS).ceil());
                    } else {
                        nub = nub.min((need / a + EPS).floor());
                    }
                }
                if nlb > nub {
                    return false;
                }
                if nlb != self.lb[v] || nub != self.ub[v] {
                    self.set(v, nlb, nub);
                    for &r2 in &self.var_rows[v] {
                        if !queued[r2] {
                            queued[r2] = true;
                            queue.push(r2);
                        }
                    }
                }
            }
        }
        true
    }

    fn dfs(&mut self) {
        self.nodes += 1;
        if self.nodes % 1024 == 0 && Instant::now() > self.deadline || self.nodes > self.node_limit {
            self.aborted = true;
        }
        if self.aborted {
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.bound() <= best + self.slack {
                return;
            }
        }
        let Some(v) = (0..self.lb.len()).find(|&i| self.lb[i] < self.ub[i]) else {
            let values = self.lb.clone();
            let obj = self.m.objective(&values);
            if self.best.as_ref().map_or(true, |(b, _)| obj > b + EPS) {
                self.best = Some((obj, values));
            }
            return;
        };
        let (lo, hi) = (self.lb[v] as i64, self.ub[v] as i64);
        let order: Vec<i64> = if self.m.vars[v].obj >= 0.0 {
            (lo..=hi).rev().collect()
        } else {
            (lo..=hi).collect()
        };
        for val in order {
            let mark = self.trail.len();
            self.set(v, val as f64, val as f64);
            if self.propagate(self.var_rows[v].clone()) {
                self.dfs();
            }
            self.undo(mark);
            if self.aborted {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut m = Model::new();
        let a = m.add_var("a", 0.0, 3.0, true, 5.0);
        let b = m.add_var("b", 0.0, 3.0, true, 4.0);
        let c = m.add_var("c", 0.0, 3.0, true, 3.0);
        m.add_le("k", "r1", vec![(a, 2.0), (b, 3.0), (c, 1.0)], 5.0);
        m.add_le("k", "r2", vec![(a, 4.0), (b, 1.0), (c, 2.0)], 11.0);
        m.add_le("k", "r3", vec![(a, 3.0), (b, 4.0), (c, 2.0)], 8.0);
        let r = Exhaustive::default().solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        // brute force
        let mut best = f64::MIN;
        for x in 0..=3 {
            for y in 0..=3 {
                for z in 0..=3 {
                    let v = [x as f64, y as f64, z as f64];
                    if m.violations(&v, 1e-9).is_empty() {
                        best = best.max(m.objective(&v));
                    }
                }
            }
        }
        assert_eq!(r.objective, best);
        assert!(m.violations(&r.values, 1e-9).is_empty());
    }

    #[test]
    fn infeasible_and_unbounded_inputs() {
        let mut m = Model::new();
        let a = m.add_binary("a", 1.0);
        m.add_ge("f", "r", vec![(a, 1.0)], 2.0);
        let r = Exhaustive::default().solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, Status::Infeasible);

        let mut m = Model::new();
        m.add_var("x", 0.0, f64::INFINITY, true, 1.0);
        assert!(Exhaustive::default().solve(&m, &SolveOptions::default()).is_err());
    }
}
