//! HiGHS branch-and-cut backend.

use std::num::NonZeroU32;
use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use super::{Backend, MilpResult, Model, SolveOptions, Status};
use crate::error::{CpdError, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn version(&self) -> String {
        "HiGHS (highs crate 2.4)".into()
    }

    fn solve(&self, model: &Model, opts: &SolveOptions) -> Result<MilpResult> {
        let start = Instant::now();
        let mut pb = RowProblem::default();
        let cols: Vec<_> = model
            .vars
            .iter()
            .map(|v| {
                if v.integer {
                    pb.add_integer_column(v.obj, v.lb..=v.ub)
                } else {
                    pb.add_column(v.obj, v.lb..=v.ub)
                }
            })
            .collect();
        for r in &model.rows {
            let factors: Vec<_> = r.coeffs.iter().map(|(v, a)| (cols[v.0], *a)).collect();
            match (r.lo.is_finite(), r.hi.is_finite()) {
                (true, true) => pb.add_row(r.lo..=r.hi, factors),
                (true, false) => pb.add_row(r.lo.., factors),
                (false, true) => pb.add_row(..=r.hi, factors),
                (false, false) => {}
            }
        }
        let mut m = pb.optimise(Sense::Maximise);
        m.make_quiet();
        m.set_option("time_limit", opts.time_limit.as_secs_f64());
        m.set_option("mip_rel_gap", opts.gap);
        m.set_option("mip_abs_gap", opts.abs_gap.max(1e-6));
        m.set_option("random_seed", opts.seed as i32);
        if let Some(t) = opts.threads.and_then(NonZeroU32::new) {
            m.set_threads(t);
        }
        let solved = m.try_solve().map_err(|e| CpdError::Solver(format!("highs: {e:?}")))?;
        let status = solved.status();
        let has_primal = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let values = || solved.get_solution().columns().to_vec();
        let result = |status, gap: f64, values: Vec<f64>| {
            let objective = if values.is_empty() { f64::NAN } else { model.objective(&values) };
            MilpResult {
                status,
                objective,
                gap,
                values,
                wall_time: start.elapsed(),
            }
        };
        Ok(match status {
            HighsModelStatus::Optimal => result(Status::Optimal, solved.mip_gap().min(1.0).max(0.0), values()),
            HighsModelStatus::ModelEmpty => result(Status::Optimal, 0.0, vec![0.0; model.vars.len()]),
            HighsModelStatus::Infeasible => result(Status::Infeasible, f64::INFINITY, vec![]),
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit => {
                if has_primal {
                    result(Status::FeasibleWithGap, solved.mip_gap(), values())
                } else {
                    result(Status::TimeLimitNoIncumbent, f64::INFINITY, vec![])
                }
            }
            other => return Err(CpdError::Solver(format!("highs returned {other:?}"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::exhaustive::Exhaustive;

    #[test]
    fn agrees_with_exhaustive_on_a_knapsack() {
        let mut m = Model::new();
        let a = m.add_var("a", 0.0, 3.0, true, 5.0);
        let b = m.add_var("b", 0.0, 3.0, true, 4.0);
        let c = m.add_binary("c", 3.0);
        m.add_le("k", "r1", vec![(a, 2.0), (b, 3.0), (c, 1.0)], 5.0);
        m.add_row("k", "r2", vec![(a, 3.0), (b, 4.0), (c, 2.0)], 1.0, 8.0);
        let h = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        let e = Exhaustive::default().solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(h.status, Status::Optimal);
        assert!((h.objective - e.objective).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible() {
        let mut m = Model::new();
        let a = m.add_binary("a", 1.0);
        let b = m.add_binary("b", 1.0);
        m.add_ge("f", "r", vec![(a, 1.0), (b, 1.0)], 3.0);
        let h = HighsBackend.solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(h.status, Status::Infeasible);
    }
}
