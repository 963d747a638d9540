//! Exhaustive enumeration of per-slot link sets for tiny superframes.
//!
//! Independent of the model builder: it evaluates the link rules directly on
//! every combination, so it serves as ground truth for the ILP backends.

use std::collections::BTreeSet;

use crate::scenario::{IlpParams, NodeId, RangingFloor};
use crate::service::SuperframeRequest;
use crate::visibility::VisibilityMatrix;

/// Upper bound on enumerated combinations before giving up.
pub const MAX_COMBINATIONS: u64 = 20_000_000;

/// Best `Σψ − C·Σp` over all link assignments, or `None` when infeasible.
/// Panics when the instance is too large to enumerate.
pub fn brute_force(y_prime: &VisibilityMatrix, us: &SuperframeRequest, params: &IlpParams, k: u32) -> Option<f64> {
    let sats: BTreeSet<NodeId> = y_prime.satellites().collect();
    let cap = |n: NodeId| us.get(n).map_or(1, |e| e.d);
    let mut pairs = Vec::new();
    for &i in &sats {
        for &j in sats.range(i + 1..) {
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

    // All edge subsets respecting per-node terminal limits.
    let mut configs: Vec<u64> = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let mut deg = vec![0u32; y_prime.len()];
        let ok = pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).all(|(_, &(i, j))| {
            deg[i] += 1;
            deg[j] += 1;
            deg[i] <= cap(i) && deg[j] <= cap(j)
        });
        if ok {
            configs.push(mask);
        }
    }
    let total = (configs.len() as u64).checked_pow(k).unwrap_or(u64::MAX);
    assert!(total <= MAX_COMBINATIONS, "oracle instance too large: {total} combinations");

    let floor = |s: NodeId| {
        let visible = pairs.iter().filter(|&&(i, j)| (i == s || j == s) && sats.contains(&i) && sats.contains(&j)).count() as u32;
        match params.ranging_floor {
            RangingFloor::Strict => params.l_min,
            RangingFloor::ClampToVisible => params.l_min.min(visible),
        }
    };
    let floors: Vec<(NodeId, u32)> = sats.iter().map(|&s| (s, floor(s))).collect();

    let mut best: Option<f64> = None;
    let mut choice = vec![0usize; k as usize];
    loop {
        let slots: Vec<u64> = choice.iter().map(|&c| configs[c]).collect();
        if let Some(v) = evaluate(&slots, &pairs, y_prime, us, params, &floors) {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == choice.len() {
                return best;
            }
            choice[d] += 1;
            if choice[d] < configs.len() {
                break;
            }
            choice[d] = 0;
            d += 1;
        }
    }
}

fn evaluate(
    slots: &[u64],
    pairs: &[(NodeId, NodeId)],
    y: &VisibilityMatrix,
    us: &SuperframeRequest,
    params: &IlpParams,
    floors: &[(NodeId, u32)],
) -> Option<f64> {
    let on = |t: usize, p: usize| slots[t] >> p & 1 == 1;
    let linked = |t: usize, a: NodeId, b: NodeId| {
        pairs.iter().position(|&q| q == (a.min(b), a.max(b))).is_some_and(|p| on(t, p))
    };
    let k = slots.len();

    for &(s, floor) in floors {
        let partners = pairs
            .iter()
            .enumerate()
            .filter(|&(p, &(i, j))| {
                (i == s || j == s) && y.is_satellite(i) && y.is_satellite(j) && (0..k).any(|t| on(t, p))
            })
            .count() as u32;
        if partners < floor {
            return None;
        }
    }

    let mut throughput = 0u32;
    for &n in &y.non_anchors {
        let row: Vec<bool> = (0..k).map(|t| y.anchors.iter().any(|&a| linked(t, n, a))).collect();
        let tm = params.t_m as usize;
        if k >= tm && (0..=k - tm).any(|w| !row[w..w + tm].iter().any(|&b| b)) {
            return None;
        }
        throughput += row.iter().filter(|&&b| b).count() as u32;
    }

    let mut penalty = 0u32;
    for e in &us.entries {
        let b = e.b as usize;
        let mut served = 0u32;
        for s in y.satellites() {
            let starts: Vec<bool> = (0..=k.saturating_sub(b)).map(|t| (t..t + b).all(|tt| linked(tt, e.user_id, s))).collect();
            if starts.windows(2).any(|w| w[0] && w[1]) {
                return None;
            }
            served += starts.iter().filter(|&&b| b).count() as u32;
        }
        if served > e.c {
            return None;
        }
        penalty += e.c - served;
    }
    Some(throughput as f64 - params.penalty * penalty as f64)
}
