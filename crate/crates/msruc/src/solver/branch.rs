//! Best-bound branch-and-bound over the binary variables.
//!
//! Nodes are kept in a min-heap on their LP bound (ties by creation order,
//! so runs are deterministic). Branching picks the most fractional binary,
//! ties toward the lowest variable index. Child LPs warm-start from the
//! parent basis. Integral relaxations are polished (binaries pinned to
//! their rounded values, LP re-solved) so every incumbent carries
//! exactly integral binaries. A one-shot rounding dive at the root supplies
//! an early incumbent, which the 5% default gap often accepts outright.

use super::simplex::{BasisSnapshot, Outcome, Simplex};
use super::{SolverError, INT_TOL};
use crate::milp::MilpModel;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    OptimalWithinGap,
    Infeasible,
    /// A node or wall-clock limit stopped the search.
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Best integral assignment found, if any (structural variables).
    pub assignment: Option<Vec<f64>>,
    /// Objective of the incumbent, if any.
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    /// Achieved relative gap `(incumbent - bound) / max(1, |incumbent|)`.
    pub gap: Option<f64>,
    /// LP-solved nodes, root and dive steps included.
    pub nodes: u64,
    /// Incumbent improvements as `(nodes_when_found, objective)`.
    pub incumbents: Vec<(u64, f64)>,
}

struct Node {
    bound: f64,
    fixes: Vec<(usize, f64, f64)>,
    basis: BasisSnapshot,
    /// Values of the integer variables at this node's relaxation.
    int_values: Vec<f64>,
}

struct HeapEntry {
    bound: f64,
    id: u64,
    slot: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed: BinaryHeap is a max-heap, we want the smallest bound first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

/// Solve to the requested relative MIP gap, or stop at the node or time
/// limit with the best incumbent so far.
pub fn solve_milp(
    model: &MilpModel,
    gap: f64,
    node_limit: u64,
    time_limit: Duration,
) -> Result<MilpResult, SolverError> {
    assert!(gap >= 0.0, "gap must be non-negative");
    let started = Instant::now();
    let int_vars: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_integer)
        .map(|(j, _)| j)
        .collect();

    let mut simplex = Simplex::from_model(model);
    let mut nodes_solved: u64 = 0;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut incumbents_log: Vec<(u64, f64)> = Vec::new();
    // Lower bounds of subtrees fathomed by the gap rule; the proven global
    // bound may not rise above their minimum.
    let mut fathom_floor = f64::INFINITY;

    let solve_node = |simplex: &mut Simplex,
                          fixes: &[(usize, f64, f64)],
                          basis: Option<&BasisSnapshot>,
                          nodes_solved: &mut u64|
     -> Result<(Outcome, f64, Vec<f64>, BasisSnapshot), SolverError> {
        simplex.set_fixes(fixes);
        match basis {
            Some(b) => simplex.load_snapshot(b),
            None => simplex.slack_basis(),
        }
        let outcome = simplex.optimize()?;
        *nodes_solved += 1;
        let values = simplex.values();
        Ok((outcome, simplex.objective(), values, simplex.snapshot()))
    };

    // Root relaxation.
    let (outcome, root_obj, root_values, root_basis) =
        solve_node(&mut simplex, &[], None, &mut nodes_solved)?;
    match outcome {
        Outcome::Infeasible => {
            return Ok(MilpResult {
                status: MilpStatus::Infeasible,
                assignment: None,
                objective: None,
                best_bound: f64::INFINITY,
                gap: None,
                nodes: nodes_solved,
                incumbents: incumbents_log,
            })
        }
        Outcome::Unbounded => {
            return Err(SolverError::Numerical(
                "relaxation is unbounded; integral problem is unbounded or ill-posed".into(),
            ))
        }
        Outcome::Optimal => {}
    }

    let fractional = |values: &[f64]| -> Option<usize> {
        // Most fractional integer variable, ties toward the lowest index.
        let mut best: Option<(usize, f64)> = None;
        for &j in &int_vars {
            let f = values[j] - values[j].floor();
            let dist = f.min(1.0 - f);
            if dist > INT_TOL && best.map(|(_, d)| dist > d + 1e-12).unwrap_or(true) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    };

    // Pin all binaries at their rounded values and re-solve, so incumbents
    // are exactly integral.
    let polish = |simplex: &mut Simplex,
                      fixes: &[(usize, f64, f64)],
                      values: &[f64],
                      basis: &BasisSnapshot,
                      nodes_solved: &mut u64|
     -> Result<Option<(f64, Vec<f64>)>, SolverError> {
        let mut pinned = fixes.to_vec();
        for &j in &int_vars {
            let r = values[j].round();
            pinned.push((j, r, r));
        }
        let (outcome, obj, vals, _) = solve_node(simplex, &pinned, Some(basis), nodes_solved)?;
        Ok(match outcome {
            Outcome::Optimal => Some((obj, vals[..model.variables.len()].to_vec())),
            _ => None,
        })
    };

    let accept = |cand: Option<(f64, Vec<f64>)>,
                      incumbent: &mut Option<(f64, Vec<f64>)>,
                      log: &mut Vec<(u64, f64)>,
                      nodes: u64| {
        if let Some((obj, assignment)) = cand {
            let better = incumbent.as_ref().map(|(b, _)| obj < *b - 1e-12).unwrap_or(true);
            if better {
                *incumbent = Some((obj, assignment));
                log.push((nodes, obj));
            }
        }
    };

    // Rounding dive from the root for a first incumbent.
    if fractional(&root_values).is_some() {
        let mut dive_fixes: Vec<(usize, f64, f64)> = Vec::new();
        let mut dive_values = root_values.clone();
        let mut dive_basis = root_basis.clone();
        for _ in 0..int_vars.len() {
            let Some(j) = fractional(&dive_values) else { break };
            let r = dive_values[j].round();
            dive_fixes.push((j, r, r));
            let (outcome, _, vals, basis) =
                solve_node(&mut simplex, &dive_fixes, Some(&dive_basis), &mut nodes_solved)?;
            if outcome != Outcome::Optimal {
                // Try the opposite side once, then abandon the dive.
                let flipped = 1.0 - r;
                if let Some(f) = dive_fixes.last_mut() {
                    f.1 = flipped;
                    f.2 = flipped;
                }
                let (outcome2, _, vals2, basis2) =
                    solve_node(&mut simplex, &dive_fixes, Some(&dive_basis), &mut nodes_solved)?;
                if outcome2 != Outcome::Optimal {
                    break;
                }
                dive_values = vals2;
                dive_basis = basis2;
                continue;
            }
            dive_values = vals;
            dive_basis = basis;
        }
        if fractional(&dive_values).is_none() {
            let cand =
                polish(&mut simplex, &dive_fixes, &dive_values, &dive_basis, &mut nodes_solved)?;
            accept(cand, &mut incumbent, &mut incumbents_log, nodes_solved);
        }
    } else {
        let cand = polish(&mut simplex, &[], &root_values, &root_basis, &mut nodes_solved)?;
        accept(cand, &mut incumbent, &mut incumbents_log, nodes_solved);
    }

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut store: Vec<Option<Node>> = Vec::new();
    let mut next_id: u64 = 0;
    let int_values_of = |values: &[f64]| -> Vec<f64> { int_vars.iter().map(|&j| values[j]).collect() };

    if fractional(&root_values).is_some() {
        store.push(Some(Node {
            bound: root_obj,
            fixes: Vec::new(),
            basis: root_basis,
            int_values: int_values_of(&root_values),
        }));
        heap.push(HeapEntry { bound: root_obj, id: next_id, slot: 0 });
        next_id += 1;
    }

    let mut status = MilpStatus::OptimalWithinGap;
    while let Some(entry) = heap.pop() {
        if nodes_solved >= node_limit || started.elapsed() >= time_limit {
            status = MilpStatus::TimeLimit;
            // The popped node still counts toward the proven bound.
            fathom_floor = fathom_floor.min(entry.bound);
            break;
        }
        let node = store[entry.slot].take().expect("node present");
        if let Some((inc_obj, _)) = &incumbent {
            if relative_gap(*inc_obj, node.bound) <= gap + 1e-12 {
                fathom_floor = fathom_floor.min(node.bound);
                continue;
            }
        }

        // Branch on the most fractional binary of the stored relaxation.
        let j = {
            let mut best: Option<(usize, f64)> = None;
            for (k, &j) in int_vars.iter().enumerate() {
                let v = node.int_values[k];
                let f = v - v.floor();
                let dist = f.min(1.0 - f);
                if dist > INT_TOL && best.map(|(_, d)| dist > d + 1e-12).unwrap_or(true) {
                    best = Some((j, dist));
                }
            }
            match best {
                Some((j, _)) => j,
                // Stored relaxation was integral after all; polish it.
                None => {
                    let values = {
                        let mut v = vec![0.0; model.variables.len()];
                        for (k, &j) in int_vars.iter().enumerate() {
                            v[j] = node.int_values[k];
                        }
                        v
                    };
                    let cand = polish(
                        &mut simplex,
                        &node.fixes,
                        &values,
                        &node.basis,
                        &mut nodes_solved,
                    )?;
                    accept(cand, &mut incumbent, &mut incumbents_log, nodes_solved);
                    continue;
                }
            }
        };

        for side in [0.0, 1.0] {
            let mut fixes = node.fixes.clone();
            fixes.push((j, side, side));
            let (outcome, obj, values, basis) =
                solve_node(&mut simplex, &fixes, Some(&node.basis), &mut nodes_solved)?;
            match outcome {
                Outcome::Infeasible => continue,
                Outcome::Unbounded => {
                    return Err(SolverError::Numerical(
                        "child relaxation unbounded".into(),
                    ))
                }
                Outcome::Optimal => {}
            }
            if let Some((inc_obj, _)) = &incumbent {
                if relative_gap(*inc_obj, obj) <= gap + 1e-12 {
                    fathom_floor = fathom_floor.min(obj);
                    continue;
                }
            }
            if fractional(&values).is_none() {
                let cand = polish(&mut simplex, &fixes, &values, &basis, &mut nodes_solved)?;
                accept(cand, &mut incumbent, &mut incumbents_log, nodes_solved);
                fathom_floor = fathom_floor.min(obj);
                continue;
            }
            let slot = store.len();
            store.push(Some(Node {
                bound: obj,
                fixes,
                basis,
                int_values: int_values_of(&values),
            }));
            heap.push(HeapEntry { bound: obj, id: next_id, slot });
            next_id += 1;
        }
    }

    // Proven bound: open nodes, gap-fathomed subtrees, and the incumbent.
    let open_bound = heap
        .iter()
        .map(|e| e.bound)
        .fold(f64::INFINITY, f64::min);
    let mut best_bound = fathom_floor.min(open_bound);
    match &incumbent {
        Some((obj, assignment)) => {
            if best_bound.is_infinite() {
                best_bound = *obj;
            }
            best_bound = best_bound.min(*obj);
            let achieved = relative_gap(*obj, best_bound);
            if status == MilpStatus::OptimalWithinGap && achieved > gap + 1e-9 {
                status = MilpStatus::TimeLimit;
            }
            Ok(MilpResult {
                status,
                assignment: Some(assignment.clone()),
                objective: Some(*obj),
                best_bound,
                gap: Some(achieved),
                nodes: nodes_solved,
                incumbents: incumbents_log,
            })
        }
        None => {
            // No incumbent: either everything was infeasible or a limit hit
            // before one was found.
            let exhausted = heap.is_empty() && fathom_floor.is_infinite();
            Ok(MilpResult {
                status: if status == MilpStatus::TimeLimit {
                    MilpStatus::TimeLimit
                } else if exhausted {
                    MilpStatus::Infeasible
                } else {
                    MilpStatus::TimeLimit
                },
                assignment: None,
                objective: None,
                best_bound: if best_bound.is_finite() { best_bound } else { root_obj },
                gap: None,
                nodes: nodes_solved,
                incumbents: incumbents_log,
            })
        }
    }
}
