//! Mixed-integer model construction for the multistage reserve and unit
//! commitment problem, and decoding of solver assignments.
//!
//! All trajectory quantities live in control-point space, so every
//! continuous-time requirement becomes finitely many linear rows:
//!
//! * **continuity**: trailing coefficients of an edge equal the leading
//!   coefficients of each child edge, up to the continuity depth `D`;
//! * **reserve capacity**: hourly reserve envelopes dominate every edge of
//!   their stage relative to the published schedule, and the hourly
//!   commitment indicator dominates every edge commitment;
//! * **balance**: aggregate generation matches the edge centroid
//!   coefficient-wise, and the reserve-adjusted aggregates match the
//!   centroid ± `rho` times the bundle error;
//! * **generation limits**: leading coefficients `0..=n-D` are bounded by
//!   the edge's own commitment, trailing coefficients `n-D+1..=n` by the
//!   commitment of each *following* node, letting units reach or leave zero
//!   during the preceding hour; last-stage edges bound their own tail;
//! * **ramping**: finite differences of the coefficients are bounded by
//!   the ramp limit; the `n-D` difference of the preceding edge is relaxed
//!   by `n*Pmax` on start/stop so late transitions stay feasible;
//! * **minimum on/off**: conventional windowed sums walked along the
//!   ancestry path, truncated at the horizon start;
//! * **schedule tie**: the published schedule equals the dispatch on the
//!   most likely path, hour by hour.
//!
//! The derivative operator is never materialized: ramping rows are written
//! directly on scaled finite differences of the generation coefficients.

use crate::bernstein::ControlPoly;
use crate::fleet::Fleet;
use crate::scenario::ScenarioTree;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("fleet is empty")]
    EmptyFleet,
    #[error("tree carries degree {tree} but the model asks for degree {model}")]
    DegreeMismatch { tree: usize, model: usize },
    #[error("continuity depth must be 1 or 2 and at most the degree, got depth {depth} with degree {degree}")]
    BadDepth { depth: usize, degree: usize },
    #[error("tree repaired to depth {tree} cannot support a depth-{model} model")]
    ContinuityMismatch { tree: usize, model: usize },
    #[error("reserve parameter must be non-negative, got {0}")]
    NegativeRho(f64),
    #[error("initial commitment has {got} entries for {want} generators")]
    InitialCommitmentLength { got: usize, want: usize },
    #[error("assignment has {got} values for {want} variables")]
    AssignmentLength { got: usize, want: usize },
    #[error("binary variable {name} has non-integral value {value}")]
    Integrality { name: String, value: f64 },
    #[error("constraint {name} violated by {violation:.3e}")]
    Violated { name: String, violation: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub is_integer: bool,
}

/// One sparse row `sum(coeffs) sense rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Generic sparse mixed-integer linear model, always minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: String,
        lower: f64,
        upper: f64,
        is_integer: bool,
    ) -> usize {
        self.variables.push(Variable { name, lower, upper, is_integer });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: String,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        debug_assert!(coeffs.iter().all(|&(v, _)| v < self.variables.len()));
        self.constraints.push(Constraint { name, coeffs, sense, rhs });
    }

    /// Sort coefficient lists, merge duplicates, drop exact zeros. Two
    /// models that canonicalize equal describe the same polyhedron row for
    /// row.
    pub fn canonicalize(&mut self) {
        fn canon(coeffs: &mut Vec<(usize, f64)>) {
            coeffs.sort_by_key(|&(v, _)| v);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
            for &(v, w) in coeffs.iter() {
                match out.last_mut() {
                    Some((lv, lw)) if *lv == v => *lw += w,
                    _ => out.push((v, w)),
                }
            }
            out.retain(|&(_, w)| w != 0.0);
            *coeffs = out;
        }
        for c in &mut self.constraints {
            canon(&mut c.coeffs);
        }
        canon(&mut self.objective);
    }

    /// Count constraints per family, where the family is the row-name prefix
    /// before the bracketed context.
    pub fn constraint_census(&self) -> BTreeMap<String, usize> {
        let mut census = BTreeMap::new();
        for c in &self.constraints {
            let family = c.name.split('[').next().unwrap_or(&c.name).to_string();
            *census.entry(family).or_insert(0) += 1;
        }
        census
    }

    /// Worst absolute violation over all rows and variable bounds.
    pub fn max_violation(&self, assignment: &[f64]) -> (f64, Option<&str>) {
        let mut worst = 0.0;
        let mut name = None;
        for (var, x) in self.variables.iter().zip(assignment) {
            let v = (var.lower - x).max(x - var.upper).max(0.0);
            if v > worst {
                worst = v;
                name = Some(var.name.as_str());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(v, w)| w * assignment[v]).sum();
            let v = match c.sense {
                Sense::Le => (lhs - c.rhs).max(0.0),
                Sense::Ge => (c.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            if v > worst {
                worst = v;
                name = Some(c.name.as_str());
            }
        }
        (worst, name)
    }

    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, w)| w * assignment[v]).sum()
    }
}

/// Where each variable family lives in the flat variable vector, plus the
/// tree bookkeeping needed to decode a solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableIndex {
    pub gens: usize,
    pub edges: usize,
    pub hours: usize,
    pub degree: usize,
    pub continuity: usize,
    /// Node id behind each edge index.
    pub edge_node: Vec<usize>,
    /// Stage (1-based) of each edge.
    pub edge_stage: Vec<usize>,
    /// Edge index of the parent edge, for edges beyond stage 1.
    pub parent_edge: Vec<Option<usize>>,
    /// Most-likely-path node ids, root first.
    pub most_likely_nodes: Vec<usize>,
    /// Edge index of the most-likely-path edge per hour.
    pub most_likely_edge: Vec<usize>,
    pub gen_names: Vec<String>,
}

impl VariableIndex {
    fn width(&self) -> usize {
        self.degree + 1
    }

    pub fn x(&self, g: usize, e: usize, i: usize) -> usize {
        (g * self.edges + e) * self.width() + i
    }

    pub fn r_hat(&self, g: usize, e: usize, i: usize) -> usize {
        self.gens * self.edges * self.width() + self.x(g, e, i)
    }

    pub fn r_check(&self, g: usize, e: usize, i: usize) -> usize {
        2 * self.gens * self.edges * self.width() + self.x(g, e, i)
    }

    fn hour_family(&self, family: usize, g: usize, h: usize, i: usize) -> usize {
        3 * self.gens * self.edges * self.width()
            + family * self.gens * self.hours * self.width()
            + (g * self.hours + h) * self.width()
            + i
    }

    pub fn r_up(&self, g: usize, h: usize, i: usize) -> usize {
        self.hour_family(0, g, h, i)
    }

    pub fn r_down(&self, g: usize, h: usize, i: usize) -> usize {
        self.hour_family(1, g, h, i)
    }

    pub fn x_sched(&self, g: usize, h: usize, i: usize) -> usize {
        self.hour_family(2, g, h, i)
    }

    fn binary_base(&self) -> usize {
        3 * self.gens * self.edges * self.width() + 3 * self.gens * self.hours * self.width()
    }

    pub fn y(&self, g: usize, e: usize) -> usize {
        self.binary_base() + g * self.edges + e
    }

    pub fn s_up(&self, g: usize, e: usize) -> usize {
        self.binary_base() + self.gens * self.edges + g * self.edges + e
    }

    pub fn s_down(&self, g: usize, e: usize) -> usize {
        self.binary_base() + 2 * self.gens * self.edges + g * self.edges + e
    }

    pub fn y_bar(&self, g: usize, h: usize) -> usize {
        self.binary_base() + 3 * self.gens * self.edges + g * self.hours + h
    }

    pub fn total_variables(&self) -> usize {
        self.binary_base() + 3 * self.gens * self.edges + self.gens * self.hours
    }

    /// Count of variables per family.
    pub fn variable_census(&self) -> BTreeMap<String, usize> {
        let w = self.width();
        BTreeMap::from([
            ("x".into(), self.gens * self.edges * w),
            ("r_hat".into(), self.gens * self.edges * w),
            ("r_check".into(), self.gens * self.edges * w),
            ("r_up".into(), self.gens * self.hours * w),
            ("r_down".into(), self.gens * self.hours * w),
            ("x_sched".into(), self.gens * self.hours * w),
            ("y".into(), self.gens * self.edges),
            ("s_up".into(), self.gens * self.edges),
            ("s_down".into(), self.gens * self.edges),
            ("y_bar".into(), self.gens * self.hours),
        ])
    }
}

/// Build options beyond the defaults.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Commitment state before the first stage, per generator; all off when
    /// absent.
    pub initial_commitment: Option<Vec<bool>>,
}

/// Build the continuous-time model over a degree-`n` tree.
pub fn build_model(
    tree: &ScenarioTree,
    fleet: &Fleet,
    rho: f64,
    degree: usize,
    depth: usize,
) -> Result<(MilpModel, VariableIndex), MilpError> {
    build_model_with(tree, fleet, rho, degree, depth, &BuildOptions::default())
}

/// The discrete-time benchmark: the same formulation at first order with
/// value-only continuity.
pub fn build_dt(
    tree: &ScenarioTree,
    fleet: &Fleet,
    rho: f64,
) -> Result<(MilpModel, VariableIndex), MilpError> {
    build_model(tree, fleet, rho, 1, 1)
}

pub fn build_model_with(
    tree: &ScenarioTree,
    fleet: &Fleet,
    rho: f64,
    degree: usize,
    depth: usize,
    options: &BuildOptions,
) -> Result<(MilpModel, VariableIndex), MilpError> {
    if fleet.is_empty() {
        return Err(MilpError::EmptyFleet);
    }
    if tree.degree != degree {
        return Err(MilpError::DegreeMismatch { tree: tree.degree, model: degree });
    }
    if !(1..=2).contains(&depth) || depth > degree {
        return Err(MilpError::BadDepth { depth, degree });
    }
    if tree.continuity_depth < depth {
        return Err(MilpError::ContinuityMismatch { tree: tree.continuity_depth, model: depth });
    }
    if rho < 0.0 {
        return Err(MilpError::NegativeRho(rho));
    }
    let initial: Vec<bool> = match &options.initial_commitment {
        None => vec![false; fleet.len()],
        Some(v) if v.len() == fleet.len() => v.clone(),
        Some(v) => {
            return Err(MilpError::InitialCommitmentLength { got: v.len(), want: fleet.len() })
        }
    };

    let n = degree;
    let w = n + 1;
    let gens = fleet.len();
    let hours = tree.horizon;
    let edge_node = tree.edge_nodes();
    let edges = edge_node.len();
    let mut edge_of_node = vec![usize::MAX; tree.nodes.len()];
    for (e, &v) in edge_node.iter().enumerate() {
        edge_of_node[v] = e;
    }
    let edge_stage: Vec<usize> = edge_node.iter().map(|&v| tree.nodes[v].stage).collect();
    let parent_edge: Vec<Option<usize>> = edge_node
        .iter()
        .map(|&v| {
            let p = tree.nodes[v].parent.expect("edge node has a parent");
            if p == 0 {
                None
            } else {
                Some(edge_of_node[p])
            }
        })
        .collect();

    let mlp = tree.most_likely_path();
    let most_likely_edge: Vec<usize> =
        mlp.edge_nodes().iter().map(|&v| edge_of_node[v]).collect();

    let index = VariableIndex {
        gens,
        edges,
        hours,
        degree: n,
        continuity: depth,
        edge_node: edge_node.clone(),
        edge_stage: edge_stage.clone(),
        parent_edge: parent_edge.clone(),
        most_likely_nodes: mlp.nodes.clone(),
        most_likely_edge: most_likely_edge.clone(),
        gen_names: fleet.generators.iter().map(|g| g.name.clone()).collect(),
    };

    let mut model = MilpModel::new(format!("msruc_n{n}_d{depth}"));

    // Variables, in index-family order so positions match VariableIndex.
    for g in 0..gens {
        let p_max = fleet.generators[g].p_max;
        for e in 0..edges {
            for i in 0..w {
                model.add_variable(format!("xg{g}e{e}i{i}"), 0.0, p_max, false);
            }
        }
    }
    for g in 0..gens {
        for e in 0..edges {
            for i in 0..w {
                model.add_variable(format!("rhg{g}e{e}i{i}"), 0.0, f64::INFINITY, false);
            }
        }
    }
    for g in 0..gens {
        for e in 0..edges {
            for i in 0..w {
                model.add_variable(format!("rcg{g}e{e}i{i}"), 0.0, f64::INFINITY, false);
            }
        }
    }
    for g in 0..gens {
        for h in 0..hours {
            for i in 0..w {
                model.add_variable(format!("rug{g}h{h}i{i}"), 0.0, f64::INFINITY, false);
            }
        }
    }
    for g in 0..gens {
        for h in 0..hours {
            for i in 0..w {
                model.add_variable(format!("rdg{g}h{h}i{i}"), 0.0, f64::INFINITY, false);
            }
        }
    }
    for g in 0..gens {
        let p_max = fleet.generators[g].p_max;
        for h in 0..hours {
            for i in 0..w {
                model.add_variable(format!("xsg{g}h{h}i{i}"), 0.0, p_max, false);
            }
        }
    }
    for g in 0..gens {
        for e in 0..edges {
            model.add_variable(format!("yg{g}e{e}"), 0.0, 1.0, true);
        }
    }
    for g in 0..gens {
        for e in 0..edges {
            model.add_variable(format!("sug{g}e{e}"), 0.0, 1.0, true);
        }
    }
    for g in 0..gens {
        for e in 0..edges {
            model.add_variable(format!("sdg{g}e{e}"), 0.0, 1.0, true);
        }
    }
    for g in 0..gens {
        for h in 0..hours {
            model.add_variable(format!("ybg{g}h{h}"), 0.0, 1.0, true);
        }
    }
    debug_assert_eq!(model.variables.len(), index.total_variables());

    let ix = &index;

    // Continuity across every parent/child edge pair.
    for g in 0..gens {
        for e in 0..edges {
            if edge_stage[e] == hours {
                continue;
            }
            let v = edge_node[e];
            for child in tree.children(v) {
                let ce = edge_of_node[child];
                model.add_constraint(
                    format!("cont0[g{g},e{e},e{ce}]"),
                    vec![(ix.x(g, e, n), 1.0), (ix.x(g, ce, 0), -1.0)],
                    Sense::Eq,
                    0.0,
                );
                if depth >= 2 {
                    model.add_constraint(
                        format!("cont1[g{g},e{e},e{ce}]"),
                        vec![
                            (ix.x(g, e, n), 1.0),
                            (ix.x(g, e, n - 1), -1.0),
                            (ix.x(g, ce, 1), -1.0),
                            (ix.x(g, ce, 0), 1.0),
                        ],
                        Sense::Eq,
                        0.0,
                    );
                }
            }
        }
    }

    // Hourly reserve envelopes dominate every edge of the stage.
    for g in 0..gens {
        for e in 0..edges {
            let h = edge_stage[e] - 1;
            for i in 0..w {
                model.add_constraint(
                    format!("res_up[g{g},e{e},i{i}]"),
                    vec![
                        (ix.r_up(g, h, i), 1.0),
                        (ix.x(g, e, i), -1.0),
                        (ix.r_hat(g, e, i), -1.0),
                        (ix.x_sched(g, h, i), 1.0),
                    ],
                    Sense::Ge,
                    0.0,
                );
                model.add_constraint(
                    format!("res_dn[g{g},e{e},i{i}]"),
                    vec![
                        (ix.r_down(g, h, i), 1.0),
                        (ix.x(g, e, i), 1.0),
                        (ix.r_check(g, e, i), -1.0),
                        (ix.x_sched(g, h, i), -1.0),
                    ],
                    Sense::Ge,
                    0.0,
                );
            }
            model.add_constraint(
                format!("res_ind[g{g},e{e}]"),
                vec![(ix.y_bar(g, h), 1.0), (ix.y(g, e), -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // Balance: aggregates pinned to the centroid and to the margin band.
    for e in 0..edges {
        let node = &tree.nodes[edge_node[e]];
        let xi = node.edge_xi.as_ref().expect("edge has a centroid").coeffs();
        let eps = node.edge_eps.as_ref().expect("edge has an error vector");
        for i in 0..w {
            let xs: Vec<(usize, f64)> = (0..gens).map(|g| (ix.x(g, e, i), 1.0)).collect();
            model.add_constraint(format!("bal_x[e{e},i{i}]"), xs.clone(), Sense::Eq, xi[i]);
            let mut up = xs.clone();
            up.extend((0..gens).map(|g| (ix.r_hat(g, e, i), 1.0)));
            model.add_constraint(
                format!("bal_up[e{e},i{i}]"),
                up,
                Sense::Eq,
                xi[i] + rho * eps[i],
            );
            let mut dn = xs;
            dn.extend((0..gens).map(|g| (ix.r_check(g, e, i), -1.0)));
            model.add_constraint(
                format!("bal_dn[e{e},i{i}]"),
                dn,
                Sense::Eq,
                xi[i] - rho * eps[i],
            );
        }
    }

    // Generation limits. Leading coefficients answer to the edge's own
    // commitment; trailing coefficients answer to the commitment that
    // follows them.
    for g in 0..gens {
        let gen = &fleet.generators[g];
        for e in 0..edges {
            for i in 0..=n - depth {
                model.add_constraint(
                    format!("cap_hi_lead[g{g},e{e},i{i}]"),
                    vec![
                        (ix.x(g, e, i), 1.0),
                        (ix.r_hat(g, e, i), 1.0),
                        (ix.y(g, e), -gen.p_max),
                    ],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    format!("cap_lo_lead[g{g},e{e},i{i}]"),
                    vec![
                        (ix.x(g, e, i), 1.0),
                        (ix.r_check(g, e, i), -1.0),
                        (ix.y(g, e), -gen.p_min),
                    ],
                    Sense::Ge,
                    0.0,
                );
            }
        }
        for e in 0..edges {
            if let Some(pe) = parent_edge[e] {
                for i in n - depth + 1..=n {
                    model.add_constraint(
                        format!("cap_hi_trail[g{g},e{pe},y{e},i{i},gp]"),
                        vec![
                            (ix.x(g, pe, i), 1.0),
                            (ix.r_hat(g, pe, i), 1.0),
                            (ix.y(g, e), -gen.p_max),
                        ],
                        Sense::Le,
                        0.0,
                    );
                    model.add_constraint(
                        format!("cap_lo_trail[g{g},e{pe},y{e},i{i},gp]"),
                        vec![
                            (ix.x(g, pe, i), 1.0),
                            (ix.r_check(g, pe, i), -1.0),
                            (ix.y(g, e), -gen.p_min),
                        ],
                        Sense::Ge,
                        0.0,
                    );
                }
            }
        }
        for e in 0..edges {
            if edge_stage[e] != hours {
                continue;
            }
            for i in n - depth + 1..=n {
                model.add_constraint(
                    format!("cap_hi_trail[g{g},e{e},y{e},i{i},own]"),
                    vec![
                        (ix.x(g, e, i), 1.0),
                        (ix.r_hat(g, e, i), 1.0),
                        (ix.y(g, e), -gen.p_max),
                    ],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    format!("cap_lo_trail[g{g},e{e},y{e},i{i},own]"),
                    vec![
                        (ix.x(g, e, i), 1.0),
                        (ix.r_check(g, e, i), -1.0),
                        (ix.y(g, e), -gen.p_min),
                    ],
                    Sense::Ge,
                    0.0,
                );
            }
        }
    }

    // Ramping on scaled finite differences of the generation coefficients.
    let nf = n as f64;
    for g in 0..gens {
        let gen = &fleet.generators[g];
        let relax = nf * gen.p_max;
        for e in 0..edges {
            for i in (0..n).filter(|&i| i != n - depth) {
                let diff = vec![(ix.x(g, e, i + 1), nf), (ix.x(g, e, i), -nf)];
                model.add_constraint(
                    format!("ramp_hi[g{g},e{e},i{i}]"),
                    diff.clone(),
                    Sense::Le,
                    gen.ramp_limit,
                );
                model.add_constraint(
                    format!("ramp_lo[g{g},e{e},i{i}]"),
                    diff,
                    Sense::Ge,
                    -gen.ramp_limit,
                );
            }
        }
        let istar = n - depth;
        for e in 0..edges {
            if let Some(pe) = parent_edge[e] {
                model.add_constraint(
                    format!("ramp_hi_relax[g{g},e{pe},y{e}]"),
                    vec![
                        (ix.x(g, pe, istar + 1), nf),
                        (ix.x(g, pe, istar), -nf),
                        (ix.s_up(g, e), -relax),
                    ],
                    Sense::Le,
                    gen.ramp_limit,
                );
                model.add_constraint(
                    format!("ramp_lo_relax[g{g},e{pe},y{e}]"),
                    vec![
                        (ix.x(g, pe, istar + 1), nf),
                        (ix.x(g, pe, istar), -nf),
                        (ix.s_down(g, e), relax),
                    ],
                    Sense::Ge,
                    -gen.ramp_limit,
                );
            }
        }
        for e in 0..edges {
            if edge_stage[e] != hours {
                continue;
            }
            let diff = vec![(ix.x(g, e, istar + 1), nf), (ix.x(g, e, istar), -nf)];
            model.add_constraint(
                format!("ramp_hi_last[g{g},e{e}]"),
                diff.clone(),
                Sense::Le,
                gen.ramp_limit,
            );
            model.add_constraint(
                format!("ramp_lo_last[g{g},e{e}]"),
                diff,
                Sense::Ge,
                -gen.ramp_limit,
            );
        }
    }

    // Start/stop bookkeeping and minimum on/off windows along the ancestry.
    for g in 0..gens {
        let gen = &fleet.generators[g];
        for e in 0..edges {
            let mut coeffs = vec![
                (ix.s_up(g, e), 1.0),
                (ix.s_down(g, e), -1.0),
                (ix.y(g, e), -1.0),
            ];
            let rhs = match parent_edge[e] {
                Some(pe) => {
                    coeffs.push((ix.y(g, pe), 1.0));
                    0.0
                }
                None => {
                    if initial[g] {
                        -1.0
                    } else {
                        0.0
                    }
                }
            };
            model.add_constraint(format!("startshut[g{g},e{e}]"), coeffs, Sense::Eq, rhs);
        }
        for e in 0..edges {
            let h = edge_stage[e];
            let v = edge_node[e];
            let on_window = (gen.min_on as usize).min(h);
            let mut coeffs = vec![(ix.y(g, e), 1.0)];
            for u in 0..on_window {
                let au = tree.ancestor(v, u).expect("window stays on the path");
                coeffs.push((ix.s_up(g, edge_of_node[au]), -1.0));
            }
            model.add_constraint(format!("min_on[g{g},e{e}]"), coeffs, Sense::Ge, 0.0);

            let off_window = (gen.min_off as usize).min(h);
            let mut coeffs = vec![(ix.y(g, e), -1.0)];
            for u in 0..off_window {
                let au = tree.ancestor(v, u).expect("window stays on the path");
                coeffs.push((ix.s_down(g, edge_of_node[au]), -1.0));
            }
            model.add_constraint(format!("min_off[g{g},e{e}]"), coeffs, Sense::Ge, -1.0);
        }
    }

    // Schedule tie to the most likely path.
    for g in 0..gens {
        for h in 0..hours {
            let e = most_likely_edge[h];
            for i in 0..w {
                model.add_constraint(
                    format!("sched_tie[g{g},h{h},i{i}]"),
                    vec![(ix.x_sched(g, h, i), 1.0), (ix.x(g, e, i), -1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
    }

    // Objective: up-front reserve and commitment-option payments plus the
    // probability-weighted nodal cost.
    let wf = w as f64;
    for g in 0..gens {
        let gen = &fleet.generators[g];
        for h in 0..hours {
            for i in 0..w {
                push_obj(&mut model, ix.r_up(g, h, i), gen.price_res_up / wf);
                push_obj(&mut model, ix.r_down(g, h, i), gen.price_res_down / wf);
            }
            push_obj(&mut model, ix.y_bar(g, h), gen.price_commit_option);
        }
        for e in 0..edges {
            let pi = tree.nodes[edge_node[e]].prob;
            push_obj(&mut model, ix.y(g, e), pi * gen.cost_commit);
            push_obj(&mut model, ix.s_up(g, e), pi * gen.cost_startup);
            push_obj(&mut model, ix.s_down(g, e), pi * gen.cost_shutdown);
            for i in 0..w {
                push_obj(&mut model, ix.x(g, e, i), pi * gen.cost_energy / wf);
            }
        }
    }

    Ok((model, index))
}

fn push_obj(model: &mut MilpModel, var: usize, weight: f64) {
    if weight != 0.0 {
        model.objective.push((var, weight));
    }
}

/// Decoded commitment, dispatch and reserve plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UcSolution {
    pub degree: usize,
    pub continuity: usize,
    pub hours: usize,
    pub gen_names: Vec<String>,
    /// Node id behind each edge index.
    pub edge_nodes: Vec<usize>,
    /// Edge dispatch polynomials, `[gen][edge]`.
    pub dispatch: Vec<Vec<ControlPoly>>,
    /// Edge up-reserve polynomials, `[gen][edge]`.
    pub res_edge_up: Vec<Vec<ControlPoly>>,
    /// Edge down-reserve polynomials, `[gen][edge]`.
    pub res_edge_down: Vec<Vec<ControlPoly>>,
    /// Commitment on each edge, `[gen][edge]`.
    pub commit: Vec<Vec<bool>>,
    pub start: Vec<Vec<bool>>,
    pub stop: Vec<Vec<bool>>,
    /// Hourly may-be-committed indicator, `[gen][hour]`.
    pub commit_option: Vec<Vec<bool>>,
    /// Hourly reserve envelopes, `[gen][hour]`.
    pub res_up: Vec<Vec<ControlPoly>>,
    pub res_down: Vec<Vec<ControlPoly>>,
    /// Published schedule splines, `[gen][hour]`.
    pub schedule: Vec<Vec<ControlPoly>>,
    /// Commitment along the most likely path, `[gen][hour]`.
    pub schedule_commit: Vec<Vec<bool>>,
    /// Most-likely-path node ids, root first.
    pub most_likely: Vec<usize>,
    pub objective: f64,
    /// Relative optimality gap reported by the solver run that produced the
    /// assignment; zero for exact or hand-built assignments.
    pub gap: f64,
    pub max_violation: f64,
}

impl UcSolution {
    pub fn save(&self, path: &Path) -> Result<(), MilpError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MilpError> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    /// Edge index (into `edge_nodes`) of a node id, if it is an edge node.
    pub fn edge_of_node(&self, node: usize) -> Option<usize> {
        self.edge_nodes.iter().position(|&v| v == node)
    }
}

const DECODE_TOL: f64 = 1e-6;

/// Turn a raw assignment into a structured solution: round the binaries,
/// rebuild the polynomials, and verify every constraint to the decode
/// tolerance. A violated row is an error naming the row.
pub fn decode(
    model: &MilpModel,
    index: &VariableIndex,
    assignment: &[f64],
) -> Result<UcSolution, MilpError> {
    if assignment.len() != model.variables.len() {
        return Err(MilpError::AssignmentLength {
            got: assignment.len(),
            want: model.variables.len(),
        });
    }
    for (var, &value) in model.variables.iter().zip(assignment) {
        if var.is_integer && (value - value.round()).abs() > DECODE_TOL {
            return Err(MilpError::Integrality { name: var.name.clone(), value });
        }
    }
    let (max_violation, worst) = model.max_violation(assignment);
    if max_violation > DECODE_TOL {
        return Err(MilpError::Violated {
            name: worst.unwrap_or("<bounds>").to_string(),
            violation: max_violation,
        });
    }

    let w = index.degree + 1;
    let poly = |base: &dyn Fn(usize) -> usize| {
        ControlPoly::new((0..w).map(|i| assignment[base(i)]).collect())
    };
    let bit = |v: usize| assignment[v].round() != 0.0;

    let mut solution = UcSolution {
        degree: index.degree,
        continuity: index.continuity,
        hours: index.hours,
        gen_names: index.gen_names.clone(),
        edge_nodes: index.edge_node.clone(),
        dispatch: Vec::new(),
        res_edge_up: Vec::new(),
        res_edge_down: Vec::new(),
        commit: Vec::new(),
        start: Vec::new(),
        stop: Vec::new(),
        commit_option: Vec::new(),
        res_up: Vec::new(),
        res_down: Vec::new(),
        schedule: Vec::new(),
        schedule_commit: Vec::new(),
        most_likely: index.most_likely_nodes.clone(),
        objective: model.objective_value(assignment),
        gap: 0.0,
        max_violation,
    };

    for g in 0..index.gens {
        solution.dispatch.push(
            (0..index.edges).map(|e| poly(&|i| index.x(g, e, i))).collect(),
        );
        solution.res_edge_up.push(
            (0..index.edges).map(|e| poly(&|i| index.r_hat(g, e, i))).collect(),
        );
        solution.res_edge_down.push(
            (0..index.edges).map(|e| poly(&|i| index.r_check(g, e, i))).collect(),
        );
        solution.commit.push((0..index.edges).map(|e| bit(index.y(g, e))).collect());
        solution.start.push((0..index.edges).map(|e| bit(index.s_up(g, e))).collect());
        solution.stop.push((0..index.edges).map(|e| bit(index.s_down(g, e))).collect());
        solution.commit_option.push((0..index.hours).map(|h| bit(index.y_bar(g, h))).collect());
        solution.res_up.push(
            (0..index.hours).map(|h| poly(&|i| index.r_up(g, h, i))).collect(),
        );
        solution.res_down.push(
            (0..index.hours).map(|h| poly(&|i| index.r_down(g, h, i))).collect(),
        );
        // The schedule is defined as the most-likely-path dispatch; copy it
        // from there so the tie holds bit-exactly in the artifact. The raw
        // schedule variables agree within the verified tolerance.
        solution.schedule.push(
            (0..index.hours)
                .map(|h| poly(&|i| index.x(g, index.most_likely_edge[h], i)))
                .collect(),
        );
        solution.schedule_commit.push(
            (0..index.hours).map(|h| bit(index.y(g, index.most_likely_edge[h]))).collect(),
        );
    }
    Ok(solution)
}
