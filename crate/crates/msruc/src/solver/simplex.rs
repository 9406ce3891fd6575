//! Bounded-variable revised simplex.
//!
//! Every constraint row gets a slack column (`<=` rows a non-negative slack,
//! `>=` rows a non-positive one, `=` rows a slack fixed at zero), so the
//! working problem is always `A x = b` with box bounds and the all-slack
//! basis is structurally valid. The basis inverse is held as a dense LU
//! factorization of the start basis plus product-form eta updates, with
//! periodic refactorization. Phase 1 minimizes the total bound violation of
//! the basic variables with the textbook composite costs; phase 2 prices the
//! true objective. Ties and degeneracy fall back to Bland's rule, so the
//! solve is deterministic and cannot cycle.

use crate::linalg::{lu_factor, DMat, Lu};
use crate::milp::{MilpModel, Sense};
use super::SolverError;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost (dual) tolerance.
const COST_TOL: f64 = 1e-9;
/// Smallest acceptable pivot magnitude.
const PIVOT_TOL: f64 = 1e-8;
/// Refactor after this many eta updates.
const REFRESH: usize = 100;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGEN_LIMIT: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Doubly unbounded column parked at zero.
    Free,
}

/// Restorable basis: which column is basic in each row, and where every
/// nonbasic column rests.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSnapshot {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

struct Factor {
    lu: Lu,
    /// Product-form updates: (pivot row, replacement column).
    etas: Vec<(usize, Vec<f64>)>,
}

pub struct Simplex {
    m: usize,
    n_struct: usize,
    n_total: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    /// Pristine bounds from the model.
    base_lb: Vec<f64>,
    base_ub: Vec<f64>,
    /// Active bounds including branching fixes.
    lb: Vec<f64>,
    ub: Vec<f64>,
    basic: Vec<usize>,
    state: Vec<ColState>,
    x_basic: Vec<f64>,
    factor: Option<Factor>,
}

impl Simplex {
    /// Augment a model with slack columns. Integrality marks are ignored
    /// here; branching manipulates bounds instead.
    pub fn from_model(model: &MilpModel) -> Self {
        let m = model.constraints.len();
        let n_struct = model.variables.len();
        let n_total = n_struct + m;
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_total];
        let mut cost = vec![0.0; n_total];
        let mut lb = vec![0.0; n_total];
        let mut ub = vec![0.0; n_total];
        for (j, var) in model.variables.iter().enumerate() {
            lb[j] = var.lower;
            ub[j] = var.upper;
        }
        for &(j, w) in &model.objective {
            cost[j] += w;
        }
        let mut rhs = vec![0.0; m];
        for (i, con) in model.constraints.iter().enumerate() {
            rhs[i] = con.rhs;
            for &(j, w) in &con.coeffs {
                if w != 0.0 {
                    cols[j].push((i, w));
                }
            }
            let s = n_struct + i;
            cols[s].push((i, 1.0));
            let (slo, shi) = match con.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb[s] = slo;
            ub[s] = shi;
        }
        for col in &mut cols {
            col.sort_by_key(|&(i, _)| i);
            col.dedup_by(|a, b| {
                if a.0 == b.0 {
                    b.1 += a.1;
                    true
                } else {
                    false
                }
            });
        }
        let mut s = Simplex {
            m,
            n_struct,
            n_total,
            cols,
            cost,
            rhs,
            base_lb: lb.clone(),
            base_ub: ub.clone(),
            lb,
            ub,
            basic: Vec::new(),
            state: Vec::new(),
            x_basic: Vec::new(),
            factor: None,
        };
        s.slack_basis();
        s
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    /// Replace the branching fixes: restore pristine bounds, then apply the
    /// given `(column, lower, upper)` overrides.
    pub fn set_fixes(&mut self, fixes: &[(usize, f64, f64)]) {
        self.lb.copy_from_slice(&self.base_lb);
        self.ub.copy_from_slice(&self.base_ub);
        for &(j, lo, hi) in fixes {
            self.lb[j] = lo;
            self.ub[j] = hi;
        }
        // A nonbasic resting spot may have become invalid.
        for j in 0..self.n_total {
            self.state[j] = match self.state[j] {
                ColState::Basic(r) => ColState::Basic(r),
                _ => self.resting_state(j),
            };
        }
    }

    fn resting_state(&self, j: usize) -> ColState {
        if self.lb[j].is_finite() {
            ColState::AtLower
        } else if self.ub[j].is_finite() {
            ColState::AtUpper
        } else {
            ColState::Free
        }
    }

    /// Cold start from the all-slack basis.
    pub fn slack_basis(&mut self) {
        self.basic = (self.n_struct..self.n_total).collect();
        self.state = vec![ColState::AtLower; self.n_total];
        for j in 0..self.n_struct {
            self.state[j] = self.resting_state(j);
        }
        for (i, &s) in self.basic.iter().enumerate() {
            self.state[s] = ColState::Basic(i);
        }
        self.factor = None;
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            basic: self.basic.clone(),
            at_upper: self
                .state
                .iter()
                .map(|s| matches!(s, ColState::AtUpper))
                .collect(),
        }
    }

    pub fn load_snapshot(&mut self, snap: &BasisSnapshot) {
        self.basic = snap.basic.clone();
        for j in 0..self.n_total {
            self.state[j] = if snap.at_upper[j] && self.ub[j].is_finite() {
                ColState::AtUpper
            } else {
                self.resting_state(j)
            };
        }
        for (i, &b) in self.basic.iter().enumerate() {
            self.state[b] = ColState::Basic(i);
        }
        self.factor = None;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Basic(r) => self.x_basic[r],
            ColState::AtLower => self.lb[j],
            ColState::AtUpper => self.ub[j],
            ColState::Free => 0.0,
        }
    }

    /// Current value of every column, structural first.
    pub fn values(&self) -> Vec<f64> {
        (0..self.n_total).map(|j| self.nonbasic_value(j)).collect()
    }

    pub fn structural_values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.nonbasic_value(j)).collect()
    }

    pub fn objective(&self) -> f64 {
        (0..self.n_struct)
            .map(|j| self.cost[j] * self.nonbasic_value(j))
            .sum()
    }

    /// Duals from the true costs of the current basis.
    pub fn duals(&mut self) -> Result<Vec<f64>, SolverError> {
        if self.factor.is_none() {
            self.refactor()?;
        }
        let cb: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        Ok(self.btran(&cb))
    }

    pub fn reduced_costs(&mut self) -> Result<Vec<f64>, SolverError> {
        let y = self.duals()?;
        Ok((0..self.n_struct)
            .map(|j| self.cost[j] - sparse_dot(&self.cols[j], &y))
            .collect())
    }

    fn refactor(&mut self) -> Result<(), SolverError> {
        let mut b = DMat::zeros(self.m, self.m);
        for (i, &j) in self.basic.iter().enumerate() {
            for &(r, w) in &self.cols[j] {
                b.set(r, i, w);
            }
        }
        let lu = lu_factor(b, 1e-12)
            .map_err(|e| SolverError::Numerical(format!("singular basis: {e}")))?;
        self.factor = Some(Factor { lu, etas: Vec::new() });
        self.recompute_basic_values()
    }

    fn recompute_basic_values(&mut self) -> Result<(), SolverError> {
        let mut rhs_eff = self.rhs.clone();
        for j in 0..self.n_total {
            let v = match self.state[j] {
                ColState::Basic(_) => continue,
                _ => self.nonbasic_value(j),
            };
            if v != 0.0 {
                for &(r, w) in &self.cols[j] {
                    rhs_eff[r] -= w * v;
                }
            }
        }
        self.x_basic = self.ftran(&rhs_eff);
        Ok(())
    }

    fn ftran(&self, v: &[f64]) -> Vec<f64> {
        let factor = self.factor.as_ref().expect("factorized");
        let mut x = factor.lu.solve(v).expect("basis solve");
        for (r, alpha) in &factor.etas {
            let xr = x[*r] / alpha[*r];
            for (i, (xi, ai)) in x.iter_mut().zip(alpha).enumerate() {
                if i != *r {
                    *xi -= ai * xr;
                }
            }
            x[*r] = xr;
        }
        x
    }

    fn btran(&self, c: &[f64]) -> Vec<f64> {
        let factor = self.factor.as_ref().expect("factorized");
        let mut z = c.to_vec();
        for (r, alpha) in factor.etas.iter().rev() {
            let mut s = z[*r];
            for (i, (zi, ai)) in z.iter().zip(alpha).enumerate() {
                if i != *r {
                    s -= ai * zi;
                }
            }
            z[*r] = s / alpha[*r];
        }
        factor.lu.solve_transpose(&z).expect("basis solve")
    }

    fn violation(&self, j: usize, x: f64) -> f64 {
        (self.lb[j] - x).max(x - self.ub[j]).max(0.0)
    }

    fn total_infeasibility(&self) -> f64 {
        self.basic
            .iter()
            .zip(&self.x_basic)
            .map(|(&j, &x)| self.violation(j, x))
            .sum()
    }

    /// Run the two-phase method from the current basis to a verified
    /// conclusion.
    pub fn optimize(&mut self) -> Result<Outcome, SolverError> {
        if self.factor.is_none() {
            self.refactor()?;
        } else {
            self.recompute_basic_values()?;
        }
        let iter_limit = 200 * (self.m + self.n_total) + 20_000;
        let mut iterations = 0usize;
        let mut degenerate_run = 0usize;
        let mut confirmations = 0usize;

        loop {
            iterations += 1;
            if iterations > iter_limit {
                return Err(SolverError::Numerical(format!(
                    "simplex iteration limit {iter_limit} reached"
                )));
            }
            if self
                .factor
                .as_ref()
                .map(|f| f.etas.len() >= REFRESH)
                .unwrap_or(true)
            {
                self.refactor()?;
            }

            let phase1 = self.total_infeasibility() > FEAS_TOL;
            // Basic costs for pricing: violation gradients in phase 1, true
            // costs in phase 2.
            let cb: Vec<f64> = self
                .basic
                .iter()
                .zip(&self.x_basic)
                .map(|(&j, &x)| {
                    if phase1 {
                        if x < self.lb[j] - FEAS_TOL {
                            -1.0
                        } else if x > self.ub[j] + FEAS_TOL {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        self.cost[j]
                    }
                })
                .collect();
            let y = self.btran(&cb);
            let bland = degenerate_run > DEGEN_LIMIT;

            let entering = self.price(&y, phase1, bland);
            let Some((q, dir)) = entering else {
                // Claimed done; verify against a fresh factorization once.
                if confirmations < 5 {
                    confirmations += 1;
                    self.refactor()?;
                    let still_infeasible = self.total_infeasibility() > FEAS_TOL;
                    if still_infeasible != phase1 {
                        continue;
                    }
                    let cb2: Vec<f64> = self
                        .basic
                        .iter()
                        .zip(&self.x_basic)
                        .map(|(&j, &x)| {
                            if still_infeasible {
                                if x < self.lb[j] - FEAS_TOL {
                                    -1.0
                                } else if x > self.ub[j] + FEAS_TOL {
                                    1.0
                                } else {
                                    0.0
                                }
                            } else {
                                self.cost[j]
                            }
                        })
                        .collect();
                    let y2 = self.btran(&cb2);
                    if self.price(&y2, still_infeasible, false).is_some() {
                        continue;
                    }
                }
                return Ok(if phase1 { Outcome::Infeasible } else { Outcome::Optimal });
            };

            let alpha = {
                let mut dense = vec![0.0; self.m];
                for &(r, w) in &self.cols[q] {
                    dense[r] = w;
                }
                self.ftran(&dense)
            };

            match self.ratio_test(q, dir, &alpha, phase1, bland) {
                Ratio::Unbounded => {
                    if phase1 {
                        return Err(SolverError::Numerical(
                            "unbounded infeasibility descent".into(),
                        ));
                    }
                    return Ok(Outcome::Unbounded);
                }
                Ratio::BoundFlip(t) => {
                    degenerate_run = 0;
                    self.apply_step(q, dir, t, &alpha);
                    self.state[q] = match self.state[q] {
                        ColState::AtLower => ColState::AtUpper,
                        ColState::AtUpper => ColState::AtLower,
                        other => other,
                    };
                }
                Ratio::Pivot { t, row, to_upper } => {
                    if t <= 1e-10 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    let leaving = self.basic[row];
                    self.apply_step(q, dir, t, &alpha);
                    let entering_value = match self.state[q] {
                        ColState::AtLower => self.lb[q] + dir * t,
                        ColState::AtUpper => self.ub[q] + dir * t,
                        ColState::Free => dir * t,
                        ColState::Basic(_) => unreachable!("entering is nonbasic"),
                    };
                    self.state[leaving] =
                        if to_upper { ColState::AtUpper } else { ColState::AtLower };
                    self.state[q] = ColState::Basic(row);
                    self.basic[row] = q;
                    self.x_basic[row] = entering_value;
                    if let Some(f) = self.factor.as_mut() {
                        f.etas.push((row, alpha));
                    }
                }
            }
        }
    }

    /// Choose the entering column: Dantzig pricing, or first-eligible under
    /// Bland's rule. Returns `(column, direction)`.
    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n_total {
            let (eligible_dir, d) = match self.state[j] {
                ColState::Basic(_) => continue,
                _ if self.lb[j] == self.ub[j] => continue,
                state => {
                    let cj = if phase1 { 0.0 } else { self.cost[j] };
                    let d = cj - sparse_dot(&self.cols[j], y);
                    match state {
                        ColState::AtLower => {
                            if d < -COST_TOL {
                                (1.0, d)
                            } else {
                                continue;
                            }
                        }
                        ColState::AtUpper => {
                            if d > COST_TOL {
                                (-1.0, d)
                            } else {
                                continue;
                            }
                        }
                        ColState::Free => {
                            if d < -COST_TOL {
                                (1.0, d)
                            } else if d > COST_TOL {
                                (-1.0, d)
                            } else {
                                continue;
                            }
                        }
                        ColState::Basic(_) => unreachable!(),
                    }
                }
            };
            if bland {
                return Some((j, eligible_dir));
            }
            let score = d.abs();
            if best.map(|(_, _, s)| score > s).unwrap_or(true) {
                best = Some((j, eligible_dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn apply_step(&mut self, _q: usize, dir: f64, t: f64, alpha: &[f64]) {
        if t == 0.0 {
            return;
        }
        for (xi, ai) in self.x_basic.iter_mut().zip(alpha) {
            *xi -= dir * t * ai;
        }
    }

    /// Bounded ratio test. In phase 1, infeasible basic variables block at
    /// the bound they currently violate (where they become feasible);
    /// feasible ones block at their bounds as usual.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase1: bool, bland: bool) -> Ratio {
        let own_span = self.ub[q] - self.lb[q];
        let mut t_best = f64::INFINITY;
        let mut blocker: Option<(usize, bool, f64)> = None; // (row, to_upper, |pivot|)
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basic[i];
            let x = self.x_basic[i];
            let rate = -dir * a; // dx_i/dt
            let (lo, hi) = (self.lb[j], self.ub[j]);
            let (t_i, to_upper) = if phase1 && x < lo - FEAS_TOL {
                if rate > 0.0 {
                    ((lo - x) / rate, false)
                } else {
                    continue;
                }
            } else if phase1 && x > hi + FEAS_TOL {
                if rate < 0.0 {
                    ((hi - x) / rate, true)
                } else {
                    continue;
                }
            } else if rate > 0.0 {
                if hi.is_finite() {
                    (((hi - x) / rate).max(0.0), true)
                } else {
                    continue;
                }
            } else if lo.is_finite() {
                (((lo - x) / rate).max(0.0), false)
            } else {
                continue;
            };
            let t_i = t_i.max(0.0);
            let replace = match blocker {
                None => t_i < t_best,
                Some((row, _, pivot)) => {
                    if t_i < t_best - 1e-12 {
                        true
                    } else if t_i <= t_best + 1e-12 {
                        if bland {
                            self.basic[i] < self.basic[row]
                        } else {
                            a.abs() > pivot
                        }
                    } else {
                        false
                    }
                }
            };
            if replace {
                t_best = t_best.min(t_i);
                blocker = Some((i, to_upper, a.abs()));
            }
        }
        if own_span.is_finite() && own_span <= t_best {
            return Ratio::BoundFlip(own_span);
        }
        match blocker {
            None => Ratio::Unbounded,
            Some((row, to_upper, _)) => Ratio::Pivot { t: t_best, row, to_upper },
        }
    }

    /// Worst bound violation over all columns, for post-solve checks.
    pub fn max_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &j) in self.basic.iter().enumerate() {
            worst = worst.max(self.violation(j, self.x_basic[i]));
        }
        worst
    }
}

enum Ratio {
    Unbounded,
    BoundFlip(f64),
    Pivot { t: f64, row: usize, to_upper: bool },
}

fn sparse_dot(col: &[(usize, f64)], dense: &[f64]) -> f64 {
    col.iter().map(|&(i, w)| w * dense[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::MilpModel;

    fn simple_model(
        bounds: &[(f64, f64)],
        rows: &[(&[(usize, f64)], Sense, f64)],
        obj: &[(usize, f64)],
    ) -> MilpModel {
        let mut m = MilpModel::new("test");
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            m.add_variable(format!("v{j}"), lo, hi, false);
        }
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            m.add_constraint(format!("c{i}"), coeffs.to_vec(), *sense, *rhs);
        }
        m.objective = obj.to_vec();
        m
    }

    #[test]
    fn min_x_with_floor() {
        let model = simple_model(
            &[(0.0, f64::INFINITY)],
            &[(&[(0, 1.0)], Sense::Ge, 3.0)],
            &[(0, 1.0)],
        );
        let mut s = Simplex::from_model(&model);
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.structural_values()[0] - 3.0).abs() < 1e-9);
        assert!((s.objective() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let model = simple_model(
            &[(0.0, f64::INFINITY)],
            &[(&[(0, 1.0)], Sense::Le, -1.0)],
            &[],
        );
        let mut s = Simplex::from_model(&model);
        assert_eq!(s.optimize().unwrap(), Outcome::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let model = simple_model(
            &[(f64::NEG_INFINITY, f64::INFINITY)],
            &[(&[(0, 1.0)], Sense::Le, 5.0)],
            &[(0, 1.0)],
        );
        let mut s = Simplex::from_model(&model);
        assert_eq!(s.optimize().unwrap(), Outcome::Unbounded);
    }

    #[test]
    fn bound_flip_path() {
        // Maximize x0+x1 within boxes under a coupling row; forces flips.
        let model = simple_model(
            &[(0.0, 2.0), (0.0, 2.0)],
            &[(&[(0, 1.0), (1, 1.0)], Sense::Le, 3.0)],
            &[(0, -1.0), (1, -1.0)],
        );
        let mut s = Simplex::from_model(&model);
        assert_eq!(s.optimize().unwrap(), Outcome::Optimal);
        assert!((s.objective() + 3.0).abs() < 1e-9);
    }
}
