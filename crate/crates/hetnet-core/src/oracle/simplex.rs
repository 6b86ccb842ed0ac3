//! Dense two-phase simplex for the oracle's tiny linear programs.
//!
//! Problems arrive as `min c·x` subject to `≤`/`≥` rows over non-negative
//! variables; upper bounds are plain rows. Sizes are desk-scale (a dozen
//! variables, a few dozen rows), so a dense tableau with Bland's
//! anti-cycling rule is plenty: the entering column is the lowest index
//! with a negative reduced cost, and ratio-test ties resolve to the lowest
//! basis index. Tolerances are absolute (the oracle normalizes its rows to
//! unit right-hand sides), targeting 1e-9 relative optimality.

use crate::error::{Error, Result};

/// Comparison direction of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    Le,
    Ge,
}

/// One row `coeffs · x (≤ or ≥) rhs`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub op: ConstraintOp,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, op: ConstraintOp::Le, rhs }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coeffs, op: ConstraintOp::Ge, rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

/// Reduced costs below this are considered improving; pivots below it are
/// considered zero.
const EPS: f64 = 1e-9;
/// Ratio-test tie window.
const TIE: f64 = 1e-12;
/// Phase-1 residual above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-7;
/// Pivot-count guard; these programs finish in tens of pivots.
const MAX_PIVOTS: usize = 100_000;

/// Minimizes `c·x` over `x ≥ 0` subject to `constraints`.
pub fn solve_min(c: &[f64], constraints: &[LinearConstraint]) -> Result<LpOutcome> {
    let n = c.len();
    let m = constraints.len();
    for row in constraints {
        if row.coeffs.len() != n {
            return Err(Error::InvalidArgument(format!(
                "constraint has {} coefficients for {n} variables",
                row.coeffs.len()
            )));
        }
    }

    // Columns: structural | one slack or surplus per row | artificials.
    // Normalize every row to a non-negative right-hand side first.
    let mut artificial_of_row: Vec<Option<usize>> = vec![None; m];
    let mut n_artificial = 0;
    let mut normalized: Vec<(Vec<f64>, ConstraintOp, f64)> = Vec::with_capacity(m);
    for (i, row) in constraints.iter().enumerate() {
        let (coeffs, op, rhs) = if row.rhs < 0.0 {
            let flipped = match row.op {
                ConstraintOp::Le => ConstraintOp::Ge,
                ConstraintOp::Ge => ConstraintOp::Le,
            };
            (row.coeffs.iter().map(|a| -a).collect(), flipped, -row.rhs)
        } else {
            (row.coeffs.clone(), row.op, row.rhs)
        };
        if op == ConstraintOp::Ge {
            artificial_of_row[i] = Some(n_artificial);
            n_artificial += 1;
        }
        normalized.push((coeffs, op, rhs));
    }
    let n_cols = n + m + n_artificial;

    let mut tableau = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        n_cols,
    };
    for (i, (coeffs, op, rhs)) in normalized.iter().enumerate() {
        let mut row = vec![0.0; n_cols + 1];
        row[..n].copy_from_slice(coeffs);
        row[n_cols] = *rhs;
        match op {
            ConstraintOp::Le => {
                row[n + i] = 1.0;
                tableau.basis.push(n + i);
            }
            ConstraintOp::Ge => {
                row[n + i] = -1.0;
                let art = n + m + artificial_of_row[i].unwrap();
                row[art] = 1.0;
                tableau.basis.push(art);
            }
        }
        tableau.rows.push(row);
    }

    if n_artificial > 0 {
        // Phase 1: minimize the artificial total.
        let mut phase1_cost = vec![0.0; n_cols];
        for j in n + m..n_cols {
            phase1_cost[j] = 1.0;
        }
        tableau.optimize(&phase1_cost, n_cols)?;
        let residual: f64 = tableau
            .basis
            .iter()
            .zip(&tableau.rows)
            .filter(|(b, _)| **b >= n + m)
            .map(|(_, row)| row[n_cols])
            .sum();
        if residual > FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot leftover artificials out where possible; rows that cannot
        // release theirs are redundant and harmless since artificial
        // columns are barred from entering in phase 2.
        for i in 0..m {
            if tableau.basis[i] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| tableau.rows[i][j].abs() > EPS) {
                    tableau.pivot(i, col);
                }
            }
        }
    }

    // Phase 2 over the real columns only.
    let mut phase2_cost = vec![0.0; n_cols];
    phase2_cost[..n].copy_from_slice(c);
    tableau.optimize(&phase2_cost, n + m)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tableau.basis.iter().enumerate() {
        if b < n {
            x[b] = tableau.rows[i][n_cols];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpOutcome::Optimal { x, objective })
}

struct Tableau {
    /// `m` rows of `n_cols + 1` entries; the right-hand side sits last and
    /// stays non-negative throughout.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.rows[r][c];
        for x in &mut self.rows[r] {
            *x *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Runs the simplex loop for `cost`, letting only columns below
    /// `enter_limit` enter the basis.
    fn optimize(&mut self, cost: &[f64], enter_limit: usize) -> Result<()> {
        // Reduced-cost row, with basic columns priced out.
        let mut reduced = vec![0.0; self.n_cols + 1];
        reduced[..self.n_cols].copy_from_slice(cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (r, x) in reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * x;
                }
            }
        }

        for _ in 0..MAX_PIVOTS {
            let Some(enter) = (0..enter_limit).find(|&j| reduced[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter] > EPS {
                    let ratio = row[self.n_cols] / row[enter];
                    let take = match leave {
                        None => true,
                        Some(l) => {
                            let tie = (ratio - best).abs() <= TIE * best.abs().max(1.0);
                            if tie {
                                self.basis[i] < self.basis[l]
                            } else {
                                ratio < best
                            }
                        }
                    };
                    if take {
                        best = best.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(leave) = leave else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            self.pivot(leave, enter);
            let f = reduced[enter];
            for (r, x) in reduced.iter_mut().zip(&self.rows[leave]) {
                *r -= f * x;
            }
            reduced[enter] = 0.0;
        }
        Err(Error::Numerical("simplex pivot limit exceeded".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn optimal(outcome: LpOutcome) -> (Vec<f64>, f64) {
        match outcome {
            LpOutcome::Optimal { x, objective } => (x, objective),
            LpOutcome::Infeasible => panic!("expected an optimum"),
        }
    }

    #[test]
    fn one_variable_lower_bound() {
        // min x s.t. x >= 3, x <= 10.
        let out = solve_min(
            &[1.0],
            &[LinearConstraint::ge(vec![1.0], 3.0), LinearConstraint::le(vec![1.0], 10.0)],
        )
        .unwrap();
        let (x, obj) = optimal(out);
        assert_relative_eq!(x[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(obj, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn maximization_written_as_negated_minimum() {
        // max x + y over the triangle x + y <= 1 is 1.
        let out = solve_min(
            &[-1.0, -1.0],
            &[
                LinearConstraint::le(vec![1.0, 1.0], 1.0),
                LinearConstraint::le(vec![1.0, 0.0], 1.0),
                LinearConstraint::le(vec![0.0, 1.0], 1.0),
            ],
        )
        .unwrap();
        let (_, obj) = optimal(out);
        assert_relative_eq!(obj, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let out = solve_min(
            &[1.0],
            &[LinearConstraint::ge(vec![1.0], 2.0), LinearConstraint::le(vec![1.0], 1.0)],
        )
        .unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn negative_rhs_rows_normalize() {
        // -x <= -2 is x >= 2.
        let out = solve_min(
            &[1.0],
            &[LinearConstraint::le(vec![-1.0], -2.0), LinearConstraint::le(vec![1.0], 5.0)],
        )
        .unwrap();
        let (x, obj) = optimal(out);
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(obj, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn unbounded_is_reported_as_an_error() {
        assert!(solve_min(&[-1.0], &[LinearConstraint::ge(vec![1.0], 1.0)]).is_err());
    }

    #[test]
    fn two_variable_transport_shape() {
        // min 2x + 3y s.t. x + y >= 4, x <= 3, y <= 3 → x=3, y=1, obj 9.
        let out = solve_min(
            &[2.0, 3.0],
            &[
                LinearConstraint::ge(vec![1.0, 1.0], 4.0),
                LinearConstraint::le(vec![1.0, 0.0], 3.0),
                LinearConstraint::le(vec![0.0, 1.0], 3.0),
            ],
        )
        .unwrap();
        let (x, obj) = optimal(out);
        assert_relative_eq!(x[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-9);
        assert_relative_eq!(obj, 9.0, epsilon = 1e-9);
    }

    /// Exhaustive reference: every vertex of the polytope (each subset of n
    /// rows from constraints plus bounds, solved as equalities), filtered
    /// for feasibility; the optimum of a bounded feasible LP sits on one.
    fn vertex_enumeration(c: &[f64], rows: &[LinearConstraint]) -> Option<f64> {
        let n = c.len();
        // Every constraint as a row (coeffs, rhs), including x_i >= 0.
        let mut all: Vec<(Vec<f64>, f64)> = Vec::new();
        for r in rows {
            all.push((r.coeffs.clone(), r.rhs));
        }
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            all.push((e, 0.0));
        }
        let feasible = |x: &[f64]| -> bool {
            rows.iter().all(|r| {
                let lhs: f64 = r.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
                match r.op {
                    ConstraintOp::Le => lhs <= r.rhs + 1e-7,
                    ConstraintOp::Ge => lhs >= r.rhs - 1e-7,
                }
            }) && x.iter().all(|&v| v >= -1e-7)
        };
        let mut best: Option<f64> = None;
        // All n-subsets of `all`.
        fn subsets(k: usize, start: usize, total: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if k == 0 {
                out.push(current.clone());
                return;
            }
            for i in start..total {
                current.push(i);
                subsets(k - 1, i + 1, total, current, out);
                current.pop();
            }
        }
        let mut combos = Vec::new();
        subsets(n, 0, all.len(), &mut Vec::new(), &mut combos);
        for combo in combos {
            // Solve the n x n system by Gaussian elimination.
            let mut m: Vec<Vec<f64>> = combo
                .iter()
                .map(|&i| {
                    let mut row = all[i].0.clone();
                    row.push(all[i].1);
                    row
                })
                .collect();
            let mut singular = false;
            for col in 0..n {
                let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
                if m[piv][col].abs() < 1e-10 {
                    singular = true;
                    break;
                }
                m.swap(col, piv);
                for r in 0..n {
                    if r != col {
                        let f = m[r][col] / m[col][col];
                        for j in col..=n {
                            m[r][j] -= f * m[col][j];
                        }
                    }
                }
            }
            if singular {
                continue;
            }
            let x: Vec<f64> = (0..n).map(|i| m[i][n] / m[i][i]).collect();
            if x.iter().any(|v| !v.is_finite()) || !feasible(&x) {
                continue;
            }
            let obj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn agrees_with_vertex_enumeration(
            n in 1usize..=3,
            c_raw in proptest::collection::vec(-3.0f64..3.0, 3),
            rows_raw in proptest::collection::vec(
                (proptest::collection::vec(-2.0f64..2.0, 3), 0usize..2, -1.5f64..1.5),
                1..5,
            ),
        ) {
            let c = &c_raw[..n];
            // Box bounds keep everything bounded; random rows on top.
            let mut rows: Vec<LinearConstraint> = (0..n).map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                LinearConstraint::le(e, 1.0)
            }).collect();
            for (coeffs, op, rhs) in &rows_raw {
                let coeffs = coeffs[..n].to_vec();
                rows.push(match op {
                    0 => LinearConstraint::le(coeffs, *rhs),
                    _ => LinearConstraint::ge(coeffs, *rhs),
                });
            }
            let simplex = solve_min(c, &rows).unwrap();
            let reference = vertex_enumeration(c, &rows);
            match (simplex, reference) {
                (LpOutcome::Optimal { objective, .. }, Some(expected)) => {
                    prop_assert!(
                        (objective - expected).abs() <= 1e-6 * expected.abs().max(1.0),
                        "simplex {objective} vs vertices {expected}"
                    );
                }
                (LpOutcome::Infeasible, None) => {}
                (got, want) => prop_assert!(false, "disagreement: {got:?} vs {want:?}"),
            }
        }
    }
}
