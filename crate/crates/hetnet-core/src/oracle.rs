//! Exhaustive reference solver for desk-size instances.
//!
//! For a fixed association pattern the problem collapses: a station's cost
//! is a constant while it is on plus a term linear in its total time share,
//! so the optimal shares solve a small linear program. The oracle therefore
//! enumerates every binary pattern (hard-limited to `|B|·|K| ≤ 12`
//! association variables), filters out patterns that break the decode or
//! association-cap rules, prices the survivors by LP, and reconstructs the
//! cheapest one into an assignment. The reconstruction is re-scored by the
//! ordinary evaluator, which stays the single arbiter of feasibility: the
//! reported optimum is the evaluator's raw power, and the LP is only the
//! search heuristic that orders candidates.
//!
//! This is a validation tool, not a production solver; past a dozen
//! variables it refuses to run.

pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Assignment, NetworkInstance};
use crate::radio::BaseStationParams;
use simplex::{LinearConstraint, LpOutcome};

/// Largest `|B|·|K|` the enumeration accepts: 2^12 patterns.
pub const MAX_ASSOCIATION_VARS: usize = 12;

/// Time shares this small count as "no association" when a pattern's LP
/// solution is turned back into an assignment.
const ALPHA_DROP_TOL: f64 = 1e-12;

/// Power drawn by a station the moment it is on, independent of load.
fn idle_cost_w(p: &BaseStationParams) -> f64 {
    p.p_sf_w * p.phi_sf + p.p_tx_w * p.phi_tx
}

/// Additional power per unit of total time share.
fn marginal_cost_w(p: &BaseStationParams) -> f64 {
    p.p_sf_w * (1.0 - p.phi_sf) + p.p_tx_w * (1.0 - p.phi_tx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

/// Outcome of an exhaustive solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub status: OracleStatus,
    /// Raw power of the optimum as scored by the evaluator.
    pub optimal_p_raw_w: Option<f64>,
    /// The optimal assignment, with zero-share links dropped.
    pub optimal_assignment: Option<Assignment>,
    /// Binary patterns visited: always `2^(|B||K|)`.
    pub enumerated_patterns: u64,
}

/// Optimal time shares for one fixed association pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaOutcome {
    Optimal {
        /// Full row-major share matrix; entries of off links are 0. This is
        /// LP space — the closed interval `[0, 1]` — so shares of exactly 0
        /// can appear and mean "association not worth any time".
        alpha: Vec<f64>,
        /// Idle cost of the pattern's on stations plus the LP's share cost.
        p_raw_w: f64,
    },
    Infeasible,
}

/// Minimizes total power over the time shares of a fixed pattern `a`
/// (row-major, `|B|·|K|` entries).
///
/// The pattern's on/off structure fixes both the idle cost and every link
/// capacity, leaving `min Σ_b c_b·ρ_b` subject to the per-station time
/// budget, the per-receiver demand rows, and `0 ≤ α ≤ 1` — with
/// `c_b = P_b^sf(1−φ^sf) + P_b^tx(1−φ^tx)`. The surplus cap is not
/// imposed: lowering a share never raises cost, so the optimum never
/// over-delivers more than the demand rows force.
///
/// Callers are expected to have filtered `a` against the decode and
/// association-cap rules; this routine prices, it does not police.
pub fn solve_alpha_subproblem(instance: &NetworkInstance, a: &[bool]) -> Result<AlphaOutcome> {
    let nb = instance.n_stations();
    let nk = instance.n_receivers();
    if a.len() != nb * nk {
        return Err(Error::InvalidArgument(format!(
            "pattern holds {} entries, the instance needs {}",
            a.len(),
            nb * nk
        )));
    }
    let station_on: Vec<bool> =
        (0..nb).map(|b| a[b * nk..(b + 1) * nk].iter().any(|&x| x)).collect();

    // Variables: the on links, row-major order.
    let links: Vec<(usize, usize)> = (0..nb)
        .flat_map(|b| (0..nk).map(move |k| (b, k)))
        .filter(|&(b, k)| a[b * nk + k])
        .collect();
    let idle_w: f64 = instance
        .station_params()
        .iter()
        .zip(&station_on)
        .filter(|(_, on)| **on)
        .map(|(p, _)| idle_cost_w(p))
        .sum();

    // A demanded receiver with no serving link is hopeless before any LP.
    for (k, &d) in instance.demands_bps().iter().enumerate() {
        if d > 0.0 && !links.iter().any(|&(_, lk)| lk == k) {
            return Ok(AlphaOutcome::Infeasible);
        }
    }

    let cost: Vec<f64> = links
        .iter()
        .map(|&(b, _)| marginal_cost_w(&instance.station_params()[b]))
        .collect();
    let mut rows: Vec<LinearConstraint> = Vec::new();
    // Per-station time budget over its on links.
    for b in 0..nb {
        if station_on[b] {
            let coeffs = links.iter().map(|&(lb, _)| f64::from(u8::from(lb == b))).collect();
            rows.push(LinearConstraint::le(coeffs, 1.0));
        }
    }
    // Per-receiver demand, normalized to a unit right-hand side.
    for (k, &d) in instance.demands_bps().iter().enumerate() {
        if d > 0.0 {
            let coeffs = links
                .iter()
                .map(|&(lb, lk)| {
                    if lk == k {
                        instance.link_capacity_bps(&station_on, lb, lk) / d
                    } else {
                        0.0
                    }
                })
                .collect();
            rows.push(LinearConstraint::ge(coeffs, 1.0));
        }
    }
    // Each share at most 1.
    for i in 0..links.len() {
        let mut coeffs = vec![0.0; links.len()];
        coeffs[i] = 1.0;
        rows.push(LinearConstraint::le(coeffs, 1.0));
    }

    match simplex::solve_min(&cost, &rows)? {
        LpOutcome::Infeasible => Ok(AlphaOutcome::Infeasible),
        LpOutcome::Optimal { x, objective } => {
            let mut alpha = vec![0.0; nb * nk];
            for (&(b, k), &share) in links.iter().zip(&x) {
                alpha[b * nk + k] = share.clamp(0.0, 1.0);
            }
            Ok(AlphaOutcome::Optimal { alpha, p_raw_w: idle_w + objective })
        }
    }
}

/// Whether a pattern passes the decode and association-cap rules, the two
/// constraint families the time shares cannot influence.
fn pattern_admissible(instance: &NetworkInstance, a: &[bool], station_on: &[bool]) -> bool {
    let nb = instance.n_stations();
    let nk = instance.n_receivers();
    let beta = instance.decoding().beta_lin();
    let cap = instance.decoding().association_cap();
    for k in 0..nk {
        let serving = (0..nb).filter(|&b| a[b * nk + k]).count();
        if serving as f64 >= cap {
            return false;
        }
    }
    for b in 0..nb {
        for k in 0..nk {
            if a[b * nk + k] && instance.sinr(station_on, b, k) < beta {
                return false;
            }
        }
    }
    true
}

/// Turns a pattern and its LP shares into a valid assignment: links whose
/// share rounded to zero are dropped (turning a station fully off only
/// raises everyone else's SINR), and off-link share slots take the neutral
/// value 1.
fn reconstruct(nb: usize, nk: usize, a: &[bool], alpha: &[f64]) -> Assignment {
    let mut a_out = vec![false; nb * nk];
    let mut alpha_out = vec![1.0; nb * nk];
    for i in 0..nb * nk {
        if a[i] && alpha[i] > ALPHA_DROP_TOL {
            a_out[i] = true;
            alpha_out[i] = alpha[i];
        }
    }
    Assignment::new(nb, nk, a_out, alpha_out).expect("clamped shares are valid")
}

/// Exhaustively solves an instance with at most [`MAX_ASSOCIATION_VARS`]
/// association variables.
///
/// Candidate patterns are priced by [`solve_alpha_subproblem`] and then
/// re-scored through the evaluator in ascending price order; the first
/// reconstruction the evaluator accepts is the optimum (later candidates
/// only cost more). The split matters at the feasibility boundary, where
/// the LP's arithmetic and the evaluator's can disagree by an ulp: the
/// evaluator's verdict wins, keeping the oracle and the genetic solver
/// accountable to the same judge.
pub fn solve(instance: &NetworkInstance) -> Result<OracleResult> {
    let nb = instance.n_stations();
    let nk = instance.n_receivers();
    let n_assoc = nb * nk;
    if n_assoc > MAX_ASSOCIATION_VARS {
        return Err(Error::RefusedSize { size: n_assoc, limit: MAX_ASSOCIATION_VARS });
    }
    let n_patterns: u64 = 1 << n_assoc;

    // Price every admissible pattern. Enumeration order is the pattern's
    // numeric value, so the collected list is deterministic.
    let mut priced: Vec<(f64, u64, Vec<f64>)> = (0..n_patterns)
        .into_par_iter()
        .map(|bits| -> Result<Option<(f64, u64, Vec<f64>)>> {
            let a: Vec<bool> = (0..n_assoc).map(|i| bits >> i & 1 == 1).collect();
            let station_on: Vec<bool> =
                (0..nb).map(|b| a[b * nk..(b + 1) * nk].iter().any(|&x| x)).collect();
            if !pattern_admissible(instance, &a, &station_on) {
                return Ok(None);
            }
            match solve_alpha_subproblem(instance, &a)? {
                AlphaOutcome::Infeasible => Ok(None),
                AlphaOutcome::Optimal { alpha, p_raw_w } => Ok(Some((p_raw_w, bits, alpha))),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    priced.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));

    for (_, bits, alpha) in &priced {
        let a: Vec<bool> = (0..n_assoc).map(|i| bits >> i & 1 == 1).collect();
        let assignment = reconstruct(nb, nk, &a, alpha);
        let report = instance.evaluate(&assignment);
        if report.feasible {
            return Ok(OracleResult {
                status: OracleStatus::Optimal,
                optimal_p_raw_w: Some(report.p_raw_w),
                optimal_assignment: Some(assignment),
                enumerated_patterns: n_patterns,
            });
        }
    }
    Ok(OracleResult {
        status: OracleStatus::Infeasible,
        optimal_p_raw_w: None,
        optimal_assignment: None,
        enumerated_patterns: n_patterns,
    })
}
