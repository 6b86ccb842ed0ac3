//! The optimization problem itself: network instances, candidate
//! assignments, and the evaluator that scores an assignment against every
//! constraint.
//!
//! An instance fixes the geometry, per-station power models, receiver
//! demands, and decoding parameters. A candidate answer is an
//! [`Assignment`]: a binary association matrix `a` and a time-share matrix
//! `alpha`. [`NetworkInstance::evaluate`] prices the assignment (support
//! plus transmission power), checks all constraint families, and folds
//! violations into a penalized objective so that infeasible candidates can
//! still be ranked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Layout, N_MACRO};
use crate::radio::{self, BaseStationParams, DecodingParams, GainMatrix, StationClass};

/// Fraction of over-delivery tolerated per receiver before the surplus cap
/// trips, see [`NetworkInstance::evaluate`].
pub const DEFAULT_ETA: f64 = 0.005;

/// Standard parameter vector for a layout with `n_pico` picocells: three
/// sector macrocells followed by the picocells, all on reference values.
pub fn standard_station_params(n_pico: usize) -> Vec<BaseStationParams> {
    let mut params = vec![BaseStationParams::macro_cell(); N_MACRO];
    params.extend(std::iter::repeat(BaseStationParams::pico_cell()).take(n_pico));
    params
}

/// Support and transmission power drawn by one station: a fixed fraction of
/// each budget whenever the station is on, plus the load-proportional
/// remainder scaled by the station's total time share `ρ_b`.
pub fn station_power_w(params: &BaseStationParams, on: bool, rho: f64) -> (f64, f64) {
    let ind = if on { 1.0 } else { 0.0 };
    let sf = params.p_sf_w * (params.phi_sf * ind + (1.0 - params.phi_sf) * rho);
    let tx = params.p_tx_w * (params.phi_tx * ind + (1.0 - params.phi_tx) * rho);
    (sf, tx)
}

/// Penalty unit `P^viol = Σ_b (P_b^sf + P_b^tx)`: the largest power any
/// assignment could draw, charged once per violated constraint.
pub fn total_violation_penalty_w(params: &[BaseStationParams]) -> f64 {
    params.iter().map(|p| p.p_sf_w + p.p_tx_w).sum()
}

/// Which stations of the reference network are allowed to transmit.
///
/// The canonical labels come from the experiment grid on the 12-picocell
/// network: `{n}m` is the number of macrocells left on (counting sectors
/// up from the upper-right one) and `12p`/`0p` says whether the picocells
/// are on. The same masks apply to any instance regardless of its actual
/// picocell count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// `0m12p`: picocells only.
    #[serde(rename = "0m12p")]
    NoMacros,
    /// `1m12p`: the upper-right-sector macrocell plus all picocells.
    #[serde(rename = "1m12p")]
    OneMacro,
    /// `2m12p`: the two upper-sector macrocells plus all picocells.
    #[serde(rename = "2m12p")]
    TwoMacros,
    /// `3m12p`: everything on; the identity mask.
    #[serde(rename = "3m12p")]
    FullNetwork,
    /// `3m0p`: macrocells only.
    #[serde(rename = "3m0p")]
    MacrosOnly,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::NoMacros,
        Scenario::OneMacro,
        Scenario::TwoMacros,
        Scenario::FullNetwork,
        Scenario::MacrosOnly,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::NoMacros => "0m12p",
            Scenario::OneMacro => "1m12p",
            Scenario::TwoMacros => "2m12p",
            Scenario::FullNetwork => "3m12p",
            Scenario::MacrosOnly => "3m0p",
        }
    }

    /// Station ids whose transmission the scenario forbids, for an instance
    /// with `n_stations` stations total.
    pub fn forbidden_stations(self, n_stations: usize) -> Vec<usize> {
        let live_macros = match self {
            Scenario::NoMacros => 0,
            Scenario::OneMacro => 1,
            Scenario::TwoMacros => 2,
            Scenario::FullNetwork | Scenario::MacrosOnly => N_MACRO,
        };
        let mut forbidden: Vec<usize> = (live_macros..N_MACRO).collect();
        if self == Scenario::MacrosOnly {
            forbidden.extend(N_MACRO..n_stations);
        }
        forbidden
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.label() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// A fully specified problem instance. Immutable once built except for the
/// demand vector, which is independent of the derived state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDoc", into = "NetworkDoc")]
pub struct NetworkInstance {
    layout: Layout,
    station_params: Vec<BaseStationParams>,
    demands_bps: Vec<f64>,
    decoding: DecodingParams,
    eta: f64,
    // Derived at build time, rebuilt on deserialization and masking.
    gains: GainMatrix,
    p_viol_w: f64,
}

/// The defining fields of an instance; the JSON face of [`NetworkInstance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    layout: Layout,
    station_params: Vec<BaseStationParams>,
    demands_bps: Vec<f64>,
    decoding: DecodingParams,
    eta: f64,
}

impl TryFrom<NetworkDoc> for NetworkInstance {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        NetworkInstance::build(doc.layout, doc.station_params, doc.demands_bps, doc.decoding, doc.eta)
    }
}

impl From<NetworkInstance> for NetworkDoc {
    fn from(ni: NetworkInstance) -> Self {
        NetworkDoc {
            layout: ni.layout,
            station_params: ni.station_params,
            demands_bps: ni.demands_bps,
            decoding: ni.decoding,
            eta: ni.eta,
        }
    }
}

impl NetworkInstance {
    /// Assembles and validates an instance: station parameters against the
    /// layout, non-negative finite demands, `η` in `(0,1)`, and a received-
    /// power matrix free of co-located pairs. Sector balance is a concern of
    /// the layout generator, not of instance assembly, so hand-rolled
    /// unbalanced layouts are accepted.
    pub fn build(
        layout: Layout,
        station_params: Vec<BaseStationParams>,
        demands_bps: Vec<f64>,
        decoding: DecodingParams,
        eta: f64,
    ) -> Result<Self> {
        decoding.validate()?;
        for (b, params) in station_params.iter().enumerate() {
            let expected = if b < N_MACRO { StationClass::Macro } else { StationClass::Pico };
            if params.class != expected {
                return Err(Error::InvalidArgument(format!(
                    "station {b} must be of class {expected:?} by position in the layout"
                )));
            }
        }
        if demands_bps.len() != layout.receiver_positions.len() {
            return Err(Error::InvalidArgument(format!(
                "{} demands for {} receivers",
                demands_bps.len(),
                layout.receiver_positions.len()
            )));
        }
        if !demands_bps.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(Error::InvalidArgument("demands must be finite and non-negative".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")));
        }
        let gains = radio::build_gain_matrix(&layout, &station_params)?;
        let p_viol_w = total_violation_penalty_w(&station_params);
        Ok(NetworkInstance { layout, station_params, demands_bps, decoding, eta, gains, p_viol_w })
    }

    pub fn n_stations(&self) -> usize {
        self.station_params.len()
    }

    pub fn n_receivers(&self) -> usize {
        self.demands_bps.len()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn station_params(&self) -> &[BaseStationParams] {
        &self.station_params
    }

    pub fn demands_bps(&self) -> &[f64] {
        &self.demands_bps
    }

    pub fn decoding(&self) -> &DecodingParams {
        &self.decoding
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gains(&self) -> &GainMatrix {
        &self.gains
    }

    /// Penalty unit charged per violated constraint, `Σ_b (P_b^sf + P_b^tx)`
    /// over the station parameters currently in force.
    pub fn p_viol_w(&self) -> f64 {
        self.p_viol_w
    }

    /// Replaces every demand with `demand_bps`.
    pub fn set_uniform_demand(&mut self, demand_bps: f64) -> Result<()> {
        if !(demand_bps.is_finite() && demand_bps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "demand must be finite and non-negative, got {demand_bps}"
            )));
        }
        self.demands_bps.fill(demand_bps);
        Ok(())
    }

    /// A copy of the instance with the scenario's forbidden stations muted:
    /// their transmission budget is zeroed, which empties their gain rows
    /// and shrinks the penalty unit accordingly. Support power is untouched.
    pub fn apply_scenario(&self, scenario: Scenario) -> Result<NetworkInstance> {
        self.mask_stations(&scenario.forbidden_stations(self.n_stations()))
    }

    /// [`NetworkInstance::apply_scenario`] with an explicit forbidden set.
    pub fn mask_stations(&self, forbidden: &[usize]) -> Result<NetworkInstance> {
        let mut params = self.station_params.clone();
        for &b in forbidden {
            let p = params.get_mut(b).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "cannot mask station {b}; the instance has {} stations",
                    self.station_params.len()
                ))
            })?;
            p.p_tx_w = 0.0;
        }
        NetworkInstance::build(
            self.layout.clone(),
            params,
            self.demands_bps.clone(),
            self.decoding,
            self.eta,
        )
    }

    /// Per-link SINR induced by an on/off pattern; zero if `b` is off.
    pub fn sinr(&self, station_on: &[bool], b: usize, k: usize) -> f64 {
        radio::sinr(&self.gains, &self.decoding, station_on, b, k)
    }

    /// Capacity of link `(b, k)` under the interference of `station_on`.
    pub fn link_capacity_bps(&self, station_on: &[bool], b: usize, k: usize) -> f64 {
        radio::capacity(self.sinr(station_on, b, k), self.decoding.narrowband_hz)
    }

    /// Support and transmission power totals for an assignment.
    pub fn power_terms(&self, assignment: &Assignment) -> (f64, f64) {
        let station_on = assignment.station_on();
        let rho = assignment.time_shares();
        self.power_terms_inner(&station_on, &rho)
    }

    fn power_terms_inner(&self, station_on: &[bool], rho: &[f64]) -> (f64, f64) {
        let mut sf = 0.0;
        let mut tx = 0.0;
        for (b, params) in self.station_params.iter().enumerate() {
            let (s, t) = station_power_w(params, station_on[b], rho[b]);
            sf += s;
            tx += t;
        }
        (sf, tx)
    }

    /// Scores `assignment` against every constraint family and prices it.
    ///
    /// Families, each counted per violated constraint instance:
    /// - decode, per association: the link's SINR must reach the threshold;
    /// - association cap, per receiver: strictly fewer than `1 + G/β`
    ///   associations;
    /// - time budget, per station: time shares sum to at most 1;
    /// - demand, per receiver: delivered rate `Σ_b a·α·C` covers the demand;
    /// - surplus cap, per receiver: `Σ_b a·(α−η)·C` may not exceed the
    ///   demand (over-delivery beyond the `η` slack is penalized).
    ///
    /// Feasibility requires the first four families clean; the surplus cap
    /// is charged in the penalty but never blocks feasibility. Every
    /// violated instance adds one penalty unit `P^viol` on top of the raw
    /// power.
    pub fn evaluate(&self, assignment: &Assignment) -> EvaluationReport {
        assert_eq!(assignment.n_stations(), self.n_stations(), "assignment/instance shape");
        assert_eq!(assignment.n_receivers(), self.n_receivers(), "assignment/instance shape");
        let nb = self.n_stations();
        let nk = self.n_receivers();
        let beta = self.decoding.beta_lin();
        let cap = self.decoding.association_cap();
        let station_on = assignment.station_on();

        let mut violations = ViolationCounts::default();
        let mut rho = vec![0.0; nb];
        let mut delivered = vec![0.0; nk];
        let mut surplus = vec![0.0; nk];
        let mut associations = vec![0usize; nk];
        for b in 0..nb {
            for k in 0..nk {
                if !assignment.a(b, k) {
                    continue;
                }
                let alpha = assignment.alpha(b, k);
                associations[k] += 1;
                rho[b] += alpha;
                let sinr = self.sinr(&station_on, b, k);
                if sinr < beta {
                    violations.decode += 1;
                }
                let capacity = radio::capacity(sinr, self.decoding.narrowband_hz);
                delivered[k] += alpha * capacity;
                surplus[k] += (alpha - self.eta) * capacity;
            }
        }
        for k in 0..nk {
            if associations[k] as f64 >= cap {
                violations.assoc_cap += 1;
            }
            if delivered[k] < self.demands_bps[k] {
                violations.demand += 1;
            }
            if surplus[k] > self.demands_bps[k] {
                violations.surplus_cap += 1;
            }
        }
        for b in 0..nb {
            if rho[b] > 1.0 {
                violations.time_budget += 1;
            }
        }

        let (p_sf_w, p_tx_w) = self.power_terms_inner(&station_on, &rho);
        let p_raw_w = p_sf_w + p_tx_w;
        let v_total = violations.total();
        EvaluationReport {
            p_sf_w,
            p_tx_w,
            p_raw_w,
            violations,
            v_total,
            p_penalized_w: p_raw_w + v_total as f64 * self.p_viol_w,
            feasible: violations.blocking() == 0,
        }
    }
}

/// A candidate answer: which stations serve which receivers (`a`), and the
/// fraction of time each association runs (`alpha`). Both matrices are
/// row-major by station; `alpha` entries exist for every pair but only
/// matter where `a` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssignmentDoc", into = "AssignmentDoc")]
pub struct Assignment {
    n_stations: usize,
    n_receivers: usize,
    a: Vec<bool>,
    alpha: Vec<f64>,
}

/// JSON face of [`Assignment`]: nested rows, `a` as 0/1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentDoc {
    a: Vec<Vec<u8>>,
    alpha: Vec<Vec<f64>>,
}

impl TryFrom<AssignmentDoc> for Assignment {
    type Error = Error;

    fn try_from(doc: AssignmentDoc) -> Result<Self> {
        let n_stations = doc.a.len();
        if doc.alpha.len() != n_stations {
            return Err(Error::Schema("a and alpha must have the same number of rows".into()));
        }
        let n_receivers = doc.a.first().map_or(0, Vec::len);
        let mut a = Vec::with_capacity(n_stations * n_receivers);
        let mut alpha = Vec::with_capacity(n_stations * n_receivers);
        for (row_a, row_alpha) in doc.a.iter().zip(&doc.alpha) {
            if row_a.len() != n_receivers || row_alpha.len() != n_receivers {
                return Err(Error::Schema("ragged assignment rows".into()));
            }
            for &bit in row_a {
                match bit {
                    0 => a.push(false),
                    1 => a.push(true),
                    other => {
                        return Err(Error::Schema(format!("association entries are 0 or 1, got {other}")))
                    }
                }
            }
            for &x in row_alpha {
                if !(x > 0.0 && x <= 1.0) {
                    return Err(Error::Schema(format!("alpha entries lie in (0, 1], got {x}")));
                }
                alpha.push(x);
            }
        }
        Ok(Assignment { n_stations, n_receivers, a, alpha })
    }
}

impl From<Assignment> for AssignmentDoc {
    fn from(asg: Assignment) -> Self {
        let a = (0..asg.n_stations)
            .map(|b| (0..asg.n_receivers).map(|k| asg.a(b, k) as u8).collect())
            .collect();
        let alpha = (0..asg.n_stations)
            .map(|b| (0..asg.n_receivers).map(|k| asg.alpha(b, k)).collect())
            .collect();
        AssignmentDoc { a, alpha }
    }
}

impl Assignment {
    /// Builds from flat row-major matrices; `alpha` entries must lie in
    /// `(0, 1]`.
    pub fn new(n_stations: usize, n_receivers: usize, a: Vec<bool>, alpha: Vec<f64>) -> Result<Self> {
        if a.len() != n_stations * n_receivers || alpha.len() != n_stations * n_receivers {
            return Err(Error::Schema(format!(
                "matrices must hold {} entries for {n_stations} stations x {n_receivers} receivers",
                n_stations * n_receivers
            )));
        }
        if let Some(bad) = alpha.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
            return Err(Error::Schema(format!("alpha entries lie in (0, 1], got {bad}")));
        }
        Ok(Assignment { n_stations, n_receivers, a, alpha })
    }

    /// The all-off assignment; `alpha` is filled with the neutral 1.
    pub fn empty(n_stations: usize, n_receivers: usize) -> Self {
        Assignment {
            n_stations,
            n_receivers,
            a: vec![false; n_stations * n_receivers],
            alpha: vec![1.0; n_stations * n_receivers],
        }
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn n_receivers(&self) -> usize {
        self.n_receivers
    }

    #[inline]
    pub fn a(&self, b: usize, k: usize) -> bool {
        self.a[b * self.n_receivers + k]
    }

    #[inline]
    pub fn alpha(&self, b: usize, k: usize) -> f64 {
        self.alpha[b * self.n_receivers + k]
    }

    /// Derived on/off state per station: on iff it serves anyone.
    pub fn station_on(&self) -> Vec<bool> {
        (0..self.n_stations)
            .map(|b| self.a[b * self.n_receivers..(b + 1) * self.n_receivers].iter().any(|&x| x))
            .collect()
    }

    /// Derived total time share `ρ_b = Σ_k a_bk·α_bk` per station.
    pub fn time_shares(&self) -> Vec<f64> {
        (0..self.n_stations)
            .map(|b| {
                (0..self.n_receivers)
                    .filter(|&k| self.a(b, k))
                    .map(|k| self.alpha(b, k))
                    .sum()
            })
            .collect()
    }

    /// Number of stations serving receiver `k`.
    pub fn associations_of(&self, k: usize) -> usize {
        (0..self.n_stations).filter(|&b| self.a(b, k)).count()
    }
}

/// Violation tallies per constraint family; each unit is one violated
/// constraint instance (one link, one receiver, or one station).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationCounts {
    pub decode: usize,
    pub assoc_cap: usize,
    pub time_budget: usize,
    pub demand: usize,
    pub surplus_cap: usize,
}

impl ViolationCounts {
    /// All violations, penalty-relevant.
    pub fn total(&self) -> usize {
        self.decode + self.assoc_cap + self.time_budget + self.demand + self.surplus_cap
    }

    /// Violations that block feasibility: everything except the surplus cap.
    pub fn blocking(&self) -> usize {
        self.decode + self.assoc_cap + self.time_budget + self.demand
    }
}

/// Everything the evaluator learns about one assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub p_sf_w: f64,
    pub p_tx_w: f64,
    /// `p_sf_w + p_tx_w`; the objective when feasible.
    pub p_raw_w: f64,
    pub violations: ViolationCounts,
    pub v_total: usize,
    /// `p_raw_w + v_total · P^viol`; the fitness the solver ranks by.
    pub p_penalized_w: f64,
    pub feasible: bool,
}
