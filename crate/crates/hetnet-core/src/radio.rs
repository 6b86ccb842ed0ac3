//! Physical-layer arithmetic: distance-based reception, SINR under
//! spreading, the decode threshold, Shannon capacity, and the cap on
//! simultaneous associations.
//!
//! All SINR work happens in linear scale; the threshold β enters in dB and
//! is converted exactly once. Transmissions are spread by a processing gain
//! `G = W/N`, so the narrowband signal is despread by `G` while interferers
//! stay wideband.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sector_of, Layout, N_MACRO};

/// Station hardware class. Macrocells are sectorized (one per fixed 120°
/// sector, co-sited at the region center); picocells are omnidirectional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationClass {
    Macro,
    Pico,
}

/// Per-station propagation and power-model parameters.
///
/// `loss_db` and `tau` shape the path loss; the four power fields split the
/// station's consumption into a support part and a transmission part, each
/// with a fixed fraction (`phi_*`) that is load-independent while the station
/// is on. The power actually radiated is the load-dependent remainder of the
/// transmission budget, [`BaseStationParams::transmit_power_w`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStationParams {
    pub class: StationClass,
    /// Path-loss constant `L_b`, dB.
    pub loss_db: f64,
    /// Path-loss decay exponent `τ_b`; must exceed 2.
    pub tau: f64,
    /// Support-function power budget `P_b^sf`, W.
    pub p_sf_w: f64,
    /// Fixed fraction of the support budget drawn whenever the station is on.
    pub phi_sf: f64,
    /// Transmission power budget `P_b^tx`, W.
    pub p_tx_w: f64,
    /// Fixed fraction of the transmission budget drawn whenever on.
    pub phi_tx: f64,
}

impl BaseStationParams {
    /// Macrocell column of the reference parameter set.
    pub fn macro_cell() -> Self {
        BaseStationParams {
            class: StationClass::Macro,
            loss_db: 128.1,
            tau: 3.76,
            p_sf_w: 235.0,
            phi_sf: 0.85,
            p_tx_w: 265.0,
            phi_tx: 0.85,
        }
    }

    /// Picocell column of the reference parameter set.
    pub fn pico_cell() -> Self {
        BaseStationParams {
            class: StationClass::Pico,
            loss_db: 140.7,
            tau: 3.67,
            p_sf_w: 28.0,
            phi_sf: 0.5,
            p_tx_w: 5.0,
            phi_tx: 0.8,
        }
    }

    /// Radiated power `P_b = P_b^tx · (1 − φ_b^tx)`: the load-dependent
    /// remainder of the transmission budget.
    pub fn transmit_power_w(&self) -> f64 {
        self.p_tx_w * (1.0 - self.phi_tx)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 2.0) {
            return Err(Error::InvalidArgument(format!(
                "path-loss exponent must exceed 2, got {}",
                self.tau
            )));
        }
        if self.p_sf_w < 0.0 || self.p_tx_w < 0.0 {
            return Err(Error::InvalidArgument("power budgets must be non-negative".into()));
        }
        for (name, phi) in [("phi_sf", self.phi_sf), ("phi_tx", self.phi_tx)] {
            if !(0.0..=1.0).contains(&phi) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {phi}"
                )));
            }
        }
        Ok(())
    }
}

/// Spreading and noise parameters shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingParams {
    /// Noise spectral density `γ₀`, W/Hz.
    pub gamma0_w_per_hz: f64,
    /// Decode threshold `β`, dB. Compared in linear scale.
    pub beta_db: f64,
    /// Narrowband signal bandwidth `N`, Hz.
    pub narrowband_hz: f64,
    /// Processing gain `G = W/N`; the wideband `W` is derived.
    pub processing_gain: f64,
}

impl Default for DecodingParams {
    /// Decoding column of the reference parameter set.
    fn default() -> Self {
        DecodingParams {
            gamma0_w_per_hz: 1.174e-20,
            beta_db: 5.0,
            narrowband_hz: 1e7,
            processing_gain: 128.0,
        }
    }
}

impl DecodingParams {
    /// Wideband bandwidth `W = N·G`, Hz.
    pub fn wideband_hz(&self) -> f64 {
        self.narrowband_hz * self.processing_gain
    }

    /// Decode threshold in linear scale, `10^(β_dB/10)`.
    pub fn beta_lin(&self) -> f64 {
        10f64.powf(self.beta_db / 10.0)
    }

    /// Wideband noise power `γ₀·W`, W.
    pub fn noise_w(&self) -> f64 {
        self.gamma0_w_per_hz * self.wideband_hz()
    }

    /// Real-valued right side of the per-receiver association bound,
    /// `1 + G/β`.
    pub fn association_cap(&self) -> f64 {
        1.0 + self.processing_gain / self.beta_lin()
    }

    /// Largest association count a receiver can sustain, see [`n_max`].
    pub fn n_max(&self) -> usize {
        n_max(self.processing_gain, self.beta_lin())
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma0_w_per_hz <= 0.0 || self.narrowband_hz <= 0.0 || self.processing_gain <= 0.0
        {
            return Err(Error::InvalidArgument(
                "noise density, narrowband bandwidth, and processing gain must be positive".into(),
            ));
        }
        if self.beta_lin() <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "decode threshold must exceed 0 dB, got {} dB",
                self.beta_db
            )));
        }
        Ok(())
    }
}

/// Received powers `R_bk` (W), row-major by station then receiver, for the
/// radiated power and sector rule in force when the matrix was built.
///
/// An entry is zero exactly when the station cannot reach the receiver: a
/// macrocell outside its sector, or any station with zero radiated power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrix {
    n_stations: usize,
    n_receivers: usize,
    r_w: Vec<f64>,
}

impl GainMatrix {
    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn n_receivers(&self) -> usize {
        self.n_receivers
    }

    /// Received power from station `b` at receiver `k`, W.
    #[inline]
    pub fn at(&self, b: usize, k: usize) -> f64 {
        self.r_w[b * self.n_receivers + k]
    }

    /// Row of received powers for station `b`, one entry per receiver.
    #[inline]
    pub fn row(&self, b: usize) -> &[f64] {
        &self.r_w[b * self.n_receivers..(b + 1) * self.n_receivers]
    }

    /// Debug dump, one `b,k,R_watts` row per entry.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "k", "R_watts"])?;
        for b in 0..self.n_stations {
            for k in 0..self.n_receivers {
                w.write_record([&b.to_string(), &k.to_string(), &self.at(b, k).to_string()])?;
            }
        }
        w.flush()
    }
}

/// Power reaching a receiver at distance `d_km` from a station radiating
/// `p_b_w`: `P_b · 10^(−L/10) · d^(−τ)`.
pub fn received_power(p_b_w: f64, loss_db: f64, tau: f64, d_km: f64) -> Result<f64> {
    if d_km <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "path loss needs a positive distance, got {d_km} km"
        )));
    }
    Ok(p_b_w * 10f64.powf(-loss_db / 10.0) * d_km.powf(-tau))
}

/// Linear-scale SINR of the link from station `b` to receiver `k`, given
/// which stations are on. The despread signal is `G·R_bk`; every other on
/// station interferes at full received power on top of wideband noise.
/// Zero when `b` itself is off.
pub fn sinr(
    gains: &GainMatrix,
    decoding: &DecodingParams,
    station_on: &[bool],
    b: usize,
    k: usize,
) -> f64 {
    if !station_on[b] {
        return 0.0;
    }
    let mut interference = 0.0;
    for (b_other, &on) in station_on.iter().enumerate() {
        if on && b_other != b {
            interference += gains.at(b_other, k);
        }
    }
    decoding.processing_gain * gains.at(b, k) / (decoding.noise_w() + interference)
}

/// Whether a link at `sinr_lin` decodes: the threshold is inclusive.
#[inline]
pub fn can_decode(sinr_lin: f64, beta_lin: f64) -> bool {
    sinr_lin >= beta_lin
}

/// Shannon capacity of a narrowband link, `N·log₂(1 + SINR)`, bit/s.
#[inline]
pub fn capacity(sinr_lin: f64, narrowband_hz: f64) -> f64 {
    narrowband_hz * (1.0 + sinr_lin).log2()
}

/// Largest number of stations a receiver can decode simultaneously: the
/// largest integer strictly below `1 + G/β`. At the reference parameters
/// this is 41; it exceeds 1 only when `β < G`.
pub fn n_max(processing_gain: f64, beta_lin: f64) -> usize {
    let bound = 1.0 + processing_gain / beta_lin;
    (bound.ceil() - 1.0) as usize
}

/// Builds the received-power matrix for a layout: stations `0..3` are the
/// sector macrocells at the region center, stations `3..` the picocells in
/// layout order. A macrocell reaches only receivers inside its own sector;
/// picocells reach everything. A reachable receiver at zero distance is
/// rejected.
pub fn build_gain_matrix(
    layout: &Layout,
    station_params: &[BaseStationParams],
) -> Result<GainMatrix> {
    let n_stations = layout.n_stations();
    if station_params.len() != n_stations {
        return Err(Error::InvalidArgument(format!(
            "layout has {} stations but {} parameter sets were given",
            n_stations,
            station_params.len()
        )));
    }
    for params in station_params {
        params.validate()?;
    }
    let receivers = &layout.receiver_positions;
    let mut r_w = Vec::with_capacity(n_stations * receivers.len());
    for (b, params) in station_params.iter().enumerate() {
        let position = if b < N_MACRO {
            layout.macro_position()
        } else {
            layout.pico_positions[b - N_MACRO]
        };
        for (k, receiver) in receivers.iter().enumerate() {
            if b < N_MACRO && sector_of(receiver)? != b {
                r_w.push(0.0);
                continue;
            }
            let d_km = position.distance_km(receiver);
            if d_km == 0.0 {
                return Err(Error::CoLocated { station: b, receiver: k });
            }
            r_w.push(received_power(params.transmit_power_w(), params.loss_db, params.tau, d_km)?);
        }
    }
    Ok(GainMatrix { n_stations, n_receivers: receivers.len(), r_w })
}
