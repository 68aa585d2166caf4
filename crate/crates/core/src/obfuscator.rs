//! Transmitter-side micro-Doppler defenses.
//!
//! Smearing multiplies the time-domain waveform by a unit FM phasor with
//! peak deviation δf at rate f_m. Spoofing multiplies each subcarrier by a
//! phase ramp that mimics a path-length change at speed `v_sp`, so a sensing
//! receiver perceives every path at `v - v_sp`.

use std::f64::consts::PI;

use crate::waveform::{signed_index, BasebandSignal, BinRole, SymbolGrid};
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearParams {
    pub delta_f_hz: f64,
    pub f_m_hz: f64,
}

impl SmearParams {
    pub fn new(delta_f_hz: f64, f_m_hz: f64) -> Result<Self> {
        if !(f_m_hz.is_finite() && f_m_hz > 0.0) || !(delta_f_hz.is_finite() && delta_f_hz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smearing needs f_m > 0 and δf ≥ 0, got f_m={f_m_hz}, δf={delta_f_hz}"
            )));
        }
        Ok(Self { delta_f_hz, f_m_hz })
    }

    pub fn modulation_index(&self) -> f64 {
        self.delta_f_hz / self.f_m_hz
    }

    /// Carson's-rule occupied bandwidth 2(δf + f_m), Hz.
    pub fn carson_bandwidth_hz(&self) -> f64 {
        2.0 * (self.delta_f_hz + self.f_m_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpoofParams {
    /// Spoofed path-length change rate, m/s.
    pub v_sp_mps: f64,
    /// Frequency added to kΔf in the phase ramp: 0 reproduces the
    /// subcarrier-only ramp, the carrier frequency matches a channel whose
    /// per-path phase includes the carrier.
    pub reference_hz: f64,
}

impl SpoofParams {
    pub fn baseband(v_sp_mps: f64) -> Self {
        Self {
            v_sp_mps,
            reference_hz: 0.0,
        }
    }

    pub fn carrier_referenced(v_sp_mps: f64, carrier_hz: f64) -> Self {
        Self {
            v_sp_mps,
            reference_hz: carrier_hz,
        }
    }
}

/// e^{j(δf/f_m) sin(2π f_m t)}
pub fn smear_phasor(t: f64, p: &SmearParams) -> Complex64 {
    let phase = p.modulation_index() * (2.0 * PI * p.f_m_hz * t).sin();
    Complex64::from_polar(1.0, phase)
}

/// Multiply every sample by the smearing phasor at its absolute time. The FM
/// phase runs continuously across calls because it depends only on `t`.
pub fn apply_smearing(sig: &BasebandSignal, p: &SmearParams) -> Result<BasebandSignal> {
    let needed = 10.0 * (p.delta_f_hz + p.f_m_hz);
    if sig.sample_rate_hz < needed {
        return Err(Error::Precondition(format!(
            "sample rate {} Hz aliases the FM process (needs ≥ {needed} Hz)",
            sig.sample_rate_hz
        )));
    }
    if p.delta_f_hz == 0.0 {
        return Ok(sig.clone());
    }
    let samples = sig
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * smear_phasor(sig.time_of(n), p))
        .collect();
    Ok(BasebandSignal {
        samples,
        ..*sig
    })
}

/// e^{j2π(f_ref + kΔf) v_sp t / c}; with `reference_hz = 0` this is the
/// subcarrier ramp e^{j2πkΔf v_sp t / c}.
pub fn spoof_phasor(k: i64, t: f64, subcarrier_spacing_hz: f64, p: &SpoofParams) -> Complex64 {
    let freq = p.reference_hz + k as f64 * subcarrier_spacing_hz;
    Complex64::from_polar(1.0, 2.0 * PI * freq * p.v_sp_mps * t / SPEED_OF_LIGHT)
}

/// Multiply cell (k, m) by the spoofing phasor of its signed subcarrier index
/// at `symbol_times[m]`, which is held over the whole symbol.
pub fn apply_spoofing(
    grid: &SymbolGrid,
    symbol_times: &[f64],
    subcarrier_spacing_hz: f64,
    p: &SpoofParams,
) -> Result<SymbolGrid> {
    if symbol_times.len() != grid.n_symbols() {
        return Err(Error::DimensionMismatch(format!(
            "{} symbol times for {} grid columns",
            symbol_times.len(),
            grid.n_symbols()
        )));
    }
    let n = grid.n_bins();
    let mut out = grid.clone();
    if p.v_sp_mps == 0.0 {
        return Ok(out);
    }
    for ((k, m), v) in out.values.indexed_iter_mut() {
        if grid.roles[k] == BinRole::Null {
            continue;
        }
        *v *= spoof_phasor(signed_index(k, n), symbol_times[m], subcarrier_spacing_hz, p);
    }
    Ok(out)
}
