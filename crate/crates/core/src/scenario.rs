//! Scenario documents: parsing, defaults, validation, derived timing and the
//! seed-splitting policy.
//!
//! Scenarios are TOML. Every key is optional except where noted in
//! `docs/scenario.md`; unknown keys are rejected. A minimal document is
//!
//! ```toml
//! [walker]
//! speed = 0.8
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::waveform::SubcarrierLayout;
use crate::{Complex64, Error, Result};

/// Constellation sizes accepted by the modem.
pub const SUPPORTED_QAM_ORDERS: [usize; 3] = [4, 16, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "defaults::carrier_hz")]
    pub carrier_hz: f64,
    #[serde(default = "defaults::n_subcarriers")]
    pub n_subcarriers: usize,
    #[serde(default = "defaults::subcarrier_spacing_hz")]
    pub subcarrier_spacing_hz: f64,
    #[serde(default = "defaults::n_data_subcarriers")]
    pub n_data_subcarriers: usize,
    #[serde(default = "defaults::n_pilot_subcarriers")]
    pub n_pilot_subcarriers: usize,
    #[serde(default = "defaults::cp_len")]
    pub cp_len: usize,
    #[serde(default = "defaults::qam_order")]
    pub qam_order: usize,
    #[serde(default = "defaults::duration_s")]
    pub duration_s: f64,
    #[serde(default = "defaults::csi_rate_hz")]
    pub csi_rate_hz: f64,
    /// Per-sample SNR at the receiver in dB; `inf` disables noise.
    #[serde(default = "defaults::snr_db")]
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub channel_mode: ChannelMode,
    /// Sampling interval of the scatterer tracks, s.
    #[serde(default = "defaults::track_dt_s")]
    pub track_dt_s: f64,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default)]
    pub walker: WalkerParams,
    /// Non-human paths. `None` means a single unit-gain line-of-sight path
    /// derived from the geometry; an explicit empty list means none at all.
    #[serde(default)]
    pub static_paths: Option<Vec<StaticPath>>,
    /// Point scatterers whose path length changes at a constant rate.
    #[serde(default)]
    pub moving_paths: Vec<MovingPath>,
    #[serde(default)]
    pub obfuscation: Obfuscation,
    #[serde(default)]
    pub stft: StftConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub comms: CommsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        // An empty document is the canonical default.
        toml::from_str("").expect("empty scenario document deserializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Only every `sim_stride`-th OFDM symbol is simulated and the channel is
    /// frozen at each symbol midpoint.
    #[default]
    Fast,
    /// Every symbol is simulated as one contiguous stream with per-sample
    /// channel delays.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(default = "defaults::tx_pos")]
    pub tx: [f64; 2],
    #[serde(default = "defaults::rx_pos")]
    pub rx: [f64; 2],
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            tx: defaults::tx_pos(),
            rx: defaults::rx_pos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerParams {
    #[serde(default = "defaults::yes")]
    pub enabled: bool,
    /// Walking speed, m/s.
    #[serde(default = "defaults::walker_speed")]
    pub speed: f64,
    /// Distance of the starting torso position from the receiver, m.
    #[serde(default = "defaults::start_range_m")]
    pub start_range_m: f64,
    /// Direction from the receiver to the starting position, degrees from +x.
    #[serde(default)]
    pub bearing_deg: f64,
    /// Direction of travel, degrees from +x. 180 with bearing 0 walks straight
    /// at the receiver.
    #[serde(default = "defaults::heading_deg")]
    pub heading_deg: f64,
    /// Initial gait phase; drawn from the walker RNG substream when absent.
    #[serde(default)]
    pub gait_phase_rad: Option<f64>,
    /// Stride length coefficient `a` in `stride = a * sqrt(speed)`.
    #[serde(default = "defaults::stride_coefficient")]
    pub stride_coefficient: f64,
    /// Peak leg speed relative to the torso, as a fraction of walking speed.
    #[serde(default = "defaults::leg_swing")]
    pub leg_swing: f64,
    /// Peak arm speed relative to the torso, as a fraction of walking speed.
    #[serde(default = "defaults::arm_swing")]
    pub arm_swing: f64,
    /// Peak forward sway of the torso at twice the gait rate, fraction of speed.
    #[serde(default = "defaults::torso_sway")]
    pub torso_sway: f64,
    #[serde(default)]
    pub reflectivity: BodyReflectivity,
}

impl Default for WalkerParams {
    fn default() -> Self {
        toml::from_str("").expect("empty walker table deserializes")
    }
}

/// Complex gain written either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Real(f64),
    Complex([f64; 2]),
}

impl Gain {
    pub fn value(self) -> Complex64 {
        match self {
            Gain::Real(re) => Complex64::new(re, 0.0),
            Gain::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyReflectivity {
    #[serde(default = "defaults::torso_gain")]
    pub torso: Gain,
    #[serde(default = "defaults::head_gain")]
    pub head: Gain,
    #[serde(default = "defaults::leg_gain")]
    pub left_leg: Gain,
    #[serde(default = "defaults::leg_gain")]
    pub right_leg: Gain,
    #[serde(default = "defaults::arm_gain")]
    pub left_arm: Gain,
    #[serde(default = "defaults::arm_gain")]
    pub right_arm: Gain,
}

impl Default for BodyReflectivity {
    fn default() -> Self {
        toml::from_str("").expect("empty reflectivity table deserializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticPath {
    pub range_m: f64,
    #[serde(default = "defaults::unit_gain")]
    pub gain: Gain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingPath {
    /// Total Tx→scatterer→Rx length at t = 0, m.
    pub range_m: f64,
    /// Rate of change of the path length, m/s (positive = lengthening).
    pub rate_mps: f64,
    #[serde(default = "defaults::unit_gain")]
    pub gain: Gain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obfuscation {
    #[default]
    None,
    Smear {
        delta_f_hz: f64,
        f_m_hz: f64,
    },
    Spoof {
        #[serde(default = "defaults::v_sp_mps")]
        v_sp_mps: f64,
        /// Include the carrier in the spoofing phase ramp so the shift matches
        /// a carrier-inclusive channel.
        #[serde(default = "defaults::yes")]
        carrier_referenced: bool,
    },
}

impl Obfuscation {
    pub fn label(&self) -> &'static str {
        match self {
            Obfuscation::None => "none",
            Obfuscation::Smear { .. } => "smear",
            Obfuscation::Spoof { .. } => "spoof",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
    Blackman,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StftConfig {
    #[serde(default = "defaults::window_s")]
    pub window_s: f64,
    #[serde(default = "defaults::hop_s")]
    pub hop_s: f64,
    /// Defaults to the next power of two ≥ 4 × window samples.
    #[serde(default)]
    pub n_fft: Option<usize>,
    #[serde(default)]
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_s: defaults::window_s(),
            hop_s: defaults::hop_s(),
            n_fft: None,
            window: WindowKind::Hann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfrQuantity {
    /// |Ĥ|², the quantity a CSI sensing receiver usually works with.
    #[default]
    Power,
    /// Complex Ĥ; keeps the sign of the Doppler shift.
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Rate of the reference-conjugated series behind the Method 1 view, Hz.
    #[serde(default = "defaults::method1_rate_hz")]
    pub method1_rate_hz: f64,
    #[serde(default)]
    pub method2_quantity: CfrQuantity,
    /// Signed subcarrier indices for the Method 2 view; all used by default.
    #[serde(default)]
    pub subcarriers: Option<Vec<i64>>,
    #[serde(default = "defaults::energy_fraction")]
    pub energy_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty analysis table deserializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommsConfig {
    /// Frames sent to the intended receiver for the BER/EVM check; 0 skips it.
    #[serde(default = "defaults::comms_frames")]
    pub frames: usize,
    #[serde(default = "defaults::data_symbols_per_frame")]
    pub data_symbols_per_frame: usize,
}

impl Default for CommsConfig {
    fn default() -> Self {
        Self {
            frames: defaults::comms_frames(),
            data_symbols_per_frame: defaults::data_symbols_per_frame(),
        }
    }
}

mod defaults {
    use super::Gain;

    pub fn carrier_hz() -> f64 {
        5.8e9
    }
    pub fn n_subcarriers() -> usize {
        64
    }
    pub fn subcarrier_spacing_hz() -> f64 {
        312_500.0
    }
    pub fn n_data_subcarriers() -> usize {
        52
    }
    pub fn n_pilot_subcarriers() -> usize {
        4
    }
    pub fn cp_len() -> usize {
        16
    }
    pub fn qam_order() -> usize {
        16
    }
    pub fn duration_s() -> f64 {
        2.0
    }
    pub fn csi_rate_hz() -> f64 {
        1000.0
    }
    pub fn snr_db() -> f64 {
        f64::INFINITY
    }
    pub fn track_dt_s() -> f64 {
        1e-3
    }
    pub fn tx_pos() -> [f64; 2] {
        [0.0, 200.0]
    }
    pub fn rx_pos() -> [f64; 2] {
        [0.0, 0.0]
    }
    pub fn yes() -> bool {
        true
    }
    pub fn walker_speed() -> f64 {
        0.8
    }
    pub fn start_range_m() -> f64 {
        4.0
    }
    pub fn heading_deg() -> f64 {
        180.0
    }
    pub fn stride_coefficient() -> f64 {
        1.346
    }
    pub fn leg_swing() -> f64 {
        1.0
    }
    pub fn arm_swing() -> f64 {
        0.5
    }
    pub fn torso_sway() -> f64 {
        0.1
    }
    pub fn torso_gain() -> Gain {
        Gain::Real(0.5)
    }
    pub fn head_gain() -> Gain {
        Gain::Real(0.15)
    }
    pub fn leg_gain() -> Gain {
        Gain::Real(0.25)
    }
    pub fn arm_gain() -> Gain {
        Gain::Real(0.15)
    }
    pub fn unit_gain() -> Gain {
        Gain::Real(1.0)
    }
    pub fn v_sp_mps() -> f64 {
        16.0
    }
    pub fn window_s() -> f64 {
        0.5
    }
    pub fn hop_s() -> f64 {
        0.05
    }
    pub fn method1_rate_hz() -> f64 {
        2000.0
    }
    pub fn energy_fraction() -> f64 {
        0.9
    }
    pub fn comms_frames() -> usize {
        4
    }
    pub fn data_symbols_per_frame() -> usize {
        100
    }
}

/// Parses a TOML scenario document, fills defaults and validates it.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_scenario(&text)
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(Error::Validation(format!($($arg)*)));
        }
    };
}

impl ScenarioConfig {
    pub fn symbol_duration_s(&self) -> f64 {
        (self.n_subcarriers + self.cp_len) as f64
            / (self.n_subcarriers as f64 * self.subcarrier_spacing_hz)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.n_subcarriers as f64 * self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;

        ensure!(finite_pos(self.carrier_hz), "carrier_hz must be positive");
        ensure!(
            self.n_subcarriers >= 8 && self.n_subcarriers % 2 == 0,
            "n_subcarriers must be an even number ≥ 8"
        );
        ensure!(
            finite_pos(self.subcarrier_spacing_hz),
            "subcarrier_spacing_hz must be > 0"
        );
        ensure!(
            self.n_data_subcarriers + self.n_pilot_subcarriers <= self.n_subcarriers,
            "n_data_subcarriers + n_pilot_subcarriers ({}) exceeds n_subcarriers ({})",
            self.n_data_subcarriers + self.n_pilot_subcarriers,
            self.n_subcarriers
        );
        let used = self.n_data_subcarriers + self.n_pilot_subcarriers;
        ensure!(
            used % 2 == 0 && used / 2 < self.n_subcarriers / 2,
            "used subcarriers ({used}) must be even and leave DC and the Nyquist bin empty"
        );
        ensure!(
            self.n_pilot_subcarriers >= 2 && self.n_pilot_subcarriers % 2 == 0,
            "n_pilot_subcarriers must be even and ≥ 2"
        );
        ensure!(self.n_data_subcarriers >= 1, "need at least one data subcarrier");
        ensure!(
            self.cp_len <= self.n_subcarriers,
            "cp_len must not exceed n_subcarriers"
        );
        ensure!(
            SUPPORTED_QAM_ORDERS.contains(&self.qam_order),
            "qam_order {} is not one of {:?}",
            self.qam_order,
            SUPPORTED_QAM_ORDERS
        );
        ensure!(finite_pos(self.duration_s), "duration_s must be > 0");
        let symbol_rate = 1.0 / self.symbol_duration_s();
        ensure!(finite_pos(self.csi_rate_hz), "csi_rate_hz must be > 0");
        ensure!(
            self.csi_rate_hz <= symbol_rate,
            "csi_rate_hz {} exceeds the OFDM symbol rate {symbol_rate}",
            self.csi_rate_hz
        );
        ensure!(
            finite_pos(self.analysis.method1_rate_hz) && self.analysis.method1_rate_hz <= symbol_rate,
            "analysis.method1_rate_hz must be in (0, symbol rate]"
        );
        ensure!(
            self.duration_s >= self.symbol_duration_s(),
            "duration_s is shorter than one OFDM symbol"
        );
        ensure!(!self.snr_db.is_nan(), "snr_db must be a number or inf");
        ensure!(
            finite_pos(self.track_dt_s) && self.track_dt_s <= self.duration_s,
            "track_dt_s must be in (0, duration_s]"
        );
        ensure!(
            self.geometry.tx.iter().chain(&self.geometry.rx).all(|x| x.is_finite())
                && self.geometry.tx != self.geometry.rx,
            "geometry.tx and geometry.rx must be finite and distinct"
        );

        let w = &self.walker;
        ensure!(
            w.speed.is_finite() && w.speed >= 0.0,
            "walker.speed must be finite and ≥ 0"
        );
        ensure!(finite_pos(w.start_range_m), "walker.start_range_m must be > 0");
        ensure!(
            w.bearing_deg.is_finite() && w.heading_deg.is_finite(),
            "walker angles must be finite"
        );
        ensure!(
            finite_pos(w.stride_coefficient),
            "walker.stride_coefficient must be > 0"
        );
        for (name, r) in [
            ("leg_swing", w.leg_swing),
            ("arm_swing", w.arm_swing),
            ("torso_sway", w.torso_sway),
        ] {
            ensure!((0.0..=1.0).contains(&r), "walker.{name} must be in [0, 1]");
        }
        if let Some(p) = w.gait_phase_rad {
            ensure!(p.is_finite(), "walker.gait_phase_rad must be finite");
        }

        if let Some(paths) = &self.static_paths {
            for (i, p) in paths.iter().enumerate() {
                ensure!(finite_pos(p.range_m), "static_paths[{i}].range_m must be > 0");
                ensure!(gain_finite(p.gain), "static_paths[{i}].gain must be finite");
            }
        }
        for (i, p) in self.moving_paths.iter().enumerate() {
            ensure!(finite_pos(p.range_m), "moving_paths[{i}].range_m must be > 0");
            ensure!(p.rate_mps.is_finite(), "moving_paths[{i}].rate_mps must be finite");
            ensure!(
                p.range_m + p.rate_mps * self.duration_s > 0.0,
                "moving_paths[{i}] path length reaches zero within the run"
            );
            ensure!(gain_finite(p.gain), "moving_paths[{i}].gain must be finite");
        }
        let n_static = self
            .static_paths
            .as_ref()
            .map_or(1, |paths| paths.len());
        ensure!(
            n_static + self.moving_paths.len() + usize::from(w.enabled) > 0,
            "the channel needs at least one path"
        );

        match self.obfuscation {
            Obfuscation::None => {}
            Obfuscation::Smear { delta_f_hz, f_m_hz } => {
                ensure!(finite_pos(f_m_hz), "obfuscation.f_m_hz must be > 0");
                ensure!(
                    delta_f_hz.is_finite() && delta_f_hz >= 0.0,
                    "obfuscation.delta_f_hz must be ≥ 0"
                );
            }
            Obfuscation::Spoof { v_sp_mps, .. } => {
                ensure!(v_sp_mps.is_finite(), "obfuscation.v_sp_mps must be finite");
            }
        }

        ensure!(finite_pos(self.stft.window_s), "stft.window_s must be > 0");
        ensure!(finite_pos(self.stft.hop_s), "stft.hop_s must be > 0");
        ensure!(
            self.stft.window_s <= self.duration_s,
            "stft.window_s exceeds duration_s"
        );
        ensure!(
            self.analysis.energy_fraction > 0.0 && self.analysis.energy_fraction <= 1.0,
            "analysis.energy_fraction must be in (0, 1]"
        );
        if let Some(sel) = &self.analysis.subcarriers {
            ensure!(!sel.is_empty(), "analysis.subcarriers must not be empty");
            let half = (used / 2) as i64;
            for &k in sel {
                ensure!(
                    k != 0 && k.abs() <= half,
                    "analysis.subcarriers contains unused index {k}"
                );
            }
        }
        ensure!(
            self.comms.data_symbols_per_frame >= 1,
            "comms.data_symbols_per_frame must be ≥ 1"
        );
        Ok(())
    }
}

fn gain_finite(g: Gain) -> bool {
    let v = g.value();
    v.re.is_finite() && v.im.is_finite()
}

/// Timing and indexing quantities that follow from a validated config.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    /// Baseband sample rate N·Δf, Hz.
    pub sample_rate_hz: f64,
    /// Useful symbol duration N/Δf, s.
    pub useful_symbol_s: f64,
    /// Symbol duration including the cyclic prefix, s.
    pub symbol_s: f64,
    pub symbol_rate_hz: f64,
    /// Whole OFDM symbols that fit in the run.
    pub n_symbols: usize,
    /// Symbols per retained CSI estimate, M.
    pub csi_decimation: usize,
    /// Symbols per sample of the Method 1 series.
    pub method1_decimation: usize,
    /// Spacing of simulated symbols in fast mode (1 in exact mode).
    pub sim_stride: usize,
    pub layout: SubcarrierLayout,
}

pub fn derive_streams(cfg: &ScenarioConfig) -> Result<DerivedParams> {
    let symbol_s = cfg.symbol_duration_s();
    let symbol_rate_hz = 1.0 / symbol_s;
    let decimation = |rate: f64, what: &str| -> Result<usize> {
        if rate > symbol_rate_hz * (1.0 + 1e-12) {
            return Err(Error::Validation(format!(
                "{what} {rate} Hz exceeds the OFDM symbol rate {symbol_rate_hz} Hz"
            )));
        }
        Ok(((symbol_rate_hz / rate).round() as usize).max(1))
    };
    let csi_decimation = decimation(cfg.csi_rate_hz, "csi_rate_hz")?;
    let method1_decimation = decimation(cfg.analysis.method1_rate_hz, "method1_rate_hz")?;
    let sim_stride = match cfg.channel_mode {
        ChannelMode::Fast => gcd(csi_decimation, method1_decimation),
        ChannelMode::Exact => 1,
    };
    let layout = SubcarrierLayout::new(
        cfg.n_subcarriers,
        cfg.n_data_subcarriers,
        cfg.n_pilot_subcarriers,
    )?;
    Ok(DerivedParams {
        sample_rate_hz: cfg.sample_rate_hz(),
        useful_symbol_s: cfg.n_subcarriers as f64 / cfg.sample_rate_hz(),
        symbol_s,
        symbol_rate_hz,
        n_symbols: (cfg.duration_s / symbol_s + 1e-9).floor() as usize,
        csi_decimation,
        method1_decimation,
        sim_stride,
        layout,
    })
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Independent random substreams derived from the single scenario seed.
///
/// Each stream is a ChaCha20 generator keyed by the seed with the stream
/// number below, so adding draws to one stream never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum RngStream {
    PayloadBits = 1,
    SensingNoise = 2,
    WalkerPhase = 3,
    CommsNoise = 4,
}

pub fn rng_for(seed: u64, stream: RngStream) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
