//! End-to-end pipeline: build the channel, transmit known symbols for the
//! sensing receiver and payload frames for the intended receiver, apply the
//! configured defense, propagate, and analyse.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::channel::{add_awgn, noise_variance, propagate_ofdm, propagate_symbols, walker_tracks, ChannelRealization, ScattererTrack};
use crate::obfuscator::{apply_smearing, apply_spoofing, SmearParams, SpoofParams};
use crate::receiver::{
    average_channel_estimate, demodulate_bursts, equalize, estimate_cfr, ofdm_demodulate, pilot_phase_correct,
    CfrSeries,
};
use crate::scenario::{derive_streams, rng_for, ChannelMode, DerivedParams, Obfuscation, RngStream, ScenarioConfig};
use crate::spectral::{method1_view, method2_view, Spectrogram};
use crate::waveform::{
    bin_of, bits_per_data_symbol, frame_stream, known_symbol_table, ofdm_modulate, BasebandSignal, ColumnKind,
    Constellation, FrameContent, OfdmModem, SymbolGrid, PREAMBLE_SYMBOLS,
};
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

/// Transmit-side processing resolved from the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defense {
    None,
    Smear(SmearParams),
    Spoof(SpoofParams),
}

impl Defense {
    pub fn from_config(cfg: &ScenarioConfig, obfuscation: &Obfuscation) -> Result<Self> {
        Ok(match *obfuscation {
            Obfuscation::None => Defense::None,
            Obfuscation::Smear { delta_f_hz, f_m_hz } => Defense::Smear(SmearParams::new(delta_f_hz, f_m_hz)?),
            Obfuscation::Spoof {
                v_sp_mps,
                carrier_referenced,
            } => Defense::Spoof(if carrier_referenced {
                SpoofParams::carrier_referenced(v_sp_mps, cfg.carrier_hz)
            } else {
                SpoofParams::baseband(v_sp_mps)
            }),
        })
    }

    fn spoof_grid(&self, grid: SymbolGrid, cp_len: usize) -> Result<SymbolGrid> {
        match self {
            Defense::Spoof(p) => {
                let mids = grid.symbol_midpoints(cp_len);
                apply_spoofing(&grid, &mids, grid.subcarrier_spacing_hz, p)
            }
            _ => Ok(grid),
        }
    }

    fn smear_signal(&self, sig: BasebandSignal) -> Result<BasebandSignal> {
        match self {
            Defense::Smear(p) => apply_smearing(&sig, p),
            _ => Ok(sig),
        }
    }
}

/// What the sensing receiver sees and derives.
#[derive(Debug, Clone)]
pub struct SensingOutput {
    /// Received symbols: one burst per simulated symbol in fast mode, a
    /// single contiguous stream in exact mode.
    pub rx: Vec<BasebandSignal>,
    pub cfr: CfrSeries,
    pub method1: Spectrogram,
    pub method2: Spectrogram,
    pub noise_power: f64,
}

/// Intended-receiver link check.
#[derive(Debug, Clone, PartialEq)]
pub struct CommsOutput {
    pub bits: usize,
    pub bit_errors: usize,
    pub ber: f64,
    /// RMS EVM after preamble channel estimation and pilot phase correction.
    pub evm: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub config: ScenarioConfig,
    pub derived: DerivedParams,
    pub channel: ChannelRealization,
    pub sensing: SensingOutput,
    /// The same run without a defense; present only when one is configured.
    pub clean_sensing: Option<SensingOutput>,
    pub comms: Option<CommsOutput>,
    pub clean_comms: Option<CommsOutput>,
}

/// Start times of the comms frames: spread evenly over the run, but never
/// overlapping.
pub fn comms_frame_starts(cfg: &ScenarioConfig) -> Vec<f64> {
    let frames = cfg.comms.frames;
    if frames == 0 {
        return Vec::new();
    }
    let frame_s = (PREAMBLE_SYMBOLS + cfg.comms.data_symbols_per_frame) as f64 * cfg.symbol_duration_s();
    let spacing = frame_s.max(cfg.duration_s / frames as f64);
    (0..frames).map(|i| i as f64 * spacing).collect()
}

fn track_support_s(cfg: &ScenarioConfig) -> f64 {
    let frame_s = (PREAMBLE_SYMBOLS + cfg.comms.data_symbols_per_frame) as f64 * cfg.symbol_duration_s();
    let comms_end = comms_frame_starts(cfg).last().map_or(0.0, |t| t + frame_s);
    cfg.duration_s.max(comms_end)
}

/// Walker, moving and static paths of the scenario. The receiver timing
/// reference is the earliest static arrival, or the earliest arrival at t = 0
/// when there are no static paths.
pub fn build_channel(cfg: &ScenarioConfig) -> Result<ChannelRealization> {
    let support = track_support_s(cfg);
    let [tx, rx] = [cfg.geometry.tx, cfg.geometry.rx];
    let mut tracks = Vec::new();
    let statics = match &cfg.static_paths {
        None => vec![("los".to_string(), ((tx[0] - rx[0]).powi(2) + (tx[1] - rx[1]).powi(2)).sqrt(), Complex64::new(1.0, 0.0))],
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("static{i}"), p.range_m, p.gain.value()))
            .collect(),
    };
    for (label, range, gain) in &statics {
        tracks.push(ScattererTrack::fixed(label.clone(), *range, *gain, support));
    }
    for (i, p) in cfg.moving_paths.iter().enumerate() {
        if p.range_m + p.rate_mps * support <= 0.0 {
            return Err(Error::Validation(format!(
                "moving path {i} reaches zero length within {support} s"
            )));
        }
        tracks.push(ScattererTrack::linear(format!("moving{i}"), p.range_m, p.rate_mps, p.gain.value(), support));
    }
    if cfg.walker.enabled {
        let mut walker = cfg.walker.clone();
        if walker.gait_phase_rad.is_none() {
            let mut rng = rng_for(cfg.seed, RngStream::WalkerPhase);
            walker.gait_phase_rad = Some(rng.gen::<f64>() * 2.0 * PI);
        }
        tracks.extend(walker_tracks(&walker, tx, rx, support, cfg.track_dt_s)?);
    }
    let offset = if statics.is_empty() {
        tracks
            .iter()
            .map(|t| t.path_length_at(t.t0))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    } else {
        statics.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    } / SPEED_OF_LIGHT;
    Ok(ChannelRealization::new(tracks, cfg.carrier_hz)?.with_timing_offset(offset))
}

fn known_grid_at(cfg: &ScenarioConfig, derived: &DerivedParams, symbols: &[usize]) -> SymbolGrid {
    let table = known_symbol_table(&derived.layout);
    SymbolGrid {
        values: Array2::from_shape_fn((derived.layout.n_fft, symbols.len()), |(k, _)| table[k]),
        roles: derived.layout.roles.clone(),
        columns: vec![ColumnKind::Preamble; symbols.len()],
        symbol_times: symbols.iter().map(|&m| m as f64 * derived.symbol_s).collect(),
        subcarrier_spacing_hz: cfg.subcarrier_spacing_hz,
    }
}

/// Cut a stream of CP-prefixed symbols into one signal per symbol, stamped
/// with the given start times.
fn split_symbols(sig: &BasebandSignal, symbol_len: usize, starts: &[f64]) -> Vec<BasebandSignal> {
    sig.samples
        .chunks_exact(symbol_len)
        .zip(starts)
        .map(|(s, &t0)| BasebandSignal {
            samples: s.to_vec(),
            sample_rate_hz: sig.sample_rate_hz,
            t0,
        })
        .collect()
}

/// Known-symbol sounding as seen by the sensing receiver.
pub fn run_sensing(
    cfg: &ScenarioConfig,
    derived: &DerivedParams,
    chan: &ChannelRealization,
    defense: &Defense,
) -> Result<SensingOutput> {
    let n = derived.layout.n_fft;
    let symbol_len = n + cfg.cp_len;
    let symbols: Vec<usize> = (0..derived.n_symbols).step_by(derived.sim_stride).collect();
    if symbols.is_empty() {
        return Err(Error::Validation("run is shorter than one OFDM symbol".into()));
    }
    let clean_grid = known_grid_at(cfg, derived, &symbols);
    let tx_grid = defense.spoof_grid(clean_grid.clone(), cfg.cp_len)?;
    let starts = clean_grid.symbol_times.clone();
    let clean = split_symbols(&ofdm_modulate(&clean_grid, cfg.cp_len), symbol_len, &starts);
    let tx = split_symbols(&ofdm_modulate(&tx_grid, cfg.cp_len), symbol_len, &starts)
        .into_iter()
        .map(|b| defense.smear_signal(b))
        .collect::<Result<Vec<_>>>()?;

    let mut noise_rng = rng_for(cfg.seed, RngStream::SensingNoise);
    let (rx, csi_bursts, clean_ref) = match cfg.channel_mode {
        ChannelMode::Fast => {
            let modem = OfdmModem::new(n, cfg.cp_len);
            let mut rx = propagate_symbols(&tx, chan, &modem)?;
            let p_ref = mean_power(&rx);
            let var = noise_variance(cfg.snr_db, p_ref);
            for burst in rx.iter_mut() {
                *burst = add_awgn(burst, cfg.snr_db, p_ref, &mut noise_rng);
            }
            let step = derived.csi_decimation / derived.sim_stride;
            let csi: Vec<BasebandSignal> = rx.iter().step_by(step).cloned().collect();
            (rx, csi, (clean, var))
        }
        ChannelMode::Exact => {
            let whole = |parts: &[BasebandSignal]| BasebandSignal {
                samples: parts.iter().flat_map(|b| b.samples.iter().copied()).collect(),
                sample_rate_hz: derived.sample_rate_hz,
                t0: 0.0,
            };
            let tx_all = whole(&tx);
            let clean_all = whole(&clean);
            let modem = OfdmModem::new(n, cfg.cp_len);
            let noiseless = propagate_ofdm(&tx_all, chan, &modem, &mut noise_rng)?;
            let p_ref = noiseless.mean_power();
            let var = noise_variance(cfg.snr_db, p_ref);
            let rx_all = add_awgn(&noiseless, cfg.snr_db, p_ref, &mut noise_rng);
            let csi: Vec<BasebandSignal> = split_symbols(&rx_all, symbol_len, &starts)
                .into_iter()
                .step_by(derived.csi_decimation)
                .collect();
            (vec![rx_all], csi, (vec![clean_all], var))
        }
    };
    let (clean_ref, noise_power) = clean_ref;

    let y = demodulate_bursts(&csi_bursts, &derived.layout, cfg.cp_len)?;
    let known = known_grid_at(cfg, derived, &[0]);
    let cfr = estimate_cfr(&y, &known, 1)?;

    let method1 = method1_view(&rx, &clean_ref, cfg.analysis.method1_rate_hz, &cfg.stft)?;
    let bins = selected_bins(cfg, derived)?;
    let method2 = method2_view(&cfr, &bins, cfg.analysis.method2_quantity, &cfg.stft)?;
    Ok(SensingOutput {
        rx,
        cfr,
        method1,
        method2,
        noise_power,
    })
}

fn mean_power(parts: &[BasebandSignal]) -> f64 {
    let (energy, count) = parts
        .iter()
        .fold((0.0, 0usize), |(e, c), b| (e + b.energy(), c + b.len()));
    if count == 0 {
        0.0
    } else {
        energy / count as f64
    }
}

/// FFT bins analysed by the Method 2 view.
pub fn selected_bins(cfg: &ScenarioConfig, derived: &DerivedParams) -> Result<Vec<usize>> {
    let n = derived.layout.n_fft;
    match &cfg.analysis.subcarriers {
        None => Ok(derived.layout.used_bins.clone()),
        Some(list) => list
            .iter()
            .map(|&k| {
                let bin = bin_of(k, n);
                if derived.layout.used_bins.contains(&bin) {
                    Ok(bin)
                } else {
                    Err(Error::Validation(format!("subcarrier {k} is not a used subcarrier")))
                }
            })
            .collect(),
    }
}

/// Payload frames through the same channel to the intended receiver, which
/// estimates the channel from the preamble, tracks common phase on the pilots
/// and equalizes.
pub fn run_comms(
    cfg: &ScenarioConfig,
    derived: &DerivedParams,
    chan: &ChannelRealization,
    defense: &Defense,
) -> Result<Option<CommsOutput>> {
    let starts = comms_frame_starts(cfg);
    if starts.is_empty() || cfg.comms.data_symbols_per_frame == 0 {
        return Ok(None);
    }
    let per_frame = cfg.comms.data_symbols_per_frame * bits_per_data_symbol(cfg);
    let modem = OfdmModem::new(derived.layout.n_fft, cfg.cp_len);
    let mut bit_rng = rng_for(cfg.seed, RngStream::PayloadBits);
    let payloads: Vec<Vec<u8>> = starts
        .iter()
        .map(|_| (0..per_frame).map(|_| bit_rng.gen_range(0..=1u8)).collect())
        .collect();

    let sent: Vec<(SymbolGrid, BasebandSignal)> = starts
        .par_iter()
        .zip(&payloads)
        .map(|(&t0, bits)| -> Result<_> {
            let (grid, _) = frame_stream(cfg, FrameContent::Payload(bits), t0)?;
            let tx = defense.smear_signal(ofdm_modulate(&defense.spoof_grid(grid.clone(), cfg.cp_len)?, cfg.cp_len))?;
            // Noise is added below from a single sequential stream.
            let mut unused = ChaCha20Rng::seed_from_u64(0);
            Ok((grid, propagate_ofdm(&tx, chan, &modem, &mut unused)?))
        })
        .collect::<Result<_>>()?;

    let rx_clean: Vec<BasebandSignal> = sent.iter().map(|(_, s)| s.clone()).collect();
    let p_ref = mean_power(&rx_clean);
    let mut noise_rng = rng_for(cfg.seed, RngStream::CommsNoise);
    let received: Vec<BasebandSignal> = rx_clean
        .iter()
        .map(|s| add_awgn(s, cfg.snr_db, p_ref, &mut noise_rng))
        .collect();

    let table = known_symbol_table(&derived.layout);
    let constellation = Constellation::new(cfg.qam_order)?;
    let ones = vec![Complex64::new(1.0, 0.0); derived.layout.n_fft];
    let per_frame_stats: Vec<(usize, f64, f64)> = sent
        .par_iter()
        .zip(&received)
        .zip(&payloads)
        .map(|(((grid, _), rx), bits)| -> Result<_> {
            let mut y = ofdm_demodulate(rx, &derived.layout, cfg.cp_len)?;
            y.columns = grid.columns.clone();
            let h = average_channel_estimate(&y, &table, 0..PREAMBLE_SYMBOLS)?;
            let expected: Vec<Complex64> = table.iter().zip(&h).map(|(x, h)| x * h).collect();
            let (corrected, _) = pilot_phase_correct(&y, &expected)?;
            let eq = equalize(&corrected, &h)?;
            let reference = equalize(grid, &ones)?;
            let decided = constellation.demap(&eq);
            let errors = decided.iter().zip(bits).filter(|(a, b)| a != b).count();
            let err: f64 = eq.iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum();
            let refp: f64 = reference.iter().map(|b| b.norm_sqr()).sum();
            Ok((errors, err, refp))
        })
        .collect::<Result<_>>()?;

    let bits = per_frame * starts.len();
    let bit_errors: usize = per_frame_stats.iter().map(|s| s.0).sum();
    let err: f64 = per_frame_stats.iter().map(|s| s.1).sum();
    let refp: f64 = per_frame_stats.iter().map(|s| s.2).sum();
    Ok(Some(CommsOutput {
        bits,
        bit_errors,
        ber: bit_errors as f64 / bits as f64,
        evm: (err / refp).sqrt(),
    }))
}

/// Run the whole scenario. When a defense is configured the same scenario is
/// also run without it, as the clean baseline for the metrics.
pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimulationOutput> {
    cfg.validate()?;
    let derived = derive_streams(cfg)?;
    let channel = build_channel(cfg)?;
    let defense = Defense::from_config(cfg, &cfg.obfuscation)?;
    let sensing = run_sensing(cfg, &derived, &channel, &defense)?;
    let comms = run_comms(cfg, &derived, &channel, &defense)?;
    let (clean_sensing, clean_comms) = if defense == Defense::None {
        (None, None)
    } else {
        (
            Some(run_sensing(cfg, &derived, &channel, &Defense::None)?),
            run_comms(cfg, &derived, &channel, &Defense::None)?,
        )
    };
    Ok(SimulationOutput {
        config: cfg.clone(),
        derived,
        channel,
        sensing,
        clean_sensing,
        comms,
        clean_comms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{load_scenario, MovingPath, StaticPath, Gain};
    use crate::spectral::peak_doppler_track;

    fn short(extra: &str) -> ScenarioConfig {
        load_scenario(&format!("duration_s = 1.0\n{extra}\n[comms]\nframes = 2\ndata_symbols_per_frame = 10\n")).unwrap()
    }

    #[test]
    fn default_channel_has_los_and_body() {
        let cfg = ScenarioConfig::default();
        let chan = build_channel(&cfg).unwrap();
        assert_eq!(chan.tracks.len(), 7);
        assert_eq!(chan.tracks[0].label, "los");
        assert!((chan.timing_offset_s - 200.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn offset_without_static_paths_is_earliest_arrival() {
        let mut cfg = short("[walker]\nenabled = false\n");
        cfg.static_paths = Some(vec![]);
        cfg.moving_paths = vec![
            MovingPath { range_m: 50.0, rate_mps: 0.8, gain: Gain::Real(1.0) },
            MovingPath { range_m: 40.0, rate_mps: 0.0, gain: Gain::Real(1.0) },
        ];
        let chan = build_channel(&cfg).unwrap();
        assert!((chan.timing_offset_s - 40.0 / SPEED_OF_LIGHT).abs() < 1e-18);
    }

    #[test]
    fn frames_are_spread_without_overlap() {
        let cfg = short("");
        let s = comms_frame_starts(&cfg);
        assert_eq!(s, vec![0.0, 0.5]);
        let mut dense = cfg.clone();
        dense.comms.frames = 100_000;
        let s = comms_frame_starts(&dense);
        let frame_s = 17.0 * 4e-6;
        assert!((s[1] - frame_s).abs() < 1e-15);
    }

    #[test]
    fn noiseless_clean_run_is_error_free() {
        let out = run_simulation(&short("")).unwrap();
        let c = out.comms.unwrap();
        assert_eq!(c.bit_errors, 0);
        assert!(c.evm < 5e-3, "{}", c.evm);
        assert!(out.clean_sensing.is_none());
        assert_eq!(out.sensing.cfr.csi_rate_hz.round(), 1000.0);
        assert_eq!(out.sensing.method1.rate_hz.round(), 2000.0);
    }

    #[test]
    fn defended_runs_carry_a_baseline_and_keep_the_link() {
        for extra in [
            "[obfuscation]\nkind = \"smear\"\ndelta_f_hz = 200.0\nf_m_hz = 10.0\n",
            "qam_order = 16\n[obfuscation]\nkind = \"spoof\"\nv_sp_mps = 16.0\n",
        ] {
            let out = run_simulation(&short(extra)).unwrap();
            assert!(out.clean_sensing.is_some());
            let c = out.comms.unwrap();
            assert_eq!(c.bit_errors, 0, "{extra}");
            assert!(c.evm < 0.01, "{extra}: {}", c.evm);
        }
    }

    #[test]
    fn moving_path_shows_its_doppler() {
        let mut cfg = short("[walker]\nenabled = false\n[analysis]\nmethod2_quantity = \"complex\"\n");
        cfg.static_paths = Some(vec![StaticPath { range_m: 200.0, gain: Gain::Real(0.0) }]);
        cfg.moving_paths = vec![MovingPath { range_m: 50.0, rate_mps: -0.8, gain: Gain::Real(1.0) }];
        let out = run_simulation(&cfg).unwrap();
        let expect = cfg.carrier_hz * 0.8 / SPEED_OF_LIGHT;
        for view in [&out.sensing.method1, &out.sensing.method2] {
            for f in peak_doppler_track(view) {
                assert!((f - expect).abs() <= view.bin_width_hz(), "{f} vs {expect}");
            }
        }
    }

    #[test]
    fn exact_mode_agrees_with_fast_mode() {
        let base = "duration_s = 0.6\nsnr_db = inf\n[comms]\nframes = 0\n[walker]\nenabled = false\n[analysis]\nmethod2_quantity = \"complex\"\n";
        let mut fast = load_scenario(base).unwrap();
        fast.moving_paths = vec![MovingPath { range_m: 210.0, rate_mps: 1.5, gain: Gain::Real(0.5) }];
        let mut exact = fast.clone();
        exact.channel_mode = ChannelMode::Exact;
        let a = run_simulation(&fast).unwrap();
        let b = run_simulation(&exact).unwrap();
        assert_eq!(a.sensing.cfr.h_hat.dim(), b.sensing.cfr.h_hat.dim());
        let max_err = a
            .sensing
            .cfr
            .h_hat
            .iter()
            .zip(b.sensing.cfr.h_hat.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "{max_err}");
        assert_eq!(peak_doppler_track(&a.sensing.method1), peak_doppler_track(&b.sensing.method1));
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = short("snr_db = 10.0\n");
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a.sensing.cfr, b.sensing.cfr);
        assert_eq!(a.sensing.method1, b.sensing.method1);
        assert_eq!(a.comms, b.comms);
        let mut other = cfg.clone();
        other.seed = 1;
        let c = run_simulation(&other).unwrap();
        assert_ne!(a.sensing.cfr, c.sensing.cfr);
    }
}
