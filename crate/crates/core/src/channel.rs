//! Time-varying multipath channel: walking-human scatterer tracks, per-path
//! delays, the channel frequency response and signal propagation with AWGN.
//!
//! Each path ℓ contributes h_ℓ · e^{-j2π(f_c + f) τ_ℓ(t)} at baseband
//! frequency f. The carrier term is what gives body-part motion its
//! tens-of-Hz Doppler; without it a 1 m/s path would move by well under 1 Hz.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::scenario::WalkerParams;
use crate::waveform::{signed_index, BasebandSignal, OfdmModem};
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

/// Half-width, in samples, of the windowed-sinc fractional-delay interpolator.
pub const INTERP_HALF_WIDTH: usize = 16;

/// One Tx→scatterer→Rx path, sampled uniformly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScattererTrack {
    pub label: String,
    pub t0: f64,
    pub dt: f64,
    /// Total path length at t0 + i·dt, m.
    pub path_length_m: Vec<f64>,
    pub reflectivity: Complex64,
}

impl ScattererTrack {
    /// A path whose length never changes, valid on [0, duration].
    pub fn fixed(label: impl Into<String>, range_m: f64, gain: Complex64, duration: f64) -> Self {
        Self::linear(label, range_m, 0.0, gain, duration)
    }

    /// A path whose length changes at a constant `rate_mps`. Linear
    /// interpolation between the two end points is exact.
    pub fn linear(
        label: impl Into<String>,
        range_m: f64,
        rate_mps: f64,
        gain: Complex64,
        duration: f64,
    ) -> Self {
        Self {
            label: label.into(),
            t0: 0.0,
            dt: duration,
            path_length_m: vec![range_m, range_m + rate_mps * duration],
            reflectivity: gain,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * (self.path_length_m.len() - 1) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.path_length_m.len()).map(move |i| self.t0 + i as f64 * self.dt)
    }

    /// Path length at `t`, linearly interpolated.
    pub fn path_length_at(&self, t: f64) -> Result<f64> {
        let slack = 1e-9 * self.dt.max(1.0);
        if !(t >= self.t0 - slack && t <= self.t_end() + slack) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} s is outside the support [{}, {}] of track `{}`",
                self.t0,
                self.t_end(),
                self.label
            )));
        }
        let u = ((t - self.t0) / self.dt).max(0.0);
        let last = self.path_length_m.len() - 1;
        let i = (u.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return Ok(self.path_length_m[0]);
        }
        let frac = (u - i as f64).min(1.0);
        let (a, b) = (self.path_length_m[i], self.path_length_m[i + 1]);
        Ok(a + (b - a) * frac)
    }
}

/// τ_ℓ(t) = R_ℓ(t) / c.
pub fn path_delay(track: &ScattererTrack, t: f64) -> Result<f64> {
    Ok(track.path_length_at(t)? / SPEED_OF_LIGHT)
}

/// All paths of one run plus the receiver noise and timing reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub tracks: Vec<ScattererTrack>,
    pub carrier_hz: f64,
    /// Complex noise variance per sample, linear.
    pub noise_power: f64,
    /// Receiver timing reference: envelope delays are taken relative to this
    /// (perfect synchronisation to the earliest static arrival). Carrier
    /// phases always use the absolute delay.
    pub timing_offset_s: f64,
}

impl ChannelRealization {
    pub fn new(tracks: Vec<ScattererTrack>, carrier_hz: f64) -> Result<Self> {
        if tracks.is_empty() {
            return Err(Error::InvalidArgument("channel has no paths".into()));
        }
        Ok(Self {
            tracks,
            carrier_hz,
            noise_power: 0.0,
            timing_offset_s: 0.0,
        })
    }

    pub fn with_timing_offset(mut self, offset_s: f64) -> Self {
        self.timing_offset_s = offset_s;
        self
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }

    fn path_terms(&self, t: f64) -> Result<Vec<(Complex64, f64)>> {
        self.tracks
            .iter()
            .map(|tr| {
                let tau = path_delay(tr, t)?;
                let carrier = Complex64::from_polar(1.0, -2.0 * PI * self.carrier_hz * tau);
                Ok((tr.reflectivity * carrier, tau - self.timing_offset_s))
            })
            .collect()
    }
}

/// H(f, t) = Σ_ℓ h_ℓ e^{-j2π(f_c + f) τ_ℓ(t)} for baseband frequency `f`.
pub fn cfr(chan: &ChannelRealization, f: f64, t: f64) -> Result<Complex64> {
    if chan.tracks.is_empty() {
        return Err(Error::InvalidArgument("channel has no paths".into()));
    }
    chan.tracks.iter().try_fold(Complex64::new(0.0, 0.0), |acc, tr| {
        let tau = path_delay(tr, t)?;
        Ok(acc + tr.reflectivity * Complex64::from_polar(1.0, -2.0 * PI * (chan.carrier_hz + f) * tau))
    })
}

fn blackman_sinc(d: f64) -> f64 {
    let w = INTERP_HALF_WIDTH as f64;
    if d.abs() >= w {
        return 0.0;
    }
    let sinc = if d == 0.0 { 1.0 } else { (PI * d).sin() / (PI * d) };
    let win = 0.42 + 0.5 * (PI * d / w).cos() + 0.08 * (2.0 * PI * d / w).cos();
    sinc * win
}

/// Band-limited value of `x` at fractional sample position `u`.
fn interpolate(x: &[Complex64], u: f64) -> Complex64 {
    let base = u.round();
    if (u - base).abs() < 1e-9 {
        let i = base as i64;
        return if i >= 0 && (i as usize) < x.len() {
            x[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let lo = u.floor() as i64 - INTERP_HALF_WIDTH as i64 + 1;
    let hi = u.floor() as i64 + INTERP_HALF_WIDTH as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in lo.max(0)..=hi.min(x.len() as i64 - 1) {
        acc += x[i as usize] * blackman_sinc(u - i as f64);
    }
    acc
}

/// Per-sample propagation of a contiguous signal:
/// y[n] = Σ_ℓ h_ℓ e^{-j2π f_c τ_ℓ(t_n)} x(t_n − τ_ℓ(t_n)) + w[n],
/// with x(·) band-limited-interpolated and w of variance `chan.noise_power`.
pub fn propagate<R: Rng + ?Sized>(
    sig: &BasebandSignal,
    chan: &ChannelRealization,
    rng: &mut R,
) -> Result<BasebandSignal> {
    if chan.tracks.is_empty() {
        return Err(Error::InvalidArgument("channel has no paths".into()));
    }
    let fs = sig.sample_rate_hz;
    let initial = chan.path_terms(sig.t0)?;
    let spread = initial
        .iter()
        .map(|(_, d)| (d * fs).abs())
        .fold(0.0, f64::max);
    if spread >= sig.len() as f64 {
        return Err(Error::Precondition(format!(
            "channel delay of {spread:.1} samples exceeds the {}-sample signal",
            sig.len()
        )));
    }
    // Fail early rather than inside the parallel loop.
    chan.path_terms(sig.time_of(sig.len().saturating_sub(1)))?;

    let samples: Vec<Complex64> = (0..sig.len())
        .into_par_iter()
        .map(|n| {
            let t = sig.time_of(n);
            let terms = chan.path_terms(t).expect("support checked at both ends");
            terms
                .iter()
                .map(|(g, d)| g * interpolate(&sig.samples, n as f64 - d * fs))
                .sum()
        })
        .collect();
    let mut out = BasebandSignal { samples, ..*sig };
    if chan.noise_power > 0.0 {
        add_noise(&mut out.samples, chan.noise_power, rng);
    }
    Ok(out)
}

/// Per-sample propagation of a contiguous stream of CP-prefixed OFDM symbols
/// starting at a symbol boundary.
///
/// Each symbol's continuous-time waveform is the periodic trigonometric
/// interpolant of its useful part, so a delayed sample is evaluated exactly
/// from whichever symbol the delayed instant falls in: there is no leakage
/// across symbol boundaries beyond what the delay itself causes. The envelope
/// delay is taken at each output symbol's midpoint; the carrier phase
/// e^{-j2π f_c τ_ℓ(t_n)} is evaluated at every sample.
pub fn propagate_ofdm<R: Rng + ?Sized>(
    sig: &BasebandSignal,
    chan: &ChannelRealization,
    modem: &OfdmModem,
    rng: &mut R,
) -> Result<BasebandSignal> {
    let n = modem.n_fft();
    let cp = modem.cp_len();
    let len = modem.symbol_len();
    if sig.is_empty() || sig.len() % len != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} samples is not a whole number of {len}-sample symbols",
            sig.len()
        )));
    }
    let n_sym = sig.len() / len;
    let fs = sig.sample_rate_hz;
    chan.path_terms(sig.t0)?;
    chan.path_terms(sig.time_of(sig.len() - 1))?;

    let spectra: Vec<Vec<Complex64>> = (0..n_sym)
        .into_par_iter()
        .map(|j| {
            let mut body = sig.samples[j * len + cp..(j + 1) * len].to_vec();
            modem.dft_in_place(&mut body);
            body
        })
        .collect();
    // Useful part of symbol j delayed by `frac` samples, periodically.
    let delayed_body = |j: usize, frac: f64| -> Vec<Complex64> {
        let mut z: Vec<Complex64> = spectra[j]
            .iter()
            .enumerate()
            .map(|(bin, v)| v * Complex64::from_polar(1.0, -2.0 * PI * signed_index(bin, n) as f64 * frac / n as f64))
            .collect();
        modem.idft_in_place(&mut z);
        z
    };

    let symbols: Vec<Vec<Complex64>> = (0..n_sym)
        .into_par_iter()
        .map(|m| -> Result<Vec<Complex64>> {
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            let t_mid = sig.t0 + (m * len) as f64 / fs + len as f64 / (2.0 * fs);
            let mids = chan.path_terms(t_mid)?;
            for (track, (_, d_s)) in chan.tracks.iter().zip(&mids) {
                let d = d_s * fs;
                let whole = d.floor();
                let frac = d - whole;
                let mut cache: Vec<(usize, Vec<Complex64>)> = Vec::new();
                for (i, out) in acc.iter_mut().enumerate() {
                    let q = (m * len + i) as i64 - whole as i64;
                    // The delayed instant q − frac lies in the symbol owning
                    // sample q − 1 when frac > 0.
                    let owner = if frac > 0.0 { q - 1 } else { q };
                    if owner < 0 || owner >= sig.len() as i64 {
                        continue;
                    }
                    let j = owner as usize / len;
                    let r = (q - (j * len + cp) as i64).rem_euclid(n as i64) as usize;
                    let slot = match cache.iter().position(|(k, _)| *k == j) {
                        Some(p) => p,
                        None => {
                            cache.push((j, delayed_body(j, frac)));
                            cache.len() - 1
                        }
                    };
                    let tau = path_delay(track, sig.time_of(m * len + i))?;
                    let g = track.reflectivity * Complex64::from_polar(1.0, -2.0 * PI * chan.carrier_hz * tau);
                    *out += g * cache[slot].1[r];
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = BasebandSignal {
        samples: symbols.concat(),
        ..*sig
    };
    if chan.noise_power > 0.0 {
        add_noise(&mut out.samples, chan.noise_power, rng);
    }
    Ok(out)
}

/// Quasi-static propagation of CP-prefixed OFDM symbols: the channel is
/// frozen at each symbol's midpoint and the envelope delay is applied as an
/// exact cyclic (band-limited) delay. Noise is not added.
///
/// Each burst holds one or more whole symbols and carries its own `t0`, so
/// bursts need not be contiguous in time.
pub fn propagate_symbols(
    bursts: &[BasebandSignal],
    chan: &ChannelRealization,
    modem: &OfdmModem,
) -> Result<Vec<BasebandSignal>> {
    let n = modem.n_fft();
    let len = modem.symbol_len();
    bursts
        .par_iter()
        .map(|burst| {
            if burst.len() % len != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "burst of {} samples is not a whole number of {len}-sample symbols",
                    burst.len()
                )));
            }
            let fs = burst.sample_rate_hz;
            let spacing = fs / n as f64;
            let mut samples = Vec::with_capacity(burst.len());
            let mut body = vec![Complex64::new(0.0, 0.0); n];
            for (j, symbol) in burst.samples.chunks_exact(len).enumerate() {
                let t_mid = burst.t0 + (j * len) as f64 / fs + len as f64 / (2.0 * fs);
                let terms = chan.path_terms(t_mid)?;
                if terms.iter().any(|(_, d)| d.abs() * fs > modem.cp_len() as f64 + n as f64) {
                    return Err(Error::Precondition(
                        "path delay exceeds one OFDM symbol".into(),
                    ));
                }
                body.copy_from_slice(&symbol[modem.cp_len()..]);
                modem.dft_in_place(&mut body);
                for (bin, v) in body.iter_mut().enumerate() {
                    let f = signed_index(bin, n) as f64 * spacing;
                    let h: Complex64 = terms
                        .iter()
                        .map(|(g, d)| g * Complex64::from_polar(1.0, -2.0 * PI * f * d))
                        .sum();
                    *v *= h;
                }
                modem.idft_in_place(&mut body);
                samples.extend_from_slice(&body[n - modem.cp_len()..]);
                samples.extend_from_slice(&body);
            }
            Ok(BasebandSignal { samples, ..*burst })
        })
        .collect()
}

fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], variance: f64, rng: &mut R) {
    let sigma = (variance / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(re * sigma, im * sigma);
    }
}

/// Add i.i.d. circular complex Gaussian noise so that
/// 10·log10(signal_power_ref / noise_variance) = `snr_db`. An infinite SNR
/// returns the input unchanged.
pub fn add_awgn<R: Rng + ?Sized>(
    sig: &BasebandSignal,
    snr_db: f64,
    signal_power_ref: f64,
    rng: &mut R,
) -> BasebandSignal {
    let mut out = sig.clone();
    if snr_db.is_infinite() && snr_db > 0.0 {
        return out;
    }
    add_noise(&mut out.samples, noise_variance(snr_db, signal_power_ref), rng);
    out
}

pub fn noise_variance(snr_db: f64, signal_power_ref: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        signal_power_ref / 10f64.powf(snr_db / 10.0)
    }
}

/// Body segments produced by [`walker_tracks`], in output order.
pub const BODY_PARTS: [&str; 6] = [
    "torso",
    "head",
    "left_leg",
    "right_leg",
    "left_arm",
    "right_arm",
];

/// Gait cycle frequency from the stride law stride = a·√v, Hz.
pub fn gait_frequency_hz(speed: f64, stride_coefficient: f64) -> f64 {
    if speed <= 0.0 {
        0.0
    } else {
        speed / (stride_coefficient * speed.sqrt())
    }
}

/// Path-length tracks of the six body segments of a walker.
///
/// The torso moves at constant speed along the heading with a small forward
/// sway at twice the gait rate. Legs swing about the torso at the gait rate in
/// antiphase; each arm swings against its same-side leg. Swing amplitudes are
/// chosen so that the peak speed relative to the torso is the configured
/// fraction of the walking speed.
pub fn walker_tracks(
    walker: &WalkerParams,
    tx_pos: [f64; 2],
    rx_pos: [f64; 2],
    duration: f64,
    dt: f64,
) -> Result<Vec<ScattererTrack>> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "walker track duration must be positive, got {duration}"
        )));
    }
    let f_gait = gait_frequency_hz(walker.speed, walker.stride_coefficient);
    if !(dt > 0.0) || (f_gait > 0.0 && dt > 1.0 / (4.0 * f_gait)) {
        return Err(Error::InvalidArgument(format!(
            "track interval {dt} s under-samples the {:.3} Hz sway harmonic",
            2.0 * f_gait
        )));
    }
    let phase0 = walker.gait_phase_rad.unwrap_or(0.0);
    let v = walker.speed;
    let amplitude = |ratio: f64, freq: f64| {
        if freq > 0.0 {
            ratio * v / (2.0 * PI * freq)
        } else {
            0.0
        }
    };
    let a_leg = amplitude(walker.leg_swing, f_gait);
    let a_arm = amplitude(walker.arm_swing, f_gait);
    let a_sway = amplitude(walker.torso_sway, 2.0 * f_gait);

    let (sb, cb) = walker.bearing_deg.to_radians().sin_cos();
    let start = [rx_pos[0] + walker.start_range_m * cb, rx_pos[1] + walker.start_range_m * sb];
    let (sh, ch) = walker.heading_deg.to_radians().sin_cos();

    // Offsets along the heading for each body part.
    let offset = |part: usize, t: f64| -> f64 {
        let gait = (2.0 * PI * f_gait * t + phase0).sin();
        let sway = a_sway * (2.0 * PI * 2.0 * f_gait * t + 2.0 * phase0).sin();
        sway + match part {
            0 | 1 => 0.0,
            2 => a_leg * gait,
            3 => -a_leg * gait,
            4 => -a_arm * gait,
            _ => a_arm * gait,
        }
    };
    let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();

    let n = (duration / dt - 1e-9).ceil() as usize + 1;
    let r = &walker.reflectivity;
    let gains = [r.torso, r.head, r.left_leg, r.right_leg, r.left_arm, r.right_arm];
    BODY_PARTS
        .iter()
        .enumerate()
        .map(|(part, label)| {
            let path_length_m: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    let along = v * t + offset(part, t);
                    let p = [start[0] + along * ch, start[1] + along * sh];
                    dist(p, tx_pos) + dist(p, rx_pos)
                })
                .collect();
            if path_length_m.iter().any(|&l| l <= 0.0) {
                return Err(Error::InvalidArgument(format!("{label} path length reaches zero")));
            }
            Ok(ScattererTrack {
                label: (*label).to_string(),
                t0: 0.0,
                dt,
                path_length_m,
                reflectivity: gains[part].value(),
            })
        })
        .collect()
}
