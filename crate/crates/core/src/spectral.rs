//! Time-frequency views of the sensing receiver and the metrics used to
//! judge whether a micro-Doppler signature survived.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::receiver::CfrSeries;
use crate::scenario::{CfrQuantity, StftConfig, WindowKind};
use crate::waveform::BasebandSignal;
use crate::{Complex64, Error, Result};

/// STFT dimensions in samples of the analysed series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub window_len: usize,
    pub hop: usize,
    pub n_fft: usize,
    pub window: WindowKind,
}

impl StftParams {
    /// Convert window/hop durations to samples at `rate_hz`. Without an
    /// explicit size the FFT is the next power of two ≥ 4 × window.
    pub fn from_config(cfg: &StftConfig, rate_hz: f64) -> Result<Self> {
        let window_len = (cfg.window_s * rate_hz).round() as usize;
        let hop = ((cfg.hop_s * rate_hz).round() as usize).max(1);
        let n_fft = cfg
            .n_fft
            .unwrap_or_else(|| (4 * window_len.max(1)).next_power_of_two());
        let p = Self {
            window_len,
            hop,
            n_fft,
            window: cfg.window,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 || self.window_len > self.n_fft {
            return Err(Error::Degenerate(format!(
                "STFT needs 1 ≤ window ({}) ≤ n_fft ({}) and hop ≥ 1 ({})",
                self.window_len, self.n_fft, self.hop
            )));
        }
        Ok(())
    }
}

pub fn window_coefficients(kind: WindowKind, len: usize) -> Vec<f64> {
    let l = len as f64;
    (0..len)
        .map(|n| {
            let x = 2.0 * PI * n as f64 / l;
            match kind {
                WindowKind::Hann => 0.5 - 0.5 * x.cos(),
                WindowKind::Hamming => 0.54 - 0.46 * x.cos(),
                WindowKind::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                WindowKind::Rectangular => 1.0,
            }
        })
        .collect()
}

/// Power over (frequency bin, frame). Bins run from −rate/2 upward with DC at
/// row `n_fft / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub power: Array2<f64>,
    pub freqs_hz: Vec<f64>,
    /// Centre time of each frame, s.
    pub times_s: Vec<f64>,
    pub rate_hz: f64,
    pub params: StftParams,
}

impl Spectrogram {
    pub fn n_freqs(&self) -> usize {
        self.power.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.power.ncols()
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.rate_hz / self.params.n_fft as f64
    }

    pub fn dc_bin(&self) -> usize {
        self.params.n_fft / 2
    }

    pub fn total_energy(&self) -> f64 {
        self.power.sum()
    }
}

struct Planned {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
}

impl Planned {
    fn new(p: &StftParams) -> Self {
        Self {
            fft: FftPlanner::new().plan_fft_forward(p.n_fft),
            window: window_coefficients(p.window, p.window_len),
        }
    }

    /// Centred power of every frame: row i holds frequency (i − n/2)·rate/n.
    fn frames(&self, series: &[Complex64], p: &StftParams) -> Array2<f64> {
        let n_frames = 1 + (series.len() - p.window_len) / p.hop;
        let n = p.n_fft;
        let cols: Vec<Vec<f64>> = (0..n_frames)
            .into_par_iter()
            .map(|f| {
                let start = f * p.hop;
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (i, (w, x)) in self.window.iter().zip(&series[start..start + p.window_len]).enumerate() {
                    buf[i] = x * *w;
                }
                self.fft.process(&mut buf);
                (0..n)
                    .map(|i| buf[(i + n / 2) % n].norm_sqr() / n as f64)
                    .collect()
            })
            .collect();
        Array2::from_shape_fn((n, n_frames), |(i, f)| cols[f][i])
    }
}

/// Squared-magnitude windowed DFT frames, two-sided with DC centred. Each
/// frame satisfies Σ_bins power = Σ_n |w[n] x[n]|².
pub fn stft(series: &[Complex64], rate_hz: f64, t0: f64, p: &StftParams) -> Result<Spectrogram> {
    p.check()?;
    if series.len() < p.window_len {
        return Err(Error::Degenerate(format!(
            "series of {} samples is shorter than the {}-sample window",
            series.len(),
            p.window_len
        )));
    }
    if !(rate_hz > 0.0) {
        return Err(Error::Degenerate(format!("rate must be positive, got {rate_hz}")));
    }
    let power = Planned::new(p).frames(series, p);
    Ok(assemble(power, rate_hz, t0, *p))
}

pub fn stft_real(series: &[f64], rate_hz: f64, t0: f64, p: &StftParams) -> Result<Spectrogram> {
    let c: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    stft(&c, rate_hz, t0, p)
}

fn assemble(power: Array2<f64>, rate_hz: f64, t0: f64, p: StftParams) -> Spectrogram {
    let n = p.n_fft;
    let freqs_hz = (0..n)
        .map(|i| (i as f64 - (n / 2) as f64) * rate_hz / n as f64)
        .collect();
    let times_s = (0..power.ncols())
        .map(|f| t0 + (f * p.hop) as f64 / rate_hz + p.window_len as f64 / (2.0 * rate_hz))
        .collect();
    Spectrogram {
        power,
        freqs_hz,
        times_s,
        rate_hz,
        params: p,
    }
}

/// Reference-conjugated, decimated series Σ rx·conj(ref) / Σ |ref|².
///
/// A single contiguous segment is split into blocks of round(fs / rate)
/// samples. Several segments (fast-mode symbol bursts) must be uniformly
/// spaced in time; groups of round(segment rate / rate) consecutive segments
/// are pooled into one sample. Returns (series, rate, t0).
pub fn reference_product(
    rx: &[BasebandSignal],
    ref_tx: &[BasebandSignal],
    decimate_to_hz: f64,
) -> Result<(Vec<Complex64>, f64, f64)> {
    if rx.len() != ref_tx.len() || rx.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} received vs {} reference segments",
            rx.len(),
            ref_tx.len()
        )));
    }
    for (a, b) in rx.iter().zip(ref_tx) {
        if a.sample_rate_hz != b.sample_rate_hz {
            return Err(Error::DimensionMismatch(format!(
                "sample rates differ: {} vs {} Hz",
                a.sample_rate_hz, b.sample_rate_hz
            )));
        }
        if a.len() != b.len() || (a.t0 - b.t0).abs() > 1e-12 {
            return Err(Error::DimensionMismatch(
                "received and reference segments are not aligned".into(),
            ));
        }
    }
    let ratio = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        let num: Complex64 = a.iter().zip(b).map(|(y, x)| y * x.conj()).sum();
        let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
        if den > 0.0 {
            num / den
        } else {
            Complex64::new(0.0, 0.0)
        }
    };

    if rx.len() == 1 {
        let (a, b) = (&rx[0], &ref_tx[0]);
        let fs = a.sample_rate_hz;
        let block = ((fs / decimate_to_hz).round() as usize).max(1);
        if a.len() < block {
            return Err(Error::Degenerate(format!(
                "{} samples is less than one {block}-sample decimation block",
                a.len()
            )));
        }
        let series = a
            .samples
            .chunks_exact(block)
            .zip(b.samples.chunks_exact(block))
            .map(|(y, x)| ratio(y, x))
            .collect();
        return Ok((series, fs / block as f64, a.t0));
    }

    let spacing = rx[1].t0 - rx[0].t0;
    if !(spacing > 0.0) {
        return Err(Error::DimensionMismatch("segments are not increasing in time".into()));
    }
    for w in rx.windows(2) {
        if ((w[1].t0 - w[0].t0) - spacing).abs() > 1e-6 * spacing {
            return Err(Error::DimensionMismatch("segments are not uniformly spaced".into()));
        }
    }
    // Consecutive segments are pooled down to the requested rate.
    let group = ((1.0 / (spacing * decimate_to_hz)).round() as usize).max(1);
    if rx.len() < group {
        return Err(Error::Degenerate(format!(
            "{} segments is less than one {group}-segment decimation group",
            rx.len()
        )));
    }
    let series = rx
        .chunks_exact(group)
        .zip(ref_tx.chunks_exact(group))
        .map(|(ys, xs)| {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for (y, x) in ys.iter().zip(xs) {
                num += y.samples.iter().zip(&x.samples).map(|(a, b)| a * b.conj()).sum::<Complex64>();
                den += x.samples.iter().map(|b| b.norm_sqr()).sum::<f64>();
            }
            if den > 0.0 {
                num / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok((series, 1.0 / (spacing * group as f64), rx[0].t0))
}

/// Spectrogram of the received signal before the DFT: conjugate-multiply by
/// the clean transmitted reference to strip the data modulation, low-pass
/// decimate, then STFT.
pub fn method1_view(
    rx: &[BasebandSignal],
    ref_tx: &[BasebandSignal],
    decimate_to_hz: f64,
    stft_cfg: &StftConfig,
) -> Result<Spectrogram> {
    let (series, rate, t0) = reference_product(rx, ref_tx, decimate_to_hz)?;
    let p = StftParams::from_config(stft_cfg, rate)?;
    stft(&series, rate, t0, &p)
}

/// Average over the selected bins of the STFT of each bin's mean-removed CFR
/// series (power or complex).
pub fn method2_view(
    cfr: &CfrSeries,
    bins: &[usize],
    quantity: CfrQuantity,
    stft_cfg: &StftConfig,
) -> Result<Spectrogram> {
    if bins.is_empty() {
        return Err(Error::InvalidArgument("no subcarriers selected".into()));
    }
    if let Some(&k) = bins.iter().find(|&&k| !cfr.used_bins.contains(&k)) {
        return Err(Error::InvalidArgument(format!("bin {k} carries no CSI")));
    }
    let rate = cfr.csi_rate_hz;
    let p = StftParams::from_config(stft_cfg, rate)?;
    if cfr.n_times() < p.window_len {
        return Err(Error::Degenerate(format!(
            "{} CSI samples is shorter than the {}-sample window",
            cfr.n_times(),
            p.window_len
        )));
    }
    let planned = Planned::new(&p);
    let per_bin: Vec<Array2<f64>> = bins
        .par_iter()
        .map(|&k| {
            let series: Vec<Complex64> = match quantity {
                CfrQuantity::Power => cfr.power.row(k).iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                CfrQuantity::Complex => cfr.h_hat.row(k).to_vec(),
            };
            let mean = series.iter().sum::<Complex64>() / series.len() as f64;
            let centred: Vec<Complex64> = series.iter().map(|v| v - mean).collect();
            planned.frames(&centred, &p)
        })
        .collect();
    let mut power = per_bin[0].clone();
    for extra in &per_bin[1..] {
        power += extra;
    }
    power /= bins.len() as f64;
    let t0 = cfr.times.first().copied().unwrap_or(0.0);
    Ok(assemble(power, rate, t0, p))
}

/// Normalized inner product of the mean-removed power matrices, clamped to
/// [0, 1].
pub fn spectrogram_correlation(a: &Spectrogram, b: &Spectrogram) -> Result<f64> {
    if a.power.dim() != b.power.dim() {
        return Err(Error::DimensionMismatch(format!(
            "spectrogram shapes {:?} and {:?}",
            a.power.dim(),
            b.power.dim()
        )));
    }
    let centred = |s: &Spectrogram| {
        let mean = s.power.mean().unwrap_or(0.0);
        s.power.mapv(|v| v - mean)
    };
    let (ca, cb) = (centred(a), centred(b));
    let na = ca.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = cb.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("spectrogram has no variation to correlate".into()));
    }
    let dot: f64 = ca.iter().zip(cb.iter()).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Width of the smallest band [−h, h] around 0 Hz that holds `fraction` of
/// the time-averaged energy, counted in whole bins: (2h + 1) · bin width.
pub fn occupied_bandwidth(s: &Spectrogram, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("energy fraction {fraction} not in (0, 1]")));
    }
    let profile: Vec<f64> = s.power.rows().into_iter().map(|r| r.sum()).collect();
    let total: f64 = profile.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("spectrogram has zero energy".into()));
    }
    let dc = s.dc_bin();
    let n = profile.len();
    let target = fraction * total * (1.0 - 1e-12);
    let mut acc = profile[dc];
    let mut h = 0;
    while acc < target && h < n {
        h += 1;
        if dc + h < n {
            acc += profile[dc + h];
        }
        if h <= dc {
            acc += profile[dc - h];
        }
    }
    Ok((2 * h + 1) as f64 * s.bin_width_hz())
}

/// Frequency of the strongest non-DC bin in every frame.
pub fn peak_doppler_track(s: &Spectrogram) -> Vec<f64> {
    let dc = s.dc_bin();
    s.power
        .columns()
        .into_iter()
        .map(|col| {
            let mut best = if dc == 0 { 1 } else { 0 };
            for (i, &v) in col.iter().enumerate() {
                if i != dc && v > col[best] {
                    best = i;
                }
            }
            s.freqs_hz[best]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(window_len: usize, hop: usize, n_fft: usize) -> StftParams {
        StftParams {
            window_len,
            hop,
            n_fft,
            window: WindowKind::Hann,
        }
    }

    fn tone(freq: f64, rate: f64, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * freq * i as f64 / rate))
            .collect()
    }

    #[test]
    fn default_sizes() {
        let p = StftParams::from_config(&StftConfig::default(), 1000.0).unwrap();
        assert_eq!((p.window_len, p.hop, p.n_fft), (500, 50, 2048));
        let p = StftParams::from_config(&StftConfig::default(), 2000.0).unwrap();
        assert_eq!((p.window_len, p.hop, p.n_fft), (1000, 100, 4096));
    }

    #[test]
    fn constant_series_sits_in_dc() {
        let s = stft_real(&vec![2.0; 400], 100.0, 0.0, &params(64, 16, 64)).unwrap();
        let w = window_coefficients(WindowKind::Hann, 64);
        for col in s.power.columns() {
            let total: f64 = col.sum();
            // A Hann window leaks into the two neighbours of DC only.
            let near: f64 = col[31] + col[32] + col[33];
            assert!((near - total).abs() < 1e-9 * total);
            let dc_expect = (2.0 * w.iter().sum::<f64>()).powi(2) / 64.0;
            assert!((col[32] - dc_expect).abs() < 1e-9 * dc_expect);
        }
        let r = stft_real(&vec![2.0; 400], 100.0, 0.0, &StftParams { window: WindowKind::Rectangular, ..params(64, 16, 64) }).unwrap();
        for col in r.power.columns() {
            assert!((col[32] - col.sum()).abs() < 1e-9 * col.sum());
        }
    }

    #[test]
    fn tone_ridge() {
        let rate = 1000.0;
        let p = params(256, 64, 1024);
        let s = stft(&tone(100.0, rate, 2000), rate, 0.0, &p).unwrap();
        let bin = 100.0 / (rate / 1024.0);
        let expect = s.dc_bin() + bin.round() as usize;
        for col in s.power.columns() {
            let arg = col.iter().enumerate().fold(0, |b, (i, &v)| if v > col[b] { i } else { b });
            assert_eq!(arg, expect);
        }
        let track = peak_doppler_track(&s);
        assert!(track.iter().all(|f| (f - 100.0).abs() <= s.bin_width_hz()));
    }

    #[test]
    fn stft_errors() {
        assert!(stft(&tone(1.0, 10.0, 10), 10.0, 0.0, &params(16, 4, 32)).is_err());
        assert!(stft(&tone(1.0, 10.0, 100), 10.0, 0.0, &params(64, 4, 32)).is_err());
        assert!(stft(&tone(1.0, 10.0, 100), 10.0, 0.0, &params(16, 0, 32)).is_err());
    }

    #[test]
    fn correlation_cases() {
        let rate = 1000.0;
        let p = params(128, 32, 256);
        let a = stft(&tone(60.0, rate, 1000), rate, 0.0, &p).unwrap();
        assert!((spectrogram_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let mut scaled = a.clone();
        scaled.power *= 3.5;
        assert!((spectrogram_correlation(&a, &scaled).unwrap() - 1.0).abs() < 1e-12);

        let mut flat = a.clone();
        flat.power.fill(1.0);
        assert!(spectrogram_correlation(&a, &flat).is_err());
        let other = stft(&tone(60.0, rate, 1200), rate, 0.0, &p).unwrap();
        assert!(spectrogram_correlation(&a, &other).is_err());
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut noise = |n: usize| -> Vec<Complex64> {
            (0..n)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect()
        };
        let p = params(128, 64, 128);
        let a = stft(&noise(128 * 200), 1000.0, 0.0, &p).unwrap();
        let b = stft(&noise(128 * 200), 1000.0, 0.0, &p).unwrap();
        assert!(a.power.len() >= 10_000);
        assert!(spectrogram_correlation(&a, &b).unwrap() < 0.1);
    }

    #[test]
    fn bandwidth_of_dc_is_one_bin() {
        let p = StftParams { window: WindowKind::Rectangular, ..params(64, 32, 64) };
        let s = stft_real(&vec![1.0; 256], 640.0, 0.0, &p).unwrap();
        assert_eq!(occupied_bandwidth(&s, 0.9).unwrap(), s.bin_width_hz());
        let mut z = s.clone();
        z.power.fill(0.0);
        assert!(occupied_bandwidth(&z, 0.9).is_err());
    }

    #[test]
    fn fm_phasor_bandwidth_near_carson() {
        use crate::obfuscator::{smear_phasor, SmearParams};
        let sp = SmearParams::new(200.0, 10.0).unwrap();
        let rate = 2000.0;
        let series: Vec<Complex64> = (0..8000).map(|i| smear_phasor(i as f64 / rate, &sp)).collect();
        let s = stft(&series, rate, 0.0, &StftParams::from_config(&StftConfig::default(), rate).unwrap()).unwrap();
        let bw = occupied_bandwidth(&s, 0.9).unwrap();
        assert!((bw - 420.0).abs() <= 0.2 * 420.0, "{bw}");
    }

    #[test]
    fn method2_view_rejects_empty_selection() {
        let cfr = CfrSeries {
            h_hat: Array2::zeros((4, 10)),
            power: Array2::zeros((4, 10)),
            times: (0..10).map(|i| i as f64).collect(),
            csi_rate_hz: 1.0,
            used_bins: vec![1, 3],
        };
        let cfg = StftConfig { window_s: 4.0, hop_s: 1.0, n_fft: None, window: WindowKind::Hann };
        assert!(method2_view(&cfr, &[], CfrQuantity::Power, &cfg).is_err());
        assert!(method2_view(&cfr, &[2], CfrQuantity::Power, &cfg).is_err());
        // Static channel: mean removal leaves nothing.
        let s = method2_view(&cfr, &[1, 3], CfrQuantity::Power, &cfg).unwrap();
        assert!(s.power.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_product_modes() {
        let x: Vec<Complex64> = (0..1000).map(|i| Complex64::from_polar(1.0, i as f64 * 0.37)).collect();
        let h = Complex64::new(0.3, -0.2);
        let rx = BasebandSignal { samples: x.iter().map(|v| v * h).collect(), sample_rate_hz: 1000.0, t0: 0.0 };
        let tx = BasebandSignal { samples: x, sample_rate_hz: 1000.0, t0: 0.0 };
        let (series, rate, _) = reference_product(std::slice::from_ref(&rx), std::slice::from_ref(&tx), 100.0).unwrap();
        assert_eq!(series.len(), 100);
        assert_eq!(rate, 100.0);
        assert!(series.iter().all(|v| (v - h).norm() < 1e-12));

        let mut bad = tx.clone();
        bad.sample_rate_hz = 2000.0;
        assert!(reference_product(std::slice::from_ref(&rx), std::slice::from_ref(&bad), 100.0).is_err());
    }

    proptest! {
        #[test]
        fn frame_parseval(seed in any::<u64>(), kind in prop::sample::select(vec![WindowKind::Hann, WindowKind::Hamming, WindowKind::Blackman, WindowKind::Rectangular])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Complex64> = (0..300).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let p = StftParams { window_len: 50, hop: 25, n_fft: 128, window: kind };
            let s = stft(&x, 100.0, 0.0, &p).unwrap();
            let w = window_coefficients(kind, 50);
            for (f, col) in s.power.columns().into_iter().enumerate() {
                let direct: f64 = x[f * 25..f * 25 + 50].iter().zip(&w).map(|(v, w)| (v * w).norm_sqr()).sum();
                prop_assert!((col.sum() - direct).abs() <= 1e-9 * direct);
            }
        }

        #[test]
        fn conjugate_mirrors_spectrum(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<Complex64> = (0..200).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let xc: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
            let p = params(40, 20, 64);
            let a = stft(&x, 1.0, 0.0, &p).unwrap();
            let b = stft(&xc, 1.0, 0.0, &p).unwrap();
            let n = 64;
            for f in 0..a.n_frames() {
                for i in 1..n {
                    // row i is frequency i − n/2; its mirror is row n − i
                    let m = n - i;
                    prop_assert!((a.power[[i, f]] - b.power[[m, f]]).abs() <= 1e-12 * (1.0 + a.power[[i, f]]));
                }
            }
        }

        #[test]
        fn correlation_symmetric_and_scale_invariant(seed in any::<u64>(), scale in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noise = || -> Vec<Complex64> { (0..400).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect() };
            let p = params(32, 16, 32);
            let a = stft(&noise(), 1.0, 0.0, &p).unwrap();
            let b = stft(&noise(), 1.0, 0.0, &p).unwrap();
            let ab = spectrogram_correlation(&a, &b).unwrap();
            let ba = spectrogram_correlation(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab < 1.0 - 1e-6);
            let mut c = a.clone();
            c.power *= scale;
            prop_assert!((spectrogram_correlation(&a, &c).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
