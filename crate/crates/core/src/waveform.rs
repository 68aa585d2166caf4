//! OFDM transmit side: Gray QAM, the known-symbol table, the symbol grid and
//! IDFT modulation with cyclic prefix.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use rustfft::{Fft, FftPlanner};

use crate::scenario::ScenarioConfig;
use crate::{Complex64, Error, Result};

/// Number of repeated known symbols at the start of every frame.
pub const PREAMBLE_SYMBOLS: usize = 7;

/// Seed of the 7-bit LFSR (x^7 + x^4 + 1) that generates the known QPSK table.
pub const KNOWN_TABLE_LFSR_SEED: u8 = 0b101_1101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinRole {
    Data,
    Pilot,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Preamble,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Data,
    Pilot,
    Null,
    Preamble,
}

/// Assignment of FFT bins to data, pilot and null roles.
///
/// Used subcarriers occupy signed indices ±1..±U/2 (DC unused). Pilots sit at
/// ±round((2i+1)·U/(2P)), which for the 20 MHz layout gives ±7 and ±21.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierLayout {
    pub n_fft: usize,
    pub roles: Vec<BinRole>,
    /// FFT bins of the data subcarriers, ascending in signed index.
    pub data_bins: Vec<usize>,
    pub pilot_bins: Vec<usize>,
    /// Data and pilot bins together, ascending in signed index.
    pub used_bins: Vec<usize>,
}

impl SubcarrierLayout {
    pub fn new(n_fft: usize, n_data: usize, n_pilot: usize) -> Result<Self> {
        let used = n_data + n_pilot;
        if used == 0 || used % 2 != 0 || n_pilot % 2 != 0 || used / 2 >= n_fft / 2 {
            return Err(Error::Validation(format!(
                "cannot lay out {n_data} data and {n_pilot} pilot subcarriers in {n_fft} bins"
            )));
        }
        let half = used / 2;
        let mut pilots_pos: Vec<usize> = (0..n_pilot / 2)
            .map(|i| (((2 * i + 1) * half) as f64 / n_pilot as f64).round() as usize)
            .collect();
        pilots_pos.dedup();
        if pilots_pos.len() != n_pilot / 2 || pilots_pos.iter().any(|&p| p == 0 || p > half) {
            return Err(Error::Validation(format!(
                "pilot positions collide for {n_pilot} pilots over ±{half}"
            )));
        }

        let mut roles = vec![BinRole::Null; n_fft];
        let mut data_bins = Vec::with_capacity(n_data);
        let mut pilot_bins = Vec::with_capacity(n_pilot);
        let mut used_bins = Vec::with_capacity(used);
        for k in -(half as i64)..=(half as i64) {
            if k == 0 {
                continue;
            }
            let bin = bin_of(k, n_fft);
            used_bins.push(bin);
            if pilots_pos.contains(&(k.unsigned_abs() as usize)) {
                roles[bin] = BinRole::Pilot;
                pilot_bins.push(bin);
            } else {
                roles[bin] = BinRole::Data;
                data_bins.push(bin);
            }
        }
        Ok(Self {
            n_fft,
            roles,
            data_bins,
            pilot_bins,
            used_bins,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        Self::new(
            cfg.n_subcarriers,
            cfg.n_data_subcarriers,
            cfg.n_pilot_subcarriers,
        )
    }
}

/// FFT bin holding signed subcarrier index `k`.
pub fn bin_of(k: i64, n_fft: usize) -> usize {
    k.rem_euclid(n_fft as i64) as usize
}

/// Signed subcarrier index of FFT bin `bin`.
pub fn signed_index(bin: usize, n_fft: usize) -> i64 {
    if bin < n_fft / 2 {
        bin as i64
    } else {
        bin as i64 - n_fft as i64
    }
}

/// Square Gray-coded QAM with unit average energy.
///
/// The first half of each bit group selects the in-phase level, the second
/// half the quadrature level; a 0 bit in the leading position maps to the
/// positive half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_axis: usize,
    scale: f64,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        if !crate::scenario::SUPPORTED_QAM_ORDERS.contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "unsupported constellation order {order}"
            )));
        }
        let bits = order.trailing_zeros() as usize;
        Ok(Self {
            order,
            bits_per_axis: bits / 2,
            scale: (3.0 / (2.0 * (order as f64 - 1.0))).sqrt(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    fn levels(&self) -> usize {
        1 << self.bits_per_axis
    }

    fn axis_value(&self, bits: &[u8]) -> f64 {
        let gray = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        let mut index = gray;
        let mut shift = gray >> 1;
        while shift != 0 {
            index ^= shift;
            shift >>= 1;
        }
        ((self.levels() - 1) as f64 - 2.0 * index as f64) * self.scale
    }

    fn axis_bits(&self, value: f64, out: &mut Vec<u8>) {
        let l = self.levels();
        let raw = ((l - 1) as f64 - value / self.scale) / 2.0;
        let index = raw.round().clamp(0.0, (l - 1) as f64) as usize;
        let gray = index ^ (index >> 1);
        for i in (0..self.bits_per_axis).rev() {
            out.push(((gray >> i) & 1) as u8);
        }
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} bits is not a multiple of {bps}",
                bits.len()
            )));
        }
        Ok(bits
            .chunks_exact(bps)
            .map(|c| {
                let (i, q) = c.split_at(self.bits_per_axis);
                Complex64::new(self.axis_value(i), self.axis_value(q))
            })
            .collect())
    }

    /// Minimum-distance hard decisions.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol());
        for s in symbols {
            self.axis_bits(s.re, &mut bits);
            self.axis_bits(s.im, &mut bits);
        }
        bits
    }

    /// Nearest constellation point.
    pub fn slice(&self, s: Complex64) -> Complex64 {
        let bits = self.demap(&[s]);
        self.map(&bits).expect("demap output has whole symbols")[0]
    }

    pub fn points(&self) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        let bits: Vec<u8> = (0..self.order)
            .flat_map(|w| (0..bps).rev().map(move |i| ((w >> i) & 1) as u8))
            .collect();
        self.map(&bits).expect("whole symbols")
    }
}

/// QAM-map `bits` with the given constellation order.
pub fn qam_map(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    Constellation::new(order)?.map(bits)
}

/// The known QPSK value on every bin (zero on nulls), shared by preamble
/// symbols and by the pilots of data symbols.
pub fn known_symbol_table(layout: &SubcarrierLayout) -> Vec<Complex64> {
    let mut state = KNOWN_TABLE_LFSR_SEED & 0x7f;
    let mut next_bit = || {
        let bit = ((state >> 6) ^ (state >> 3)) & 1;
        state = ((state << 1) | bit) & 0x7f;
        bit
    };
    let mut table = vec![Complex64::new(0.0, 0.0); layout.n_fft];
    for &bin in &layout.used_bins {
        let (b0, b1) = (next_bit(), next_bit());
        let sign = |b: u8| if b == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        table[bin] = Complex64::new(sign(b0), sign(b1));
    }
    table
}

/// Frequency-domain frame: values indexed (FFT bin, OFDM symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    pub values: Array2<Complex64>,
    pub roles: Vec<BinRole>,
    pub columns: Vec<ColumnKind>,
    /// Start time of each symbol (beginning of its cyclic prefix), s.
    pub symbol_times: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
}

impl SymbolGrid {
    pub fn n_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_symbols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, m: usize) -> ArrayView1<'_, Complex64> {
        self.values.column(m)
    }

    pub fn cell_kind(&self, k: usize, m: usize) -> CellKind {
        match (self.roles[k], self.columns[m]) {
            (BinRole::Null, _) => CellKind::Null,
            (_, ColumnKind::Preamble) => CellKind::Preamble,
            (BinRole::Pilot, ColumnKind::Data) => CellKind::Pilot,
            (BinRole::Data, ColumnKind::Data) => CellKind::Data,
        }
    }

    /// Midpoint of each symbol including its cyclic prefix, s.
    pub fn symbol_midpoints(&self, cp_len: usize) -> Vec<f64> {
        let n = self.n_bins();
        let half = (n + cp_len) as f64 / (2.0 * n as f64 * self.subcarrier_spacing_hz);
        self.symbol_times.iter().map(|t| t + half).collect()
    }
}

/// Build the 7-symbol known preamble for a config.
pub fn build_preamble_grid(cfg: &ScenarioConfig) -> Result<SymbolGrid> {
    let layout = SubcarrierLayout::from_config(cfg)?;
    Ok(known_grid(&layout, PREAMBLE_SYMBOLS, 0.0, cfg))
}

fn known_grid(
    layout: &SubcarrierLayout,
    n_symbols: usize,
    t0: f64,
    cfg: &ScenarioConfig,
) -> SymbolGrid {
    let table = known_symbol_table(layout);
    let values = Array2::from_shape_fn((layout.n_fft, n_symbols), |(k, _)| table[k]);
    let t_sym = cfg.symbol_duration_s();
    SymbolGrid {
        values,
        roles: layout.roles.clone(),
        columns: vec![ColumnKind::Preamble; n_symbols],
        symbol_times: (0..n_symbols).map(|m| t0 + m as f64 * t_sym).collect(),
        subcarrier_spacing_hz: cfg.subcarrier_spacing_hz,
    }
}

/// Complex baseband samples at N·Δf.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// Time of the first sample, s.
    pub t0: f64,
}

impl BasebandSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }
}

/// Unitary IDFT/DFT pair for one symbol size, with cyclic prefix handling.
#[derive(Clone)]
pub struct OfdmModem {
    n_fft: usize,
    cp_len: usize,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem")
            .field("n_fft", &self.n_fft)
            .field("cp_len", &self.cp_len)
            .finish()
    }
}

impl OfdmModem {
    pub fn new(n_fft: usize, cp_len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n_fft,
            cp_len,
            inverse: planner.plan_fft_inverse(n_fft),
            forward: planner.plan_fft_forward(n_fft),
            scale: 1.0 / (n_fft as f64).sqrt(),
        }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.cp_len
    }

    /// x[n] = N^{-1/2} Σ_k X[k] e^{j2πkn/N}, preceded by its last `cp_len` samples.
    pub fn modulate_into(&self, column: &[Complex64], out: &mut Vec<Complex64>) {
        assert_eq!(column.len(), self.n_fft);
        let mut body = column.to_vec();
        self.inverse.process(&mut body);
        body.iter_mut().for_each(|s| *s *= self.scale);
        out.extend_from_slice(&body[self.n_fft - self.cp_len..]);
        out.extend_from_slice(&body);
    }

    /// Strip the cyclic prefix and apply the unitary forward DFT.
    pub fn demodulate_symbol(&self, symbol: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(symbol.len(), self.symbol_len());
        let mut body = symbol[self.cp_len..].to_vec();
        self.dft_in_place(&mut body);
        body
    }

    pub fn dft_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        buf.iter_mut().for_each(|s| *s *= self.scale);
    }

    pub fn idft_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        buf.iter_mut().for_each(|s| *s *= self.scale);
    }
}

/// Modulate every column of `grid` and concatenate the CP-prefixed symbols.
pub fn ofdm_modulate(grid: &SymbolGrid, cp_len: usize) -> BasebandSignal {
    let n = grid.n_bins();
    let modem = OfdmModem::new(n, cp_len);
    let mut samples = Vec::with_capacity(grid.n_symbols() * (n + cp_len));
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..grid.n_symbols() {
        column
            .iter_mut()
            .zip(grid.column(m))
            .for_each(|(c, v)| *c = *v);
        modem.modulate_into(&column, &mut samples);
    }
    BasebandSignal {
        samples,
        sample_rate_hz: n as f64 * grid.subcarrier_spacing_hz,
        t0: grid.symbol_times.first().copied().unwrap_or(0.0),
    }
}

/// What a frame carries after the preamble.
#[derive(Debug, Clone, Copy)]
pub enum FrameContent<'a> {
    /// Every symbol is the known table: back-to-back sounding.
    KnownSymbols(usize),
    /// Preamble followed by data symbols filled from these bits (zero-padded
    /// to a whole symbol).
    Payload(&'a [u8]),
}

/// Assemble a frame starting at `t0` and modulate it.
pub fn frame_stream(
    cfg: &ScenarioConfig,
    content: FrameContent<'_>,
    t0: f64,
) -> Result<(SymbolGrid, BasebandSignal)> {
    let layout = SubcarrierLayout::from_config(cfg)?;
    let grid = match content {
        FrameContent::KnownSymbols(n) => {
            if n == 0 {
                return Err(Error::InvalidArgument("frame needs at least one symbol".into()));
            }
            known_grid(&layout, n, t0, cfg)
        }
        FrameContent::Payload(bits) => payload_grid(cfg, &layout, bits, t0)?,
    };
    let signal = ofdm_modulate(&grid, cfg.cp_len);
    Ok((grid, signal))
}

/// Bits carried by one data symbol.
pub fn bits_per_data_symbol(cfg: &ScenarioConfig) -> usize {
    cfg.n_data_subcarriers * cfg.qam_order.trailing_zeros() as usize
}

fn payload_grid(
    cfg: &ScenarioConfig,
    layout: &SubcarrierLayout,
    bits: &[u8],
    t0: f64,
) -> Result<SymbolGrid> {
    let constellation = Constellation::new(cfg.qam_order)?;
    let per_symbol = layout.data_bins.len() * constellation.bits_per_symbol();
    if bits.len() < per_symbol {
        return Err(Error::InvalidArgument(format!(
            "payload of {} bits is shorter than one symbol ({per_symbol} bits)",
            bits.len()
        )));
    }
    let n_data = bits.len().div_ceil(per_symbol);
    let mut padded = bits.to_vec();
    padded.resize(n_data * per_symbol, 0);
    let symbols = constellation.map(&padded)?;

    let mut grid = known_grid(layout, PREAMBLE_SYMBOLS + n_data, t0, cfg);
    for (d, chunk) in symbols.chunks_exact(layout.data_bins.len()).enumerate() {
        let m = PREAMBLE_SYMBOLS + d;
        grid.columns[m] = ColumnKind::Data;
        for (&bin, &s) in layout.data_bins.iter().zip(chunk) {
            grid.values[[bin, m]] = s;
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn qpsk_corners() {
        let s = qam_map(&[0, 0, 1, 1], 4).unwrap();
        let r = FRAC_1_SQRT_2;
        assert!(close(s[0], Complex64::new(r, r), 1e-15));
        assert!(close(s[1], Complex64::new(-r, -r), 1e-15));
    }

    #[test]
    fn constellations_have_unit_mean_energy() {
        for order in SUPPORTED_ORDERS {
            let c = Constellation::new(order).unwrap();
            let pts = c.points();
            assert_eq!(pts.len(), order);
            let mean = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12, "order {order}: {mean}");
            // every point distinct
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    assert!((a - b).norm() > 1e-6);
                }
            }
        }
    }

    const SUPPORTED_ORDERS: [usize; 3] = [4, 16, 64];

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let c = Constellation::new(16).unwrap();
        let d_min = 2.0 * (3.0f64 / 30.0).sqrt();
        let pts = c.points();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                if ((a - b).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((i ^ j).count_ones(), 1, "{i} vs {j}");
                }
            }
        }
    }

    #[test]
    fn qam_errors() {
        assert!(qam_map(&[0, 1, 0], 4).is_err());
        assert!(qam_map(&[0, 1], 8).is_err());
    }

    #[test]
    fn standard_layout() {
        let l = SubcarrierLayout::new(64, 52, 4).unwrap();
        let mut pilots: Vec<i64> = l.pilot_bins.iter().map(|&b| signed_index(b, 64)).collect();
        pilots.sort();
        assert_eq!(pilots, vec![-21, -7, 7, 21]);
        assert_eq!(l.data_bins.len(), 52);
        assert_eq!(l.roles[0], BinRole::Null);
        assert_eq!(l.roles[32], BinRole::Null);
        assert!(l.used_bins.iter().all(|&b| signed_index(b, 64).abs() <= 28));
    }

    #[test]
    fn preamble_grid_repeats_known_symbol() {
        let cfg = ScenarioConfig::default();
        let g = build_preamble_grid(&cfg).unwrap();
        assert_eq!(g.n_symbols(), 7);
        for m in 1..7 {
            assert_eq!(g.column(m), g.column(0));
        }
        for k in 0..g.n_bins() {
            if g.roles[k] == BinRole::Null {
                assert!(g.values.row(k).iter().all(|v| *v == Complex64::new(0.0, 0.0)));
            } else {
                assert!((g.values[[k, 0]].norm() - 1.0).abs() < 1e-15);
            }
        }
        assert_eq!(g, build_preamble_grid(&cfg).unwrap());
    }

    #[test]
    fn single_tone_idft() {
        let cfg = ScenarioConfig::default();
        let mut g = build_preamble_grid(&cfg).unwrap();
        g.values = Array2::zeros((64, 1));
        g.values[[1, 0]] = Complex64::new(1.0, 0.0);
        g.columns.truncate(1);
        g.symbol_times.truncate(1);
        let x = ofdm_modulate(&g, 0);
        assert_eq!(x.len(), 64);
        for (n, s) in x.samples.iter().enumerate() {
            let expect = Complex64::from_polar(1.0 / 8.0, 2.0 * std::f64::consts::PI * n as f64 / 64.0);
            assert!(close(*s, expect, 1e-14));
        }
        assert_eq!(x.sample_rate_hz, 20e6);
    }

    #[test]
    fn zero_grid_gives_zero_signal() {
        let cfg = ScenarioConfig::default();
        let mut g = build_preamble_grid(&cfg).unwrap();
        g.values.fill(Complex64::new(0.0, 0.0));
        assert!(ofdm_modulate(&g, 16).samples.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn known_symbol_frames() {
        let cfg = ScenarioConfig::default();
        let (g, x) = frame_stream(&cfg, FrameContent::KnownSymbols(10), 0.0).unwrap();
        let pre = build_preamble_grid(&cfg).unwrap();
        for m in 0..10 {
            assert_eq!(g.column(m), pre.column(0));
        }
        assert_eq!(x.len(), 10 * 80);
    }

    #[test]
    fn payload_frames() {
        let cfg = ScenarioConfig::default();
        let bits: Vec<u8> = (0..3 * 208).map(|i| (i % 3 == 0) as u8).collect();
        let (g, x) = frame_stream(&cfg, FrameContent::Payload(&bits), 1.0).unwrap();
        assert_eq!(g.n_symbols(), 10);
        assert!(g.columns[..7].iter().all(|c| *c == ColumnKind::Preamble));
        assert!(g.columns[7..].iter().all(|c| *c == ColumnKind::Data));
        assert_eq!(x.len(), 10 * 80);
        assert_eq!(x.t0, 1.0);
        let pilot = g.roles.iter().position(|r| *r == BinRole::Pilot).unwrap();
        assert_eq!(g.cell_kind(pilot, 8), CellKind::Pilot);
        assert_eq!(g.values[[pilot, 8]], g.values[[pilot, 0]]);
        assert!(frame_stream(&cfg, FrameContent::Payload(&bits[..100]), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn map_demap_roundtrip(order in prop::sample::select(vec![4usize, 16, 64]),
                               words in prop::collection::vec(0u8..=1, 0..60)) {
            let c = Constellation::new(order).unwrap();
            let bps = c.bits_per_symbol();
            let n = words.len() / bps * bps;
            let bits = &words[..n];
            let syms = c.map(bits).unwrap();
            prop_assert_eq!(c.demap(&syms), bits.to_vec());
        }

        #[test]
        fn parseval_and_loopback(seed in any::<u64>(), cp in 0usize..=16) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cfg = ScenarioConfig::default();
            let mut g = build_preamble_grid(&cfg).unwrap();
            g.values.mapv_inplace(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)));
            let x = ofdm_modulate(&g, cp);
            let modem = OfdmModem::new(64, cp);
            for (m, sym) in x.samples.chunks_exact(64 + cp).enumerate() {
                let time_energy: f64 = sym[cp..].iter().map(|s| s.norm_sqr()).sum();
                let freq_energy: f64 = g.column(m).iter().map(|s| s.norm_sqr()).sum();
                prop_assert!((time_energy - freq_energy).abs() <= 1e-9 * freq_energy);
                let y = modem.demodulate_symbol(sym);
                let err: f64 = y.iter().zip(g.column(m)).map(|(a, b)| (a - b).norm_sqr()).sum();
                prop_assert!(err.sqrt() <= 1e-9 * freq_energy.sqrt());
            }
        }
    }
}
