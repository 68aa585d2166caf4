//! Receiver processing shared by the passive sensing receiver and the
//! intended link receiver: demodulation, per-symbol CSI, pilot phase
//! tracking, equalization and error counting.

use ndarray::Array2;

use crate::waveform::{BasebandSignal, BinRole, ColumnKind, Constellation, OfdmModem, SymbolGrid, SubcarrierLayout};
use crate::{Complex64, Error, Result};

/// Per-symbol channel estimates Ĥ[k, m] and their power |Ĥ|².
#[derive(Debug, Clone, PartialEq)]
pub struct CfrSeries {
    /// Rows are FFT bins, columns retained symbols. Null bins hold zero.
    pub h_hat: Array2<Complex64>,
    pub power: Array2<f64>,
    /// Start time of each retained symbol, s.
    pub times: Vec<f64>,
    pub csi_rate_hz: f64,
    /// Bins that carry an estimate, ascending in signed index.
    pub used_bins: Vec<usize>,
}

impl CfrSeries {
    pub fn n_bins(&self) -> usize {
        self.h_hat.nrows()
    }

    pub fn n_times(&self) -> usize {
        self.h_hat.ncols()
    }
}

/// Strip each CP and apply the unitary DFT to a contiguous stream of symbols.
pub fn ofdm_demodulate(
    sig: &BasebandSignal,
    layout: &SubcarrierLayout,
    cp_len: usize,
) -> Result<SymbolGrid> {
    demodulate_bursts(std::slice::from_ref(sig), layout, cp_len)
}

/// Demodulate symbols held in (possibly non-contiguous) bursts; symbol times
/// follow each burst's `t0`.
pub fn demodulate_bursts(
    bursts: &[BasebandSignal],
    layout: &SubcarrierLayout,
    cp_len: usize,
) -> Result<SymbolGrid> {
    let n = layout.n_fft;
    let len = n + cp_len;
    let modem = OfdmModem::new(n, cp_len);
    let mut columns = Vec::new();
    let mut times = Vec::new();
    let mut spacing = None;
    for burst in bursts {
        if burst.len() % len != 0 || burst.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples is not a whole number of {len}-sample symbols",
                burst.len()
            )));
        }
        spacing.get_or_insert(burst.sample_rate_hz / n as f64);
        for (j, sym) in burst.samples.chunks_exact(len).enumerate() {
            columns.push(modem.demodulate_symbol(sym));
            times.push(burst.time_of(j * len));
        }
    }
    let m = columns.len();
    let values = Array2::from_shape_fn((n, m), |(k, c)| columns[c][k]);
    Ok(SymbolGrid {
        values,
        roles: layout.roles.clone(),
        columns: vec![ColumnKind::Data; m],
        symbol_times: times,
        subcarrier_spacing_hz: spacing.unwrap_or(0.0),
    })
}

/// Ĥ[k, m] = X*[k] Y[k, m] / |X[k]|² on used bins, keeping every
/// `decimation`-th column. `known` holds either one column (reused for every
/// symbol) or one column per symbol of `y`.
pub fn estimate_cfr(y: &SymbolGrid, known: &SymbolGrid, decimation: usize) -> Result<CfrSeries> {
    if decimation == 0 {
        return Err(Error::InvalidArgument("decimation must be ≥ 1".into()));
    }
    if known.n_bins() != y.n_bins() || (known.n_symbols() != 1 && known.n_symbols() != y.n_symbols()) {
        return Err(Error::DimensionMismatch(format!(
            "known grid {}×{} does not match received grid {}×{}",
            known.n_bins(),
            known.n_symbols(),
            y.n_bins(),
            y.n_symbols()
        )));
    }
    let used_bins: Vec<usize> = used_bins_sorted(&y.roles);
    let kept: Vec<usize> = (0..y.n_symbols()).step_by(decimation).collect();
    let mut h_hat = Array2::zeros((y.n_bins(), kept.len()));
    for (c, &m) in kept.iter().enumerate() {
        let km = if known.n_symbols() == 1 { 0 } else { m };
        for &k in &used_bins {
            let x = known.values[[k, km]];
            let energy = x.norm_sqr();
            if energy == 0.0 {
                return Err(Error::Degenerate(format!(
                    "known symbol is zero on used bin {k}"
                )));
            }
            h_hat[[k, c]] = x.conj() * y.values[[k, m]] / energy;
        }
    }
    let power = h_hat.mapv(|h: Complex64| h.norm_sqr());
    let times: Vec<f64> = kept.iter().map(|&m| y.symbol_times[m]).collect();
    let csi_rate_hz = if times.len() >= 2 {
        1.0 / (times[1] - times[0])
    } else {
        0.0
    };
    Ok(CfrSeries {
        h_hat,
        power,
        times,
        csi_rate_hz,
        used_bins,
    })
}

fn used_bins_sorted(roles: &[BinRole]) -> Vec<usize> {
    let n = roles.len();
    let mut bins: Vec<usize> = (0..n).filter(|&k| roles[k] != BinRole::Null).collect();
    bins.sort_by_key(|&k| crate::waveform::signed_index(k, n));
    bins
}

/// Average of X*Y/|X|² over the given columns: the link receiver's channel
/// estimate from its preamble.
pub fn average_channel_estimate(
    y: &SymbolGrid,
    known: &[Complex64],
    columns: std::ops::Range<usize>,
) -> Result<Vec<Complex64>> {
    if columns.is_empty() || columns.end > y.n_symbols() {
        return Err(Error::InvalidArgument(format!(
            "cannot average columns {columns:?} of a {}-symbol grid",
            y.n_symbols()
        )));
    }
    let count = columns.len() as f64;
    let mut h = vec![Complex64::new(0.0, 0.0); y.n_bins()];
    for k in used_bins_sorted(&y.roles) {
        let x = known[k];
        if x.norm_sqr() == 0.0 {
            return Err(Error::Degenerate(format!("known symbol is zero on used bin {k}")));
        }
        let sum: Complex64 = columns.clone().map(|m| y.values[[k, m]]).sum();
        h[k] = x.conj() * sum / (x.norm_sqr() * count);
    }
    Ok(h)
}

/// Remove a common phase per symbol, estimated as the angle of
/// Σ_p Y[p, m] · conj(E[p]) over pilot bins, where `expected` holds the
/// pilot values the receiver expects to see (known pilot × channel).
/// Returns the corrected grid and the removed phases.
pub fn pilot_phase_correct(y: &SymbolGrid, expected: &[Complex64]) -> Result<(SymbolGrid, Vec<f64>)> {
    if expected.len() != y.n_bins() {
        return Err(Error::DimensionMismatch(format!(
            "{} expected pilot values for {} bins",
            expected.len(),
            y.n_bins()
        )));
    }
    let pilots: Vec<usize> = (0..y.n_bins()).filter(|&k| y.roles[k] == BinRole::Pilot).collect();
    if pilots.is_empty() {
        return Err(Error::Degenerate("grid has no pilot subcarriers".into()));
    }
    if pilots.iter().all(|&p| expected[p].norm_sqr() == 0.0) {
        return Err(Error::Degenerate("all expected pilots are zero".into()));
    }
    let mut out = y.clone();
    let mut phases = Vec::with_capacity(y.n_symbols());
    for (m, mut col) in out.values.columns_mut().into_iter().enumerate() {
        let corr: Complex64 = pilots
            .iter()
            .map(|&p| y.values[[p, m]] * expected[p].conj())
            .sum();
        if corr.norm_sqr() == 0.0 {
            return Err(Error::Degenerate(format!("pilots of symbol {m} are all zero")));
        }
        let phase = corr.arg();
        let rot = Complex64::from_polar(1.0, -phase);
        col.iter_mut().for_each(|v| *v *= rot);
        phases.push(phase);
    }
    Ok((out, phases))
}

/// Zero-forcing equalized data cells, column by column (data columns only),
/// bins in ascending signed-index order.
pub fn equalize(y: &SymbolGrid, h: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = y.n_bins();
    let mut data_bins: Vec<usize> = (0..n).filter(|&k| y.roles[k] == BinRole::Data).collect();
    data_bins.sort_by_key(|&k| crate::waveform::signed_index(k, n));
    if let Some(&k) = data_bins.iter().find(|&&k| h[k].norm_sqr() == 0.0) {
        return Err(Error::Degenerate(format!("zero channel estimate on data bin {k}")));
    }
    let mut out = Vec::new();
    for m in (0..y.n_symbols()).filter(|&m| y.columns[m] == ColumnKind::Data) {
        out.extend(data_bins.iter().map(|&k| y.values[[k, m]] / h[k]));
    }
    Ok(out)
}

/// Zero-forcing equalization, minimum-distance demapping and Gray decoding.
pub fn equalize_demap(y: &SymbolGrid, h: &[Complex64], order: usize) -> Result<Vec<u8>> {
    let constellation = Constellation::new(order)?;
    Ok(constellation.demap(&equalize(y, h)?))
}

/// Fraction of positions where `bits` and `reference` differ.
pub fn ber(bits: &[u8], reference: &[u8]) -> Result<f64> {
    if bits.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bits vs {} reference bits",
            bits.len(),
            reference.len()
        )));
    }
    if bits.is_empty() {
        return Ok(0.0);
    }
    let errors = bits.iter().zip(reference).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / bits.len() as f64)
}

/// RMS error vector magnitude relative to the RMS reference magnitude.
pub fn evm(received: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if received.len() != reference.len() || received.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} received vs {} reference symbols",
            received.len(),
            reference.len()
        )));
    }
    let err: f64 = received.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    let refp: f64 = reference.iter().map(|b| b.norm_sqr()).sum();
    Ok((err / refp).sqrt())
}
