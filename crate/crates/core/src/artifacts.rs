//! Artifact files: spectrogram CSV/PGM, CFR series CSV and binary matrices,
//! scatterer track CSV and raw IQ dumps.
//!
//! Numeric text is written with `{:.9e}` so that equal inputs give
//! byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::channel::ScattererTrack;
use crate::receiver::CfrSeries;
use crate::scenario::WindowKind;
use crate::spectral::{Spectrogram, StftParams};
use crate::waveform::{signed_index, BasebandSignal};
use crate::{Error, Result};

/// Magic bytes opening every binary matrix file.
pub const MATRIX_MAGIC: &[u8; 8] = b"DCMATRX1";

/// Dynamic range of the PGM rendering, dB below the peak.
pub const PGM_FLOOR_DB: f64 = -60.0;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

macro_rules! put {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        write!($w, $($arg)*).map_err(|e| Error::io($path, e))?
    };
}

fn window_name(w: WindowKind) -> &'static str {
    match w {
        WindowKind::Hann => "hann",
        WindowKind::Hamming => "hamming",
        WindowKind::Blackman => "blackman",
        WindowKind::Rectangular => "rectangular",
    }
}

fn window_from_name(s: &str) -> Option<WindowKind> {
    Some(match s {
        "hann" => WindowKind::Hann,
        "hamming" => WindowKind::Hamming,
        "blackman" => WindowKind::Blackman,
        "rectangular" => WindowKind::Rectangular,
        _ => return None,
    })
}

/// Spectrogram as a CSV matrix:
///
/// ```text
/// # spectrogram rate_hz=<f> window_len=<n> hop=<n> n_fft=<n> window=<name>
/// time_s,<t_0>,<t_1>,...
/// <f_0>,<p_00>,<p_01>,...
/// ```
///
/// Rows run from the most negative frequency up.
pub fn write_spectrogram_csv(path: &Path, s: &Spectrogram) -> Result<()> {
    let mut w = create(path)?;
    let p = &s.params;
    put!(
        w,
        path,
        "# spectrogram rate_hz={:.9e} window_len={} hop={} n_fft={} window={}\n",
        s.rate_hz,
        p.window_len,
        p.hop,
        p.n_fft,
        window_name(p.window)
    );
    put!(w, path, "time_s");
    for t in &s.times_s {
        put!(w, path, ",{t:.9e}");
    }
    put!(w, path, "\n");
    for (f, row) in s.freqs_hz.iter().zip(s.power.rows()) {
        put!(w, path, "{f:.9e}");
        for v in row {
            put!(w, path, ",{v:.9e}");
        }
        put!(w, path, "\n");
    }
    finish(w, path)
}

fn parse_err(path: &Path, what: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {what}", path.display()))
}

pub fn read_spectrogram_csv(path: &Path) -> Result<Spectrogram> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next = || -> Result<Option<String>> { lines.next().transpose().map_err(|e| Error::io(path, e)) };

    let header = next()?.ok_or_else(|| parse_err(path, "empty file"))?;
    let fields: std::collections::HashMap<&str, &str> = header
        .strip_prefix("# spectrogram")
        .ok_or_else(|| parse_err(path, "missing spectrogram header"))?
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect();
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| parse_err(path, format!("header lacks {k}")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| parse_err(path, format!("bad {k}"))) };
    let rate_hz: f64 = get("rate_hz")?.parse().map_err(|_| parse_err(path, "bad rate_hz"))?;
    let params = StftParams {
        window_len: num("window_len")?,
        hop: num("hop")?,
        n_fft: num("n_fft")?,
        window: window_from_name(get("window")?).ok_or_else(|| parse_err(path, "unknown window"))?,
    };

    let floats = |line: &str| -> Result<Vec<f64>> {
        line.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse_err(path, format!("bad number `{v}`"))))
            .collect()
    };
    let times_line = next()?.ok_or_else(|| parse_err(path, "missing time row"))?;
    let times_s = floats(
        times_line
            .strip_prefix("time_s,")
            .ok_or_else(|| parse_err(path, "second row must start with time_s"))?,
    )?;
    let mut freqs_hz = Vec::new();
    let mut values = Vec::new();
    while let Some(line) = next()? {
        if line.is_empty() {
            continue;
        }
        let row = floats(&line)?;
        if row.len() != times_s.len() + 1 {
            return Err(parse_err(path, "ragged row"));
        }
        freqs_hz.push(row[0]);
        values.extend_from_slice(&row[1..]);
    }
    let power = Array2::from_shape_vec((freqs_hz.len(), times_s.len()), values)
        .map_err(|e| parse_err(path, e))?;
    Ok(Spectrogram {
        power,
        freqs_hz,
        times_s,
        rate_hz,
        params,
    })
}

/// 8-bit greyscale quick-look: binary PGM (P5), one column per frame, row 0
/// the highest frequency, grey level linear in dB from the floor (0) to the
/// peak (255).
pub fn spectrogram_pgm_bytes(s: &Spectrogram) -> Vec<u8> {
    let (rows, cols) = s.power.dim();
    let peak = s.power.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for r in (0..rows).rev() {
        for c in 0..cols {
            let v = s.power[[r, c]];
            let level = if peak > 0.0 && v > 0.0 {
                let db = (10.0 * (v / peak).log10()).max(PGM_FLOOR_DB);
                (255.0 * (db - PGM_FLOOR_DB) / -PGM_FLOOR_DB).round() as u8
            } else {
                0
            };
            out.push(level);
        }
    }
    out
}

pub fn write_spectrogram_pgm(path: &Path, s: &Spectrogram) -> Result<()> {
    std::fs::write(path, spectrogram_pgm_bytes(s)).map_err(|e| Error::io(path, e))
}

/// Row-major `f32` matrix with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Binary layout, all little-endian: the 8 magic bytes `DCMATRX1`, then u32
/// rows, u32 cols, u32 channels, u32 dtype (0 = f32), then
/// rows·cols·channels f32 values, row-major with channels innermost.
pub fn write_matrix_bin(path: &Path, m: &MatrixFile) -> Result<()> {
    if m.data.len() != m.rows * m.cols * m.channels {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {}×{}×{} matrix",
            m.data.len(),
            m.rows,
            m.cols,
            m.channels
        )));
    }
    let mut w = create(path)?;
    let dim = |x: usize| -> Result<[u8; 4]> {
        u32::try_from(x)
            .map(u32::to_le_bytes)
            .map_err(|_| Error::InvalidArgument(format!("dimension {x} exceeds u32")))
    };
    let mut bytes = Vec::with_capacity(24 + 4 * m.data.len());
    bytes.extend_from_slice(MATRIX_MAGIC);
    for d in [m.rows, m.cols, m.channels, 0] {
        bytes.extend_from_slice(&dim(d)?);
    }
    for v in &m.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

pub fn read_matrix_bin(path: &Path) -> Result<MatrixFile> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 24 || &bytes[..8] != MATRIX_MAGIC {
        return Err(parse_err(path, "not a DCMATRX1 file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (rows, cols, channels, dtype) = (word(0), word(1), word(2), word(3));
    if dtype != 0 {
        return Err(parse_err(path, format!("unsupported dtype {dtype}")));
    }
    let count = rows * cols * channels;
    if bytes.len() != 24 + 4 * count {
        return Err(parse_err(path, "payload length does not match header"));
    }
    let data = bytes[24..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(MatrixFile {
        rows,
        cols,
        channels,
        data,
    })
}

/// Spectrogram power as a one-channel matrix (frequency rows, frame columns).
pub fn spectrogram_matrix(s: &Spectrogram) -> MatrixFile {
    MatrixFile {
        rows: s.n_freqs(),
        cols: s.n_frames(),
        channels: 1,
        data: s.power.iter().map(|&v| v as f32).collect(),
    }
}

/// CFR series as a three-channel matrix (re, im, power): one row per used
/// subcarrier in ascending signed index, one column per retained symbol.
pub fn cfr_matrix(c: &CfrSeries) -> MatrixFile {
    let mut data = Vec::with_capacity(c.used_bins.len() * c.n_times() * 3);
    for &k in &c.used_bins {
        for m in 0..c.n_times() {
            let h = c.h_hat[[k, m]];
            data.extend_from_slice(&[h.re as f32, h.im as f32, c.power[[k, m]] as f32]);
        }
    }
    MatrixFile {
        rows: c.used_bins.len(),
        cols: c.n_times(),
        channels: 3,
        data,
    }
}

/// CSV with header `t,k,re,im,power`, time-major, `k` the signed subcarrier.
pub fn write_cfr_csv(path: &Path, c: &CfrSeries) -> Result<()> {
    let mut w = create(path)?;
    let n = c.n_bins();
    put!(w, path, "t,k,re,im,power\n");
    for (m, t) in c.times.iter().enumerate() {
        for &k in &c.used_bins {
            let h = c.h_hat[[k, m]];
            put!(
                w,
                path,
                "{t:.9e},{},{:.9e},{:.9e},{:.9e}\n",
                signed_index(k, n),
                h.re,
                h.im,
                c.power[[k, m]]
            );
        }
    }
    finish(w, path)
}

/// CSV with header `t,label,path_length_m`, one row per track sample.
pub fn write_tracks_csv(path: &Path, tracks: &[ScattererTrack]) -> Result<()> {
    let mut w = create(path)?;
    put!(w, path, "t,label,path_length_m\n");
    for track in tracks {
        for (t, r) in track.times().zip(&track.path_length_m) {
            put!(w, path, "{t:.9e},{},{r:.9e}\n", track.label);
        }
    }
    finish(w, path)
}

/// Interleaved little-endian f32 I/Q of every segment back to back, plus a
/// `<path>.txt` sidecar describing the sample rate and segment start times.
pub fn write_iq(path: &Path, segments: &[BasebandSignal]) -> Result<()> {
    let mut w = create(path)?;
    let mut bytes = Vec::new();
    for seg in segments {
        for s in &seg.samples {
            bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
    }
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    finish(w, path)?;

    let sidecar = path.with_extension("txt");
    let mut w = create(&sidecar)?;
    put!(w, &sidecar, "format = cf32_le\n");
    put!(
        w,
        &sidecar,
        "sample_rate_hz = {:.9e}\n",
        segments.first().map_or(0.0, |s| s.sample_rate_hz)
    );
    put!(w, &sidecar, "segments = {}\n", segments.len());
    put!(
        w,
        &sidecar,
        "samples_per_segment = {}\n",
        segments.first().map_or(0, |s| s.len())
    );
    put!(w, &sidecar, "# segment start times, s\n");
    for seg in segments {
        put!(w, &sidecar, "{:.9e}\n", seg.t0);
    }
    finish(w, &sidecar)
}
