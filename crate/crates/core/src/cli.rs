//! Command-line front end: `run`, `compare` and `sweep`.
//!
//! Exit codes: 0 success, 2 usage error, 3 scenario/config error,
//! 4 runtime or I/O error, 5 comparison threshold violated.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::artifacts::{
    cfr_matrix, read_spectrogram_csv, spectrogram_matrix, write_cfr_csv, write_iq, write_matrix_bin,
    write_spectrogram_csv, write_spectrogram_pgm, write_tracks_csv,
};
use crate::report::{compare, compute_metrics, scenario_echo, Baseline, RunReport, Threshold};
use crate::scenario::{load_scenario_file, Obfuscation, ScenarioConfig};
use crate::simulation::run_simulation;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;
pub const EXIT_THRESHOLD: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "doppler-cloak", version, about = "OFDM micro-Doppler sensing simulator with transmitter-side defenses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its artifacts and report.
    Run(RunArgs),
    /// Compare two run reports metric by metric.
    Compare(CompareArgs),
    /// Run a grid of defense settings, one output directory per point.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArtifactFormat {
    Csv,
    Bin,
    Pgm,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Report of an earlier run whose spectrograms serve as the correlation
    /// baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Artifact formats to write; may be repeated. Defaults to csv and pgm.
    #[arg(long, value_enum)]
    pub format: Vec<ArtifactFormat>,
    /// Also write the sensing receiver's IQ samples.
    #[arg(long)]
    pub dump_iq: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Fail when |B − A| of KEY exceeds VALUE.
    #[arg(long = "max-delta", value_name = "KEY=VALUE")]
    pub max_delta: Vec<String>,
    /// Fail when KEY in report B exceeds VALUE.
    #[arg(long = "max-value", value_name = "KEY=VALUE")]
    pub max_value: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Peak deviations for smearing points, Hz.
    #[arg(long = "delta-f", value_delimiter = ',')]
    pub delta_f: Vec<f64>,
    /// Modulation rates for smearing points, Hz; defaults to 10.
    #[arg(long = "f-m", value_delimiter = ',')]
    pub f_m: Vec<f64>,
    /// Spoofing speeds, m/s.
    #[arg(long = "v-sp", value_delimiter = ',')]
    pub v_sp: Vec<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Vec<ArtifactFormat>,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn formats_or_default(formats: &[ArtifactFormat]) -> Vec<ArtifactFormat> {
    if formats.is_empty() {
        vec![ArtifactFormat::Csv, ArtifactFormat::Pgm]
    } else {
        formats.to_vec()
    }
}

fn load_baseline(report_path: &Path) -> Result<Baseline> {
    let report = RunReport::read(report_path)?;
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let get = |key: &str| -> Result<PathBuf> {
        let rel = report.artifacts.get(key).ok_or_else(|| {
            Error::Report(format!(
                "baseline report {} has no {key} artifact (run it with csv output)",
                report_path.display()
            ))
        })?;
        Ok(dir.join(rel))
    };
    Ok(Baseline {
        method1: read_spectrogram_csv(&get("method1_spectrogram_csv")?)?,
        method2: read_spectrogram_csv(&get("method2_spectrogram_csv")?)?,
        source: report_path.display().to_string(),
    })
}

/// Simulate `cfg`, write artifacts into `out` and return the report, which
/// is also written to `out/report.txt`. Artifact paths in the report are
/// relative to `out`.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out: &Path,
    baseline: Option<&Baseline>,
    formats: &[ArtifactFormat],
    dump_iq: bool,
) -> Result<RunReport> {
    let start = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let sim = run_simulation(cfg)?;
    let mut report = RunReport {
        scenario: scenario_echo(cfg)?,
        metrics: compute_metrics(&sim, baseline),
        ..Default::default()
    };
    if let Some(b) = baseline {
        report.artifacts.insert("baseline".into(), b.source.clone());
    }

    let mut artifact = |name: &str, file: &str| -> PathBuf {
        report.artifacts.insert(name.into(), file.into());
        out.join(file)
    };
    let formats = formats_or_default(formats);
    let views = [("method1", &sim.sensing.method1), ("method2", &sim.sensing.method2)];
    if formats.contains(&ArtifactFormat::Csv) {
        for (name, s) in views {
            write_spectrogram_csv(&artifact(&format!("{name}_spectrogram_csv"), &format!("{name}_spectrogram.csv")), s)?;
        }
        write_cfr_csv(&artifact("cfr_csv", "cfr.csv"), &sim.sensing.cfr)?;
    }
    if formats.contains(&ArtifactFormat::Pgm) {
        for (name, s) in views {
            write_spectrogram_pgm(&artifact(&format!("{name}_spectrogram_pgm"), &format!("{name}_spectrogram.pgm")), s)?;
        }
    }
    if formats.contains(&ArtifactFormat::Bin) {
        for (name, s) in views {
            write_matrix_bin(
                &artifact(&format!("{name}_spectrogram_bin"), &format!("{name}_spectrogram.bin")),
                &spectrogram_matrix(s),
            )?;
        }
        write_matrix_bin(&artifact("cfr_bin", "cfr.bin"), &cfr_matrix(&sim.sensing.cfr))?;
    }
    write_tracks_csv(&artifact("tracks_csv", "tracks.csv"), &sim.channel.tracks)?;
    if dump_iq {
        write_iq(&artifact("rx_iq", "rx.cf32"), &sim.sensing.rx)?;
        report.artifacts.insert("rx_iq_header".into(), "rx.txt".into());
    }
    report.artifacts.insert("report".into(), "report.txt".into());
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.write(&out.join("report.txt"))?;
    Ok(report)
}

pub fn cmd_run(args: &RunArgs) -> Result<RunReport> {
    configure_threads(args.threads)?;
    let cfg = load_scenario_file(&args.scenario)?;
    let baseline = args.baseline.as_deref().map(load_baseline).transpose()?;
    run_scenario(&cfg, &args.out, baseline.as_ref(), &args.format, args.dump_iq)
}

/// Returns the rendered table and whether every threshold held.
pub fn cmd_compare(args: &CompareArgs) -> Result<(String, bool)> {
    let a = RunReport::read(&args.a)?;
    let b = RunReport::read(&args.b)?;
    let mut thresholds = Vec::new();
    for s in &args.max_delta {
        let (k, v) = Threshold::parse_pair(s)?;
        thresholds.push(Threshold::MaxDelta(k, v));
    }
    for s in &args.max_value {
        let (k, v) = Threshold::parse_pair(s)?;
        thresholds.push(Threshold::MaxValue(k, v));
    }
    let c = compare(&a, &b, &thresholds)?;
    Ok((c.to_table(), c.violations.is_empty()))
}

/// One sweep point: directory name and defense.
pub fn sweep_points(args: &SweepArgs) -> Vec<(String, Obfuscation)> {
    let f_ms = if args.f_m.is_empty() { vec![10.0] } else { args.f_m.clone() };
    let mut points = Vec::new();
    for &df in &args.delta_f {
        for &fm in &f_ms {
            points.push((format!("smear_df{df}_fm{fm}"), Obfuscation::Smear { delta_f_hz: df, f_m_hz: fm }));
        }
    }
    for &v in &args.v_sp {
        points.push((
            format!("spoof_vsp{v}"),
            Obfuscation::Spoof {
                v_sp_mps: v,
                carrier_referenced: true,
            },
        ));
    }
    points
}

/// Run every sweep point concurrently and write `sweep.txt` listing the
/// points and their report paths.
pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<(String, RunReport)>> {
    configure_threads(args.threads)?;
    let base = load_scenario_file(&args.scenario)?;
    let points = sweep_points(args);
    if points.is_empty() {
        return Err(Error::Validation("sweep needs at least one --delta-f or --v-sp value".into()));
    }
    let reports: Vec<(String, RunReport)> = points
        .par_iter()
        .map(|(name, obf)| {
            let mut cfg = base.clone();
            cfg.obfuscation = obf.clone();
            cfg.validate()?;
            let report = run_scenario(&cfg, &args.out.join(name), None, &args.format, false)?;
            Ok((name.clone(), report))
        })
        .collect::<Result<_>>()?;
    let mut index = String::from("# point report\n");
    for (name, _) in &reports {
        index.push_str(&format!("{name} {name}/report.txt\n"));
    }
    let path = args.out.join("sweep.txt");
    std::fs::write(&path, index).map_err(|e| Error::io(&path, e))?;
    Ok(reports)
}

/// Parse arguments, dispatch and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let fail = |e: Error| {
        eprintln!("error: {e}");
        exit_code(&e)
    };
    match &cli.command {
        Command::Run(a) => match cmd_run(a) {
            Ok(r) => {
                print!("{}", r.to_text());
                EXIT_OK
            }
            Err(e) => fail(e),
        },
        Command::Compare(a) => match cmd_compare(a) {
            Ok((table, ok)) => {
                print!("{table}");
                if ok {
                    EXIT_OK
                } else {
                    EXIT_THRESHOLD
                }
            }
            Err(e) => fail(e),
        },
        Command::Sweep(a) => match cmd_sweep(a) {
            Ok(reports) => {
                for (name, r) in &reports {
                    let show = |k: &str| r.metrics.get(k).map_or("missing".to_string(), |v| v.to_string());
                    println!(
                        "{name}: correlation_method1={} correlation_method2={} ber={}",
                        show("correlation_method1"),
                        show("correlation_method2"),
                        show("ber")
                    );
                }
                EXIT_OK
            }
            Err(e) => fail(e),
        },
    }
}
