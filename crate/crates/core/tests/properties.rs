//! Property tests across module boundaries.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use doppler_cloak::channel::{cfr, propagate_symbols, ChannelRealization, ScattererTrack};
use doppler_cloak::obfuscator::{apply_smearing, apply_spoofing, SmearParams, SpoofParams};
use doppler_cloak::receiver::{estimate_cfr, ofdm_demodulate};
use doppler_cloak::report::{MetricValue, RunReport};
use doppler_cloak::scenario::ScenarioConfig;
use doppler_cloak::waveform::{build_preamble_grid, ofdm_modulate, signed_index, BasebandSignal, SubcarrierLayout};
use doppler_cloak::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_signal(seed: u64, n: usize) -> BasebandSignal {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    BasebandSignal {
        samples: (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect(),
        sample_rate_hz: 20e6,
        t0: rng.gen::<f64>(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smearing_is_unit_modulus(seed in any::<u64>(), df in 0.0f64..2000.0, fm in 0.1f64..100.0) {
        let x = random_signal(seed, 2000);
        let y = apply_smearing(&x, &SmearParams::new(df, fm).unwrap()).unwrap();
        for (a, b) in x.samples.iter().zip(&y.samples) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm().max(1e-300));
        }
        prop_assert_eq!(y.t0, x.t0);
    }

    #[test]
    fn spoofing_is_unit_modulus_and_invertible(v in -50.0f64..50.0, t0 in 0.0f64..10.0) {
        let cfg = ScenarioConfig::default();
        let grid = build_preamble_grid(&cfg).unwrap();
        let times: Vec<f64> = grid.symbol_midpoints(cfg.cp_len).iter().map(|t| t + t0).collect();
        let p = SpoofParams::carrier_referenced(v, cfg.carrier_hz);
        let q = SpoofParams::carrier_referenced(-v, cfg.carrier_hz);
        let s = apply_spoofing(&grid, &times, cfg.subcarrier_spacing_hz, &p).unwrap();
        let back = apply_spoofing(&s, &times, cfg.subcarrier_spacing_hz, &q).unwrap();
        for ((a, b), c) in grid.values.iter().zip(s.values.iter()).zip(back.values.iter()) {
            prop_assert!((a.norm() - b.norm()).abs() < 1e-12);
            prop_assert!((a - c).norm() < 1e-9);
        }
    }

    #[test]
    fn estimated_cfr_matches_static_channel(
        range in 200.0f64..260.0,
        extra in 0.0f64..30.0,
        g in 0.05f64..1.0,
        phase in 0.0f64..(2.0 * PI),
    ) {
        let cfg = ScenarioConfig::default();
        let layout = SubcarrierLayout::from_config(&cfg).unwrap();
        let known = build_preamble_grid(&cfg).unwrap();
        let x = ofdm_modulate(&known, cfg.cp_len);
        let tracks = vec![
            ScattererTrack::fixed("a", range, Complex64::new(1.0, 0.0), 1.0),
            ScattererTrack::fixed("b", range + extra, Complex64::from_polar(g, phase), 1.0),
        ];
        let chan = ChannelRealization::new(tracks, cfg.carrier_hz)
            .unwrap()
            .with_timing_offset(range / doppler_cloak::SPEED_OF_LIGHT);
        let modem = doppler_cloak::waveform::OfdmModem::new(64, cfg.cp_len);
        let y = propagate_symbols(&[x], &chan, &modem).unwrap();
        let mut yg = ofdm_demodulate(&y[0], &layout, cfg.cp_len).unwrap();
        yg.columns = known.columns.clone();
        let est = estimate_cfr(&yg, &known, 1).unwrap();
        for (i, &t) in est.times.iter().enumerate() {
            for &k in &est.used_bins {
                let f = signed_index(k, 64) as f64 * cfg.subcarrier_spacing_hz;
                // The receiver is synchronised to the timing offset.
                let h = cfr(&chan, f, t).unwrap() * Complex64::from_polar(1.0, 2.0 * PI * f * chan.timing_offset_s);
                prop_assert!((est.h_hat[[k, i]] - h).norm() < 1e-9 * h.norm().max(1.0));
            }
        }
    }

    #[test]
    fn report_text_roundtrips(values in prop::collection::vec(-1e6f64..1e6, 1..8), wall in 0.0f64..100.0) {
        let mut metrics = BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            metrics.insert(format!("m{i}"), MetricValue::Value(*v));
        }
        metrics.insert("skip".into(), MetricValue::Skipped("no baseline".into()));
        let r = RunReport {
            scenario: BTreeMap::from([("scenario.seed".to_string(), "5".to_string())]),
            metrics,
            artifacts: BTreeMap::from([("report".to_string(), "report.txt".to_string())]),
            wall_time_s: wall,
        };
        prop_assert_eq!(RunReport::parse(&r.to_text()).unwrap(), r);
    }
}
