use num_complex::Complex64;
use pimsim::waveform::dump::{read_dump, sidecar_path, write_dump, DumpHeader};
use pimsim::waveform::*;
use proptest::prelude::*;

fn ofdm(n_symbols: usize, seed: u64) -> BasebandSignal {
    gen_ofdm(&OfdmConfig::five_mhz(n_symbols), seed).unwrap()
}

#[test]
fn ofdm_occupies_300_subcarriers() {
    let cfg = OfdmConfig::five_mhz(256);
    let sig = gen_ofdm(&cfg, 11).unwrap();
    assert!((sig.mean_power() - 1.0).abs() < 0.01);
    // 512-point bins are exactly one subcarrier wide at 7.68 MHz.
    let p = psd(&sig, 512).unwrap();
    assert!((p.bin_width_hz - 15e3).abs() < 1e-6);
    let mut inband: Vec<f64> = p.freqs_hz.iter().zip(&p.power).filter(|(f, _)| f.abs() < 2e6).map(|(_, v)| *v).collect();
    inband.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let half = inband[inband.len() / 2] / 2.0;
    let above: Vec<f64> = p.freqs_hz.iter().zip(&p.power).filter(|(_, v)| **v >= half).map(|(f, _)| *f).collect();
    let lo = above.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = above.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bw = hi - lo + p.bin_width_hz;
    assert!((bw - cfg.occupied_bandwidth()).abs() <= 2.0 * 15e3, "−3 dB width {bw}");
    assert!((cfg.occupied_bandwidth() - 4.5e6).abs() < 1e-6);
}

#[test]
fn ofdm_is_seeded() {
    assert_eq!(ofdm(8, 3), ofdm(8, 3));
    assert_ne!(ofdm(8, 3), ofdm(8, 4));
}

#[test]
fn composite_has_humps_at_the_carriers() {
    let plan = CarrierPlan::paper();
    let lo = ofdm(64, 1);
    let hi = ofdm(64, 2);
    let rf = compose_rf(&[vec![lo.clone()], vec![hi.clone()]], &plan).unwrap();
    let rf = &rf[0];
    assert_eq!(rf.sample_rate, 122.88e6);
    let total = lo.mean_power() + hi.mean_power();
    assert!((10.0 * (rf.mean_power() / total).log10()).abs() <= 0.05);
    let p = psd(rf, 512).unwrap();
    for &c in &plan.cc_offsets_hz {
        let band = p.band_power(c, 2.5e6 + p.bin_width_hz);
        assert!(band > 0.49 * p.total(), "carrier at {c}");
        let centroid: f64 = p
            .freqs_hz
            .iter()
            .zip(&p.power)
            .filter(|(f, _)| (**f - c).abs() <= 3e6)
            .map(|(f, v)| f * v)
            .sum::<f64>()
            / band;
        assert!((centroid - c).abs() <= p.bin_width_hz, "centroid {centroid} for {c}");
    }
    assert!((plan.cc_offsets_hz[0].abs() - 23.75e6).abs() < 1e-3);
}

#[test]
fn silent_carrier_leaves_the_other_shifted() {
    let plan = CarrierPlan::paper();
    let lo = ofdm(16, 1);
    let zero = BasebandSignal::zeros(lo.len(), lo.sample_rate, 0.0);
    let both = compose_rf(&[vec![lo.clone()], vec![zero]], &plan).unwrap();
    let mut alone = upsample(&lo.samples, plan.oversample_factor, plan.base_rate_hz, plan.cc_bandwidths_hz[0]);
    freq_shift(&mut alone, plan.cc_offsets_hz[0], plan.rf_rate());
    let err: f64 = both[0].samples.iter().zip(&alone).map(|(a, b)| (a - b).norm_sqr()).sum();
    assert!(err <= 1e-20 * alone.iter().map(|v| v.norm_sqr()).sum::<f64>());
}

#[test]
fn extraction_recovers_each_carrier() {
    let plan = CarrierPlan::paper();
    let ccs = [ofdm(64, 5), ofdm(64, 6)];
    let rf = compose_rf(&[vec![ccs[0].clone()], vec![ccs[1].clone()]], &plan).unwrap();
    for (c, cc) in ccs.iter().enumerate() {
        let back = extract_band(&rf[0], plan.cc_offsets_hz[c], plan.cc_bandwidths_hz[c], plan.base_rate_hz).unwrap();
        assert_eq!(back.len(), cc.len());
        assert!(correlation(&back.samples, &cc.samples) >= 0.99);
        let resid: Vec<Complex64> = back.samples.iter().zip(&cc.samples).map(|(a, b)| a - b).collect();
        assert!(mean_power(&resid) <= 0.01 * cc.mean_power());
    }
    // Between the carriers there is nothing.
    let gap = extract_band(&rf[0], 0.0, 5e6, plan.base_rate_hz).unwrap();
    assert!(gap.mean_power() <= 1e-6 * rf[0].mean_power());
}

#[test]
fn noise_is_white() {
    let n = 1 << 17;
    let sig = awgn_seeded(n, 2.0, 122.88e6, 9, 0).unwrap();
    assert!((sig.mean_power() - 2.0).abs() <= 0.06);
    let mean: Complex64 = sig.samples.iter().sum::<Complex64>() / n as f64;
    assert!(mean.norm() < 4.0 * (2.0 / n as f64).sqrt());
    let p = psd(&sig, 1024).unwrap();
    let max = p.power.iter().cloned().fold(0.0, f64::max);
    let min = p.power.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(10.0 * (max / min).log10() < 3.0);
    assert_eq!(sig, awgn_seeded(n, 2.0, 122.88e6, 9, 0).unwrap());
}

#[test]
fn dump_round_trips_bit_exact() {
    let mut sig = ofdm(4, 8);
    sig.center_offset = -71.25e6;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.iq");
    write_dump(&path, &sig).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 * sig.len() as u64);
    let header: DumpHeader = serde_json::from_slice(&std::fs::read(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(header.length, sig.len());
    assert_eq!(header.center_offset, -71.25e6);
    let back = read_dump(&path).unwrap();
    assert_eq!(back, sig);
}

#[test]
fn mixing_mismatched_signals_fails() {
    let mut a = BasebandSignal::zeros(8, 1.0, 0.0);
    assert!(a.add_assign(&BasebandSignal::zeros(8, 2.0, 0.0)).is_err());
    assert!(a.add_assign(&BasebandSignal::zeros(8, 1.0, 5.0)).is_err());
    assert!(a.add_assign(&BasebandSignal::zeros(4, 1.0, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn psd_sums_to_mean_power(seed in 0u64..1000, log_n in 4u32..8) {
        let sig = awgn_seeded(4096, 1.5, 1.0, seed, 0).unwrap();
        let p = psd(&sig, 1 << log_n).unwrap();
        prop_assert!((p.total() / sig.mean_power() - 1.0).abs() < 0.01);
    }

    #[test]
    fn dft_beams_are_orthonormal(n in 1usize..32, a in 0usize..32, b in 0usize..32) {
        let (a, b) = (a % n, b % n);
        let u = dft_beam(n, a);
        let v = dft_beam(n, b);
        let ip: Complex64 = u.iter().zip(&v).map(|(x, y)| x * y.conj()).sum();
        let want = if a == b { 1.0 } else { 0.0 };
        prop_assert!((ip - Complex64::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn full_band_extraction_is_identity(seed in 0u64..100) {
        let sig = awgn_seeded(256, 1.0, 8.0, seed, 1).unwrap();
        let back = extract_band(&sig, 0.0, 8.0, 8.0).unwrap();
        for (a, b) in back.samples.iter().zip(&sig.samples) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }
}
