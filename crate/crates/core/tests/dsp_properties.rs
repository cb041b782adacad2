use num_complex::Complex64;
use pddf::circular::{angular_distance, circular_std, wrap_degrees};
use pddf::dsp::{fft_phase_at_bin, run_chain, ChainConfig, DEFAULT_TUNING_OFFSET_HZ};
use pddf::sim::{simulate_capture, ChannelSpec, EmitterSpec};
use pddf::{ArrayGeometry, RadioConfig};
use proptest::prelude::*;

const SETTLE: usize = 4;

fn setup() -> (RadioConfig, ArrayGeometry, ChainConfig) {
    let radio = RadioConfig::default();
    let g = ArrayGeometry::square(0.44).unwrap();
    let chain = ChainConfig::calibrated(radio.clone(), &g, DEFAULT_TUNING_OFFSET_HZ).unwrap();
    (radio, g, chain)
}

fn frames(radio: &RadioConfig, n: usize) -> f64 {
    n as f64 / radio.measurement_rate_hz()
}

fn bearings(g: &ArrayGeometry, bearing: f64, channel: &ChannelSpec, n_frames: usize) -> Vec<f64> {
    let (radio, _, chain) = setup();
    let e = EmitterSpec::continuous(bearing, DEFAULT_TUNING_OFFSET_HZ);
    let cap = simulate_capture(&radio, g, &e, channel, 0.0, frames(&radio, n_frames)).unwrap();
    run_chain(&cap, &chain).unwrap()[SETTLE..].iter().map(|b| b.angle_deg()).collect()
}

fn direct_dft_phase(frame: &[Complex64], bin: usize) -> f64 {
    let n = frame.len() as f64;
    let sum: Complex64 = frame
        .iter()
        .enumerate()
        .map(|(i, x)| x * Complex64::from_polar(1.0, -std::f64::consts::TAU * bin as f64 * i as f64 / n))
        .sum();
    sum.arg()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noiseless_bearing_recovered_anywhere(bearing in 0.0f64..360.0) {
        let (_, g, _) = setup();
        for b in bearings(&g, bearing, &ChannelSpec::noiseless(), 6) {
            prop_assert!(angular_distance(b, bearing) <= 1.0, "{bearing} -> {b}");
        }
    }

    #[test]
    fn relabeling_rotates_reading_by_quarter_turns(bearing in 0.0f64..360.0, shift in 1usize..4) {
        let (_, g, _) = setup();
        let base = bearings(&g, bearing, &ChannelSpec::noiseless(), 6);
        let moved = bearings(&g.relabeled(shift), bearing, &ChannelSpec::noiseless(), 6);
        for (a, b) in base.iter().zip(&moved) {
            let expected = wrap_degrees(a - 90.0 * shift as f64);
            // both readings carry the chain's bearing-dependent ripple
            prop_assert!(angular_distance(*b, expected) < 0.75, "{a} shift {shift} -> {b}");
        }
    }

    #[test]
    fn one_bearing_per_fft_frame(n_frames in 1usize..12, extra_cycles in 0u64..500) {
        let (radio, g, chain) = setup();
        let per_frame = radio.fft_length as u64 * radio.decimation as u64;
        let len = n_frames as u64 * per_frame + extra_cycles * radio.samples_per_rotation();
        let step = radio.samples_per_rotation() * radio.decimation as u64;
        let len = len - len % step;
        let dur = len as f64 / radio.sample_rate_hz as f64;
        let cap = simulate_capture(&radio, &g, &EmitterSpec::continuous(10.0, DEFAULT_TUNING_OFFSET_HZ), &ChannelSpec::noiseless(), 0.0, dur).unwrap();
        let out = run_chain(&cap, &chain).unwrap();
        prop_assert_eq!(out.len() as u64, len / per_frame);
        for w in out.windows(2) {
            prop_assert!(w[1].timestamp_us > w[0].timestamp_us);
        }
    }

    #[test]
    fn fft_phase_matches_direct_sum(seed in any::<u64>(), bin in 0usize..64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let frame: Vec<Complex64> = (0..64).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let fast = fft_phase_at_bin(&frame, bin).unwrap();
        let slow = direct_dft_phase(&frame, bin);
        let d = (fast - slow).rem_euclid(std::f64::consts::TAU);
        prop_assert!(d.min(std::f64::consts::TAU - d) < 1e-9);
    }
}

#[test]
fn spread_grows_as_snr_falls() {
    let (_, g, _) = setup();
    let spreads: Vec<f64> = [30.0, 20.0, 10.0, 0.0]
        .iter()
        .map(|&snr| circular_std(&bearings(&g, 137.0, &ChannelSpec::with_snr(snr, 5), 60)))
        .collect();
    for w in spreads.windows(2) {
        assert!(w[1] > w[0], "{spreads:?}");
    }
}

#[test]
fn emitter_on_scores_high_confidence() {
    let (radio, g, chain) = setup();
    let e = EmitterSpec::continuous(200.0, DEFAULT_TUNING_OFFSET_HZ);
    let cap = simulate_capture(&radio, &g, &e, &ChannelSpec::with_snr(20.0, 8), 0.0, 0.5).unwrap();
    let out = run_chain(&cap, &chain).unwrap();
    let mut c: Vec<f64> = out[SETTLE..].iter().map(|b| b.confidence()).collect();
    c.sort_by(f64::total_cmp);
    assert!(c[c.len() / 2] > 0.9, "{c:?}");
}

#[test]
fn default_radio_measures_at_330_hz() {
    let (radio, g, chain) = setup();
    let cap = simulate_capture(&radio, &g, &EmitterSpec::continuous(0.0, DEFAULT_TUNING_OFFSET_HZ), &ChannelSpec::noiseless(), 0.0, 1.0).unwrap();
    assert_eq!(run_chain(&cap, &chain).unwrap().len(), 330);
}

#[test]
fn silent_emitter_gives_scattered_low_confidence_bearings() {
    let (radio, g, chain) = setup();
    let mut e = EmitterSpec::continuous(0.0, DEFAULT_TUNING_OFFSET_HZ);
    e.active_intervals.clear();
    let cap = simulate_capture(&radio, &g, &e, &ChannelSpec::with_snr(20.0, 3), 0.0, 1.0).unwrap();
    let out = &run_chain(&cap, &chain).unwrap()[SETTLE..];
    let worst = out.iter().map(|b| b.confidence()).fold(0.0, f64::max);
    assert!(worst <= 0.3, "{worst}");
    // spread over the circle: every quadrant is hit and no tight cluster forms
    let mut quadrants = [0usize; 4];
    for b in out {
        quadrants[(b.angle_deg() / 90.0) as usize % 4] += 1;
    }
    assert!(quadrants.iter().all(|&q| q > out.len() / 10), "{quadrants:?}");
}
