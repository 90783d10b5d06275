use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use uwa_adapt::bandit::{Modulation, PowerLevel};
use uwa_adapt::channel::{
    ber, bitrate, evolve_shadowing, frame_success, mean_snr, noise_psd, q_function,
    thorp_absorption, transmission_loss, ChannelParams, LinkBudget, LinkState, PowerMap,
};

fn lossy() -> ChannelParams {
    ChannelParams::default()
}

// Frozen from a direct evaluation of the link budget with default
// parameters: SL 170.8 dB + 10 log10(P), spreading 1.75, wind 50 km/h,
// shipping 0.5, 4200 Hz band.
#[test]
fn snr_at_357_m_is_frozen() {
    let link = LinkState::new(357.0);
    let p = lossy();
    let pmap = PowerMap::default();
    let golden = [
        (PowerLevel::Low, 32.5560),
        (PowerLevel::Medium, 37.3272),
        (PowerLevel::High, 41.5869),
    ];
    for (power, want) in golden {
        let got = mean_snr(&link, power, &p, &pmap).unwrap();
        assert!((got - want).abs() < 1e-3, "{power:?}: {got}");
    }
}

#[test]
fn link_budget_matches_mean_snr_bit_for_bit() {
    let p = lossy();
    let pmap = PowerMap::default();
    let budget = LinkBudget::new(&p, &pmap).unwrap();
    for d in [10.0, 120.0, 357.0, 2000.0] {
        for shadow in [-4.0, 0.0, 3.3] {
            let link = LinkState {
                distance_m: d,
                shadow_db: shadow,
            };
            for power in PowerLevel::ALL {
                assert_eq!(
                    budget.snr_db(&link, power),
                    mean_snr(&link, power, &p, &pmap).unwrap()
                );
            }
        }
    }
}

#[test]
fn shadowing_keeps_its_stationary_law() {
    let p = lossy();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut link = LinkState::new(357.0);
    let n = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let draw: f64 = StandardNormal.sample(&mut rng);
        link = evolve_shadowing(&link, &p, draw);
        sum += link.shadow_db;
        sq += link.shadow_db * link.shadow_db;
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    let sigma2 = p.shadowing_sigma_db * p.shadowing_sigma_db;
    // correlated samples: allow for the reduced effective sample size
    assert!(mean.abs() < 0.1, "mean {mean}");
    assert!((var - sigma2).abs() < 0.1 * sigma2, "variance {var}");
    assert_eq!(link.distance_m, 357.0);
}

#[test]
fn noise_grows_with_wind_and_shipping() {
    let calm = noise_psd(&ChannelParams {
        wind_kmh: 0.0,
        shipping: 0.0,
        ..lossy()
    })
    .unwrap();
    let rough = noise_psd(&ChannelParams {
        wind_kmh: 80.0,
        shipping: 1.0,
        ..lossy()
    })
    .unwrap();
    assert!(rough > calm);
}

#[test]
fn lossless_channel_never_errs() {
    let p = ChannelParams {
        lossless: true,
        ..lossy()
    };
    for m in Modulation::ALL {
        assert_eq!(ber(-50.0, m, &p, bitrate(m, &p)), 0.0);
    }
    assert_eq!(frame_success(0.0, 4000), 1.0);
}

proptest! {
    #[test]
    fn thorp_increases_with_frequency(f in 0.1f64..100.0, df in 0.01f64..10.0) {
        prop_assert!(thorp_absorption(f + df).unwrap() > thorp_absorption(f).unwrap());
    }

    #[test]
    fn loss_increases_with_distance(d in 1.0f64..5000.0, dd in 0.1f64..1000.0) {
        let p = lossy();
        prop_assert!(transmission_loss(d + dd, &p).unwrap() > transmission_loss(d, &p).unwrap());
    }

    #[test]
    fn ber_falls_with_snr(snr in -10.0f64..40.0, ds in 0.1f64..5.0, m in 0usize..3) {
        let p = lossy();
        let m = Modulation::ALL[m];
        let r = bitrate(m, &p);
        let lo = ber(snr, m, &p, r);
        let hi = ber(snr + ds, m, &p, r);
        prop_assert!(hi <= lo);
        prop_assert!((0.0..=0.5).contains(&lo));
    }

    #[test]
    fn denser_constellations_err_more(snr in 0.0f64..40.0) {
        let p = lossy();
        let b: Vec<f64> = Modulation::ALL.iter().map(|&m| ber(snr, m, &p, bitrate(m, &p))).collect();
        prop_assert!(b[0] <= b[1] && b[1] <= b[2], "{b:?}");
    }

    #[test]
    fn frame_success_falls_with_ber(e in 0.0f64..0.5, de in 1e-6f64..0.1, bits in 1u64..10_000) {
        prop_assert!(frame_success((e + de).min(0.5), bits) <= frame_success(e, bits));
    }

    #[test]
    fn q_function_is_a_tail(x in -6.0f64..6.0) {
        prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn more_power_means_more_snr(d in 10.0f64..3000.0) {
        let p = lossy();
        let pmap = PowerMap::default();
        let link = LinkState::new(d);
        let s: Vec<f64> = PowerLevel::ALL
            .iter()
            .map(|&w| mean_snr(&link, w, &p, &pmap).unwrap())
            .collect();
        prop_assert!(s[0] < s[1] && s[1] < s[2]);
    }
}
