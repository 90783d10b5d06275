use std::collections::BTreeMap;
use std::path::PathBuf;

use uwa_adapt::bandit::{Action, Modulation, PowerLevel};
use uwa_adapt::experiment::{parse_scenario, Scenario};
use uwa_adapt::netsim::{
    run_episode, EpisodeOutput, InnerPolicy, OuterPolicy, PolicySpec, SimConfig, SimError,
};

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    parse_scenario(&path).unwrap()
}

fn config(name: &str, policy: PolicySpec) -> SimConfig {
    scenario(name).sim_config(policy).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn check_invariants(cfg: &SimConfig, ep: &EpisodeOutput) {
    assert!(close(ep.total_energy_j(), ep.frame_energy_j));
    let by_interval: f64 = ep
        .intervals
        .iter()
        .map(|r| r.energy_data_j + r.energy_fb_j)
        .sum();
    assert!(close(by_interval, ep.frame_energy_j));
    assert_eq!(
        ep.intervals.iter().map(|r| r.r_k_bits).sum::<u64>(),
        ep.delivered_bits
    );
    assert!(ep.sink_bits.iter().sum::<u64>() <= ep.delivered_bits);

    let frames = ep.frames();
    assert_eq!(frames.sent, frames.delivered + frames.lost());
    assert!(frames.delivered * cfg.radio.frame_bits >= ep.delivered_bits);

    let mut per_link: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    for r in &ep.intervals {
        per_link.entry(r.link).or_default().push(r);
    }
    assert_eq!(per_link.len(), ep.links.len());
    for recs in per_link.values() {
        // rounds are numbered 1, 2, ... and only the last may be open
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.k, i as u64 + 1);
            assert_eq!(r.closed, i + 1 < recs.len());
            assert!((0.0..=1.0).contains(&r.r_k_norm));
        }
        let decisions: u64 = recs.iter().map(|r| r.decisions()).sum();
        let slots = ep.slots.iter().filter(|s| s.link == recs[0].link).count();
        assert_eq!(decisions, slots as u64);
        assert!(decisions <= ep.total_slots);
        let starts: Vec<f64> = recs.iter().map(|r| r.t_start_s).collect();
        assert!(starts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(starts[0], 0.0);
    }
}

#[test]
fn invariants_hold_across_scenarios_and_policies() {
    let s = scenario("nodes6.toml");
    let best = [Action::new(Modulation::Psk16, PowerLevel::Low); 3];
    for policy in [
        PolicySpec::bilevel(),
        PolicySpec::random(),
        PolicySpec::fixed(Action::new(Modulation::Psk16, PowerLevel::High), 1),
        PolicySpec::oracle(best, 4),
    ] {
        let cfg = s.sim_config(policy).unwrap();
        for seed in 0..3 {
            let ep = run_episode(&cfg, seed).unwrap();
            check_invariants(&cfg, &ep);
        }
    }
    let cfg = config("midrange.toml", PolicySpec::bilevel());
    check_invariants(&cfg, &run_episode(&cfg, 9).unwrap());
}

#[test]
fn same_seed_same_episode_other_seed_other_episode() {
    let cfg = config("nodes4.toml", PolicySpec::bilevel());
    let a = run_episode(&cfg, 42).unwrap();
    assert_eq!(a, run_episode(&cfg, 42).unwrap());
    assert_ne!(a, run_episode(&cfg, 43).unwrap());
}

#[test]
fn singleton_menu_equals_fixed_interval() {
    for q in [4, 7] {
        let mut s = scenario("nodes4.toml");
        s.controller.intervals_min = vec![q];
        let bilevel = s.sim_config(PolicySpec::bilevel()).unwrap();
        let pinned = s
            .sim_config(PolicySpec {
                inner: InnerPolicy::Ucb,
                outer: OuterPolicy::Fixed(q),
            })
            .unwrap();
        for seed in 0..3 {
            let a = run_episode(&bilevel, seed).unwrap();
            let b = run_episode(&pinned, seed).unwrap();
            assert_eq!(a, b, "menu [{q}] seed {seed}");
            assert!(a.intervals.iter().all(|r| r.q_k_min == q));
        }
    }
}

#[test]
fn fixed_action_on_lossless_link_is_flat() {
    let mut s = scenario("single_link.toml");
    s.channel.lossless = true;
    for m in Modulation::ALL {
        let action = Action::new(m, PowerLevel::Medium);
        let cfg = s.sim_config(PolicySpec::fixed(action, 4)).unwrap();
        let ep = run_episode(&cfg, 1).unwrap();
        let closed: Vec<_> = ep.intervals.iter().filter(|r| r.closed).collect();
        assert!(closed.len() >= 20);
        let first = closed[0].r_k_norm;
        assert!(first > 0.0);
        for r in &closed {
            assert_eq!(r.r_k_norm, first, "{m:?} interval {}", r.k);
            assert_eq!(r.frames.lost(), 0);
        }
        let expected = cfg.radio.burst_capacity(m, &cfg.channel) as f64
            * cfg.radio.frame_bits as f64
            / cfg.radio.max_bits_per_slot(&cfg.channel) as f64;
        assert!(
            (first - expected).abs() < 1e-12,
            "{m:?}: {first} vs {expected}"
        );
    }
}

#[test]
fn fixed_policy_sticks_to_its_choices() {
    let action = Action::new(Modulation::Psk8, PowerLevel::Low);
    let cfg = config("nodes4.toml", PolicySpec::fixed(action, 7));
    let ep = run_episode(&cfg, 2).unwrap();
    assert!(ep.slots.iter().all(|s| s.action == action));
    assert!(ep.intervals.iter().all(|r| r.q_k_min == 7));
}

#[test]
fn collisions_grow_with_density() {
    let rate = |name: &str| {
        let cfg = config(name, PolicySpec::bilevel());
        let (mut sent, mut col) = (0, 0);
        for seed in 0..4 {
            let f = run_episode(&cfg, seed).unwrap().frames();
            sent += f.sent;
            col += f.lost_collision;
        }
        col as f64 / sent as f64
    };
    let (sparse, dense) = (rate("nodes4.toml"), rate("nodes10.toml"));
    assert!(dense > sparse, "{sparse} vs {dense}");
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = config("nodes4.toml", PolicySpec::bilevel());
    cfg.controller.intervals_min.clear();
    assert!(matches!(run_episode(&cfg, 0), Err(SimError::Bandit(_))));

    let mut cfg = config("nodes4.toml", PolicySpec::bilevel());
    cfg.duration_s = 60.0;
    assert!(matches!(run_episode(&cfg, 0), Err(SimError::Invalid(_))));

    let mut cfg = config("nodes4.toml", PolicySpec::bilevel());
    cfg.radio.slot_s = 15.0;
    assert!(run_episode(&cfg, 0).is_err());
}
