use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use freeflight_core::environment::{select_priority, AirspaceWorld, GroundTruth, PositionMap, VertiportState, WorldOptions};
use freeflight_core::geometry::{advance_state, cpa, wrap_angle, AirspaceConfig, Vec2, VehicleId, VehicleState};
use freeflight_core::schedule::{generate_stream_schedule, TrafficConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn arb_vec(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(n, e)| Vec2::new(n, e))
}

proptest! {
    #[test]
    fn wrap_is_periodic_and_half_open(theta in -100.0f64..100.0, k in -5i32..=5) {
        let a = wrap_angle(theta).unwrap();
        let b = wrap_angle(theta + 2.0 * PI * k as f64).unwrap();
        prop_assert!((-PI..PI).contains(&a) && (-PI..PI).contains(&b));
        prop_assert!(circular_gap(a, b) < 1e-9);
        prop_assert!(circular_gap(a, theta) < 1e-9);
    }

    #[test]
    fn advance_keeps_speed_and_bounds_the_turn(
        pos in arb_vec(1500.0),
        heading in -PI..PI,
        speed in 10.0f64..16.0,
        action in -1.0f64..=1.0,
    ) {
        let cfg = AirspaceConfig::default();
        let s = VehicleState::new(3, pos, wrap_angle(heading).unwrap(), speed, 0.0);
        let next = advance_state(&s, action, &cfg);
        prop_assert_eq!(next.speed, s.speed);
        prop_assert!((-PI..PI).contains(&next.heading));
        prop_assert!(circular_gap(next.heading, s.heading) <= cfg.heading_increment() + 1e-12);
        prop_assert!(((next.position - s.position).norm() - cfg.dt * speed).abs() < 1e-9);
    }

    #[test]
    fn cpa_is_a_lower_bound_on_future_separation(
        p1 in arb_vec(1000.0), p2 in arb_vec(1000.0),
        v1 in arb_vec(16.0), v2 in arb_vec(16.0),
        later in 0.0f64..600.0,
    ) {
        let (d, t) = cpa(p1, v1, p2, v2);
        prop_assert!(t >= 0.0);
        prop_assert!(d <= p1.distance(p2) + 1e-9);
        let future = (p2 + v2.scale(later)).distance(p1 + v1.scale(later));
        prop_assert!(d <= future + 1e-6);
        let (d_swapped, t_swapped) = cpa(p2, v2, p1, v1);
        prop_assert!((d - d_swapped).abs() < 1e-9 && (t - t_swapped).abs() < 1e-9);
    }

    #[test]
    fn priority_ignores_vehicle_order(
        positions in proptest::collection::vec(arb_vec(1000.0), 1..12),
        rotate in 0usize..12,
    ) {
        let vs: Vec<VehicleState> = positions.iter().enumerate().map(|(i, p)| VehicleState::new(i as VehicleId, *p, 0.0, 12.0, 0.0)).collect();
        let truth: PositionMap = vs.iter().map(|v| (v.id, v.position)).collect();
        let free = VertiportState::default();
        let mut shuffled = vs.clone();
        shuffled.rotate_left(rotate % vs.len());
        shuffled.reverse();
        prop_assert_eq!(
            select_priority(&vs, &truth, &free, Vec2::ZERO, 0.0),
            select_priority(&shuffled, &truth, &free, Vec2::ZERO, 0.0)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Steps a stream world under arbitrary turning and checks the
    /// per-step world invariants.
    #[test]
    fn world_invariants_hold_every_step(n in 2usize..14, seed in any::<u64>(), check in any::<bool>()) {
        let cfg = AirspaceConfig::default();
        let traffic = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = generate_stream_schedule(n, &mut rng, &traffic);
        let radius = 300.0;
        let options = WorldOptions::evaluation(check.then_some(radius));
        let mut world = AirspaceWorld::with_schedule(cfg.clone(), traffic, options, &schedule, Box::new(GroundTruth));
        let mut speeds: BTreeMap<VehicleId, f64> = BTreeMap::new();
        let mut cleared: BTreeSet<VehicleId> = BTreeSet::new();
        for k in 0..400 {
            let before = world.time();
            let blocked_before = world.vertiport().is_blocked(before);
            let actions: BTreeMap<VehicleId, f64> = world
                .vehicles()
                .iter()
                .map(|v| (v.id, ((seed % 97) as f64 * 0.1 + k as f64 * 0.05 + v.id as f64).sin()))
                .collect();
            let events = world.step(&actions).unwrap();

            prop_assert_eq!(world.time(), before + cfg.dt);
            prop_assert!(events.accidents.is_subset(&events.incidents));
            prop_assert!(events.new_accidents.is_subset(&events.incidents));

            let ids: BTreeSet<VehicleId> = world.vehicles().iter().map(|v| v.id).collect();
            prop_assert_eq!(ids.len(), world.vehicles().len());

            // one landing at a time, never into a blocked vertiport
            prop_assert!(events.landings.len() <= 1);
            if let Some(&id) = events.landings.iter().next() {
                prop_assert!(!blocked_before);
                prop_assert_eq!(world.vertiport().blocked_until, Some(world.time() + cfg.t_land));
                prop_assert_eq!(world.vertiport().occupant, Some(id));
            }

            let holders = world.vehicles().iter().filter(|v| v.entry_signal.is_enter()).count();
            prop_assert!(holders <= 1);
            for v in world.vehicles() {
                prop_assert!((-PI..PI).contains(&v.heading));
                prop_assert_eq!(*speeds.entry(v.id).or_insert(v.speed), v.speed);
                if cleared.contains(&v.id) {
                    prop_assert!(v.entry_signal.is_enter(), "signal of {} revoked", v.id);
                }
                if v.entry_signal.is_enter() {
                    cleared.insert(v.id);
                }
            }

            if check {
                for (i, id) in events.admitted.iter().enumerate() {
                    let at = world.vehicle(*id).unwrap().position;
                    let later: BTreeSet<_> = events.admitted[i + 1..].iter().collect();
                    for other in world.vehicles().iter().filter(|o| o.id != *id && !later.contains(&o.id)) {
                        prop_assert!(other.position.distance(at) >= radius, "{} admitted {} m from {}", id, other.position.distance(at), other.id);
                    }
                }
            }
            if world.vehicles().is_empty() && world.pending_arrivals() == 0 {
                break;
            }
        }
    }
}
