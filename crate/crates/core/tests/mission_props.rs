use std::collections::VecDeque;
use std::f64::consts::PI;

use hotelnav_core::mission::{
    delivery_step, follow_path, vfh_steer, ControllerConfig, DeliveryEvent, DeliveryPhase, DeliveryState, Outcome,
    VfhConfig, VfhError,
};
use hotelnav_core::robot::NoiseModel;
use hotelnav_core::sensors::{Beam, Scan};
use hotelnav_core::world::{CellState, GridMap};
use hotelnav_core::{seeded_rng, Pose};
use proptest::prelude::*;

const TOKEN: &str = "QR-good";

fn order() -> DeliveryEvent {
    DeliveryEvent::OrderPlaced { order_id: "o-1".into(), token: TOKEN.into(), room: "238".into() }
}

fn alphabet() -> Vec<DeliveryEvent> {
    use DeliveryEvent as E;
    vec![
        order(),
        E::ArrivedAtKitchen,
        E::LoadConfirmed,
        E::ArrivedAtRoom,
        E::QrPresented(TOKEN.into()),
        E::QrPresented("QR-bad".into()),
        E::StorageClosed,
        E::ArrivedHome,
        E::Abort,
    ]
}

/// The legal transition table, written out independently of the automaton.
fn expected(state: &DeliveryState, event: &DeliveryEvent) -> Option<DeliveryPhase> {
    use DeliveryEvent as E;
    use DeliveryPhase as P;
    Some(match (state.phase, event) {
        (P::Completed | P::Failed, _) => return None,
        (_, E::Abort) => P::Failed,
        (P::Idle, E::OrderPlaced { .. }) => P::OrderReceived,
        (P::OrderReceived, E::ArrivedAtKitchen) => P::PickingUp,
        (P::PickingUp, E::LoadConfirmed) => P::InTransit,
        (P::InTransit, E::ArrivedAtRoom) => P::AtDoor,
        (P::AtDoor, E::QrPresented(t)) if *t == state.qr_token => P::Unlocked,
        (P::AtDoor, E::QrPresented(_)) if state.qr_failures + 1 >= 3 => P::Failed,
        (P::AtDoor, E::QrPresented(_)) => P::AtDoor,
        (P::Unlocked, E::StorageClosed) => P::Returning,
        (P::Returning, E::ArrivedHome) => P::Completed,
        _ => return None,
    })
}

#[test]
fn phase_event_matrix() {
    let mut legal = 0;
    let mut illegal = 0;
    for phase in DeliveryPhase::ALL {
        for failures in 0..3 {
            let state = DeliveryState {
                phase,
                order_id: "o-1".into(),
                qr_token: TOKEN.into(),
                destination: "238".into(),
                qr_failures: failures,
            };
            for event in alphabet() {
                match (delivery_step(&state, &event), expected(&state, &event)) {
                    (Ok(next), Some(want)) => {
                        assert_eq!(next.phase, want, "{phase:?} + {event}");
                        legal += 1;
                    }
                    (Err(_), None) => illegal += 1,
                    (got, want) => panic!("{phase:?} + {event}: got {got:?}, table says {want:?}"),
                }
            }
        }
    }
    assert!(legal > 0 && illegal > 0);
}

#[test]
fn happy_path_and_three_strikes() {
    use DeliveryEvent as E;
    let run = |events: &[E]| events.iter().try_fold(DeliveryState::new(), |s, e| delivery_step(&s, e));
    let done = run(&[
        order(),
        E::ArrivedAtKitchen,
        E::LoadConfirmed,
        E::ArrivedAtRoom,
        E::QrPresented(TOKEN.into()),
        E::StorageClosed,
        E::ArrivedHome,
    ])
    .unwrap();
    assert_eq!(done.phase, DeliveryPhase::Completed);
    let bad = E::QrPresented("QR-bad".into());
    let failed =
        run(&[order(), E::ArrivedAtKitchen, E::LoadConfirmed, E::ArrivedAtRoom, bad.clone(), bad.clone(), bad])
            .unwrap();
    assert_eq!(failed.phase, DeliveryPhase::Failed);
}

#[test]
fn unlock_requires_matching_token_to_depth_eight() {
    // Breadth-first over every event sequence up to length 8.
    let mut queue = VecDeque::from([(DeliveryState::new(), 0usize)]);
    let mut unlocks = 0usize;
    while let Some((state, depth)) = queue.pop_front() {
        if depth == 8 {
            continue;
        }
        for event in alphabet() {
            let Ok(next) = delivery_step(&state, &event) else { continue };
            if next.phase == DeliveryPhase::Unlocked && state.phase != DeliveryPhase::Unlocked {
                assert_eq!(event, DeliveryEvent::QrPresented(TOKEN.into()));
                assert_eq!(state.phase, DeliveryPhase::AtDoor);
                unlocks += 1;
            }
            if state.phase != DeliveryPhase::Idle {
                assert_eq!(next.qr_token, state.qr_token, "token changed on {event}");
            }
            queue.push_back((next, depth + 1));
        }
    }
    assert!(unlocks > 0);
}

#[test]
fn noiseless_straight_route_reaches_for_any_spacing() {
    let map = GridMap::new(120, 20, 0.1, CellState::Free).unwrap();
    let start = Pose::new(0.55, 1.05, 0.0);
    for spacing in [0.5f64, 1.0, 2.5, 5.0, 10.0] {
        let length = 11.0f64;
        let count = (length / spacing).floor() as usize;
        let mut wps: Vec<Pose> = (1..=count).map(|i| Pose::new(0.55 + i as f64 * spacing, 1.05, 0.0)).collect();
        if wps.last().is_none_or(|w| (w.x - 11.55).abs() > 1e-9) {
            wps.push(Pose::new(11.55, 1.05, 0.0));
        }
        let log = follow_path(&map, start, &wps, &NoiseModel::NONE, &ControllerConfig::default(), &mut seeded_rng(0))
            .unwrap();
        assert_eq!(log.outcome, Outcome::Reached, "spacing {spacing}");
    }
}

/// Free sectors recomputed from the scan, as an independent check.
fn free_sectors(scan: &Scan, cfg: &VfhConfig) -> Vec<bool> {
    let mut density = vec![0.0; cfg.sectors];
    let mut seen = vec![false; cfg.sectors];
    for b in &scan.beams {
        let s = cfg.sector_of(b.bearing);
        seen[s] = true;
        if let Some(r) = b.range.filter(|&r| r < cfg.window) {
            density[s] += (cfg.window - r) / cfg.window;
        }
    }
    (0..cfg.sectors).map(|s| seen[s] && density[s] <= cfg.threshold).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn steering_lands_in_a_free_sector(
        ranges in prop::collection::vec(prop::option::of(0.05f64..4.0), 72..200),
        target in -PI..PI
    ) {
        let n = ranges.len();
        let beams = ranges
            .into_iter()
            .enumerate()
            .map(|(i, range)| Beam { bearing: -PI + (i as f64 + 0.5) * 2.0 * PI / n as f64, range })
            .collect();
        let scan = Scan { origin: Pose::default(), beams, max_range: 4.0, timestamp: 0.0 };
        let cfg = VfhConfig::default();
        let free = free_sectors(&scan, &cfg);
        match vfh_steer(&scan, target, &cfg) {
            Ok(b) => prop_assert!(free[cfg.sector_of(b)], "bearing {} in blocked sector", b),
            Err(VfhError::NoOpening) => prop_assert!(free.iter().all(|f| !f)),
            Err(e) => prop_assert!(false, "unexpected {:?}", e),
        }
    }
}
