use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum DeliveryPhase {
    #[default]
    Idle,
    OrderReceived,
    PickingUp,
    InTransit,
    AtDoor,
    Unlocked,
    Returning,
    Completed,
    Failed,
}

impl DeliveryPhase {
    pub const ALL: [DeliveryPhase; 9] = [
        DeliveryPhase::Idle,
        DeliveryPhase::OrderReceived,
        DeliveryPhase::PickingUp,
        DeliveryPhase::InTransit,
        DeliveryPhase::AtDoor,
        DeliveryPhase::Unlocked,
        DeliveryPhase::Returning,
        DeliveryPhase::Completed,
        DeliveryPhase::Failed,
    ];

    pub fn is_terminal(self) -> bool {
        matches!(self, DeliveryPhase::Completed | DeliveryPhase::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeliveryEvent {
    OrderPlaced { order_id: String, token: String, room: String },
    ArrivedAtKitchen,
    LoadConfirmed,
    ArrivedAtRoom,
    QrPresented(String),
    StorageClosed,
    ArrivedHome,
    Abort,
}

impl DeliveryEvent {
    pub fn name(&self) -> &'static str {
        match self {
            DeliveryEvent::OrderPlaced { .. } => "OrderPlaced",
            DeliveryEvent::ArrivedAtKitchen => "ArrivedAtKitchen",
            DeliveryEvent::LoadConfirmed => "LoadConfirmed",
            DeliveryEvent::ArrivedAtRoom => "ArrivedAtRoom",
            DeliveryEvent::QrPresented(_) => "QrPresented",
            DeliveryEvent::StorageClosed => "StorageClosed",
            DeliveryEvent::ArrivedHome => "ArrivedHome",
            DeliveryEvent::Abort => "Abort",
        }
    }
}

impl fmt::Display for DeliveryEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeliveryError {
    #[error("event {event} is not allowed in phase {phase:?}")]
    InvalidTransition { phase: DeliveryPhase, event: String },
}

/// Wrong tokens tolerated at the door before the delivery fails.
pub const MAX_QR_FAILURES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeliveryState {
    pub phase: DeliveryPhase,
    pub order_id: String,
    pub qr_token: String,
    pub destination: String,
    pub qr_failures: u32,
}

impl DeliveryState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Deterministic token for a simulated order.
pub fn qr_token_for(seed: u64, room: &str) -> String {
    format!("QR-{seed:08x}-{room}")
}

/// Advances the delivery workflow by one event.
///
/// `Abort` fails any unfinished delivery. A wrong token at the door keeps the
/// robot waiting until the third miss, which fails the delivery.
pub fn delivery_step(state: &DeliveryState, event: &DeliveryEvent) -> Result<DeliveryState, DeliveryError> {
    use DeliveryEvent as E;
    use DeliveryPhase as P;
    let mut next = state.clone();
    let phase = match (state.phase, event) {
        (p, E::Abort) if !p.is_terminal() => P::Failed,
        (P::Idle, E::OrderPlaced { order_id, token, room }) => {
            next.order_id = order_id.clone();
            next.qr_token = token.clone();
            next.destination = room.clone();
            P::OrderReceived
        }
        (P::OrderReceived, E::ArrivedAtKitchen) => P::PickingUp,
        (P::PickingUp, E::LoadConfirmed) => P::InTransit,
        (P::InTransit, E::ArrivedAtRoom) => P::AtDoor,
        (P::AtDoor, E::QrPresented(token)) => {
            if *token == state.qr_token {
                P::Unlocked
            } else {
                next.qr_failures += 1;
                if next.qr_failures >= MAX_QR_FAILURES {
                    P::Failed
                } else {
                    P::AtDoor
                }
            }
        }
        (P::Unlocked, E::StorageClosed) => P::Returning,
        (P::Returning, E::ArrivedHome) => P::Completed,
        (phase, event) => {
            return Err(DeliveryError::InvalidTransition { phase, event: event.name().to_string() });
        }
    };
    next.phase = phase;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DeliveryEvent as E;
    use DeliveryPhase as P;

    fn order() -> E {
        E::OrderPlaced { order_id: "o1".into(), token: "QR-1".into(), room: "238".into() }
    }

    fn run(events: &[E]) -> Result<DeliveryState, DeliveryError> {
        events.iter().try_fold(DeliveryState::new(), |s, e| delivery_step(&s, e))
    }

    #[test]
    fn happy_path() {
        let s = run(&[
            order(),
            E::ArrivedAtKitchen,
            E::LoadConfirmed,
            E::ArrivedAtRoom,
            E::QrPresented("QR-1".into()),
            E::StorageClosed,
            E::ArrivedHome,
        ])
        .unwrap();
        assert_eq!(s.phase, P::Completed);
        assert_eq!(s.qr_token, "QR-1");
        assert_eq!(s.destination, "238");
    }

    #[test]
    fn three_wrong_tokens_fail() {
        let mut s = run(&[order(), E::ArrivedAtKitchen, E::LoadConfirmed, E::ArrivedAtRoom]).unwrap();
        for i in 1..=3 {
            s = delivery_step(&s, &E::QrPresented("nope".into())).unwrap();
            assert_eq!(s.qr_failures, i);
            assert_eq!(s.phase, if i < 3 { P::AtDoor } else { P::Failed });
        }
    }

    #[test]
    fn token_is_fixed_after_order() {
        let s = run(&[order()]).unwrap();
        assert!(delivery_step(&s, &order()).is_err());
        assert_eq!(qr_token_for(255, "238"), "QR-000000ff-238");
    }
}
