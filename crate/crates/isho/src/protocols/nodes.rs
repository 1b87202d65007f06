//! Protocol state carried across the run: UE mobility context, the DN's
//! downlink binding, the inter-slice tunnel, and the background stream
//! bookkeeping.

use std::net::Ipv6Addr;

use crate::simkernel::{DeliveryPath, Time};

/// Lifecycle of the gateway-to-gateway tunnel (previous-side view).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunnelState {
    Idle,
    /// N4 modification received, endpoint handshake in flight.
    Requested,
    /// Handshake acknowledged; downlink G-PDUs use this TEID.
    Established { teid: u32 },
    /// Torn down after the binding converged (hybrid scheme).
    Released,
}

impl TunnelState {
    pub fn is_established(self) -> bool {
        matches!(self, TunnelState::Established { .. })
    }
}

#[derive(Debug, Clone)]
pub struct UeState {
    pub home_addr: Ipv6Addr,
    /// Configured from the advertised new-slice prefix.
    pub care_of: Option<Ipv6Addr>,
    pub care_token: Option<u64>,
    pub home_token: Option<u64>,
}

/// The correspondent's view of where the session's downlink goes.
#[derive(Debug, Clone)]
pub struct DnState {
    pub binding: Ipv6Addr,
    pub binding_is_care_of: bool,
}

/// One background stream packet in flight.
#[derive(Debug, Clone)]
pub struct PacketState {
    pub id: u32,
    pub to_care_of: bool,
    /// The end-to-end datagram as emitted by the DN.
    pub inner: Vec<u8>,
    /// Encapsulated form while crossing the tunnel hop.
    pub outer: Option<Vec<u8>>,
    pub via: DeliveryPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamReport {
    pub emitted: u32,
    pub delivered_prev: u32,
    pub delivered_tunnel: u32,
    pub delivered_new: u32,
    pub dropped: u32,
    /// Packets that waited at the new-chain delivery gate.
    pub queued: u32,
    pub gpdus_encapsulated: u32,
    pub last_encap_at: Option<Time>,
}

impl StreamReport {
    pub fn delivered_total(&self) -> u32 {
        self.delivered_prev + self.delivered_tunnel + self.delivered_new
    }

    pub fn count_delivery(&mut self, via: DeliveryPath) {
        match via {
            DeliveryPath::PreviousPath => self.delivered_prev += 1,
            DeliveryPath::Tunnel => self.delivered_tunnel += 1,
            DeliveryPath::NewPath => self.delivered_new += 1,
        }
    }
}
