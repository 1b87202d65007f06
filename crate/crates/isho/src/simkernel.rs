//! Discrete-event scaffolding for the simulator: a deterministic event queue,
//! the handover marks, and the run trace.
//!
//! Determinism contract: events are ordered by timestamp, ties broken by
//! insertion order, and the queue is the only source of "now". With integer
//! microseconds throughout, a run is a pure function of its configuration.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::types::{LinkClass, NodeId, SliceId, Step, Topology};

/// Simulation time in microseconds since the start of the handover.
pub type Time = u64;

#[derive(Debug, Clone, Copy)]
pub struct Event<K> {
    pub at: Time,
    pub seq: u64,
    pub kind: K,
}

impl<K> PartialEq for Event<K> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}

impl<K> Eq for Event<K> {}

impl<K> PartialOrd for Event<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Event<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

pub struct EventQueue<K> {
    heap: BinaryHeap<Reverse<Event<K>>>,
    next_seq: u64,
    now: Time,
}

impl<K> EventQueue<K> {
    pub fn new() -> EventQueue<K> {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
        }
    }

    pub fn now(&self) -> Time {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, at: Time, kind: K) {
        assert!(at >= self.now, "event scheduled into the past");
        self.heap.push(Reverse(Event {
            at,
            seq: self.next_seq,
            kind,
        }));
        self.next_seq += 1;
    }

    /// Pops the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(Time, K)> {
        let Reverse(ev) = self.heap.pop()?;
        self.now = ev.at;
        Some((ev.at, ev.kind))
    }
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue::new()
    }
}

/// The four instants the handover metrics are read from. `isho_start` is
/// always 0; the other fields are stamped by the engine as the procedure
/// reaches the defining points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Marks {
    pub isho_start: Time,
    /// Last instant the previous path is the session's anchor: procedure
    /// start for the release-first baseline, receipt of the new prefix for
    /// the continuation schemes.
    pub last_downlink_prev: Time,
    /// Arrival of the earliest first-delivery probe at the UE.
    pub first_downlink_new: Option<Time>,
    /// Arrival of the latest first-delivery probe (equals
    /// `first_downlink_new` unless the scheme completes two branches).
    pub isho_end: Option<Time>,
}

impl Marks {
    pub fn handover_delay(&self) -> Option<u64> {
        self.first_downlink_new
            .map(|f| f - self.last_downlink_prev)
    }

    pub fn handover_interval(&self) -> Option<u64> {
        self.isho_end.map(|e| e - self.isho_start)
    }
}

/// How a stream packet reached the UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryPath {
    /// Down the previous-slice chain (pre-handover path, or the drain
    /// fallback after the tunnel is gone).
    PreviousPath,
    /// Encapsulated across the inter-slice gateway tunnel.
    Tunnel,
    /// Addressed to the care-of address and routed down the new chain.
    NewPath,
}

impl DeliveryPath {
    pub fn label(self) -> &'static str {
        match self {
            DeliveryPath::PreviousPath => "previous path",
            DeliveryPath::Tunnel => "tunnel",
            DeliveryPath::NewPath => "new path",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// A procedure message finished processing at its receiver.
    Message {
        step: Step,
        name: String,
        src: NodeId,
        dst: NodeId,
        link: LinkClass,
        wire_len: usize,
    },
    PacketEmitted { id: u32, to_care_of: bool },
    PacketDelivered { id: u32, via: DeliveryPath },
    PacketDropped { id: u32, at: NodeId },
    PacketQueued { id: u32, at: NodeId },
    TunnelEstablished { teid: u32 },
    TunnelReleased,
    BindingRegistered { sequence: u16 },
    SessionReleased { slice: SliceId },
}

/// Chronological record of a run: trace entries, the handover marks, and the
/// captured wire frames (for pcap export).
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub entries: Vec<(Time, TraceEvent)>,
    pub marks: Marks,
    pub frames: Vec<(Time, Vec<u8>)>,
}

impl Trace {
    pub fn push(&mut self, at: Time, ev: TraceEvent) {
        self.entries.push((at, ev));
    }

    pub fn capture(&mut self, at: Time, frame: Vec<u8>) {
        self.frames.push((at, frame));
    }

    /// Human-readable log, one line per entry, times in milliseconds.
    pub fn render_log(&self, topo: &Topology) -> String {
        let mut out = String::new();
        for (at, ev) in &self.entries {
            let ms = *at as f64 / 1000.0;
            let line = match ev {
                TraceEvent::Message {
                    step,
                    name,
                    src,
                    dst,
                    wire_len,
                    ..
                } => {
                    let wire = if *wire_len > 0 {
                        format!("  [{wire_len} B]")
                    } else {
                        String::new()
                    };
                    format!(
                        "{:<22} {} -> {}  {name}{wire}",
                        step.label(),
                        topo.label(*src),
                        topo.label(*dst)
                    )
                }
                TraceEvent::PacketEmitted { id, to_care_of } => {
                    let addr = if *to_care_of { "care-of" } else { "home" };
                    format!("{:<22} packet {id} emitted ({addr} address)", "stream")
                }
                TraceEvent::PacketDelivered { id, via } => {
                    format!("{:<22} packet {id} delivered via {}", "stream", via.label())
                }
                TraceEvent::PacketDropped { id, at } => {
                    format!("{:<22} packet {id} dropped at {}", "stream", topo.label(*at))
                }
                TraceEvent::PacketQueued { id, at } => {
                    format!("{:<22} packet {id} queued at {}", "stream", topo.label(*at))
                }
                TraceEvent::TunnelEstablished { teid } => {
                    format!("{:<22} established, downlink teid 0x{teid:08x}", "tunnel")
                }
                TraceEvent::TunnelReleased => format!("{:<22} released", "tunnel"),
                TraceEvent::BindingRegistered { sequence } => {
                    format!("{:<22} care-of binding registered (seq {sequence})", "binding")
                }
                TraceEvent::SessionReleased { slice } => {
                    format!("{:<22} {} slice session released", "session", slice.tag())
                }
            };
            let _ = writeln!(out, "{ms:>10.3} ms  {line}");
        }
        let fmt_opt = |t: Option<Time>| match t {
            Some(t) => format!("{:.3} ms", t as f64 / 1000.0),
            None => "-".to_string(),
        };
        let _ = writeln!(
            out,
            "marks: start {:.3} ms, last prev-path downlink {:.3} ms, first new-path downlink {}, end {}",
            self.marks.isho_start as f64 / 1000.0,
            self.marks.last_downlink_prev as f64 / 1000.0,
            fmt_opt(self.marks.first_downlink_new),
            fmt_opt(self.marks.isho_end),
        );
        out
    }
}
