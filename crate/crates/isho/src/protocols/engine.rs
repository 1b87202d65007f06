//! The discrete-event engine. It executes a scheme's step sequences under the
//! same link + receiver-processing timing as the closed-form model, so the
//! measured marks must agree with the composition to the microsecond. On top
//! of the procedure it carries real wire payloads (mobility headers, the
//! tunnel handshake, G-PDU encapsulation) and runs a background downlink
//! stream whose packets are routed, queued, tunnelled, or dropped by the
//! evolving user-plane state.

use std::net::Ipv6Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sequences::{executed_steps, SeqMessage, SequenceSet, StepSequence};
use crate::simkernel::{DeliveryPath, EventQueue, Marks, Time, Trace, TraceEvent};
use crate::types::{NodeId, RunConfig, SchemeKind, SliceId, Step};
use crate::wire::ipv6::{self, Ipv6Prefix};
use crate::wire::mip::{MobilityMessage, MOBILITY_PROTO};
use crate::wire::{gtpu, WireError};

use super::nodes::{DnState, PacketState, StreamReport, TunnelState, UeState};

/// New-slice and previous-slice session prefixes (the UE derives one address
/// from each with its interface identifier).
pub const PREV_PREFIX: &str = "2001:db8:0:1::/64";
pub const NEW_PREFIX: &str = "2001:db8:0:2::/64";
const DN_ADDR: &str = "2001:db8:0:ff::1";
const ISGW_PREV_TRANSPORT: &str = "2001:db8:0:3::11";
const ISGW_NEW_TRANSPORT: &str = "2001:db8:0:3::12";
const UE_IID: u64 = 0x1001;

const STREAM_PORT: u16 = 9000;
const PROBE_PORT: u16 = 9001;
const BINDING_LIFETIME: u16 = 420;
const EVENT_LIMIT: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("missing context: {0}")]
    MissingContext(String),
    #[error("wire decode failed: {0}")]
    Decode(#[from] WireError),
    #[error("routability cookie echo mismatch")]
    CookieMismatch,
    #[error("binding authenticator mismatch")]
    AuthMismatch,
    #[error("binding ack does not echo the update sequence")]
    BadSequenceEcho,
    #[error("tunnel teid mismatch: expected 0x{expected:08x}, got 0x{got:08x}")]
    TeidMismatch { expected: u32, got: u32 },
    #[error("packet reached the tunnel hop without an established tunnel")]
    TunnelNotEstablished,
    #[error("run ended incomplete: {0}")]
    IncompleteRun(String),
    #[error("event limit exceeded")]
    EventLimitExceeded,
}

/// Result of one simulated handover.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub scheme: SchemeKind,
    pub marks: Marks,
    /// Microseconds, identical in meaning to the analytic handover delay.
    pub delay: u64,
    /// Microseconds, identical in meaning to the analytic handover interval.
    pub interval: u64,
    pub stream: StreamReport,
    pub trace: Trace,
}

/// Runs one scheme on its canonical sequences.
pub fn run_scheme(cfg: &RunConfig, scheme: SchemeKind) -> Result<SimOutcome, SimError> {
    run_scheme_with(cfg, scheme, &SequenceSet::for_scheme(cfg, scheme))
}

/// Runs one scheme on a caller-provided sequence set (e.g. loaded from
/// files). The set's topology must have been built for the same scheme.
pub fn run_scheme_with(
    cfg: &RunConfig,
    scheme: SchemeKind,
    set: &SequenceSet,
) -> Result<SimOutcome, SimError> {
    let mut sim = Sim::new(cfg, scheme, set);
    sim.launch_step(Step::SessionRequest, 0)?;
    if cfg.sim.stream_enabled {
        sim.q.schedule(0, Ev::StreamEmit);
    }
    let mut pops = 0usize;
    while let Some((_, ev)) = sim.q.pop() {
        pops += 1;
        if pops > EVENT_LIMIT {
            return Err(SimError::EventLimitExceeded);
        }
        sim.dispatch(ev)?;
    }
    sim.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Deliver {
        step: Step,
        instance: u8,
        chain: u8,
        pos: u16,
    },
    StreamEmit,
    StreamHop {
        id: u32,
        node: NodeId,
    },
    /// Encapsulated crossing from the previous to the new tunnel endpoint.
    TunnelHop {
        id: u32,
    },
}

struct ActiveStep {
    step: Step,
    instance: u8,
    gating_left: usize,
}

#[derive(Default)]
struct PhaseFlags {
    tunnel_done: bool,
    routability_done: bool,
    accept_done: bool,
    activation_done: bool,
    tunnel_probe_launched: bool,
    binding_launched: bool,
}

/// In-flight mobility datagrams, keyed by exchange.
#[derive(Default)]
struct MobFrames {
    coti: Option<Vec<u8>>,
    cot: Option<Vec<u8>>,
    hoti: Option<Vec<u8>>,
    hot: Option<Vec<u8>>,
    bu: Option<Vec<u8>>,
    back: Option<Vec<u8>>,
}

impl MobFrames {
    fn for_name(&self, name: &str) -> Option<&Vec<u8>> {
        // Longer prefixes first: "Mip_CareOfTest" is a prefix of the inits.
        if name.starts_with("Mip_CareOfTestInit") {
            self.coti.as_ref()
        } else if name.starts_with("Mip_CareOfTest") {
            self.cot.as_ref()
        } else if name.starts_with("Mip_HomeTestInit") {
            self.hoti.as_ref()
        } else if name.starts_with("Mip_HomeTest") {
            self.hot.as_ref()
        } else if name.starts_with("Mip_BindingUpdate") {
            self.bu.as_ref()
        } else if name.starts_with("Mip_BindingAck") {
            self.back.as_ref()
        } else {
            None
        }
    }
}

struct Sim<'a> {
    cfg: &'a RunConfig,
    scheme: SchemeKind,
    set: &'a SequenceSet,
    q: EventQueue<Ev>,
    trace: Trace,

    ue: UeState,
    dn: DnState,
    tunnel: TunnelState,
    prev_session_released: bool,

    dn_addr: Ipv6Addr,
    new_prefix: Ipv6Prefix,
    isgw_transport: [Ipv6Addr; 2],

    coti_cookie: u64,
    hoti_cookie: u64,
    care_token: u64,
    home_token: u64,
    bu_sequence: u16,
    teid_downlink: u32,
    mob: MobFrames,

    running: Vec<ActiveStep>,
    completed: Vec<(Step, u8)>,
    flags: PhaseFlags,
    probes_expected: usize,
    probe_arrivals: Vec<Time>,
    gate_open: bool,
    gate_queue: Vec<u32>,

    packets: Vec<PacketState>,
    report: StreamReport,
    stream_stopped: bool,
}

/// Message indices of a sequence grouped by chain, preserving order.
fn chain_plan(seq: &StepSequence) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, m) in seq.messages.iter().enumerate() {
        let c = m.chain as usize;
        while out.len() <= c {
            out.push(Vec::new());
        }
        out[c].push(i);
    }
    out
}

fn is_ack(m: &SeqMessage) -> bool {
    !m.gating && m.costed
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a RunConfig, scheme: SchemeKind, set: &'a SequenceSet) -> Sim<'a> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed);
        let coti_cookie = rng.gen();
        let hoti_cookie = rng.gen();
        let care_token = rng.gen();
        let home_token = rng.gen();
        let bu_sequence = rng.gen();
        let teid_downlink = loop {
            let t: u32 = rng.gen();
            if t != 0 {
                break t;
            }
        };

        let prev_prefix: Ipv6Prefix = PREV_PREFIX.parse().unwrap();
        let home_addr = prev_prefix.autoconfigure(UE_IID);
        let probes_expected = if scheme == SchemeKind::HybridMipv6Gtp {
            2
        } else {
            1
        };

        Sim {
            cfg,
            scheme,
            set,
            q: EventQueue::new(),
            trace: Trace::default(),
            ue: UeState {
                home_addr,
                care_of: None,
                care_token: None,
                home_token: None,
            },
            dn: DnState {
                binding: home_addr,
                binding_is_care_of: false,
            },
            tunnel: TunnelState::Idle,
            prev_session_released: false,
            dn_addr: DN_ADDR.parse().unwrap(),
            new_prefix: NEW_PREFIX.parse().unwrap(),
            isgw_transport: [
                ISGW_PREV_TRANSPORT.parse().unwrap(),
                ISGW_NEW_TRANSPORT.parse().unwrap(),
            ],
            coti_cookie,
            hoti_cookie,
            care_token,
            home_token,
            bu_sequence,
            teid_downlink,
            mob: MobFrames::default(),
            running: Vec::new(),
            completed: Vec::new(),
            flags: PhaseFlags::default(),
            probes_expected,
            probe_arrivals: Vec::new(),
            gate_open: false,
            gate_queue: Vec::new(),
            packets: Vec::new(),
            report: StreamReport::default(),
            stream_stopped: false,
        }
    }

    fn hop(&self, m: &SeqMessage) -> u64 {
        self.cfg.delays.link_delay(m.link)
            + self
                .cfg
                .delays
                .processing_delay(self.set.topo.role(m.dst))
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Deliver {
                step,
                instance,
                chain,
                pos,
            } => self.on_deliver(step, instance, chain, pos),
            Ev::StreamEmit => self.on_stream_emit(),
            Ev::StreamHop { id, node } => self.on_stream_hop(id as usize, node),
            Ev::TunnelHop { id } => self.on_tunnel_hop(id as usize),
        }
    }

    fn launch_step(&mut self, step: Step, instance: u8) -> Result<(), SimError> {
        let set = self.set;
        let seq = set.get(step).ok_or_else(|| {
            SimError::MissingContext(format!("no sequence for step '{}'", step.label()))
        })?;
        match step {
            Step::TunnelSetup => self.tunnel = TunnelState::Requested,
            Step::ReturnRoutability => self.build_test_inits()?,
            Step::BindingUpdate => self.build_binding_update()?,
            _ => {}
        }
        self.running.push(ActiveStep {
            step,
            instance,
            gating_left: seq.messages.iter().filter(|m| m.gating).count(),
        });
        let now = self.q.now();
        for (c, chain) in chain_plan(seq).iter().enumerate() {
            if let Some(&first) = chain.first() {
                let at = now + self.hop(&seq.messages[first]);
                self.q.schedule(
                    at,
                    Ev::Deliver {
                        step,
                        instance,
                        chain: c as u8,
                        pos: 0,
                    },
                );
            }
        }
        Ok(())
    }

    fn on_deliver(&mut self, step: Step, instance: u8, chain: u8, pos: u16) -> Result<(), SimError> {
        let set = self.set;
        let seq = set.get(step).expect("launched step has a sequence");
        let plan = chain_plan(seq);
        let chain_list = &plan[chain as usize];
        let msg = &seq.messages[chain_list[pos as usize]];
        let now = self.q.now();

        let wire_len = self.message_effects(step, instance, chain, pos, msg)?;
        self.trace.push(
            now,
            TraceEvent::Message {
                step,
                name: msg.name.clone(),
                src: msg.src,
                dst: msg.dst,
                link: msg.link,
                wire_len,
            },
        );

        let mut step_done = false;
        if msg.gating {
            let active = self
                .running
                .iter_mut()
                .find(|a| a.step == step && a.instance == instance)
                .expect("delivery for a step that is not running");
            active.gating_left -= 1;
            if active.gating_left == 0 {
                self.running
                    .retain(|a| !(a.step == step && a.instance == instance));
                self.completed.push((step, instance));
                step_done = true;
            }
        }

        if !is_ack(msg) {
            // Advance the chain: branch off any immediate acks, then schedule
            // the next spine (or follow-on) message.
            let mut p = pos as usize + 1;
            while p < chain_list.len() {
                let next = &seq.messages[chain_list[p]];
                self.q.schedule(
                    now + self.hop(next),
                    Ev::Deliver {
                        step,
                        instance,
                        chain,
                        pos: p as u16,
                    },
                );
                if !is_ack(next) {
                    break;
                }
                p += 1;
            }
        }

        if step_done {
            self.on_step_complete(step, instance)?;
        }
        Ok(())
    }

    fn on_step_complete(&mut self, step: Step, instance: u8) -> Result<(), SimError> {
        use SchemeKind::*;
        let now = self.q.now();
        match step {
            Step::SessionRequest => self.launch_step(Step::PolicySetup, 0)?,
            Step::PolicySetup => match self.scheme {
                Baseline3gpp => self.launch_step(Step::SecondaryAuth, 0)?,
                _ => self.launch_step(Step::PrefixAdvert, 0)?,
            },
            Step::SecondaryAuth => self.launch_step(Step::SessionAccept, 0)?,
            Step::PrefixAdvert => {
                // The UE now holds the new-slice prefix: this is the moment
                // the previous path stops being the session's anchor.
                self.trace.marks.last_downlink_prev = now;
                if self.scheme.uses_tunnel() {
                    self.launch_step(Step::TunnelSetup, 0)?;
                }
                if self.scheme.uses_binding() {
                    self.launch_step(Step::ReturnRoutability, 0)?;
                }
                self.launch_step(Step::SessionAccept, 0)?;
            }
            Step::SessionAccept => {
                self.flags.accept_done = true;
                self.launch_step(Step::UserPlaneActivation, 0)?;
                self.try_binding_update()?;
            }
            Step::UserPlaneActivation => {
                self.flags.activation_done = true;
                match self.scheme {
                    Baseline3gpp => self.launch_step(Step::AddressConfig, 0)?,
                    _ => self.try_tunnel_probe()?,
                }
            }
            Step::AddressConfig => self.launch_step(Step::Delivery, 0)?,
            Step::TunnelSetup => {
                self.flags.tunnel_done = true;
                self.try_tunnel_probe()?;
            }
            Step::ReturnRoutability => {
                self.flags.routability_done = true;
                self.try_binding_update()?;
            }
            Step::BindingUpdate => {
                let probe = if self.scheme == HybridMipv6Gtp { 1 } else { 0 };
                self.launch_step(Step::Delivery, probe)?;
                if self.scheme == HybridMipv6Gtp {
                    self.launch_step(Step::PrevRelease, 0)?;
                }
            }
            Step::Delivery | Step::PrevRelease => {}
        }
        let _ = instance;
        Ok(())
    }

    /// Tunnel-branch probe: needs both the tunnel legs and the activated
    /// new-slice downlink.
    fn try_tunnel_probe(&mut self) -> Result<(), SimError> {
        if self.scheme.uses_tunnel()
            && self.flags.tunnel_done
            && self.flags.activation_done
            && !self.flags.tunnel_probe_launched
        {
            self.flags.tunnel_probe_launched = true;
            self.launch_step(Step::Delivery, 0)?;
        }
        Ok(())
    }

    /// Binding update: needs the routability tokens and the session accept;
    /// it does not wait for the downlink activation.
    fn try_binding_update(&mut self) -> Result<(), SimError> {
        if self.scheme.uses_binding()
            && self.flags.routability_done
            && self.flags.accept_done
            && !self.flags.binding_launched
        {
            self.flags.binding_launched = true;
            self.launch_step(Step::BindingUpdate, 0)?;
        }
        Ok(())
    }

    fn message_effects(
        &mut self,
        step: Step,
        instance: u8,
        chain: u8,
        pos: u16,
        msg: &SeqMessage,
    ) -> Result<usize, SimError> {
        let topo = &self.set.topo;
        let now = self.q.now();

        // Mobility datagrams travel as real frames; capture one per hop.
        let mob = self.mob.for_name(&msg.name).cloned();
        let mut wire_len = mob.as_ref().map_or(0, |b| b.len());
        if let Some(b) = &mob {
            self.trace.capture(now, b.clone());
        }

        match step {
            Step::SessionRequest
                if self.scheme == SchemeKind::Baseline3gpp && chain == 0 && pos == 0 =>
            {
                // Release-first baseline: the serving AMF tears down the
                // previous session as soon as it takes the request.
                self.launch_step(Step::PrevRelease, 0)?;
            }
            Step::PrefixAdvert | Step::AddressConfig if msg.dst == topo.ue => {
                let wire = self.new_prefix.to_wire();
                let prefix = Ipv6Prefix::from_wire(&wire)?;
                self.ue.care_of = Some(prefix.autoconfigure(UE_IID));
                wire_len = wire.len();
            }
            Step::TunnelSetup if msg.name.starts_with("Tunnel_Endpoint_Establishment") => {
                // 4-byte TEID payload; the ack reaching the previous-slice
                // host assigns the downlink TEID used for G-PDUs.
                wire_len = 4;
                if Some(msg.dst) == topo.tunnel_host[SliceId::Previous.index()] {
                    self.tunnel = TunnelState::Established {
                        teid: self.teid_downlink,
                    };
                    self.trace.push(
                        now,
                        TraceEvent::TunnelEstablished {
                            teid: self.teid_downlink,
                        },
                    );
                }
            }
            Step::ReturnRoutability => self.routability_effects(msg, mob.as_deref())?,
            Step::BindingUpdate => self.binding_effects(msg, mob.as_deref())?,
            Step::Delivery if msg.dst == topo.ue => {
                wire_len = self.probe_delivered(instance)?;
            }
            Step::PrevRelease if topo.role(msg.dst).is_upf() => match self.scheme {
                SchemeKind::Baseline3gpp => {
                    self.prev_session_released = true;
                    self.trace.push(
                        now,
                        TraceEvent::SessionReleased {
                            slice: SliceId::Previous,
                        },
                    );
                }
                SchemeKind::HybridMipv6Gtp => {
                    self.tunnel = TunnelState::Released;
                    self.trace.push(now, TraceEvent::TunnelReleased);
                }
                _ => {}
            },
            _ => {}
        }
        Ok(wire_len)
    }

    fn build_test_inits(&mut self) -> Result<(), SimError> {
        let care_of = self
            .ue
            .care_of
            .ok_or_else(|| SimError::MissingContext("care-of address".into()))?;
        let coti = MobilityMessage::CareOfTestInit {
            cookie: self.coti_cookie,
        };
        self.mob.coti = Some(ipv6::datagram(
            care_of,
            self.dn_addr,
            MOBILITY_PROTO,
            &coti.encode(),
        ));
        let hoti = MobilityMessage::HomeTestInit {
            cookie: self.hoti_cookie,
        };
        self.mob.hoti = Some(ipv6::datagram(
            self.ue.home_addr,
            self.dn_addr,
            MOBILITY_PROTO,
            &hoti.encode(),
        ));
        Ok(())
    }

    fn routability_effects(&mut self, msg: &SeqMessage, mob: Option<&[u8]>) -> Result<(), SimError> {
        let topo = &self.set.topo;
        if msg.dst == topo.dn {
            let d = ipv6::decode_datagram(
                mob.ok_or_else(|| SimError::MissingContext("routability datagram".into()))?,
            )?;
            match MobilityMessage::decode(d.payload)? {
                MobilityMessage::CareOfTestInit { cookie } => {
                    let cot = MobilityMessage::CareOfTest {
                        nonce_index: 1,
                        cookie,
                        token: self.care_token,
                    };
                    self.mob.cot = Some(ipv6::datagram(
                        self.dn_addr,
                        d.src,
                        MOBILITY_PROTO,
                        &cot.encode(),
                    ));
                }
                MobilityMessage::HomeTestInit { cookie } => {
                    let hot = MobilityMessage::HomeTest {
                        nonce_index: 2,
                        cookie,
                        token: self.home_token,
                    };
                    self.mob.hot = Some(ipv6::datagram(
                        self.dn_addr,
                        d.src,
                        MOBILITY_PROTO,
                        &hot.encode(),
                    ));
                }
                other => {
                    return Err(SimError::MissingContext(format!(
                        "unexpected mobility message at DN: {other:?}"
                    )))
                }
            }
        } else if msg.dst == topo.ue {
            let d = ipv6::decode_datagram(
                mob.ok_or_else(|| SimError::MissingContext("routability datagram".into()))?,
            )?;
            match MobilityMessage::decode(d.payload)? {
                MobilityMessage::CareOfTest { cookie, token, .. } => {
                    if cookie != self.coti_cookie {
                        return Err(SimError::CookieMismatch);
                    }
                    self.ue.care_token = Some(token);
                }
                MobilityMessage::HomeTest { cookie, token, .. } => {
                    if cookie != self.hoti_cookie {
                        return Err(SimError::CookieMismatch);
                    }
                    self.ue.home_token = Some(token);
                }
                other => {
                    return Err(SimError::MissingContext(format!(
                        "unexpected mobility message at UE: {other:?}"
                    )))
                }
            }
        }
        Ok(())
    }

    fn build_binding_update(&mut self) -> Result<(), SimError> {
        let care_of = self
            .ue
            .care_of
            .ok_or_else(|| SimError::MissingContext("care-of address".into()))?;
        let home = self
            .ue
            .home_token
            .ok_or_else(|| SimError::MissingContext("home keygen token".into()))?;
        let care = self
            .ue
            .care_token
            .ok_or_else(|| SimError::MissingContext("care-of keygen token".into()))?;
        let bu = MobilityMessage::BindingUpdate {
            sequence: self.bu_sequence,
            lifetime: BINDING_LIFETIME,
            auth: home ^ care,
        };
        self.mob.bu = Some(ipv6::datagram(
            care_of,
            self.dn_addr,
            MOBILITY_PROTO,
            &bu.encode(),
        ));
        Ok(())
    }

    fn binding_effects(&mut self, msg: &SeqMessage, mob: Option<&[u8]>) -> Result<(), SimError> {
        let topo = &self.set.topo;
        let now = self.q.now();
        if msg.dst == topo.dn {
            let d = ipv6::decode_datagram(
                mob.ok_or_else(|| SimError::MissingContext("binding datagram".into()))?,
            )?;
            let MobilityMessage::BindingUpdate { sequence, auth, .. } =
                MobilityMessage::decode(d.payload)?
            else {
                return Err(SimError::MissingContext(
                    "expected a binding update at the DN".into(),
                ));
            };
            if auth != self.home_token ^ self.care_token {
                return Err(SimError::AuthMismatch);
            }
            self.dn.binding = d.src;
            self.dn.binding_is_care_of = true;
            self.trace
                .push(now, TraceEvent::BindingRegistered { sequence });
            let back = MobilityMessage::BindingAck {
                status: 0,
                sequence,
                lifetime: BINDING_LIFETIME,
            };
            self.mob.back = Some(ipv6::datagram(
                self.dn_addr,
                d.src,
                MOBILITY_PROTO,
                &back.encode(),
            ));
        } else if msg.dst == topo.ue {
            let d = ipv6::decode_datagram(
                mob.ok_or_else(|| SimError::MissingContext("binding datagram".into()))?,
            )?;
            let MobilityMessage::BindingAck { sequence, .. } = MobilityMessage::decode(d.payload)?
            else {
                return Err(SimError::MissingContext(
                    "expected a binding ack at the UE".into(),
                ));
            };
            if sequence != self.bu_sequence {
                return Err(SimError::BadSequenceEcho);
            }
        }
        Ok(())
    }

    /// A first-delivery probe reached the UE: stamp the mark, open the
    /// new-chain delivery gate, and stop the stream after the last probe.
    fn probe_delivered(&mut self, instance: u8) -> Result<usize, SimError> {
        let now = self.q.now();
        self.probe_arrivals.push(now);
        let dst = self.ue.care_of.unwrap_or(self.ue.home_addr);
        let frame = ipv6::datagram(
            self.dn_addr,
            dst,
            ipv6::UDP_PROTO,
            &ipv6::udp_datagram(PROBE_PORT, PROBE_PORT, &[instance]),
        );
        let len = frame.len();
        self.trace.capture(now, frame);
        if self.probe_arrivals.len() == 1 {
            self.gate_open = true;
            let ue = self.set.topo.ue;
            let at = now
                + self.cfg.delays.t_upf_upf
                + self.cfg.delays.processing_delay(self.set.topo.role(ue));
            for id in std::mem::take(&mut self.gate_queue) {
                self.q.schedule(at, Ev::StreamHop { id, node: ue });
            }
        }
        if self.probe_arrivals.len() == self.probes_expected {
            self.stream_stopped = true;
        }
        Ok(len)
    }

    fn on_stream_emit(&mut self) -> Result<(), SimError> {
        if self.stream_stopped {
            return Ok(());
        }
        let topo = &self.set.topo;
        let now = self.q.now();
        let id = self.packets.len() as u32;
        let to_care_of = self.dn.binding_is_care_of;
        let inner = ipv6::datagram(
            self.dn_addr,
            self.dn.binding,
            ipv6::UDP_PROTO,
            &ipv6::udp_datagram(STREAM_PORT, STREAM_PORT, &id.to_be_bytes()),
        );
        self.packets.push(PacketState {
            id,
            to_care_of,
            inner,
            outer: None,
            via: if to_care_of {
                DeliveryPath::NewPath
            } else {
                DeliveryPath::PreviousPath
            },
        });
        self.report.emitted += 1;
        self.trace.push(now, TraceEvent::PacketEmitted { id, to_care_of });

        let slice = if to_care_of {
            SliceId::New
        } else {
            SliceId::Previous
        };
        let gw = topo.gw(slice);
        let at = now + self.cfg.delays.t_gw_dn + self.cfg.delays.processing_delay(topo.role(gw));
        self.q.schedule(at, Ev::StreamHop { id, node: gw });
        self.q
            .schedule(now + self.cfg.sim.stream_interval, Ev::StreamEmit);
        Ok(())
    }

    fn on_stream_hop(&mut self, id: usize, node: NodeId) -> Result<(), SimError> {
        let topo = &self.set.topo;
        let now = self.q.now();

        if node == topo.ue {
            let p = &self.packets[id];
            self.report.count_delivery(p.via);
            self.trace.push(
                now,
                TraceEvent::PacketDelivered {
                    id: p.id,
                    via: p.via,
                },
            );
            let inner = p.inner.clone();
            self.trace.capture(now, inner);
            return Ok(());
        }

        let (slice, pos) = topo
            .chain_position(node)
            .ok_or_else(|| SimError::MissingContext("stream packet off the chains".into()))?;
        match slice {
            SliceId::Previous => {
                if self.prev_session_released && node == topo.gw(SliceId::Previous) {
                    self.report.dropped += 1;
                    self.trace
                        .push(now, TraceEvent::PacketDropped { id: id as u32, at: node });
                    return Ok(());
                }
                if Some(node) == topo.tunnel_host[SliceId::Previous.index()] {
                    if let TunnelState::Established { teid } = self.tunnel {
                        self.encapsulate(id, teid)?;
                        return Ok(());
                    }
                    // No (or no longer a) tunnel: drain down the previous
                    // chain as ordinary pre-handover traffic.
                }
                self.forward_down(id, SliceId::Previous, pos);
            }
            SliceId::New => {
                if pos == 0 {
                    self.deliver_or_gate(id);
                } else {
                    self.forward_down(id, SliceId::New, pos);
                }
            }
        }
        Ok(())
    }

    /// Schedules the next downlink hop from chain position `pos` (toward the
    /// UE at position 0).
    fn forward_down(&mut self, id: usize, slice: SliceId, pos: usize) {
        let topo = &self.set.topo;
        let now = self.q.now();
        if pos == 0 {
            let at = now
                + self.cfg.delays.t_upf_upf
                + self.cfg.delays.processing_delay(topo.role(topo.ue));
            self.q.schedule(
                at,
                Ev::StreamHop {
                    id: id as u32,
                    node: topo.ue,
                },
            );
        } else {
            let next = topo.upf_chain[slice.index()][pos - 1];
            let at = now
                + self.cfg.delays.t_upf_upf
                + self.cfg.delays.processing_delay(topo.role(next));
            self.q.schedule(
                at,
                Ev::StreamHop {
                    id: id as u32,
                    node: next,
                },
            );
        }
    }

    /// At the new chain's RAN-side end: hold packets until the first probe
    /// has confirmed the downlink, then let everything through.
    fn deliver_or_gate(&mut self, id: usize) {
        let topo = &self.set.topo;
        let now = self.q.now();
        if self.gate_open {
            self.forward_down(id, SliceId::New, 0);
        } else {
            self.gate_queue.push(id as u32);
            self.report.queued += 1;
            self.trace.push(
                now,
                TraceEvent::PacketQueued {
                    id: id as u32,
                    at: topo.upf_chain[SliceId::New.index()][0],
                },
            );
        }
    }

    fn encapsulate(&mut self, id: usize, teid: u32) -> Result<(), SimError> {
        let topo = &self.set.topo;
        let now = self.q.now();
        let isgw_n = topo.tunnel_host[SliceId::New.index()]
            .ok_or(SimError::TunnelNotEstablished)?;
        let gpdu = gtpu::encode_gpdu(teid, &self.packets[id].inner);
        let outer = ipv6::datagram(
            self.isgw_transport[0],
            self.isgw_transport[1],
            ipv6::UDP_PROTO,
            &ipv6::udp_datagram(gtpu::UDP_PORT, gtpu::UDP_PORT, &gpdu),
        );
        self.packets[id].outer = Some(outer);
        self.packets[id].via = DeliveryPath::Tunnel;
        self.report.gpdus_encapsulated += 1;
        self.report.last_encap_at = Some(now);
        let at = now
            + self.cfg.delays.t_upf_upf
            + self.cfg.delays.processing_delay(topo.role(isgw_n));
        self.q.schedule(at, Ev::TunnelHop { id: id as u32 });
        Ok(())
    }

    /// Decapsulation at the new-slice tunnel endpoint.
    fn on_tunnel_hop(&mut self, id: usize) -> Result<(), SimError> {
        let set = self.set;
        let now = self.q.now();
        let isgw_n = set.topo.tunnel_host[SliceId::New.index()]
            .ok_or(SimError::TunnelNotEstablished)?;
        let outer = self.packets[id]
            .outer
            .take()
            .ok_or(SimError::TunnelNotEstablished)?;
        self.trace.capture(now, outer.clone());

        let d = ipv6::decode_datagram(&outer)?;
        let (_, dport, udp_payload) = ipv6::decode_udp(d.payload)?;
        if dport != gtpu::UDP_PORT {
            return Err(SimError::Decode(WireError::BadDatagram));
        }
        let (teid, inner) = gtpu::decode_gpdu(udp_payload)?;
        if teid != self.teid_downlink {
            return Err(SimError::TeidMismatch {
                expected: self.teid_downlink,
                got: teid,
            });
        }
        debug_assert_eq!(inner, &self.packets[id].inner[..]);

        let (slice, pos) = set
            .topo
            .chain_position(isgw_n)
            .ok_or(SimError::TunnelNotEstablished)?;
        debug_assert_eq!(slice, SliceId::New);
        if pos == 0 {
            self.deliver_or_gate(id);
        } else {
            self.forward_down(id, SliceId::New, pos);
        }
        Ok(())
    }

    /// State dump for a stalled run: what never finished, what was mid-flight
    /// with how many gating messages outstanding, and which phases latched.
    fn snapshot(&self, pending: &[&str]) -> String {
        let in_flight: Vec<String> = self
            .running
            .iter()
            .map(|a| format!("{} ({} gating left)", a.step.label(), a.gating_left))
            .collect();
        let f = &self.flags;
        let phases = [
            ("tunnel", f.tunnel_done),
            ("routability", f.routability_done),
            ("accept", f.accept_done),
            ("activation", f.activation_done),
        ]
        .iter()
        .filter(|(_, done)| *done)
        .map(|(name, _)| *name)
        .collect::<Vec<_>>()
        .join(", ");
        format!(
            "stalled at t={} us: pending [{}], in flight [{}], phases done [{}], \
             {} of {} delivery probes arrived",
            self.q.now(),
            pending.join(", "),
            in_flight.join(", "),
            phases,
            self.probe_arrivals.len(),
            self.probes_expected
        )
    }

    fn finish(mut self) -> Result<SimOutcome, SimError> {
        let pending: Vec<&str> = executed_steps(self.scheme)
            .into_iter()
            .filter(|s| !self.completed.contains(&(*s, 0)))
            .map(|s| s.label())
            .collect();
        if !pending.is_empty() || self.probe_arrivals.len() != self.probes_expected {
            return Err(SimError::IncompleteRun(self.snapshot(&pending)));
        }
        let first = *self.probe_arrivals.iter().min().unwrap();
        let last = *self.probe_arrivals.iter().max().unwrap();
        self.trace.marks.first_downlink_new = Some(first);
        self.trace.marks.isho_end = Some(last);
        let marks = self.trace.marks;
        Ok(SimOutcome {
            scheme: self.scheme,
            delay: marks.handover_delay().unwrap(),
            interval: marks.handover_interval().unwrap(),
            marks,
            stream: self.report,
            trace: self.trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;
    use crate::types::Mipv6DelayVariant;

    fn outcome(scheme: SchemeKind) -> SimOutcome {
        run_scheme(&RunConfig::default(), scheme).unwrap()
    }

    #[test]
    fn sim_matches_analytic_at_defaults() {
        let cfg = RunConfig::default();
        let d = analytic::compute_step_delays(&cfg);
        for scheme in SchemeKind::ALL {
            let out = outcome(scheme);
            let variant = Mipv6DelayVariant::MessageFlow;
            assert_eq!(
                out.delay,
                analytic::handover_delay(scheme, &d, variant),
                "delay, scheme {scheme}"
            );
            assert_eq!(
                out.interval,
                analytic::handover_interval(scheme, &d, variant),
                "interval, scheme {scheme}"
            );
        }
    }

    #[test]
    fn marks_at_defaults() {
        let base = outcome(SchemeKind::Baseline3gpp);
        assert_eq!(base.marks.last_downlink_prev, 0);
        assert_eq!(base.marks.first_downlink_new, Some(156_000));

        let gtp = outcome(SchemeKind::Gtpv1U);
        assert_eq!(gtp.marks.last_downlink_prev, 47_000);
        assert_eq!(gtp.marks.first_downlink_new, Some(90_000));
        assert_eq!(gtp.marks.isho_end, Some(90_000));

        let hyb = outcome(SchemeKind::HybridMipv6Gtp);
        assert_eq!(hyb.marks.first_downlink_new, Some(90_000));
        assert_eq!(hyb.marks.isho_end, Some(142_000));
        assert_eq!(hyb.delay, 43_000);
        assert_eq!(hyb.interval, 142_000);
    }

    #[test]
    fn baseline_stream_breaks_on_release() {
        let out = outcome(SchemeKind::Baseline3gpp);
        assert_eq!(out.stream.emitted, 16);
        assert_eq!(out.stream.delivered_prev, 1);
        assert_eq!(out.stream.dropped, 15);
        assert_eq!(out.stream.delivered_tunnel, 0);
        assert_eq!(out.stream.delivered_new, 0);
        assert!(out
            .trace
            .entries
            .iter()
            .any(|(at, e)| matches!(e, TraceEvent::SessionReleased { .. }) && *at == 12_000));
    }

    #[test]
    fn gtp_stream_switches_into_the_tunnel() {
        let out = outcome(SchemeKind::Gtpv1U);
        assert_eq!(out.stream.emitted, 10);
        assert_eq!(out.stream.delivered_prev, 6);
        assert_eq!(out.stream.delivered_tunnel, 4);
        assert_eq!(out.stream.dropped, 0);
        assert_eq!(out.stream.queued, 1);
        assert_eq!(out.stream.gpdus_encapsulated, 4);
        assert_eq!(out.stream.last_encap_at, Some(105_000));
        let est = out
            .trace
            .entries
            .iter()
            .find_map(|(at, e)| match e {
                TraceEvent::TunnelEstablished { teid } => Some((*at, *teid)),
                _ => None,
            })
            .expect("tunnel established");
        assert_eq!(est.0, 67_000);

        // Every captured G-PDU decodes back to the emitted home-addressed
        // datagram.
        let mut gpdus = 0;
        for (_, frame) in &out.trace.frames {
            let Ok(d) = ipv6::decode_datagram(frame) else {
                continue;
            };
            let Ok((sport, dport, payload)) = ipv6::decode_udp(d.payload) else {
                continue;
            };
            if (sport, dport) != (gtpu::UDP_PORT, gtpu::UDP_PORT) {
                continue;
            }
            let (teid, inner) = gtpu::decode_gpdu(payload).unwrap();
            assert_eq!(teid, est.1);
            let inner = ipv6::decode_datagram(inner).unwrap();
            assert_eq!(inner.dst.to_string(), "2001:db8:0:1::1001");
            gpdus += 1;
        }
        assert_eq!(gpdus, 4);
        assert_eq!(out.trace.frames.len(), 15);
    }

    #[test]
    fn mipv6_stream_flips_after_binding() {
        let out = outcome(SchemeKind::Mipv6RrBu);
        assert_eq!(out.stream.emitted, 15);
        assert_eq!(out.stream.delivered_prev, 11);
        assert_eq!(out.stream.delivered_new, 4);
        assert_eq!(out.stream.delivered_tunnel, 0);
        assert_eq!(out.stream.queued, 2);
        assert_eq!(out.stream.dropped, 0);

        // The binding registers only after both routability tests returned.
        let time_of = |pred: &dyn Fn(&TraceEvent) -> bool| {
            out.trace
                .entries
                .iter()
                .find(|(_, e)| pred(e))
                .map(|(at, _)| *at)
                .unwrap()
        };
        let ue = NodeId(0);
        let cot = time_of(&|e| {
            matches!(e, TraceEvent::Message { name, dst, .. }
                if name == "Mip_CareOfTest" && *dst == ue)
        });
        let hot = time_of(&|e| {
            matches!(e, TraceEvent::Message { name, dst, .. }
                if name == "Mip_HomeTest" && *dst == ue)
        });
        let bound = time_of(&|e| matches!(e, TraceEvent::BindingRegistered { .. }));
        assert!(bound > cot && bound > hot);
        assert_eq!(out.trace.frames.len(), 40);
    }

    #[test]
    fn hybrid_bridges_then_releases() {
        let out = outcome(SchemeKind::HybridMipv6Gtp);
        assert_eq!(out.stream.emitted, 15);
        assert_eq!(out.stream.delivered_prev, 6);
        assert_eq!(out.stream.delivered_tunnel, 5);
        assert_eq!(out.stream.delivered_new, 4);
        assert_eq!(out.stream.queued, 1);
        assert_eq!(out.stream.dropped, 0);
        assert_eq!(out.stream.gpdus_encapsulated, 5);

        let released_at = out
            .trace
            .entries
            .iter()
            .find_map(|(at, e)| matches!(e, TraceEvent::TunnelReleased).then_some(*at))
            .expect("tunnel released");
        assert_eq!(released_at, 129_000);
        assert!(out.stream.last_encap_at.unwrap() < released_at);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = RunConfig::default();
        for scheme in SchemeKind::ALL {
            let a = run_scheme(&cfg, scheme).unwrap();
            let b = run_scheme(&cfg, scheme).unwrap();
            assert_eq!(a.delay, b.delay);
            assert_eq!(a.trace.frames, b.trace.frames);
            assert_eq!(a.stream, b.stream);
        }
    }

    #[test]
    fn stream_can_be_disabled() {
        let mut cfg = RunConfig::default();
        cfg.sim.stream_enabled = false;
        let out = run_scheme(&cfg, SchemeKind::Gtpv1U).unwrap();
        assert_eq!(out.stream, StreamReport::default());
        assert_eq!(out.delay, 43_000);
    }

    #[test]
    fn seed_changes_wire_material_but_not_timing() {
        let mut cfg = RunConfig::default();
        let a = run_scheme(&cfg, SchemeKind::Mipv6RrBu).unwrap();
        cfg.sim.seed = 99;
        let b = run_scheme(&cfg, SchemeKind::Mipv6RrBu).unwrap();
        assert_eq!(a.delay, b.delay);
        assert_eq!(a.interval, b.interval);
        assert_ne!(a.trace.frames, b.trace.frames);
    }

    #[test]
    fn matches_analytic_across_random_configurations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for round in 0..8 {
            let mut cfg = RunConfig::default();
            cfg.delays.t_nf_nf = rng.gen_range(0..=10_000);
            cfg.delays.t_ue_amf = rng.gen_range(0..=10_000);
            cfg.delays.t_ran_hamf = rng.gen_range(0..=10_000);
            cfg.delays.t_gw_dn = rng.gen_range(0..=10_000);
            cfg.delays.t_upf_upf = rng.gen_range(0..=10_000);
            cfg.delays.t_smf_upf = rng.gen_range(0..=10_000);
            cfg.delays.pd_nf = rng.gen_range(0..=10_000);
            cfg.delays.pd_nonsba = rng.gen_range(0..=10_000);
            cfg.delays.pd_upf = rng.gen_range(0..=10_000);
            cfg.resources.n_upf_prev = rng.gen_range(1..=5);
            cfg.resources.n_upf_new = rng.gen_range(1..=5);
            for scheme in SchemeKind::ALL {
                let set = SequenceSet::for_scheme(&cfg, scheme);
                let ds = analytic::step_delays_from(&set, &cfg.delays);
                let out = run_scheme_with(&cfg, scheme, &set).unwrap();
                let variant = Mipv6DelayVariant::MessageFlow;
                assert_eq!(
                    out.delay,
                    analytic::handover_delay(scheme, &ds, variant),
                    "round {round}, scheme {scheme}"
                );
                assert_eq!(
                    out.interval,
                    analytic::handover_interval(scheme, &ds, variant),
                    "round {round}, scheme {scheme}"
                );
            }
        }
    }
}
