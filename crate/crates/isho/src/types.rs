//! Core vocabulary shared by the analytic model and the simulator: schemes,
//! node roles, link classes, procedure steps, topology, and the parameter
//! groups making up a run configuration.
//!
//! All times are carried internally as integer microseconds so that the
//! analytic composition and the discrete-event simulation can be compared
//! exactly, without float drift.

use std::fmt;

/// Session-continuation scheme. Selects which procedure steps run and how the
/// downlink is re-anchored after the UE moves to the new slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Release-and-reestablish: the previous session is torn down up front and
    /// a full establishment (including secondary authentication and stateless
    /// address configuration) runs in the new slice.
    Baseline3gpp,
    /// Return-routability probing plus an end-to-end binding update move the
    /// session onto the new-slice care-of address.
    Mipv6RrBu,
    /// A GTPv1-U tunnel between inter-slice gateway UPFs carries the original
    /// session's downlink into the new slice; the previous anchor stays.
    Gtpv1U,
    /// The tunnel bridges traffic immediately while the binding update
    /// converges behind it; the previous-slice leg is then released.
    HybridMipv6Gtp,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Baseline3gpp,
        SchemeKind::Mipv6RrBu,
        SchemeKind::Gtpv1U,
        SchemeKind::HybridMipv6Gtp,
    ];

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Baseline3gpp => "3gpp",
            SchemeKind::Mipv6RrBu => "mipv6",
            SchemeKind::Gtpv1U => "gtp",
            SchemeKind::HybridMipv6Gtp => "hybrid",
        }
    }

    pub fn from_name(s: &str) -> Option<SchemeKind> {
        SchemeKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// True for schemes that set up the inter-slice gateway tunnel.
    pub fn uses_tunnel(self) -> bool {
        matches!(self, SchemeKind::Gtpv1U | SchemeKind::HybridMipv6Gtp)
    }

    /// True for schemes that run return routability and a binding update.
    pub fn uses_binding(self) -> bool {
        matches!(self, SchemeKind::Mipv6RrBu | SchemeKind::HybridMipv6Gtp)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed set of node roles. The model has no NF registry or discovery;
/// sequences address nodes through the topology handles directly.
///
/// `Gnb` exists for processing-delay classification but the default topology
/// keeps the RAN leg folded into the UE-side links and instantiates no gNB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Ue,
    Gnb,
    Amf,
    HomeAmf,
    Smf,
    HomeSmf,
    Pcf,
    Udm,
    N3Upf,
    GwUpf,
    IsgwUpf,
    GenericUpf,
    Dn,
}

impl NodeRole {
    /// SBA control-plane functions: these attract `pd_nf` processing delay and
    /// `pc_nf` processing cost. Everything else (UE, DN, gNB, user-plane
    /// functions) is costed with the non-SBA values.
    pub fn is_control_nf(self) -> bool {
        matches!(
            self,
            NodeRole::Amf
                | NodeRole::HomeAmf
                | NodeRole::Smf
                | NodeRole::HomeSmf
                | NodeRole::Pcf
                | NodeRole::Udm
        )
    }

    pub fn is_upf(self) -> bool {
        matches!(
            self,
            NodeRole::N3Upf | NodeRole::GwUpf | NodeRole::IsgwUpf | NodeRole::GenericUpf
        )
    }
}

/// Link classes with individually configurable one-way delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkClass {
    /// Service-based interface between two control-plane NFs.
    SbaNfNf,
    /// UE to serving AMF (NAS transport over the RAN).
    UeAmf,
    /// UE via RAN to the home-slice AMF.
    RanHamf,
    /// Gateway UPF to data network.
    GwDn,
    /// UPF to UPF (intra-chain hop, inter-slice gateway hop, UPF to UE).
    UpfUpf,
    /// SMF to UPF (N4).
    SmfUpf,
}

impl LinkClass {
    pub const ALL: [LinkClass; 6] = [
        LinkClass::SbaNfNf,
        LinkClass::UeAmf,
        LinkClass::RanHamf,
        LinkClass::GwDn,
        LinkClass::UpfUpf,
        LinkClass::SmfUpf,
    ];

    /// Token used in sequence files.
    pub fn token(self) -> &'static str {
        match self {
            LinkClass::SbaNfNf => "nf_nf",
            LinkClass::UeAmf => "ue_amf",
            LinkClass::RanHamf => "ran_hamf",
            LinkClass::GwDn => "gw_dn",
            LinkClass::UpfUpf => "upf_upf",
            LinkClass::SmfUpf => "smf_upf",
        }
    }

    pub fn from_token(s: &str) -> Option<LinkClass> {
        LinkClass::ALL.into_iter().find(|l| l.token() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceId {
    Previous,
    New,
}

impl SliceId {
    pub fn index(self) -> usize {
        match self {
            SliceId::Previous => 0,
            SliceId::New => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SliceId::Previous => "prev",
            SliceId::New => "new",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Procedure steps. A scheme executes a subset of these (see
/// `sequences::steps_for`); `Delivery` is the shared downlink delivery leg
/// used to stamp the first-packet metric in every scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    /// PDU session establishment request up to subscription retrieval.
    SessionRequest,
    /// Policy association and N4 session establishment on the new chain.
    PolicySetup,
    /// New-slice IPv6 prefix advertised to the UE ahead of the accept.
    PrefixAdvert,
    /// Inter-slice gateway tunnel establishment (both N4 legs + handshake).
    TunnelSetup,
    /// Care-of and home test exchanges (return routability).
    ReturnRoutability,
    /// Establishment accept and setup-complete handshake.
    SessionAccept,
    /// Downlink activation on the new-slice gateway.
    UserPlaneActivation,
    /// Binding update / acknowledgement through the new user plane.
    BindingUpdate,
    /// First downlink delivery leg: DN to gateway, down the chain, to the UE.
    Delivery,
    /// Secondary (DN-level) authentication, baseline only.
    SecondaryAuth,
    /// Stateless address configuration via router advertisement, baseline only.
    AddressConfig,
    /// Release of the previous-slice session context.
    PrevRelease,
}

impl Step {
    pub const ALL: [Step; 12] = [
        Step::SessionRequest,
        Step::PolicySetup,
        Step::PrefixAdvert,
        Step::TunnelSetup,
        Step::ReturnRoutability,
        Step::SessionAccept,
        Step::UserPlaneActivation,
        Step::BindingUpdate,
        Step::Delivery,
        Step::SecondaryAuth,
        Step::AddressConfig,
        Step::PrevRelease,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Step::SessionRequest => "session-request",
            Step::PolicySetup => "policy-setup",
            Step::PrefixAdvert => "prefix-advert",
            Step::TunnelSetup => "tunnel-setup",
            Step::ReturnRoutability => "return-routability",
            Step::SessionAccept => "session-accept",
            Step::UserPlaneActivation => "user-plane-activation",
            Step::BindingUpdate => "binding-update",
            Step::Delivery => "delivery",
            Step::SecondaryAuth => "secondary-auth",
            Step::AddressConfig => "address-config",
            Step::PrevRelease => "prev-release",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub role: NodeRole,
    pub slice: Option<SliceId>,
    pub label: String,
}

/// Node inventory for one run: UE, data network, serving AMF shared by both
/// slices, home-slice AMF/SMF pair, UDM, and per-slice SMF/PCF plus a UPF
/// chain ordered from the RAN-side N3 terminator to the DN-side gateway.
///
/// For tunnel-capable schemes one chain UPF per slice additionally hosts the
/// inter-slice gateway function (`tunnel_host`); it keeps its position in the
/// chain and its label, only its role changes to `IsgwUpf`.
#[derive(Debug, Clone)]
pub struct Topology {
    pub nodes: Vec<NodeInfo>,
    pub ue: NodeId,
    pub dn: NodeId,
    pub amf: NodeId,
    pub home_amf: NodeId,
    pub home_smf: NodeId,
    pub udm: NodeId,
    pub smf: [NodeId; 2],
    pub pcf: [NodeId; 2],
    pub upf_chain: [Vec<NodeId>; 2],
    pub tunnel_host: [Option<NodeId>; 2],
}

impl Topology {
    pub fn build(cfg: &RunConfig, scheme: SchemeKind) -> Topology {
        let mut nodes = Vec::new();
        let mut add = |role: NodeRole, slice: Option<SliceId>, label: String| -> NodeId {
            nodes.push(NodeInfo { role, slice, label });
            NodeId(nodes.len() - 1)
        };

        let ue = add(NodeRole::Ue, None, "UE".into());
        let dn = add(NodeRole::Dn, None, "DN".into());
        let amf = add(NodeRole::Amf, None, "AMF".into());
        let home_amf = add(NodeRole::HomeAmf, None, "HomeAMF".into());
        let home_smf = add(NodeRole::HomeSmf, None, "HomeSMF".into());
        let udm = add(NodeRole::Udm, None, "UDM".into());

        let mut smf = [NodeId(0); 2];
        let mut pcf = [NodeId(0); 2];
        let mut upf_chain: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];
        for slice in [SliceId::Previous, SliceId::New] {
            let i = slice.index();
            let tag = slice.tag();
            smf[i] = add(NodeRole::Smf, Some(slice), format!("SMF({tag})"));
            pcf[i] = add(NodeRole::Pcf, Some(slice), format!("PCF({tag})"));
            let n = if slice == SliceId::Previous {
                cfg.resources.n_upf_prev
            } else {
                cfg.resources.n_upf_new
            } as usize;
            for pos in 0..n {
                let role = if pos == 0 {
                    NodeRole::N3Upf
                } else if pos == n - 1 {
                    NodeRole::GwUpf
                } else {
                    NodeRole::GenericUpf
                };
                let label = if pos == 0 {
                    format!("N3UPF({tag})")
                } else if pos == n - 1 {
                    format!("GwUPF({tag})")
                } else {
                    format!("UPF{}({tag})", pos + 1)
                };
                upf_chain[i].push(add(role, Some(slice), label));
            }
        }

        let mut topo = Topology {
            nodes,
            ue,
            dn,
            amf,
            home_amf,
            home_smf,
            udm,
            smf,
            pcf,
            upf_chain,
            tunnel_host: [None, None],
        };

        if scheme.uses_tunnel() {
            // Default placement: previous-slice endpoint on the RAN-side UPF
            // (the whole previous chain sits between it and the gateway), new
            // endpoint co-located with the new gateway.
            let prev_pos = cfg.topology.isgw_pos_prev.unwrap_or(0) as usize;
            let new_chain_len = topo.upf_chain[1].len();
            let new_pos = cfg
                .topology
                .isgw_pos_new
                .map(|p| p as usize)
                .unwrap_or(new_chain_len - 1);
            for (i, pos) in [(0, prev_pos), (1, new_pos)] {
                let id = topo.upf_chain[i][pos];
                topo.nodes[id.0].role = NodeRole::IsgwUpf;
                topo.tunnel_host[i] = Some(id);
            }
        }
        topo
    }

    pub fn role(&self, id: NodeId) -> NodeRole {
        self.nodes[id.0].role
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.0].label
    }

    /// RAN-side chain terminator of a slice.
    pub fn n3(&self, slice: SliceId) -> NodeId {
        self.upf_chain[slice.index()][0]
    }

    /// DN-side gateway of a slice (same node as `n3` for a one-UPF chain).
    pub fn gw(&self, slice: SliceId) -> NodeId {
        *self.upf_chain[slice.index()].last().unwrap()
    }

    pub fn by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.label == label)
            .map(NodeId)
    }

    /// Position of a node in its slice's UPF chain, if it is a chain UPF.
    pub fn chain_position(&self, id: NodeId) -> Option<(SliceId, usize)> {
        for slice in [SliceId::Previous, SliceId::New] {
            if let Some(pos) = self.upf_chain[slice.index()].iter().position(|&n| n == id) {
                return Some((slice, pos));
            }
        }
        None
    }
}

/// One-way link delays and per-node processing delays, all in microseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayParams {
    pub t_nf_nf: u64,
    pub t_ue_amf: u64,
    pub t_ran_hamf: u64,
    pub t_gw_dn: u64,
    pub t_upf_upf: u64,
    pub t_smf_upf: u64,
    pub pd_nf: u64,
    pub pd_nonsba: u64,
    pub pd_upf: u64,
    /// Residual correspondent-side latency; only enters the literal MIPv6
    /// delay form.
    pub residual_latency: u64,
}

impl Default for DelayParams {
    fn default() -> Self {
        DelayParams {
            t_nf_nf: 1_000,
            t_ue_amf: 5_000,
            t_ran_hamf: 3_000,
            t_gw_dn: 5_000,
            t_upf_upf: 2_000,
            t_smf_upf: 2_000,
            pd_nf: 1_000,
            pd_nonsba: 2_000,
            pd_upf: 2_000,
            residual_latency: 0,
        }
    }
}

impl DelayParams {
    pub fn link_delay(&self, link: LinkClass) -> u64 {
        match link {
            LinkClass::SbaNfNf => self.t_nf_nf,
            LinkClass::UeAmf => self.t_ue_amf,
            LinkClass::RanHamf => self.t_ran_hamf,
            LinkClass::GwDn => self.t_gw_dn,
            LinkClass::UpfUpf => self.t_upf_upf,
            LinkClass::SmfUpf => self.t_smf_upf,
        }
    }

    /// Processing delay charged at the receiver of a message.
    pub fn processing_delay(&self, role: NodeRole) -> u64 {
        if role.is_control_nf() {
            self.pd_nf
        } else if role.is_upf() {
            self.pd_upf
        } else {
            self.pd_nonsba
        }
    }
}

/// Inputs of the resource-overhead model (dimensionless).
///
/// `n_between_*` are the worst-case-tunable UPF span counts used by the
/// per-scheme coefficient assignment: the number of previous-chain UPFs
/// between gateway and inter-slice gateway, and likewise for the new chain.
/// They are cost-model data, deliberately independent of the physical
/// `tunnel_host` placement used by the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceParams {
    pub c_p: f64,
    pub c_n: f64,
    /// Weight of the new-slice term in the hybrid blend; the previous-slice
    /// weight is `1 - omega_n`.
    pub omega_n: f64,
    pub n_upf_prev: u32,
    pub n_upf_new: u32,
    pub n_between_prev: u32,
    pub n_between_new: u32,
}

impl Default for ResourceParams {
    fn default() -> Self {
        ResourceParams {
            c_p: 100.0,
            c_n: 100.0,
            omega_n: 0.8,
            n_upf_prev: 3,
            n_upf_new: 3,
            n_between_prev: 1,
            n_between_new: 0,
        }
    }
}

/// Transmission and processing cost weights of the signalling model.
#[derive(Debug, Clone, PartialEq)]
pub struct SignallingParams {
    pub tc_nf_nf: f64,
    pub tc_nonsba: f64,
    pub pc_nf: f64,
    pub pc_nonsba: f64,
}

impl Default for SignallingParams {
    fn default() -> Self {
        SignallingParams {
            tc_nf_nf: 1.0,
            tc_nonsba: 2.0,
            pc_nf: 1.0,
            pc_nonsba: 5.0,
        }
    }
}

/// Physical placement of the inter-slice gateway function on the UPF chains;
/// `None` means the default (previous: RAN-side UPF, new: gateway).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologyParams {
    pub isgw_pos_prev: Option<u32>,
    pub isgw_pos_new: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimParams {
    pub seed: u64,
    /// Emission period of the background downlink stream, microseconds.
    pub stream_interval: u64,
    pub stream_enabled: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            seed: 1,
            stream_interval: 10_000,
            stream_enabled: true,
        }
    }
}

/// Closed-form variants of the MIPv6 handover delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mipv6DelayVariant {
    /// `max{return_routability, tunnel_setup} + binding_update + residual +
    /// delivery`: the conventional closed form, which keeps the
    /// registration-branch terms even though the scheme exchanges no tunnel
    /// messages.
    Literal,
    /// `max{return_routability, session_accept} + binding_update + delivery`:
    /// the form induced by the messages the scheme actually exchanges. This is
    /// what the simulator realizes.
    MessageFlow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    pub mipv6_delay: Mipv6DelayVariant,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            mipv6_delay: Mipv6DelayVariant::Literal,
        }
    }
}

/// Compiled run configuration, all times in microseconds. Built from the
/// millisecond-denominated file form by `config::compile`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub delays: DelayParams,
    pub resources: ResourceParams,
    pub signalling: SignallingParams,
    pub topology: TopologyParams,
    pub sim: SimParams,
    pub model: ModelParams,
}

/// Per-step delays in microseconds, as produced by the canonical sequences
/// (or synthesized directly, e.g. for property tests).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepDelays {
    pub session_request: u64,
    pub policy_setup: u64,
    pub prefix_advert: u64,
    pub tunnel_setup: u64,
    pub return_routability: u64,
    pub session_accept: u64,
    pub user_plane_activation: u64,
    pub binding_update: u64,
    pub delivery: u64,
    pub secondary_auth: u64,
    pub address_config: u64,
    pub prev_release: u64,
    pub residual: u64,
}

impl StepDelays {
    pub fn get(&self, step: Step) -> u64 {
        match step {
            Step::SessionRequest => self.session_request,
            Step::PolicySetup => self.policy_setup,
            Step::PrefixAdvert => self.prefix_advert,
            Step::TunnelSetup => self.tunnel_setup,
            Step::ReturnRoutability => self.return_routability,
            Step::SessionAccept => self.session_accept,
            Step::UserPlaneActivation => self.user_plane_activation,
            Step::BindingUpdate => self.binding_update,
            Step::Delivery => self.delivery,
            Step::SecondaryAuth => self.secondary_auth,
            Step::AddressConfig => self.address_config,
            Step::PrevRelease => self.prev_release,
        }
    }

    pub fn set(&mut self, step: Step, value: u64) {
        match step {
            Step::SessionRequest => self.session_request = value,
            Step::PolicySetup => self.policy_setup = value,
            Step::PrefixAdvert => self.prefix_advert = value,
            Step::TunnelSetup => self.tunnel_setup = value,
            Step::ReturnRoutability => self.return_routability = value,
            Step::SessionAccept => self.session_accept = value,
            Step::UserPlaneActivation => self.user_plane_activation = value,
            Step::BindingUpdate => self.binding_update = value,
            Step::Delivery => self.delivery = value,
            Step::SecondaryAuth => self.secondary_auth = value,
            Step::AddressConfig => self.address_config = value,
            Step::PrevRelease => self.prev_release = value,
        }
    }
}

/// Analytic (or simulated) outcome for one scheme under one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeMetrics {
    pub scheme: SchemeKind,
    /// Handover delay: last previous-path downlink to first new-path downlink,
    /// microseconds.
    pub delay: u64,
    /// Handover interval: procedure start to completed continuation,
    /// microseconds.
    pub interval: u64,
    /// Resource consumption rate overhead.
    pub cr: f64,
    /// Resource blocking rate overhead.
    pub br: f64,
    /// Total signalling cost of the executed steps.
    pub sc: f64,
}
