//! Canonical message sequences for each procedure step.
//!
//! The generator functions here are the source of truth: they adapt to the
//! topology (UPF chain lengths, tunnel endpoint placement). The same
//! sequences are also shipped as documented text files under `sequences/` in
//! this crate; a test pins the generator output to those files, and the CLI
//! can load a modified set from a directory instead.
//!
//! A sequence is one or two parallel chains of messages. Within a chain,
//! every message is sent when the receiver of the previous spine message has
//! finished processing it. Flags refine how a message counts:
//!
//! * gating + costed (no flag): spine message, contributes latency and cost;
//! * `relay`: spine hop of an end-to-end message, latency but no cost
//!   (the end-to-end message is costed once, at the hop reaching its
//!   destination); also used for user-plane data, which is never costed;
//! * `ack`: side-branch response, costed but off the latency path;
//! * `aux`: follow-on exchange after the step completes (latency-irrelevant
//!   and uncosted), e.g. the gateway-to-gateway tunnel handshake.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::types::{LinkClass, NodeId, RunConfig, SchemeKind, SliceId, Step, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqMessage {
    pub src: NodeId,
    pub dst: NodeId,
    pub link: LinkClass,
    pub name: String,
    /// On the latency spine of its chain.
    pub gating: bool,
    /// Contributes transmission + processing cost.
    pub costed: bool,
    /// Chain index within the step (0 or 1).
    pub chain: u8,
}

impl SeqMessage {
    fn new(src: NodeId, dst: NodeId, link: LinkClass, name: &str) -> SeqMessage {
        SeqMessage {
            src,
            dst,
            link,
            name: name.to_string(),
            gating: true,
            costed: true,
            chain: 0,
        }
    }

    fn relay(mut self) -> Self {
        self.costed = false;
        self
    }

    fn ack(mut self) -> Self {
        self.gating = false;
        self
    }

    fn aux(mut self) -> Self {
        self.gating = false;
        self.costed = false;
        self
    }

    fn chain2(mut self) -> Self {
        self.chain = 1;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSequence {
    pub step: Step,
    pub messages: Vec<SeqMessage>,
}

impl StepSequence {
    /// Messages grouped by chain, preserving order.
    pub fn chains(&self) -> Vec<Vec<&SeqMessage>> {
        let mut out: Vec<Vec<&SeqMessage>> = Vec::new();
        for m in &self.messages {
            let idx = m.chain as usize;
            while out.len() <= idx {
                out.push(Vec::new());
            }
            out[idx].push(m);
        }
        out
    }
}

/// Steps whose signalling is charged to a scheme, in execution order.
pub fn steps_for(scheme: SchemeKind) -> &'static [Step] {
    match scheme {
        SchemeKind::Baseline3gpp => &[
            Step::SessionRequest,
            Step::PolicySetup,
            Step::SecondaryAuth,
            Step::SessionAccept,
            Step::UserPlaneActivation,
            Step::AddressConfig,
            Step::PrevRelease,
        ],
        SchemeKind::Mipv6RrBu => &[
            Step::SessionRequest,
            Step::PolicySetup,
            Step::PrefixAdvert,
            Step::ReturnRoutability,
            Step::SessionAccept,
            Step::UserPlaneActivation,
            Step::BindingUpdate,
        ],
        SchemeKind::Gtpv1U => &[
            Step::SessionRequest,
            Step::PolicySetup,
            Step::PrefixAdvert,
            Step::TunnelSetup,
            Step::SessionAccept,
            Step::UserPlaneActivation,
        ],
        SchemeKind::HybridMipv6Gtp => &[
            Step::SessionRequest,
            Step::PolicySetup,
            Step::PrefixAdvert,
            Step::TunnelSetup,
            Step::ReturnRoutability,
            Step::SessionAccept,
            Step::UserPlaneActivation,
            Step::BindingUpdate,
            Step::PrevRelease,
        ],
    }
}

/// Steps a scheme executes in the simulator: the costed set plus the
/// (uncosted) delivery leg.
pub fn executed_steps(scheme: SchemeKind) -> Vec<Step> {
    let mut v = steps_for(scheme).to_vec();
    v.push(Step::Delivery);
    v
}

/// Builds the sequence of one step for the given topology, or `None` when the
/// step does not apply (e.g. tunnel setup without tunnel endpoints).
/// `scheme` only disambiguates the previous-session release target.
pub fn sequence_for(step: Step, topo: &Topology, scheme: SchemeKind) -> Option<StepSequence> {
    use LinkClass::*;
    use SliceId::{New, Previous};

    let m = SeqMessage::new;
    let smf_n = topo.smf[New.index()];
    let smf_p = topo.smf[Previous.index()];
    let pcf_n = topo.pcf[New.index()];
    let (ue, dn, amf, udm) = (topo.ue, topo.dn, topo.amf, topo.udm);
    let (hamf, hsmf) = (topo.home_amf, topo.home_smf);
    let n3_n = topo.n3(New);
    let gw_n = topo.gw(New);
    let gw_p = topo.gw(Previous);

    let messages = match step {
        Step::SessionRequest => vec![
            m(ue, amf, UeAmf, "PDU_Session_Establishment_Request"),
            m(amf, smf_n, SbaNfNf, "Nsmf_PDUSession_CreateSMContext_Request"),
            m(smf_n, udm, SbaNfNf, "Nudm_SDM_Get_Request"),
            m(udm, smf_n, SbaNfNf, "Nudm_SDM_Get_Response"),
            m(smf_n, amf, SbaNfNf, "Nsmf_PDUSession_CreateSMContext_Response").ack(),
        ],
        Step::PolicySetup => vec![
            m(smf_n, pcf_n, SbaNfNf, "Npcf_SMPolicyControl_Create_Request"),
            m(pcf_n, smf_n, SbaNfNf, "Npcf_SMPolicyControl_Create_Response"),
            m(smf_n, pcf_n, SbaNfNf, "Npcf_SMPolicyControl_Update_Request"),
            m(pcf_n, smf_n, SbaNfNf, "Npcf_SMPolicyControl_Update_Response"),
            m(smf_n, n3_n, SmfUpf, "N4_Session_Establishment_Request"),
            m(n3_n, smf_n, SmfUpf, "N4_Session_Establishment_Response"),
            m(smf_n, gw_n, SmfUpf, "N4_Session_Establishment_Request"),
            m(gw_n, smf_n, SmfUpf, "N4_Session_Establishment_Response"),
            m(smf_n, udm, SbaNfNf, "Nudm_UECM_Registration_Request"),
            m(udm, smf_n, SbaNfNf, "Nudm_UECM_Registration_Response"),
        ],
        Step::PrefixAdvert => vec![
            m(smf_n, amf, SbaNfNf, "Namf_Communication_N1N2MessageTransfer"),
            m(amf, smf_n, SbaNfNf, "Namf_Communication_N1N2MessageTransfer_Response").ack(),
            m(amf, ue, UeAmf, "IPv6_Prefix_Advertisement"),
        ],
        Step::TunnelSetup => {
            let isgw_p = topo.tunnel_host[Previous.index()]?;
            let isgw_n = topo.tunnel_host[New.index()]?;
            vec![
                m(ue, amf, UeAmf, "PDU_Session_Continuation_Request"),
                m(amf, smf_p, SbaNfNf, "Nsmf_PDUSession_UpdateSMContext_Request"),
                m(smf_p, amf, SbaNfNf, "Nsmf_PDUSession_UpdateSMContext_Response").ack(),
                m(smf_p, isgw_p, SmfUpf, "N4_Session_Modification_Request"),
                m(isgw_p, isgw_n, UpfUpf, "Tunnel_Endpoint_Establishment").aux(),
                m(isgw_n, isgw_p, UpfUpf, "Tunnel_Endpoint_Establishment_Ack").aux(),
                m(amf, smf_n, SbaNfNf, "Nsmf_PDUSession_UpdateSMContext_Request").chain2(),
                m(smf_n, isgw_n, SmfUpf, "N4_Session_Modification_Request").chain2(),
                m(isgw_n, smf_n, SmfUpf, "N4_Session_Modification_Response").chain2(),
            ]
        }
        Step::ReturnRoutability => vec![
            m(ue, amf, UeAmf, "Mip_CareOfTestInit").relay(),
            m(amf, smf_n, SbaNfNf, "Mip_CareOfTestInit_Transport").relay(),
            m(smf_n, gw_n, SmfUpf, "Mip_CareOfTestInit_Transport").relay(),
            m(gw_n, dn, GwDn, "Mip_CareOfTestInit"),
            m(dn, gw_n, GwDn, "Mip_CareOfTest").relay(),
            m(gw_n, smf_n, SmfUpf, "Mip_CareOfTest_Transport").relay(),
            m(smf_n, amf, SbaNfNf, "Mip_CareOfTest_Transport").relay(),
            m(amf, ue, UeAmf, "Mip_CareOfTest"),
            m(ue, hamf, RanHamf, "Mip_HomeTestInit").relay().chain2(),
            m(hamf, hsmf, SbaNfNf, "Mip_HomeTestInit_Transport").relay().chain2(),
            m(hsmf, gw_p, SmfUpf, "Mip_HomeTestInit_Transport").relay().chain2(),
            m(gw_p, dn, GwDn, "Mip_HomeTestInit").chain2(),
            m(dn, gw_p, GwDn, "Mip_HomeTest").relay().chain2(),
            m(gw_p, hsmf, SmfUpf, "Mip_HomeTest_Transport").relay().chain2(),
            m(hsmf, hamf, SbaNfNf, "Mip_HomeTest_Transport").relay().chain2(),
            m(hamf, ue, RanHamf, "Mip_HomeTest").chain2(),
        ],
        Step::SessionAccept => vec![
            m(smf_n, amf, SbaNfNf, "Namf_Communication_N1N2MessageTransfer"),
            m(amf, ue, UeAmf, "PDU_Session_Establishment_Accept"),
            m(ue, amf, UeAmf, "PDU_Session_Setup_Complete"),
            m(amf, smf_n, SbaNfNf, "Nsmf_PDUSession_UpdateSMContext_Request"),
        ],
        Step::UserPlaneActivation => vec![
            m(smf_n, gw_n, SmfUpf, "N4_Session_Modification_Request"),
            m(gw_n, smf_n, SmfUpf, "N4_Session_Modification_Response"),
        ],
        Step::BindingUpdate => {
            let chain = &topo.upf_chain[New.index()];
            let n = chain.len();
            let mut v = vec![m(ue, chain[0], UpfUpf, "Mip_BindingUpdate")];
            for i in 0..n - 1 {
                v.push(m(chain[i], chain[i + 1], UpfUpf, "Mip_BindingUpdate").relay());
            }
            v.push(m(chain[n - 1], dn, GwDn, "Mip_BindingUpdate"));
            v.push(m(dn, chain[n - 1], GwDn, "Mip_BindingAck"));
            for i in (0..n - 1).rev() {
                v.push(m(chain[i + 1], chain[i], UpfUpf, "Mip_BindingAck").relay());
            }
            v.push(m(chain[0], ue, UpfUpf, "Mip_BindingAck"));
            v
        }
        Step::Delivery => {
            let chain = &topo.upf_chain[New.index()];
            let n = chain.len();
            let mut v = vec![m(dn, chain[n - 1], GwDn, "Downlink_Data").relay()];
            for i in (0..n - 1).rev() {
                v.push(m(chain[i + 1], chain[i], UpfUpf, "Downlink_Data").relay());
            }
            v.push(m(chain[0], ue, UpfUpf, "Downlink_Data").relay());
            v
        }
        Step::SecondaryAuth => vec![
            m(ue, amf, UeAmf, "EAP_Response_Identity").relay(),
            m(amf, smf_n, SbaNfNf, "Nsmf_Auth_Transport").relay(),
            m(smf_n, gw_n, SmfUpf, "EAP_Transport").relay(),
            m(gw_n, dn, GwDn, "EAP_Response_Identity"),
            m(dn, gw_n, GwDn, "EAP_Request_Challenge").relay(),
            m(gw_n, smf_n, SmfUpf, "EAP_Transport").relay(),
            m(smf_n, amf, SbaNfNf, "Nsmf_Auth_Transport").relay(),
            m(amf, ue, UeAmf, "EAP_Request_Challenge"),
            m(ue, amf, UeAmf, "EAP_Response_Challenge").relay(),
            m(amf, smf_n, SbaNfNf, "Nsmf_Auth_Transport").relay(),
            m(smf_n, gw_n, SmfUpf, "EAP_Transport").relay(),
            m(gw_n, dn, GwDn, "EAP_Response_Challenge"),
            m(dn, gw_n, GwDn, "EAP_Success").relay(),
            m(gw_n, smf_n, SmfUpf, "EAP_Success_Notification"),
        ],
        Step::AddressConfig => vec![
            m(smf_n, n3_n, SmfUpf, "IPv6_RouterAdvertisement_Trigger").relay(),
            m(n3_n, ue, UpfUpf, "IPv6_RouterAdvertisement"),
        ],
        Step::PrevRelease => {
            let target = match scheme {
                SchemeKind::Baseline3gpp => gw_p,
                SchemeKind::HybridMipv6Gtp => topo.tunnel_host[Previous.index()]?,
                _ => return None,
            };
            vec![
                m(amf, smf_p, SbaNfNf, "Nsmf_PDUSession_ReleaseSMContext_Request"),
                m(smf_p, target, SmfUpf, "N4_Session_Release_Request").relay(),
            ]
        }
    };

    Some(StepSequence { step, messages })
}

/// A topology together with the step sequences defined on it.
#[derive(Debug, Clone)]
pub struct SequenceSet {
    pub topo: Topology,
    pub steps: Vec<StepSequence>,
}

impl SequenceSet {
    /// Full set over a tunnel-capable topology: every step applies, with the
    /// release shaped as in the hybrid scheme. Used by the analytic side,
    /// where release delay and cost do not depend on the release target.
    pub fn generate(cfg: &RunConfig) -> SequenceSet {
        let topo = Topology::build(cfg, SchemeKind::HybridMipv6Gtp);
        let steps = Step::ALL
            .iter()
            .filter_map(|&s| sequence_for(s, &topo, SchemeKind::HybridMipv6Gtp))
            .collect();
        SequenceSet { topo, steps }
    }

    /// The steps one scheme executes, on that scheme's own topology.
    pub fn for_scheme(cfg: &RunConfig, scheme: SchemeKind) -> SequenceSet {
        let topo = Topology::build(cfg, scheme);
        let steps = executed_steps(scheme)
            .into_iter()
            .filter_map(|s| sequence_for(s, &topo, scheme))
            .collect();
        SequenceSet { topo, steps }
    }

    pub fn get(&self, step: Step) -> Option<&StepSequence> {
        self.steps.iter().find(|s| s.step == step)
    }

    /// Like [`SequenceSet::for_scheme`] but reading the sequences from text
    /// files in `dir` (one file per step, named after `file_name`).
    pub fn load_dir(
        dir: &Path,
        cfg: &RunConfig,
        scheme: SchemeKind,
    ) -> Result<SequenceSet, SeqError> {
        let topo = Topology::build(cfg, scheme);
        let mut steps = Vec::new();
        for step in executed_steps(scheme) {
            // Skip steps that do not apply to this topology (mirrors the
            // generator's behavior).
            if sequence_for(step, &topo, scheme).is_none() {
                continue;
            }
            let path = dir.join(file_name(step, scheme));
            let text = std::fs::read_to_string(&path).map_err(|source| SeqError::Io {
                path: path.display().to_string(),
                source,
            })?;
            steps.push(parse_sequence(&text, step, &topo)?);
        }
        Ok(SequenceSet { topo, steps })
    }
}

/// File name a step's sequence is shipped under. The release step has two
/// shapes, so it carries the scheme name.
pub fn file_name(step: Step, scheme: SchemeKind) -> String {
    match step {
        Step::PrevRelease => format!("prev_release_{}.txt", scheme.name()),
        _ => format!("{}.txt", step.label().replace('-', "_")),
    }
}

/// Renders a sequence in the shipped text format:
/// `src, dst, link-class, name[, flags]` per message, `#` comments.
pub fn to_text(seq: &StepSequence, topo: &Topology) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# step: {}", seq.step.label());
    let _ = writeln!(out, "# fields: src, dst, link-class, name[, flags]");
    let _ = writeln!(
        out,
        "# flags: relay (uncosted hop), ack (off latency path), aux (post-completion), chain2"
    );
    for msg in &seq.messages {
        let mut flags = Vec::new();
        if !msg.gating && !msg.costed {
            flags.push("aux");
        } else if !msg.gating {
            flags.push("ack");
        } else if !msg.costed {
            flags.push("relay");
        }
        if msg.chain == 1 {
            flags.push("chain2");
        }
        let _ = write!(
            out,
            "{}, {}, {}, {}",
            topo.label(msg.src),
            topo.label(msg.dst),
            msg.link.token(),
            msg.name
        );
        if flags.is_empty() {
            out.push('\n');
        } else {
            let _ = writeln!(out, ", {}", flags.join(" "));
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum SeqError {
    #[error("cannot read sequence file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("sequence line {line}: expected 'src, dst, link, name[, flags]'")]
    MissingField { line: usize },
    #[error("sequence line {line}: unknown node label '{label}'")]
    UnknownLabel { line: usize, label: String },
    #[error("sequence line {line}: unknown link class '{token}'")]
    UnknownLink { line: usize, token: String },
    #[error("sequence line {line}: unknown flag '{flag}'")]
    UnknownFlag { line: usize, flag: String },
    #[error("sequence for step '{step}' is empty")]
    Empty { step: String },
}

/// Parses the text format back into a sequence, resolving labels against the
/// given topology.
pub fn parse_sequence(text: &str, step: Step, topo: &Topology) -> Result<StepSequence, SeqError> {
    let mut messages = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 4 || fields.len() > 5 {
            return Err(SeqError::MissingField { line });
        }
        let resolve = |label: &str| {
            topo.by_label(label).ok_or_else(|| SeqError::UnknownLabel {
                line,
                label: label.to_string(),
            })
        };
        let src = resolve(fields[0])?;
        let dst = resolve(fields[1])?;
        let link = LinkClass::from_token(fields[2]).ok_or_else(|| SeqError::UnknownLink {
            line,
            token: fields[2].to_string(),
        })?;
        let mut msg = SeqMessage::new(src, dst, link, fields[3]);
        if let Some(flag_field) = fields.get(4) {
            for flag in flag_field.split_whitespace() {
                match flag {
                    "relay" => msg.costed = false,
                    "ack" => msg.gating = false,
                    "aux" => {
                        msg.gating = false;
                        msg.costed = false;
                    }
                    "chain2" => msg.chain = 1,
                    other => {
                        return Err(SeqError::UnknownFlag {
                            line,
                            flag: other.to_string(),
                        })
                    }
                }
            }
        }
        messages.push(msg);
    }
    if messages.is_empty() {
        return Err(SeqError::Empty {
            step: step.label().to_string(),
        });
    }
    Ok(StepSequence { step, messages })
}
