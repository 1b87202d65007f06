//! Closed-form evaluation: per-step delay and signalling cost from the
//! canonical sequences, composition into handover delay/interval per scheme,
//! and the resource-overhead model.

use std::cmp::{max, min};

use crate::sequences::{steps_for, SequenceSet, StepSequence};
use crate::types::{
    DelayParams, LinkClass, Mipv6DelayVariant, ResourceParams, RunConfig, SchemeKind,
    SchemeMetrics, SignallingParams, StepDelays, Topology,
};

/// Delay of one step: per chain, the sum of link delay plus receiver
/// processing delay over the latency spine; parallel chains take the maximum.
pub fn step_delay(d: &DelayParams, topo: &Topology, seq: &StepSequence) -> u64 {
    seq.chains()
        .iter()
        .map(|chain| {
            chain
                .iter()
                .filter(|m| m.gating)
                .map(|m| d.link_delay(m.link) + d.processing_delay(topo.role(m.dst)))
                .sum::<u64>()
        })
        .max()
        .unwrap_or(0)
}

/// Signalling cost of one step: transmission cost by link class plus
/// processing cost by receiver class, summed over the costed messages.
pub fn step_cost(s: &SignallingParams, topo: &Topology, seq: &StepSequence) -> f64 {
    seq.messages
        .iter()
        .filter(|m| m.costed)
        .map(|m| {
            let tc = if m.link == LinkClass::SbaNfNf {
                s.tc_nf_nf
            } else {
                s.tc_nonsba
            };
            let pc = if topo.role(m.dst).is_control_nf() {
                s.pc_nf
            } else {
                s.pc_nonsba
            };
            tc + pc
        })
        .sum()
}

/// Per-step delays over a sequence set (steps missing from the set stay 0).
pub fn step_delays_from(set: &SequenceSet, d: &DelayParams) -> StepDelays {
    let mut out = StepDelays {
        residual: d.residual_latency,
        ..StepDelays::default()
    };
    for seq in &set.steps {
        out.set(seq.step, step_delay(d, &set.topo, seq));
    }
    out
}

pub fn compute_step_delays(cfg: &RunConfig) -> StepDelays {
    step_delays_from(&SequenceSet::generate(cfg), &cfg.delays)
}

/// Handover delay: gap between the last previous-path downlink and the first
/// new-path downlink.
pub fn handover_delay(scheme: SchemeKind, d: &StepDelays, variant: Mipv6DelayVariant) -> u64 {
    match scheme {
        SchemeKind::Baseline3gpp => {
            d.session_request
                + d.policy_setup
                + d.secondary_auth
                + d.session_accept
                + d.user_plane_activation
                + d.address_config
                + d.delivery
        }
        SchemeKind::Gtpv1U => gtp_branch(d),
        SchemeKind::Mipv6RrBu => match variant {
            Mipv6DelayVariant::Literal => {
                max(d.return_routability, d.tunnel_setup)
                    + d.binding_update
                    + d.residual
                    + d.delivery
            }
            Mipv6DelayVariant::MessageFlow => binding_branch(d),
        },
        SchemeKind::HybridMipv6Gtp => min(gtp_branch(d), binding_branch(d)),
    }
}

/// Handover interval: procedure start to completed continuation. For the
/// baseline the whole procedure is the delay; the continuation schemes spend
/// the request/policy/prefix preamble first.
pub fn handover_interval(scheme: SchemeKind, d: &StepDelays, variant: Mipv6DelayVariant) -> u64 {
    let preamble = d.session_request + d.policy_setup + d.prefix_advert;
    match scheme {
        SchemeKind::Baseline3gpp => handover_delay(scheme, d, variant),
        SchemeKind::Gtpv1U | SchemeKind::Mipv6RrBu => {
            preamble + handover_delay(scheme, d, variant)
        }
        SchemeKind::HybridMipv6Gtp => preamble + max(gtp_branch(d), binding_branch(d)),
    }
}

/// Tunnel-side completion: tunnel setup in parallel with accept+activation,
/// then the delivery leg.
fn gtp_branch(d: &StepDelays) -> u64 {
    max(
        d.tunnel_setup,
        d.session_accept + d.user_plane_activation,
    ) + d.delivery
}

/// Binding-side completion: return routability in parallel with the accept,
/// then binding update and the delivery leg.
fn binding_branch(d: &StepDelays) -> u64 {
    max(d.return_routability, d.session_accept) + d.binding_update + d.delivery
}

/// Resource overhead (consumption rate, blocking rate).
///
/// Per-scheme coefficient assignment: the baseline and MIPv6 hold resources
/// only in the new slice (all `n_upf_new` UPFs); GTP keeps the previous-chain
/// span between gateway and inter-slice gateway active plus the traversed
/// part of the new chain; the hybrid blends both sides with
/// `omega_p = 1 - omega_n`. Blocking counts one UPF per term as usable, hence
/// the per-term `count - 1` floored at zero.
pub fn resource_overhead(scheme: SchemeKind, r: &ResourceParams) -> (f64, f64) {
    let (w_p, w_n, n_p, n_np, n_n) = match scheme {
        SchemeKind::Baseline3gpp | SchemeKind::Mipv6RrBu => (0.0, 1.0, 0, 0, r.n_upf_new),
        SchemeKind::Gtpv1U => (
            1.0,
            1.0,
            r.n_between_prev,
            r.n_upf_new - r.n_between_new,
            0,
        ),
        SchemeKind::HybridMipv6Gtp => (
            1.0 - r.omega_n,
            r.omega_n,
            r.n_between_prev,
            r.n_upf_new - r.n_between_new,
            r.n_upf_new,
        ),
    };
    let cr = w_p * r.c_p * n_p as f64 + w_p * r.c_n * n_np as f64 + w_n * r.c_n * n_n as f64;
    let spare = |n: u32| n.saturating_sub(1) as f64;
    let br = w_p * r.c_p * spare(n_p) + w_p * r.c_n * spare(n_np) + w_n * r.c_n * spare(n_n);
    (cr, br)
}

/// Total signalling cost of the steps a scheme executes.
pub fn signalling_cost_from(scheme: SchemeKind, set: &SequenceSet, s: &SignallingParams) -> f64 {
    steps_for(scheme)
        .iter()
        .map(|&step| {
            set.get(step)
                .map(|seq| step_cost(s, &set.topo, seq))
                .unwrap_or(0.0)
        })
        .sum()
}

pub fn signalling_cost(scheme: SchemeKind, cfg: &RunConfig) -> f64 {
    signalling_cost_from(scheme, &SequenceSet::generate(cfg), &cfg.signalling)
}

/// Full analytic evaluation of one scheme under one configuration.
pub fn evaluate(scheme: SchemeKind, cfg: &RunConfig) -> SchemeMetrics {
    evaluate_with(scheme, cfg, &SequenceSet::generate(cfg))
}

/// Like [`evaluate`] but over a caller-provided sequence set (e.g. loaded
/// from files). The set must cover the steps the scheme needs.
pub fn evaluate_with(scheme: SchemeKind, cfg: &RunConfig, set: &SequenceSet) -> SchemeMetrics {
    let d = step_delays_from(set, &cfg.delays);
    let variant = cfg.model.mipv6_delay;
    let (cr, br) = resource_overhead(scheme, &cfg.resources);
    SchemeMetrics {
        scheme,
        delay: handover_delay(scheme, &d, variant),
        interval: handover_interval(scheme, &d, variant),
        cr,
        br,
        sc: signalling_cost_from(scheme, set, &cfg.signalling),
    }
}
