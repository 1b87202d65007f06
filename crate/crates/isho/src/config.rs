//! Run configuration: TOML file format (delay-like values in milliseconds),
//! dotted-path `--set` overrides, validation, and compilation into the
//! internal microsecond [`RunConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    DelayParams, Mipv6DelayVariant, ModelParams, ResourceParams, RunConfig, SignallingParams,
    SimParams, TopologyParams,
};

/// Raw configuration as read from a TOML file. Every time-like field is in
/// milliseconds (floats allowed); everything converts to microseconds on
/// compile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub delays: FileDelays,
    pub resources: FileResources,
    pub signalling: FileSignalling,
    pub topology: FileTopology,
    pub sim: FileSim,
    pub model: FileModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileDelays {
    pub t_nf_nf: f64,
    pub t_ue_amf: f64,
    pub t_ran_hamf: f64,
    pub t_gw_dn: f64,
    pub t_upf_upf: f64,
    pub t_smf_upf: f64,
    pub pd_nf: f64,
    pub pd_nonsba: f64,
    pub pd_upf: f64,
    pub residual_latency: f64,
}

impl Default for FileDelays {
    fn default() -> Self {
        FileDelays {
            t_nf_nf: 1.0,
            t_ue_amf: 5.0,
            t_ran_hamf: 3.0,
            t_gw_dn: 5.0,
            t_upf_upf: 2.0,
            t_smf_upf: 2.0,
            pd_nf: 1.0,
            pd_nonsba: 2.0,
            pd_upf: 2.0,
            residual_latency: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileResources {
    pub c_p: f64,
    pub c_n: f64,
    pub omega_n: f64,
    pub n_upf_prev: u32,
    pub n_upf_new: u32,
    pub n_between_prev: u32,
    pub n_between_new: u32,
}

impl Default for FileResources {
    fn default() -> Self {
        FileResources {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileSignalling {
    pub tc_nf_nf: f64,
    pub tc_nonsba: f64,
    pub pc_nf: f64,
    pub pc_nonsba: f64,
}

impl Default for FileSignalling {
    fn default() -> Self {
        FileSignalling {
            tc_nf_nf: 1.0,
            tc_nonsba: 2.0,
            pc_nf: 1.0,
            pc_nonsba: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FileTopology {
    pub isgw_pos_prev: Option<u32>,
    pub isgw_pos_new: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileSim {
    pub seed: u64,
    /// Milliseconds between background downlink packets.
    pub stream_interval: f64,
    pub stream_enabled: bool,
}

impl Default for FileSim {
    fn default() -> Self {
        FileSim {
            seed: 1,
            stream_interval: 10.0,
            stream_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileModel {
    /// `"literal"` or `"message-flow"`.
    pub mipv6_delay: String,
}

impl Default for FileModel {
    fn default() -> Self {
        FileModel {
            mipv6_delay: "literal".into(),
        }
    }
}

/// One problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("override '{0}' is not of the form KEY=VALUE")]
    SetSyntax(String),
    #[error("unknown config key '{0}'")]
    SetPath(String),
    #[error("bad value '{value}' for '{path}'")]
    SetValue { path: String, value: String },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(toml::from_str(&text)?)
}

/// Applies one `section.key=value` override to a raw configuration.
pub fn apply_set(cfg: &mut FileConfig, spec: &str) -> Result<(), ConfigError> {
    let (path, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::SetSyntax(spec.to_string()))?;
    let path = path.trim();
    let value = value.trim();

    let bad_value = || ConfigError::SetValue {
        path: path.to_string(),
        value: value.to_string(),
    };
    let f = |v: &str| v.parse::<f64>().map_err(|_| bad_value());
    let u32v = |v: &str| v.parse::<u32>().map_err(|_| bad_value());
    let u64v = |v: &str| v.parse::<u64>().map_err(|_| bad_value());
    let boolean = |v: &str| v.parse::<bool>().map_err(|_| bad_value());

    match path {
        "delays.t_nf_nf" => cfg.delays.t_nf_nf = f(value)?,
        "delays.t_ue_amf" => cfg.delays.t_ue_amf = f(value)?,
        "delays.t_ran_hamf" => cfg.delays.t_ran_hamf = f(value)?,
        "delays.t_gw_dn" => cfg.delays.t_gw_dn = f(value)?,
        "delays.t_upf_upf" => cfg.delays.t_upf_upf = f(value)?,
        "delays.t_smf_upf" => cfg.delays.t_smf_upf = f(value)?,
        "delays.pd_nf" => cfg.delays.pd_nf = f(value)?,
        "delays.pd_nonsba" => cfg.delays.pd_nonsba = f(value)?,
        "delays.pd_upf" => cfg.delays.pd_upf = f(value)?,
        "delays.residual_latency" => cfg.delays.residual_latency = f(value)?,
        "resources.c_p" => cfg.resources.c_p = f(value)?,
        "resources.c_n" => cfg.resources.c_n = f(value)?,
        "resources.omega_n" => cfg.resources.omega_n = f(value)?,
        "resources.n_upf_prev" => cfg.resources.n_upf_prev = u32v(value)?,
        "resources.n_upf_new" => cfg.resources.n_upf_new = u32v(value)?,
        "resources.n_between_prev" => cfg.resources.n_between_prev = u32v(value)?,
        "resources.n_between_new" => cfg.resources.n_between_new = u32v(value)?,
        "signalling.tc_nf_nf" => cfg.signalling.tc_nf_nf = f(value)?,
        "signalling.tc_nonsba" => cfg.signalling.tc_nonsba = f(value)?,
        "signalling.pc_nf" => cfg.signalling.pc_nf = f(value)?,
        "signalling.pc_nonsba" => cfg.signalling.pc_nonsba = f(value)?,
        "topology.isgw_pos_prev" => cfg.topology.isgw_pos_prev = Some(u32v(value)?),
        "topology.isgw_pos_new" => cfg.topology.isgw_pos_new = Some(u32v(value)?),
        "sim.seed" => cfg.sim.seed = u64v(value)?,
        "sim.stream_interval" => cfg.sim.stream_interval = f(value)?,
        "sim.stream_enabled" => cfg.sim.stream_enabled = boolean(value)?,
        "model.mipv6_delay" => cfg.model.mipv6_delay = value.to_string(),
        _ => return Err(ConfigError::SetPath(path.to_string())),
    }
    Ok(())
}

fn ms_to_us(field: &str, ms: f64, out: &mut Vec<Violation>) -> u64 {
    if !ms.is_finite() || ms < 0.0 {
        out.push(Violation {
            field: field.to_string(),
            message: format!("must be a finite value >= 0, got {ms}"),
        });
        return 0;
    }
    (ms * 1000.0).round() as u64
}

/// Converts the millisecond file form into the internal microsecond form and
/// validates it; returns every problem found, not just the first.
pub fn compile(file: &FileConfig) -> Result<RunConfig, ConfigError> {
    let mut v = Vec::new();
    let d = &file.delays;
    let delays = DelayParams {
        t_nf_nf: ms_to_us("delays.t_nf_nf", d.t_nf_nf, &mut v),
        t_ue_amf: ms_to_us("delays.t_ue_amf", d.t_ue_amf, &mut v),
        t_ran_hamf: ms_to_us("delays.t_ran_hamf", d.t_ran_hamf, &mut v),
        t_gw_dn: ms_to_us("delays.t_gw_dn", d.t_gw_dn, &mut v),
        t_upf_upf: ms_to_us("delays.t_upf_upf", d.t_upf_upf, &mut v),
        t_smf_upf: ms_to_us("delays.t_smf_upf", d.t_smf_upf, &mut v),
        pd_nf: ms_to_us("delays.pd_nf", d.pd_nf, &mut v),
        pd_nonsba: ms_to_us("delays.pd_nonsba", d.pd_nonsba, &mut v),
        pd_upf: ms_to_us("delays.pd_upf", d.pd_upf, &mut v),
        residual_latency: ms_to_us("delays.residual_latency", d.residual_latency, &mut v),
    };
    let resources = ResourceParams {
        c_p: file.resources.c_p,
        c_n: file.resources.c_n,
        omega_n: file.resources.omega_n,
        n_upf_prev: file.resources.n_upf_prev,
        n_upf_new: file.resources.n_upf_new,
        n_between_prev: file.resources.n_between_prev,
        n_between_new: file.resources.n_between_new,
    };
    let signalling = SignallingParams {
        tc_nf_nf: file.signalling.tc_nf_nf,
        tc_nonsba: file.signalling.tc_nonsba,
        pc_nf: file.signalling.pc_nf,
        pc_nonsba: file.signalling.pc_nonsba,
    };
    let topology = TopologyParams {
        isgw_pos_prev: file.topology.isgw_pos_prev,
        isgw_pos_new: file.topology.isgw_pos_new,
    };
    let sim = SimParams {
        seed: file.sim.seed,
        stream_interval: ms_to_us("sim.stream_interval", file.sim.stream_interval, &mut v),
        stream_enabled: file.sim.stream_enabled,
    };
    let mipv6_delay = match file.model.mipv6_delay.as_str() {
        "literal" => Mipv6DelayVariant::Literal,
        "message-flow" => Mipv6DelayVariant::MessageFlow,
        other => {
            v.push(Violation {
                field: "model.mipv6_delay".into(),
                message: format!("expected 'literal' or 'message-flow', got '{other}'"),
            });
            Mipv6DelayVariant::Literal
        }
    };

    let cfg = RunConfig {
        delays,
        resources,
        signalling,
        topology,
        sim,
        model: ModelParams { mipv6_delay },
    };
    if let Err(more) = validate(&cfg) {
        v.extend(more);
    }
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(v))
    }
}

/// Structural validation of a compiled configuration.
pub fn validate(cfg: &RunConfig) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let mut bad = |field: &str, message: String| {
        v.push(Violation {
            field: field.to_string(),
            message,
        })
    };

    let r = &cfg.resources;
    for (field, n) in [
        ("resources.n_upf_prev", r.n_upf_prev),
        ("resources.n_upf_new", r.n_upf_new),
    ] {
        if n == 0 {
            bad(field, "UPF chain needs at least one UPF".into());
        } else if n > 64 {
            bad(field, format!("UPF chain longer than 64 is unsupported, got {n}"));
        }
    }
    if r.n_between_prev > r.n_upf_prev {
        bad(
            "resources.n_between_prev",
            format!(
                "cannot exceed n_upf_prev ({} > {})",
                r.n_between_prev, r.n_upf_prev
            ),
        );
    }
    if r.n_between_new > r.n_upf_new {
        bad(
            "resources.n_between_new",
            format!(
                "cannot exceed n_upf_new ({} > {})",
                r.n_between_new, r.n_upf_new
            ),
        );
    }
    if !(0.0..=1.0).contains(&r.omega_n) || !r.omega_n.is_finite() {
        bad(
            "resources.omega_n",
            format!("weight must lie in [0, 1], got {}", r.omega_n),
        );
    }
    for (field, c) in [("resources.c_p", r.c_p), ("resources.c_n", r.c_n)] {
        if !c.is_finite() || c < 0.0 {
            bad(field, format!("must be a finite value >= 0, got {c}"));
        }
    }

    let s = &cfg.signalling;
    for (field, c) in [
        ("signalling.tc_nf_nf", s.tc_nf_nf),
        ("signalling.tc_nonsba", s.tc_nonsba),
        ("signalling.pc_nf", s.pc_nf),
        ("signalling.pc_nonsba", s.pc_nonsba),
    ] {
        if !c.is_finite() || c < 0.0 {
            bad(field, format!("must be a finite value >= 0, got {c}"));
        }
    }

    if let Some(p) = cfg.topology.isgw_pos_prev {
        if p >= r.n_upf_prev {
            bad(
                "topology.isgw_pos_prev",
                format!("position {p} outside previous chain of {}", r.n_upf_prev),
            );
        }
    }
    if let Some(p) = cfg.topology.isgw_pos_new {
        if p >= r.n_upf_new {
            bad(
                "topology.isgw_pos_new",
                format!("position {p} outside new chain of {}", r.n_upf_new),
            );
        }
    }

    if cfg.sim.stream_interval == 0 {
        bad("sim.stream_interval", "must be > 0".into());
    }

    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_compile_to_internal_defaults() {
        let cfg = compile(&FileConfig::default()).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn toml_round_trip_with_partial_file() {
        let text = "[delays]\npd_nf = 3.5\n\n[resources]\nn_upf_new = 5\n";
        let file: FileConfig = toml::from_str(text).unwrap();
        let cfg = compile(&file).unwrap();
        assert_eq!(cfg.delays.pd_nf, 3_500);
        assert_eq!(cfg.delays.t_ue_amf, 5_000);
        assert_eq!(cfg.resources.n_upf_new, 5);
    }

    #[test]
    fn unknown_toml_keys_are_rejected() {
        let text = "[delays]\npd_network = 3.5\n";
        assert!(toml::from_str::<FileConfig>(text).is_err());
    }

    #[test]
    fn set_overrides_apply() {
        let mut file = FileConfig::default();
        apply_set(&mut file, "delays.pd_nf=3").unwrap();
        apply_set(&mut file, "resources.n_upf_prev=4").unwrap();
        apply_set(&mut file, "sim.stream_enabled=false").unwrap();
        apply_set(&mut file, "model.mipv6_delay=message-flow").unwrap();
        let cfg = compile(&file).unwrap();
        assert_eq!(cfg.delays.pd_nf, 3_000);
        assert_eq!(cfg.resources.n_upf_prev, 4);
        assert!(!cfg.sim.stream_enabled);
        assert_eq!(cfg.model.mipv6_delay, crate::types::Mipv6DelayVariant::MessageFlow);
    }

    #[test]
    fn set_rejects_unknown_path_and_bad_value() {
        let mut file = FileConfig::default();
        assert!(matches!(
            apply_set(&mut file, "delays.nonsense=1"),
            Err(ConfigError::SetPath(_))
        ));
        assert!(matches!(
            apply_set(&mut file, "delays.pd_nf=abc"),
            Err(ConfigError::SetValue { .. })
        ));
        assert!(matches!(
            apply_set(&mut file, "delays.pd_nf"),
            Err(ConfigError::SetSyntax(_))
        ));
    }

    #[test]
    fn negative_delay_is_a_violation() {
        let mut file = FileConfig::default();
        file.delays.t_nf_nf = -1.0;
        let err = compile(&file).unwrap_err();
        let v = err.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "delays.t_nf_nf");
    }

    #[test]
    fn zero_length_chain_is_a_violation() {
        let mut file = FileConfig::default();
        file.resources.n_upf_prev = 0;
        let err = compile(&file).unwrap_err();
        assert!(err.violations().iter().any(|v| v.field == "resources.n_upf_prev"));
    }

    #[test]
    fn between_counts_bounded_by_chain_lengths() {
        let mut file = FileConfig::default();
        file.resources.n_between_prev = 4;
        let err = compile(&file).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| v.field == "resources.n_between_prev"));

        // Inclusive worst-case counting (span = whole chain) is allowed.
        let mut file = FileConfig::default();
        file.resources.n_between_prev = 3;
        assert!(compile(&file).is_ok());
    }

    #[test]
    fn isgw_position_must_sit_on_the_chain() {
        let mut file = FileConfig::default();
        file.topology.isgw_pos_new = Some(3);
        let err = compile(&file).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| v.field == "topology.isgw_pos_new"));
    }

    #[test]
    fn bad_variant_name_is_a_violation() {
        let mut file = FileConfig::default();
        file.model.mipv6_delay = "classic".into();
        let err = compile(&file).unwrap_err();
        assert!(err.violations().iter().any(|v| v.field == "model.mipv6_delay"));
    }

    #[test]
    fn multiple_problems_reported_together() {
        let mut file = FileConfig::default();
        file.delays.pd_nf = f64::NAN;
        file.resources.omega_n = 1.5;
        file.sim.stream_interval = 0.0;
        let err = compile(&file).unwrap_err();
        assert!(err.violations().len() >= 3);
    }
}
