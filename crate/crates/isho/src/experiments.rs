//! Parameter sweeps and the built-in claim checks.
//!
//! A sweep varies one config key over a list of values and evaluates every
//! (value, scheme) cell analytically, by simulation, or both (asserting
//! exact agreement). The shipped presets `fig4`..`fig7` encode the reference
//! experiment settings; `paper_check` compares sweep results against the
//! expected headline percentages and orderings.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::analytic;
use crate::config::{self, ConfigError, FileConfig};
use crate::protocols::{self, SimError};
use crate::types::{Mipv6DelayVariant, SchemeKind};

pub const CSV_HEADER: &str = "axis,scheme,mode,isho_delay_ms,isho_interval_ms,cr,br,sc";

/// Preset names accepted by [`preset`] / [`preset_on`].
pub const PRESETS: &[&str] = &["fig4", "fig4-tnf", "fig5", "fig6", "fig7", "fig7-tc"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Analytic,
    Sim,
    /// Run both and require the simulated delay and interval to equal the
    /// message-flow analytic values exactly.
    Both,
}

impl SweepMode {
    pub fn label(self) -> &'static str {
        match self {
            SweepMode::Analytic => "analytic",
            SweepMode::Sim => "sim",
            SweepMode::Both => "both",
        }
    }

    pub fn from_label(s: &str) -> Option<SweepMode> {
        match s {
            "analytic" => Some(SweepMode::Analytic),
            "sim" => Some(SweepMode::Sim),
            "both" => Some(SweepMode::Both),
            _ => None,
        }
    }
}

/// One sweep: vary `axis` over `values` on top of `base`.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub name: String,
    /// Dotted config key, e.g. `delays.pd_nf` (file units: ms for delays).
    pub axis: String,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
    pub mode: SweepMode,
    pub base: FileConfig,
    /// Count the whole previous chain as tunnel-spanned: after the axis is
    /// applied, pin `n_between_prev` to the previous chain length and
    /// `n_between_new` to 0.
    pub worst_case_isgw: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: f64,
    pub scheme: SchemeKind,
    pub mode: SweepMode,
    pub delay_ms: f64,
    pub interval_ms: f64,
    pub cr: f64,
    pub br: f64,
    pub sc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellErrorKind {
    Config,
    Sim,
    Mismatch,
}

/// A cell that could not be evaluated; the sweep records it and continues.
#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub axis: f64,
    pub scheme: SchemeKind,
    pub kind: CellErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub preset: String,
    pub rows: Vec<SweepRow>,
    pub errors: Vec<CellError>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("sweep needs at least one axis value and one scheme")]
    EmptySweep,
    #[error("sweep axis not usable: {0}")]
    BadAxis(ConfigError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(
        "simulated {metric} disagrees with the analytic value for {scheme} at {axis}={value}: \
         {sim_us} us vs {analytic_us} us"
    )]
    Mismatch {
        scheme: SchemeKind,
        axis: String,
        value: f64,
        metric: &'static str,
        sim_us: u64,
        analytic_us: u64,
    },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error("bad results csv: {0}")]
    CsvFormat(String),
    #[error("bad sweep spec {path}: {message}")]
    SpecFile { path: String, message: String },
    #[error("claim '{claim}' needs preset '{preset}' results, which were not provided")]
    NotCovered {
        claim: &'static str,
        preset: &'static str,
    },
    #[error("{preset} cell {scheme} at {axis}={value} failed: {message}")]
    CellFailed {
        preset: String,
        scheme: SchemeKind,
        axis: String,
        value: f64,
        message: String,
    },
    #[error("no claims to check")]
    NoClaims,
}

pub fn preset(name: &str) -> Option<SweepSpec> {
    preset_on(name, FileConfig::default())
}

/// A shipped preset applied on top of a caller-supplied base config.
pub fn preset_on(name: &str, base: FileConfig) -> Option<SweepSpec> {
    let steps_ms = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let chain_lengths = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let costs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let all = SchemeKind::ALL.to_vec();
    let spec = |axis: &str, values: Vec<f64>, mode: SweepMode, worst: bool| SweepSpec {
        name: name.to_string(),
        axis: axis.to_string(),
        values,
        schemes: all.clone(),
        mode,
        base: base.clone(),
        worst_case_isgw: worst,
    };
    Some(match name {
        "fig4" => spec("delays.pd_nf", steps_ms, SweepMode::Both, false),
        "fig4-tnf" => spec("delays.t_nf_nf", steps_ms, SweepMode::Both, false),
        "fig5" => spec(
            "resources.n_upf_new",
            chain_lengths,
            SweepMode::Analytic,
            true,
        ),
        "fig6" => spec(
            "resources.n_upf_prev",
            chain_lengths,
            SweepMode::Analytic,
            true,
        ),
        "fig7" => spec("signalling.pc_nf", costs, SweepMode::Analytic, false),
        "fig7-tc" => spec("signalling.tc_nf_nf", costs, SweepMode::Analytic, false),
        _ => return None,
    })
}

/// On-disk sweep description, an alternative to the shipped presets.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    axis: String,
    values: Vec<f64>,
    #[serde(default)]
    schemes: Option<Vec<String>>,
    /// `analytic` (default), `sim`, or `both`.
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    worst_case_isgw: bool,
}

/// Reads a TOML sweep description and applies it on top of `base`. The sweep
/// name is taken from the file stem.
pub fn load_spec(path: &Path, base: FileConfig) -> Result<SweepSpec, SweepError> {
    let bad = |message: String| SweepError::SpecFile {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let raw: SpecFile = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let schemes = match raw.schemes {
        None => SchemeKind::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                SchemeKind::from_name(n).ok_or_else(|| bad(format!("unknown scheme '{n}'")))
            })
            .collect::<Result<_, _>>()?,
    };
    let mode = match raw.mode.as_deref() {
        None => SweepMode::Analytic,
        Some(label) => {
            SweepMode::from_label(label).ok_or_else(|| bad(format!("unknown mode '{label}'")))?
        }
    };
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("custom")
        .to_string();
    Ok(SweepSpec {
        name,
        axis: raw.axis,
        values: raw.values,
        schemes,
        mode,
        base,
        worst_case_isgw: raw.worst_case_isgw,
    })
}

fn fmt_axis(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e12 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn cell_config(spec: &SweepSpec, value: f64) -> Result<crate::types::RunConfig, SweepError> {
    let mut file = spec.base.clone();
    config::apply_set(&mut file, &format!("{}={}", spec.axis, fmt_axis(value)))?;
    if spec.worst_case_isgw {
        file.resources.n_between_prev = file.resources.n_upf_prev;
        file.resources.n_between_new = 0;
    }
    Ok(config::compile(&file)?)
}

fn run_cell(spec: &SweepSpec, value: f64, scheme: SchemeKind) -> Result<SweepRow, SweepError> {
    let cfg = cell_config(spec, value)?;
    let metrics = analytic::evaluate(scheme, &cfg);
    let (delay_us, interval_us) = match spec.mode {
        SweepMode::Analytic => (metrics.delay, metrics.interval),
        SweepMode::Sim | SweepMode::Both => {
            let out = protocols::run_scheme(&cfg, scheme)?;
            if spec.mode == SweepMode::Both {
                let d = analytic::compute_step_delays(&cfg);
                let flow = Mipv6DelayVariant::MessageFlow;
                let want_delay = analytic::handover_delay(scheme, &d, flow);
                let want_interval = analytic::handover_interval(scheme, &d, flow);
                let mismatch = |metric, sim_us, analytic_us| SweepError::Mismatch {
                    scheme,
                    axis: spec.axis.clone(),
                    value,
                    metric,
                    sim_us,
                    analytic_us,
                };
                if out.delay != want_delay {
                    return Err(mismatch("isho_delay", out.delay, want_delay));
                }
                if out.interval != want_interval {
                    return Err(mismatch("isho_interval", out.interval, want_interval));
                }
            }
            (out.delay, out.interval)
        }
    };
    Ok(SweepRow {
        axis: value,
        scheme,
        mode: spec.mode,
        delay_ms: delay_us as f64 / 1000.0,
        interval_ms: interval_us as f64 / 1000.0,
        cr: metrics.cr,
        br: metrics.br,
        sc: metrics.sc,
    })
}

fn cell_error_kind(e: &SweepError) -> CellErrorKind {
    match e {
        SweepError::Config(_) | SweepError::BadAxis(_) => CellErrorKind::Config,
        SweepError::Mismatch { .. } => CellErrorKind::Mismatch,
        _ => CellErrorKind::Sim,
    }
}

/// Evaluates every cell of the sweep. Cell failures are recorded in the
/// result; rows keep (value, scheme) input order regardless of parallelism.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepResult, SweepError> {
    if spec.values.is_empty() || spec.schemes.is_empty() {
        return Err(SweepError::EmptySweep);
    }
    {
        let mut probe = spec.base.clone();
        config::apply_set(&mut probe, &format!("{}={}", spec.axis, fmt_axis(spec.values[0])))
            .map_err(SweepError::BadAxis)?;
    }
    let cells: Vec<(f64, SchemeKind)> = spec
        .values
        .iter()
        .flat_map(|&v| spec.schemes.iter().map(move |&s| (v, s)))
        .collect();
    let evaluate = || -> Vec<Result<SweepRow, SweepError>> {
        cells
            .par_iter()
            .map(|&(value, scheme)| run_cell(spec, value, scheme))
            .collect()
    };
    let outcomes = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SweepError::Threads(e.to_string()))?
            .install(evaluate),
        None => evaluate(),
    };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for ((value, scheme), outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(CellError {
                axis: value,
                scheme,
                kind: cell_error_kind(&e),
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepResult {
        preset: spec.name.clone(),
        rows,
        errors,
    })
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{:.3},{:.2},{:.2},{:.2}\n",
            fmt_axis(r.axis),
            r.scheme.name(),
            r.mode.label(),
            r.delay_ms,
            r.interval_ms,
            r.cr,
            r.br,
            r.sc
        ));
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRow>, SweepError> {
    let bad = |msg: String| SweepError::CsvFormat(msg);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header.trim_end() != CSV_HEADER {
        return Err(bad(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(bad(format!("line {}: expected 8 fields", i + 2)));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad number '{s}'", i + 2)))
        };
        rows.push(SweepRow {
            axis: num(fields[0])?,
            scheme: SchemeKind::from_name(fields[1])
                .ok_or_else(|| bad(format!("line {}: unknown scheme '{}'", i + 2, fields[1])))?,
            mode: SweepMode::from_label(fields[2])
                .ok_or_else(|| bad(format!("line {}: unknown mode '{}'", i + 2, fields[2])))?,
            delay_ms: num(fields[3])?,
            interval_ms: num(fields[4])?,
            cr: num(fields[5])?,
            br: num(fields[6])?,
            sc: num(fields[7])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ClaimKind {
    /// Percent interval reduction vs the baseline at one axis point.
    IntervalReductionAt(SchemeKind, f64),
    /// Max percent delay reduction vs the baseline over the whole sweep.
    DelayReductionPeak(SchemeKind),
    /// Percent signalling-cost increase vs the baseline at one axis point.
    ScIncreaseAt(SchemeKind, f64),
    /// Max percent signalling-cost increase over the whole sweep.
    ScIncreasePeak(SchemeKind),
    /// 1 when the signalling costs order strictly baseline < gtp < mipv6 <
    /// hybrid at the given axis point.
    ScOrderingAt(f64),
    /// Max absolute CR difference between two schemes over the sweep.
    CrEqualAll(SchemeKind, SchemeKind),
    /// 1 when CR orders gtp >= hybrid >= baseline at every axis point.
    CrOrderingAll,
    /// CR of one scheme at one axis point.
    CrValueAt(SchemeKind, f64),
}

/// One expected headline value with its acceptance band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Claim {
    pub id: &'static str,
    /// Preset whose rows this claim is computed from.
    pub preset: &'static str,
    pub target: f64,
    pub lo: f64,
    pub hi: f64,
    kind: ClaimKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimResult {
    pub id: &'static str,
    pub preset: &'static str,
    pub value: f64,
    pub target: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ClaimResult {
    pub fn pass(&self) -> bool {
        self.value.is_finite() && self.lo <= self.value && self.value <= self.hi
    }
}

/// The default claim set. Percent targets carry a +/-10 point band; range
/// claims use the range midpoint and half-width plus the same slack;
/// equalities and orderings are exact.
pub fn claim_set() -> Vec<Claim> {
    use ClaimKind::*;
    use SchemeKind::*;
    let c = |id, preset, target, lo, hi, kind| Claim {
        id,
        preset,
        target,
        lo,
        hi,
        kind,
    };
    vec![
        c("interval-reduction-gtp", "fig4", 40.0, 30.0, 50.0, IntervalReductionAt(Gtpv1U, 1.0)),
        c("delay-reduction-mip-pd-peak", "fig4", 60.0, 50.0, 70.0, DelayReductionPeak(Mipv6RrBu)),
        c("delay-reduction-gtp-pd-peak", "fig4", 80.0, 70.0, 90.0, DelayReductionPeak(Gtpv1U)),
        c(
            "delay-reduction-hybrid-pd-peak",
            "fig4",
            80.0,
            70.0,
            90.0,
            DelayReductionPeak(HybridMipv6Gtp),
        ),
        c(
            "delay-reduction-mip-tnf-peak",
            "fig4-tnf",
            58.0,
            48.0,
            68.0,
            DelayReductionPeak(Mipv6RrBu),
        ),
        c(
            "delay-reduction-gtp-tnf-peak",
            "fig4-tnf",
            76.0,
            66.0,
            86.0,
            DelayReductionPeak(Gtpv1U),
        ),
        c(
            "delay-reduction-hybrid-tnf-peak",
            "fig4-tnf",
            76.0,
            66.0,
            86.0,
            DelayReductionPeak(HybridMipv6Gtp),
        ),
        // The gtp increase must stay positive, so its band floors at 0.5
        // rather than extending the full 10 points below the target.
        c("sc-increase-gtp", "fig7", 3.0, 0.5, 13.0, ScIncreaseAt(Gtpv1U, 1.0)),
        c("sc-increase-mip", "fig7", 40.0, 30.0, 50.0, ScIncreaseAt(Mipv6RrBu, 1.0)),
        c(
            "sc-increase-hybrid",
            "fig7",
            57.5,
            47.5,
            67.5,
            ScIncreaseAt(HybridMipv6Gtp, 1.0),
        ),
        c("sc-increase-gtp-pc-peak", "fig7", 10.0, 0.0, 20.0, ScIncreasePeak(Gtpv1U)),
        c("sc-increase-gtp-tc-peak", "fig7-tc", 10.0, 0.0, 20.0, ScIncreasePeak(Gtpv1U)),
        c("sc-ordering", "fig7", 1.0, 1.0, 1.0, ScOrderingAt(1.0)),
        c(
            "cr-mip-matches-3gpp",
            "fig5",
            0.0,
            0.0,
            0.0,
            CrEqualAll(Mipv6RrBu, Baseline3gpp),
        ),
        c("cr-ordering", "fig5", 1.0, 1.0, 1.0, CrOrderingAll),
        c("cr-gtp-defaults", "fig4", 400.0, 400.0, 400.0, CrValueAt(Gtpv1U, 1.0)),
    ]
}

fn row_at(rows: &[SweepRow], axis: f64, scheme: SchemeKind) -> Option<&SweepRow> {
    rows.iter().find(|r| r.axis == axis && r.scheme == scheme)
}

fn axis_values(rows: &[SweepRow]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in rows {
        if !out.contains(&r.axis) {
            out.push(r.axis);
        }
    }
    out
}

fn eval_claim(kind: ClaimKind, rows: &[SweepRow]) -> Option<f64> {
    use SchemeKind::*;
    let reduction = |part: f64, whole: f64| 100.0 * (1.0 - part / whole);
    match kind {
        ClaimKind::IntervalReductionAt(scheme, axis) => {
            let base = row_at(rows, axis, Baseline3gpp)?;
            let s = row_at(rows, axis, scheme)?;
            Some(reduction(s.interval_ms, base.interval_ms))
        }
        ClaimKind::DelayReductionPeak(scheme) => {
            let axes = axis_values(rows);
            if axes.is_empty() {
                return None;
            }
            let mut best = f64::NEG_INFINITY;
            for axis in axes {
                let base = row_at(rows, axis, Baseline3gpp)?;
                let s = row_at(rows, axis, scheme)?;
                best = best.max(reduction(s.delay_ms, base.delay_ms));
            }
            Some(best)
        }
        ClaimKind::ScIncreaseAt(scheme, axis) => {
            let base = row_at(rows, axis, Baseline3gpp)?;
            let s = row_at(rows, axis, scheme)?;
            Some(100.0 * (s.sc / base.sc - 1.0))
        }
        ClaimKind::ScIncreasePeak(scheme) => {
            let axes = axis_values(rows);
            if axes.is_empty() {
                return None;
            }
            let mut best = f64::NEG_INFINITY;
            for axis in axes {
                let base = row_at(rows, axis, Baseline3gpp)?;
                let s = row_at(rows, axis, scheme)?;
                best = best.max(100.0 * (s.sc / base.sc - 1.0));
            }
            Some(best)
        }
        ClaimKind::ScOrderingAt(axis) => {
            let sc = |s| row_at(rows, axis, s).map(|r| r.sc);
            let (s3, sg, sm, sh) = (
                sc(Baseline3gpp)?,
                sc(Gtpv1U)?,
                sc(Mipv6RrBu)?,
                sc(HybridMipv6Gtp)?,
            );
            Some(if s3 < sg && sg < sm && sm < sh { 1.0 } else { 0.0 })
        }
        ClaimKind::CrEqualAll(a, b) => {
            let axes = axis_values(rows);
            if axes.is_empty() {
                return None;
            }
            let mut worst: f64 = 0.0;
            for axis in axes {
                let ra = row_at(rows, axis, a)?;
                let rb = row_at(rows, axis, b)?;
                worst = worst.max((ra.cr - rb.cr).abs());
            }
            Some(worst)
        }
        ClaimKind::CrOrderingAll => {
            let axes = axis_values(rows);
            if axes.is_empty() {
                return None;
            }
            for axis in axes {
                let cr = |s| row_at(rows, axis, s).map(|r| r.cr);
                let (c3, cg, ch) = (cr(Baseline3gpp)?, cr(Gtpv1U)?, cr(HybridMipv6Gtp)?);
                if !(cg >= ch && ch >= c3) {
                    return Some(0.0);
                }
            }
            Some(1.0)
        }
        ClaimKind::CrValueAt(scheme, axis) => Some(row_at(rows, axis, scheme)?.cr),
    }
}

/// Evaluates each claim against the results of the preset it names.
/// Missing presets or missing cells are reported as [`SweepError::NotCovered`].
pub fn paper_check(
    results: &[SweepResult],
    claims: &[Claim],
) -> Result<Vec<ClaimResult>, SweepError> {
    if claims.is_empty() {
        return Err(SweepError::NoClaims);
    }
    let mut out = Vec::with_capacity(claims.len());
    for claim in claims {
        let not_covered = || SweepError::NotCovered {
            claim: claim.id,
            preset: claim.preset,
        };
        let rows = results
            .iter()
            .find(|r| r.preset == claim.preset)
            .map(|r| &r.rows)
            .ok_or_else(not_covered)?;
        let value = eval_claim(claim.kind, rows).ok_or_else(not_covered)?;
        out.push(ClaimResult {
            id: claim.id,
            preset: claim.preset,
            value,
            target: claim.target,
            lo: claim.lo,
            hi: claim.hi,
        });
    }
    Ok(out)
}

/// Runs every preset the default claim set needs on top of `base`, then
/// checks the claims. Any failed sweep cell aborts with its error.
pub fn run_paper_check(
    base: &FileConfig,
    jobs: Option<usize>,
) -> Result<Vec<ClaimResult>, SweepError> {
    let claims = claim_set();
    let mut needed: Vec<&'static str> = Vec::new();
    for c in &claims {
        if !needed.contains(&c.preset) {
            needed.push(c.preset);
        }
    }
    let mut results = Vec::new();
    for name in needed {
        let spec = preset_on(name, base.clone()).expect("claim presets are shipped");
        let result = run_sweep(&spec, jobs)?;
        if let Some(e) = result.errors.first() {
            return Err(SweepError::CellFailed {
                preset: name.to_string(),
                scheme: e.scheme,
                axis: spec.axis.clone(),
                value: e.axis,
                message: e.message.clone(),
            });
        }
        results.push(result);
    }
    paper_check(&results, &claims)
}

pub fn all_pass(results: &[ClaimResult]) -> bool {
    results.iter().all(|r| r.pass())
}

/// Human-readable claim table.
pub fn render_claim_table(results: &[ClaimResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<30} {:<8} {:>9} {:>8}  {:<15} status\n",
        "claim", "preset", "measured", "target", "band"
    ));
    for r in results {
        let band = format!("[{}, {}]", r.lo, r.hi);
        out.push_str(&format!(
            "{:<30} {:<8} {:>9.2} {:>8.1}  {:<15} {}\n",
            r.id,
            r.preset,
            r.value,
            r.target,
            band,
            if r.pass() { "pass" } else { "FAIL" }
        ));
    }
    out
}

/// Machine-readable claim summary.
pub fn claim_summary_csv(results: &[ClaimResult]) -> String {
    let mut out = String::from("claim,preset,measured,target,lo,hi,status\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{:.4},{},{},{},{}\n",
            r.id,
            r.preset,
            r.value,
            r.target,
            r.lo,
            r.hi,
            if r.pass() { "pass" } else { "fail" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            assert!(preset(name).is_some(), "{name}");
        }
        assert!(preset("fig9").is_none());
    }

    #[test]
    fn fig4_shape_and_first_rows() {
        let result = run_sweep(&preset("fig4").unwrap(), None).unwrap();
        assert!(result.errors.is_empty(), "{:?}", result.errors);
        assert_eq!(result.rows.len(), 20);
        let csv = to_csv(&result.rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "1,3gpp,both,156.000,156.000,300.00,200.00,100.00"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,mipv6,both,95.000,142.000,300.00,200.00,134.00"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,gtp,both,43.000,90.000,400.00,200.00,104.00"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,hybrid,both,43.000,142.000,320.00,200.00,162.00"
        );
    }

    #[test]
    fn sweep_output_is_identical_across_job_counts() {
        let spec = preset("fig4").unwrap();
        let a = to_csv(&run_sweep(&spec, None).unwrap().rows);
        let b = to_csv(&run_sweep(&spec, Some(8)).unwrap().rows);
        let c = to_csv(&run_sweep(&spec, Some(1)).unwrap().rows);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn fig5_uses_worst_case_span_accounting() {
        let result = run_sweep(&preset("fig5").unwrap(), None).unwrap();
        assert!(result.errors.is_empty());
        let at = |axis, scheme| row_at(&result.rows, axis, scheme).unwrap().cr;
        assert_eq!(at(5.0, SchemeKind::Baseline3gpp), 500.0);
        assert_eq!(at(5.0, SchemeKind::Mipv6RrBu), 500.0);
        assert_eq!(at(5.0, SchemeKind::Gtpv1U), 800.0);
        assert!((at(5.0, SchemeKind::HybridMipv6Gtp) - 560.0).abs() < 1e-9);
        for axis in [1.0, 2.0, 3.0, 4.0, 5.0] {
            assert_eq!(
                at(axis, SchemeKind::Mipv6RrBu),
                at(axis, SchemeKind::Baseline3gpp)
            );
        }
    }

    #[test]
    fn baseline_reduction_against_itself_is_zero() {
        let result = run_sweep(&preset("fig4").unwrap(), None).unwrap();
        for r in result
            .rows
            .iter()
            .filter(|r| r.scheme == SchemeKind::Baseline3gpp)
        {
            assert_eq!(100.0 * (1.0 - r.delay_ms / r.delay_ms), 0.0);
        }
    }

    #[test]
    fn claims_all_pass_at_defaults() {
        let results = run_paper_check(&FileConfig::default(), None).unwrap();
        assert_eq!(results.len(), claim_set().len());
        for r in &results {
            assert!(r.pass(), "{} = {}", r.id, r.value);
        }
        let get = |id: &str| results.iter().find(|r| r.id == id).unwrap().value;
        assert!((get("interval-reduction-gtp") - 42.3077).abs() < 0.001);
        assert!((get("delay-reduction-mip-pd-peak") - 55.24).abs() < 0.05);
        assert!((get("delay-reduction-gtp-pd-peak") - 76.21).abs() < 0.05);
        assert!((get("delay-reduction-mip-tnf-peak") - 51.42).abs() < 0.05);
        assert!((get("delay-reduction-gtp-tnf-peak") - 75.94).abs() < 0.05);
        assert!((get("sc-increase-gtp") - 4.0).abs() < 1e-9);
        assert!((get("sc-increase-mip") - 34.0).abs() < 1e-9);
        assert!((get("sc-increase-hybrid") - 62.0).abs() < 1e-9);
        assert!((get("sc-increase-gtp-pc-peak") - 13.64).abs() < 0.05);
        assert!((get("sc-increase-gtp-tc-peak") - 13.16).abs() < 0.05);
        assert_eq!(get("sc-ordering"), 1.0);
        assert_eq!(get("cr-mip-matches-3gpp"), 0.0);
        assert_eq!(get("cr-ordering"), 1.0);
        assert_eq!(get("cr-gtp-defaults"), 400.0);
    }

    #[test]
    fn claims_fail_when_the_timing_is_skewed() {
        // A huge DN-side link hits the baseline (whose secondary auth
        // crosses it four times) far harder than the tunnelled schemes, so
        // the reduction claims leave their bands.
        let mut base = FileConfig::default();
        config::apply_set(&mut base, "delays.t_gw_dn=100").unwrap();
        let results = run_paper_check(&base, None).unwrap();
        assert!(!all_pass(&results));
    }

    #[test]
    fn csv_round_trips() {
        let result = run_sweep(&preset("fig7").unwrap(), None).unwrap();
        let csv = to_csv(&result.rows);
        let parsed = from_csv(&csv).unwrap();
        assert_eq!(to_csv(&parsed), csv);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(matches!(from_csv(""), Err(SweepError::CsvFormat(_))));
        assert!(matches!(
            from_csv("nope\n1,2,3\n"),
            Err(SweepError::CsvFormat(_))
        ));
        let bad_row = format!("{CSV_HEADER}\n1,3gpp,both,1,2,3\n");
        assert!(matches!(from_csv(&bad_row), Err(SweepError::CsvFormat(_))));
        let bad_scheme = format!("{CSV_HEADER}\n1,lte,both,1,2,3,4,5\n");
        assert!(matches!(
            from_csv(&bad_scheme),
            Err(SweepError::CsvFormat(_))
        ));
    }

    #[test]
    fn spec_files_load_with_defaults_filled_in() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("upf-hops.toml");
        std::fs::write(
            &path,
            "axis = \"delays.pd_upf\"\nvalues = [1.0, 2.0]\nschemes = [\"gtp\", \"hybrid\"]\nmode = \"both\"\n",
        )
        .unwrap();
        let spec = load_spec(&path, FileConfig::default()).unwrap();
        assert_eq!(spec.name, "upf-hops");
        assert_eq!(spec.axis, "delays.pd_upf");
        assert_eq!(spec.mode, SweepMode::Both);
        assert_eq!(
            spec.schemes,
            vec![SchemeKind::Gtpv1U, SchemeKind::HybridMipv6Gtp]
        );
        assert!(!spec.worst_case_isgw);
        let result = run_sweep(&spec, None).unwrap();
        assert_eq!(result.rows.len(), 4);
        assert!(result.errors.is_empty());

        // Minimal form: axis and values only.
        std::fs::write(&path, "axis = \"signalling.pc_nf\"\nvalues = [2.0]\n").unwrap();
        let spec = load_spec(&path, FileConfig::default()).unwrap();
        assert_eq!(spec.mode, SweepMode::Analytic);
        assert_eq!(spec.schemes.len(), 4);

        std::fs::write(&path, "axis = \"delays.pd_nf\"\n").unwrap();
        assert!(matches!(
            load_spec(&path, FileConfig::default()),
            Err(SweepError::SpecFile { .. })
        ));
        std::fs::write(&path, "axis = \"delays.pd_nf\"\nvalues = [1.0]\nmode = \"fast\"\n")
            .unwrap();
        assert!(matches!(
            load_spec(&path, FileConfig::default()),
            Err(SweepError::SpecFile { .. })
        ));
    }

    #[test]
    fn cell_failures_are_recorded_and_the_sweep_continues() {
        let mut spec = preset("fig5").unwrap();
        spec.values = vec![1.0, 100.0];
        spec.schemes = vec![SchemeKind::Gtpv1U];
        let result = run_sweep(&spec, None).unwrap();
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.errors.len(), 1);
        assert_eq!(result.errors[0].axis, 100.0);
        assert_eq!(result.errors[0].kind, CellErrorKind::Config);
    }

    #[test]
    fn unknown_axis_is_rejected_up_front() {
        let mut spec = preset("fig4").unwrap();
        spec.axis = "delays.nonexistent".into();
        assert!(matches!(
            run_sweep(&spec, None),
            Err(SweepError::BadAxis(_))
        ));
    }

    #[test]
    fn uncovered_claims_are_an_error() {
        let err = paper_check(&[], &claim_set()).unwrap_err();
        assert!(matches!(err, SweepError::NotCovered { .. }));
        let fig4 = run_sweep(&preset("fig4").unwrap(), None).unwrap();
        let err = paper_check(&[fig4], &claim_set()).unwrap_err();
        assert!(matches!(
            err,
            SweepError::NotCovered {
                preset: "fig4-tnf",
                ..
            }
        ));
        assert!(matches!(paper_check(&[], &[]), Err(SweepError::NoClaims)));
    }

    #[test]
    fn claim_report_renders_both_forms() {
        let results = run_paper_check(&FileConfig::default(), None).unwrap();
        let table = render_claim_table(&results);
        assert!(table.contains("interval-reduction-gtp"));
        assert!(table.contains("pass"));
        assert!(!table.contains("FAIL"));
        let csv = claim_summary_csv(&results);
        assert!(csv.starts_with("claim,preset,measured,target,lo,hi,status\n"));
        assert_eq!(csv.lines().count(), results.len() + 1);
    }
}
