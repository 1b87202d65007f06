//! `isho`: command-line front end for the handover simulator and cost model.
//!
//! Exit codes: 0 success (and all claims passing), 1 usage error, 2 invalid
//! configuration, 3 claim out of band, 4 simulation/codec failure.

mod selftest;

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isho::analytic;
use isho::config::{self, ConfigError, FileConfig};
use isho::experiments::{self, CellErrorKind, SweepError, SweepMode, SweepResult, SweepSpec};
use isho::protocols::run_scheme_with;
use isho::sequences::SequenceSet;
use isho::types::{Mipv6DelayVariant, RunConfig, SchemeKind, SchemeMetrics};
use isho::wire::pcap;

#[derive(Parser)]
#[command(name = "isho", version, about = "Inter-slice handover continuation: simulator and cost model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML). Defaults to $ISHO_CONFIG if set, else the
    /// built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one config key, e.g. --set delays.pd_nf=2 (repeatable).
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Read message sequences from this directory instead of generating them.
    #[arg(long, global = true, value_name = "DIR")]
    sequences: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the closed-form metrics for the selected schemes
    Analytic {
        /// all, or a comma-separated subset of 3gpp, mipv6, gtp, hybrid
        #[arg(long, default_value = "all")]
        scheme: String,
    },
    /// Run the discrete-event simulation and cross-check it against the
    /// closed forms
    Simulate {
        /// all, or a comma-separated subset of 3gpp, mipv6, gtp, hybrid
        #[arg(long, default_value = "all")]
        scheme: String,
        /// Override sim.seed
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-event log here (single scheme only)
        #[arg(long, value_name = "PATH")]
        trace_out: Option<PathBuf>,
        /// Write the captured frames as a pcap file (single scheme only)
        #[arg(long, value_name = "PATH")]
        pcap_out: Option<PathBuf>,
        /// Skip the closed-form cross-check
        #[arg(long)]
        no_verify: bool,
    },
    /// Evaluate the metrics across one config axis and emit CSV
    Sweep {
        /// Shipped preset (fig4, fig4-tnf, fig5, fig6, fig7, fig7-tc) or the
        /// path of a TOML sweep description
        preset: Option<String>,
        /// Dotted config key to sweep, e.g. delays.pd_nf
        #[arg(long, value_name = "KEY", conflicts_with = "preset")]
        axis: Option<String>,
        /// Comma-separated axis values (file units)
        #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
        values: Vec<f64>,
        /// Comma-separated scheme names (default: all four)
        #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
        schemes: Vec<String>,
        /// analytic, sim, or both (both also cross-checks them)
        #[arg(long, default_value = "analytic", conflicts_with = "preset")]
        mode: String,
        /// Pin the tunnel span to the whole previous chain
        #[arg(long, conflicts_with = "preset")]
        worst_case_isgw: bool,
        /// Write the CSV here instead of stdout
        #[arg(short, long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write a gnuplot script rendering the CSV (needs --out)
        #[arg(long, value_name = "PATH", requires = "out")]
        gnuplot: Option<PathBuf>,
        /// Worker threads (the output is identical regardless)
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
    /// Check the headline claims against sweep results
    Check {
        /// Sweep CSVs named after their preset (e.g. fig4.csv). When omitted,
        /// the needed sweeps run in-process.
        files: Vec<PathBuf>,
        /// Write the machine-readable claim summary here
        #[arg(short = 'o', long, value_name = "PATH")]
        summary: Option<PathBuf>,
        /// Worker threads for the in-process sweeps
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
    },
    /// Exercise the wire codecs: golden vectors, round-trips, decode fuzzing
    CodecSelftest,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Config(String),
    Claims(usize),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Claims(_) => 3,
            CliError::Run(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Run(m) => f.write_str(m),
            CliError::Claims(n) => write!(f, "{n} claim(s) out of band"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        CliError::Config(e.to_string())
    }
}

fn sweep_error(e: SweepError) -> CliError {
    match e {
        SweepError::UnknownPreset(_)
        | SweepError::EmptySweep
        | SweepError::CsvFormat(_)
        | SweepError::NotCovered { .. }
        | SweepError::NoClaims => CliError::Usage(e.to_string()),
        SweepError::BadAxis(_) | SweepError::Config(_) | SweepError::SpecFile { .. } => {
            CliError::Config(e.to_string())
        }
        SweepError::Sim(_)
        | SweepError::Mismatch { .. }
        | SweepError::Threads(_)
        | SweepError::CellFailed { .. } => CliError::Run(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let benign = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Analytic { ref scheme } => cmd_analytic(&cli.common, scheme),
        Cmd::Simulate {
            ref scheme,
            seed,
            ref trace_out,
            ref pcap_out,
            no_verify,
        } => cmd_simulate(&cli.common, scheme, seed, trace_out, pcap_out, no_verify),
        Cmd::Sweep {
            ref preset,
            ref axis,
            ref values,
            ref schemes,
            ref mode,
            worst_case_isgw,
            ref out,
            ref gnuplot,
            jobs,
        } => cmd_sweep(
            &cli.common,
            preset.as_deref(),
            axis.as_deref(),
            values,
            schemes,
            mode,
            worst_case_isgw,
            out,
            gnuplot,
            jobs,
        ),
        Cmd::Check {
            ref files,
            ref summary,
            jobs,
        } => cmd_check(&cli.common, files, summary, jobs),
        Cmd::CodecSelftest => selftest::run().map_err(CliError::Run),
    }
}

/// Loads the config file (flag, then $ISHO_CONFIG, then defaults) and applies
/// the --set overrides in order.
fn file_config(common: &Common) -> Result<FileConfig, CliError> {
    let path = common
        .config
        .clone()
        .or_else(|| std::env::var_os("ISHO_CONFIG").map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => config::load(&p)?,
        None => FileConfig::default(),
    };
    for spec in &common.set {
        config::apply_set(&mut cfg, spec)?;
    }
    Ok(cfg)
}

fn parse_scheme_list(spec: &str) -> Result<Vec<SchemeKind>, CliError> {
    if spec == "all" {
        return Ok(SchemeKind::ALL.to_vec());
    }
    spec.split(',')
        .map(|name| {
            SchemeKind::from_name(name.trim()).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown scheme '{name}' (expected all, 3gpp, mipv6, gtp, hybrid)"
                ))
            })
        })
        .collect()
}

fn sequence_set(
    common: &Common,
    cfg: &RunConfig,
    scheme: SchemeKind,
) -> Result<SequenceSet, CliError> {
    match &common.sequences {
        Some(dir) => SequenceSet::load_dir(dir, cfg, scheme)
            .map_err(|e| CliError::Config(format!("cannot load sequences from {}: {e}", dir.display()))),
        None => Ok(SequenceSet::for_scheme(cfg, scheme)),
    }
}

fn write_file(path: &PathBuf, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn print_metrics(rows: &[SchemeMetrics]) {
    println!(
        "{:<8} {:>12} {:>14} {:>8} {:>8} {:>8}",
        "scheme", "delay_ms", "interval_ms", "cr", "br", "sc"
    );
    for m in rows {
        println!(
            "{:<8} {:>12.3} {:>14.3} {:>8.2} {:>8.2} {:>8.2}",
            m.scheme.name(),
            m.delay as f64 / 1000.0,
            m.interval as f64 / 1000.0,
            m.cr,
            m.br,
            m.sc
        );
    }
}

fn cmd_analytic(common: &Common, scheme: &str) -> Result<(), CliError> {
    let file = file_config(common)?;
    let cfg = config::compile(&file)?;
    let schemes = parse_scheme_list(scheme)?;
    let mut rows = Vec::with_capacity(schemes.len());
    for s in schemes {
        let set = sequence_set(common, &cfg, s)?;
        rows.push(analytic::evaluate_with(s, &cfg, &set));
    }
    print_metrics(&rows);
    Ok(())
}

fn cmd_simulate(
    common: &Common,
    scheme: &str,
    seed: Option<u64>,
    trace_out: &Option<PathBuf>,
    pcap_out: &Option<PathBuf>,
    no_verify: bool,
) -> Result<(), CliError> {
    let mut file = file_config(common)?;
    if let Some(seed) = seed {
        file.sim.seed = seed;
    }
    let cfg = config::compile(&file)?;
    let schemes = parse_scheme_list(scheme)?;
    if schemes.len() != 1 && (trace_out.is_some() || pcap_out.is_some()) {
        return Err(CliError::Usage(
            "--trace-out/--pcap-out need a single --scheme".into(),
        ));
    }

    let mut rows = Vec::with_capacity(schemes.len());
    for &s in &schemes {
        let set = sequence_set(common, &cfg, s)?;
        let out = run_scheme_with(&cfg, s, &set).map_err(|e| CliError::Run(format!("{s}: {e}")))?;

        if !no_verify {
            let d = analytic::step_delays_from(&set, &cfg.delays);
            let want_delay = analytic::handover_delay(s, &d, Mipv6DelayVariant::MessageFlow);
            let want_interval = analytic::handover_interval(s, &d, Mipv6DelayVariant::MessageFlow);
            if out.delay != want_delay || out.interval != want_interval {
                return Err(CliError::Run(format!(
                    "{s}: simulated delay/interval {}/{} us disagree with the closed form {}/{} us",
                    out.delay, out.interval, want_delay, want_interval
                )));
            }
        }

        if let Some(path) = trace_out {
            write_file(path, out.trace.render_log(&set.topo).as_bytes())?;
        }
        if let Some(path) = pcap_out {
            let f = fs::File::create(path)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            pcap::write_capture(&mut w, &out.trace.frames)
                .map_err(|e| CliError::Run(format!("pcap write failed: {e}")))?;
            w.flush()
                .map_err(|e| CliError::Run(format!("pcap write failed: {e}")))?;
        }

        let st = &out.stream;
        println!(
            "{:<8} delay {:>8.3} ms  interval {:>8.3} ms  stream {}/{} delivered \
             (prev {}, tunnel {}, new {}), {} dropped, {} queued",
            s.name(),
            out.delay as f64 / 1000.0,
            out.interval as f64 / 1000.0,
            st.delivered_total(),
            st.emitted,
            st.delivered_prev,
            st.delivered_tunnel,
            st.delivered_new,
            st.dropped,
            st.queued,
        );
        rows.push(out);
    }
    if !no_verify {
        println!("closed-form cross-check: ok ({} scheme(s))", rows.len());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &Common,
    preset: Option<&str>,
    axis: Option<&str>,
    values: &[f64],
    schemes: &[String],
    mode: &str,
    worst_case_isgw: bool,
    out: &Option<PathBuf>,
    gnuplot: &Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let base = file_config(common)?;
    let spec = match preset {
        Some(name) if std::path::Path::new(name).is_file() => {
            experiments::load_spec(std::path::Path::new(name), base).map_err(sweep_error)?
        }
        Some(name) => experiments::preset_on(name, base).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset '{name}' (expected one of {}, or a sweep description file)",
                experiments::PRESETS.join(", ")
            ))
        })?,
        None => {
            let axis = axis.ok_or_else(|| {
                CliError::Usage("either a preset name or --axis and --values are required".into())
            })?;
            if values.is_empty() {
                return Err(CliError::Usage("--values needs at least one number".into()));
            }
            let schemes = if schemes.is_empty() {
                SchemeKind::ALL.to_vec()
            } else {
                parse_scheme_list(&schemes.join(","))?
            };
            let mode = SweepMode::from_label(mode).ok_or_else(|| {
                CliError::Usage(format!("unknown mode '{mode}' (expected analytic, sim, both)"))
            })?;
            SweepSpec {
                name: "custom".into(),
                axis: axis.to_string(),
                values: values.to_vec(),
                schemes,
                mode,
                base,
                worst_case_isgw,
            }
        }
    };

    let result = experiments::run_sweep(&spec, jobs).map_err(sweep_error)?;
    let csv = experiments::to_csv(&result.rows);
    match out {
        Some(path) => write_file(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let (Some(script), Some(csv_path)) = (gnuplot, out) {
        write_file(script, gnuplot_script(csv_path, &spec).as_bytes())?;
    }

    if !result.errors.is_empty() {
        for e in &result.errors {
            eprintln!("cell {} {}={}: {}", e.scheme, spec.axis, e.axis, e.message);
        }
        let total = spec.values.len() * spec.schemes.len();
        let msg = format!("{} of {total} sweep cells failed", result.errors.len());
        let hard = result
            .errors
            .iter()
            .any(|e| matches!(e.kind, CellErrorKind::Sim | CellErrorKind::Mismatch));
        return Err(if hard { CliError::Run(msg) } else { CliError::Config(msg) });
    }
    Ok(())
}

/// Plots delay and interval against the swept axis, one series per scheme,
/// straight from the emitted CSV.
fn gnuplot_script(csv: &std::path::Path, spec: &SweepSpec) -> String {
    let schemes: Vec<&str> = spec.schemes.iter().map(|s| s.name()).collect();
    let png = csv.with_extension("png");
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 960,420\n\
         set output '{png}'\n\
         set key outside right\n\
         set xlabel '{axis}'\n\
         schemes = '{schemes}'\n\
         pick(s, col) = (strcol(2) eq s ? column(col) : NaN)\n\
         set multiplot layout 1,2\n\
         set ylabel 'handover delay (ms)'\n\
         plot for [s in schemes] '{csv}' using (pick(s, 1)):(pick(s, 4)) with linespoints title s\n\
         set ylabel 'handover interval (ms)'\n\
         plot for [s in schemes] '{csv}' using (pick(s, 1)):(pick(s, 5)) with linespoints title s\n\
         unset multiplot\n",
        png = png.display(),
        axis = spec.axis,
        schemes = schemes.join(" "),
        csv = csv.display(),
    )
}

fn cmd_check(
    common: &Common,
    files: &[PathBuf],
    summary: &Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let base = file_config(common)?;
    let results = if files.is_empty() {
        experiments::run_paper_check(&base, jobs).map_err(sweep_error)?
    } else {
        let mut sweeps: Vec<SweepResult> = Vec::with_capacity(files.len());
        for path in files {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| {
                    CliError::Usage(format!("cannot infer a preset from '{}'", path.display()))
                })?;
            if !experiments::PRESETS.contains(&stem) {
                return Err(CliError::Usage(format!(
                    "'{}' is not named after a preset (expected one of {})",
                    path.display(),
                    experiments::PRESETS.join(", ")
                )));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let rows = experiments::from_csv(&text).map_err(sweep_error)?;
            sweeps.push(SweepResult {
                preset: stem.to_string(),
                rows,
                errors: Vec::new(),
            });
        }
        let covered: Vec<&str> = sweeps.iter().map(|r| r.preset.as_str()).collect();
        let mut claims = experiments::claim_set();
        claims.retain(|c| covered.contains(&c.preset));
        if claims.is_empty() {
            return Err(CliError::Usage(
                "the provided results cover none of the claims".into(),
            ));
        }
        experiments::paper_check(&sweeps, &claims).map_err(sweep_error)?
    };

    print!("{}", experiments::render_claim_table(&results));
    if let Some(path) = summary {
        write_file(path, experiments::claim_summary_csv(&results).as_bytes())?;
    }

    let failed = results.iter().filter(|r| !r.pass()).count();
    if failed > 0 {
        return Err(CliError::Claims(failed));
    }
    println!("all {} claims hold", results.len());
    Ok(())
}
