//! End-to-end tests against the installed `isho` binary.

use std::path::Path;
use std::process::{Command, Output};

use isho::wire::{gtpu, ipv6};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isho"))
        .args(args)
        .env_remove("ISHO_CONFIG")
        .output()
        .expect("spawn isho")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analytic_prints_the_default_metrics() {
    let out = run(&["analytic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for needle in ["3gpp", "156.000", "mipv6", "95.000", "gtp", "43.000", "90.000", "162.00"] {
        assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
    }
}

#[test]
fn analytic_applies_overrides() {
    let out = run(&["analytic", "--scheme", "3gpp", "--set", "delays.pd_nf=2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("179.000"), "{text}");
    assert!(!text.contains("mipv6"), "{text}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--scheme", "wimax"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_configuration_exits_2() {
    let out = run(&["analytic", "--set", "resources.n_upf_prev=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_upf_prev"), "{}", stderr(&out));

    let out = run(&["analytic", "--set", "delays.no_such_knob=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_claims_exit_3() {
    // Inflating the data-network link hits the release-and-reestablish
    // baseline much harder than the tunnel schemes, so the measured
    // reductions leave their bands.
    let out = run(&["check", "--set", "delays.t_gw_dn=100"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("FAIL"), "{text}");
}

#[test]
fn check_passes_at_defaults_and_writes_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("claims.csv");
    let out = run(&["check", "-o", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("all 16 claims hold"), "{}", stdout(&out));

    let text = std::fs::read_to_string(&summary).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("claim,preset,measured,target,lo,hi,status")
    );
    let rest: Vec<&str> = lines.collect();
    assert_eq!(rest.len(), 16);
    assert!(rest.iter().all(|l| l.ends_with(",pass")), "{text}");
}

#[test]
fn check_accepts_previously_swept_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig4.csv");
    let out = run(&["sweep", "fig4", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = run(&["check", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("interval-reduction-gtp"), "{text}");
    assert!(text.contains("all 5 claims hold"), "{text}");

    // A file that is not named after a preset cannot be matched to claims.
    let stray = dir.path().join("whatever.csv");
    std::fs::copy(&csv, &stray).unwrap();
    assert_eq!(run(&["check", stray.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sweep_csv_is_stable_across_thread_counts() {
    let baseline = run(&["sweep", "fig4"]);
    assert!(baseline.status.success(), "{}", stderr(&baseline));
    let text = stdout(&baseline);
    assert!(
        text.starts_with("axis,scheme,mode,isho_delay_ms,isho_interval_ms,cr,br,sc\n"),
        "{text}"
    );
    assert!(text.contains("1,gtp,both,43.000,90.000,400.00,200.00,104.00"), "{text}");

    for jobs in ["1", "8"] {
        let out = run(&["sweep", "fig4", "--jobs", jobs]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert_eq!(out.stdout, baseline.stdout, "jobs={jobs} changed the CSV");
    }
    let again = run(&["sweep", "fig4"]);
    assert_eq!(again.stdout, baseline.stdout, "rerun changed the CSV");
}

#[test]
fn sweep_supports_custom_axes() {
    let out = run(&[
        "sweep",
        "--axis",
        "delays.pd_nf",
        "--values",
        "1,3",
        "--schemes",
        "gtp",
        "--mode",
        "both",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("3,gtp,both,51.000,124.000"), "{text}");
}

#[test]
fn sweep_accepts_a_description_file_and_emits_a_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("upf-hops.toml");
    std::fs::write(
        &spec,
        "axis = \"delays.pd_upf\"\nvalues = [1.0, 4.0]\nschemes = [\"gtp\"]\nmode = \"both\"\n",
    )
    .unwrap();
    let csv = dir.path().join("upf-hops.csv");
    let script = dir.path().join("upf-hops.gp");
    let out = run(&[
        "sweep",
        spec.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
        "--gnuplot",
        script.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.contains("4,gtp,both,51.000,102.000"), "{rows}");
    let plot = std::fs::read_to_string(&script).unwrap();
    assert!(plot.contains("plot for [s in schemes]"), "{plot}");
    assert!(plot.contains(csv.to_str().unwrap()), "{plot}");
    assert!(plot.contains("schemes = 'gtp'"), "{plot}");

    // Malformed description files are a configuration error.
    std::fs::write(&spec, "axis = \"delays.pd_upf\"\n").unwrap();
    assert_eq!(run(&["sweep", spec.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn config_comes_from_the_environment_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let env_cfg = dir.path().join("env.toml");
    let flag_cfg = dir.path().join("flag.toml");
    std::fs::write(&env_cfg, "[delays]\npd_nf = 2.0\n").unwrap();
    std::fs::write(&flag_cfg, "[delays]\npd_nf = 3.0\n").unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_isho"))
        .args(["analytic", "--scheme", "3gpp"])
        .env("ISHO_CONFIG", &env_cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("179.000"), "{}", stdout(&out));

    // An explicit --config wins over the environment.
    let out = Command::new(env!("CARGO_BIN_EXE_isho"))
        .args(["analytic", "--scheme", "3gpp", "--config", flag_cfg.to_str().unwrap()])
        .env("ISHO_CONFIG", &env_cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("202.000"), "{}", stdout(&out));

    // A dangling ISHO_CONFIG is a config error, not silently ignored.
    let out = Command::new(env!("CARGO_BIN_EXE_isho"))
        .args(["analytic"])
        .env("ISHO_CONFIG", dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn the_shipped_example_config_loads() {
    let example = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("example-config.toml");
    let out = run(&["--config", example.to_str().unwrap(), "analytic"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("156.000"), "{}", stdout(&out));
}

#[test]
fn simulate_writes_trace_and_pcap_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.log");
    let pcap = dir.path().join("run.pcap");
    let out = run(&[
        "simulate",
        "--scheme",
        "gtp",
        "--trace-out",
        log.to_str().unwrap(),
        "--pcap-out",
        pcap.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("closed-form cross-check: ok"), "{}", stdout(&out));

    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.contains("tunnel"), "{text}");
    assert!(text.contains("delivered via tunnel"), "{text}");

    let bytes = std::fs::read(&pcap).unwrap();
    assert_eq!(&bytes[..4], &[0xd4, 0xc3, 0xb2, 0xa1], "pcap magic");
    let mut gpdus = 0;
    for frame in pcap_frames(&bytes) {
        let Ok(outer) = ipv6::decode_datagram(frame) else {
            panic!("undecodable capture frame");
        };
        if outer.next_header != ipv6::UDP_PROTO {
            continue;
        }
        let (_, dport, payload) = ipv6::decode_udp(outer.payload).unwrap();
        if dport != gtpu::UDP_PORT {
            continue;
        }
        let (_, inner) = gtpu::decode_gpdu(payload).expect("captured G-PDU decodes");
        let inner = ipv6::decode_datagram(inner).expect("G-PDU payload is an IPv6 datagram");
        assert_eq!(inner.dst.to_string(), "2001:db8:0:1::1001");
        gpdus += 1;
    }
    assert_eq!(gpdus, 4, "tunnel-phase packets captured as G-PDUs");
}

/// Minimal reader for the classic little-endian pcap layout the tool writes.
fn pcap_frames(bytes: &[u8]) -> Vec<&[u8]> {
    let mut frames = Vec::new();
    let mut at = 24;
    while at + 16 <= bytes.len() {
        let len = u32::from_le_bytes(bytes[at + 8..at + 12].try_into().unwrap()) as usize;
        at += 16;
        frames.push(&bytes[at..at + len]);
        at += len;
    }
    frames
}

#[test]
fn simulate_accepts_a_sequence_directory() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("isho")
        .join("sequences");
    let out = run(&["simulate", "--scheme", "hybrid", "--sequences", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("cross-check: ok"), "{}", stdout(&out));
}

#[test]
fn codec_selftest_passes() {
    let out = run(&["codec-selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("golden vectors: ok"), "{text}");
    assert!(text.contains("no faults"), "{text}");
}
