//! Command-line driver for the resonant-link experiments.
//!
//! Every subcommand resolves an [`ExperimentConfig`] (a JSON file via
//! `--config`, or a named built-in via `--builtin`), runs one experiment,
//! writes its CSV/JSON record pair into `--out`, and prints a short human
//! summary to stdout. Failures print a machine-readable JSON object
//! `{"error":{"kind":…,"message":…}}` to stderr and exit nonzero, so
//! scripted callers never have to parse prose.

use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use reslink::harness::{
    decode_capture, decode_record, run_ber_sweep, run_efficiency_report, run_link_analysis,
    run_mismatch_sweep, run_noise_side_equivalence, run_offpeak_cases, run_transition_study,
    ExperimentConfig, ResultRecord,
};
use reslink::{Error, Result};

// ---------------------------------------------------------------------------
// Argument layout
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "reslink",
    version,
    about = "Resonant inductive link analysis and Monte Carlo experiments",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze the configured link: tones, poles, peaks, channel taps
    Analyze(CommonArgs),
    /// Sweep BER over the configured Es/N0 grid for every rate
    Ber(BerArgs),
    /// Sweep coupling-estimate mismatch at the first configured rate
    Mismatch(CommonArgs),
    /// Run the marginal-coupling cases and extrapolate to BER 1e-6
    Offpeak(CommonArgs),
    /// Report efficiency curves, steady-state cross-checks, and transitions
    Efficiency(CommonArgs),
    /// Integrate the tone-switch transients and record the waveforms
    Transient(CommonArgs),
    /// Decode a waveform or capture file with the noncoherent receiver
    Decode(DecodeArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config as JSON (overrides --builtin)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named built-in config
    #[arg(long, value_name = "NAME", default_value = "reference")]
    builtin: String,

    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,

    /// Directory for the CSV/JSON record pair
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct BerArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Compare receiver-side and transmitter-side noise on the matched
    /// axis instead of sweeping the configured curves
    #[arg(long)]
    compare_noise_sides: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Raw f32 waveform (with `<path>.json` sidecar) or raw signed 8-bit
    /// capture to decode
    #[arg(long, value_name = "PATH")]
    capture: PathBuf,

    /// Optional reference bit sequence ('0'/'1' characters, whitespace
    /// ignored) to score the decode against
    #[arg(long, value_name = "PATH")]
    reference_bits: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::builtin(&common.builtin).ok_or_else(|| {
            Error::Config(format!("unknown built-in config \"{}\"", common.builtin))
        })?,
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn save_record(record: &ResultRecord, out: &Path) -> Result<()> {
    let (csv, json) = record.save(out)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

/// Parses a reference bit file: '0' and '1' characters, whitespace ignored.
fn parse_reference_bits(path: &Path) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path)?;
    let mut bits = Vec::new();
    for (i, c) in text.chars().enumerate() {
        match c {
            '0' => bits.push(0),
            '1' => bits.push(1),
            c if c.is_whitespace() => {}
            c => {
                return Err(Error::Format(format!(
                    "reference bit file {}: unexpected character {c:?} at offset {i}",
                    path.display()
                )))
            }
        }
    }
    if bits.is_empty() {
        return Err(Error::Format(format!(
            "reference bit file {} holds no bits",
            path.display()
        )));
    }
    Ok(bits)
}

/// Stable machine-readable tag for each error variant.
fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::NumericFailure(_) => "numeric-failure",
        Error::RepeatedPoles { .. } => "repeated-poles",
        Error::AliasingRisk { .. } => "aliasing-risk",
        Error::UnstableDiscretization { .. } => "unstable-discretization",
        Error::SpecInfeasible { .. } => "spec-infeasible",
        Error::LengthMismatch { .. } => "length-mismatch",
        Error::StepTooLarge { .. } => "step-too-large",
        Error::SingularInductance { .. } => "singular-inductance",
        Error::NotSettled { .. } => "not-settled",
        Error::NoSplitInRange { .. } => "no-split-in-range",
        Error::SingularSystem(_) => "singular-system",
        Error::Format(_) => "format",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn cmd_analyze(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let record = run_link_analysis(&cfg)?;
    let s = &record.summary;
    println!("circuit resonance     {} Hz", s["f0_hz"]);
    println!(
        "keying tones          {} / {} Hz",
        s["approx_tones_hz"][0], s["approx_tones_hz"][1]
    );
    println!(
        "exact gain peaks      {} / {} Hz (split: {})",
        s["exact_peaks_hz"][0], s["exact_peaks_hz"][1], s["split"]
    );
    println!("splitting threshold   {}", s["k_split"]);
    println!("effective duration    {} s", s["t_eff_s"]);
    println!(
        "channel taps          {} (energy {})",
        s["tap_count"], s["tap_energy"]
    );
    save_record(&record, &args.out)
}

fn cmd_ber(args: &BerArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    if args.compare_noise_sides {
        let r = run_noise_side_equivalence(&cfg)?;
        println!("correlator variance ratio (shaped/white): {:.4}", r.variance_ratio);
        println!("zero-noise control errors: {}", r.zero_noise_errors);
        for p in &r.points {
            let gap = p
                .gap_db
                .map(|g| format!("{g:.3} dB"))
                .unwrap_or_else(|| "n/a".into());
            println!(
                "  {:>6.2} dB  receiver {:.3e}  transmitter {:.3e}  gap {}",
                p.es_n0_db, p.receiver.ber, p.transmitter.ber, gap
            );
        }
        match r.max_gap_db {
            Some(g) => println!("largest equivalent-axis gap: {g:.3} dB"),
            None => println!("no grid point produced enough errors on both sides for a gap"),
        }
        return save_record(&r.record, &args.common.out);
    }

    let r = run_ber_sweep(&cfg)?;
    for curve in &r.curves {
        println!("{:?} at {} bit/s:", curve.kind, curve.rate_bps);
        for p in &curve.points {
            println!(
                "  {:>6.2} dB  ber {:.3e}  ci [{:.3e}, {:.3e}]  ({} errors / {} bits)",
                p.es_n0_db, p.ber, p.ci_low, p.ci_high, p.errors, p.bits
            );
        }
    }
    save_record(&r.record, &args.common.out)
}

fn cmd_mismatch(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let r = run_mismatch_sweep(&cfg)?;
    for curve in &r.curves {
        println!(
            "estimate k = {} (tones {:.1} / {:.1} Hz, energy offset {:+.3} dB):",
            curve.k_estimate, curve.tones.0, curve.tones.1, curve.es_offset_db
        );
        for p in &curve.points {
            println!(
                "  {:>6.2} dB  ber {:.3e}  ci [{:.3e}, {:.3e}]",
                p.es_n0_db, p.ber, p.ci_low, p.ci_high
            );
        }
    }
    save_record(&r.record, &args.out)
}

fn cmd_offpeak(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let r = run_offpeak_cases(&cfg)?;
    for case in &r.cases {
        println!(
            "{} (k = {}, RL = {} Ω, tones {:.1} / {:.1} Hz, gains {:.4} / {:.4}):",
            case.label, case.k, case.rl, case.tones.0, case.tones.1,
            case.tone_gains.0, case.tone_gains.1
        );
        for p in &case.points {
            println!(
                "  {:>6.2} dB  ber {:.3e}  ci [{:.3e}, {:.3e}]",
                p.es_n0_db, p.ber, p.ci_low, p.ci_high
            );
        }
        println!(
            "  requires {:.2} dB for BER 1e-6{}",
            case.required_db_at_1e6,
            if case.extrapolated {
                " (extrapolated from the waterfall fit)"
            } else {
                ""
            }
        );
    }
    save_record(&r.record, &args.out)
}

fn cmd_efficiency(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let r = run_efficiency_report(&cfg)?;
    for c in &r.curves {
        println!(
            "k = {:<4} peak efficiency {:.4} at {} Hz",
            c.k, c.max_eta, c.argmax_hz
        );
    }
    println!("steady-state cross-check (phasor vs settled transient):");
    for s in &r.steady {
        println!(
            "  {:>10.1} Hz  phasor {:.6}  settled {:.6}",
            s.f_hz, s.phasor, s.settled
        );
    }
    println!(
        "tone-switch windows ({} s): high→low {:.4}, low→high {:.4}, average {:.4}",
        r.transitions.window_s,
        r.transitions.high_to_low,
        r.transitions.low_to_high,
        r.transitions.average
    );
    save_record(&r.record, &args.out)
}

fn cmd_transient(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let record = run_transition_study(&cfg)?;
    let s = &record.summary;
    println!(
        "sine drive:   high→low {}, low→high {}, average {}",
        s["sine"]["high_to_low"], s["sine"]["low_to_high"], s["sine"]["average"]
    );
    println!(
        "square drive: high→low {}, low→high {}, average {}",
        s["square"]["high_to_low"], s["square"]["low_to_high"], s["square"]["average"]
    );
    save_record(&record, &args.out)
}

fn cmd_decode(args: &DecodeArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let reference = args
        .reference_bits
        .as_deref()
        .map(parse_reference_bits)
        .transpose()?;
    let report = decode_capture(&args.capture, &cfg, reference.as_deref())?;
    println!(
        "{}: {} symbols at {} Sa/s ({:?})",
        report.format, report.n_symbols, report.fs, report.kind
    );
    let shown: String = report
        .bits
        .iter()
        .take(128)
        .map(|b| char::from(b'0' + b))
        .collect();
    println!(
        "bits: {shown}{}",
        if report.bits.len() > 128 { "…" } else { "" }
    );
    println!("median branch margin: {:.4}", report.median_margin);
    if report.low_confidence {
        println!("warning: low-confidence decode (margin below the confidence floor)");
    }
    if let (Some(errors), Some(ber)) = (report.errors, report.ber) {
        println!("reference comparison: {errors} bit errors (BER {ber:.3e})");
    }
    let record = decode_record(&report, &cfg);
    save_record(&record, &args.common.out)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Ber(args) => cmd_ber(args),
        Command::Mismatch(args) => cmd_mismatch(args),
        Command::Offpeak(args) => cmd_offpeak(args),
        Command::Efficiency(args) => cmd_efficiency(args),
        Command::Transient(args) => cmd_transient(args),
        Command::Decode(args) => cmd_decode(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
