//! Command-line front end for the broadcast-coding simulator.
//!
//! Four subcommands: `run` one experiment, `sweep` an axis into summary and
//! tradeoff CSVs, `oracle` a tiny instance exactly, and `golden` to replay
//! the two reference schedules.  Bad arguments and configs exit 2 with a
//! line or field diagnostic; simulation and I/O failures exit 1.

mod config;
mod output;
mod runner;

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use idnc_core::channel::ChannelModel;
use idnc_core::feedback::{run_initial_phase, StateFeedbackMatrix};
use idnc_core::sim::{block_rng, replay_schedule};
use idnc_core::ssp::{SspOracle, SspState};
use idnc_core::Error;

use config::{ConfigMap, RunSpec, SweepSpec};

fn usage() -> &'static str {
    "Usage: idnc <command> [options]

Commands:
  run      Run one experiment and print (or write) a summary CSV row
  sweep    Run a one-axis sweep and write summary plus tradeoff CSVs
  oracle   Solve a tiny instance exactly and print its value table
  golden   Replay the two reference schedules and check their metrics
  help     Show this message

Common options:
  --config <file>    Load 'key = value' settings; flags override the file
  --seed <n>         Master seed (default: the IDNC_SEED env var, then 0)
  --out <file>       Write output to this file instead of stdout
  --jobs <k>         Run blocks on k worker threads (default 1)

Experiment options (run, sweep):
  --packets <n>      Block size in packets (default 15)
  --receivers <m>    Receiver count (default 15)
  --channel <kind>   memoryless | gec (default memoryless)
  --p-min <f>        Lower erasure probability, memoryless (default 0.05)
  --p-max <f>        Upper erasure probability, memoryless (default 0.3)
  --memory <mu>      Channel memory in [0, 1), gec only (default 0)
  --policy <name>    min-oct | min-dd | mwvs | mwvs0 | mwvs1 | rlnc; all but
                     rlnc also take a -layered suffix (gec only)
  --lambda <f>       Completion/delay balance for mwvs in [0, 1] (default 0.5)
  --blocks <n>       Blocks per experiment (default 500)
  --slot-cap <n>     Recovery-slot cap per block (default 50 * packets)

Sweep options (sweep writes <out> and <out-stem>-tradeoff.<ext>):
  --axis <name>      packets | receivers | memory | lambda
  --values <list>    Comma-separated axis values, strictly increasing
  --policies <list>  Comma-separated policy names, or 'all'

Oracle options:
  --packets <n>      Packets of the planning instance (default 3)
  --receivers <m>    Receivers of the planning instance (default 2)
  --p <f>            Common erasure probability (default 0.1)"
}

/// Bad input exits 2; failures during execution exit 1.
enum Failure {
    BadInput(String),
    Runtime(String),
}

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    if args.is_empty() {
        eprintln!("{}", usage());
        process::exit(2);
    }
    let code = match dispatch(&args) {
        Ok(()) => 0,
        Err(Failure::BadInput(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run 'idnc help' for usage");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    process::exit(code);
}

fn dispatch(args: &[String]) -> Result<(), Failure> {
    match args[0].as_str() {
        "run" => cmd_run(&args[1..]),
        "sweep" => cmd_sweep(&args[1..]),
        "oracle" => cmd_oracle(&args[1..]),
        "golden" => cmd_golden(&args[1..]),
        "help" | "--help" | "-h" => {
            println!("{}", usage());
            Ok(())
        }
        other => Err(Failure::BadInput(format!("unknown command '{other}'"))),
    }
}

fn wants_help(args: &[String]) -> bool {
    args.iter().any(|a| a == "--help" || a == "-h")
}

fn value_of<'a>(it: &mut std::slice::Iter<'a, String>, flag: &str) -> Result<&'a str, String> {
    it.next().map(String::as_str).ok_or_else(|| format!("missing value for {flag}"))
}

struct ExperimentArgs {
    map: ConfigMap,
    out: Option<PathBuf>,
    jobs: usize,
}

/// Collects experiment flags into config-map overrides.  The config file is
/// loaded first and the flags applied on top, whatever their order on the
/// command line.
fn parse_experiment_flags(args: &[String], sweep: bool) -> Result<ExperimentArgs, String> {
    let mut config_path: Option<String> = None;
    let mut out: Option<PathBuf> = None;
    let mut jobs = 1usize;
    let mut overrides: Vec<(&'static str, String)> = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag = arg.as_str();
        match flag {
            "--config" => config_path = Some(value_of(&mut it, flag)?.to_string()),
            "--out" => out = Some(PathBuf::from(value_of(&mut it, flag)?)),
            "--jobs" => {
                let raw = value_of(&mut it, flag)?;
                jobs = raw
                    .parse()
                    .ok()
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| format!("--jobs: expected a positive integer, got '{raw}'"))?;
            }
            "--seed" => overrides.push(("seed", value_of(&mut it, flag)?.to_string())),
            "--packets" => overrides.push(("packets", value_of(&mut it, flag)?.to_string())),
            "--receivers" => overrides.push(("receivers", value_of(&mut it, flag)?.to_string())),
            "--channel" => overrides.push(("channel", value_of(&mut it, flag)?.to_string())),
            "--p-min" => overrides.push(("p_min", value_of(&mut it, flag)?.to_string())),
            "--p-max" => overrides.push(("p_max", value_of(&mut it, flag)?.to_string())),
            "--memory" => overrides.push(("memory", value_of(&mut it, flag)?.to_string())),
            "--policy" => overrides.push(("policy", value_of(&mut it, flag)?.to_string())),
            "--lambda" => overrides.push(("lambda", value_of(&mut it, flag)?.to_string())),
            "--blocks" => overrides.push(("blocks", value_of(&mut it, flag)?.to_string())),
            "--slot-cap" => overrides.push(("slot_cap", value_of(&mut it, flag)?.to_string())),
            "--axis" if sweep => overrides.push(("axis", value_of(&mut it, flag)?.to_string())),
            "--values" if sweep => {
                overrides.push(("values", value_of(&mut it, flag)?.to_string()))
            }
            "--policies" if sweep => {
                overrides.push(("policies", value_of(&mut it, flag)?.to_string()))
            }
            other => return Err(format!("unknown flag '{other}'")),
        }
    }
    let mut map = match config_path {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| format!("cannot read config '{path}': {e}"))?;
            ConfigMap::parse(&text).map_err(|e| format!("config '{path}': {e}"))?
        }
        None => ConfigMap::new(),
    };
    for (key, value) in overrides {
        map.set(key, &value);
    }
    // The assembled settings must survive a serialize/parse round trip;
    // a value smuggling in '#' or a line break would not.
    match ConfigMap::parse(&map.serialize()) {
        Ok(again) if again == map => {}
        _ => {
            return Err(
                "a value contains characters the config format cannot hold ('#' or a line break)"
                    .to_string(),
            )
        }
    }
    Ok(ExperimentArgs { map, out, jobs })
}

/// Writes to the output file when given, otherwise to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: &[String]) -> Result<(), Failure> {
    if wants_help(args) {
        println!("{}", usage());
        return Ok(());
    }
    let parsed = parse_experiment_flags(args, false).map_err(Failure::BadInput)?;
    let spec = RunSpec::from_map(&parsed.map).map_err(Failure::BadInput)?;
    let cfg = spec.experiment().map_err(Failure::BadInput)?;
    cfg.validate().map_err(|e| Failure::BadInput(e.to_string()))?;
    let agg = runner::run(&cfg, parsed.jobs).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut csv = String::new();
    csv.push_str(output::RUN_HEADER);
    csv.push('\n');
    csv.push_str(&output::summary_row(
        &spec.policy.label(),
        spec.packets,
        spec.receivers,
        &spec.channel.label(),
        &agg,
        spec.seed,
    ));
    csv.push('\n');
    emit(parsed.out.as_deref(), &csv)
}

/// Sibling path for the tradeoff CSV: `<stem>-tradeoff.<ext>`.
fn tradeoff_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}-tradeoff.{ext}"))
}

fn cmd_sweep(args: &[String]) -> Result<(), Failure> {
    if wants_help(args) {
        println!("{}", usage());
        return Ok(());
    }
    let parsed = parse_experiment_flags(args, true).map_err(Failure::BadInput)?;
    let out = parsed
        .out
        .ok_or_else(|| Failure::BadInput("sweep requires --out <file>".to_string()))?;
    let sweep = SweepSpec::from_map(&parsed.map).map_err(Failure::BadInput)?;
    // Every point is validated before anything runs, and both CSVs are
    // assembled in full before anything is written.
    let mut points = Vec::with_capacity(sweep.values.len() * sweep.policies.len());
    for &value in &sweep.values {
        let at_value = sweep.axis.apply(&sweep.base, value);
        for policy in &sweep.policies {
            let mut spec = at_value.clone();
            spec.policy = *policy;
            let cfg = spec.experiment().map_err(Failure::BadInput)?;
            cfg.validate().map_err(|e| Failure::BadInput(e.to_string()))?;
            points.push((value, spec, cfg));
        }
    }
    let mut csv = String::new();
    csv.push_str(output::RUN_HEADER);
    csv.push('\n');
    let mut curve = Vec::with_capacity(points.len());
    for (value, spec, cfg) in &points {
        let agg = runner::run(cfg, parsed.jobs).map_err(|e| Failure::Runtime(e.to_string()))?;
        // Lambda is the one axis no summary column carries, so those rows
        // get the value appended to the policy label.
        let row_label = match sweep.axis {
            config::Axis::Lambda => {
                format!("{}@{}", spec.policy.label(), sweep.axis.format(*value))
            }
            _ => spec.policy.label(),
        };
        csv.push_str(&output::summary_row(
            &row_label,
            spec.packets,
            spec.receivers,
            &spec.channel.label(),
            &agg,
            spec.seed,
        ));
        csv.push('\n');
        curve.push(output::TradeoffPoint {
            policy: spec.policy.label(),
            axis_value: sweep.axis.format(*value),
            mean_oct: agg.mean_oct,
            mean_delay: agg.mean_delay,
        });
    }
    // Tradeoff rows grouped by policy so each curve is contiguous.
    curve.sort_by(|a, b| a.policy.cmp(&b.policy));
    fs::write(&out, &csv)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
    let plot = tradeoff_path(&out);
    output::write_plotdata(&plot, sweep.axis.key(), &curve).map_err(Failure::Runtime)?;
    println!("wrote {} ({} rows)", out.display(), points.len());
    println!("wrote {} ({} rows)", plot.display(), curve.len());
    Ok(())
}

fn cmd_oracle(args: &[String]) -> Result<(), Failure> {
    if wants_help(args) {
        println!("{}", usage());
        return Ok(());
    }
    let mut packets = 3usize;
    let mut receivers = 2usize;
    let mut p = 0.1f64;
    let mut seed: Option<u64> = None;
    let mut out: Option<PathBuf> = None;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag = arg.as_str();
        match flag {
            "--packets" => {
                let raw = value_of(&mut it, flag).map_err(Failure::BadInput)?;
                packets = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
                    Failure::BadInput(format!("--packets: expected a positive integer, got '{raw}'"))
                })?;
            }
            "--receivers" => {
                let raw = value_of(&mut it, flag).map_err(Failure::BadInput)?;
                receivers = raw.parse().ok().filter(|&m| m >= 1).ok_or_else(|| {
                    Failure::BadInput(format!(
                        "--receivers: expected a positive integer, got '{raw}'"
                    ))
                })?;
            }
            "--p" => {
                let raw = value_of(&mut it, flag).map_err(Failure::BadInput)?;
                p = raw.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    Failure::BadInput(format!("--p: expected a finite number, got '{raw}'"))
                })?;
            }
            "--seed" => {
                let raw = value_of(&mut it, flag).map_err(Failure::BadInput)?;
                seed = Some(raw.parse().map_err(|_| {
                    Failure::BadInput(format!("--seed: expected an unsigned integer, got '{raw}'"))
                })?);
            }
            "--out" => {
                let raw = value_of(&mut it, flag).map_err(Failure::BadInput)?;
                out = Some(PathBuf::from(raw));
            }
            other => return Err(Failure::BadInput(format!("unknown flag '{other}'"))),
        }
    }
    let seed = match seed {
        Some(s) => s,
        None => match env::var("IDNC_SEED") {
            Ok(raw) => raw.parse().map_err(|_| {
                Failure::BadInput(format!("IDNC_SEED: expected an unsigned integer, got '{raw}'"))
            })?,
            Err(_) => 0,
        },
    };
    let erasure = vec![p; receivers];
    let oracle = SspOracle::new(erasure.clone()).map_err(|e| Failure::BadInput(e.to_string()))?;
    let mut channel =
        ChannelModel::memoryless(erasure).map_err(|e| Failure::BadInput(e.to_string()))?;
    let mut rng = block_rng(seed, 0);
    let sfm = run_initial_phase(packets, &mut channel, &mut rng);
    let start = SspState::start(sfm);
    let table = oracle.value_iteration(&start, 1e-9).map_err(|e| match e {
        Error::InstanceTooLarge { .. } | Error::InvalidParameter(_) => {
            Failure::BadInput(e.to_string())
        }
        other => Failure::Runtime(other.to_string()),
    })?;
    let v0 = table.value(&start).expect("the start state was enumerated");
    let mut text = format!(
        "oracle: {receivers} receivers x {packets} packets, p = {p:.3}, seed = {seed}\n"
    );
    // V is the expected total scheduling cost to finish: per wanting
    // receiver, a decode costs 0, an erased slot 1, a useless reception 2.
    text.push_str(&format!(
        "states {}, sweeps {}, start cost V={:.6}\n",
        table.state_count(),
        table.sweeps(),
        v0
    ));
    text.push_str(&table.table_text());
    emit(out.as_deref(), &text)
}

/// The six-packet, four-receiver reference feedback matrix the schedule
/// examples are built on.
fn reference_sfm() -> StateFeedbackMatrix {
    StateFeedbackMatrix::from_rows(&[
        &[1, 0, 1, 0, 0, 1],
        &[0, 1, 1, 1, 1, 1],
        &[1, 0, 0, 0, 1, 0],
        &[1, 0, 0, 1, 0, 0],
    ])
}

fn cmd_golden(args: &[String]) -> Result<(), Failure> {
    if wants_help(args) {
        println!("{}", usage());
        return Ok(());
    }
    if !args.is_empty() {
        return Err(Failure::BadInput(format!("golden takes no flags, got '{}'", args[0])));
    }
    let sfm = reference_sfm();
    // Completion-first: pair the two heavy receivers, then serve the widest
    // wants set every slot.  Finishes in 5 slots at 1.25 mean delay.
    let completion = replay_schedule(&sfm, &[&[0, 1], &[2], &[5], &[4], &[3]])
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    // Delay-first: widest clique every slot.  One more slot overall, but
    // only 0.25 mean delay.
    let delay = replay_schedule(&sfm, &[&[0, 1], &[2, 3, 4], &[5], &[2], &[3], &[4]])
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let ok = |m: &idnc_core::sim::BlockMetrics, oct, mean| {
        m.oct == oct && m.mean_delay == Some(mean)
    };
    if !ok(&completion, 5, 1.25) || !ok(&delay, 6, 0.25) {
        return Err(Failure::Runtime(format!(
            "reference replay mismatch: completion-first oct {} delay {:?}, delay-first oct {} delay {:?}",
            completion.oct, completion.mean_delay, delay.oct, delay.mean_delay
        )));
    }
    println!(
        "completion-first schedule: oct {} mean-delay {:.2}",
        completion.oct,
        completion.mean_delay.expect("replay tracks decoding")
    );
    println!(
        "delay-first schedule: oct {} mean-delay {:.2}",
        delay.oct,
        delay.mean_delay.expect("replay tracks decoding")
    );
    println!("golden replays match");
    Ok(())
}
