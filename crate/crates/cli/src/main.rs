//! Command-line frontend for identifying port models and verifying the
//! case studies.
//!
//! Exit status: 0 on success (and verification verdicts of OK), 1 when a
//! verification run finds a deadlock, 2 on usage or configuration errors,
//! 3 when a search hits its limits without a conclusion.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use midlearn_core::casestudies::{
    build_case1, build_case2, compress_case2, Case1Params, Case1Port, Case2Params,
    PortModelSource,
};
use midlearn_core::config::{parse_port_kind, RunConfig};
use midlearn_core::export::{emit_dot, emit_model, emit_promela, parse_model};
use midlearn_core::learner::learn_ia;
use midlearn_core::mcheck::{
    Conclusion, ProcessInstance, ProcessNetwork, SearchLimits, SearchOrder, Verdict, Witness,
};
use midlearn_core::remote::serve_addr;
use midlearn_core::report::{format_learn_table, format_verify_table, LearnRow, VerifyRow};
use midlearn_core::sim::{FusionProfile, PortKind, PortSul};
use midlearn_core::teacher::{EqConfig, SulTeacher};
use midlearn_core::InterfaceAutomaton;

#[derive(Parser)]
#[command(name = "midlearn", version, about = "Identify publish-subscribe port models and check automata networks for deadlocks")]
struct Cli {
    /// Key-value configuration file providing defaults for the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify a port configuration and report the model statistics.
    Learn(LearnArgs),
    /// Compose a case study with identified port models and search for
    /// deadlocks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Reproduce the full identification and verification tables.
    Sweep(SweepArgs),
    /// Serve a simulated port over TCP for remote identification.
    ServeSul(ServeArgs),
    /// Convert a stored model file to DOT or a PROMELA-style encoding.
    Export(ExportArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// Port kind: standard, buffered-nonstrict or buffered-strict.
    #[arg(long)]
    kind: Option<String>,
    /// Strict buffer capacity.
    #[arg(long)]
    n: Option<u32>,
    /// Alphabet extensions: read-nb, intr-actual, intr-expected.
    #[arg(long, value_delimiter = ',')]
    ext: Vec<String>,
    /// Fusion profile: raw, calibrated or verification.
    #[arg(long)]
    fusion: Option<String>,
    /// Seed for the randomized test phase.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra-state bound of the conformance suite.
    #[arg(long)]
    extra_states: Option<usize>,
    /// Number of random words after the deterministic suite.
    #[arg(long)]
    random_words: Option<usize>,
    /// Maximum random word length.
    #[arg(long)]
    max_word_len: Option<usize>,
    /// Disable the trace cache (every query runs on the system).
    #[arg(long)]
    no_cache: bool,
    /// Write the identified model in the native format.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the identified model as a DOT graph.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Emit the report row as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Planner/controller bursts over two channels.
    Case1(Case1Args),
    /// Two producers, one alternating consumer.
    Case2(Case2Args),
}

#[derive(Args)]
struct Case1Args {
    /// Channel discipline: nonstrict or strict.
    #[arg(long)]
    port: String,
    /// Strict channel capacity (Table row N); defaults to the burst length.
    #[arg(long)]
    n: Option<u32>,
    /// Messages per burst.
    #[arg(long, default_value_t = 6)]
    burst: u32,
    #[command(flatten)]
    common: VerifyCommonArgs,
}

#[derive(Args)]
struct Case2Args {
    #[arg(long)]
    n1: u32,
    #[arg(long)]
    n2: u32,
    #[arg(long)]
    n3: u32,
    #[arg(long)]
    size: u32,
    /// Poll the first channel with non-blocking reads.
    #[arg(long)]
    nonblocking_first: bool,
    /// Shrink loop bounds while preserving the verdict.
    #[arg(long)]
    compress: bool,
    #[command(flatten)]
    common: VerifyCommonArgs,
}

#[derive(Args)]
struct VerifyCommonArgs {
    /// Channel models: learned (fresh identification run) or reference.
    #[arg(long, default_value = "learned")]
    source: String,
    /// Search order: dfs or bfs.
    #[arg(long, default_value = "dfs")]
    search: String,
    /// Visited-state limit before giving up.
    #[arg(long, default_value_t = 50_000_000)]
    max_states: usize,
    /// Write the deadlock witness to this file.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Write the network's PROMELA-style encoding to this file.
    #[arg(long)]
    promela: Option<PathBuf>,
    /// Emit the report row as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory for the report files.
    #[arg(long, default_value = "reports")]
    out_dir: PathBuf,
    /// Seed shared by all identification runs.
    #[arg(long)]
    seed: Option<u64>,
    /// Channel model source for the verification grid.
    #[arg(long, default_value = "learned")]
    source: String,
    /// Include wall-clock columns (makes reports non-reproducible).
    #[arg(long)]
    with_times: bool,
    /// Verdict-preserving bound compression for the large rows.
    #[arg(long)]
    compress: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    ext: Vec<String>,
    #[arg(long)]
    fusion: Option<String>,
    /// Address to bind, e.g. 127.0.0.1:4455.
    #[arg(long, default_value = "127.0.0.1:4455")]
    addr: String,
}

#[derive(Args)]
struct ExportArgs {
    /// Output format: dot or promela.
    #[arg(long, default_value = "dot")]
    format: String,
    /// Model file in the native format.
    model: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Learn(args) => cmd_learn(args, &config),
        Command::Verify(args) => cmd_verify(args, &config),
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::ServeSul(args) => cmd_serve(args, &config),
        Command::Export(args) => cmd_export(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            Ok(RunConfig::from_toml(&text)?)
        }
    }
}

fn eq_config(
    config: &RunConfig,
    seed: Option<u64>,
    extra_states: Option<usize>,
    random_words: Option<usize>,
    max_word_len: Option<usize>,
) -> EqConfig {
    let mut eq = config.eq_config();
    if let Some(s) = seed {
        eq.rng_seed = s;
    }
    if let Some(x) = extra_states {
        eq.extra_states = x;
    }
    if let Some(r) = random_words {
        eq.random_words = r;
    }
    if let Some(l) = max_word_len {
        eq.max_word_len = l;
    }
    eq
}

fn port_kind_from(args_kind: Option<&str>, n: Option<u32>, ext: &[String], config: &RunConfig) -> Result<PortKind> {
    let (kind, n, ext) = match (args_kind, &config.port) {
        (Some(k), _) => (k.to_string(), n, ext.to_vec()),
        (None, Some(pc)) => (
            pc.kind.clone(),
            n.or(pc.n),
            if ext.is_empty() { pc.extensions.clone() } else { ext.to_vec() },
        ),
        (None, None) => return Err(anyhow!("no port kind given (--kind or config [port])")),
    };
    Ok(parse_port_kind(&kind, n, &ext)?)
}

fn fusion_from(flag: Option<&str>, config: &RunConfig) -> Result<FusionProfile> {
    match flag {
        Some(name) => {
            FusionProfile::parse(name).ok_or_else(|| anyhow!("unknown fusion profile `{name}`"))
        }
        None => Ok(config.fusion_profile()?),
    }
}

fn cmd_learn(args: LearnArgs, config: &RunConfig) -> Result<ExitCode> {
    let kind = port_kind_from(args.kind.as_deref(), args.n, &args.ext, config)?;
    let fusion = fusion_from(args.fusion.as_deref(), config)?;
    let eq = eq_config(
        config,
        args.seed.or(config.seed),
        args.extra_states,
        args.random_words,
        args.max_word_len,
    );
    let sul = PortSul::new(kind.clone(), fusion)?;
    let mut teacher = SulTeacher::new(sul, eq);
    if args.no_cache {
        teacher = teacher.without_cache();
    }
    let (ia, stats) = learn_ia(&mut teacher)?;

    if let Some(path) = &args.out {
        fs::write(path, emit_model(&ia))
            .with_context(|| format!("writing model {}", path.display()))?;
    }
    if let Some(path) = &args.dot {
        fs::write(path, emit_dot(&ia))
            .with_context(|| format!("writing DOT {}", path.display()))?;
    }

    let row = LearnRow::new(kind.label(), ia.state_count(), ia.transition_count(), &stats);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&row)?);
    } else {
        print!("{}", format_learn_table(&[row], true));
    }
    Ok(ExitCode::SUCCESS)
}

fn source_from(name: &str) -> Result<PortModelSource> {
    match name {
        "learned" => Ok(PortModelSource::Learned),
        "reference" => Ok(PortModelSource::Reference),
        other => Err(anyhow!("unknown model source `{other}`")),
    }
}

fn search_order(name: &str) -> Result<SearchOrder> {
    match name {
        "dfs" => Ok(SearchOrder::Dfs),
        "bfs" => Ok(SearchOrder::Bfs),
        other => Err(anyhow!("unknown search order `{other}`")),
    }
}

fn write_witness(path: &Path, net: &ProcessNetwork, witness: &Witness) -> Result<()> {
    let mut out = String::from("# deadlock witness: action then composite state\n");
    let names: Vec<&str> = net.processes().iter().map(|p| p.name.as_str()).collect();
    out.push_str(&format!("processes {}\n", names.join(" ")));
    let initial = net.initial_state();
    out.push_str(&format!(
        "init {}\n",
        initial
            .components()
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    ));
    for (action, state) in &witness.steps {
        out.push_str(&format!(
            "step {action} {}\n",
            state
                .components()
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    fs::write(path, out).with_context(|| format!("writing witness {}", path.display()))?;
    Ok(())
}

fn run_verification(
    net: &ProcessNetwork,
    label: String,
    common: &VerifyCommonArgs,
    note: Option<String>,
) -> Result<ExitCode> {
    if let Some(path) = &common.promela {
        fs::write(path, emit_promela(net))
            .with_context(|| format!("writing PROMELA {}", path.display()))?;
    }
    let limits = SearchLimits {
        max_states: common.max_states,
        order: search_order(&common.search)?,
    };
    let verdict = net.find_deadlock(&limits);
    if let (Some(path), Some(witness)) = (&common.witness, &verdict.witness) {
        write_witness(path, net, witness)?;
    }
    let mut row = VerifyRow::new(label, &verdict);
    if let Some(n) = note {
        row = row.with_note(n);
    }
    if common.json {
        println!("{}", serde_json::to_string_pretty(&row)?);
    } else {
        print!("{}", format_verify_table(&[row], true));
    }
    Ok(exit_for(&verdict))
}

fn exit_for(verdict: &Verdict) -> ExitCode {
    match verdict.conclusion {
        Conclusion::Ok => ExitCode::SUCCESS,
        Conclusion::Deadlock => ExitCode::from(1),
        Conclusion::Inconclusive => ExitCode::from(3),
    }
}

fn cmd_verify(command: VerifyCommand, config: &RunConfig) -> Result<ExitCode> {
    match command {
        VerifyCommand::Case1(args) => {
            let source = source_from(&args.common.source)?;
            let port = match args.port.as_str() {
                "nonstrict" | "buffered-nonstrict" => Case1Port::NonStrict,
                "strict" | "buffered-strict" => Case1Port::Strict {
                    capacity: args.n.unwrap_or(args.burst),
                },
                other => return Err(anyhow!("unknown case-1 port `{other}`")),
            };
            let params = Case1Params {
                n: config.case1.as_ref().map(|c| c.n).unwrap_or(args.burst),
                port,
                source,
            };
            let net = build_case1(&params)?;
            run_verification(&net, params.label(), &args.common, None)
        }
        VerifyCommand::Case2(args) => {
            let source = source_from(&args.common.source)?;
            let mut params = Case2Params {
                n1: args.n1,
                n2: args.n2,
                n3: args.n3,
                size: args.size,
                nonblocking_first: args.nonblocking_first,
                source,
            };
            let mut note = None;
            if args.compress {
                let (reduced, did) = compress_case2(&params);
                if did {
                    note = Some(format!(
                        "bounds compressed to {} {} {} (verdict-equivalent)",
                        reduced.n1, reduced.n2, reduced.n3
                    ));
                    params = reduced;
                }
            }
            let label = params.label();
            let net = build_case2(&params)?;
            run_verification(&net, label, &args.common, note)
        }
    }
}

fn cmd_sweep(args: SweepArgs, config: &RunConfig) -> Result<ExitCode> {
    let source = source_from(&args.source)?;
    let seed = args.seed.or(config.seed).unwrap_or(EqConfig::default().rng_seed);
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    // Identification: the five base configurations, then the strict ladder.
    let mut learn_rows = Vec::new();
    let learn_one = |kind: PortKind, label: Option<&str>| -> Result<LearnRow> {
        let eq = EqConfig {
            rng_seed: seed,
            ..EqConfig::default()
        };
        let sul = PortSul::new(kind.clone(), FusionProfile::Calibrated)?;
        let mut teacher = SulTeacher::new(sul, eq);
        let (ia, stats) = learn_ia(&mut teacher)?;
        Ok(LearnRow::new(
            label.map(str::to_string).unwrap_or_else(|| kind.label()),
            ia.state_count(),
            ia.transition_count(),
            &stats,
        ))
    };
    for (kind, label) in [
        (PortKind::standard(), Some("port")),
        (PortKind::nonstrict(), None),
        (PortKind::strict(3), Some("buffered port (strict)")),
        (PortKind::nonstrict().with_nonblocking_read(), None),
        (
            PortKind::strict(3).with_nonblocking_read(),
            Some("buffered port (strict)*"),
        ),
    ] {
        learn_rows.push(learn_one(kind, label)?);
    }
    let mut ladder_rows = Vec::new();
    for n in 1..=6 {
        ladder_rows.push(learn_one(PortKind::strict(n), Some(&n.to_string()))?);
    }

    // Verification grids.
    let case1_rows: Vec<(Case1Params, &str)> = vec![
        (
            Case1Params {
                n: 6,
                port: Case1Port::NonStrict,
                source,
            },
            "",
        ),
        (
            Case1Params {
                n: 6,
                port: Case1Port::Strict { capacity: 1 },
                source,
            },
            "",
        ),
        (
            Case1Params {
                n: 6,
                port: Case1Port::Strict { capacity: 6 },
                source,
            },
            "",
        ),
    ];
    let mut verify_rows = Vec::new();
    for (params, _) in &case1_rows {
        let net = build_case1(params)?;
        let verdict = net.find_deadlock(&SearchLimits::default());
        verify_rows.push(VerifyRow::new(params.label(), &verdict));
    }

    let case2_grid = [
        (100, 100, 100, 1, false),
        (90, 100, 100, 1, false),
        (100, 100, 100, 6, false),
        (90, 100, 100, 6, false),
        (200, 200, 200, 6, false),
        (180, 200, 200, 6, false),
        (90, 100, 100, 6, true),
    ];
    let mut case2_rows = Vec::new();
    for (n1, n2, n3, size, nonblocking_first) in case2_grid {
        let mut params = Case2Params {
            n1,
            n2,
            n3,
            size,
            nonblocking_first,
            source,
        };
        let label = params.label();
        let mut note = None;
        if args.compress {
            let (reduced, did) = compress_case2(&params);
            if did {
                note = Some(format!(
                    "bounds compressed to {} {} {}",
                    reduced.n1, reduced.n2, reduced.n3
                ));
                params = reduced;
            }
        }
        let net = build_case2(&params)?;
        let verdict = net.find_deadlock(&SearchLimits::default());
        let mut row = VerifyRow::new(label, &verdict);
        if let Some(n) = note {
            row = row.with_note(n);
        }
        case2_rows.push(row);
    }

    // Reports: stable files exclude the time columns unless asked.
    let strip = |rows: &[LearnRow]| -> Vec<LearnRow> {
        rows.iter().map(|r| r.clone().without_time()).collect()
    };
    let strip_v = |rows: &[VerifyRow]| -> Vec<VerifyRow> {
        rows.iter().map(|r| r.clone().without_time()).collect()
    };
    let (learn_out, ladder_out) = if args.with_times {
        (learn_rows.clone(), ladder_rows.clone())
    } else {
        (strip(&learn_rows), strip(&ladder_rows))
    };
    let (v1_out, v2_out) = if args.with_times {
        (verify_rows.clone(), case2_rows.clone())
    } else {
        (strip_v(&verify_rows), strip_v(&case2_rows))
    };

    let mut identification = String::new();
    identification.push_str("Identified port models\n\n");
    identification.push_str(&format_learn_table(&learn_out, args.with_times));
    identification.push_str("\nStrict buffered port, growing capacity\n\n");
    identification.push_str(&format_learn_table(&ladder_out, args.with_times));
    let mut verification = String::new();
    verification.push_str("Case study 1\n\n");
    verification.push_str(&format_verify_table(&v1_out, args.with_times));
    verification.push_str("\nCase study 2 (N1 N2 N3 Size)\n\n");
    verification.push_str(&format_verify_table(&v2_out, args.with_times));

    fs::write(args.out_dir.join("identification.txt"), &identification)?;
    fs::write(args.out_dir.join("verification.txt"), &verification)?;
    let json = serde_json::json!({
        "identification": learn_out,
        "strict_ladder": ladder_out,
        "case1": v1_out,
        "case2": v2_out,
    });
    fs::write(
        args.out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&json)?,
    )?;

    print!("{identification}\n{verification}");
    let _ = std::io::stdout().flush();
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(args: ServeArgs, config: &RunConfig) -> Result<ExitCode> {
    let kind = port_kind_from(args.kind.as_deref(), args.n, &args.ext, config)?;
    let fusion = fusion_from(args.fusion.as_deref(), config)?;
    let session = PortSul::new(kind.clone(), fusion)?;
    eprintln!(
        "serving {} ({}) on {}",
        kind.label(),
        fusion.name(),
        args.addr
    );
    serve_addr(session, &args.addr)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.model)
        .with_context(|| format!("reading model {}", args.model.display()))?;
    let ia: InterfaceAutomaton = parse_model(&text)?;
    match args.format.as_str() {
        "dot" => print!("{}", emit_dot(&ia)),
        "promela" => {
            let name = args
                .model
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "model".to_string());
            let net = ProcessNetwork::new(vec![ProcessInstance::new(name, ia)])?;
            print!("{}", emit_promela(&net));
        }
        other => return Err(anyhow!("unknown export format `{other}`")),
    }
    Ok(ExitCode::SUCCESS)
}
