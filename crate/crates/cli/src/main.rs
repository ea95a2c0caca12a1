//! `flowmc`: validate annotated programs, abstract them to flow graphs,
//! explore and check them, cross-check the transition-system encoding and
//! emit TLA+, nuXmv or DOT models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;

use flowmc_core::emit::{emit_dot, emit_nuxmv, emit_tla, EmitterOptions};
use flowmc_core::flow::{summary, translate, FlowGraph};
use flowmc_core::ir::{parse_program, validate_program};
use flowmc_core::pds::{InducedPds, Verdict, DEFAULT_MAX_STACK, DEFAULT_MAX_STEPS};
use flowmc_core::sts::{
    compare_with_pds, mutate, sts_of_flow_graph, EquivalenceVerdict, Mutation, DEFAULT_STACK_CAPACITY,
};
use flowmc_core::syntax::parse_expr;
use flowmc_core::AnnotatedProgram;

#[derive(Parser)]
#[command(name = "flowmc", version, about = "Flow-graph abstraction and model extraction for contract-annotated programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Bounds {
    /// Largest number of configurations to visit.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    /// Deepest call stack to explore, in frames.
    #[arg(long)]
    max_stack: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a program.
    Validate { input: PathBuf },
    /// Translate to a flow graph and print its size.
    Abstract {
        input: PathBuf,
        /// Also write the flow graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Explore the reachable configurations.
    Explore {
        input: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Check an invariant over globals.
    Check {
        input: PathBuf,
        #[arg(long)]
        invariant: String,
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Print a seeded random run.
    Run {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a model for an external checker.
    Emit {
        input: PathBuf,
        #[arg(long, value_enum)]
        backend: Backend,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack_capacity: usize,
        /// Run TLC or nuXmv on the result, if installed.
        #[arg(long)]
        run_external: bool,
    },
    /// Compare the transition-system encoding with the pushdown semantics.
    Crosscheck {
        input: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack_capacity: usize,
        /// Inject a fault into the encoding first.
        #[arg(long, value_parser = parse_mutation)]
        mutate: Option<Mutation>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Tla,
    Nuxmv,
    Dot,
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    s.parse()
}

#[derive(Debug, Error)]
enum Failure {
    /// Unreadable input, unwritable output, malformed text: exit 2.
    #[error("{0}")]
    Input(String),
    /// Invalid program, failed translation, violation or divergence: exit 1.
    #[error("{0}")]
    Rejected(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Rejected(_) => 1,
        }
    }
}

fn rejected(e: impl std::fmt::Display) -> Failure {
    Failure::Rejected(e.to_string())
}

struct Source {
    program: AnnotatedProgram,
    digest: String,
}

fn read_source(path: &Path) -> Result<Source, Failure> {
    let bytes =
        fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Input(format!("{} is not UTF-8", path.display())))?;
    let program = parse_program(&text).map_err(|diags| Failure::Input(listing(&diags)))?;
    Ok(Source {
        program,
        digest: hex::encode(Sha256::digest(&bytes)),
    })
}

fn listing(diags: &[flowmc_core::Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

fn flow_graph(src: &Source) -> Result<FlowGraph, Failure> {
    translate(&src.program).map_err(rejected)
}

fn induced(fg: &FlowGraph) -> Result<InducedPds, Failure> {
    InducedPds::new(fg).map_err(rejected)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Cmd::Validate { input } => {
            let src = read_source(&input)?;
            let diags = validate_program(&src.program);
            if !diags.is_empty() {
                return Err(Failure::Rejected(listing(&diags)));
            }
            println!("{}: ok", input.display());
            Ok(0)
        }
        Cmd::Abstract { input, dot } => {
            let src = read_source(&input)?;
            let fg = flow_graph(&src)?;
            println!("{}", summary(&fg));
            if let Some(path) = dot {
                write_file(&path, &emit_dot(&fg, &src.digest))?;
            }
            Ok(0)
        }
        Cmd::Explore { input, bounds } => {
            let fg = flow_graph(&read_source(&input)?)?;
            let pds = induced(&fg)?;
            let max_stack = bounds.max_stack.unwrap_or(DEFAULT_MAX_STACK);
            let r = pds.explore(bounds.max_steps, max_stack).map_err(rejected)?;
            println!(
                "{} configurations, {} deadlocks, max stack depth {}{}",
                r.visited.len(),
                r.deadlocks.len(),
                r.max_stack_depth,
                if r.truncated { ", truncated" } else { "" }
            );
            for d in &r.deadlocks {
                println!("deadlock: {d}");
            }
            Ok(if r.truncated { 3 } else { 0 })
        }
        Cmd::Check {
            input,
            invariant,
            bounds,
        } => {
            let phi = parse_expr(&invariant)
                .map_err(|e| Failure::Input(format!("invariant: {}", e.message)))?;
            let fg = flow_graph(&read_source(&input)?)?;
            let pds = induced(&fg)?;
            let max_stack = bounds.max_stack.unwrap_or(DEFAULT_MAX_STACK);
            match pds.check_invariant(&phi, bounds.max_steps, max_stack).map_err(rejected)? {
                Verdict::Holds { truncated: false, visited } => {
                    println!("holds ({visited} configurations)");
                    Ok(0)
                }
                Verdict::Holds { truncated: true, visited } => {
                    println!("no violation in {visited} configurations, search truncated");
                    Ok(3)
                }
                Verdict::Violated { trace } => {
                    println!("violated after {} steps", trace.configurations.len() - 1);
                    print!("{trace}");
                    Ok(1)
                }
            }
        }
        Cmd::Run { input, length, seed } => {
            let fg = flow_graph(&read_source(&input)?)?;
            let trace = induced(&fg)?.sample_run(length, seed).map_err(rejected)?;
            print!("{trace}");
            if trace.deadlock {
                println!("deadlock");
            }
            Ok(0)
        }
        Cmd::Emit {
            input,
            backend,
            out,
            stack_capacity,
            run_external,
        } => {
            let src = read_source(&input)?;
            let fg = flow_graph(&src)?;
            fs::create_dir_all(&out)
                .map_err(|e| Failure::Input(format!("cannot create {}: {e}", out.display())))?;
            let name = fg.name.clone();
            let file = |ext: &str| out.join(format!("{name}.{ext}"));
            let opts = |sts: &flowmc_core::sts::Sts| EmitterOptions {
                stack_capacity,
                ..EmitterOptions::for_sts(sts, src.digest.clone())
            };
            match backend {
                Backend::Dot => write_file(&file("dot"), &emit_dot(&fg, &src.digest))?,
                Backend::Tla => {
                    let sts = sts_of_flow_graph(&fg, stack_capacity).map_err(rejected)?;
                    let (tla, cfg) = emit_tla(&sts, &opts(&sts)).map_err(rejected)?;
                    write_file(&file("tla"), &tla)?;
                    write_file(&file("cfg"), &cfg)?;
                    if run_external {
                        return external(
                            "tlc",
                            &["-config", &format!("{name}.cfg"), &format!("{name}.tla")],
                            &out,
                        );
                    }
                }
                Backend::Nuxmv => {
                    let sts = sts_of_flow_graph(&fg, stack_capacity).map_err(rejected)?;
                    let smv = emit_nuxmv(&sts, &opts(&sts)).map_err(rejected)?;
                    write_file(&file("smv"), &smv)?;
                    if run_external {
                        let script = file("cmd");
                        fs::write(&script, "go\nprint_reachable_states\nquit\n")
                            .map_err(|e| Failure::Input(e.to_string()))?;
                        return external(
                            "nuXmv",
                            &["-source", &format!("{name}.cmd"), &format!("{name}.smv")],
                            &out,
                        );
                    }
                }
            }
            Ok(0)
        }
        Cmd::Crosscheck {
            input,
            bounds,
            stack_capacity,
            mutate: mutation,
        } => {
            let fg = flow_graph(&read_source(&input)?)?;
            let pds = induced(&fg)?;
            let mut sts = sts_of_flow_graph(&fg, stack_capacity).map_err(rejected)?;
            if let Some(m) = mutation {
                sts = mutate(&sts, m)
                    .ok_or_else(|| Failure::Rejected(format!("mutation {m} does not apply")))?;
            }
            let max_stack = bounds.max_stack.unwrap_or(stack_capacity + 1);
            let verdict =
                compare_with_pds(&sts, &pds, bounds.max_steps, max_stack).map_err(rejected)?;
            println!("{verdict}");
            Ok(match verdict {
                EquivalenceVerdict::Equivalent { .. } => 0,
                EquivalenceVerdict::Divergent { .. } => 1,
                EquivalenceVerdict::Inconclusive { .. } => 3,
            })
        }
    }
}

/// Runs an external checker in `dir`, passing its output through.
fn external(tool: &str, args: &[&str], dir: &Path) -> Result<u8, Failure> {
    let status = Command::new(tool)
        .args(args)
        .current_dir(dir)
        .status()
        .map_err(|e| Failure::Input(format!("cannot run {tool}: {e}")))?;
    Ok(if status.success() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
