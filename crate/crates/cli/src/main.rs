//! `vers`: command-line front end for vers-core.
//!
//! Commands that check a property print a JSON report (or a summary with
//! `--human`) and exit 0 when it holds, 1 when a witness or difference was
//! found and 2 when the check is inconclusive or the command failed.
//! Commands that build graphs or documents write them to stdout or `--output`.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use vers_core::document::{digest, parse_spec, DocumentKind, SpecBody, SpecDocument, SCHEMA_VERSION};
use vers_core::ers::{gluing_related_at_depth, is_expanding_ers, vers_from_ers};
use vers_core::export::{export, export_history, Format};
use vers_core::hyperbolicity::{find_expanding_constant, find_geodesic_squares, is_n_expanding, ExpandingOptions, PathOptions};
use vers_core::ifs::{ifs_power, ratio_condition_check, vers_from_ifs};
use vers_core::report::{oracle_compare, Report, Verdict, MAX_DIFFS};
use vers_core::selfsimilar::{schreier_graph, vers_from_automaton};
use vers_core::{bundled, gamma, history, Vers};

const THREADS_ENV: &str = "VERS_THREADS";
const BUNDLED_PREFIX: &str = "bundled:";

#[derive(Parser)]
#[command(name = "vers", version, about = "Vertex replacement systems: expansions, histories and hyperbolicity checks")]
struct Cli {
    /// Worker threads; VERS_THREADS takes precedence. Defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print reports as a short summary instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Input document: a path, `-` for stdin, or `bundled:NAME`.
    #[arg(long = "spec", value_name = "FILE")]
    spec: Option<String>,
    /// Same as --spec.
    #[arg(value_name = "FILE", conflicts_with = "spec")]
    file: Option<String>,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GraphOutput {
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: Format,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a document.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Write Γ_n.
    Expand {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: usize,
        #[command(flatten)]
        out: GraphOutput,
    },
    /// Write the history truncation up to a depth, vertical edges included.
    History {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        depth: usize,
        #[command(flatten)]
        out: GraphOutput,
    },
    /// Check n-expansivity over abstract paths, or search for a constant with --max.
    CheckExpanding {
        #[command(flatten)]
        input: Input,
        /// Check this n only.
        #[arg(long)]
        n: Option<usize>,
        /// Search n = 1..=MAX for the smallest expanding constant.
        #[arg(long)]
        max: Option<usize>,
        /// Only use types reachable from the start type.
        #[arg(long)]
        reachable_only: bool,
        /// Only use paths whose corners occur in some Γ_m.
        #[arg(long)]
        realizable: bool,
        /// Also fail when descendants come closer than n.
        #[arg(long)]
        fail_below: bool,
        /// Comma-separated colors the paths may use.
        #[arg(long, value_delimiter = ',')]
        colors: Option<Vec<String>>,
        /// List one of each path and its reversal.
        #[arg(long)]
        dedup_reversal: bool,
    },
    /// Search a history truncation for geodesic squares.
    Squares {
        #[command(flatten)]
        input: Input,
        /// Side length n of the squares.
        #[arg(long)]
        size: usize,
        #[arg(long)]
        depth: usize,
    },
    /// Write the level-n Schreier graph of an automaton group.
    Schreier {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: usize,
        #[command(flatten)]
        out: GraphOutput,
    },
    /// Write the VERS document of an automaton group.
    FromAutomaton {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Output,
    },
    /// Write the VERS document of a post-critically finite IFS.
    FromIfs {
        #[command(flatten)]
        input: Input,
        /// Emit every critical and post-critical color, not only reachable ones.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Write the VERS document of an edge replacement system.
    FromErs {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: Output,
    },
    /// Write the IFS document of the k-th power.
    IfsPower {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Check whether two ERS words are related at a depth.
    Gluing {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        /// Compare the first DEPTH letters; defaults to the word length.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Compare Γ_n with the independent construction for the document kind.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        level: usize,
        /// Expected oracle: schreier, ifs or ers.
        #[arg(long)]
        kind: Option<String>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn read_input(input: &Input) -> Result<(String, Vec<u8>)> {
    let name = input.spec.as_ref().or(input.file.as_ref()).ok_or_else(|| anyhow!("no input document (use --spec FILE)"))?;
    let bytes = if let Some(b) = name.strip_prefix(BUNDLED_PREFIX) {
        let names: Vec<&str> = bundled::names().collect();
        bundled::get(b).ok_or_else(|| anyhow!("no bundled document {b:?} (available: {})", names.join(", ")))?.as_bytes().to_vec()
    } else if name == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
        buf
    } else {
        std::fs::read(name).with_context(|| format!("reading {name}"))?
    };
    Ok((name.clone(), bytes))
}

fn load(input: &Input) -> Result<SpecDocument> {
    let (name, bytes) = read_input(input)?;
    parse_spec(&bytes).with_context(|| format!("invalid document {name}"))
}

fn to_vers(doc: &SpecDocument) -> Result<Vers> {
    Ok(match &doc.body {
        SpecBody::Vers(v) => v.clone(),
        SpecBody::Automaton(a) => vers_from_automaton(a)?,
        SpecBody::Ifs(f) => vers_from_ifs(f, false)?.vers,
        SpecBody::Ers(e) => vers_from_ers(e)?,
    })
}

fn expect_kind(doc: &SpecDocument, kind: DocumentKind) -> Result<()> {
    if doc.kind() != kind {
        bail!("expected document kind {kind}, got {}", doc.kind());
    }
    Ok(())
}

fn write_out(out: &Output, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// A document with `kind` and `version` in front of the payload fields.
fn tagged(kind: DocumentKind, payload: Value) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("kind".into(), json!(kind.name()));
    obj.insert("version".into(), json!(SCHEMA_VERSION));
    if let Value::Object(fields) = payload {
        obj.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("documents serialize");
    s.push('\n');
    s
}

fn vers_document(v: &Vers) -> String {
    tagged(DocumentKind::Vers, serde_json::to_value(v.definition()).expect("definitions serialize"))
}

enum Outcome {
    Report(Report),
    Written,
}

fn run(cli: &Cli) -> Result<Outcome> {
    let report = |command: &str, doc: &SpecDocument, verdict, details| Ok(Outcome::Report(Report::new(command, doc.digest.clone(), verdict, details)));
    match &cli.command {
        Command::Validate { input } => {
            let (name, bytes) = read_input(input)?;
            let d = digest(&bytes);
            let doc = match parse_spec(&bytes) {
                Ok(doc) => doc,
                Err(e) => {
                    let details = json!({ "input": name, "error": e.to_string() });
                    return Ok(Outcome::Report(Report::new("validate", d, Verdict::Fails, details)));
                }
            };
            let mut details = json!({ "input": name, "kind": doc.kind().name(), "version": doc.version });
            match &doc.body {
                SpecBody::Ers(e) => details["expanding_violations"] = json!(is_expanding_ers(e).violations),
                SpecBody::Ifs(f) => details["ratio_condition"] = json!(ratio_condition_check(f)),
                SpecBody::Automaton(a) => details["states"] = json!(a.states()),
                SpecBody::Vers(v) => details["colors"] = json!(v.colors()),
            }
            report("validate", &doc, Verdict::Holds, details)
        }
        Command::Expand { input, level, out } => {
            let g = gamma(&to_vers(&load(input)?)?, *level);
            write_out(&out.out, &export(&g, out.format))?;
            Ok(Outcome::Written)
        }
        Command::History { input, depth, out } => {
            let h = history(&to_vers(&load(input)?)?, *depth);
            write_out(&out.out, &export_history(&h, out.format))?;
            Ok(Outcome::Written)
        }
        Command::CheckExpanding { input, n, max, reachable_only, realizable, fail_below, colors, dedup_reversal } => {
            let doc = load(input)?;
            let v = to_vers(&doc)?;
            let opts = ExpandingOptions {
                paths: PathOptions {
                    dedup_reversal: *dedup_reversal,
                    reachable_only: *reachable_only,
                    colors: colors.clone(),
                    realizable: *realizable,
                },
                fail_below: *fail_below,
            };
            match (n, max) {
                (Some(n), None) => {
                    if *n == 0 {
                        bail!("--n must be at least 1");
                    }
                    let verdict = is_n_expanding(&v, *n, &opts)?;
                    let details = json!({ "n": n, "expanding": verdict.is_expanding(), "witness": verdict.witness() });
                    report("check-expanding", &doc, if verdict.is_expanding() { Verdict::Holds } else { Verdict::Fails }, details)
                }
                (None, Some(max)) => {
                    let found = find_expanding_constant(&v, *max, &opts)?;
                    let verdict = if found.is_some() { Verdict::Holds } else { Verdict::Inconclusive };
                    report("check-expanding", &doc, verdict, json!({ "max": max, "constant": found }))
                }
                _ => bail!("give exactly one of --n and --max"),
            }
        }
        Command::Squares { input, size, depth } => {
            let doc = load(input)?;
            let h = history(&to_vers(&doc)?, *depth);
            let squares = find_geodesic_squares(&h, *size)?;
            let shown: Vec<_> = squares.iter().take(MAX_DIFFS).collect();
            let details = json!({ "size": size, "depth": depth, "count": squares.len(), "squares": shown });
            report("squares", &doc, if squares.is_empty() { Verdict::Holds } else { Verdict::Fails }, details)
        }
        Command::Schreier { input, level, out } => {
            let doc = load(input)?;
            let SpecBody::Automaton(a) = &doc.body else { bail!("expected an automaton document, got kind {}", doc.kind()) };
            write_out(&out.out, &export(&schreier_graph(a, *level), out.format))?;
            Ok(Outcome::Written)
        }
        Command::FromAutomaton { input, out } => {
            let doc = load(input)?;
            expect_kind(&doc, DocumentKind::Automaton)?;
            write_out(out, &vers_document(&to_vers(&doc)?))?;
            Ok(Outcome::Written)
        }
        Command::FromIfs { input, full, out } => {
            let doc = load(input)?;
            let SpecBody::Ifs(f) = &doc.body else { bail!("expected an IFS document, got kind {}", doc.kind()) };
            write_out(out, &vers_document(&vers_from_ifs(f, *full)?.vers))?;
            Ok(Outcome::Written)
        }
        Command::FromErs { input, out } => {
            let doc = load(input)?;
            expect_kind(&doc, DocumentKind::Ers)?;
            write_out(out, &vers_document(&to_vers(&doc)?))?;
            Ok(Outcome::Written)
        }
        Command::IfsPower { input, k, out } => {
            let doc = load(input)?;
            let SpecBody::Ifs(f) = &doc.body else { bail!("expected an IFS document, got kind {}", doc.kind()) };
            let p = ifs_power(f, *k)?;
            write_out(out, &tagged(DocumentKind::Ifs, serde_json::to_value(p.to_document())?))?;
            Ok(Outcome::Written)
        }
        Command::Gluing { input, u, v, depth } => {
            let doc = load(input)?;
            let SpecBody::Ers(e) = &doc.body else { bail!("expected an ERS document, got kind {}", doc.kind()) };
            let (mut wu, mut wv) = (e.parse_word(u), e.parse_word(v));
            if let Some(d) = depth {
                if wu.len() < *d || wv.len() < *d {
                    bail!("words are shorter than depth {d}");
                }
                wu.truncate(*d);
                wv.truncate(*d);
            }
            let related = gluing_related_at_depth(e, &wu, &wv)?;
            let details = json!({ "u": wu.join("."), "v": wv.join("."), "depth": wu.len(), "related": related });
            report("gluing", &doc, if related { Verdict::Holds } else { Verdict::Fails }, details)
        }
        Command::Oracle { input, level, kind } => {
            let doc = load(input)?;
            if let Some(k) = kind {
                let expected = match k.as_str() {
                    "schreier" => DocumentKind::Automaton,
                    "ifs" => DocumentKind::Ifs,
                    "ers" => DocumentKind::Ers,
                    other => bail!("unknown oracle kind {other:?} (expected schreier, ifs or ers)"),
                };
                expect_kind(&doc, expected)?;
            }
            Ok(Outcome::Report(oracle_compare(&doc, *level)?))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Expand { .. } => "expand",
        Command::History { .. } => "history",
        Command::CheckExpanding { .. } => "check-expanding",
        Command::Squares { .. } => "squares",
        Command::Schreier { .. } => "schreier",
        Command::FromAutomaton { .. } => "from-automaton",
        Command::FromIfs { .. } => "from-ifs",
        Command::FromErs { .. } => "from-ers",
        Command::IfsPower { .. } => "ifs-power",
        Command::Gluing { .. } => "gluing",
        Command::Oracle { .. } => "oracle",
    }
}

fn threads(cli: &Cli) -> Result<Option<usize>> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => Some(s.trim().parse::<usize>().with_context(|| format!("{THREADS_ENV}={s:?} is not a thread count"))?),
        Err(_) => cli.threads,
    };
    match n {
        Some(0) => bail!("thread count must be at least 1"),
        n => Ok(n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = threads(&cli).and_then(|n| {
        if let Some(n) = n {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
        }
        run(&cli)
    });
    let mut report = match result {
        Ok(Outcome::Written) => return ExitCode::SUCCESS,
        Ok(Outcome::Report(r)) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            Report::new(command_name(&cli.command), "", Verdict::Inconclusive, json!({ "error": format!("{e:#}") }))
        }
    };
    report.elapsed_ms = start.elapsed().as_millis();
    if cli.human {
        print!("{}", report.render_human());
    } else {
        println!("{}", report.to_json());
    }
    ExitCode::from(report.verdict.exit_code() as u8)
}
