//! Command-line front end. Every command prints one JSON report line on
//! stdout and a short summary on stderr.
//!
//! Exit codes: 0 when the report has no findings, 1 when it has findings,
//! 2 for usage, IO and parse errors.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bridge::{self, DeductionMode, DeductionQuery, FusionSpec, RelationDocument, Thresholds};
use crate::brunnian::{self, BrunnianMode, BrunnianSpec};
use crate::collection::{Id, DEFAULT_DEPTH_CAP};
use crate::combiner::StateCombiner;
use crate::composition::{compose, compose_cross, CompatibilityMode};
use crate::dot::export_dot;
use crate::globalizer::{self, CandidateDocument, GlobalizerCandidate, Presheaf, PresheafDocument};
use crate::kernel::{validate_document, Document, Hyperstructure, StateToken};
use crate::site::{check_topology, trivial_topology, Site, TopologyDocument};

/// Environment variable overriding the collection depth cap.
pub const DEPTH_CAP_VAR: &str = "HYP_DEPTH_CAP";

const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "hyperbond", version, about = "Finite hyperstructure toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Weak,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DeduceMode {
    TwoPart,
    Flat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a structure document against the axioms.
    Validate { file: PathBuf },
    /// Rewrite a structure document in canonical form.
    Fmt {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose two bonds compatible at level P.
    Compose {
        file: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        level: usize,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
        #[arg(long, default_value = "pair")]
        combiner: String,
        /// JSON map from "left,right" to a state, for `--combiner custom`.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the topology axioms of a site.
    TopologyCheck { structure: PathBuf, topology: PathBuf },
    /// Emit the trivial topology of a structure.
    TopologyTrivial {
        structure: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a candidate globalizer, or search for one.
    Globalize {
        structure: PathBuf,
        topology: PathBuf,
        presheaf: PathBuf,
        /// Search even when a candidate is given.
        #[arg(long)]
        search: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long)]
        candidate: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force sheaf condition on a one-level site.
    SheafCheck { structure: PathBuf, topology: PathBuf, presheaf: PathBuf },
    /// Transfer a structure along a relation onto a new universe.
    Transfer {
        structure: PathBuf,
        relation: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fusion product of two structures.
    Fuse {
        a: PathBuf,
        b: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Threshold-gated propagation of numeric states.
    Propagate {
        structure: PathBuf,
        #[arg(long)]
        states: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long, default_value = "sum")]
        combiner: String,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Deduction over a bond, with optional proof search.
    Deduce {
        structure: PathBuf,
        #[arg(long)]
        bond: String,
        #[arg(long, value_delimiter = ',')]
        given: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        goal: Vec<String>,
        #[arg(long)]
        max_proof: Option<usize>,
        #[arg(long, value_enum, default_value = "two-part")]
        mode: DeduceMode,
    },
    /// Generate a levelwise Brunnian structure.
    Brunnian {
        #[arg(long)]
        branching: usize,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value = "bound")]
        state: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the levelwise Brunnian property.
    BrunnianCheck {
        file: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Render a structure as a Graphviz digraph.
    ExportDot {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Fmt { .. } => "fmt",
            Command::Compose { .. } => "compose",
            Command::TopologyCheck { .. } => "topology-check",
            Command::TopologyTrivial { .. } => "topology-trivial",
            Command::Globalize { .. } => "globalize",
            Command::SheafCheck { .. } => "sheaf-check",
            Command::Transfer { .. } => "transfer",
            Command::Fuse { .. } => "fuse",
            Command::Propagate { .. } => "propagate",
            Command::Deduce { .. } => "deduce",
            Command::Brunnian { .. } => "brunnian",
            Command::BrunnianCheck { .. } => "brunnian-check",
            Command::ExportDot { .. } => "export-dot",
        }
    }
}

/// Errors that stop a command before it produces a report.
#[derive(Debug)]
enum Fatal {
    Usage(String),
    Io(String),
    Parse(String),
}

impl Fatal {
    fn kind(&self) -> &'static str {
        match self {
            Fatal::Usage(_) => "usage",
            Fatal::Io(_) => "io",
            Fatal::Parse(_) => "parse",
        }
    }

    fn message(&self) -> &str {
        match self {
            Fatal::Usage(m) | Fatal::Io(m) | Fatal::Parse(m) => m,
        }
    }
}

#[derive(Default)]
struct Report {
    findings: Vec<Value>,
    fields: Map<String, Value>,
    artifacts: Vec<String>,
    summary: Vec<String>,
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn error_finding(message: impl ToString) -> Value {
    json!({"kind": "Error", "message": message.to_string()})
}

impl Report {
    fn field<T: Serialize>(&mut self, key: &str, value: &T) {
        self.fields.insert(key.to_string(), to_value(value));
    }

    fn finding<T: Serialize>(&mut self, finding: &T) {
        self.findings.push(to_value(finding));
    }

    fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// Writes `text` to `out` when given, else stores `value` under `key`.
    fn artifact(&mut self, key: &str, value: Value, text: String, out: Option<&Path>) -> Result<(), Fatal> {
        match out {
            Some(path) => {
                std::fs::write(path, text + "\n").map_err(|e| Fatal::Io(format!("{}: {e}", path.display())))?;
                self.artifacts.push(path.display().to_string());
            }
            None => {
                self.fields.insert(key.to_string(), value);
            }
        }
        Ok(())
    }

    fn document(&mut self, h: &Hyperstructure, out: Option<&Path>) -> Result<(), Fatal> {
        let text = h.to_canonical_json();
        let value = serde_json::from_str(&text).expect("canonical JSON parses");
        self.artifact("document", value, text, out)
    }
}

struct Context {
    depth_cap: usize,
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal::Io(format!("{}: {e}", path.display())))
}

fn parse_error(path: &Path, e: impl std::fmt::Display) -> Fatal {
    Fatal::Parse(format!("{}: {e}", path.display()))
}

fn parse_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, Fatal> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e))
}

fn parse_id(token: &str) -> Result<Id, Fatal> {
    Id::new(token).map_err(|e| Fatal::Usage(format!("{token:?}: {e}")))
}

fn parse_combiner(name: &str, table: Option<&Path>) -> Result<StateCombiner, Fatal> {
    let combiner: StateCombiner = name.parse().map_err(|e| Fatal::Usage(format!("{e}")))?;
    match (combiner, table) {
        (StateCombiner::Table(_), Some(path)) => {
            let entries = serde_json::from_str(&read(path)?).map_err(|e| parse_error(path, e))?;
            Ok(StateCombiner::Table(entries))
        }
        (StateCombiner::Table(_), None) => Err(Fatal::Usage("--combiner custom needs --table".into())),
        (_, Some(_)) => Err(Fatal::Usage("--table only applies to --combiner custom".into())),
        (combiner, None) => Ok(combiner),
    }
}

impl Context {
    fn document(&self, path: &Path) -> Result<Document, Fatal> {
        Document::parse(&read(path)?).map_err(|e| parse_error(path, e))
    }

    /// Loads a structure; axiom violations become findings (`None`).
    fn structure(&self, path: &Path, report: &mut Report) -> Result<Option<Hyperstructure>, Fatal> {
        let doc = self.document(path)?;
        let validation = validate_document(&doc, self.depth_cap);
        if !validation.is_empty() {
            for finding in &validation.findings {
                report.finding(finding);
            }
            report.note(format!("{} is not a valid structure", path.display()));
            return Ok(None);
        }
        match Hyperstructure::from_document_with_cap(&doc, self.depth_cap) {
            Ok(h) => Ok(Some(h)),
            Err(e) => {
                report.findings.push(error_finding(&e));
                Ok(None)
            }
        }
    }

    fn site(&self, structure: &Path, topology: &Path, report: &mut Report) -> Result<Option<Site>, Fatal> {
        let Some(h) = self.structure(structure, report)? else { return Ok(None) };
        let doc = TopologyDocument::parse(&read(topology)?).map_err(|e| parse_error(topology, e))?;
        let built = doc.to_topology(&h).and_then(|t| Site::new(h, t));
        match built {
            Ok(site) => {
                if !site.warnings().is_empty() {
                    report.field("warnings", &site.warnings());
                }
                Ok(Some(site))
            }
            Err(e) => {
                report.findings.push(error_finding(e));
                Ok(None)
            }
        }
    }

    fn presheaf(&self, h: &Hyperstructure, path: &Path, report: &mut Report) -> Result<Option<Presheaf>, Fatal> {
        let doc = PresheafDocument::parse(&read(path)?).map_err(|e| parse_error(path, e))?;
        match Presheaf::new(h, &doc) {
            Ok(p) => Ok(Some(p)),
            Err(e) => {
                report.findings.push(error_finding(e));
                Ok(None)
            }
        }
    }
}

/// Records an operation error as a finding and stops the command.
macro_rules! attempt {
    ($report:expr, $result:expr) => {
        match $result {
            Ok(v) => v,
            Err(e) => {
                $report.findings.push(error_finding(&e));
                return Ok(());
            }
        }
    };
}

fn execute(ctx: &Context, command: &Command, report: &mut Report) -> Result<(), Fatal> {
    match command {
        Command::Validate { file } => {
            let doc = ctx.document(file)?;
            let validation = validate_document(&doc, ctx.depth_cap);
            for finding in &validation.findings {
                report.finding(finding);
            }
        }
        Command::Fmt { file, out } => {
            let doc = ctx.document(file)?;
            let text = doc.to_canonical_json();
            let value = serde_json::from_str(&text).expect("canonical JSON parses");
            report.artifact("document", value, text, out.as_deref())?;
        }
        Command::Compose { file, a, b, level, mode, combiner, table, out } => {
            let (a, b) = (parse_id(a)?, parse_id(b)?);
            let combiner = parse_combiner(combiner, table.as_deref())?;
            let mode = match mode {
                Mode::Strict => CompatibilityMode::Strict,
                Mode::Weak => CompatibilityMode::Weak,
            };
            let Some(h) = ctx.structure(file, report)? else { return Ok(()) };
            let la = attempt!(report, h.require_bond(&a)).level;
            let lb = attempt!(report, h.require_bond(&b)).level;
            let result = if la == lb {
                compose(&h, &a, &b, *level, mode, &combiner)
            } else {
                compose_cross(&h, &a, &b, *level, mode, &combiner)
            };
            let (next, id) = attempt!(report, result);
            report.field("bond", &id);
            report.field("state", &next.bond(&id).map(|x| &x.state));
            report.note(format!("composed bond {id}"));
            report.document(&next, out.as_deref())?;
        }
        Command::TopologyCheck { structure, topology } => {
            let Some(site) = ctx.site(structure, topology, report)? else { return Ok(()) };
            let checked = check_topology(&site);
            for finding in &checked.findings {
                report.finding(finding);
            }
            report.field("bonds", &checked.bonds);
        }
        Command::TopologyTrivial { structure, out } => {
            let Some(h) = ctx.structure(structure, report)? else { return Ok(()) };
            let topology = attempt!(report, trivial_topology(&h));
            let doc = TopologyDocument::from_topology(&topology);
            report.artifact("topology", to_value(&doc), doc.to_canonical_json(), out.as_deref())?;
        }
        Command::Globalize { structure, topology, presheaf, search, budget, candidate, out } => {
            let Some(site) = ctx.site(structure, topology, report)? else { return Ok(()) };
            let Some(presheaf) = ctx.presheaf(site.structure(), presheaf, report)? else { return Ok(()) };
            let given = match candidate {
                Some(path) if !search => {
                    Some(CandidateDocument::parse(&read(path)?).map_err(|e| parse_error(path, e))?)
                }
                _ => None,
            };
            let candidate = match given {
                Some(doc) => GlobalizerCandidate::from_document(&doc),
                None => match attempt!(report, globalizer::find_globalizer(&site, &presheaf, *budget)) {
                    Some(found) => found,
                    None => {
                        report.findings.push(json!({"kind": "NoGlobalizer"}));
                        report.note("no globalizer exists");
                        return Ok(());
                    }
                },
            };
            let checked = attempt!(report, globalizer::check_globalizer(&site, &presheaf, &candidate));
            for finding in &checked.findings {
                report.finding(finding);
            }
            report.field("global_values", &checked.global_values);
            let doc = candidate.to_document();
            let text = serde_json::to_string(&to_value(&doc)).expect("serializes");
            report.artifact("candidate", to_value(&doc), text, out.as_deref())?;
        }
        Command::SheafCheck { structure, topology, presheaf } => {
            let Some(site) = ctx.site(structure, topology, report)? else { return Ok(()) };
            let Some(presheaf) = ctx.presheaf(site.structure(), presheaf, report)? else { return Ok(()) };
            let checked = attempt!(report, globalizer::sheaf_condition_oracle(&site, &presheaf));
            for failure in &checked.failures {
                let mut value = to_value(failure);
                value["kind"] = json!("SheafFailure");
                report.findings.push(value);
            }
        }
        Command::Transfer { structure, relation, out } => {
            let Some(h) = ctx.structure(structure, report)? else { return Ok(()) };
            let text = read(relation)?;
            let relation = RelationDocument::parse(&text).map_err(|e| parse_error(relation, e))?;
            let moved = attempt!(report, bridge::transfer(&h, &relation));
            report.note(format!("{} bonds transferred", moved.total_bonds()));
            report.document(&moved, out.as_deref())?;
        }
        Command::Fuse { a, b, spec, out } => {
            let spec: FusionSpec = parse_json(spec)?;
            let Some(h1) = ctx.structure(a, report)? else { return Ok(()) };
            let Some(h2) = ctx.structure(b, report)? else { return Ok(()) };
            let fused = attempt!(report, bridge::fuse(&h1, &h2, &spec));
            report.field("top", &fused.top);
            report.field("top_state", &fused.top_state);
            report.field("ignited", &fused.top_state.is_some());
            report.document(&fused.structure, out.as_deref())?;
        }
        Command::Propagate { structure, states, thresholds, combiner, table } => {
            let combiner = parse_combiner(combiner, table.as_deref())?;
            let states: BTreeMap<Id, StateToken> = parse_json(states)?;
            let thresholds: Thresholds = parse_json(thresholds)?;
            let Some(h) = ctx.structure(structure, report)? else { return Ok(()) };
            let propagation = attempt!(report, bridge::propagate(&h, &combiner, &thresholds, &states));
            let active = propagation.activation.values().filter(|a| a.active).count();
            report.note(format!("{active} of {} elements active", propagation.activation.len()));
            report.field("activation", &propagation.activation);
            report.field("top", &propagation.top);
        }
        Command::Deduce { structure, bond, given, goal, max_proof, mode } => {
            let ids = |xs: &[String]| xs.iter().map(|x| parse_id(x)).collect::<Result<BTreeSet<Id>, Fatal>>();
            let query = DeductionQuery {
                bond: parse_id(bond)?,
                given: ids(given)?,
                goal: ids(goal)?,
                max_proof_size: max_proof.unwrap_or(0),
            };
            let mode = match mode {
                DeduceMode::TwoPart => DeductionMode::TwoPart,
                DeduceMode::Flat => DeductionMode::Flat,
            };
            let Some(h) = ctx.structure(structure, report)? else { return Ok(()) };
            let deducible = attempt!(report, bridge::deduce(&h, &query, mode));
            report.field("deducible", &deducible);
            if max_proof.is_some() {
                let proof = attempt!(report, bridge::find_proof(&h, &query));
                report.field("proof", &proof);
            }
        }
        Command::Brunnian { branching, order, state, out } => {
            let state = StateToken::new(state.clone()).ok_or_else(|| Fatal::Usage("empty state".into()))?;
            let spec = BrunnianSpec { branching: *branching, order: *order, state };
            let h = attempt!(report, brunnian::generate(&spec));
            report.note(format!("{} objects, {} bonds", h.objects().len(), h.total_bonds()));
            report.document(&h, out.as_deref())?;
        }
        Command::BrunnianCheck { file, strict } => {
            let Some(h) = ctx.structure(file, report)? else { return Ok(()) };
            let mode = if *strict { BrunnianMode::Strict } else { BrunnianMode::SingleDeletion };
            for finding in &brunnian::check_brunnian_with(&h, mode).findings {
                report.finding(finding);
            }
        }
        Command::ExportDot { file, out } => {
            let Some(h) = ctx.structure(file, report)? else { return Ok(()) };
            let dot = export_dot(&h);
            report.artifact("dot", json!(dot), dot.trim_end().to_string(), out.as_deref())?;
        }
    }
    Ok(())
}

fn depth_cap() -> Result<usize, Fatal> {
    match std::env::var(DEPTH_CAP_VAR) {
        Err(_) => Ok(DEFAULT_DEPTH_CAP),
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| Fatal::Usage(format!("{DEPTH_CAP_VAR} must be a non-negative integer, got {raw:?}"))),
    }
}

fn write_line(out: &mut dyn Write, text: &str) {
    let _ = writeln!(out, "{text}");
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    let name = cli.command.name();
    let mut report = Report::default();
    let outcome = depth_cap().and_then(|depth_cap| execute(&Context { depth_cap }, &cli.command, &mut report));
    if let Err(fatal) = outcome {
        let line = json!({"command": name, "ok": false, "error": {"kind": fatal.kind(), "message": fatal.message()}});
        write_line(stdout, &line.to_string());
        write_line(stderr, &format!("{name}: {} error: {}", fatal.kind(), fatal.message()));
        return 2;
    }

    let ok = report.findings.is_empty();
    let mut line = Map::new();
    line.insert("command".into(), json!(name));
    line.insert("ok".into(), json!(ok));
    line.insert("findings".into(), Value::Array(report.findings.clone()));
    line.insert("artifacts".into(), json!(report.artifacts));
    for (k, v) in std::mem::take(&mut report.fields) {
        line.insert(k, v);
    }
    write_line(stdout, &Value::Object(line).to_string());

    let status = if ok { "ok".to_string() } else { format!("{} finding(s)", report.findings.len()) };
    write_line(stderr, &format!("{name}: {status}"));
    for finding in &report.findings {
        write_line(stderr, &format!("  - {finding}"));
    }
    for note in &report.summary {
        write_line(stderr, &format!("  {note}"));
    }
    for path in &report.artifacts {
        write_line(stderr, &format!("  wrote {path}"));
    }
    if ok {
        0
    } else {
        1
    }
}
