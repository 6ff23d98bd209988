//! Command-line front end.
//!
//! Exit codes: 0 provable / valid / success, 1 rejected / invalid, 2 parse or
//! usage error, 3 resource limit.

use std::fmt::Write as _;
use std::io::Read;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::model::{self, ModelJson};
use crate::rejection::{self, RejectionError, StepJson};
use crate::syntax::{parse_formula, Formula};
use crate::tableau::{
    self, Leaf, Mode, RuleSelection, TableauJson, TableauNode, Verdict, VerdictKind,
};
use crate::translate::{self, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "l1",
    version,
    about = "Decision procedure for the epsilon fragment L1"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Eps3b,
    Eps3,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Eps3b => Mode::Eps3b,
            ModeArg::Eps3 => Mode::Eps3,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SystemArg {
    Har,
    Hl1,
}

#[derive(clap::Args, Debug)]
pub struct Search {
    /// Formula text, or `-` to read standard input.
    pub formula: String,
    #[arg(long, value_enum, default_value = "eps3b")]
    pub mode: ModeArg,
    /// Rule selection seed; 0 is the deterministic default strategy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prints PROVABLE or REJECTED.
    Decide {
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        json: bool,
        /// Cross-check the verdict against the finite-model oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Prints the full reduction tree.
    Tableau {
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        json: bool,
    },
    /// Emits a rejection derivation as JSON.
    Reject {
        /// Formula text, or `-` to read standard input.
        formula: String,
        #[arg(long, value_enum, default_value = "har")]
        system: SystemArg,
    },
    /// Emits a countermodel as JSON, with axiom audits.
    Model {
        /// Formula text, or `-` to read standard input.
        formula: String,
        /// Also add unit values so the model satisfies full ontology.
        #[arg(long = "upgrade-L", alias = "upgrade-l")]
        upgrade_l: bool,
    },
    /// Prints the first-order translation.
    Translate {
        /// Formula text, or `-` to read standard input.
        formula: String,
        /// Print a TPTP FOF conjecture instead.
        #[arg(long)]
        tptp: bool,
        /// Also print the oracle verdict.
        #[arg(long)]
        oracle: bool,
    },
    /// Validates a tableau (JSON object) or rejection derivation (JSON array).
    Check {
        /// Certificate file, or `-` to read standard input.
        certificate: String,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn out(code: i32, stdout: impl Into<String>) -> Self {
        Outcome {
            code,
            stdout: stdout.into(),
            stderr: String::new(),
        }
    }

    fn err(code: i32, stderr: impl Into<String>) -> Self {
        Outcome {
            code,
            stdout: String::new(),
            stderr: stderr.into(),
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, S>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command, stdin),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome::err(code, text)
            } else {
                Outcome::out(code, text)
            }
        }
    }
}

fn read_input(arg: &str, stdin: &mut dyn Read) -> Result<String, Outcome> {
    if arg != "-" {
        return Ok(arg.to_string());
    }
    let mut s = String::new();
    stdin
        .read_to_string(&mut s)
        .map_err(|e| Outcome::err(EXIT_PARSE, format!("cannot read standard input: {e}\n")))?;
    Ok(s)
}

fn read_formula(arg: &str, stdin: &mut dyn Read) -> Result<Formula, Outcome> {
    let text = read_input(arg, stdin)?;
    parse_formula(text.trim()).map_err(|e| Outcome::err(EXIT_PARSE, format!("{e}\n")))
}

fn verdict_code(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Provable => EXIT_OK,
        VerdictKind::Rejected => EXIT_NEGATIVE,
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn oracle(f: &Formula) -> Result<bool, Outcome> {
    translate::oracle_valid(f).map_err(|e @ OracleError::ResourceLimit { .. }| {
        Outcome::err(EXIT_RESOURCE, format!("oracle: {e}\n"))
    })
}

fn execute(cmd: Command, stdin: &mut dyn Read) -> Outcome {
    match run_command(cmd, stdin) {
        Ok(o) | Err(o) => o,
    }
}

fn run_command(cmd: Command, stdin: &mut dyn Read) -> Result<Outcome, Outcome> {
    Ok(match cmd {
        Command::Decide {
            search,
            json,
            oracle: cross,
        } => {
            let f = read_formula(&search.formula, stdin)?;
            let verdict = tableau::build_tableau(
                &f,
                RuleSelection::from_seed(search.seed),
                search.mode.into(),
            );
            let kind = verdict.kind();
            let valid = if cross { Some(oracle(&f)?) } else { None };
            let agrees = valid.map(|v| v == (kind == VerdictKind::Provable));
            let stdout = if json {
                to_json(&DecideJson {
                    formula: f.to_ascii(),
                    verdict: kind.to_string(),
                    oracle_valid: valid,
                    agrees,
                })
            } else {
                let mut s = format!("{kind}\n");
                if let Some(v) = valid {
                    let _ = writeln!(s, "oracle: {}", if v { "VALID" } else { "INVALID" });
                }
                s
            };
            let mut o = Outcome::out(verdict_code(kind), stdout);
            if agrees == Some(false) {
                o.stderr = "verdict disagrees with the oracle\n".into();
            }
            o
        }
        Command::Tableau { search, json } => {
            let f = read_formula(&search.formula, stdin)?;
            let verdict = tableau::build_tableau(
                &f,
                RuleSelection::from_seed(search.seed),
                search.mode.into(),
            );
            let stdout = if json {
                to_json(&verdict.tableau().to_json())
            } else {
                render_tableau(&verdict)
            };
            Outcome::out(verdict_code(verdict.kind()), stdout)
        }
        Command::Reject { formula, system } => {
            let f = read_formula(&formula, stdin)?;
            let built = match system {
                SystemArg::Har => rejection::reject_formula(&f),
                SystemArg::Hl1 => rejection::reject_formula_hl1(&f),
            };
            match built {
                Ok(d) => Outcome::out(EXIT_OK, to_json(&d.to_json())),
                Err(e @ (RejectionError::IsProvable | RejectionError::NotHintikka)) => {
                    Outcome::err(EXIT_NEGATIVE, format!("{e}\n"))
                }
            }
        }
        Command::Model { formula, upgrade_l } => {
            let f = read_formula(&formula, stdin)?;
            let Verdict::Rejected { hintikka, .. } = tableau::decide(&f) else {
                return Err(Outcome::err(
                    EXIT_NEGATIVE,
                    "formula is provable; it has no countermodel\n",
                ));
            };
            let m = model::build_model(&hintikka).expect("open branches end in Hintikka formulas");
            let upgraded = upgrade_l.then(|| model::upgrade_to_L(&m));
            let report = ModelReport {
                formula: f.to_ascii(),
                hintikka: hintikka.to_ascii(),
                holds: model::eval(&m, &f),
                audit_l1: strings(model::audit_l1_axioms(&m)),
                singular_names: strings(model::singular_names(&m)),
                audit_l: strings(model::audit_L_axiom(&m)),
                model: m.to_json(),
                upgraded: upgraded.as_ref().map(|u| UpgradeReport {
                    model: u.to_json(),
                    holds: model::eval(u, &f),
                    audit_l1: strings(model::audit_l1_axioms(u)),
                    audit_l: strings(model::audit_L_axiom(u)),
                }),
            };
            Outcome::out(EXIT_OK, to_json(&report))
        }
        Command::Translate {
            formula,
            tptp,
            oracle: cross,
        } => {
            let f = read_formula(&formula, stdin)?;
            let phi = translate::t_transform(&f);
            let mut stdout = if tptp {
                translate::tptp_conjecture("l1_formula", &phi)
            } else {
                phi.to_string()
            };
            stdout.push('\n');
            if cross {
                let v = oracle(&f)?;
                let _ = writeln!(stdout, "oracle: {}", if v { "VALID" } else { "INVALID" });
            }
            Outcome::out(EXIT_OK, stdout)
        }
        Command::Check { certificate } => {
            let text = if certificate == "-" {
                read_input("-", stdin)?
            } else {
                std::fs::read_to_string(&certificate).map_err(|e| {
                    Outcome::err(EXIT_PARSE, format!("cannot read {certificate}: {e}\n"))
                })?
            };
            check_certificate(&text)
        }
    })
}

/// Validates a certificate given as JSON text.
pub fn check_certificate(text: &str) -> Outcome {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Outcome::err(EXIT_PARSE, format!("malformed JSON: {e}\n")),
    };
    match value {
        Value::Object(_) => {
            let cert: TableauJson = match serde_json::from_value(value) {
                Ok(c) => c,
                Err(e) => return Outcome::err(EXIT_NEGATIVE, format!("INVALID: {e}\n")),
            };
            match tableau::check_tableau(&cert) {
                Ok(kind) => Outcome::out(EXIT_OK, format!("VALID tableau: {kind}\n")),
                Err(e) => Outcome::err(EXIT_NEGATIVE, format!("INVALID: {e}\n")),
            }
        }
        Value::Array(_) => {
            let steps: Vec<StepJson> = match serde_json::from_value(value) {
                Ok(s) => s,
                Err(e) => return Outcome::err(EXIT_NEGATIVE, format!("INVALID: {e}\n")),
            };
            match rejection::check_json(&steps) {
                Ok(d) => Outcome::out(
                    EXIT_OK,
                    format!(
                        "VALID {} derivation rejecting {}\n",
                        d.system.name(),
                        d.goal
                    ),
                ),
                Err(e) => Outcome::err(EXIT_NEGATIVE, format!("INVALID: {e}\n")),
            }
        }
        _ => Outcome::err(EXIT_NEGATIVE, "INVALID: expected a JSON object or array\n"),
    }
}

#[derive(Serialize)]
struct DecideJson {
    formula: String,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agrees: Option<bool>,
}

#[derive(Serialize)]
struct ModelReport {
    formula: String,
    hintikka: String,
    model: ModelJson,
    holds: bool,
    audit_l1: Vec<String>,
    singular_names: Vec<String>,
    #[serde(rename = "audit_L")]
    audit_l: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upgraded: Option<UpgradeReport>,
}

#[derive(Serialize)]
struct UpgradeReport {
    model: ModelJson,
    holds: bool,
    audit_l1: Vec<String>,
    #[serde(rename = "audit_L")]
    audit_l: Vec<String>,
}

fn strings<T: ToString>(items: Vec<T>) -> Vec<String> {
    items.iter().map(T::to_string).collect()
}

fn render_tableau(v: &Verdict) -> String {
    fn node(n: &TableauNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let _ = writeln!(out, "{pad}{}", n.formula);
        match (&n.rule, &n.leaf) {
            (Some(r), _) => {
                let principals: Vec<String> = r.principals.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{pad}  [{} at {}]",
                    r.rule.name(),
                    principals.join(", ")
                );
            }
            (None, Some(Leaf::Closed(c))) => {
                let _ = writeln!(out, "{pad}  closed on {}", c.formula);
            }
            (None, Some(Leaf::Hintikka)) => {
                let _ = writeln!(out, "{pad}  open (Hintikka)");
            }
            (None, None) => {}
        }
        for c in &n.children {
            node(c, depth + 1, out);
        }
    }
    let t = v.tableau();
    let mut out = format!("mode: {}\n", t.mode.name());
    node(&t.root, 0, &mut out);
    let _ = writeln!(out, "{}", v.kind());
    out
}
