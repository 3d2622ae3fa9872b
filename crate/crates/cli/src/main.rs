use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use lfi_core::balfi::{self, BalfiClass};
use lfi_core::belief::{self, Scenario, ScenarioFile, ValidatedEntrenchment};
use lfi_core::bmod;
use lfi_core::hilbert::{self, LogicId, Outcome, Proof, SearchBudget};
use lfi_core::nmatrix::{self, Budget, Verdict};
use lfi_core::Formula;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "lfi",
    version,
    about = "Decision, proof and belief-change tools for Cbr and Cie"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide `premises ⊨ goal` with the three-valued Nmatrix.
    Decide {
        #[arg(long, default_value = "cbr")]
        logic: LogicId,
        #[arg(long = "premise")]
        premises: Vec<Formula>,
        #[arg(long)]
        goal: Formula,
        /// Largest number of distinct subformulas to enumerate.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Search for a Hilbert proof, or check one with `--proof`.
    Prove {
        #[arg(long, default_value = "cbr")]
        logic: LogicId,
        #[arg(long = "premise")]
        premises: Vec<Formula>,
        #[arg(long)]
        goal: Option<Formula>,
        /// Longest proof to emit.
        #[arg(long)]
        budget: Option<usize>,
        /// A proof text to check instead of searching.
        #[arg(long)]
        proof: Option<PathBuf>,
    },
    /// Look for a finite BALFI in which `premises ⊨ goal` fails.
    Refute {
        #[arg(long, default_value = "rcbr")]
        logic: LogicId,
        #[arg(long = "premise")]
        premises: Vec<Formula>,
        #[arg(long)]
        goal: Formula,
        #[arg(long, default_value_t = 3)]
        max_atoms: u32,
    },
    /// Well-definedness of the periodic-set model and its countermodel.
    BmodVerify {
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Operator table of the interval model.
    IntervalTable {
        #[arg(long, default_value_t = -3, allow_hyphen_values = true)]
        n_min: i64,
        #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
        n_max: i64,
    },
    /// Contract the belief set of a scenario file.
    Contract {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        alpha: Formula,
    },
    /// Run the contraction postulates on a scenario file.
    CheckPostulates {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Epistemic attitudes of a scenario's belief set towards a formula.
    Attitudes {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        alpha: Formula,
    },
}

/// JSON for standard output, a line for standard error, and whether the
/// verdict was affirmative.
struct Report {
    json: Value,
    summary: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report.json).expect("JSON values serialize");
            // A closed pipe is not worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            eprintln!("{}", report.summary);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<Report> {
    match command {
        Command::Decide {
            logic,
            premises,
            goal,
            budget,
        } => decide(logic, &premises, &goal, budget),
        Command::Prove {
            logic,
            premises,
            goal,
            budget,
            proof,
        } => match proof {
            Some(path) => check(logic, &premises, goal.as_ref(), &path),
            None => prove(
                logic,
                &premises,
                &goal.context("--goal or --proof is required")?,
                budget,
            ),
        },
        Command::Refute {
            logic,
            premises,
            goal,
            max_atoms,
        } => refute(logic, &premises, &goal, max_atoms),
        Command::BmodVerify { kmax } => bmod_verify(kmax),
        Command::IntervalTable { n_min, n_max } => interval_table(n_min, n_max),
        Command::Contract { scenario, alpha } => contract(&scenario, &alpha),
        Command::CheckPostulates { scenario } => check_postulates(&scenario),
        Command::Attitudes { scenario, alpha } => attitudes(&scenario, &alpha),
    }
}

fn strings(fs: &[Formula]) -> Vec<String> {
    fs.iter().map(Formula::to_string).collect()
}

fn decide(
    logic: LogicId,
    premises: &[Formula],
    goal: &Formula,
    budget: Option<usize>,
) -> Result<Report> {
    if logic.is_self_extensional() {
        bail!("decide needs cbr or cie; {logic} has no matrix");
    }
    let budget = budget.map_or_else(Budget::default, |max_subformulas| Budget {
        max_subformulas,
    });
    let verdict = nmatrix::holds_with(&logic.matrix(), premises, goal, budget)?;
    let ok = verdict.is_valid();
    let mut json = json!({
        "logic": logic,
        "premises": strings(premises),
        "goal": goal.to_string(),
    });
    merge(&mut json, serde_json::to_value(&verdict)?);
    let summary = match &verdict {
        Verdict::Valid => format!("{logic}: {goal} follows"),
        Verdict::Countermodel(_) => {
            format!("{logic}: {goal} does not follow; countermodel printed")
        }
    };
    Ok(Report { json, summary, ok })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn proof_lines(proof: &Proof) -> Vec<String> {
    proof.to_string().lines().map(String::from).collect()
}

fn prove(
    logic: LogicId,
    premises: &[Formula],
    goal: &Formula,
    budget: Option<usize>,
) -> Result<Report> {
    let mut search = SearchBudget::default();
    if let Some(max_lines) = budget {
        search.max_lines = max_lines;
    }
    let found = if premises.is_empty() {
        match hilbert::bounded_prove(logic, goal, search)? {
            Outcome::Proved(p) => Some((Vec::new(), p)),
            Outcome::Unknown => None,
        }
    } else {
        hilbert::derive(logic, premises, goal, search)?.map(|d| (d.used, d.proof))
    };
    let base = json!({"logic": logic, "premises": strings(premises), "goal": goal.to_string()});
    Ok(match found {
        Some((used, proof)) => {
            let mut json = base;
            merge(
                &mut json,
                json!({"status": "proved", "used": strings(&used), "proof": proof_lines(&proof)}),
            );
            Report {
                json,
                summary: format!("{logic}: proof of {goal} in {} lines", proof.len()),
                ok: true,
            }
        }
        None => {
            let mut json = base;
            merge(
                &mut json,
                json!({"status": "unknown", "max_lines": search.max_lines}),
            );
            Report {
                json,
                summary: format!(
                    "{logic}: no proof of {goal} within {} lines",
                    search.max_lines
                ),
                ok: false,
            }
        }
    })
}

fn check(
    logic: LogicId,
    premises: &[Formula],
    goal: Option<&Formula>,
    path: &Path,
) -> Result<Report> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let proof: Proof = text.parse()?;
    let mut problem = hilbert::check_proof(logic, premises, &proof)
        .err()
        .map(|e| e.to_string());
    if let (None, Some(goal)) = (&problem, goal) {
        if proof.conclusion() != Some(goal) {
            problem = Some(format!("the proof does not end with {goal}"));
        }
    }
    let conclusion = proof.conclusion().map(Formula::to_string);
    let json = json!({
        "logic": logic,
        "premises": strings(premises),
        "conclusion": conclusion,
        "lines": proof.len(),
        "status": if problem.is_none() { "accepted" } else { "rejected" },
        "error": problem,
    });
    let summary = match &problem {
        None => format!("{logic}: proof accepted ({} lines)", proof.len()),
        Some(e) => format!("{logic}: proof rejected: {e}"),
    };
    Ok(Report {
        json,
        summary,
        ok: problem.is_none(),
    })
}

fn refute(logic: LogicId, premises: &[Formula], goal: &Formula, max_atoms: u32) -> Result<Report> {
    let class = match logic {
        LogicId::RCbr => BalfiClass::RCbr,
        LogicId::RCie => BalfiClass::RCie,
        other => bail!("refute needs rcbr or rcie, got {other}"),
    };
    let target = match Formula::conjunction(premises) {
        Some(c) => Formula::imp(c, goal.clone()),
        None => goal.clone(),
    };
    let found = balfi::refute(class, max_atoms, &target)?;
    let base = json!({"logic": logic, "premises": strings(premises), "goal": goal.to_string(), "max_atoms": max_atoms});
    let mut json = base;
    Ok(match found {
        Some(r) => {
            merge(
                &mut json,
                json!({
                    "status": "refuted",
                    "structure": r.structure,
                    "assignment": r.assignment,
                    "value": r.value,
                }),
            );
            Report {
                json,
                summary: format!("{logic}: countermodel of size {}", r.structure.size()),
                ok: false,
            }
        }
        None => {
            merge(&mut json, json!({"status": "no countermodel"}));
            Report {
                json,
                summary: format!("{logic}: no countermodel up to size {}", 1u32 << max_atoms),
                ok: true,
            }
        }
    })
}

fn bmod_verify(kmax: usize) -> Result<Report> {
    let welldef = bmod::verify_welldef(kmax)?;
    let countermodel = bmod::countermodel_report();
    let ok = welldef.passed && countermodel.passed;
    let summary = format!(
        "well-definedness over {} members: {}; countermodel: {}",
        welldef.members.len(),
        verdict_word(welldef.passed),
        verdict_word(countermodel.passed),
    );
    Ok(Report {
        json: json!({"welldef": welldef, "countermodel": countermodel, "passed": ok}),
        summary,
        ok,
    })
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn interval_table(n_min: i64, n_max: i64) -> Result<Report> {
    if n_min > n_max {
        bail!("--n-min {n_min} is above --n-max {n_max}");
    }
    let rows = balfi::interval_table_report(n_min..=n_max);
    let certificates = balfi::paraconsistency_certificates();
    Ok(Report {
        summary: format!("{} rows, {} certificates", rows.len(), certificates.len()),
        json: json!({"rows": rows, "certificates": certificates}),
        ok: true,
    })
}

/// The scenario, and its order unless the order was rejected, in which case
/// the report to print instead.
fn load(path: &Path) -> Result<(Scenario, Result<ValidatedEntrenchment, Report>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let s = file.scenario()?;
    let order = file.order(&s)?.map_err(|report| Report {
        summary: format!(
            "entrenchment rejected: {}",
            report.first_problem().unwrap_or_default()
        ),
        json: json!({"status": "rejected", "entrenchment": report}),
        ok: false,
    });
    Ok((s, order))
}

fn contract(path: &Path, alpha: &Formula) -> Result<Report> {
    let (s, order) = load(path)?;
    let e = match order {
        Ok(e) => e,
        Err(report) => return Ok(report),
    };
    let c = belief::contract(&s, &e, alpha)?;
    let kept = c.kept(&s);
    let removed = c.removed(&s);
    Ok(Report {
        summary: format!(
            "K ÷ {alpha}: kept {}, removed {}{}",
            kept.len(),
            removed.len(),
            if c.failed {
                " (unrevocable target)"
            } else {
                ""
            }
        ),
        json: json!({
            "target": alpha.to_string(),
            "unrevocable": c.failed,
            "kept": strings(&kept),
            "removed": strings(&removed),
        }),
        ok: true,
    })
}

fn check_postulates(path: &Path) -> Result<Report> {
    let (s, order) = load(path)?;
    let e = match order {
        Ok(e) => e,
        Err(report) => return Ok(report),
    };
    let report = belief::check_postulates(&s, &e)?;
    let failed: Vec<&str> = report
        .postulates
        .iter()
        .filter(|p| !p.passed)
        .map(|p| p.name)
        .collect();
    Ok(Report {
        summary: if failed.is_empty() {
            format!(
                "all {} checks pass over {} formulas",
                report.postulates.len(),
                report.universe_size
            )
        } else {
            format!("failing: {}", failed.join(", "))
        },
        ok: report.passed,
        json: serde_json::to_value(&report)?,
    })
}

fn attitudes(path: &Path, alpha: &Formula) -> Result<Report> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let a = file.scenario()?.attitudes(alpha)?;
    let flags = [
        ("accepted", a.accepted),
        ("rejected", a.rejected),
        ("indeterminate", a.indeterminate),
        ("overdetermined", a.overdetermined),
        ("consistent", a.consistent),
        ("strongly accepted", a.strongly_accepted),
        ("strongly rejected", a.strongly_rejected),
    ];
    let on: Vec<&str> = flags.iter().filter(|(_, v)| *v).map(|(n, _)| *n).collect();
    Ok(Report {
        summary: format!("{alpha}: {}", on.join(", ")),
        json: serde_json::to_value(&a)?,
        ok: true,
    })
}
