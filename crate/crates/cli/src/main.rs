//! `hetlogic`: parse, evaluate, solve, certify, check proofs, Morleyize and
//! force from the command line.

mod play;
mod report;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Value};

use hetlogic::game::{
    build_arena_with, check_well_determined, class_games, het_extension, oracle_eval, solve_game,
    tarski_test, OracleMode, Player,
};
use hetlogic::kripke::{check_kripke_model, force, KripkeModel};
use hetlogic::morley::{
    back_translate_proof, expand_model, morleyize_classical, morleyize_intuitionistic,
};
use hetlogic::parse::{
    parse_assignment, parse_class_file, parse_formula_in, parse_kripke, parse_signature,
    parse_structure, parse_theory,
};
use hetlogic::proof::{check_proof, parse_proof};
use hetlogic::structure::extension;
use hetlogic::syntax::{Length, Mode, PayoffClass};
use hetlogic::{eval_tarski, Assignment, Formula, SortedVar, Structure, Theory};

use report::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "hetlogic", version, about = "Heterogeneous quantifiers over finite structures")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "human", global = true)]
    format: Format,
    /// Seed for sampled runs.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Cap on arena positions and monitor states.
    #[arg(long, default_value_t = hetlogic::game::DEFAULT_MAX_POSITIONS, global = true, value_parser = positive)]
    max_positions: usize,
    /// Override the theory's proof mode.
    #[arg(long, value_enum, global = true)]
    mode: Option<ModeArg>,
    /// Override the payoff class: `safety`, `clopen` or a class file.
    #[arg(long, global = true)]
    class: Option<String>,
    /// Include wall-clock timings in the report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Classical,
    Intuitionistic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Side {
    Exists,
    Forall,
}

#[derive(clap::Args, Debug)]
struct Query {
    /// Structure file (`.str`).
    structure: PathBuf,
    /// Theory (`.thy`) or signature (`.sig`) file.
    theory: PathBuf,
    /// Formula to evaluate.
    #[arg(long)]
    formula: String,
    /// Free variables, e.g. `x:s, y:s`.
    #[arg(long, default_value = "")]
    ctx: String,
    /// Assignment, e.g. `x=a, y=b`.
    #[arg(long, default_value = "")]
    assign: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate files against a theory.
    Check {
        theory: PathBuf,
        files: Vec<PathBuf>,
    },
    /// Evaluate a formula at an assignment.
    Eval(Query),
    /// List the tuples satisfying a formula.
    Extension(Query),
    /// Solve the game of a heterogeneous formula.
    Solve(Query),
    /// Check that a structure is well-determined for the theory's games.
    Certify { structure: PathBuf, theory: PathBuf },
    /// Check a proof script.
    Prove { proof: PathBuf, theory: PathBuf },
    /// Print the Morleyized theory.
    Morleyize {
        theory: PathBuf,
        #[arg(long)]
        intuitionistic: bool,
        /// Also expand this model to the Morleyized signature.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Back-translate a proof over the Morleyized signature.
        #[arg(long)]
        back_translate: Option<PathBuf>,
        /// Write the Morleyized theory here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a Kripke model and evaluate forcing at a node.
    Force {
        model: PathBuf,
        theory: PathBuf,
        #[arg(long)]
        node: Option<String>,
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value = "")]
        ctx: String,
        #[arg(long, default_value = "")]
        assign: String,
    },
    /// Compare the solver with the brute-force oracles at every assignment.
    Oracle {
        #[command(flatten)]
        query: Query,
        /// Sample this many assignments (seeded) instead of all.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Play a heterogeneous game against the engine.
    Play {
        #[command(flatten)]
        query: Query,
        /// The side played by the human.
        #[arg(long, value_enum, default_value = "forall")]
        side: Side,
        /// Save the session transcript here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn parse_ctx(text: &str) -> Result<Vec<SortedVar>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|v| {
            let (n, s) = v.split_once(':').ok_or_else(|| anyhow!("expected `name:sort`, found `{v}`"))?;
            Ok(SortedVar::new(n.trim(), s.trim()))
        })
        .collect()
}

struct Env {
    cli_mode: Option<ModeArg>,
    class: Option<String>,
    max_positions: usize,
    seed: u64,
}

impl Env {
    /// The theory with command-line overrides, plus extra class games.
    fn theory(&self, path: &Path) -> Result<(Theory, Vec<(Formula, Vec<SortedVar>)>)> {
        let text = read(path)?;
        let mut th = if path.extension().is_some_and(|e| e == "sig") {
            Theory::new(parse_signature(&text).with_context(|| path.display().to_string())?)
        } else {
            parse_theory(&text, None).with_context(|| path.display().to_string())?
        };
        if let Some(m) = self.cli_mode {
            th.mode = match m {
                ModeArg::Classical => Mode::Classical,
                ModeArg::Intuitionistic => Mode::Intuitionistic,
            };
        }
        let mut extra = Vec::new();
        match self.class.as_deref() {
            None => {}
            Some("safety") => th.class = PayoffClass::SafetyOnly,
            Some("clopen") => th.class = PayoffClass::Clopen,
            Some(file) => {
                let cf = parse_class_file(&read(Path::new(file))?, &th.signature).with_context(|| file.to_string())?;
                if let Some(c) = cf.class {
                    th.class = c;
                }
                extra = cf.games;
            }
        }
        Ok((th, extra))
    }

    fn structure(&self, path: &Path, th: &Theory) -> Result<Structure> {
        parse_structure(&read(path)?, &th.signature).with_context(|| path.display().to_string())
    }

    fn query(&self, q: &Query) -> Result<(Theory, Structure, Formula, Vec<SortedVar>, Assignment)> {
        let (th, _) = self.theory(&q.theory)?;
        let m = self.structure(&q.structure, &th)?;
        let ctx = parse_ctx(&q.ctx)?;
        let f = parse_formula_in(&q.formula, &th.signature, &ctx).context("formula")?;
        let a = parse_assignment(&q.assign, &m, &ctx)?;
        Ok((th, m, f, ctx, a))
    }
}

fn names(m: &Structure, vars: &[SortedVar], tuple: &[usize]) -> Vec<String> {
    vars.iter().zip(tuple).map(|(v, &e)| m.elem_name(&v.sort, e).to_string()).collect()
}

fn full_assignment(ctx: &[SortedVar], a: &Assignment) -> Result<()> {
    for v in ctx {
        if !a.contains_key(&v.name) {
            bail!("`{}` needs a value (use --assign {}=...)", v.name, v.name);
        }
    }
    Ok(())
}

fn is_omega(f: &Formula) -> bool {
    matches!(f, Formula::Het(h) if h.length == Length::Omega)
}

fn run(cli: &Cli) -> Result<Report> {
    let env = Env {
        cli_mode: cli.mode,
        class: cli.class.clone(),
        max_positions: cli.max_positions,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Check { theory, files } => {
            let (th, extra) = env.theory(theory)?;
            let mut checked = vec![theory.display().to_string()];
            for file in files {
                let text = read(file)?;
                let what = file.display().to_string();
                match file.extension().and_then(|e| e.to_str()) {
                    Some("str") => drop(parse_structure(&text, &th.signature).context(what.clone())?),
                    Some("prf") => drop(parse_proof(&text, &th.signature).context(what.clone())?),
                    Some("krp") => {
                        let src = parse_kripke(&text, &th.signature).context(what.clone())?;
                        KripkeModel::from_source(src, &th.signature).context(what.clone())?;
                    }
                    Some("thy") => drop(parse_theory(&text, None).context(what.clone())?),
                    Some("sig") => drop(parse_signature(&text).context(what.clone())?),
                    _ => bail!("unknown file type: {what}"),
                }
                checked.push(what);
            }
            let details = json!({
                "files": checked,
                "axioms": th.axioms.len(),
                "class games": class_games(&th, &extra).len(),
            });
            Ok(Report::new("check", "ok", true).details(details))
        }
        Command::Eval(q) => {
            let (_, m, f, ctx, a) = env.query(q)?;
            full_assignment(&ctx, &a)?;
            let v = if is_omega(&f) {
                let ar = build_arena_with(&m, &f, &a, &tarski_test(&m), env.max_positions)?;
                solve_game(&ar).exists_wins(ar.initial)
            } else {
                eval_tarski(&m, &f, &a)?
            };
            Ok(Report::new("eval", v, v))
        }
        Command::Extension(q) => {
            let (_, m, f, ctx, _) = env.query(q)?;
            let ext = if is_omega(&f) {
                het_extension(&m, &f, &ctx)?
            } else {
                extension(&m, &f, &ctx)?
            };
            let rows: Vec<String> = ext
                .iter()
                .map(|t| format!("({})", names(&m, &ctx, t).join(", ")))
                .collect();
            Ok(Report::new("extension", format!("{} tuple(s)", rows.len()), true).details(json!({ "tuples": rows })))
        }
        Command::Solve(q) => {
            let (_, m, f, ctx, a) = env.query(q)?;
            full_assignment(&ctx, &a)?;
            if !matches!(f, Formula::Het(_)) {
                bail!("solve needs a heterogeneous formula");
            }
            let ar = build_arena_with(&m, &f, &a, &tarski_test(&m), env.max_positions)?;
            let g = solve_game(&ar);
            let (we, wa) = g.sizes();
            let win = g.exists_wins(ar.initial);
            let who = if win { Player::Exists } else { Player::Forall };
            let opening = g.strategy(who)[ar.initial]
                .map(|i| ar.move_names(&m, ar.initial, &ar.edges[ar.initial][i].mv))
                .filter(|_| ar.positions[ar.initial].owner == who);
            let regions = json!({
                "positions": ar.len(),
                "exists": we,
                "forall": wa,
                "partition": g.is_partition(),
            });
            let verdict = if win { "exists wins" } else { "forall wins" };
            let details = json!({
                "monitor states": ar.monitor.as_ref().map(|mon| mon.num_states()),
                "opening move": opening.map(|mv| format!("({})", mv.join(", "))),
            });
            Ok(Report::new("solve", verdict, win).regions(regions).details(details))
        }
        Command::Certify { structure, theory } => {
            let (th, extra) = env.theory(theory)?;
            let m = env.structure(structure, &th)?;
            let games = class_games(&th, &extra);
            let rep = check_well_determined(&m, &games)?;
            let regions: Vec<Value> = rep
                .games
                .iter()
                .map(|g| {
                    json!({
                        "id": g.id,
                        "params": g.params,
                        "exists": g.w_exists,
                        "forall": g.w_forall,
                        "determined": g.determined,
                    })
                })
                .collect();
            let witness = rep.witness().map_or(Value::Null, |l| json!({ "stem": l.stem, "cycle": l.cycle }));
            let verdict = if rep.well_determined {
                "well-determined"
            } else if !rep.determinacy {
                "not determined"
            } else {
                "not well-determined"
            };
            let lines: Vec<String> = rep
                .games
                .iter()
                .map(|g| {
                    let pres = |p: &Option<hetlogic::game::Preservation>| match p {
                        None => "-",
                        Some(p) if p.passed() => "pass",
                        Some(_) => "FAIL",
                    };
                    let at = if g.params.is_empty() { String::new() } else { format!(" at {}", g.params) };
                    format!(
                        "game {} {}{}: value {} determined {} preservation {}/{}",
                        g.id,
                        g.formula,
                        at,
                        g.value,
                        g.determined,
                        pres(&g.preservation),
                        pres(&g.dual_preservation)
                    )
                })
                .collect();
            Ok(Report::new("certify", verdict, rep.well_determined)
                .regions(Value::Array(regions))
                .witness(witness)
                .details(json!({ "games": lines })))
        }
        Command::Prove { proof, theory } => {
            let (th, _) = env.theory(theory)?;
            let p = parse_proof(&read(proof)?, &th.signature).with_context(|| proof.display().to_string())?;
            match check_proof(&p, &th) {
                Ok(()) => Ok(Report::new("prove", "accepted", true).details(json!({
                    "conclusion": p.conclusion.to_string(),
                    "nodes": p.size(),
                }))),
                Err(r) => Ok(Report::new("prove", "rejected", false)
                    .witness(json!({ "path": r.path, "rule": r.rule.to_string() }))
                    .details(json!({ "reason": r.to_string() }))),
            }
        }
        Command::Morleyize { theory, intuitionistic, model, back_translate, out } => {
            let (mut th, _) = env.theory(theory)?;
            let mt = if *intuitionistic {
                th.mode = Mode::Intuitionistic;
                morleyize_intuitionistic(&th)?
            } else {
                th.mode = Mode::Classical;
                morleyize_classical(&th)?
            };
            let text = mt.theory.to_string();
            if let Some(path) = out {
                std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            let symbols: Vec<String> = mt.sidecar().iter().map(|(k, v)| format!("{k} = {v}")).collect();
            let mut details = json!({
                "axioms": mt.theory.axioms.len(),
                "symbols": symbols,
                "theory": text,
            });
            let mut report = Report::new("morleyize", "ok", true);
            if let Some(path) = model {
                let m = env.structure(path, &mt.source)?;
                match expand_model(&m, &mt) {
                    Ok(x) => details["expanded model"] = json!(x.to_string()),
                    Err(e) => {
                        report = Report::new("morleyize", "expansion rejected", false);
                        details["expansion error"] = json!(e.to_string());
                    }
                }
            }
            if let Some(path) = back_translate {
                let p = parse_proof(&read(path)?, &mt.theory.signature).with_context(|| path.display().to_string())?;
                match back_translate_proof(&p, &mt) {
                    Ok(q) => details["back-translated proof"] = json!(q.to_string()),
                    Err(r) => {
                        report = Report::new("morleyize", "back-translation rejected", false)
                            .witness(json!({ "path": r.path, "rule": r.rule.to_string() }));
                        details["reason"] = json!(r.to_string());
                    }
                }
            }
            Ok(report.details(details))
        }
        Command::Force { model, theory, node, formula, ctx, assign } => {
            let (th, _) = env.theory(theory)?;
            let src = parse_kripke(&read(model)?, &th.signature).with_context(|| model.display().to_string())?;
            let k = KripkeModel::from_source(src, &th.signature)?;
            let rep = check_kripke_model(&k, &th)?;
            if !rep.accepted() {
                return Ok(Report::new("force", "model rejected", false).details(json!({ "violations": rep.violations })));
            }
            let Some(formula) = formula else {
                return Ok(Report::new("force", "model accepted", true).details(json!({ "nodes": k.nodes })));
            };
            let ctx = parse_ctx(ctx)?;
            let f = parse_formula_in(formula, &th.signature, &ctx).context("formula")?;
            let targets: Vec<usize> = match node {
                Some(n) => vec![k.node(n).ok_or_else(|| anyhow!("unknown node `{n}`"))?],
                None => (0..k.nodes.len()).collect(),
            };
            let mut forced = Vec::new();
            let mut all = true;
            for p in targets {
                let a = parse_assignment(assign, &k.structures[p], &ctx)?;
                full_assignment(&ctx, &a)?;
                let v = force(&k, p, &f, &ctx, &a)?;
                all &= v;
                forced.push(format!("{}: {}", k.nodes[p], if v { "forced" } else { "not forced" }));
            }
            let verdict = if all { "forced" } else { "not forced" };
            Ok(Report::new("force", verdict, all).details(json!({ "nodes": forced })))
        }
        Command::Oracle { query, samples } => {
            let (_, m, f, ctx, _) = env.query(query)?;
            if !is_omega(&f) {
                bail!("oracle needs an ω-block");
            }
            let mut all = m.assignments(&ctx);
            if let Some(n) = samples {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(env.seed);
                all.shuffle(&mut rng);
                all.truncate(*n);
            }
            let mut disagreements = Vec::new();
            for a in &all {
                let solver = eval_tarski(&m, &f, a)?;
                let s = oracle_eval(&m, &f, a, OracleMode::StrategyEnum)?;
                let c = oracle_eval(&m, &f, a, OracleMode::CoverSemantics)?;
                if solver != s || solver != c {
                    let row: Vec<usize> = ctx.iter().map(|v| a[&v.name]).collect();
                    disagreements.push(json!({
                        "assignment": names(&m, &ctx, &row),
                        "solver": solver,
                        "strategy-enum": s,
                        "cover": c,
                    }));
                }
            }
            let ok = disagreements.is_empty();
            let witness = disagreements.first().cloned().unwrap_or(Value::Null);
            Ok(Report::new("oracle", if ok { "agree" } else { "disagree" }, ok)
                .witness(witness)
                .details(json!({ "assignments": all.len(), "disagreements": disagreements.len() })))
        }
        Command::Play { query, side, transcript } => {
            let (_, m, f, ctx, a) = env.query(query)?;
            full_assignment(&ctx, &a)?;
            let human = match side {
                Side::Exists => Player::Exists,
                Side::Forall => Player::Forall,
            };
            let stdin = std::io::stdin();
            let mut out = std::io::stdout();
            let outcome = play::session(&m, &f, &a, human, env.max_positions, &mut stdin.lock(), &mut out)?;
            if let Some(path) = transcript {
                std::fs::write(path, outcome.transcript.join("\n") + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            Ok(Report::new("play", outcome.verdict.clone(), outcome.human_won != Some(false)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(mut r) => {
            if cli.timings {
                r.timings = json!({ "elapsed_ms": start.elapsed().as_millis() as u64 });
            }
            let _ = writeln!(std::io::stdout().lock(), "{}", r.render(cli.format));
            ExitCode::from(if r.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
