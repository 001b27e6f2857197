use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rippling::critic::{run_critic, CriticConfig, CriticRun};
use rippling::difference::{dmatch_all, dmatch_first, dunify, dunify_minimal, DMatch, DUnifier};
use rippling::prover::{prove_with_lemmas, Budget, NodeKind, ProofNode};
use rippling::replay::replay_conjecture;
use rippling::ripple::{render_goal, ripple, ripple_and_fertilize, RippleOutcome, RIPPLE_BUDGET};
use rippling::theory::Theory;
use rippling::{Equation, Signature, Term};

#[derive(Parser)]
#[command(name = "rippling", version, about = "Rippling, difference matching and inductive proof")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prove a conjecture by induction and rippling.
    Prove {
        theory: PathBuf,
        /// Conjecture name or equation text.
        conjecture: String,
        #[command(flatten)]
        opts: ProveOpts,
        /// Do not run the divergence critic on failure.
        #[arg(long)]
        no_critic: bool,
    },
    /// Ripple an annotated goal with the theory's wave rules.
    Ripple {
        theory: PathBuf,
        /// Annotated equation, e.g. "(append {cons e [x]} nil) = {cons e [x]}".
        goal: String,
        /// Induction hypothesis to fertilize with.
        #[arg(long)]
        hyp: Option<String>,
        /// Treat NAME as a variable in the goal and hypothesis (repeatable).
        #[arg(long = "var", value_name = "NAME")]
        vars: Vec<String>,
        /// Maximum number of ripple steps.
        #[arg(long, default_value_t = RIPPLE_BUDGET, value_parser = positive)]
        budget: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Difference-match a pattern against a target.
    Dmatch {
        pattern: String,
        target: String,
        #[command(flatten)]
        terms: TermOpts,
        /// Report only the first match found.
        #[arg(long)]
        first: bool,
    },
    /// Difference-unify two terms.
    Dunify {
        left: String,
        right: String,
        #[command(flatten)]
        terms: TermOpts,
        /// Report only a minimal unifier.
        #[arg(long)]
        minimal: bool,
    },
    /// Run the divergence critic on a conjecture and report its reasoning.
    Critic {
        theory: PathBuf,
        conjecture: String,
        #[command(flatten)]
        opts: ProveOpts,
    },
    /// Validate a theory and list its wave rules.
    Check {
        theory: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct ProveOpts {
    /// Bound on all proof steps of one attempt.
    #[arg(long, value_parser = positive)]
    budget: Option<usize>,
    /// List rewrite and ripple steps under each node.
    #[arg(long)]
    trace: bool,
    /// Take stated and speculated lemmas on trust instead of proving them.
    #[arg(long)]
    assume_lemmas: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct TermOpts {
    /// Parse terms over this theory's signature.
    #[arg(long)]
    theory: Option<PathBuf>,
    /// Maximum number of results.
    #[arg(long, default_value_t = 100, value_parser = positive)]
    cap: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Clone, Copy)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Structured,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, found `{s}`")),
    }
}

/// Collected output and exit status of one command.
struct Report {
    format: Format,
    text: String,
    records: Vec<Value>,
}

impl Report {
    fn new(out: Output) -> Self {
        Report {
            format: out.format,
            text: String::new(),
            records: Vec::new(),
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn record(&mut self, v: Value) {
        self.records.push(v);
    }

    fn print(&self) {
        match self.format {
            Format::Text => print!("{}", self.text),
            Format::Structured => {
                for r in &self.records {
                    println!("{r}");
                }
            }
        }
    }
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((report, ok)) => {
            report.print();
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Theory, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Theory::parse(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn conjecture(th: &Theory, text: &str) -> Result<Equation, Failure> {
    if let Some(eq) = th.conjecture(text) {
        return Ok(eq.clone());
    }
    if let Some(l) = th.lemma(text) {
        return Ok(l.equation.clone());
    }
    Ok(th.parse_equation(text)?)
}

fn budget(opts: &ProveOpts) -> Budget {
    let mut b = Budget::default();
    if let Some(n) = opts.budget {
        b.total_steps = n;
    }
    b
}

fn run(cmd: Command) -> Result<(Report, bool), Failure> {
    match cmd {
        Command::Prove {
            theory,
            conjecture: c,
            opts,
            no_critic,
        } => {
            let th = load(&theory)?;
            let conj = conjecture(&th, &c)?;
            let budget = budget(&opts);
            let (mut tree, patched) = prove_with_lemmas(&conj, &th, budget, opts.assume_lemmas);
            if !tree.is_closed() && !no_critic {
                let config = CriticConfig {
                    budget,
                    assume: opts.assume_lemmas,
                    ..CriticConfig::default()
                };
                let run = run_critic(&conj, &patched, config);
                if run.tree.is_closed() {
                    tree = rewrap(&tree, run.tree);
                }
            }
            let mut r = Report::new(opts.out);
            tree_output(&mut r, &tree, opts.trace);
            let ok = result_output(&mut r, &tree, &conj, &th)?;
            Ok((r, ok))
        }
        Command::Critic {
            theory,
            conjecture: c,
            opts,
        } => {
            let th = load(&theory)?;
            let conj = conjecture(&th, &c)?;
            let budget = budget(&opts);
            let (first, patched) = prove_with_lemmas(&conj, &th, budget, opts.assume_lemmas);
            let config = CriticConfig {
                budget,
                assume: opts.assume_lemmas,
                ..CriticConfig::default()
            };
            let run = run_critic(&conj, &patched, config);
            let mut r = Report::new(opts.out);
            critic_output(&mut r, &run);
            let tree = rewrap(&first, run.tree);
            tree_output(&mut r, &tree, opts.trace);
            let ok = result_output(&mut r, &tree, &conj, &th)?;
            Ok((r, ok))
        }
        Command::Ripple {
            theory,
            goal,
            hyp,
            vars,
            budget,
            out,
        } => {
            let mut th = load(&theory)?;
            for v in &vars {
                th.signature.declare_var(v, None);
            }
            let goal = th.parse_ann_equation(&goal)?;
            if !goal.is_wat() {
                return Err(Failure("goal is not well annotated".into()));
            }
            let rules = th.wave_rules();
            let hyp = hyp.map(|h| th.parse_equation(&h)).transpose()?;
            let (trace, fert) = match &hyp {
                Some(h) => ripple_and_fertilize(&goal, &rules, h, budget),
                None => (ripple(&goal, &rules, None, budget), None),
            };
            let mut r = Report::new(out);
            r.line(render_goal(&trace.initial));
            for (i, s) in trace.steps.iter().enumerate() {
                r.line(format!(". {s}"));
                r.record(json!({
                    "record": "step",
                    "index": i + 1,
                    "rule": &*s.rule.name,
                    "position": s.position.to_string(),
                    "before": render_goal(&s.before),
                    "after": render_goal(&s.after),
                    "skeletons_equal": s.skeletons_equal,
                }));
            }
            if let Some(f) = &fert {
                r.line(format!(". fertilize {} {} ~> {}", f.used, f.position, render_goal(&f.after)));
                r.record(json!({
                    "record": "fertilize",
                    "hypothesis": f.used.to_string(),
                    "position": f.position.to_string(),
                    "after": render_goal(&f.after),
                }));
            }
            r.line(format!("outcome {}", trace.outcome));
            r.record(json!({"record": "result", "outcome": trace.outcome.to_string(), "steps": trace.steps.len()}));
            Ok((r, trace.outcome != RippleOutcome::Blocked))
        }
        Command::Dmatch {
            pattern,
            target,
            terms,
            first,
        } => {
            let (p, t) = parse_pair(&terms, &pattern, &target)?;
            let found: Vec<DMatch> = if first {
                dmatch_first(&p, &t).into_iter().collect()
            } else {
                dmatch_all(&p, &t, terms.cap)
            };
            let mut r = Report::new(terms.out);
            for m in &found {
                r.line(format!("cost {} {} {}", m.cost(), m.annotated_target, m.subst));
                r.record(json!({
                    "record": "match",
                    "cost": m.cost(),
                    "annotated": m.annotated_target.to_string(),
                    "subst": m.subst.to_string(),
                }));
            }
            count_output(&mut r, found.len());
            Ok((r, !found.is_empty()))
        }
        Command::Dunify {
            left,
            right,
            terms,
            minimal,
        } => {
            let (s, t) = parse_pair(&terms, &left, &right)?;
            let found: Vec<DUnifier> = if minimal {
                dunify_minimal(&s, &t).into_iter().collect()
            } else {
                dunify(&s, &t, terms.cap)
            };
            let mut r = Report::new(terms.out);
            for u in &found {
                r.line(format!(
                    "cost {} {} | {} {}",
                    u.annotation_cost, u.annotated_left, u.annotated_right, u.subst
                ));
                r.record(json!({
                    "record": "unifier",
                    "cost": u.annotation_cost,
                    "left": u.annotated_left.to_string(),
                    "right": u.annotated_right.to_string(),
                    "subst": u.subst.to_string(),
                }));
            }
            count_output(&mut r, found.len());
            Ok((r, !found.is_empty()))
        }
        Command::Check { theory, out } => {
            let th = load(&theory)?;
            th.check().map_err(|e| Failure(format!("{}: {e}", theory.display())))?;
            let mut r = Report::new(out);
            r.line(format!(
                "ok: {} datatypes, {} definitions, {} lemmas, {} conjectures",
                th.datatypes.len(),
                th.defs.len(),
                th.lemmas.len(),
                th.conjectures.len()
            ));
            for w in th.wave_rules() {
                let c = &w.certificate;
                r.line(format!(
                    "{w}  skeleton {} measure {} > {}",
                    c.skeleton, c.lhs_measure, c.rhs_measure
                ));
                r.record(json!({
                    "record": "wave_rule",
                    "name": &*w.name,
                    "lhs": w.lhs.to_string(),
                    "rhs": w.rhs.to_string(),
                    "skeleton": c.skeleton.to_string(),
                    "lhs_measure": c.lhs_measure.to_string(),
                    "rhs_measure": c.rhs_measure.to_string(),
                }));
            }
            r.record(json!({
                "record": "result",
                "status": "ok",
                "datatypes": th.datatypes.len(),
                "definitions": th.defs.len(),
                "lemmas": th.lemmas.len(),
                "conjectures": th.conjectures.len(),
            }));
            Ok((r, true))
        }
    }
}

fn parse_pair(opts: &TermOpts, a: &str, b: &str) -> Result<(Term, Term), Failure> {
    let mut sig = match &opts.theory {
        Some(p) => load(p)?.signature,
        None => Signature::permissive(),
    };
    Ok((sig.parse_term(a)?, sig.parse_term(b)?))
}

fn count_output(r: &mut Report, n: usize) {
    r.line(format!("{n} result(s)"));
    r.record(json!({"record": "result", "count": n}));
}

/// Replaces the innermost continuation of a chain of lemma nodes.
fn rewrap(outer: &ProofNode, inner: ProofNode) -> ProofNode {
    match &outer.kind {
        NodeKind::LemmaUse { .. } => {
            let mut n = outer.clone();
            let last = n.children.pop().expect("lemma node has a continuation");
            n.children.push(rewrap(&last, inner));
            n
        }
        _ => inner,
    }
}

fn tree_output(r: &mut Report, tree: &ProofNode, trace: bool) {
    r.text.push_str(&tree.render(trace));
    fn go(n: &ProofNode, path: &mut Vec<usize>, trace: bool, out: &mut Vec<Value>) {
        let p = path.iter().map(ToString::to_string).collect::<Vec<_>>().join(".");
        let mut rec = json!({
            "record": "node",
            "path": p,
            "kind": n.kind.label(),
            "goal": n.goal.conclusion.to_string(),
            "hypotheses": n.goal.hypotheses.iter().map(ToString::to_string).collect::<Vec<_>>(),
        });
        match &n.kind {
            NodeKind::Induction(s) => {
                rec["variable"] = json!(&*s.variable);
                rec["datatype"] = json!(&*s.datatype);
            }
            NodeKind::LemmaUse { name, equation, status } => {
                rec["lemma"] = json!(&**name);
                rec["equation"] = json!(equation.to_string());
                rec["status"] = json!(status.to_string());
            }
            NodeKind::Open(reason) => rec["reason"] = json!(reason),
            _ => {}
        }
        if trace {
            let steps: Vec<String> = match &n.kind {
                NodeKind::Simplify(steps) => steps.iter().map(|s| format!("{} {}", s.rule, s.position)).collect(),
                NodeKind::Ripple(t) => t.lines(),
                NodeKind::Fertilize {
                    hypothesis,
                    position,
                    before,
                    after,
                } => vec![format!(
                    "{hypothesis} {position} {} ~> {}",
                    render_goal(before),
                    render_goal(after)
                )],
                _ => Vec::new(),
            };
            rec["steps"] = json!(steps);
        }
        out.push(rec);
        for (i, c) in n.children.iter().enumerate() {
            path.push(i);
            go(c, path, trace, out);
            path.pop();
        }
    }
    go(tree, &mut Vec::new(), trace, &mut r.records);
}

/// Reports the final status; closed trees are replayed independently.
fn result_output(r: &mut Report, tree: &ProofNode, conj: &Equation, th: &Theory) -> Result<bool, Failure> {
    if !tree.is_closed() {
        let open = tree.open_goals().len();
        r.line(format!("open: {open} goal(s) remain"));
        r.record(json!({"record": "result", "status": "open", "open_goals": open}));
        return Ok(false);
    }
    let report = replay_conjecture(tree, conj, th).map_err(|e| Failure(format!("proof does not replay: {e}")))?;
    let mut line = format!("proved: replayed {} nodes", report.nodes);
    if !report.assumed.is_empty() {
        let names: Vec<&str> = report.assumed.iter().map(|n| &**n).collect();
        let _ = write!(line, ", assuming {}", names.join(", "));
    }
    r.line(line);
    r.record(json!({
        "record": "result",
        "status": "proved",
        "replayed_nodes": report.nodes,
        "assumed": report.assumed.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
    }));
    Ok(true)
}

fn critic_output(r: &mut Report, run: &CriticRun) {
    if run.history.is_empty() {
        r.line("critic not needed: first attempt closed");
        r.record(json!({"record": "critic", "needed": false}));
        return;
    }
    r.line("goal sequence:");
    for (i, g) in run.history.iter().enumerate() {
        r.line(format!("  {}. {g}", i + 1));
        r.record(json!({"record": "goal", "index": i + 1, "equation": g.to_string()}));
    }
    match &run.report {
        Some(rep) => {
            r.line(format!("divergence: {rep}"));
            r.record(json!({
                "record": "divergence",
                "context": rep.context().to_string(),
                "position": rep.position().to_string(),
                "goal": rep.chain[0].pair + 2,
                "evidence": rep.evidence(),
            }));
        }
        None => {
            r.line("divergence: none");
            r.record(json!({"record": "divergence", "found": false}));
        }
    }
    r.line("candidates:");
    for (i, c) in run.candidates.iter().enumerate() {
        let mut line = format!("  {}. {} [{}]", i + 1, c.equation, c.status);
        if !c.generalized.is_empty() {
            let g: Vec<String> = c.generalized.iter().map(|(t, v)| format!("{t} -> {v}")).collect();
            let _ = write!(line, " generalizing {}", g.join(", "));
        }
        r.line(line);
        r.record(json!({
            "record": "candidate",
            "rank": i + 1,
            "equation": c.equation.to_string(),
            "status": c.status.to_string(),
            "generalized": c.generalized.iter().map(|(t, v)| json!({"term": t.to_string(), "variable": &**v})).collect::<Vec<_>>(),
        }));
    }
}
