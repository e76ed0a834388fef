//! Batch front end: `motic run` and `motic explain`.

use std::fmt::Write as _;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::algebra::parse_q;
use crate::ck::{self, CkSet};
use crate::constructions as cons;
use crate::correspondence as corr;
use crate::defect::{self, IsogenyCoefficients};
use crate::error::{Error, Result};
use crate::power::{PowerClass, Profile};
use crate::profile::{parse_profile, Loaded};
use crate::text::{class_text, parse_class};

#[derive(Parser, Debug)]
#[command(name = "motic", version, about = "Multiplicativity defects of Chow-Kunneth decompositions in finite models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run tasks against a profile.
    Run(RunArgs),
    /// Print the derivation trace of a single task.
    Explain(ExplainArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Profile file (JSON).
    pub profile: String,
    /// Task, e.g. `defect:2`, `sweep:4`, `omega`; repeatable.
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// Expected verdict, e.g. `defect=0`, `defects=1,2,2`, `mck`; repeatable.
    #[arg(long = "expect")]
    pub expects: Vec<String>,
    /// Projector set: `natural` or `curve:o1,o2`.
    #[arg(long, default_value = "natural")]
    pub ck: String,
    #[arg(long)]
    pub json: bool,
    /// Include derivation traces in the report.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ExplainArgs {
    pub profile: String,
    #[arg(long)]
    pub task: String,
    #[arg(long, default_value = "natural")]
    pub ck: String,
    #[arg(long)]
    pub json: bool,
}

/// A parsed task.
#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    VerifyCk,
    Defect(usize),
    Sweep(usize),
    Gamma(usize, usize),
    Omega,
    Template,
    Multiplicative(usize, i64),
    ModifiedProduct,
    BundleCheck(usize, i64),
    BlowupCheck(usize, i64),
    Isogeny(IsogenyCoefficients),
    Reduce(String),
    Act(Vec<usize>),
}

fn usize_arg(task: &str, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::invalid(format!("task `{task}`: `{s}` is not a nonnegative integer")))
}

fn i64_arg(task: &str, s: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| Error::invalid(format!("task `{task}`: `{s}` is not an integer")))
}

fn pair(task: &str, arg: Option<&str>) -> Result<(usize, i64)> {
    let a = arg.ok_or_else(|| Error::invalid(format!("task `{task}` needs `m,tau`")))?;
    let (m, t) = a.split_once(',').ok_or_else(|| Error::invalid(format!("task `{task}` needs `m,tau`")))?;
    Ok((usize_arg(task, m)?, i64_arg(task, t)?))
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b)),
            None => (s.trim(), None),
        };
        let need = || arg.ok_or_else(|| Error::invalid(format!("task `{name}` needs an argument")));
        Ok(match name {
            "verify-ck" => Task::VerifyCk,
            "defect" => Task::Defect(usize_arg(s, need()?)?),
            "sweep" => Task::Sweep(usize_arg(s, need()?)?),
            "gamma" => {
                let a = need()?;
                match a.split_once(',') {
                    Some((k, m)) => Task::Gamma(usize_arg(s, k)?, usize_arg(s, m)?),
                    None => Task::Gamma(usize_arg(s, a)?, 4),
                }
            }
            "omega" => Task::Omega,
            "template" => Task::Template,
            "multiplicative" => {
                let (m, t) = pair(s, arg)?;
                Task::Multiplicative(m, t)
            }
            "modified-product" => Task::ModifiedProduct,
            "bundle-check" => {
                let (m, t) = pair(s, arg)?;
                Task::BundleCheck(m, t)
            }
            "blowup-check" => {
                let (m, t) = pair(s, arg)?;
                Task::BlowupCheck(m, t)
            }
            "isogeny" => {
                let parts: Vec<&str> = need()?.split(',').collect();
                if parts.len() != 6 {
                    return Err(Error::invalid("isogeny needs a1,a2,b1,b2,d1,d2"));
                }
                let rq = |x: &str| parse_q(x.trim()).ok_or_else(|| Error::invalid(format!("bad rational `{x}`")));
                let ru = |x: &str| x.trim().parse::<u64>().map_err(|_| Error::invalid(format!("bad degree `{x}`")));
                Task::Isogeny(IsogenyCoefficients {
                    a1: rq(parts[0])?,
                    a2: rq(parts[1])?,
                    b1: rq(parts[2])?,
                    b2: rq(parts[3])?,
                    d1: ru(parts[4])?,
                    d2: ru(parts[5])?,
                })
            }
            "reduce" => Task::Reduce(need()?.to_string()),
            "act" => Task::Act(need()?.split(',').map(|x| usize_arg(s, x)).collect::<Result<_>>()?),
            other => return Err(Error::invalid(format!("unknown task `{other}`"))),
        })
    }
}

/// An expected verdict.
#[derive(Clone, Debug, PartialEq)]
pub enum Expect {
    Defect(i64),
    Defects(Vec<i64>),
    Mck,
    Ck(bool),
    Template(bool),
    GammaConsistent,
    Isogeny(bool),
    Bundle(bool),
    Blowup(bool),
    Omega(bool),
}

impl FromStr for Expect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expect> {
        let bad = || Error::invalid(format!("unknown expectation `{s}`"));
        let pass = |v: &str| match v {
            "pass" | "holds" | "true" | "exists" => Ok(true),
            "fail" | "fails" | "false" | "none" => Ok(false),
            _ => Err(bad()),
        };
        if s == "mck" {
            return Ok(Expect::Mck);
        }
        let (k, v) = s.split_once('=').ok_or_else(bad)?;
        Ok(match k {
            "defect" => Expect::Defect(v.parse().map_err(|_| bad())?),
            "defects" => Expect::Defects(v.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?),
            "ck" => Expect::Ck(pass(v)?),
            "template" => Expect::Template(pass(v)?),
            "gamma" if v == "consistent" => Expect::GammaConsistent,
            "isogeny" => Expect::Isogeny(pass(v)?),
            "bundle" => Expect::Bundle(pass(v)?),
            "blowup" => Expect::Blowup(pass(v)?),
            "omega" => Expect::Omega(pass(v)?),
            _ => return Err(bad()),
        })
    }
}

/// Result of one task: a JSON value, human lines, and facts for expectations.
#[derive(Clone, Debug, Default)]
pub struct TaskOutcome {
    pub task: String,
    pub value: Value,
    pub lines: Vec<String>,
    pub trace: Vec<String>,
    /// A built-in check that failed (exit 2 without any --expect).
    pub failed_check: bool,
    pub defect: Option<Option<i64>>,
    pub defects: Option<Vec<Option<i64>>>,
    pub ck_pass: Option<bool>,
    pub template: Option<bool>,
    pub gamma_consistent: Option<bool>,
    pub isogeny: Option<bool>,
    pub bundle: Option<bool>,
    pub blowup: Option<bool>,
    pub omega: Option<bool>,
}

pub struct Job {
    pub loaded: Loaded,
    pub ck: CkSet,
}

/// Term cap from MOTIC_MAX_TERMS, if set.
pub fn max_terms_from_env() -> Result<Option<usize>> {
    match std::env::var("MOTIC_MAX_TERMS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::invalid(format!("MOTIC_MAX_TERMS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn cap(p: &mut Profile, n: Option<usize>) {
    if let Some(n) = n {
        p.max_terms = n;
    }
}

pub fn build_ck(p: &Profile, spec: &str) -> Result<CkSet> {
    if spec == "natural" {
        return ck::natural_projectors(p);
    }
    if let Some(rest) = spec.strip_prefix("curve:") {
        let (a, b) = rest.split_once(',').ok_or_else(|| Error::invalid("curve projectors are `curve:o1,o2`"))?;
        return ck::curve_projectors(p, a.trim(), b.trim());
    }
    Err(Error::invalid(format!("unknown projector set `{spec}`")))
}

pub fn load_job(src: &[u8], ck_spec: &str, max_terms: Option<usize>) -> Result<Job> {
    let mut loaded = parse_profile(src)?;
    match &mut loaded {
        Loaded::Profile(p) => cap(p, max_terms),
        Loaded::Bundle { profile, base, .. } => {
            if let Some(p) = profile {
                cap(p, max_terms);
            }
            cap(base, max_terms);
        }
        Loaded::Blowup { x, y, .. } => {
            cap(x, max_terms);
            cap(y, max_terms);
        }
    }
    let ck = build_ck(loaded.profile(), ck_spec)?;
    Ok(Job { loaded, ck })
}

fn dtext(d: Option<i64>) -> String {
    d.map(|x| x.to_string()).unwrap_or_else(|| "undefined".into())
}

fn explain_sweep(p: &Profile, ck: &CkSet, z: &PowerClass, tuple: &[usize], out: &mut Vec<String>) -> Result<PowerClass> {
    out.push(format!("start: {}", class_text(p, z)));
    let mut cls = p.apply_relations(z)?;
    if cls != *z {
        out.push(format!("normalize: {}", class_text(p, &cls)));
    }
    for (slot, i) in tuple.iter().enumerate() {
        let raw = corr::act_slot_with(p, &ck.projectors[*i], &cls, slot, false)?;
        out.push(format!("pi_{i} on factor {}: {}", slot + 1, class_text(p, &raw)));
        cls = p.apply_relations(&raw)?;
        if cls != raw {
            out.push(format!("  normal form: {}", class_text(p, &cls)));
        }
    }
    Ok(cls)
}

fn explain_reduce(p: &Profile, z: &PowerClass, out: &mut Vec<String>) -> Result<PowerClass> {
    let mut cur = z.clone();
    out.push(format!("start: {}", class_text(p, &cur)));
    let mut steps = 0usize;
    while let Some((next, label)) = p.rewrite_step(&cur, false)? {
        steps += 1;
        if steps > 10_000 {
            return Err(Error::Resource("rewrite trace longer than 10000 steps".into()));
        }
        out.push(format!("{label}: {}", class_text(p, &next)));
        cur = next;
    }
    Ok(cur)
}

pub fn run_task(job: &Job, task: &Task, label: &str, trace: bool) -> Result<TaskOutcome> {
    let p = job.loaded.profile();
    let ck = &job.ck;
    let mut o = TaskOutcome { task: label.to_string(), ..Default::default() };
    match task {
        Task::VerifyCk => {
            let rep = ck::verify_ck(p, ck)?;
            let dual = ck::check_self_duality(p, ck)?;
            o.ck_pass = Some(rep.passed());
            o.failed_check = !rep.passed();
            let mut v = rep.to_json();
            v["self_dual_failures"] = json!(dual);
            v["projectors"] = ck.to_json(p);
            o.value = v;
            o.lines.push(format!("projector set {}: {}", ck.label, if rep.passed() { "pass" } else { "FAIL" }));
            for f in rep.failures() {
                o.lines.push(format!("  {f}"));
            }
            o.lines.push(format!("  self-dual failures: {dual:?}"));
            o.lines.push(format!("  {}", rep.note));
        }
        Task::Defect(m) => {
            let rep = defect::graded_pieces(p, ck, *m)?;
            o.defect = Some(rep.defect);
            o.value = rep.to_json(p);
            o.lines.push(format!("m = {m}: defect {}", dtext(rep.defect)));
            for (s, c) in &rep.pieces {
                o.lines.push(format!("  s = {s}: {}", class_text(p, c)));
            }
            if !rep.violations.is_empty() {
                o.lines.push(format!("  negative grades present: {:?}", rep.violations));
            }
            if trace {
                let n = p.n();
                for (s, c) in &rep.pieces {
                    o.trace.push(format!("s = {s}: index tuples summing to {}, {} terms", 2 * m * n - *s as usize, c.len()));
                }
            }
        }
        Task::Sweep(mm) => {
            let rep = defect::stable_defect_sweep(p, ck, *mm)?;
            o.defects = Some(rep.defects());
            o.value = rep.to_json();
            o.lines.push(format!(
                "defects m = 2..{mm}: ({})",
                rep.defects().iter().map(|d| dtext(*d)).collect::<Vec<_>>().join(", ")
            ));
            o.lines.push(format!("running max: {}; stabilized: {}", dtext(rep.max()), rep.stabilized));
        }
        Task::Gamma(k, m) => {
            let rep = defect::gamma_vanishing_report(p, ck, *k, *m)?;
            o.gamma_consistent = Some(rep.consistent());
            o.failed_check = !rep.consistent();
            o.value = rep.to_json();
            for r in &rep.rows {
                o.lines.push(format!(
                    "Gamma^{}: {}{}",
                    r.k,
                    if r.vanishes { "0" } else { "nonzero" },
                    if r.predicted_vanishing { " (predicted 0)" } else { "" }
                ));
            }
            o.lines.push(format!("consistent: {}", rep.consistent()));
            if !rep.note.is_empty() {
                o.lines.push(rep.note.clone());
            }
        }
        Task::Omega => {
            let rep = defect::omega_check(p, ck)?;
            o.omega = Some(rep.holds);
            o.value = rep.to_json(p);
            o.lines.push(format!("Omega decomposition holds: {}", rep.holds));
            o.lines.push(format!("  Omega = {}", class_text(p, &rep.omega)));
            o.lines.push(format!("  residual = {}", class_text(p, &rep.residual)));
        }
        Task::Template => {
            let t = defect::solve_small_diagonal_template(p)?;
            o.template = Some(t.is_some());
            o.value = match &t {
                Some(t) => json!({"exists": true, "solution": t.to_json()}),
                None => json!({"exists": false}),
            };
            o.lines.push(format!("template solution: {}", if t.is_some() { "exists" } else { "none" }));
            if let Some(t) = t {
                o.lines.push(format!("  {}", t.to_json()));
            }
        }
        Task::Multiplicative(m, tau) => {
            let b = defect::transposed_buckets(p, ck, *m)?;
            let holds = b.keys().all(|s| *s >= 0 && *s <= *tau);
            o.value = json!({"m": m, "tau": tau, "holds": holds, "keys": b.keys().collect::<Vec<_>>()});
            o.lines.push(format!("{m}-fold {tau}-multiplicative: {holds}"));
        }
        Task::ModifiedProduct => {
            let mp = defect::modified_product(p, ck)?;
            o.failed_check = !mp.graded_holds;
            o.value = json!({"class": class_text(p, &mp.class.class), "graded_holds": mp.graded_holds});
            o.lines.push(format!("modified product: {}", class_text(p, &mp.class.class)));
            o.lines.push(format!("  graded: {}", mp.graded_holds));
        }
        Task::BundleCheck(m, tau) => {
            let Loaded::Bundle { base, chern, .. } = &job.loaded else {
                return Err(Error::invalid("bundle-check needs a bundle profile"));
            };
            let ck_base = build_ck(base, "natural")?;
            let rep = cons::bundle_defect_check(base, chern, &ck_base, *m, *tau)?;
            o.bundle = Some(rep.passed());
            o.value = rep.to_json();
            o.lines.push(format!("base {}-fold {tau}: {}", m + 1, rep.base_ok));
            o.lines.push(format!("chern classes in grade 0: {}", rep.chern.holds()));
            match rep.bundle_ok {
                Some(b) => o.lines.push(format!("bundle pieces within [0, {tau}]: {b}")),
                None => o.lines.push(format!("bundle not modeled: {}", rep.unavailable.clone().unwrap_or_default())),
            }
            o.lines.push(format!("passed: {}", rep.passed()));
        }
        Task::BlowupCheck(m, tau) => {
            let Loaded::Blowup { x, y, normal_chern, grade0_assertion } = &job.loaded else {
                return Err(Error::invalid("blowup-check needs a blow-up profile"));
            };
            let ck_y = build_ck(y, "natural")?;
            let rep = cons::blowup_defect_report(x, ck, y, &ck_y, normal_chern, *grade0_assertion, *m, *tau)?;
            o.blowup = Some(rep.hypotheses_hold());
            o.value = rep.to_json();
            o.lines.push(format!("X {m}-fold {tau}: {}", rep.x_ok));
            o.lines.push(format!("Y {}-fold {tau}: {}", m + 1, rep.y_ok));
            o.lines.push(format!("normal Chern classes in grade 0: {}", rep.normal.holds()));
            o.lines.push(format!("grade 0 assertion (user supplied): {}", rep.grade0_assertion));
            for s in &rep.skeleton {
                o.lines.push(format!("  {s}"));
            }
        }
        Task::Isogeny(c) => {
            let r = defect::isogeny_consistency(c)?;
            o.isogeny = Some(r.holds);
            o.value = json!({"holds": r.holds, "c": r.c_value.to_string(), "alt": r.alt_value.to_string(), "agree": r.agree});
            o.lines.push(format!("relation holds: {}; c = {}; alternative = {}", r.holds, r.c_value, r.alt_value));
        }
        Task::Reduce(text) => {
            let z = parse_class(p, text.as_bytes(), None)?;
            let mut steps = Vec::new();
            let nf = explain_reduce(p, &z, &mut steps)?;
            if trace {
                o.trace = steps;
            }
            o.value = json!({"input": text, "normal_form": class_text(p, &nf)});
            o.lines.push(class_text(p, &nf));
        }
        Task::Act(tuple) => {
            if tuple.len() < 2 {
                return Err(Error::invalid("act needs at least two indices"));
            }
            if let Some(i) = tuple.iter().find(|i| **i >= ck.projectors.len()) {
                return Err(Error::invalid(format!("no projector pi_{i}")));
            }
            let d = p.small_diagonal(tuple.len())?;
            let mut steps = Vec::new();
            let cls = explain_sweep(p, ck, &d, tuple, &mut steps)?;
            if trace {
                o.trace = steps;
            }
            o.value = json!({"tuple": tuple, "class": class_text(p, &cls)});
            o.lines.push(class_text(p, &cls));
        }
    }
    Ok(o)
}

#[derive(Debug)]
pub struct RunOutput {
    pub text: String,
    pub code: i32,
}

fn check_expect(e: &Expect, outs: &[TaskOutcome]) -> Option<bool> {
    let all = |f: &dyn Fn(&TaskOutcome) -> Option<bool>| -> Option<bool> {
        let v: Vec<bool> = outs.iter().filter_map(f).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().all(|x| *x))
        }
    };
    match e {
        Expect::Defect(d) => all(&|o| o.defect.map(|x| x == Some(*d))),
        Expect::Defects(ds) => all(&|o| {
            o.defects.as_ref().map(|v| v.len() == ds.len() && v.iter().zip(ds).all(|(a, b)| *a == Some(*b)))
        }),
        Expect::Mck => {
            let d = all(&|o| o.defect.map(|x| x == Some(0)));
            let om = all(&|o| o.omega);
            match (d, om) {
                (None, None) => None,
                (a, b) => Some(a.unwrap_or(true) && b.unwrap_or(true)),
            }
        }
        Expect::Ck(b) => all(&|o| o.ck_pass.map(|x| x == *b)),
        Expect::Template(b) => all(&|o| o.template.map(|x| x == *b)),
        Expect::GammaConsistent => all(&|o| o.gamma_consistent),
        Expect::Isogeny(b) => all(&|o| o.isogeny.map(|x| x == *b)),
        Expect::Bundle(b) => all(&|o| o.bundle.map(|x| x == *b)),
        Expect::Blowup(b) => all(&|o| o.blowup.map(|x| x == *b)),
        Expect::Omega(b) => all(&|o| o.omega.map(|x| x == *b)),
    }
}

/// Tasks implied by expectations when none are given.
fn default_tasks(expects: &[Expect]) -> Vec<String> {
    let mut t = Vec::new();
    for e in expects {
        let add = match e {
            Expect::Defect(_) => "defect:2",
            Expect::Defects(v) => {
                t.push(format!("sweep:{}", v.len() + 1));
                continue;
            }
            Expect::Mck => {
                t.push("defect:2".to_string());
                "omega"
            }
            Expect::Ck(_) => "verify-ck",
            Expect::Template(_) => "template",
            Expect::GammaConsistent => "gamma:5",
            Expect::Omega(_) => "omega",
            _ => continue,
        };
        t.push(add.to_string());
    }
    if t.is_empty() {
        t.push("verify-ck".into());
    }
    t.dedup();
    t
}

/// Runs a job from already-read profile bytes; every error becomes an exit code.
pub fn run_bytes(src: &[u8], args: &RunArgs, max_terms: Option<usize>) -> RunOutput {
    match run_inner(src, args, max_terms) {
        Ok(o) => o,
        Err(e) => {
            let text = if args.json {
                format!("{}\n", serde_json::to_string_pretty(&json!({"error": e.to_string(), "exit": e.exit_code()})).unwrap())
            } else {
                format!("error: {e}\n")
            };
            RunOutput { text, code: e.exit_code() }
        }
    }
}

fn run_inner(src: &[u8], args: &RunArgs, max_terms: Option<usize>) -> Result<RunOutput> {
    let expects: Vec<Expect> = args.expects.iter().map(|e| e.parse()).collect::<Result<_>>()?;
    let labels: Vec<String> = if args.tasks.is_empty() { default_tasks(&expects) } else { args.tasks.clone() };
    let tasks: Vec<Task> = labels.iter().map(|t| t.parse()).collect::<Result<_>>()?;
    let job = load_job(src, &args.ck, max_terms)?;
    // tasks run concurrently; the report keeps declaration order
    let results: Vec<Result<TaskOutcome>> = std::thread::scope(|sc| {
        let handles: Vec<_> = tasks
            .iter()
            .zip(&labels)
            .map(|(t, l)| {
                let job = &job;
                sc.spawn(move || run_task(job, t, l, args.trace))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::invalid("task panicked")))).collect()
    });
    let mut outs = Vec::new();
    for r in results {
        outs.push(r?);
    }
    let mut code = 0;
    if outs.iter().any(|o| o.failed_check) {
        code = 2;
    }
    let mut verdicts = Vec::new();
    for (raw, e) in args.expects.iter().zip(&expects) {
        let v = check_expect(e, &outs);
        if v != Some(true) {
            code = 2;
        }
        verdicts.push((raw.clone(), v));
    }
    let p = job.loaded.profile();
    let text = if args.json {
        let mut root = Map::new();
        root.insert("profile".into(), json!(p.name));
        root.insert("ck".into(), json!(job.ck.label));
        root.insert(
            "tasks".into(),
            Value::Array(
                outs.iter()
                    .map(|o| {
                        let mut m = Map::new();
                        m.insert("task".into(), json!(o.task));
                        m.insert("result".into(), o.value.clone());
                        if args.trace && !o.trace.is_empty() {
                            m.insert("trace".into(), json!(o.trace));
                        }
                        Value::Object(m)
                    })
                    .collect(),
            ),
        );
        root.insert(
            "expectations".into(),
            Value::Array(
                verdicts
                    .iter()
                    .map(|(e, v)| json!({"expect": e, "met": v.unwrap_or(false), "evaluated": v.is_some()}))
                    .collect(),
            ),
        );
        root.insert("exit".into(), json!(code));
        format!("{}\n", serde_json::to_string_pretty(&Value::Object(root)).unwrap())
    } else {
        let mut s = String::new();
        let _ = writeln!(s, "profile {} (n = {}), projectors {}", p.name, p.n(), job.ck.label);
        for o in &outs {
            let _ = writeln!(s, "== {} ==", o.task);
            for l in &o.lines {
                let _ = writeln!(s, "{l}");
            }
            if args.trace {
                for l in &o.trace {
                    let _ = writeln!(s, "  | {l}");
                }
            }
        }
        for (e, v) in &verdicts {
            let word = match v {
                Some(true) => "met",
                Some(false) => "NOT met",
                None => "not evaluated (no matching task)",
            };
            let _ = writeln!(s, "expect {e}: {word}");
        }
        s
    };
    Ok(RunOutput { text, code })
}

/// Derivation trace of one task.
pub fn explain_bytes(src: &[u8], args: &ExplainArgs, max_terms: Option<usize>) -> RunOutput {
    let inner = || -> Result<RunOutput> {
        let task: Task = args.task.parse()?;
        let job = load_job(src, &args.ck, max_terms)?;
        let p = job.loaded.profile();
        let mut steps = Vec::new();
        match &task {
            Task::Reduce(t) => {
                let z = parse_class(p, t.as_bytes(), None)?;
                explain_reduce(p, &z, &mut steps)?;
            }
            Task::Act(tuple) => {
                if let Some(i) = tuple.iter().find(|i| **i >= job.ck.projectors.len()) {
                    return Err(Error::invalid(format!("no projector pi_{i}")));
                }
                let d = p.small_diagonal(tuple.len())?;
                explain_sweep(p, &job.ck, &d, tuple, &mut steps)?;
            }
            _ => {
                let o = run_task(&job, &task, &args.task, true)?;
                steps.extend(o.lines);
                steps.extend(o.trace);
            }
        }
        let text = if args.json {
            format!("{}\n", serde_json::to_string_pretty(&json!({"task": args.task, "steps": steps})).unwrap())
        } else {
            steps.iter().enumerate().map(|(i, s)| format!("{i:>3}. {s}\n")).collect()
        };
        Ok(RunOutput { text, code: 0 })
    };
    match inner() {
        Ok(o) => o,
        Err(e) => RunOutput { text: format!("error: {e}\n"), code: e.exit_code() },
    }
}

/// A parsed JSON report: task names with their results.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub profile: String,
    pub ck: String,
    pub tasks: Vec<(String, Value)>,
    pub exit: i64,
}

impl Report {
    pub fn parse(data: &[u8]) -> Result<Report> {
        let v: Value = serde_json::from_slice(data).map_err(|e| Error::Parse { pos: e.column(), msg: e.to_string() })?;
        let obj = v.as_object().ok_or_else(|| Error::invalid("report must be an object"))?;
        let s = |k: &str| -> Result<String> {
            obj.get(k).and_then(|x| x.as_str()).map(String::from).ok_or_else(|| Error::invalid(format!("report lacks `{k}`")))
        };
        let tasks = obj
            .get("tasks")
            .and_then(|t| t.as_array())
            .ok_or_else(|| Error::invalid("report lacks `tasks`"))?
            .iter()
            .map(|t| {
                let name = t.get("task").and_then(|x| x.as_str()).ok_or_else(|| Error::invalid("task without a name"))?;
                let res = t.get("result").cloned().ok_or_else(|| Error::invalid("task without a result"))?;
                Ok((name.to_string(), res))
            })
            .collect::<Result<Vec<_>>>()?;
        let exit = obj.get("exit").and_then(|x| x.as_i64()).ok_or_else(|| Error::invalid("report lacks `exit`"))?;
        Ok(Report { profile: s("profile")?, ck: s("ck")?, tasks, exit })
    }

    /// Cycle text of every graded piece in the report, keyed by task and grade.
    pub fn pieces(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (t, v) in &self.tasks {
            if let Some(m) = v.get("pieces").and_then(|x| x.as_object()) {
                for (s, c) in m {
                    if let Some(c) = c.as_str() {
                        out.push((t.clone(), s.clone(), c.to_string()));
                    }
                }
            }
        }
        out
    }
}
