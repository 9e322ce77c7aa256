//! One function per subcommand. Each returns what to print on standard
//! output; artifacts go to the run directory.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use harness_evo_core::inner::{
    resume_inner_loop_with, run_inner_loop_with, InnerError, InnerObserver,
};
use harness_evo_core::meta::{meta_header, run_meta_loop, InnerRunRecord, MetaObserver};
use harness_evo_core::metrics::{
    check_split, report_from_histories, run_test_tasks, MetaTestReport,
};
use harness_evo_core::model::canonical::{self, to_canonical};
use harness_evo_core::protocol::conformance::{run_conformance, ALL_ROLES};
use harness_evo_core::protocol::serve::{serve, ServedAgent};
use harness_evo_core::protocol::{meta_agent_from_binding, AgentSet, MetaEvolution};
use harness_evo_core::runlog::{entry_line, render, write_line, RunHeader, RunLog};
use harness_evo_core::simkit::{
    brute_force_oracle, templates, BuiltinEvolution, BuiltinMetaEvolution, Fallback, HarnessSpace,
    MetaSpace, MetaStrategy, SimEvaluator, SimWorker,
};
use harness_evo_core::{
    digest, AgentBinding, Blueprint, BlueprintDocument, ExternalCommand, HistoryEntry, MetaError,
    MetaHistoryEntry, Provenance, Role, Score, StrategyKind, Strictness, Task, Verdict,
};

use crate::args::{ConformanceArgs, MetaArgs, OracleArgs, ServeArgs, TemplateArgs};
use crate::config::{
    load_blueprint, load_meta_space, load_space, load_task, load_tasks, RunConfig,
};
use crate::error::{CliError, ExitCode};
use crate::rundir::{write_file, RunDir};

pub const RUN_LOG: &str = "run.log";
pub const RESULT_FILE: &str = "result.json";
pub const META_LOG: &str = "meta.log";
pub const BEST_BLUEPRINT_FILE: &str = "best_blueprint.json";
pub const REPORT_FILE: &str = "report.json";
pub const ORACLE_FILE: &str = "oracle.json";

/// Template K when `-K` is not given.
pub const DEFAULT_TEMPLATE_K: u32 = 20;

#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub exit: ExitCode,
    pub run_dir: Option<PathBuf>,
}

impl Outcome {
    fn ok(stdout: String, run_dir: Option<PathBuf>) -> Self {
        Outcome {
            stdout,
            exit: ExitCode::Success,
            run_dir,
        }
    }
}

fn doc<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = to_canonical(value);
    s.push('\n');
    s
}

fn violations(what: &str, v: &[harness_evo_core::Violation]) -> CliError {
    CliError::config(format!(
        "{what}: {}",
        v.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    ))
}

fn require<'a>(value: &'a Option<String>, flag: &str) -> Result<&'a str, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::config(format!("{flag} is required")))
}

fn require_blueprint(cfg: &RunConfig) -> Result<(Blueprint, Option<BlueprintDocument>), CliError> {
    let path = cfg
        .blueprint
        .as_deref()
        .ok_or_else(|| CliError::config("--blueprint is required"))?;
    load_blueprint(path)
}

fn check_task(task: &Task, bp: &Blueprint) -> Result<(), CliError> {
    task.validate(bp.evaluator_config.binding.is_builtin())
        .map_err(|v| violations(&format!("task {}", task.id), &v))
}

fn verdict_counts(history: &[HistoryEntry]) -> (usize, usize) {
    let improved = history
        .iter()
        .filter(|e| e.verdict == Verdict::Improved)
        .count();
    (improved, history.len() - improved)
}

fn score_text(score: Option<&Score>) -> String {
    match score {
        None => "MIN_SCORE".into(),
        Some(s) => to_canonical(s),
    }
}

/// Appends each new history entry to the run log as it is produced.
struct LogWriter {
    file: File,
    path: PathBuf,
}

impl InnerObserver for LogWriter {
    fn on_entry(&mut self, entry: &HistoryEntry) -> Result<(), InnerError> {
        write_line(&mut self.file, &entry_line(entry))
            .map_err(|e| InnerError::Observer(format!("{}: {e}", self.path.display())))
    }
}

pub fn cmd_inner(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let task = load_task(require(&cfg.task, "--task")?)?;
    let (mut bp, _) = require_blueprint(cfg)?;
    if let Some(k) = cfg.k {
        bp.loop_config.k = k;
    }
    bp.validate().map_err(|v| violations("blueprint", &v))?;
    check_task(&task, &bp)?;

    let run_digest = digest(&json!({ "blueprint": bp, "task": task }));
    let dir = RunDir::open(&cfg.out, "inner", &run_digest, cfg.seed)?;
    dir.begin()?;
    let log_path = dir.join(RUN_LOG);
    let header = RunHeader::new(&task.id, &bp, cfg.seed);
    let mut agents = AgentSet::from_blueprint(&bp).map_err(InnerError::Setup)?;

    let result = if cfg.resume && log_path.exists() {
        let text = fs::read_to_string(&log_path).map_err(|e| CliError::io(&log_path, e))?;
        let log = RunLog::parse(&text).map_err(|e| {
            CliError::new(ExitCode::ResumeMismatch, "resume_mismatch", e.to_string())
        })?;
        let file = OpenOptions::new()
            .write(true)
            .open(&log_path)
            .map_err(|e| CliError::io(&log_path, e))?;
        file.set_len(log.valid_len as u64)
            .map_err(|e| CliError::io(&log_path, e))?;
        let mut file = OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(|e| CliError::io(&log_path, e))?;
        if log.header.is_none() {
            write_line(&mut file, &to_canonical(&header))
                .map_err(|e| CliError::io(&log_path, e))?;
        }
        log::info!(
            "resuming {} after {} logged iterations",
            log_path.display(),
            log.lines.len()
        );
        let mut writer = LogWriter {
            file,
            path: log_path.clone(),
        };
        resume_inner_loop_with(&log, &bp, &task, cfg.seed, &mut agents, &mut writer)?
    } else {
        let mut file = File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
        write_line(&mut file, &to_canonical(&header)).map_err(|e| CliError::io(&log_path, e))?;
        let mut writer = LogWriter {
            file,
            path: log_path.clone(),
        };
        run_inner_loop_with(&task, &bp, cfg.seed, &mut agents, &mut writer)?
    };

    dir.write(RESULT_FILE, &doc(&result))?;
    dir.finish()?;
    let (improved, regressed) = verdict_counts(&result.history);
    let stdout = format!(
        "task={} iterations={} best_score={} improved={} regressed={} stopped_early={} dir={}\n",
        task.id,
        result.history.len(),
        score_text(result.best_score.as_ref()),
        improved,
        regressed,
        result.stopped_early,
        dir.path().display()
    );
    Ok(Outcome::ok(stdout, Some(dir.path().to_path_buf())))
}

/// Writes per-task inner logs and appends meta log lines as rounds end.
struct MetaWriter<'a> {
    dir: &'a RunDir,
    meta_log: BufWriter<File>,
}

impl MetaObserver for MetaWriter<'_> {
    fn on_inner_run(&mut self, record: &InnerRunRecord<'_>) -> Result<(), MetaError> {
        self.dir
            .write(&record.result.history_path, record.log_text)
            .map_err(|e| MetaError::Observer(e.to_string()))
    }

    fn on_round(&mut self, entry: &MetaHistoryEntry) -> Result<(), MetaError> {
        write_line(&mut self.meta_log, &to_canonical(entry))
            .map_err(|e| MetaError::Observer(e.to_string()))
    }
}

pub fn cmd_meta(cfg: &RunConfig, args: &MetaArgs) -> Result<Outcome, CliError> {
    let tasks = load_tasks(require(&cfg.tasks, "--tasks")?)?;
    let rounds = cfg.j.ok_or_else(|| CliError::config("-J is required"))?;
    let agent_command = args.meta_agent.clone().or_else(|| cfg.meta_agent.clone());

    let (binding, space) = match agent_command {
        Some(command) => {
            let cmd = ExternalCommand {
                command,
                args: args.meta_agent_args.clone(),
                timeout_ms: harness_evo_core::model::blueprint::DEFAULT_TIMEOUT_MS,
            };
            (AgentBinding::external(Role::MetaEvolution, cmd), None)
        }
        None => {
            let name = args
                .meta_strategy
                .clone()
                .or_else(|| cfg.meta_strategy.clone())
                .unwrap_or_else(|| "hill_climb".into());
            if MetaStrategy::from_name(&name).is_none() {
                return Err(CliError::config(format!("unknown meta strategy {name:?}")));
            }
            let spec = args
                .meta_space
                .clone()
                .or_else(|| cfg.meta_space.clone())
                .unwrap_or_else(|| "reference".into());
            (
                AgentBinding::builtin(Role::MetaEvolution, &name),
                Some(load_meta_space(&spec)?),
            )
        }
    };

    let mut bp0 = match (&cfg.blueprint, &space) {
        (Some(path), _) => load_blueprint(path)?.0,
        (None, Some(space)) => space.blueprint_at(0),
        (None, None) => {
            return Err(CliError::config(
                "--blueprint is required with an external meta agent",
            ))
        }
    };
    if let Some(k) = cfg.k {
        bp0.loop_config.k = k;
    }
    bp0.validate().map_err(|v| violations("blueprint", &v))?;
    let mut ids = std::collections::BTreeSet::new();
    for t in &tasks {
        if !ids.insert(t.id.as_str()) {
            return Err(CliError::config(format!("duplicate task id {:?}", t.id)));
        }
        check_task(t, &bp0)?;
    }

    let run_digest = digest(&json!({
        "blueprint0": bp0,
        "tasks": tasks,
        "J": rounds,
        "meta_agent": binding,
        "meta_space": space,
    }));
    let dir = RunDir::open(&cfg.out, "meta", &run_digest, cfg.seed)?;
    dir.begin()?;
    let rounds_dir = dir.join("rounds");
    if rounds_dir.exists() {
        fs::remove_dir_all(&rounds_dir).map_err(|e| CliError::io(&rounds_dir, e))?;
    }
    let log_path = dir.join(META_LOG);
    let file = File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let mut meta_log = BufWriter::new(file);
    write_line(
        &mut meta_log,
        &to_canonical(&meta_header(&tasks, &bp0, cfg.seed, rounds)),
    )
    .map_err(|e| CliError::io(&log_path, e))?;

    let mut agent: Box<dyn MetaEvolution> = meta_agent_from_binding(&binding, space.as_ref())?;
    let options = harness_evo_core::MetaOptions {
        parallelism: cfg.parallelism,
    };
    let mut writer = MetaWriter {
        dir: &dir,
        meta_log,
    };
    let result = run_meta_loop(
        &tasks,
        agent.as_mut(),
        &bp0,
        rounds,
        cfg.seed,
        options,
        &mut writer,
    )?;
    writer
        .meta_log
        .flush()
        .map_err(|e| CliError::io(&log_path, e))?;

    let document = BlueprintDocument {
        provenance: Provenance {
            train_task_ids: tasks.iter().map(|t| t.id.clone()).collect(),
            seed: cfg.seed,
            rounds,
            best_meta_score: result.best_meta_score,
        },
        blueprint: result.best_blueprint.clone(),
    };
    dir.write(BEST_BLUEPRINT_FILE, &doc(&document))?;
    dir.write(RESULT_FILE, &doc(&result))?;
    dir.finish()?;
    let best_round = result
        .meta_history
        .iter()
        .find(|e| e.blueprint == result.best_blueprint)
        .map_or(0, |e| e.round);
    let stdout = format!(
        "tasks={} rounds={} best_meta_score={} best_round={} stopped_early={} dir={}\n",
        tasks.len(),
        result.meta_history.len(),
        result.best_meta_score,
        best_round,
        result.stopped_early,
        dir.path().display()
    );
    Ok(Outcome::ok(stdout, Some(dir.path().to_path_buf())))
}

pub fn report_log_path(task_id: &str) -> String {
    format!("logs/{task_id}.log")
}

pub fn series_path(task_id: &str) -> String {
    format!("series/{task_id}.txt")
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (mut bp, document) = require_blueprint(cfg)?;
    let tasks = load_tasks(require(&cfg.tasks, "--tasks")?)?;
    let threshold = cfg.threshold()?;
    let k = cfg.k.unwrap_or(bp.loop_config.k);
    bp.loop_config.k = k;
    bp.validate().map_err(|v| violations("blueprint", &v))?;
    for t in &tasks {
        check_task(t, &bp)?;
    }
    let train_ids: Vec<String> = document
        .map(|d| d.provenance.train_task_ids)
        .unwrap_or_default();
    check_split(&train_ids, &tasks)?;

    let run_digest = digest(&json!({
        "blueprint": bp,
        "tasks": tasks,
        "threshold": threshold,
        "train_task_ids": train_ids,
    }));
    let dir = RunDir::open(&cfg.out, "report", &run_digest, cfg.seed)?;
    dir.begin()?;
    for sub in ["logs", "series"] {
        let p = dir.join(sub);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    for (task, task_seed, result) in run_test_tasks(&bp, &tasks, k, cfg.seed)? {
        let text = render(&RunHeader::new(&task.id, &bp, task_seed), &result.history);
        dir.write(&report_log_path(&task.id), &text)?;
    }
    let report = report_from_logs(dir.path(), &bp, &train_ids, &tasks, k, cfg.seed, threshold)?;
    dir.write(REPORT_FILE, &doc(&report))?;
    for record in &report.per_task {
        dir.write(
            &series_path(&record.task_id),
            &MetaTestReport::series_text(record),
        )?;
    }
    dir.finish()?;
    let mean = report
        .metrics
        .mean_convergence_speed
        .map_or("NOT_REACHED".to_string(), |m| m.to_string());
    let stdout = format!(
        "tasks={} mean_convergence_speed={} final_performance={} not_reached={} dir={}\n",
        tasks.len(),
        mean,
        report.metrics.final_performance,
        report.metrics.robustness.not_reached_count,
        dir.path().display()
    );
    Ok(Outcome::ok(stdout, Some(dir.path().to_path_buf())))
}

/// Builds the report from the logs on disk only.
pub fn report_from_logs(
    dir: &Path,
    bp: &Blueprint,
    train_ids: &[String],
    tasks: &[Task],
    k: u32,
    seed: u64,
    threshold: harness_evo_core::Rational,
) -> Result<MetaTestReport, CliError> {
    let mut histories = Vec::with_capacity(tasks.len());
    for task in tasks {
        let path = dir.join(report_log_path(&task.id));
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let entries = RunLog::parse(&text)
            .and_then(|log| log.entries())
            .map_err(|e| {
                CliError::new(
                    ExitCode::Io,
                    "log_invalid",
                    format!("{}: {e}", path.display()),
                )
            })?;
        histories.push((task.id.clone(), entries));
    }
    Ok(report_from_histories(
        bp, train_ids, &histories, k, seed, threshold,
    )?)
}

#[derive(Serialize)]
struct OracleEntry<'a> {
    task_id: &'a str,
    index: usize,
    harness: &'a harness_evo_core::Harness,
    score: &'a Score,
}

#[derive(Serialize)]
struct OracleDocument<'a> {
    space: &'a str,
    space_size: usize,
    strictness: Strictness,
    results: Vec<OracleEntry<'a>>,
}

pub fn cmd_oracle(cfg: &RunConfig, args: &OracleArgs) -> Result<Outcome, CliError> {
    let tasks = match (&cfg.task, &cfg.tasks) {
        (Some(t), None) => vec![load_task(t)?],
        (None, Some(ts)) => load_tasks(ts)?,
        (None, None) => return Err(CliError::config("--task or --tasks is required")),
        (Some(_), Some(_)) => return Err(CliError::config("give only one of --task and --tasks")),
    };
    let spec = args
        .space
        .clone()
        .or_else(|| cfg.space.clone())
        .unwrap_or_else(|| "core3".into());
    let space = load_space(&spec)?;
    let (template, strictness) = match &cfg.blueprint {
        Some(path) => {
            let (bp, _) = load_blueprint(path)?;
            (bp.initial_harness, bp.evaluator_config.strictness)
        }
        None => (templates::minimal_harness(), Strictness::Full),
    };
    for t in &tasks {
        t.validate(true)
            .map_err(|v| violations(&format!("task {}", t.id), &v))?;
    }
    let space_source = match HarnessSpace::by_name(&spec) {
        Some(_) => spec.clone(),
        None => fs::read_to_string(&spec).unwrap_or_default(),
    };
    let run_digest = digest(&json!({
        "space": space_source,
        "tasks": tasks,
        "template": template,
        "strictness": strictness,
    }));
    let dir = RunDir::open(&cfg.out, "oracle", &run_digest, cfg.seed)?;
    dir.begin()?;
    let mut found = Vec::with_capacity(tasks.len());
    for t in &tasks {
        let r = brute_force_oracle(t, &space, &template, strictness)
            .map_err(harness_evo_core::AgentError::from)?;
        found.push(r);
    }
    let document = OracleDocument {
        space: space.name(),
        space_size: space.size(),
        strictness,
        results: tasks
            .iter()
            .zip(&found)
            .map(|(t, r)| OracleEntry {
                task_id: &t.id,
                index: r.index,
                harness: &r.harness,
                score: &r.score,
            })
            .collect(),
    };
    dir.write(ORACLE_FILE, &doc(&document))?;
    dir.finish()?;
    let mut stdout = String::new();
    for (t, r) in tasks.iter().zip(&found) {
        stdout.push_str(&format!(
            "{} index={} score={}\n",
            t.id,
            r.index,
            to_canonical(&r.score)
        ));
    }
    stdout.push_str(&format!("dir={}\n", dir.path().display()));
    Ok(Outcome::ok(stdout, Some(dir.path().to_path_buf())))
}

fn parse_role(name: &str) -> Result<Role, CliError> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| CliError::config(format!("unknown role {name:?}")))
}

fn parse_kind(name: &str) -> Result<StrategyKind, CliError> {
    match serde_json::from_value(serde_json::Value::String(name.to_string())) {
        Ok(StrategyKind::External) | Err(_) => Err(CliError::config(format!(
            "unknown builtin strategy {name:?}"
        ))),
        Ok(kind) => Ok(kind),
    }
}

pub fn cmd_conformance(args: &ConformanceArgs) -> Result<Outcome, CliError> {
    let roles = if args.roles.is_empty() {
        ALL_ROLES.to_vec()
    } else {
        args.roles
            .iter()
            .map(|r| parse_role(r))
            .collect::<Result<_, _>>()?
    };
    let cmd = ExternalCommand {
        command: args.agent.clone(),
        args: args.agent_args.clone(),
        timeout_ms: args.timeout_ms,
    };
    let report = run_conformance(&cmd, &roles);
    Ok(Outcome {
        stdout: doc(&report),
        exit: if report.passed() {
            ExitCode::Success
        } else {
            ExitCode::Agent
        },
        run_dir: None,
    })
}

pub fn build_served_agent(args: &ServeArgs) -> Result<ServedAgent, CliError> {
    Ok(match parse_role(&args.role)? {
        Role::Worker => ServedAgent::Worker(Box::new(SimWorker)),
        Role::Evaluator => ServedAgent::Evaluator(Box::new(SimEvaluator::new(Strictness::Full))),
        Role::Evolution => {
            let kind = parse_kind(args.strategy.as_deref().unwrap_or("hill_climb"))?;
            let space = load_space(args.space.as_deref().unwrap_or("core3"))?;
            ServedAgent::Evolution(Box::new(BuiltinEvolution::new(
                kind,
                space,
                Fallback::Enumeration,
            )))
        }
        Role::MetaEvolution => {
            let name = args.strategy.as_deref().unwrap_or("hill_climb");
            let strategy = MetaStrategy::from_name(name)
                .ok_or_else(|| CliError::config(format!("unknown meta strategy {name:?}")))?;
            let space: MetaSpace = load_meta_space(args.space.as_deref().unwrap_or("reference"))?;
            ServedAgent::MetaEvolution(Box::new(BuiltinMetaEvolution::new(strategy, space)))
        }
    })
}

pub fn cmd_serve(args: &ServeArgs) -> Result<Outcome, CliError> {
    let agent = build_served_agent(args)?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve(agent, stdin.lock(), stdout.lock()).map_err(|e| CliError::io(Path::new("<stdio>"), e))?;
    Ok(Outcome::ok(String::new(), None))
}

pub fn cmd_template(cfg: &RunConfig, args: &TemplateArgs) -> Result<Outcome, CliError> {
    let kind = parse_kind(&args.strategy)?;
    let harness = if args.rich {
        templates::rich_harness()
    } else {
        templates::minimal_harness()
    };
    let bp = templates::blueprint(kind, harness, cfg.k.unwrap_or(DEFAULT_TEMPLATE_K));
    Ok(Outcome::ok(doc(&bp), None))
}

/// Reads a canonical document back, as tests and tools do.
pub fn read_document<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    canonical::decode(&text).map_err(|e| {
        CliError::new(
            ExitCode::Io,
            "document_invalid",
            format!("{}: {e}", path.display()),
        )
    })
}

pub fn write_document<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, &doc(value))
}
