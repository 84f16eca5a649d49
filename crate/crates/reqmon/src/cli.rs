use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;

use reqmon_core::authoring::{ProviderConfig, ProviderKind, DEFAULT_CREDENTIAL_ENV};
use reqmon_core::elicitation::{Label, SessionStatus};
use reqmon_core::monitor::{scan_offline, MissingPolicy, MonitorError, MonitorSession, ScoreRecord, VerdictRecord};
use reqmon_core::project::Project;
use reqmon_core::testgen::{export_suite, Criterion};

use crate::error::{AppError, AppResult};
use crate::service::{self, DEFAULT_HOST, DEFAULT_PORT};
use crate::workflow::{self, AuthorRequest, CoverageRequest, LabelRequest, NewProject, TestsRequest};

#[derive(Debug, Parser)]
#[command(name = "reqmon", version, about = "Formalize, validate, test and monitor requirements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ProjectArg {
    /// Project file.
    #[arg(long, short)]
    pub project: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a project file.
    Init {
        #[command(flatten)]
        project: ProjectArg,
        #[arg(long)]
        name: String,
        /// Proposition and caption, as `name=caption`; repeatable.
        #[arg(long = "prop", value_name = "NAME=CAPTION", required = true)]
        props: Vec<String>,
        /// Chat-completion endpoint; without it the built-in stub provider is used.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "")]
        model: String,
        /// Environment variable holding the provider credential.
        #[arg(long, default_value = DEFAULT_CREDENTIAL_ENV)]
        credential_env: String,
        /// Default monitoring threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Add a free-text requirement.
    AddReq {
        #[command(flatten)]
        project: ProjectArg,
        #[arg(long)]
        id: String,
        #[arg(long)]
        text: String,
    },
    /// Propose candidate formalizations and open a validation session.
    Author {
        #[command(flatten)]
        project: ProjectArg,
        #[arg(long)]
        req: String,
        #[arg(long)]
        max: Option<usize>,
        /// Restricted English candidate to use instead of the provider; repeatable.
        #[arg(long = "candidate")]
        candidates: Vec<String>,
    },
    /// Answer distinguishing questions until one reading remains.
    Validate {
        #[command(flatten)]
        project: ProjectArg,
        #[arg(long)]
        req: String,
    },
    /// Show requirements and candidates.
    Status {
        #[command(flatten)]
        project: ProjectArg,
    },
    /// Check formalized requirements for conflicts and redundancy.
    Analyze {
        #[command(flatten)]
        project: ProjectArg,
        /// Fail on requirements that are not yet formalized.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        json: bool,
    },
    /// Generate a test suite and write it as JSON lines.
    Testgen {
        #[command(flatten)]
        project: ProjectArg,
        #[arg(long)]
        req: String,
        #[arg(long, value_enum, default_value_t = CriterionArg::Transition)]
        criterion: CriterionArg,
        /// Output file; standard output by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monitor a scores stream and write verdicts as JSON lines.
    Monitor {
        #[command(flatten)]
        project: ProjectArg,
        /// Requirement to monitor; repeatable. All formalized ones by default.
        #[arg(long = "req")]
        reqs: Vec<String>,
        /// Scores file; `-` or absent reads standard input.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Per-predicate threshold, as `pred=value`; repeatable.
        #[arg(long = "override", value_name = "PRED=VALUE")]
        overrides: Vec<String>,
        /// Reuse the previous frame's value for a missing score.
        #[arg(long)]
        carry_forward: bool,
        /// Print flagged segments per requirement on standard error at the end.
        #[arg(long)]
        summary: bool,
    },
    /// Measure how well a score matrix covers each feature.
    Coverage {
        /// Project whose thresholds apply.
        #[arg(long, short)]
        project: Option<PathBuf>,
        /// Scores as JSON lines, or CSV with header `item,feature,score` when the name ends in `.csv`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long = "override", value_name = "FEATURE=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 0.5)]
        target: f64,
        /// CSV with header `item,group` for concept profiles.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = DEFAULT_HOST)]
        host: IpAddr,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        /// Directory of project files.
        #[arg(long, env = "REQMON_DATA_DIR", default_value = ".")]
        data_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CriterionArg {
    State,
    Transition,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::State => Criterion::StateCoverage,
            CriterionArg::Transition => Criterion::TransitionCoverage,
        }
    }
}

/// Success, or success with findings to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Findings,
}

fn pairs(items: &[String]) -> AppResult<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| AppError::invalid(format!("expected KEY=VALUE, got `{s}`")))
        })
        .collect()
}

fn numeric_pairs(items: &[String]) -> AppResult<BTreeMap<String, f64>> {
    pairs(items)?
        .into_iter()
        .map(|(k, v)| {
            let x = v
                .parse()
                .map_err(|_| AppError::invalid(format!("`{v}` is not a number")))?;
            Ok((k, x))
        })
        .collect()
}

fn load(path: &Path) -> AppResult<Project> {
    Ok(Project::load(path)?)
}

fn update<T>(path: &Path, f: impl FnOnce(&mut Project) -> AppResult<T>) -> AppResult<T> {
    let mut p = load(path)?;
    let out = f(&mut p)?;
    p.save(path)?;
    Ok(out)
}

fn print_json<T: serde::Serialize>(v: &T) -> AppResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| AppError::invalid(e.to_string()))?;
    println!("{text}");
    Ok(())
}

pub fn run(cli: Cli) -> AppResult<Outcome> {
    match cli.command {
        Command::Init {
            project,
            name,
            props,
            endpoint,
            model,
            credential_env,
            threshold,
        } => {
            if project.project.exists() {
                return Err(AppError::conflict(format!("{} already exists", project.project.display())));
            }
            let provider = endpoint.map(|endpoint| ProviderConfig {
                kind: ProviderKind::HttpChatCompletion,
                endpoint,
                model,
                credential_env,
                ..ProviderConfig::default()
            });
            let mut thresholds = None;
            if let Some(t) = threshold {
                let mut cfg = reqmon_core::monitor::ThresholdConfig::default();
                cfg.default = t;
                thresholds = Some(cfg);
            }
            let p = workflow::create_project(NewProject {
                name,
                vocabulary: pairs(&props)?.into_iter().collect::<IndexMap<_, _>>(),
                provider,
                thresholds,
            })?;
            p.save(&project.project)?;
            Ok(Outcome::Clean)
        }
        Command::AddReq { project, id, text } => {
            update(&project.project, |p| Ok(p.add_requirement(&id, &text).map(|_| ())?))?;
            Ok(Outcome::Clean)
        }
        Command::Author {
            project,
            req,
            max,
            candidates,
        } => {
            let request = AuthorRequest {
                max_candidates: max,
                candidates: (!candidates.is_empty()).then_some(candidates),
            };
            let view = update(&project.project, |p| workflow::author(p, &req, request))?;
            for c in &view.candidates.candidates {
                println!("[{}] {}\n    {}", c.index, c.re_text, c.formula);
            }
            for d in &view.diagnostics {
                eprintln!("line {}: {}: {}", d.line, d.message, d.text);
            }
            Ok(Outcome::Clean)
        }
        Command::Validate { project, req } => validate(&project.project, &req, &mut io::stdin().lock(), &mut io::stdout()),
        Command::Status { project } => {
            let p = load(&project.project)?;
            for r in &p.requirements {
                println!("{}  {:?}  {}", r.id, r.status, r.source_text);
                for (i, c) in r.candidates.iter().enumerate() {
                    let mark = if r.selected == Some(i) { "*" } else { " " };
                    println!("  {mark}[{i}] {:?}  {}  ({})", c.state, c.formula, c.re_text);
                }
            }
            Ok(Outcome::Clean)
        }
        Command::Analyze { project, all, json } => {
            let p = load(&project.project)?;
            let report = workflow::analysis(&p, all)?;
            if json {
                print_json(&report)?;
            } else {
                print!("{}", report.render_text());
            }
            Ok(if report.has_findings() {
                Outcome::Findings
            } else {
                Outcome::Clean
            })
        }
        Command::Testgen {
            project,
            req,
            criterion,
            out,
        } => {
            let mut captions = IndexMap::new();
            let suite = update(&project.project, |p| {
                captions = p.vocabulary.clone();
                workflow::tests(
                    p,
                    &req,
                    TestsRequest {
                        criterion: criterion.into(),
                    },
                )
            })?;
            match out {
                Some(path) => {
                    reqmon_core::project::atomic_write_with(&path, |f| export_suite(&suite, &captions, f))?
                }
                None => export_suite(&suite, &captions, io::stdout().lock())?,
            }
            Ok(Outcome::Clean)
        }
        Command::Monitor {
            project,
            reqs,
            scores,
            threshold,
            overrides,
            carry_forward,
            summary,
        } => {
            let p = load(&project.project)?;
            let targets = workflow::monitor_targets(&p, &reqs)?;
            let mut cfg = p.thresholds.clone();
            if let Some(t) = threshold {
                cfg.default = t;
            }
            cfg.overrides.extend(numeric_pairs(&overrides)?);
            if carry_forward {
                cfg.policy = MissingPolicy::CarryForward;
            }
            let input: Box<dyn BufRead> = match scores {
                Some(path) if path.as_os_str() != "-" => Box::new(BufReader::new(File::open(&path)?)),
                _ => Box::new(io::stdin().lock()),
            };
            let props = p.props()?;
            let mut session = MonitorSession::new(&props, &targets, cfg.clone())?;
            let kept = monitor_stream(&mut session, input, &mut io::stdout().lock(), summary)?;
            if summary {
                for scan in scan_offline(&kept, &props, &targets, &cfg)? {
                    let line = serde_json::json!({
                        "req": scan.req,
                        "segments": scan.segments,
                        "first_definitive": scan.first_definitive,
                        "first_presumably_true": scan.first_presumably_true,
                    });
                    eprintln!("{line}");
                }
            }
            Ok(Outcome::Clean)
        }
        Command::Coverage {
            project,
            scores,
            threshold,
            overrides,
            target,
            groups,
            json,
        } => {
            let base = project.as_deref().map(load).transpose()?.map(|p| p.thresholds);
            let mut req = CoverageRequest {
                threshold,
                overrides: numeric_pairs(&overrides)?,
                target,
                ..CoverageRequest::default()
            };
            if scores.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                req.csv = Some(std::fs::read_to_string(&scores)?);
            } else {
                req.records = Some(reqmon_core::monitor::read_scores(BufReader::new(File::open(&scores)?))?);
            }
            if let Some(path) = groups {
                req.groups = read_groups(&path)?;
            }
            let view = workflow::coverage_of(base.as_ref(), req)?;
            if json {
                print_json(&view)?;
            } else {
                print!("{}", view.report.render_text());
                if !view.heatmap.is_empty() {
                    println!();
                    print!("{}", view.heatmap);
                }
            }
            Ok(if view.report.gaps.is_empty() {
                Outcome::Clean
            } else {
                Outcome::Findings
            })
        }
        Command::Serve { host, port, data_dir } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(SocketAddr::new(host, port), data_dir))?;
            Ok(Outcome::Clean)
        }
    }
}

fn read_groups(path: &Path) -> AppResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(|h| h.replace(' ', "")) {
        Some(h) if h == "item,group" => {}
        _ => return Err(AppError::invalid(format!("{}: expected header `item,group`", path.display()))),
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            l.split_once(',')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| AppError::invalid(format!("{}: line {}: expected item,group", path.display(), i + 2)))
        })
        .collect()
}

/// Streams score records frame by frame, writing each frame's verdicts as
/// soon as the frame is complete. Returns the records read when `keep` is
/// set.
pub fn monitor_stream(
    session: &mut MonitorSession,
    input: impl BufRead,
    out: &mut impl Write,
    keep: bool,
) -> AppResult<Vec<ScoreRecord>> {
    let mut kept = Vec::new();
    let mut pending: Option<(u64, BTreeMap<String, f64>)> = None;
    let mut flush = |frame: u64, scores: &BTreeMap<String, f64>, out: &mut dyn Write| -> AppResult<()> {
        for (req, verdict) in session.step_scores(frame, scores)? {
            let rec = VerdictRecord { frame, req, verdict };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("plain record"))?;
        }
        out.flush()?;
        Ok(())
    };
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line).map_err(|e| MonitorError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        match &mut pending {
            Some((f, scores)) if *f == rec.frame => {
                if scores.insert(rec.pred.clone(), rec.score).is_some() {
                    return Err(MonitorError::DuplicateScore {
                        frame: rec.frame,
                        pred: rec.pred,
                    }
                    .into());
                }
            }
            Some((f, _)) if *f > rec.frame => {
                return Err(MonitorError::Unsorted {
                    line: i + 1,
                    frame: rec.frame,
                    previous: *f,
                }
                .into())
            }
            _ => {
                if let Some((f, scores)) = pending.take() {
                    flush(f, &scores, out)?;
                }
                pending = Some((rec.frame, BTreeMap::from([(rec.pred.clone(), rec.score)])));
            }
        }
        if keep {
            kept.push(rec);
        }
    }
    match pending {
        Some((f, scores)) => flush(f, &scores, out)?,
        None => return Err(MonitorError::EmptyStream.into()),
    }
    Ok(kept)
}

/// Terminal validation loop: shows each distinguishing trace and reads
/// `a` (accept), `r` (reject) or `q` (quit). Every answer is saved before
/// the next question.
pub fn validate(path: &Path, req: &str, input: &mut impl BufRead, out: &mut impl Write) -> AppResult<Outcome> {
    loop {
        let view = update(path, |p| workflow::next_question(p, req))?;
        let Some(q) = view.question else {
            let p = load(path)?;
            let r = p.requirement(req)?;
            match view.status {
                SessionStatus::Converged => {
                    let i = r.selected.expect("converged sessions select");
                    writeln!(out, "converged: {}\n  {}", r.candidates[i].re_text, r.candidates[i].formula)?;
                }
                SessionStatus::Exhausted => {
                    writeln!(out, "every candidate was rejected; author new candidates")?
                }
                SessionStatus::Open => writeln!(out, "no question available")?,
            }
            return Ok(Outcome::Clean);
        };
        let p = load(path)?;
        let trace = &p.session(req)?.questions[q.id].trace;
        writeln!(out, "\nquestion {} (revision {})", q.id, view.revision)?;
        write!(out, "{}", trace.render_table())?;
        for b in &q.candidates {
            let verdict = if b.accepts { "accepts" } else { "rejects" };
            writeln!(out, "  [{}] {verdict}: {}", b.index, b.re_text)?;
        }
        let label = loop {
            write!(out, "is this behavior acceptable? [a]ccept / [r]eject / [q]uit: ")?;
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                writeln!(out)?;
                return Ok(Outcome::Clean);
            }
            match line.trim() {
                "a" | "accept" => break Label::Accept,
                "r" | "reject" => break Label::Reject,
                "q" | "quit" => return Ok(Outcome::Clean),
                _ => continue,
            }
        };
        let outcome = update(path, |p| {
            workflow::label(
                p,
                req,
                LabelRequest {
                    trace_id: Some(q.id),
                    trace: None,
                    label,
                    revision: Some(view.revision),
                },
            )
        })?;
        for i in &outcome.outcome.pruned {
            writeln!(out, "  pruned [{i}]")?;
        }
    }
}
