//! Runtime monitoring of perception score streams.
//!
//! Per-frame predicate scores are thresholded into valuations (`score > τ`,
//! strictly) and fed to minimized requirement automata. Each frame yields a
//! four-valued verdict per requirement: `Violated` when no accepting state
//! is reachable any more, `Satisfied` when every reachable state accepts,
//! otherwise `PresumablyTrue` or `PresumablyFalse` by the current state's
//! acceptance. Definitive verdicts latch.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::automata::{compile, minimize, AutomataError, Dfa, StateClasses, StateId};
use crate::ltlf::{Formula, LtlfError, PropSet, Valuation};

pub const DEFAULT_THRESHOLD: f64 = 0.4;

#[derive(Debug, thiserror::Error)]
pub enum MonitorError {
    #[error("frame {frame}: no score for `{pred}`")]
    MissingPredicate { frame: u64, pred: String },
    #[error("frame {frame}: two scores for `{pred}`")]
    DuplicateScore { frame: u64, pred: String },
    #[error("frame {frame}: unknown predicate `{pred}`")]
    UnknownPredicate { frame: u64, pred: String },
    #[error("frame {frame}: score {score} for `{pred}` is outside [-1, 1]")]
    ScoreOutOfRange { frame: u64, pred: String, score: f64 },
    #[error("threshold {0} is outside [-1, 1]")]
    ThresholdOutOfRange(f64),
    #[error("line {line}: frame {frame} arrives after frame {previous}")]
    Unsorted { line: usize, frame: u64, previous: u64 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("score stream is empty")]
    EmptyStream,
    #[error("requirement {id}: {source}")]
    Compile {
        id: String,
        #[source]
        source: AutomataError,
    },
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Ltlf(#[from] LtlfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    PresumablyTrue,
    PresumablyFalse,
}

impl Verdict {
    pub fn is_definitive(self) -> bool {
        matches!(self, Verdict::Satisfied | Verdict::Violated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::PresumablyTrue => "presumably_true",
            Verdict::PresumablyFalse => "presumably_false",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    Strict,
    /// Reuse the previous frame's value; the first frame must be complete.
    CarryForward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub policy: MissingPolicy,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            default: DEFAULT_THRESHOLD,
            overrides: BTreeMap::new(),
            policy: MissingPolicy::Strict,
        }
    }
}

impl ThresholdConfig {
    pub fn check(&self) -> Result<(), MonitorError> {
        for &t in std::iter::once(&self.default).chain(self.overrides.values()) {
            if !(-1.0..=1.0).contains(&t) {
                return Err(MonitorError::ThresholdOutOfRange(t));
            }
        }
        Ok(())
    }

    pub fn threshold_for(&self, pred: &str) -> f64 {
        self.overrides.get(pred).copied().unwrap_or(self.default)
    }
}

/// Scores wire record: `{"frame": <int>, "pred": "<name>", "score": <float>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub frame: u64,
    pub pred: String,
    pub score: f64,
}

/// Verdict wire record: `{"frame", "req", "verdict"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub frame: u64,
    pub req: String,
    pub verdict: Verdict,
}

/// Thresholds one frame of scores. `previous` is the last valuation, used
/// by the carry-forward policy.
pub fn threshold(
    props: &PropSet,
    frame: u64,
    scores: &BTreeMap<String, f64>,
    cfg: &ThresholdConfig,
    previous: Option<&Valuation>,
) -> Result<Valuation, MonitorError> {
    cfg.check()?;
    for (pred, &score) in scores {
        if !props.contains(pred) {
            return Err(MonitorError::UnknownPredicate {
                frame,
                pred: pred.clone(),
            });
        }
        if !(-1.0..=1.0).contains(&score) {
            return Err(MonitorError::ScoreOutOfRange {
                frame,
                pred: pred.clone(),
                score,
            });
        }
    }
    let n = props.len();
    let mut bits = 0u64;
    for (i, p) in props.iter().enumerate() {
        let on = match (scores.get(p.as_str()), cfg.policy, previous) {
            (Some(&s), _, _) => s > cfg.threshold_for(p.as_str()),
            (None, MissingPolicy::CarryForward, Some(prev)) => prev.value_at(i),
            (None, _, _) => {
                return Err(MonitorError::MissingPredicate {
                    frame,
                    pred: p.to_string(),
                })
            }
        };
        if on {
            bits |= 1 << (n - 1 - i);
        }
    }
    Ok(Valuation::from_bits(props, bits))
}

/// Verdict for an automaton state.
pub fn verdict_at(d: &Dfa, classes: &StateClasses, s: StateId) -> Verdict {
    if !classes.live[s] {
        Verdict::Violated
    } else if classes.safe[s] {
        Verdict::Satisfied
    } else if d.is_accepting(s) {
        Verdict::PresumablyTrue
    } else {
        Verdict::PresumablyFalse
    }
}

#[derive(Debug, Clone)]
struct Monitored {
    id: String,
    dfa: Dfa,
    classes: StateClasses,
    state: StateId,
    latched: Option<Verdict>,
}

#[derive(Debug, Clone)]
pub struct MonitorSession {
    props: PropSet,
    reqs: Vec<Monitored>,
    frames: u64,
    cfg: ThresholdConfig,
    last: Option<Valuation>,
}

impl MonitorSession {
    /// Frames are valuations over `props`, which must cover every formula.
    pub fn new(
        props: &PropSet,
        reqs: &[(String, Formula)],
        cfg: ThresholdConfig,
    ) -> Result<Self, MonitorError> {
        cfg.check()?;
        let reqs = reqs
            .iter()
            .map(|(id, f)| {
                let fp = f.prop_set()?;
                if !fp.is_subset(props) {
                    return Err(LtlfError::PropositionMismatch {
                        expected: props.to_string(),
                        found: fp.to_string(),
                    }
                    .into());
                }
                let dfa = minimize(&compile(f).map_err(|source| MonitorError::Compile {
                    id: id.clone(),
                    source,
                })?);
                Ok(Monitored {
                    id: id.clone(),
                    classes: StateClasses::of(&dfa),
                    state: dfa.initial(),
                    dfa,
                    latched: None,
                })
            })
            .collect::<Result<Vec<_>, MonitorError>>()?;
        Ok(Self {
            props: props.clone(),
            reqs,
            frames: 0,
            cfg,
            last: None,
        })
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn config(&self) -> &ThresholdConfig {
        &self.cfg
    }

    /// Advances every automaton by one frame.
    pub fn step(&mut self, v: &Valuation) -> Result<Vec<(String, Verdict)>, MonitorError> {
        if v.props() != &self.props {
            return Err(LtlfError::PropositionMismatch {
                expected: self.props.to_string(),
                found: v.props().to_string(),
            }
            .into());
        }
        let mut out = Vec::with_capacity(self.reqs.len());
        for r in &mut self.reqs {
            let verdict = match r.latched {
                Some(l) => l,
                None => {
                    r.state = r.dfa.step(r.state, r.dfa.letter_of(v)?);
                    let verdict = verdict_at(&r.dfa, &r.classes, r.state);
                    if verdict.is_definitive() {
                        r.latched = Some(verdict);
                    }
                    verdict
                }
            };
            out.push((r.id.clone(), verdict));
        }
        self.frames += 1;
        self.last = Some(v.clone());
        Ok(out)
    }

    /// Thresholds one frame of scores, then steps.
    pub fn step_scores(
        &mut self,
        frame: u64,
        scores: &BTreeMap<String, f64>,
    ) -> Result<Vec<(String, Verdict)>, MonitorError> {
        let v = threshold(&self.props, frame, scores, &self.cfg, self.last.as_ref())?;
        self.step(&v)
    }
}

/// Reads scores JSON lines, skipping blank lines.
pub fn read_scores<R: BufRead>(input: R) -> Result<Vec<ScoreRecord>, MonitorError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line).map_err(|e| MonitorError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Groups records into frames, checking the frame order and that no
/// predicate is scored twice in a frame.
pub fn group_frames(records: &[ScoreRecord]) -> Result<Vec<(u64, BTreeMap<String, f64>)>, MonitorError> {
    let mut out: Vec<(u64, BTreeMap<String, f64>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match out.last_mut() {
            Some((f, m)) if *f == r.frame => {
                if m.insert(r.pred.clone(), r.score).is_some() {
                    return Err(MonitorError::DuplicateScore {
                        frame: r.frame,
                        pred: r.pred.clone(),
                    });
                }
            }
            Some((f, _)) if *f > r.frame => {
                return Err(MonitorError::Unsorted {
                    line: i + 1,
                    frame: r.frame,
                    previous: *f,
                })
            }
            _ => out.push((r.frame, BTreeMap::from([(r.pred.clone(), r.score)]))),
        }
    }
    Ok(out)
}

/// Interval of frames (inclusive frame ids) flagged for one requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementScan {
    pub req: String,
    pub verdicts: Vec<(u64, Verdict)>,
    pub segments: Vec<Segment>,
    pub first_definitive: Option<(u64, Verdict)>,
    pub first_presumably_true: Option<u64>,
}

/// Offline scan of a whole stream. Flagged segments are the `Violated` run
/// and a `PresumablyFalse` run that is still open at the end of the stream;
/// a pending obligation discharged later in the stream is not flagged.
pub fn scan_offline(
    records: &[ScoreRecord],
    props: &PropSet,
    reqs: &[(String, Formula)],
    cfg: &ThresholdConfig,
) -> Result<Vec<RequirementScan>, MonitorError> {
    let frames = group_frames(records)?;
    if frames.is_empty() {
        return Err(MonitorError::EmptyStream);
    }
    let mut session = MonitorSession::new(props, reqs, cfg.clone())?;
    let mut scans: Vec<RequirementScan> = reqs
        .iter()
        .map(|(id, _)| RequirementScan {
            req: id.clone(),
            verdicts: Vec::new(),
            segments: Vec::new(),
            first_definitive: None,
            first_presumably_true: None,
        })
        .collect();
    for (frame, scores) in &frames {
        for (scan, (_, v)) in scans.iter_mut().zip(session.step_scores(*frame, scores)?) {
            scan.verdicts.push((*frame, v));
        }
    }
    for scan in &mut scans {
        scan.first_definitive = scan.verdicts.iter().copied().find(|(_, v)| v.is_definitive());
        scan.first_presumably_true = scan
            .verdicts
            .iter()
            .find(|(_, v)| *v == Verdict::PresumablyTrue)
            .map(|(f, _)| *f);
        let mut runs: Vec<Segment> = Vec::new();
        for &(f, v) in &scan.verdicts {
            match runs.last_mut() {
                Some(seg) if seg.verdict == v => seg.end = f,
                _ => runs.push(Segment {
                    start: f,
                    end: f,
                    verdict: v,
                }),
            }
        }
        let last = runs.len() - 1;
        scan.segments = runs
            .into_iter()
            .enumerate()
            .filter(|(i, s)| {
                s.verdict == Verdict::Violated || (s.verdict == Verdict::PresumablyFalse && *i == last)
            })
            .map(|(_, s)| s)
            .collect();
    }
    Ok(scans)
}
