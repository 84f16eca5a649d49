//! Feature coverage and concept profiles over similarity score matrices.
//!
//! An item covers a feature when its score is strictly above the feature's
//! threshold. Statistics are computed over sorted columns, so reports do not
//! depend on item order. Standard deviations are population deviations.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::monitor::ScoreRecord;

pub const DEFAULT_Z: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum SemcovError {
    #[error("score matrix is empty")]
    Empty,
    #[error("no score for item `{item}`, feature `{feature}`")]
    MissingCell { item: String, feature: String },
    #[error("two scores for item `{item}`, feature `{feature}`")]
    DuplicateCell { item: String, feature: String },
    #[error("score {score} for item `{item}`, feature `{feature}` is outside [-1, 1]")]
    ScoreOutOfRange { item: String, feature: String, score: f64 },
    #[error("threshold {0} is outside [-1, 1]")]
    ThresholdOutOfRange(f64),
    #[error("target ratio {0} is outside [0, 1]")]
    TargetOutOfRange(f64),
    #[error("grouping names unknown item `{0}`")]
    UnknownItem(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("profile `{0}` has too few items for deviation scoring")]
    InsufficientProfile(String),
    #[error("expected {expected} scores, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Dense matrix, rows are items and columns features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    items: Vec<String>,
    features: Vec<String>,
    scores: Vec<f64>,
}

impl ScoreMatrix {
    /// `scores` is row-major.
    pub fn new(items: Vec<String>, features: Vec<String>, scores: Vec<f64>) -> Result<Self, SemcovError> {
        if items.is_empty() || features.is_empty() {
            return Err(SemcovError::Empty);
        }
        if scores.len() != items.len() * features.len() {
            return Err(SemcovError::Arity {
                expected: items.len() * features.len(),
                found: scores.len(),
            });
        }
        for (k, &s) in scores.iter().enumerate() {
            if !(-1.0..=1.0).contains(&s) {
                return Err(SemcovError::ScoreOutOfRange {
                    item: items[k / features.len()].clone(),
                    feature: features[k % features.len()].clone(),
                    score: s,
                });
            }
        }
        Ok(Self {
            items,
            features,
            scores,
        })
    }

    /// Pivots `(item, feature, score)` triples. Items and features keep
    /// their first-appearance order; every cell must be given exactly once.
    pub fn from_triples<I>(triples: I) -> Result<Self, SemcovError>
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        let mut items: Vec<String> = Vec::new();
        let mut features: Vec<String> = Vec::new();
        let mut item_ix: HashMap<String, usize> = HashMap::new();
        let mut feat_ix: HashMap<String, usize> = HashMap::new();
        let mut cells: HashMap<(usize, usize), f64> = HashMap::new();
        for (item, feature, score) in triples {
            let i = *item_ix.entry(item.clone()).or_insert_with(|| {
                items.push(item.clone());
                items.len() - 1
            });
            let f = *feat_ix.entry(feature.clone()).or_insert_with(|| {
                features.push(feature.clone());
                features.len() - 1
            });
            if cells.insert((i, f), score).is_some() {
                return Err(SemcovError::DuplicateCell { item, feature });
            }
        }
        let mut scores = Vec::with_capacity(items.len() * features.len());
        for (i, item) in items.iter().enumerate() {
            for (f, feature) in features.iter().enumerate() {
                scores.push(*cells.get(&(i, f)).ok_or_else(|| SemcovError::MissingCell {
                    item: item.clone(),
                    feature: feature.clone(),
                })?);
            }
        }
        Self::new(items, features, scores)
    }

    /// Monitor score records, with frame ids as item ids.
    pub fn from_records(records: &[ScoreRecord]) -> Result<Self, SemcovError> {
        Self::from_triples(
            records
                .iter()
                .map(|r| (r.frame.to_string(), r.pred.clone(), r.score)),
        )
    }

    /// CSV with header `item,feature,score`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, SemcovError> {
        #[derive(Deserialize)]
        struct Row {
            item: String,
            feature: String,
            score: f64,
        }
        let mut rdr = csv::Reader::from_reader(input);
        let rows = rdr
            .deserialize::<Row>()
            .map(|r| r.map(|r| (r.item, r.feature, r.score)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_triples(rows)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn get(&self, item: usize, feature: usize) -> f64 {
        self.scores[item * self.features.len() + feature]
    }

    pub fn row(&self, item: usize) -> &[f64] {
        let n = self.features.len();
        &self.scores[item * n..(item + 1) * n]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.items.len()).map(|i| self.get(i, feature)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub default: f64,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Thresholds {
    pub fn uniform(tau: f64) -> Self {
        Self {
            default: tau,
            overrides: BTreeMap::new(),
        }
    }

    pub fn for_feature(&self, f: &str) -> f64 {
        self.overrides.get(f).copied().unwrap_or(self.default)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::uniform(crate::monitor::DEFAULT_THRESHOLD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn mean_std(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Summary of a nonempty sample; quartiles interpolate linearly.
pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (mean, std) = mean_std(&v);
    Summary {
        mean,
        std,
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCoverage {
    pub feature: String,
    pub threshold: f64,
    pub covered: usize,
    pub ratio: f64,
    pub stats: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub items: usize,
    pub target: f64,
    pub features: Vec<FeatureCoverage>,
    /// Features whose ratio is below the target.
    pub gaps: Vec<String>,
}

impl CoverageReport {
    pub fn render_text(&self) -> String {
        let w = self.features.iter().map(|f| f.feature.len()).max().unwrap_or(7).max(7);
        let mut out = format!(
            "{:<w$}  {:>5}  {:>7}  {:>6}  {:>6}  {:>6}\n",
            "feature", "tau", "covered", "ratio", "mean", "std"
        );
        for f in &self.features {
            let _ = writeln!(
                out,
                "{:<w$}  {:>5.2}  {:>7}  {:>6.3}  {:>6.3}  {:>6.3}{}",
                f.feature,
                f.threshold,
                f.covered,
                f.ratio,
                f.stats.mean,
                f.stats.std,
                if self.gaps.contains(&f.feature) { "  gap" } else { "" }
            );
        }
        out
    }
}

pub fn coverage(
    m: &ScoreMatrix,
    thresholds: &Thresholds,
    target: f64,
    exec: Execution,
) -> Result<CoverageReport, SemcovError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(SemcovError::TargetOutOfRange(target));
    }
    for &t in std::iter::once(&thresholds.default).chain(thresholds.overrides.values()) {
        if !(-1.0..=1.0).contains(&t) {
            return Err(SemcovError::ThresholdOutOfRange(t));
        }
    }
    let n = m.items.len();
    let features = exec.map_range(0..m.features.len(), |f| {
        let name = &m.features[f];
        let tau = thresholds.for_feature(name);
        let col = m.column(f);
        let covered = col.iter().filter(|&&s| s > tau).count();
        FeatureCoverage {
            feature: name.clone(),
            threshold: tau,
            covered,
            ratio: covered as f64 / n as f64,
            stats: summarize(&col),
        }
    });
    let gaps = features
        .iter()
        .filter(|f| f.ratio < target)
        .map(|f| f.feature.clone())
        .collect();
    Ok(CoverageReport {
        items: n,
        target,
        features,
        gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptProfile {
    pub group: String,
    pub items: usize,
    pub features: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Fewer than two items: deviations are zero and not meaningful.
    pub insufficient: bool,
}

/// One profile per group, ordered by group label. Items missing from the
/// grouping are left out.
pub fn build_profiles(
    m: &ScoreMatrix,
    grouping: &BTreeMap<String, String>,
    exec: Execution,
) -> Result<Vec<ConceptProfile>, SemcovError> {
    let index: HashMap<&str, usize> = m.items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (item, group) in grouping {
        let &i = index
            .get(item.as_str())
            .ok_or_else(|| SemcovError::UnknownItem(item.clone()))?;
        groups.entry(group.as_str()).or_default().push(i);
    }
    let groups: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    Ok(exec.map(&groups, |(g, rows)| {
        let (means, stds) = (0..m.features.len())
            .map(|f| {
                let mut v: Vec<f64> = rows.iter().map(|&i| m.get(i, f)).collect();
                v.sort_by(f64::total_cmp);
                mean_std(&v)
            })
            .unzip();
        ConceptProfile {
            group: g.to_string(),
            items: rows.len(),
            features: m.features.clone(),
            means,
            stds,
            insufficient: rows.len() < 2,
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "features", rename_all = "snake_case")]
pub enum Deviation {
    Normal,
    /// Deviating features with their z-scores (infinite when σ = 0).
    Deviant(Vec<(String, f64)>),
}

/// Flags every feature with `|s - μ| / σ > z`; a feature with σ = 0 deviates
/// exactly when `s ≠ μ`. `scores` follows the profile's feature order.
pub fn deviation_flag(profile: &ConceptProfile, scores: &[f64], z: f64) -> Result<Deviation, SemcovError> {
    if profile.insufficient {
        return Err(SemcovError::InsufficientProfile(profile.group.clone()));
    }
    if scores.len() != profile.features.len() {
        return Err(SemcovError::Arity {
            expected: profile.features.len(),
            found: scores.len(),
        });
    }
    let mut out = Vec::new();
    for (f, &s) in scores.iter().enumerate() {
        let (mu, sigma) = (profile.means[f], profile.stds[f]);
        let dev = if sigma == 0.0 {
            (s != mu).then_some(f64::INFINITY)
        } else {
            let zs = (s - mu).abs() / sigma;
            (zs > z).then_some(zs)
        };
        if let Some(zs) = dev {
            out.push((profile.features[f].clone(), zs));
        }
    }
    Ok(if out.is_empty() {
        Deviation::Normal
    } else {
        Deviation::Deviant(out)
    })
}

/// Features × groups table of means.
pub fn render_heatmap(profiles: &[ConceptProfile]) -> String {
    let Some(first) = profiles.first() else {
        return String::new();
    };
    let fw = first.features.iter().map(String::len).max().unwrap_or(0).max(7);
    let cw = profiles.iter().map(|p| p.group.len()).max().unwrap_or(0).max(6);
    let mut out = format!("{:<fw$}", "feature");
    for p in profiles {
        let _ = write!(out, "  {:>cw$}", p.group);
    }
    out.push('\n');
    for (f, name) in first.features.iter().enumerate() {
        let _ = write!(out, "{name:<fw$}");
        for p in profiles {
            let _ = write!(out, "  {:>cw$.3}", p.means[f]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(items: &[&str], features: &[&str], scores: &[f64]) -> ScoreMatrix {
        ScoreMatrix::new(
            items.iter().map(|s| s.to_string()).collect(),
            features.iter().map(|s| s.to_string()).collect(),
            scores.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn strict_coverage_count() {
        let m = matrix(&["a", "b", "c", "d"], &["f"], &[0.5, 0.3, 0.41, 0.4]);
        let r = coverage(&m, &Thresholds::uniform(0.4), 0.6, Execution::Sequential).unwrap();
        assert_eq!(r.features[0].covered, 2);
        assert_eq!(r.features[0].ratio, 0.5);
        assert_eq!(r.gaps, vec!["f".to_string()]);
        let low = matrix(&["a", "b"], &["f"], &[-1.0, -0.5]);
        let r = coverage(&low, &Thresholds::uniform(-1.0), 0.0, Execution::Sequential).unwrap();
        assert_eq!(r.features[0].covered, 1);
        let r = coverage(&m, &Thresholds::uniform(0.9), 0.5, Execution::Parallel).unwrap();
        assert_eq!(r.features[0].ratio, 0.0);
        assert_eq!(r.gaps.len(), 1);
    }

    #[test]
    fn summary_quartiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn truck_profile_and_deviation() {
        let m = matrix(&["t1", "t2", "c1"], &["metallic"], &[0.6, 0.8, 0.1]);
        let grouping = BTreeMap::from([
            ("t1".to_string(), "truck".to_string()),
            ("t2".to_string(), "truck".to_string()),
            ("c1".to_string(), "cat".to_string()),
        ]);
        let ps = build_profiles(&m, &grouping, Execution::Sequential).unwrap();
        assert_eq!(ps[0].group, "cat");
        assert!(ps[0].insufficient);
        assert_eq!(ps[0].stds, vec![0.0]);
        let truck = &ps[1];
        assert!((truck.means[0] - 0.7).abs() < 1e-12);
        assert!((truck.stds[0] - 0.1).abs() < 1e-12);
        match deviation_flag(truck, &[0.2], DEFAULT_Z).unwrap() {
            Deviation::Deviant(f) => assert!((f[0].1 - 5.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert_eq!(deviation_flag(truck, &[truck.means[0]], DEFAULT_Z).unwrap(), Deviation::Normal);
        assert!(matches!(
            deviation_flag(&ps[0], &[0.1], DEFAULT_Z),
            Err(SemcovError::InsufficientProfile(_))
        ));
        assert!(render_heatmap(&ps).contains("truck"));
    }

    #[test]
    fn degenerate_sigma() {
        let m = matrix(&["a", "b"], &["f", "g"], &[0.2, 0.3, 0.2, 0.3]);
        let grouping = BTreeMap::from([("a".into(), "x".into()), ("b".into(), "x".into())]);
        let p = &build_profiles(&m, &grouping, Execution::Sequential).unwrap()[0];
        assert_eq!(p.stds, vec![0.0, 0.0]);
        assert_eq!(deviation_flag(p, &[0.2, 0.3], 3.0).unwrap(), Deviation::Normal);
        assert_eq!(
            deviation_flag(p, &[0.2, 0.31], 3.0).unwrap(),
            Deviation::Deviant(vec![("g".into(), f64::INFINITY)])
        );
        let bad = BTreeMap::from([("zz".into(), "x".into())]);
        assert!(matches!(
            build_profiles(&m, &bad, Execution::Sequential),
            Err(SemcovError::UnknownItem(_))
        ));
    }

    #[test]
    fn inputs() {
        let csv = "item,feature,score\nimg1,wheel,0.5\nimg1,sky,0.1\nimg2,wheel,0.2\nimg2,sky,0.7\n";
        let m = ScoreMatrix::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(m.items(), ["img1", "img2"]);
        assert_eq!(m.features(), ["wheel", "sky"]);
        assert_eq!(m.get(1, 1), 0.7);
        let missing = "item,feature,score\nimg1,wheel,0.5\nimg2,sky,0.7\n";
        assert!(matches!(
            ScoreMatrix::from_csv(missing.as_bytes()),
            Err(SemcovError::MissingCell { .. })
        ));
        let recs = vec![
            ScoreRecord { frame: 0, pred: "p".into(), score: 0.5 },
            ScoreRecord { frame: 1, pred: "p".into(), score: 1.5 },
        ];
        assert!(matches!(
            ScoreMatrix::from_records(&recs),
            Err(SemcovError::ScoreOutOfRange { .. })
        ));
        assert!(matches!(ScoreMatrix::from_triples(vec![]), Err(SemcovError::Empty)));
    }
}
