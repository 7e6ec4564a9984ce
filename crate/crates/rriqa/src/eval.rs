//! Metric evaluation: four-parameter logistic mapping of raw scores to
//! predicted subjective quality, Pearson accuracy and Spearman
//! monotonicity, and a dataset harness fed by a tab-separated manifest.
//!
//! Accuracy is the Pearson correlation between logistic-mapped scores
//! and the subjective values; monotonicity is the Spearman rank
//! correlation of the raw scores (rank correlation is invariant under
//! the monotone logistic map, so mapping first would change nothing).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::{band_pairs, dequantize, extract, quantize, FeatureError, FeatureVector};
use crate::image::GrayImage;
use crate::metrics::{score, MeasureId, MetricError};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("InvalidParams: gamma4 must be nonzero and all parameters finite")]
    InvalidParams,
    #[error("TooFewPoints: got {got}, need at least {min}")]
    TooFewPoints { got: usize, min: usize },
    #[error("DegenerateScores: objective scores are all equal")]
    DegenerateScores,
    #[error("ConstantInput: correlation of a constant sequence is undefined")]
    ConstantInput,
    #[error("LengthMismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("ManifestParse: line {line}: {reason}")]
    ManifestParse { line: usize, reason: String },
}

/// Parameters of the logistic mapping
/// `logistic(γ, q) = (γ₁ − γ₂)/(1 + e^{−(q − γ₃)/γ₄}) + γ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams<T> {
    g1: T,
    g2: T,
    g3: T,
    g4: T,
}

impl<T: Real> LogisticParams<T> {
    pub fn new(g1: T, g2: T, g3: T, g4: T) -> Result<Self, EvalError> {
        let all_finite = g1.is_finite() && g2.is_finite() && g3.is_finite() && g4.is_finite();
        if !all_finite || g4 == T::zero() {
            return Err(EvalError::InvalidParams);
        }
        Ok(Self { g1, g2, g3, g4 })
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }
}

/// Evaluates the logistic mapping at `q`.
pub fn logistic<T: Real>(gamma: &LogisticParams<T>, q: T) -> T {
    logistic_raw(&gamma.as_array(), q)
}

fn logistic_raw<T: Real>(g: &[T; 4], q: T) -> T {
    (g[0] - g[1]) / (T::one() + (-(q - g[2]) / g[3]).exp()) + g[1]
}

/// Sum of squared residuals of the logistic fit; non-finite parameter
/// combinations score +∞ so the simplex walks away from them.
fn sse<T: Real>(g: &[T; 4], pairs: &[(T, T)]) -> T {
    if g[3] == T::zero() || g.iter().any(|v| !v.is_finite()) {
        return T::infinity();
    }
    let mut acc = T::zero();
    for &(q, dmos) in pairs {
        let r = dmos - logistic_raw(g, q);
        acc += r * r;
    }
    if acc.is_finite() {
        acc
    } else {
        T::infinity()
    }
}

const NM_MAX_ITER: usize = 10_000;
const NM_REL_TOL: f64 = 1e-10;

// Nelder-Mead on 4 parameters. Returns the best vertex, its value, and
// the per-iteration best-value trace (non-increasing by construction).
fn nelder_mead<T: Real>(
    f: impl Fn(&[T; 4]) -> T,
    x0: [T; 4],
    scales: [T; 4],
) -> ([T; 4], T, Vec<T>) {
    let mut simplex: Vec<[T; 4]> = vec![x0];
    for i in 0..4 {
        let mut v = x0;
        v[i] += scales[i];
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(&f).collect();
    let mut trace = Vec::new();

    let order = |simplex: &mut Vec<[T; 4]>, values: &mut Vec<T>| {
        let mut idx: Vec<usize> = (0..simplex.len()).collect();
        idx.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        *simplex = idx.iter().map(|&i| simplex[i]).collect();
        *values = idx.iter().map(|&i| values[i]).collect();
    };
    order(&mut simplex, &mut values);

    for _ in 0..NM_MAX_ITER {
        trace.push(values[0]);
        let spread = (values[4] - values[0]).dbl();
        let floor = values[0].dbl().abs().max(1e-300);
        if spread <= NM_REL_TOL * floor || spread == 0.0 {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = [T::zero(); 4];
        for v in &simplex[..4] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += *x;
            }
        }
        for c in &mut centroid {
            *c /= T::of(4.0);
        }

        let worst = simplex[4];
        let lerp = |t: f64| {
            let mut p = [T::zero(); 4];
            for i in 0..4 {
                p[i] = centroid[i] + T::of(t) * (centroid[i] - worst[i]);
            }
            p
        };

        let reflected = lerp(1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = lerp(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[4] = expanded;
                values[4] = fe;
            } else {
                simplex[4] = reflected;
                values[4] = fr;
            }
        } else if fr < values[3] {
            simplex[4] = reflected;
            values[4] = fr;
        } else {
            let contracted = if fr < values[4] {
                lerp(0.5)
            } else {
                lerp(-0.5)
            };
            let fc = f(&contracted);
            if fc < values[4].min(fr) {
                simplex[4] = contracted;
                values[4] = fc;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0];
                for (v, val) in simplex[1..].iter_mut().zip(&mut values[1..]) {
                    for (x, b) in v.iter_mut().zip(&best) {
                        *x = *b + T::of(0.5) * (*x - *b);
                    }
                    *val = f(v);
                }
            }
        }
        order(&mut simplex, &mut values);
    }
    trace.push(values[0]);
    (simplex[0], values[0], trace)
}

/// Least-squares logistic fit by simplex descent from three
/// deterministic initializations (γ₁ = max subjective, γ₂ = min,
/// γ₃ = median score, γ₄ ∈ {+range/4, −range/4, range/10}); each run is
/// polished once from its optimum and the best restart wins.
pub fn fit_logistic<T: Real>(pairs: &[(T, T)]) -> Result<LogisticParams<T>, EvalError> {
    Ok(fit_logistic_traced(pairs)?.0)
}

pub(crate) fn fit_logistic_traced<T: Real>(
    pairs: &[(T, T)],
) -> Result<(LogisticParams<T>, Vec<T>), EvalError> {
    if pairs.len() < 4 {
        return Err(EvalError::TooFewPoints {
            got: pairs.len(),
            min: 4,
        });
    }
    let mut qs: Vec<T> = pairs.iter().map(|&(q, _)| q).collect();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let q_min = qs[0];
    let q_max = qs[qs.len() - 1];
    if q_min == q_max {
        return Err(EvalError::DegenerateScores);
    }
    let q_range = q_max - q_min;
    let median = qs[qs.len() / 2];
    let dmos_max = pairs
        .iter()
        .map(|&(_, d)| d)
        .fold(T::neg_infinity(), T::max);
    let dmos_min = pairs.iter().map(|&(_, d)| d).fold(T::infinity(), T::min);
    let d_scale = (dmos_max - dmos_min).max(T::one());

    let quarter = T::of(0.25);
    let tenth = T::of(0.1);
    let objective = |g: &[T; 4]| sse(g, pairs);
    let mut best: Option<([T; 4], T, Vec<T>)> = None;
    for g4 in [q_range * quarter, -(q_range * quarter), q_range * tenth] {
        let x0 = [dmos_max, dmos_min, median, g4];
        let scales = [
            d_scale * quarter,
            -(d_scale * quarter),
            q_range * quarter,
            g4 * T::of(0.5),
        ];
        let (x, v, mut trace) = nelder_mead(objective, x0, scales);
        // One polish round from the optimum with a tighter simplex.
        let polish_scales = [
            d_scale * T::of(1e-3),
            d_scale * T::of(-1e-3),
            q_range * T::of(1e-3),
            x[3] * T::of(1e-2),
        ];
        let (xp, vp, trace2) = nelder_mead(objective, x, polish_scales);
        let (x, v) = if vp < v { (xp, vp) } else { (x, v) };
        trace.extend(trace2);
        match &best {
            Some((_, bv, _)) if *bv <= v => {}
            _ => best = Some((x, v, trace)),
        }
    }
    let (g, _, trace) = best.expect("three restarts ran");
    let params =
        LogisticParams::new(g[0], g[1], g[2], g[3]).map_err(|_| EvalError::InvalidParams)?;
    Ok((params, trace))
}

/// Pearson product-moment correlation.
pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(EvalError::TooFewPoints {
            got: x.len(),
            min: 2,
        });
    }
    let n = T::of(x.len() as f64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut syy = T::zero();
    let mut sxy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(EvalError::ConstantInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

// Average ranks (midranks) for ties, 1-based.
fn midranks<T: Real>(x: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // Positions i..=j share the average of ranks i+1 ..= j+1.
        let avg = T::of((i + j + 2) as f64 / 2.0);
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank-order correlation with midranks for ties.
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<T, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    pearson(&midranks(x), &midranks(y))
}

/// One manifest line: a labeled (reference, distorted, subjective) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub subset: String,
    pub ref_path: PathBuf,
    pub dist_path: PathBuf,
    pub dmos: f64,
}

/// Parses the tab-separated manifest:
/// `subset_label<TAB>ref_path<TAB>dist_path<TAB>dmos`, `#` comments and
/// blank lines ignored.
pub fn parse_manifest(text: &str) -> Result<Vec<DatasetRecord>, EvalError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(EvalError::ManifestParse {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let dmos: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| EvalError::ManifestParse {
                line: line_no,
                reason: format!("unreadable dmos {:?}", fields[3]),
            })?;
        if !dmos.is_finite() {
            return Err(EvalError::ManifestParse {
                line: line_no,
                reason: "dmos must be finite".into(),
            });
        }
        records.push(DatasetRecord {
            subset: fields[0].trim().to_string(),
            ref_path: PathBuf::from(fields[1].trim()),
            dist_path: PathBuf::from(fields[2].trim()),
            dmos,
        });
    }
    Ok(records)
}

/// Whether scoring runs on codec-roundtripped reference features (the
/// deployment path) or on raw sender-side parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamMode {
    Quantized,
    Raw,
}

/// Per-subset evaluation results.
#[derive(Debug, Clone)]
pub struct SubsetReport<T> {
    pub subset: String,
    pub n: usize,
    pub pearson: T,
    pub spearman: T,
    pub gamma: LogisticParams<T>,
}

/// One successfully scored manifest record.
#[derive(Debug, Clone)]
pub struct ScoredPair {
    pub subset: String,
    pub ref_path: PathBuf,
    pub dist_path: PathBuf,
    pub q: f64,
    pub dmos: f64,
}

/// A record or subset that could not be evaluated, with the reason.
#[derive(Debug)]
pub struct EvalFailure {
    pub subset: String,
    pub context: String,
    pub reason: String,
}

/// Full evaluation output: per-subset correlations, per-pair scores,
/// and collected failures.
#[derive(Debug)]
pub struct CorrelationReport<T> {
    pub measure: MeasureId,
    pub subsets: Vec<SubsetReport<T>>,
    pub scores: Vec<ScoredPair>,
    pub failures: Vec<EvalFailure>,
}

fn features_for<T: Real>(
    cache: &mut HashMap<PathBuf, FeatureVector<T>>,
    path: &Path,
) -> Result<FeatureVector<T>, FeatureError> {
    if let Some(fv) = cache.get(path) {
        return Ok(fv.clone());
    }
    let img: GrayImage<T> = GrayImage::load(path)?;
    let fv = extract(&img)?;
    cache.insert(path.to_path_buf(), fv.clone());
    Ok(fv)
}

/// Scores every manifest record and reports per-subset correlations.
///
/// Per-record failures (unreadable files, degenerate subbands) are
/// collected without aborting the run; subsets with fewer than 4 usable
/// records are skipped and reported.
pub fn evaluate_dataset<T: Real>(
    records: &[DatasetRecord],
    measure: MeasureId,
    mode: ParamMode,
) -> CorrelationReport<T> {
    let mut cache: HashMap<PathBuf, FeatureVector<T>> = HashMap::new();
    let mut failures = Vec::new();
    let mut scores: Vec<ScoredPair> = Vec::new();
    let mut subset_order: Vec<String> = Vec::new();

    for rec in records {
        if !subset_order.contains(&rec.subset) {
            subset_order.push(rec.subset.clone());
        }
        let pair_label = format!("{} vs {}", rec.ref_path.display(), rec.dist_path.display());
        let result: Result<f64, String> = (|| {
            let ref_fv = features_for(&mut cache, &rec.ref_path).map_err(|e| e.to_string())?;
            let dist_fv = features_for(&mut cache, &rec.dist_path).map_err(|e| e.to_string())?;
            let ref_fv = match mode {
                ParamMode::Quantized => dequantize(&quantize(&ref_fv)),
                ParamMode::Raw => ref_fv,
            };
            let bands = band_pairs(&ref_fv, &dist_fv);
            let s = score(measure, &bands).map_err(|e: MetricError| e.to_string())?;
            Ok(s.value.dbl())
        })();
        match result {
            Ok(q) => scores.push(ScoredPair {
                subset: rec.subset.clone(),
                ref_path: rec.ref_path.clone(),
                dist_path: rec.dist_path.clone(),
                q,
                dmos: rec.dmos,
            }),
            Err(reason) => failures.push(EvalFailure {
                subset: rec.subset.clone(),
                context: pair_label,
                reason,
            }),
        }
    }

    let mut subsets = Vec::new();
    for label in subset_order {
        let pairs: Vec<(T, T)> = scores
            .iter()
            .filter(|s| s.subset == label)
            .map(|s| (T::of(s.q), T::of(s.dmos)))
            .collect();
        if pairs.len() < 4 {
            failures.push(EvalFailure {
                subset: label.clone(),
                context: "subset".into(),
                reason: format!("only {} usable records (need 4)", pairs.len()),
            });
            continue;
        }
        let fitted = match fit_logistic(&pairs) {
            Ok(g) => g,
            Err(e) => {
                failures.push(EvalFailure {
                    subset: label.clone(),
                    context: "logistic fit".into(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let qs: Vec<T> = pairs.iter().map(|&(q, _)| q).collect();
        let dmos: Vec<T> = pairs.iter().map(|&(_, d)| d).collect();
        let predicted: Vec<T> = qs.iter().map(|&q| logistic(&fitted, q)).collect();
        let (p, s) = match (pearson(&predicted, &dmos), spearman(&qs, &dmos)) {
            (Ok(p), Ok(s)) => (p, s),
            (p_res, s_res) => {
                let reason = p_res.err().or(s_res.err()).map(|e| e.to_string());
                failures.push(EvalFailure {
                    subset: label.clone(),
                    context: "correlation".into(),
                    reason: reason.unwrap_or_default(),
                });
                continue;
            }
        };
        subsets.push(SubsetReport {
            subset: label,
            n: pairs.len(),
            pearson: p,
            spearman: s,
            gamma: fitted,
        });
    }

    CorrelationReport {
        measure,
        subsets,
        scores,
        failures,
    }
}

impl<T: Real> CorrelationReport<T> {
    /// Machine-readable table: signed coefficients in the leading
    /// columns, absolute values appended.
    pub fn render_table(&self) -> String {
        let mut out = String::from(
            "subset\tn\tpearson\tspearman\tgamma1\tgamma2\tgamma3\tgamma4\tabs_pearson\tabs_spearman\n",
        );
        for s in &self.subsets {
            let g = s.gamma.as_array();
            out.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                s.subset,
                s.n,
                s.pearson.dbl(),
                s.spearman.dbl(),
                g[0].dbl(),
                g[1].dbl(),
                g[2].dbl(),
                g[3].dbl(),
                s.pearson.dbl().abs(),
                s.spearman.dbl().abs(),
            ));
        }
        out
    }

    /// Per-pair score dump: `subset ref dist q dmos`, tab-separated.
    pub fn render_scores(&self) -> String {
        let mut out = String::from("subset\tref\tdist\tq\tdmos\n");
        for s in &self.scores {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.9}\t{:.6}\n",
                s.subset,
                s.ref_path.display(),
                s.dist_path.display(),
                s.q,
                s.dmos
            ));
        }
        out
    }
}
