//! Ridge regression for estimating relation tensors from example pairs.
//!
//! Transitive verbs are learnt in two steps. First, for every verb-object
//! pair, a matrix mapping subject vectors to observed phrase vectors. Second,
//! for every verb, a map from object vectors to those matrices, which is the
//! order-3 tensor `[sentence, subject, object]`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::space::{norm, VectorSpace};
use crate::tensor::{Method, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("ridge coefficient must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("normal equations are singular; use a ridge coefficient above zero")]
    Singular,
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("every lambda in the grid gave a degenerate cross-validation score")]
    AllDegenerate,
    #[error("reduced dimension {k} exceeds the maximum {max}")]
    DimensionTooLarge { k: usize, max: usize },
    #[error("training file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    pub lambda: f64,
}

impl RegressionProblem {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>, lambda: f64) -> Result<Self, RegressionError> {
        if inputs.nrows() != outputs.nrows() {
            return Err(RegressionError::Shape(format!(
                "{} input rows against {} output rows",
                inputs.nrows(),
                outputs.nrows()
            )));
        }
        if lambda.is_nan() || lambda < 0.0 {
            return Err(RegressionError::NegativeLambda(lambda));
        }
        Ok(RegressionProblem { inputs, outputs, lambda })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, RegressionError> {
        RegressionProblem::new(self.inputs.clone(), self.outputs.clone(), lambda)
    }

    /// `‖XB − Y‖² + λ‖B‖²`
    pub fn objective(&self, b: &DMatrix<f64>) -> f64 {
        (&self.inputs * b - &self.outputs).norm_squared() + self.lambda * b.norm_squared()
    }

    /// Gradient of the objective with respect to `B`.
    pub fn gradient(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let x = &self.inputs;
        (x.transpose() * (x * b - &self.outputs)) * 2.0 + b * (2.0 * self.lambda)
    }
}

/// `B = (XᵀX + λI)⁻¹ XᵀY`
pub fn ridge_fit(p: &RegressionProblem) -> Result<DMatrix<f64>, RegressionError> {
    let x = &p.inputs;
    let xt = x.transpose();
    let mut a = &xt * x;
    let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..a.nrows() {
        a[(i, i)] += p.lambda;
    }
    let rhs = &xt * &p.outputs;
    let chol = a.clone().cholesky();
    if let Some(chol) = chol {
        let l = chol.l_dirty();
        let tiny = 1e-10 * scale.max(p.lambda).max(f64::MIN_POSITIVE).sqrt();
        if p.lambda == 0.0 && (0..l.nrows()).any(|i| l[(i, i)] <= tiny) {
            return Err(RegressionError::Singular);
        }
        return Ok(chol.solve(&rhs));
    }
    if p.lambda == 0.0 {
        return Err(RegressionError::Singular);
    }
    a.lu().solve(&rhs).ok_or(RegressionError::Singular)
}

/// Residual sum of squares summed over output columns.
pub fn rss(p: &RegressionProblem, b: &DMatrix<f64>) -> f64 {
    (&p.inputs * b - &p.outputs).norm_squared()
}

/// Generalised cross-validation score `n·RSS / (n − tr H)²`, or `None` when
/// the fit fails or the denominator vanishes.
pub fn gcv_score(p: &RegressionProblem) -> Option<f64> {
    let n = p.inputs.nrows() as f64;
    let b = ridge_fit(p).ok()?;
    let sv = p.inputs.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    let tol = smax * 1e-12 * (p.inputs.nrows().max(p.inputs.ncols()) as f64);
    let trace: f64 = sv
        .iter()
        .filter(|s| **s > tol)
        .map(|s| s * s / (s * s + p.lambda))
        .sum();
    let denom = (n - trace).powi(2);
    if denom < 1e-12 * n * n {
        return None;
    }
    Some(n * rss(p, &b) / denom)
}

/// The grid value with the lowest GCV score; ties go to the smaller λ.
pub fn gcv_lambda(p: &RegressionProblem, grid: &[f64]) -> Result<f64, RegressionError> {
    if grid.is_empty() {
        return Err(RegressionError::EmptyGrid);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for lambda in sorted {
        if lambda < 0.0 {
            return Err(RegressionError::NegativeLambda(lambda));
        }
        let Some(score) = gcv_score(&p.with_lambda(lambda)?) else {
            continue;
        };
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((lambda, score));
        }
    }
    best.map(|(l, _)| l).ok_or(RegressionError::AllDegenerate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSpace {
    /// `dim(N) × k`; reduced vector = original vector × projection.
    pub projection: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub k: usize,
}

impl ReducedSpace {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let row = DMatrix::from_row_slice(1, v.len(), v);
        (row * &self.projection).iter().copied().collect()
    }
}

/// Word-by-context matrix with one row per word, in the space's word order.
pub fn space_matrix(space: &VectorSpace) -> DMatrix<f64> {
    let rows: Vec<f64> = space.vectors.values().flatten().copied().collect();
    DMatrix::from_row_slice(space.vectors.len(), space.dim(), &rows)
}

/// Rank-`k` truncation `X ≈ U_k Σ_k V_kᵀ`; reduced vectors are the rows of `U_k Σ_k`.
pub fn svd_reduce(space: &VectorSpace, k: usize) -> Result<(ReducedSpace, VectorSpace), RegressionError> {
    let x = space_matrix(space);
    let max = x.nrows().min(x.ncols());
    if k > max || k == 0 {
        return Err(RegressionError::DimensionTooLarge { k, max });
    }
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let order = &order[..k];
    let mut projection = DMatrix::zeros(x.ncols(), k);
    for (c, &i) in order.iter().enumerate() {
        projection.set_column(c, &v_t.row(i).transpose());
    }
    let reduced_rows = &x * &projection;
    let mut reduced = VectorSpace::new((1..=k).map(|i| format!("sv{i}")).collect());
    for (r, word) in space.vectors.keys().enumerate() {
        reduced
            .insert(word.clone(), reduced_rows.row(r).iter().copied().collect())
            .expect("row length is k");
    }
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((
        ReducedSpace {
            projection,
            singular_values,
            k,
        },
        reduced,
    ))
}

/// `‖X − U_kΣ_kV_kᵀ‖_F` for a reduction of `space`.
pub fn reconstruction_error(space: &VectorSpace, reduced: &ReducedSpace) -> f64 {
    let x = space_matrix(space);
    let approx = &x * &reduced.projection * reduced.projection.transpose();
    (x - approx).norm()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingRow {
    pub subject: String,
    pub verb: String,
    pub object: String,
    pub phrase: String,
}

/// Reads `subject<TAB>verb<TAB>object<TAB>phrase-token` lines.
pub fn read_training(text: &str) -> Result<Vec<TrainingRow>, RegressionError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 4 || cols.iter().any(|c| c.is_empty()) {
            return Err(RegressionError::Format {
                line: idx + 1,
                reason: format!("expected 4 non-empty columns, got {}", cols.len()),
            });
        }
        out.push(TrainingRow {
            subject: cols[0].into(),
            verb: cols[1].into(),
            object: cols[2].into(),
            phrase: cols[3].into(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvoExample {
    pub subject: String,
    pub verb: String,
    pub object: String,
    pub subject_vec: Vec<f64>,
    pub object_vec: Vec<f64>,
    pub sentence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    pub verb: String,
    pub object: Option<String>,
    pub reason: String,
}

/// Looks up training rows in `space`, reporting rows with missing vectors.
pub fn resolve_training(rows: &[TrainingRow], space: &VectorSpace) -> (Vec<SvoExample>, Vec<Skip>) {
    let mut examples = Vec::new();
    let mut skipped = Vec::new();
    for row in rows {
        let lookups = [&row.subject, &row.object, &row.phrase].map(|w| space.get(w));
        match lookups {
            [Some(s), Some(o), Some(p)] => examples.push(SvoExample {
                subject: row.subject.clone(),
                verb: row.verb.clone(),
                object: row.object.clone(),
                subject_vec: s.to_vec(),
                object_vec: o.to_vec(),
                sentence: p.to_vec(),
            }),
            _ => {
                let missing: Vec<&str> = [&row.subject, &row.object, &row.phrase]
                    .iter()
                    .zip(lookups)
                    .filter(|(_, v)| v.is_none())
                    .map(|(w, _)| w.as_str())
                    .collect();
                skipped.push(Skip {
                    verb: row.verb.clone(),
                    object: Some(row.object.clone()),
                    reason: format!("no vector for {}", missing.join(", ")),
                });
            }
        }
    }
    (examples, skipped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistepConfig {
    pub lambda_grid: Vec<f64>,
    /// L2-normalise input and output rows before fitting.
    pub normalize: bool,
    pub min_examples: usize,
}

impl Default for MultistepConfig {
    fn default() -> Self {
        MultistepConfig {
            lambda_grid: vec![0.01, 0.1, 1.0, 10.0],
            normalize: true,
            min_examples: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistepOutcome {
    /// Order-3 tensors `[sentence, subject, object]` keyed by verb.
    pub tensors: BTreeMap<String, Tensor>,
    pub skipped: Vec<Skip>,
}

fn design_matrix(rows: &[&[f64]], normalize: bool) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), cols, |r, c| {
        let n = if normalize { norm(rows[r]) } else { 0.0 };
        if n > 0.0 {
            rows[r][c] / n
        } else {
            rows[r][c]
        }
    })
}

fn fit_with_grid(x: DMatrix<f64>, y: DMatrix<f64>, grid: &[f64]) -> Result<DMatrix<f64>, RegressionError> {
    let p = RegressionProblem::new(x, y, 0.0)?;
    let lambda = gcv_lambda(&p, grid)?;
    ridge_fit(&p.with_lambda(lambda)?)
}

/// Two-step estimation of one order-3 tensor per verb.
/// An object vector with the verb-object matrix learned for it.
type ObjectMatrix<'a> = (&'a [f64], DMatrix<f64>);

pub fn multistep_learn(examples: &[SvoExample], config: &MultistepConfig) -> Result<MultistepOutcome, RegressionError> {
    let mut skipped = Vec::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&SvoExample>> = BTreeMap::new();
    for ex in examples {
        groups.entry((&ex.verb, &ex.object)).or_default().push(ex);
    }

    // Step 1: per verb-object, subject -> sentence.
    let mut matrices: BTreeMap<&str, Vec<ObjectMatrix>> = BTreeMap::new();
    for ((verb, object), group) in &groups {
        if group.len() < config.min_examples {
            skipped.push(Skip {
                verb: verb.to_string(),
                object: Some(object.to_string()),
                reason: format!("{} examples, need {}", group.len(), config.min_examples),
            });
            continue;
        }
        let subj: Vec<&[f64]> = group.iter().map(|e| e.subject_vec.as_slice()).collect();
        let sent: Vec<&[f64]> = group.iter().map(|e| e.sentence.as_slice()).collect();
        let b = fit_with_grid(
            design_matrix(&subj, config.normalize),
            design_matrix(&sent, config.normalize),
            &config.lambda_grid,
        )?;
        matrices
            .entry(verb)
            .or_default()
            .push((group[0].object_vec.as_slice(), b.transpose()));
    }

    // Step 2: per verb, object -> row-major vec(M).
    let verbs: std::collections::BTreeSet<&str> = examples.iter().map(|e| e.verb.as_str()).collect();
    let mut tensors = BTreeMap::new();
    for verb in verbs {
        let pairs = matrices.remove(verb).unwrap_or_default();
        if pairs.len() < config.min_examples {
            skipped.push(Skip {
                verb: verb.to_string(),
                object: None,
                reason: format!("{} verb-object matrices, need {}", pairs.len(), config.min_examples),
            });
            continue;
        }
        let (s_dim, d_subj) = pairs[0].1.shape();
        let objs: Vec<&[f64]> = pairs.iter().map(|(o, _)| *o).collect();
        let d_obj = objs[0].len();
        let y = DMatrix::from_fn(pairs.len(), s_dim * d_subj, |r, c| {
            pairs[r].1[(c / d_subj, c % d_subj)]
        });
        let b = fit_with_grid(design_matrix(&objs, config.normalize), y, &config.lambda_grid)?;
        let mut data = Vec::with_capacity(s_dim * d_subj * d_obj);
        for i in 0..s_dim {
            for j in 0..d_subj {
                for k in 0..d_obj {
                    data.push(b[(k, i * d_subj + j)]);
                }
            }
        }
        let t = Tensor::new(verb, Method::Regression, vec![s_dim, d_subj, d_obj], data)
            .expect("cell count matches shape");
        tensors.insert(verb.to_string(), t);
    }
    Ok(MultistepOutcome { tensors, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn identity_interpolates() {
        let p = RegressionProblem::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), 0.0).unwrap();
        let b = ridge_fit(&p).unwrap();
        assert!((b - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn heavy_penalty_shrinks_to_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 0.8, 0.2, -1.0]);
        let y = DMatrix::from_row_slice(3, 1, &[0.4, -0.9, 1.0]);
        let b = ridge_fit(&RegressionProblem::new(x, y, 1e9).unwrap()).unwrap();
        assert!(b.norm() < 1e-6);
    }

    #[test]
    fn singular_at_zero_lambda() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let p = RegressionProblem::new(x, y, 0.0).unwrap();
        assert_eq!(ridge_fit(&p), Err(RegressionError::Singular));
        assert!(ridge_fit(&p.with_lambda(0.1).unwrap()).is_ok());
    }

    #[test]
    fn rejects_bad_problems() {
        let x = DMatrix::<f64>::zeros(3, 2);
        assert!(RegressionProblem::new(x.clone(), DMatrix::zeros(2, 1), 0.0).is_err());
        assert_eq!(
            RegressionProblem::new(x, DMatrix::zeros(3, 1), -1.0).unwrap_err(),
            RegressionError::NegativeLambda(-1.0)
        );
    }

    #[test]
    fn gcv_grid_edges() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let b_true = DMatrix::from_row_slice(2, 1, &[0.7, -1.2]);
        let y = &x * &b_true;
        let p = RegressionProblem::new(x, y, 0.0).unwrap();
        assert_eq!(gcv_lambda(&p, &[3.0]).unwrap(), 3.0);
        assert_eq!(gcv_lambda(&p, &[1.0, 0.001, 10.0]).unwrap(), 0.001);
        assert_eq!(gcv_lambda(&p, &[]), Err(RegressionError::EmptyGrid));
    }

    fn tiny_space(rows: &[(&str, &[f64])]) -> VectorSpace {
        let d = rows[0].1.len();
        let mut s = VectorSpace::new((0..d).map(|i| format!("c{i}")).collect());
        for (w, v) in rows {
            s.insert(*w, v.to_vec()).unwrap();
        }
        s
    }

    #[test]
    fn svd_keeps_dominant_direction() {
        let space = tiny_space(&[("a", &[3.0, 0.0]), ("b", &[0.0, 1.0])]);
        let (red, vecs) = svd_reduce(&space, 1).unwrap();
        assert!((red.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((vecs.get("a").unwrap()[0].abs() - 3.0).abs() < 1e-12);
        assert!(vecs.get("b").unwrap()[0].abs() < 1e-12);
        assert!((reconstruction_error(&space, &red) - 1.0).abs() < 1e-12);
        assert!(matches!(
            svd_reduce(&space, 3),
            Err(RegressionError::DimensionTooLarge { k: 3, max: 2 })
        ));
    }

    #[test]
    fn svd_exact_rank() {
        let space = tiny_space(&[
            ("a", &[1.0, 2.0, 3.0]),
            ("b", &[0.0, 1.0, 1.0]),
            ("c", &[1.0, 3.0, 4.0]),
            ("d", &[2.0, 5.0, 7.0]),
        ]);
        let (red, _) = svd_reduce(&space, 2).unwrap();
        assert!(reconstruction_error(&space, &red) < 1e-9);
    }

    #[test]
    fn training_file() {
        let rows = read_training("dog\tchase\tcat\tdog_chase_cat\n").unwrap();
        assert_eq!(rows[0].phrase, "dog_chase_cat");
        assert!(read_training("dog\tchase\tcat\n").is_err());
        let space = tiny_space(&[("dog", &[1.0]), ("cat", &[2.0])]);
        let (ex, skipped) = resolve_training(&rows, &space);
        assert!(ex.is_empty());
        assert_eq!(skipped[0].reason, "no vector for dog_chase_cat");
    }

    #[test]
    fn single_pair_reproduces_linear_targets() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let subjects = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let examples: Vec<SvoExample> = subjects
            .iter()
            .map(|s| SvoExample {
                subject: String::new(),
                verb: "v".into(),
                object: "o".into(),
                subject_vec: s.to_vec(),
                object_vec: vec![1.0, 0.0],
                sentence: (&m * DVector::from_column_slice(s)).iter().copied().collect(),
            })
            .collect();
        let subj: Vec<&[f64]> = examples.iter().map(|e| e.subject_vec.as_slice()).collect();
        let sent: Vec<&[f64]> = examples.iter().map(|e| e.sentence.as_slice()).collect();
        let b = fit_with_grid(design_matrix(&subj, false), design_matrix(&sent, false), &[1e-12]).unwrap();
        assert!((b.transpose() - m).norm() < 1e-9);

        // Only one verb-object pair, so step 2 is skipped for the verb.
        let out = multistep_learn(&examples, &MultistepConfig::default()).unwrap();
        assert!(out.tensors.is_empty());
        assert_eq!(out.skipped[0].object, None);
    }

    #[test]
    fn too_few_examples_are_reported() {
        let ex = SvoExample {
            subject: "s".into(),
            verb: "v".into(),
            object: "o".into(),
            subject_vec: vec![1.0],
            object_vec: vec![1.0],
            sentence: vec![1.0],
        };
        let out = multistep_learn(&[ex.clone(), ex], &MultistepConfig::default()).unwrap();
        assert_eq!(out.skipped.len(), 2);
        assert_eq!(out.skipped[0].object.as_deref(), Some("o"));
    }
}
