use serde::{Deserialize, Serialize};

use super::{dot, LabeledLatentSet, Provenance, SemanticDirection};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Initial step; step `t` (from 1) is `learning_rate / t`.
    pub learning_rate: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { lambda: 1e-4, epochs: 3000, learning_rate: 1.0 }
    }
}

/// Class-balanced soft-margin objective and subgradient on standardised inputs.
/// Positive and negative terms are formed separately and added once, so that
/// exchanging the classes negates the subgradient exactly.
fn objective(w: &[f64], b: f64, pos: &[Vec<f64>], neg: &[Vec<f64>], lambda: f64) -> (f64, Vec<f64>, f64) {
    let half = |xs: &[Vec<f64>], y: f64| {
        let mut g = vec![0.0; w.len()];
        let mut gb = 0.0;
        let mut loss = 0.0;
        for x in xs {
            let m = y * (dot(w, x) + b);
            if m < 1.0 {
                loss += 1.0 - m;
                g.iter_mut().zip(x).for_each(|(a, v)| *a -= y * v);
                gb -= y;
            }
        }
        let n = xs.len() as f64;
        (loss / n, g.into_iter().map(|v| v / n).collect::<Vec<_>>(), gb / n)
    };
    let (lp, gp, bp) = half(pos, 1.0);
    let (ln, gn, bn) = half(neg, -1.0);
    let reg: f64 = w.iter().map(|v| v * v).sum();
    let grad = w.iter().zip(gp.iter().zip(&gn)).map(|(wi, (p, q))| 2.0 * lambda * wi + 0.5 * (p + q)).collect();
    (lambda * reg + 0.5 * (lp + ln), grad, 0.5 * (bp + bn))
}

/// Fits `lambda |w|^2 + balanced mean hinge` by full-batch subgradient descent
/// and returns the iterate with the lowest objective as a unit-normal hyperplane.
///
/// Inputs are centred and divided by one global scale before fitting, so a
/// uniformly scaled data set yields the same decisions.
pub fn fit_linear_svm(set: &LabeledLatentSet, config: &SvmConfig) -> Result<SemanticDirection> {
    if !(config.lambda >= 0.0) || !(config.learning_rate > 0.0) || config.epochs == 0 {
        return Err(Error::InvalidInput(format!("bad SVM configuration {config:?}")));
    }
    let train_pos: Vec<&[f64]> = set.train.iter().filter(|e| e.1).map(|&e| set.example(e)).collect();
    let train_neg: Vec<&[f64]> = set.train.iter().filter(|e| !e.1).map(|&e| set.example(e)).collect();
    if train_pos.is_empty() || train_neg.is_empty() {
        return Err(Error::Degenerate(format!("{}: training split has a single class", set.semantic)));
    }
    let dim = train_pos[0].len();
    if set.all().any(|x| x.len() != dim) {
        return Err(Error::ShapeMismatch { expected: format!("dimension {dim}"), got: "mixed dimensions".into() });
    }
    let n = (train_pos.len() + train_neg.len()) as f64;
    let sum = |xs: &[&[f64]]| {
        let mut s = vec![0.0; dim];
        xs.iter().for_each(|x| s.iter_mut().zip(*x).for_each(|(a, v)| *a += v));
        s
    };
    let (sp, sn) = (sum(&train_pos), sum(&train_neg));
    let mean: Vec<f64> = sp.iter().zip(&sn).map(|(a, b)| (a + b) / n).collect();
    let sq = |xs: &[&[f64]]| -> f64 { xs.iter().map(|x| x.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>()).sum() };
    let scale = ((sq(&train_pos) + sq(&train_neg)) / (n * dim as f64)).sqrt();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Degenerate(format!("{}: training latents have no spread", set.semantic)));
    }
    let standardise = |xs: &[&[f64]]| -> Vec<Vec<f64>> { xs.iter().map(|x| x.iter().zip(&mean).map(|(v, m)| (v - m) / scale).collect()).collect() };
    let (pos, neg) = (standardise(&train_pos), standardise(&train_neg));

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for t in 1..=config.epochs {
        let (loss, gw, gb) = objective(&w, b, &pos, &neg, config.lambda);
        if !loss.is_finite() {
            return Err(Error::Diverged(format!("{}: SVM objective is {loss}", set.semantic)));
        }
        if best.as_ref().is_none_or(|(l, _, _)| loss < *l) {
            best = Some((loss, w.clone(), b));
        }
        let eta = config.learning_rate / t as f64;
        w.iter_mut().zip(&gw).for_each(|(a, g)| *a -= eta * g);
        b -= eta * gb;
    }
    let (loss, _, _) = objective(&w, b, &pos, &neg, config.lambda);
    if !loss.is_finite() {
        return Err(Error::Diverged(format!("{}: SVM objective is {loss}", set.semantic)));
    }
    if best.as_ref().is_none_or(|(l, _, _)| loss < *l) {
        best = Some((loss, w, b));
    }
    let (_, w, b) = best.expect("at least one iterate");
    let norm = dot(&w, &w).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Degenerate(format!("{}: hyperplane normal vanished", set.semantic)));
    }
    let normal: Vec<f64> = w.iter().map(|v| v / norm).collect();
    let bias = b * scale / norm - dot(&normal, &mean);

    let mut direction = SemanticDirection {
        id: set.semantic.clone(),
        part: Some(set.part),
        semantic: set.semantic.split_once('/').map_or(set.semantic.as_str(), |(_, s)| s).to_string(),
        normal,
        bias,
        train_acc: None,
        heldout_acc: None,
        dist_std: 0.0,
        provenance: Provenance::LatNav,
        eigenvalue: None,
    };
    let accuracy = |split: &[(usize, bool)]| -> Option<f64> {
        if split.is_empty() {
            return None;
        }
        let correct = split
            .iter()
            .filter(|&&e| {
                let d = direction.signed_distance(set.example(e));
                if e.1 { d > 0.0 } else { d < 0.0 }
            })
            .count();
        Some(correct as f64 / split.len() as f64)
    };
    let (train_acc, heldout_acc) = (accuracy(&set.train), accuracy(&set.heldout));
    direction.train_acc = train_acc;
    direction.heldout_acc = heldout_acc;
    direction.dist_std = distance_std(&direction, set.all());
    Ok(direction)
}

/// Population standard deviation of signed distances.
pub(crate) fn distance_std<'a>(d: &SemanticDirection, xs: impl Iterator<Item = &'a [f64]>) -> f64 {
    let ds: Vec<f64> = xs.map(|x| d.signed_distance(x)).collect();
    let n = ds.len() as f64;
    let m = ds.iter().sum::<f64>() / n;
    (ds.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}
