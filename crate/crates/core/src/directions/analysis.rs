use std::collections::BTreeMap;

use super::svm::distance_std;
use super::{dot, DirectionBank, Provenance, SemanticDirection};
use crate::neural::PointDecoder;
use crate::{Error, Result};

/// `M[i][j] = q_i . q_j` with an exact unit diagonal.
pub fn cosine_similarity_matrix(bank: &DirectionBank) -> Result<Vec<Vec<f64>>> {
    let d = &bank.directions;
    if d.is_empty() {
        return Err(Error::Precondition("cosine matrix of an empty bank".into()));
    }
    Ok((0..d.len())
        .map(|i| (0..d.len()).map(|j| if i == j { 1.0 } else { dot(&d[i].normal, &d[j].normal).clamp(-1.0, 1.0) }).collect())
        .collect())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are sorted in decreasing order; each eigenvector (a column of the
/// result, returned here as a row) has its largest-magnitude entry positive.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch { expected: format!("{n}x{n}"), got: "ragged matrix".into() });
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (matrix[i][j], matrix[j][i]);
            if !((a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))) {
                return Err(Error::InvalidInput("matrix is not symmetric".into()));
            }
        }
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut e: Vec<f64> = v.iter().map(|row| row[i]).collect();
            let lead = e.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                e.iter_mut().for_each(|x| *x = -*x);
            }
            e
        })
        .collect();
    Ok((values, vectors))
}

fn baseline(prefix: &str, provenance: Provenance, values: &[f64], vectors: &[Vec<f64>], m: usize, latents: &[Vec<f64>]) -> Vec<SemanticDirection> {
    let n = latents.len().max(1) as f64;
    (0..m)
        .map(|i| {
            let normal = vectors[i].clone();
            let mean_proj = latents.iter().map(|z| dot(&normal, z)).sum::<f64>() / n;
            let mut d = SemanticDirection {
                id: format!("{prefix}/{i}"),
                part: None,
                semantic: format!("{prefix}{i}"),
                normal,
                bias: -mean_proj,
                train_acc: None,
                heldout_acc: None,
                dist_std: 0.0,
                provenance,
                eigenvalue: Some(values[i]),
            };
            d.dist_std = distance_std(&d, latents.iter().map(Vec::as_slice));
            d
        })
        .collect()
}

fn check_latents(latents: &[Vec<f64>]) -> Result<usize> {
    let dim = latents.first().map(Vec::len).ok_or_else(|| Error::Precondition("no latents".into()))?;
    if latents.iter().any(|z| z.len() != dim) {
        return Err(Error::ShapeMismatch { expected: format!("dimension {dim}"), got: "mixed dimensions".into() });
    }
    Ok(dim)
}

/// Top-`m` principal components of the centred latents; biases centre the
/// signed distances on the population mean.
pub fn pca_baseline_directions(latents: &[Vec<f64>], m: usize, space_id: &str, checkpoint_hash: &str) -> Result<DirectionBank> {
    let dim = check_latents(latents)?;
    if m > dim {
        return Err(Error::InvalidInput(format!("{m} components requested in dimension {dim}")));
    }
    if latents.len() < m {
        return Err(Error::Precondition(format!("{} samples for {m} components", latents.len())));
    }
    let n = latents.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| latents.iter().map(|z| z[j]).sum::<f64>() / n).collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for z in latents {
        let c: Vec<f64> = z.iter().zip(&mean).map(|(a, b)| a - b).collect();
        for i in 0..dim {
            for j in 0..=i {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }
    let (values, vectors) = symmetric_eigen(&cov)?;
    DirectionBank::new(space_id, checkpoint_hash, baseline("pca", Provenance::PcaBaseline, &values, &vectors, m, latents))
}

/// Top-`m` eigenvectors of `W^T W` for the decoder's first linear map `W`.
pub fn closedform_baseline_directions(decoder: &PointDecoder<f64>, m: usize, latents: &[Vec<f64>], space_id: &str, checkpoint_hash: &str) -> Result<DirectionBank> {
    let first = decoder.layers.first().ok_or_else(|| Error::Precondition("decoder has no layers".into()))?;
    // Stored as inputs x outputs, so the map is W = first.w^T and W^T W = w w^T.
    let dim = first.w.nrows();
    if m > dim {
        return Err(Error::InvalidInput(format!("{m} components requested in dimension {dim}")));
    }
    if check_latents(latents)? != dim {
        return Err(Error::ShapeMismatch { expected: format!("dimension {dim}"), got: format!("{}", latents[0].len()) });
    }
    let gram = first.w.dot(&first.w.t());
    let gram: Vec<Vec<f64>> = gram.rows().into_iter().map(|r| r.to_vec()).collect();
    let (values, vectors) = symmetric_eigen(&gram)?;
    DirectionBank::new(space_id, checkpoint_hash, baseline("closedform", Provenance::ClosedFormBaseline, &values, &vectors, m, latents))
}

/// `m` seeded Gaussian unit directions, centred on the latents like the baselines.
pub fn random_directions(latents: &[Vec<f64>], m: usize, seed: u64, space_id: &str, checkpoint_hash: &str) -> Result<DirectionBank> {
    let dim = check_latents(latents)?;
    let mut g = crate::rng::derived(seed, "random-directions", 0);
    let vectors: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, &mut g)).collect();
            let n = dot(&v, &v).sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let mut dirs = baseline("random", Provenance::Random, &vec![0.0; m], &vectors, m, latents);
    dirs.iter_mut().for_each(|d| d.eigenvalue = None);
    DirectionBank::new(space_id, checkpoint_hash, dirs)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BaselineMatch {
    pub direction_id: String,
    pub index: usize,
    /// `+1` or `-1`: orientation of the baseline direction used.
    pub sign: i8,
    pub score: f64,
}

/// For each semantic, the baseline direction and sign maximising `score`;
/// ties go to the lower index, then the positive sign.
pub fn match_baselines_to_semantics<F>(baseline: &DirectionBank, semantics: &[String], mut score: F) -> Result<BTreeMap<String, BaselineMatch>>
where
    F: FnMut(&str, &SemanticDirection) -> Result<f64>,
{
    if baseline.directions.is_empty() {
        return Err(Error::Precondition("empty baseline bank".into()));
    }
    let mut out = BTreeMap::new();
    for sem in semantics {
        let mut best: Option<BaselineMatch> = None;
        for (index, d) in baseline.directions.iter().enumerate() {
            for sign in [1i8, -1] {
                let oriented = if sign > 0 { d.clone() } else { d.flipped() };
                let s = score(sem, &oriented)?;
                if best.as_ref().is_none_or(|b| s > b.score) {
                    best = Some(BaselineMatch { direction_id: d.id.clone(), index, sign, score: s });
                }
            }
        }
        out.insert(sem.clone(), best.expect("non-empty bank"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{AeConfig, AutoEncoder, LatentSpace, TrunkConfig};
    use ndarray::Array2;
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut g = crate::rng::seeded(seed);
        (0..rows).map(|_| (0..cols).map(|_| StandardNormal.sample(&mut g)).collect()).collect()
    }

    fn gram(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = w[0].len();
        (0..n).map(|i| (0..n).map(|j| w.iter().map(|r| r[i] * r[j]).sum()).collect()).collect()
    }

    fn assert_orthonormal(v: &[Vec<f64>]) {
        for i in 0..v.len() {
            for j in 0..v.len() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&v[i], &v[j]) - e).abs() < 1e-9);
            }
        }
    }

    /// Leading eigenpairs by power iteration with deflation.
    fn power_iteration(m: &[Vec<f64>], k: usize) -> Vec<(f64, Vec<f64>)> {
        let n = m.len();
        let mut a = m.to_vec();
        let mut out = Vec::new();
        let mut g = crate::rng::seeded(99);
        for _ in 0..k {
            let mut x: Vec<f64> = (0..n).map(|_| g.random::<f64>() - 0.5).collect();
            let mut lambda = 0.0;
            for _ in 0..20000 {
                let y: Vec<f64> = (0..n).map(|i| dot(&a[i], &x)).collect();
                let norm = dot(&y, &y).sqrt();
                x = y.iter().map(|v| v / norm).collect();
                lambda = norm;
            }
            let lead = x.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if lead < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            for i in 0..n {
                for j in 0..n {
                    a[i][j] -= lambda * x[i] * x[j];
                }
            }
            out.push((lambda, x));
        }
        out
    }

    #[test]
    fn jacobi_matches_power_iteration() {
        let w = random_matrix(16, 16, 1);
        let g = gram(&w);
        let (values, vectors) = symmetric_eigen(&g).unwrap();
        assert_orthonormal(&vectors);
        for (i, (lambda, x)) in power_iteration(&g, 3).into_iter().enumerate() {
            assert!((values[i] - lambda).abs() < 1e-8 * lambda, "{} vs {lambda}", values[i]);
            assert!(vectors[i].iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8));
        }
        assert!(values.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn rank_one_gram() {
        let u: Vec<f64> = (0..8).map(|i| (i as f64 + 1.0).sin()).collect();
        let w: Vec<Vec<f64>> = (0..20).map(|r| u.iter().map(|x| x * (r as f64 - 9.5)).collect()).collect();
        let (values, _) = symmetric_eigen(&gram(&w)).unwrap();
        assert!(values[0] > 1e6 * values[1].abs().max(1e-300));
    }

    #[test]
    fn cosine_matrix_basics() {
        let mk = |id: &str, normal: Vec<f64>| SemanticDirection {
            id: id.into(),
            part: None,
            semantic: id.into(),
            normal,
            bias: 0.0,
            train_acc: None,
            heldout_acc: None,
            dist_std: 1.0,
            provenance: Provenance::LatNav,
            eigenvalue: None,
        };
        let single = DirectionBank::new("s", "h", vec![mk("a", vec![0.6, 0.8])]).unwrap();
        assert_eq!(cosine_similarity_matrix(&single).unwrap(), vec![vec![1.0]]);
        let pair = DirectionBank::new("s", "h", vec![mk("a", vec![0.6, 0.8]), mk("b", vec![-0.6, -0.8])]).unwrap();
        let m = cosine_similarity_matrix(&pair).unwrap();
        assert_eq!(m[0][1], -1.0);
        assert_eq!(m[1][0], m[0][1]);
        let empty = DirectionBank::new("s", "h", vec![]).unwrap();
        assert!(cosine_similarity_matrix(&empty).is_err());
    }

    #[test]
    fn pca_recovers_a_line() {
        let axis = [0.48, -0.6, 0.64];
        let mut g = crate::rng::seeded(3);
        let latents: Vec<Vec<f64>> = (0..200)
            .map(|_| {
                let t: f64 = StandardNormal.sample(&mut g);
                axis.iter().map(|a| 1.0 + 3.0 * t * a + 1e-3 * g.random::<f64>()).collect()
            })
            .collect();
        let bank = pca_baseline_directions(&latents, 3, "s", "h").unwrap();
        assert!(dot(&bank.directions[0].normal, &axis).abs() > 0.999);
        let v: Vec<Vec<f64>> = bank.directions.iter().map(|d| d.normal.clone()).collect();
        assert_orthonormal(&v);
        let ev: Vec<f64> = bank.directions.iter().map(|d| d.eigenvalue.unwrap()).collect();
        assert!(ev.windows(2).all(|p| p[0] >= p[1]));
        assert!((bank.directions[0].dist_std - ev[0].sqrt()).abs() < 1e-9 * ev[0].sqrt());
        assert!(pca_baseline_directions(&latents, 4, "s", "h").is_err());
    }

    #[test]
    fn closed_form_is_orthonormal() {
        let cfg = AeConfig { trunk: TrunkConfig { hidden: vec![8, 8], feat: 8 }, latent: 6, decoder_hidden: vec![16], input_points: 16, output_points: 8 };
        let mut ae = AutoEncoder::<f64>::new(&cfg, LatentSpace::Object, 1);
        let latents = random_matrix(30, 6, 2);
        let bank = closedform_baseline_directions(&ae.decoder, 6, &latents, "s", "h").unwrap();
        let v: Vec<Vec<f64>> = bank.directions.iter().map(|d| d.normal.clone()).collect();
        assert_orthonormal(&v);
        assert!(closedform_baseline_directions(&ae.decoder, 7, &latents, "s", "h").is_err());
        // Orthogonal square map: all eigenvalues equal.
        ae.decoder.layers[0].w = Array2::eye(6);
        let bank = closedform_baseline_directions(&ae.decoder, 6, &latents, "s", "h").unwrap();
        let v: Vec<Vec<f64>> = bank.directions.iter().map(|d| d.normal.clone()).collect();
        assert_orthonormal(&v);
        assert!(bank.directions.iter().all(|d| (d.eigenvalue.unwrap() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn matching_picks_best_oriented_direction() {
        let latents = random_matrix(50, 4, 4);
        let bank = pca_baseline_directions(&latents, 4, "s", "h").unwrap();
        let target = bank.directions[2].flipped();
        let m = match_baselines_to_semantics(&bank, &["legs/swivel".to_string()], |_, d| Ok(dot(&d.normal, &target.normal))).unwrap();
        let hit = &m["legs/swivel"];
        assert_eq!((hit.index, hit.sign), (2, -1));
        assert!((hit.score - 1.0).abs() < 1e-12);
        let empty = DirectionBank::new("s", "h", vec![]).unwrap();
        assert!(match_baselines_to_semantics(&empty, &[], |_, _| Ok(0.0)).is_err());
    }
}
