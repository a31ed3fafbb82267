// label-indexed DP tables read better with explicit indices
#![allow(clippy::needless_range_loop)]

use crate::encode::TokenFeatures;
use crate::targeting::{first_bio_violation, TagLabel};

use super::{sigmoid, softplus, CrfModel, Param, TaggerError, NUM_LABELS as L};

type Row = [f64; L];

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check(model: &CrfModel, x: &TokenFeatures) -> Result<(), TaggerError> {
    if x.tokens.is_empty() {
        return Err(TaggerError::EmptySequence);
    }
    let dim = model.feature_dim;
    for (position, fs) in x.tokens.iter().enumerate() {
        if let Some(&index) = fs.iter().find(|&&f| f as usize >= dim) {
            return Err(TaggerError::FeatureOutOfRange {
                index,
                position,
                dim,
            });
        }
    }
    if let Some(&index) = x.pooled.iter().find(|&&f| f as usize >= dim) {
        return Err(TaggerError::FeatureOutOfRange {
            index,
            position: usize::MAX,
            dim,
        });
    }
    Ok(())
}

pub(crate) fn emissions(model: &CrfModel, x: &TokenFeatures) -> Vec<Row> {
    x.tokens
        .iter()
        .map(|fs| {
            let mut row = [0.0; L];
            for &f in fs {
                for (r, w) in row.iter_mut().zip(model.emission_row(f)) {
                    *r += w;
                }
            }
            row
        })
        .collect()
}

pub fn score_path(
    model: &CrfModel,
    x: &TokenFeatures,
    labels: &[TagLabel],
) -> Result<f64, TaggerError> {
    check(model, x)?;
    if labels.len() != x.len() {
        return Err(TaggerError::LengthMismatch {
            labels: labels.len(),
            tokens: x.len(),
        });
    }
    Ok(path_score(model, &emissions(model, x), labels))
}

fn path_score(model: &CrfModel, em: &[Row], labels: &[TagLabel]) -> f64 {
    let y: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let mut s = model.start(y[0]) + model.stop(y[y.len() - 1]);
    for t in 0..y.len() {
        s += em[t][y[t]];
        if t > 0 {
            s += model.transition(y[t - 1], y[t]);
        }
    }
    s
}

fn forward(model: &CrfModel, em: &[Row]) -> (Vec<Row>, f64) {
    let n = em.len();
    let mut alpha = vec![[0.0; L]; n];
    for y in 0..L {
        alpha[0][y] = model.start(y) + em[0][y];
    }
    let mut buf = [0.0; L];
    for t in 1..n {
        for y in 0..L {
            for a in 0..L {
                buf[a] = alpha[t - 1][a] + model.transition(a, y);
            }
            alpha[t][y] = em[t][y] + log_sum_exp(&buf);
        }
    }
    for y in 0..L {
        buf[y] = alpha[n - 1][y] + model.stop(y);
    }
    (alpha, log_sum_exp(&buf))
}

fn backward(model: &CrfModel, em: &[Row]) -> Vec<Row> {
    let n = em.len();
    let mut beta = vec![[0.0; L]; n];
    for y in 0..L {
        beta[n - 1][y] = model.stop(y);
    }
    let mut buf = [0.0; L];
    for t in (0..n - 1).rev() {
        for a in 0..L {
            for b in 0..L {
                buf[b] = model.transition(a, b) + em[t + 1][b] + beta[t + 1][b];
            }
            beta[t][a] = log_sum_exp(&buf);
        }
    }
    beta
}

/// Log of the sum of `exp(score_path)` over all label paths.
pub fn log_partition(model: &CrfModel, x: &TokenFeatures) -> Result<f64, TaggerError> {
    check(model, x)?;
    let (_, log_z) = forward(model, &emissions(model, x));
    if !log_z.is_finite() {
        return Err(TaggerError::NonFinite {
            what: "log partition",
            position: x.len() - 1,
        });
    }
    Ok(log_z)
}

/// Posterior marginals. `edge[t - 1][a][b]` is `P(y[t-1] = a, y[t] = b)`.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub log_z: f64,
    pub node: Vec<Row>,
    pub edge: Vec<[Row; L]>,
}

fn marginals_from(model: &CrfModel, em: &[Row]) -> Result<Marginals, TaggerError> {
    let (alpha, log_z) = forward(model, em);
    if !log_z.is_finite() {
        return Err(TaggerError::NonFinite {
            what: "log partition",
            position: em.len() - 1,
        });
    }
    let beta = backward(model, em);
    let mut node = vec![[0.0; L]; em.len()];
    for t in 0..em.len() {
        for y in 0..L {
            node[t][y] = (alpha[t][y] + beta[t][y] - log_z).exp();
        }
        if node[t].iter().any(|p| !p.is_finite()) {
            return Err(TaggerError::NonFinite {
                what: "marginal",
                position: t,
            });
        }
    }
    let mut edge = vec![[[0.0; L]; L]; em.len().saturating_sub(1)];
    for t in 1..em.len() {
        for a in 0..L {
            for b in 0..L {
                edge[t - 1][a][b] =
                    (alpha[t - 1][a] + model.transition(a, b) + em[t][b] + beta[t][b] - log_z)
                        .exp();
            }
        }
    }
    Ok(Marginals { log_z, node, edge })
}

pub fn forward_backward(model: &CrfModel, x: &TokenFeatures) -> Result<Marginals, TaggerError> {
    check(model, x)?;
    marginals_from(model, &emissions(model, x))
}

fn check_gold(x: &TokenFeatures, gold: &[TagLabel]) -> Result<(), TaggerError> {
    if gold.len() != x.len() {
        return Err(TaggerError::LengthMismatch {
            labels: gold.len(),
            tokens: x.len(),
        });
    }
    if let Some(i) = first_bio_violation(gold) {
        return Err(TaggerError::InvalidGold(i));
    }
    Ok(())
}

fn classifier_loss(model: &CrfModel, x: &TokenFeatures, has_definition: bool) -> (f64, f64) {
    let z = model.classifier_logit(&x.pooled);
    let y = if has_definition { 1.0 } else { 0.0 };
    (softplus(z) - y * z, sigmoid(z) - y)
}

/// Joint loss of one sample without the L2 term.
pub(crate) fn sample_objective(
    model: &CrfModel,
    x: &TokenFeatures,
    gold: &[TagLabel],
    has_definition: bool,
    lambda: f64,
) -> Result<f64, TaggerError> {
    let em = emissions(model, x);
    let (_, log_z) = forward(model, &em);
    let (bce, _) = classifier_loss(model, x, has_definition);
    Ok(log_z - path_score(model, &em, gold) + lambda * bce)
}

/// Joint loss of one sample without the L2 term, plus its gradient as
/// `(parameter index, value)` pairs. Indices may repeat; callers sum them.
pub(crate) fn sample_loss_and_gradient(
    model: &CrfModel,
    x: &TokenFeatures,
    gold: &[TagLabel],
    has_definition: bool,
    lambda: f64,
) -> Result<(f64, Vec<(usize, f64)>), TaggerError> {
    let em = emissions(model, x);
    let m = marginals_from(model, &em)?;
    let y: Vec<usize> = gold.iter().map(|l| l.index()).collect();
    let n = y.len();
    let mut grad = Vec::with_capacity(x.tokens.iter().map(Vec::len).sum::<usize>() * L + 64);

    for t in 0..n {
        let mut d = m.node[t];
        d[y[t]] -= 1.0;
        for &f in &x.tokens[t] {
            let base = f as usize * L;
            for (k, v) in d.iter().enumerate() {
                grad.push((base + k, *v));
            }
        }
    }
    let mut trans = [[0.0; L]; L];
    for t in 1..n {
        for a in 0..L {
            for b in 0..L {
                trans[a][b] += m.edge[t - 1][a][b];
            }
        }
        trans[y[t - 1]][y[t]] -= 1.0;
    }
    for a in 0..L {
        for b in 0..L {
            grad.push((model.index(Param::Transition(a, b)), trans[a][b]));
        }
    }
    for k in 0..L {
        let obs_start = if y[0] == k { 1.0 } else { 0.0 };
        let obs_stop = if y[n - 1] == k { 1.0 } else { 0.0 };
        grad.push((model.index(Param::Start(k)), m.node[0][k] - obs_start));
        grad.push((model.index(Param::Stop(k)), m.node[n - 1][k] - obs_stop));
    }

    let (bce, dz) = classifier_loss(model, x, has_definition);
    if lambda != 0.0 {
        let g = lambda * dz;
        for &f in &x.pooled {
            grad.push((model.index(Param::Classifier(f as usize)), g));
        }
        grad.push((model.index(Param::Bias), g));
    }

    let loss = m.log_z - path_score(model, &em, gold) + lambda * bce;
    if !loss.is_finite() {
        return Err(TaggerError::NonFinite {
            what: "loss",
            position: n - 1,
        });
    }
    Ok((loss, grad))
}

/// Full joint loss of one sample, including `l2/2 * |w|^2`, and its dense
/// gradient.
pub fn neg_log_likelihood_and_gradient(
    model: &CrfModel,
    x: &TokenFeatures,
    gold: &[TagLabel],
    has_definition: bool,
    lambda: f64,
    l2: f64,
) -> Result<(f64, Vec<f64>), TaggerError> {
    check(model, x)?;
    check_gold(x, gold)?;
    let (mut loss, sparse) = sample_loss_and_gradient(model, x, gold, has_definition, lambda)?;
    let mut grad = vec![0.0; model.num_params()];
    for (i, v) in sparse {
        grad[i] += v;
    }
    if l2 != 0.0 {
        let w = model.weights();
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad.iter_mut().zip(w) {
            *g += l2 * v;
        }
    }
    Ok((loss, grad))
}

/// Best label path and its score. With `constrained`, paths that enter `I-X`
/// from anything but `B-X`/`I-X`, or start with `I-X`, are excluded. Ties go
/// to the lowest label index.
pub fn viterbi_decode(
    model: &CrfModel,
    x: &TokenFeatures,
    constrained: bool,
) -> Result<(Vec<TagLabel>, f64), TaggerError> {
    check(model, x)?;
    Ok(viterbi(model, &emissions(model, x), constrained))
}

pub(crate) fn viterbi(model: &CrfModel, em: &[Row], constrained: bool) -> (Vec<TagLabel>, f64) {
    let allowed = |prev: Option<usize>, y: usize| {
        !constrained || TagLabel::from_index(y).may_follow(prev.map(TagLabel::from_index))
    };
    let n = em.len();
    let mut delta = vec![[f64::NEG_INFINITY; L]; n];
    let mut back = vec![[0usize; L]; n];
    for y in 0..L {
        if allowed(None, y) {
            delta[0][y] = model.start(y) + em[0][y];
        }
    }
    for t in 1..n {
        for y in 0..L {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for a in 0..L {
                if !allowed(Some(a), y) {
                    continue;
                }
                let v = delta[t - 1][a] + model.transition(a, y);
                if v > best {
                    best = v;
                    arg = a;
                }
            }
            delta[t][y] = best + em[t][y];
            back[t][y] = arg;
        }
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for y in 0..L {
        let v = delta[n - 1][y] + model.stop(y);
        if v > best {
            best = v;
            last = y;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for t in (1..n).rev() {
        path[t - 1] = back[t][path[t]];
    }
    (path.into_iter().map(TagLabel::from_index).collect(), best)
}
