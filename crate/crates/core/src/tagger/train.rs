use log::{debug, info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{TokenEncoder, TokenFeatures};
use crate::eval;
use crate::targeting::{TagLabel, TargetSample};

use super::crf::{emissions, viterbi};
use super::{sample_loss_and_gradient, sample_objective, CrfModel, TaggerError, TrainConfig};

struct Encoded {
    x: TokenFeatures,
    gold: Vec<TagLabel>,
    has_definition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// mean joint loss over the training set plus the L2 term, after the epoch
    pub objective: f64,
    pub dev_macro_f1: Option<f64>,
    pub improved: bool,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: CrfModel,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub truncated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub labels: Vec<TagLabel>,
    pub has_definition_prob: f64,
}

fn encode_labeled(
    samples: &[TargetSample],
    encoder: &dyn TokenEncoder,
    max_len: Option<usize>,
) -> Result<(Vec<Encoded>, usize), TaggerError> {
    let encoded: Vec<Option<(Encoded, bool)>> = samples
        .par_iter()
        .map(|s| {
            let labels = s.labels.as_ref().ok_or_else(|| TaggerError::Unlabeled {
                sentence_id: s.sentence_id.clone(),
                sample_index: s.sample_index,
            })?;
            if s.tokens.is_empty() {
                return Ok(None);
            }
            let mut x = encoder.encode(s)?;
            let mut gold = labels.clone();
            let mut cut = false;
            if let Some(m) = max_len.filter(|&m| x.len() > m) {
                x.truncate(m);
                gold.truncate(m);
                cut = true;
            }
            Ok(Some((
                Encoded {
                    x,
                    gold,
                    has_definition: s.has_definition,
                },
                cut,
            )))
        })
        .collect::<Result<_, TaggerError>>()?;
    let truncated = encoded.iter().flatten().filter(|(_, c)| *c).count();
    Ok((
        encoded.into_iter().flatten().map(|(e, _)| e).collect(),
        truncated,
    ))
}

fn check_encoder(model: &CrfModel, encoder: &dyn TokenEncoder) -> Result<(), TaggerError> {
    if model.feature_dim != encoder.feature_dim() {
        return Err(TaggerError::Mismatch(format!(
            "model feature_dim {} but encoder has {}",
            model.feature_dim,
            encoder.feature_dim()
        )));
    }
    if model.dictionary_hash != encoder.fingerprint() {
        return Err(TaggerError::Mismatch(
            "dictionary hash differs from the one the model was trained with".into(),
        ));
    }
    Ok(())
}

fn objective(model: &CrfModel, data: &[Encoded], config: &TrainConfig) -> Result<f64, TaggerError> {
    let losses: Vec<f64> = data
        .par_iter()
        .map(|e| {
            sample_objective(
                model,
                &e.x,
                &e.gold,
                e.has_definition,
                config.classifier_loss_weight,
            )
        })
        .collect::<Result<_, _>>()?;
    let mean = losses.iter().sum::<f64>() / data.len() as f64;
    let reg = 0.5 * config.l2_lambda * model.weights().iter().map(|w| w * w).sum::<f64>();
    Ok(mean + reg)
}

fn decode(model: &CrfModel, x: &TokenFeatures) -> Vec<TagLabel> {
    if x.is_empty() {
        return Vec::new();
    }
    viterbi(model, &emissions(model, x), true).0
}

/// Mini-batch AdaGrad on the joint objective. After every epoch the dev set
/// is decoded and the model with the best dev macro F1 is kept (lowest
/// training objective when there is no dev set).
pub fn train(
    train: &[TargetSample],
    dev: &[TargetSample],
    encoder: &dyn TokenEncoder,
    config: &TrainConfig,
) -> Result<TrainReport, TaggerError> {
    config.validate()?;
    let (data, truncated) = encode_labeled(train, encoder, Some(config.max_seq_len))?;
    if data.is_empty() {
        return Err(TaggerError::EmptyTrainingSet);
    }
    if truncated > 0 {
        warn!(
            "{truncated} training samples longer than {} tokens were truncated",
            config.max_seq_len
        );
    }
    let (dev_data, _) = encode_labeled(dev, encoder, None)?;
    let dev_gold: Vec<Vec<TagLabel>> = dev_data.iter().map(|e| e.gold.clone()).collect();
    let dev_counts: Vec<usize> = dev
        .iter()
        .filter(|s| !s.tokens.is_empty())
        .map(TargetSample::symbol_count)
        .collect();

    let mut model = CrfModel::zeros(encoder.feature_dim(), encoder.fingerprint());
    let p = model.num_params();
    let mut sq_sum = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut touched = vec![false; p];
    let mut touched_list: Vec<usize> = Vec::new();
    let mut active = vec![false; p];
    let mut active_list: Vec<usize> = Vec::new();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lambda = config.classifier_loss_weight;

    let mut best: Option<(f64, CrfModel, usize)> = None;
    let mut since_best = 0;
    let mut history = Vec::new();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let results: Vec<_> = chunk
                .par_iter()
                .map(|&i| {
                    let e = &data[i];
                    sample_loss_and_gradient(&model, &e.x, &e.gold, e.has_definition, lambda)
                })
                .collect();
            let scale = 1.0 / chunk.len() as f64;
            let mut loss = 0.0;
            for r in results {
                let (l, g) = r.map_err(|_| TaggerError::Diverged {
                    epoch,
                    batch,
                    loss: f64::NAN,
                })?;
                loss += l;
                for (i, v) in g {
                    if !touched[i] {
                        touched[i] = true;
                        touched_list.push(i);
                    }
                    grad[i] += v * scale;
                }
            }
            if !loss.is_finite() {
                return Err(TaggerError::Diverged { epoch, batch, loss });
            }
            for &i in &touched_list {
                touched[i] = false;
                if !active[i] {
                    active[i] = true;
                    active_list.push(i);
                }
            }
            touched_list.clear();

            // weights outside the active set are zero, so their L2 gradient is too
            let w = model.weights_mut();
            for &i in &active_list {
                let g = grad[i] + config.l2_lambda * w[i];
                grad[i] = 0.0;
                if g != 0.0 {
                    sq_sum[i] += g * g;
                    w[i] -= config.learning_rate * g / (sq_sum[i].sqrt() + config.adagrad_epsilon);
                }
            }
            debug!("epoch {epoch} batch {batch} loss {:.6}", loss * scale);
        }

        let obj = objective(&model, &data, config)?;
        if !obj.is_finite() {
            return Err(TaggerError::Diverged {
                epoch,
                batch: usize::MAX,
                loss: obj,
            });
        }
        let dev_f1 = if dev_data.is_empty() {
            None
        } else {
            let preds: Vec<Vec<TagLabel>> =
                dev_data.par_iter().map(|e| decode(&model, &e.x)).collect();
            let report = eval::evaluate(&dev_gold, &preds, &dev_counts)
                .map_err(|e| TaggerError::Config(format!("dev evaluation failed: {e}")))?;
            Some(report.macro_f1)
        };
        // higher is better
        let score = dev_f1.unwrap_or(-obj);
        let improved = best.as_ref().is_none_or(|(s, _, _)| score > *s);
        if improved {
            best = Some((score, model.clone(), epoch));
            since_best = 0;
        } else {
            since_best += 1;
        }
        info!(
            "epoch {epoch}: objective {obj:.6}{}{}",
            dev_f1
                .map(|f| format!(", dev macro F1 {f:.4}"))
                .unwrap_or_default(),
            if improved { " *" } else { "" }
        );
        history.push(EpochRecord {
            epoch,
            objective: obj,
            dev_macro_f1: dev_f1,
            improved,
        });
        if config.patience.is_some_and(|pat| since_best >= pat) {
            info!("no improvement for {since_best} epochs, stopping");
            break;
        }
    }

    let (_, model, best_epoch) = best.expect("at least one epoch ran");
    Ok(TrainReport {
        model,
        best_epoch,
        history,
        truncated,
    })
}

/// Constrained Viterbi labels and the classifier probability per sample.
/// With `gate`, samples whose probability is below 0.5 have their DEF tags
/// replaced by `O`.
pub fn predict(
    model: &CrfModel,
    samples: &[TargetSample],
    encoder: &dyn TokenEncoder,
    gate: bool,
) -> Result<Vec<Prediction>, TaggerError> {
    check_encoder(model, encoder)?;
    samples
        .par_iter()
        .map(|s| {
            let x = encoder.encode(s)?;
            let prob = model.classifier_probability(&x.pooled);
            let mut labels = decode(model, &x);
            if gate && prob < 0.5 {
                for l in labels.iter_mut().filter(|l| l.is_def()) {
                    *l = TagLabel::O;
                }
            }
            Ok(Prediction {
                labels,
                has_definition_prob: prob,
            })
        })
        .collect()
}
