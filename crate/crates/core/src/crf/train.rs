//! Mini-batch stochastic gradient ascent on the regularized conditional
//! log-likelihood.
//!
//! Objective over `N` sequences: `sum_i ll_i - (l2 / 2) * ||w||^2`.
//! Each batch applies `w += rate_e * (mean_batch_grad - (l2 / N) * w)`,
//! with inverse-time decay `rate_e = learning_rate / (1 + decay * epoch)`.
//! Everything is seeded, so identical inputs give identical weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{accumulate_gradient, CrfError, CrfModel, FeatureDict, Hyperparams, LabelSet, LabeledSequence};

pub(super) fn train(
    labels: LabelSet,
    data: &[LabeledSequence],
    hyper: Hyperparams,
) -> Result<CrfModel, CrfError> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(CrfError::NoTrainingData);
    }
    let dict = FeatureDict::from_sequences(data);
    if dict.is_empty() {
        return Err(CrfError::EmptyFeatureSpace);
    }
    let l = labels.len();

    // Index every sequence once up front.
    let mut indexed: Vec<(Vec<Vec<u32>>, Vec<usize>)> = Vec::with_capacity(data.len());
    for seq in data {
        let active: Vec<Vec<u32>> = seq
            .features()
            .iter()
            .map(|fmap| fmap.feature_strings().filter_map(|n| dict.lookup(&n)).collect())
            .collect();
        let gold: Vec<usize> = seq
            .labels()
            .iter()
            .map(|lab| labels.index_of(lab).ok_or_else(|| CrfError::UnknownLabel(lab.clone())))
            .collect::<Result<_, _>>()?;
        indexed.push((active, gold));
    }

    let n_total = data.len();
    let mut emission = vec![0.0; dict.len() * l];
    let mut transition = vec![0.0; l * l];
    let mut g_emission = vec![0.0; emission.len()];
    let mut g_transition = vec![0.0; transition.len()];

    let mut order: Vec<usize> = (0..n_total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    for epoch in 0..hyper.epochs {
        let rate = hyper.learning_rate / (1.0 + hyper.decay * epoch as f64);
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            g_emission.iter_mut().for_each(|g| *g = 0.0);
            g_transition.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (active, gold) = &indexed[i];
                accumulate_gradient(
                    active,
                    gold,
                    &emission,
                    &transition,
                    l,
                    &mut g_emission,
                    &mut g_transition,
                );
            }
            let scale = rate / batch.len() as f64;
            let shrink = rate * hyper.l2 / n_total as f64;
            for (w, g) in emission.iter_mut().zip(&g_emission) {
                *w += scale * g - shrink * *w;
            }
            for (w, g) in transition.iter_mut().zip(&g_transition) {
                *w += scale * g - shrink * *w;
            }
        }
    }

    CrfModel::from_parts(labels, dict, emission, transition, hyper)
}
