//! Log-space chain dynamic programs: forward, backward, marginals, and the
//! likelihood gradient.

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty or all
/// `-inf` input.
pub(crate) fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Per-position emission score rows (`n x l`): for each position, the sum
/// of emission weights of its active features, per label.
pub(crate) fn emission_scores(emission: &[f64], l: usize, active: &[Vec<u32>]) -> Vec<f64> {
    let n = active.len();
    let mut emit = vec![0.0; n * l];
    for (t, feats) in active.iter().enumerate() {
        let row = &mut emit[t * l..(t + 1) * l];
        for &f in feats {
            let base = f as usize * l;
            for (y, slot) in row.iter_mut().enumerate() {
                *slot += emission[base + y];
            }
        }
    }
    emit
}

/// Unnormalized score of one label path.
pub(crate) fn path_score(emit: &[f64], transition: &[f64], l: usize, path: &[usize]) -> f64 {
    let mut score = 0.0;
    for (t, &y) in path.iter().enumerate() {
        score += emit[t * l + y];
        if t > 0 {
            score += transition[path[t - 1] * l + y];
        }
    }
    score
}

/// Forward pass. Returns the `n x l` alpha table and `logZ`.
pub(crate) fn forward(emit: &[f64], transition: &[f64], l: usize) -> (Vec<f64>, f64) {
    let n = emit.len() / l;
    let mut alpha = vec![0.0; n * l];
    alpha[..l].copy_from_slice(&emit[..l]);
    let mut scratch = vec![0.0; l];
    for t in 1..n {
        for y in 0..l {
            for (a, slot) in scratch.iter_mut().enumerate() {
                *slot = alpha[(t - 1) * l + a] + transition[a * l + y];
            }
            alpha[t * l + y] = logsumexp(&scratch) + emit[t * l + y];
        }
    }
    let log_z = logsumexp(&alpha[(n - 1) * l..]);
    (alpha, log_z)
}

/// Backward pass. Returns the `n x l` beta table and `logZ` computed from
/// the front, which must agree with the forward value.
pub(crate) fn backward(emit: &[f64], transition: &[f64], l: usize) -> (Vec<f64>, f64) {
    let n = emit.len() / l;
    let mut beta = vec![0.0; n * l];
    let mut scratch = vec![0.0; l];
    for t in (0..n - 1).rev() {
        for a in 0..l {
            for (y, slot) in scratch.iter_mut().enumerate() {
                *slot = transition[a * l + y] + emit[(t + 1) * l + y] + beta[(t + 1) * l + y];
            }
            beta[t * l + a] = logsumexp(&scratch);
        }
    }
    for (y, slot) in scratch.iter_mut().enumerate() {
        *slot = emit[y] + beta[y];
    }
    let log_z = logsumexp(&scratch);
    (beta, log_z)
}

/// Position marginals `p(y_t = y | x)`, row-major `n x l`.
pub(crate) fn position_marginals(emit: &[f64], transition: &[f64], l: usize) -> Vec<f64> {
    let n = emit.len() / l;
    let (alpha, log_z) = forward(emit, transition, l);
    let (beta, _) = backward(emit, transition, l);
    let mut gamma = vec![0.0; n * l];
    for t in 0..n {
        for y in 0..l {
            gamma[t * l + y] = (alpha[t * l + y] + beta[t * l + y] - log_z).exp();
        }
    }
    gamma
}

/// Adds the gradient of `log p(gold | x)` into the accumulators and
/// returns the sequence log-likelihood.
///
/// Emission gradient: empirical feature counts minus position marginals;
/// transition gradient: empirical transition counts minus pairwise
/// marginals from forward-backward.
pub(crate) fn accumulate_gradient(
    active: &[Vec<u32>],
    gold: &[usize],
    emission: &[f64],
    transition: &[f64],
    l: usize,
    g_emission: &mut [f64],
    g_transition: &mut [f64],
) -> f64 {
    let n = active.len();
    let emit = emission_scores(emission, l, active);
    let (alpha, log_z) = forward(&emit, transition, l);
    let (beta, _) = backward(&emit, transition, l);

    // Emission part.
    let mut gamma = vec![0.0; l];
    for t in 0..n {
        for y in 0..l {
            gamma[y] = (alpha[t * l + y] + beta[t * l + y] - log_z).exp();
        }
        for &f in &active[t] {
            let base = f as usize * l;
            g_emission[base + gold[t]] += 1.0;
            for y in 0..l {
                g_emission[base + y] -= gamma[y];
            }
        }
    }

    // Transition part.
    for t in 1..n {
        g_transition[gold[t - 1] * l + gold[t]] += 1.0;
        for a in 0..l {
            let alpha_a = alpha[(t - 1) * l + a];
            for b in 0..l {
                let xi = (alpha_a + transition[a * l + b] + emit[t * l + b] + beta[t * l + b]
                    - log_z)
                    .exp();
                g_transition[a * l + b] -= xi;
            }
        }
    }

    path_score(&emit, transition, l, gold) - log_z
}
