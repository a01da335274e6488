//! Max-product decoding.

/// Highest-scoring path over the lattice. `init_mask`, when given, is
/// added to the first position's scores (`-inf` entries forbid starting
/// labels). Ties break toward the lowest label index: a candidate only
/// replaces the incumbent when strictly better.
pub(crate) fn decode(
    emit: &[f64],
    transition: &[f64],
    l: usize,
    init_mask: Option<&[f64]>,
) -> Vec<usize> {
    let n = emit.len() / l;
    if n == 0 {
        return Vec::new();
    }
    let mut delta = vec![f64::NEG_INFINITY; n * l];
    let mut back = vec![0usize; n * l];
    for y in 0..l {
        let mask = init_mask.map(|m| m[y]).unwrap_or(0.0);
        delta[y] = emit[y] + mask;
    }
    for t in 1..n {
        for y in 0..l {
            let mut best_prev = 0usize;
            let mut best = f64::NEG_INFINITY;
            for a in 0..l {
                let cand = delta[(t - 1) * l + a] + transition[a * l + y];
                if cand > best {
                    best = cand;
                    best_prev = a;
                }
            }
            delta[t * l + y] = best + emit[t * l + y];
            back[t * l + y] = best_prev;
        }
    }

    let mut last = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (y, &score) in delta[(n - 1) * l..].iter().enumerate() {
        if score > best {
            best = score;
            last = y;
        }
    }
    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for t in (0..n - 1).rev() {
        path[t] = back[(t + 1) * l + path[t + 1]];
    }
    path
}
