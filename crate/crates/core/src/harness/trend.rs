use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendResult {
    pub rho: f64,
    /// One-sided exact permutation p-value in the expected direction.
    pub p_value: f64,
}

/// Ranks starting at 1, ties get their average rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Dimension("spearman needs two equally long series of length >= 2".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("spearman needs finite values".into()));
    }
    Ok(pearson(&ranks(x), &ranks(y)))
}

const MAX_EXACT: usize = 10;

/// Spearman correlation with an exact one-sided p-value: the share of all
/// orderings of `y` whose correlation with `x` is at least as extreme.
pub fn trend_test(x: &[f64], y: &[f64], dir: Direction) -> Result<TrendResult> {
    let rho = spearman(x, y)?;
    if x.len() > MAX_EXACT {
        return Err(Error::Domain(format!("exact permutation test supports at most {MAX_EXACT} points")));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let sign = if dir == Direction::Increasing { 1.0 } else { -1.0 };
    let observed = sign * rho - 1e-12;
    let mut perm = ry.clone();
    let n = perm.len();
    let (mut hits, mut total) = (0u64, 0u64);
    let mut count = |p: &[f64]| {
        total += 1;
        if sign * pearson(&rx, p) >= observed {
            hits += 1;
        }
    };
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    count(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            count(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(TrendResult { rho, p_value: hits as f64 / total as f64 })
}
