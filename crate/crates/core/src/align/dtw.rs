use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::inpaint::FrameInterval;

/// Monotone alignment from `(0, 0)` to `(M - 1, N - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwPath {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl DtwPath {
    /// Every step advances `i`, `j`, or both by exactly one.
    pub fn is_legal(&self, m: usize, n: usize) -> bool {
        let (Some(&first), Some(&last)) = (self.pairs.first(), self.pairs.last()) else {
            return false;
        };
        first == (0, 0)
            && last == (m - 1, n - 1)
            && self.pairs.windows(2).all(|w| {
                let (di, dj) = (w[1].0 - w[0].0, w[1].1.wrapping_sub(w[0].1));
                matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
            })
    }

    fn source_len(&self) -> usize {
        self.pairs.last().map_or(0, |p| p.0 + 1)
    }
}

/// DTW under Euclidean frame distance with steps (1,0), (0,1), (1,1) and
/// no step weights. `band`, when set, limits `|j - i * (N-1)/(M-1)|`.
pub fn dtw_align(a: &EmbeddingSequence, b: &EmbeddingSequence) -> Result<DtwPath> {
    dtw_align_banded(a, b, None)
}

pub fn dtw_align_banded(
    a: &EmbeddingSequence,
    b: &EmbeddingSequence,
    band: Option<usize>,
) -> Result<DtwPath> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    dtw_with_cost(a.n_frames(), b.n_frames(), band, |i, j| {
        a.frame(i)
            .iter()
            .zip(b.frame(j))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    })
}

/// DTW over an arbitrary local cost. Backtracking prefers the diagonal
/// step, then `(1, 0)`, on ties.
pub fn dtw_with_cost(
    m: usize,
    n: usize,
    band: Option<usize>,
    cost: impl Fn(usize, usize) -> f64,
) -> Result<DtwPath> {
    if m == 0 || n == 0 {
        return Err(Error::EmptySequence);
    }
    let allowed = |i: usize, j: usize| match band {
        None => true,
        Some(w) => {
            let center = if m > 1 {
                i as f64 * (n - 1) as f64 / (m - 1) as f64
            } else {
                0.0
            };
            (j as f64 - center).abs() <= w as f64
        }
    };
    let idx = |i: usize, j: usize| i * n + j;
    let mut acc = vec![f64::INFINITY; m * n];
    for i in 0..m {
        for j in 0..n {
            if !allowed(i, j) && !(i == 0 && j == 0) && !(i == m - 1 && j == n - 1) {
                continue;
            }
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[idx(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[idx(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[idx(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[idx(i, j)] = best + cost(i, j);
        }
    }
    let total_cost = acc[idx(m - 1, n - 1)];
    if !total_cost.is_finite() {
        return Err(Error::InvalidArgument("no path inside the DTW band".into()));
    }

    let mut pairs = vec![(m - 1, n - 1)];
    let (mut i, mut j) = (m - 1, n - 1);
    while i > 0 || j > 0 {
        let mut step = None;
        let mut best = f64::INFINITY;
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            if i < di || j < dj {
                continue;
            }
            let v = acc[idx(i - di, j - dj)];
            if v < best {
                best = v;
                step = Some((di, dj));
            }
        }
        let (di, dj) = step.expect("a finite cell has a finite predecessor");
        i -= di;
        j -= dj;
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(DtwPath { pairs, total_cost })
}

/// Range of target frames aligned with the source frames `src`.
pub fn map_interval(path: &DtwPath, src: FrameInterval) -> Result<FrameInterval> {
    let len = path.source_len();
    if src.first > src.last || src.last >= len {
        return Err(Error::IntervalOutsidePath {
            first: src.first,
            last: src.last,
            len,
        });
    }
    let (first, last) = path
        .pairs
        .iter()
        .filter(|(i, _)| (src.first..=src.last).contains(i))
        .fold((usize::MAX, 0), |(lo, hi), &(_, j)| (lo.min(j), hi.max(j)));
    Ok(FrameInterval { first, last })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(a: &[f64], b: &[f64]) -> DtwPath {
        dtw_with_cost(a.len(), b.len(), None, |i, j| (a[i] - b[j]).abs()).unwrap()
    }

    #[test]
    fn identical_sequences_follow_the_diagonal() {
        let a = [0.0, 3.0, 1.0, 4.0];
        let p = one_d(&a, &a);
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn repeated_value_is_absorbed() {
        let p = one_d(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0, 2.0]);
        assert_eq!(p.total_cost, 0.0);
        assert_eq!(p.pairs, vec![(0, 0), (1, 1), (1, 2), (2, 3)]);
        assert!(p.is_legal(3, 4));
    }

    #[test]
    fn empty_and_mismatch() {
        assert!(matches!(
            dtw_with_cost(0, 3, None, |_, _| 0.0),
            Err(Error::EmptySequence)
        ));
        let g = crate::inpaint::FrameGeometry::default();
        let a = EmbeddingSequence::from_rows(&[vec![0.0, 1.0]], g).unwrap();
        let b = EmbeddingSequence::from_rows(&[vec![0.0]], g).unwrap();
        assert!(matches!(dtw_align(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn band_keeps_path_near_diagonal() {
        let a: Vec<f64> = (0..20).map(|i| (i % 5) as f64).collect();
        let b: Vec<f64> = (0..25).map(|i| (i % 7) as f64).collect();
        let p = dtw_with_cost(20, 25, Some(2), |i, j| (a[i] - b[j]).abs()).unwrap();
        assert!(p.is_legal(20, 25));
        for &(i, j) in &p.pairs {
            let c = i as f64 * 24.0 / 19.0;
            assert!((j as f64 - c).abs() <= 2.0 || (i, j) == (0, 0) || (i, j) == (19, 24));
        }
    }

    #[test]
    fn interval_mapping() {
        let diag = DtwPath {
            pairs: vec![(0, 0), (1, 1), (2, 2)],
            total_cost: 0.0,
        };
        let m = map_interval(&diag, FrameInterval { first: 1, last: 2 }).unwrap();
        assert_eq!((m.first, m.last), (1, 2));
        let p = DtwPath {
            pairs: vec![(0, 0), (1, 1), (1, 2), (2, 3)],
            total_cost: 0.0,
        };
        let m = map_interval(&p, FrameInterval { first: 1, last: 1 }).unwrap();
        assert_eq!((m.first, m.last), (1, 2));
        assert!(map_interval(&p, FrameInterval { first: 2, last: 3 }).is_err());
    }
}
