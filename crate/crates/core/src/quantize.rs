//! Codebooks: k-means training, nearest-centroid and cosine quantization,
//! and centroid lookup.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::inpaint::FrameGeometry;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

/// Dense row-major matrix mapping `cols`-dim inputs to `rows`-dim outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Projection {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodebookKind {
    Euclidean,
    /// Softmax over cosine similarities between `projection * z` and each
    /// centroid, scaled by `1 / temperature`.
    Cosine {
        projection: Projection,
        temperature: f64,
    },
}

/// `K x D` centroid matrix plus the rule used to assign frames to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centroids: Vec<f64>,
    k: usize,
    dim: usize,
    kind: CodebookKind,
}

impl Codebook {
    pub fn euclidean(centroids: Vec<f64>, dim: usize) -> Result<Self> {
        Self::new(centroids, dim, CodebookKind::Euclidean)
    }

    pub fn cosine(
        centroids: Vec<f64>,
        dim: usize,
        projection: Projection,
        temperature: f64,
    ) -> Result<Self> {
        Self::new(
            centroids,
            dim,
            CodebookKind::Cosine {
                projection,
                temperature,
            },
        )
    }

    pub fn new(centroids: Vec<f64>, dim: usize, kind: CodebookKind) -> Result<Self> {
        if dim == 0 || centroids.is_empty() || !centroids.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} centroid values do not form K >= 1 rows of {dim}",
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook"));
        }
        let k = centroids.len() / dim;
        if let CodebookKind::Cosine {
            projection,
            temperature,
        } = &kind
        {
            if projection.rows != dim || projection.data.len() != projection.rows * projection.cols
            {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: projection.rows,
                });
            }
            if projection.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("projection"));
            }
            if !(*temperature > 0.0 && temperature.is_finite()) {
                return Err(Error::InvalidArgument("temperature must be positive".into()));
            }
            if centroids.chunks_exact(dim).any(|c| c.iter().all(|v| *v == 0.0)) {
                return Err(Error::InvalidArgument(
                    "cosine codebook has a zero centroid".into(),
                ));
            }
        }
        Ok(Self {
            centroids,
            k,
            dim,
            kind,
        })
    }

    /// Cosine codebook sharing this codebook's centroids.
    pub fn into_cosine(self, projection: Projection, temperature: f64) -> Result<Self> {
        Self::cosine(self.centroids, self.dim, projection, temperature)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &CodebookKind {
        &self.kind
    }

    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    /// Input dimension expected by the quantization rule.
    pub fn input_dim(&self) -> usize {
        match &self.kind {
            CodebookKind::Euclidean => self.dim,
            CodebookKind::Cosine { projection, .. } => projection.cols,
        }
    }
}

/// Per-frame codebook indices with the geometry of their source frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSequence {
    pub indices: Vec<u32>,
    pub k: usize,
    pub geometry: FrameGeometry,
}

impl UnitSequence {
    pub fn new(indices: Vec<u32>, k: usize, geometry: FrameGeometry) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= k) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                k,
            });
        }
        Ok(Self {
            indices,
            k,
            geometry,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            indices: self.indices[range].to_vec(),
            k: self.k,
            geometry: self.geometry,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest row of `centroids` (ties to the lowest index).
fn nearest(x: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Nearest centroid by squared Euclidean distance, ties to the lowest index.
pub fn vq_nearest(z: &EmbeddingSequence, cb: &Codebook) -> Result<UnitSequence> {
    check_dim(cb.dim, z.dim())?;
    let indices = z
        .frames()
        .map(|f| nearest(f, &cb.centroids, cb.dim).0 as u32)
        .collect();
    UnitSequence::new(indices, cb.k, z.geometry())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn cosine_parts(cb: &Codebook) -> Result<(&Projection, f64)> {
    match &cb.kind {
        CodebookKind::Cosine {
            projection,
            temperature,
        } => Ok((projection, *temperature)),
        CodebookKind::Euclidean => Err(Error::InvalidArgument(
            "cosine quantization needs a cosine codebook".into(),
        )),
    }
}

/// Softmax posteriors over codewords for one input frame.
pub fn cosine_posteriors(z: &[f64], cb: &Codebook) -> Result<Vec<f64>> {
    let (proj, tau) = cosine_parts(cb)?;
    check_dim(proj.cols, z.len())?;
    let p = proj.apply(z);
    let logits: Vec<f64> = cb
        .centroids
        .chunks_exact(cb.dim)
        .map(|e| cosine(&p, e) / tau)
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / sum).collect())
}

/// Argmax of the cosine-softmax posterior, i.e. the codeword with the
/// highest cosine similarity to `projection * z`. Ties go to the lowest
/// index. Frames that project to the zero vector map to index 0; their
/// count is returned alongside the units.
pub fn vq_cosine(z: &EmbeddingSequence, cb: &Codebook) -> Result<(UnitSequence, usize)> {
    let (proj, _) = cosine_parts(cb)?;
    check_dim(proj.cols, z.dim())?;
    let mut degenerate = 0;
    let indices = z
        .frames()
        .map(|f| {
            let p = proj.apply(f);
            if p.iter().all(|v| *v == 0.0) {
                degenerate += 1;
                return 0;
            }
            let mut best = (0usize, f64::NEG_INFINITY);
            for (c, e) in cb.centroids.chunks_exact(cb.dim).enumerate() {
                let s = cosine(&p, e);
                if s > best.1 {
                    best = (c, s);
                }
            }
            best.0 as u32
        })
        .collect();
    if degenerate > 0 {
        warn!("{degenerate} frames projected to zero; assigned to unit 0");
    }
    Ok((UnitSequence::new(indices, cb.k, z.geometry())?, degenerate))
}

/// Quantize with whichever rule the codebook carries.
pub fn quantize(z: &EmbeddingSequence, cb: &Codebook) -> Result<UnitSequence> {
    match cb.kind {
        CodebookKind::Euclidean => vq_nearest(z, cb),
        CodebookKind::Cosine { .. } => vq_cosine(z, cb).map(|(u, _)| u),
    }
}

/// Replace each unit by its centroid.
pub fn lookup(units: &UnitSequence, cb: &Codebook) -> Result<EmbeddingSequence> {
    let mut data = Vec::with_capacity(units.len() * cb.dim);
    for &i in &units.indices {
        if i as usize >= cb.k {
            return Err(Error::IndexOutOfRange {
                index: i as usize,
                k: cb.k,
            });
        }
        data.extend_from_slice(cb.centroid(i as usize));
    }
    let g = units.geometry;
    EmbeddingSequence::new(data, cb.dim, g.hop_samples, g.win_samples, g.sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this (Euclidean).
    pub tol: f64,
    /// Keep every `subsample`-th frame of the pooled data.
    pub subsample: usize,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            k: 100,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
            subsample: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub codebook: Codebook,
    /// Sum of squared distances to the assigned centroid, recorded after
    /// every assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Lloyd's algorithm with k-means++ seeding over the pooled frames of
/// `data`. Clusters that empty out are reseeded to the point farthest from
/// its centroid. Deterministic in (data order, seed).
pub fn train_kmeans(data: &[EmbeddingSequence], cfg: &KmeansConfig) -> Result<KmeansResult> {
    let dim = data.first().map(|s| s.dim()).ok_or(Error::TooFewPoints {
        needed: cfg.k.max(1),
        available: 0,
    })?;
    for s in data {
        check_dim(dim, s.dim())?;
    }
    let step = cfg.subsample.max(1);
    let points: Vec<&[f64]> = data.iter().flat_map(|s| s.frames()).step_by(step).collect();
    kmeans_points(&points, dim, cfg)
}

fn kmeans_points(points: &[&[f64]], dim: usize, cfg: &KmeansConfig) -> Result<KmeansResult> {
    let k = cfg.k;
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k.max(1),
            available: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_init(points, dim, k, &mut rng);
    let mut assign = vec![0usize; points.len()];
    let mut dists = vec![0.0; points.len()];
    let mut objective = Vec::new();
    let mut iterations = 0;

    for _ in 0..cfg.max_iters.max(1) {
        iterations += 1;
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids, dim);
            assign[i] = c;
            dists[i] = d;
            total += d;
        }

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(*p) {
                *s += v;
            }
        }
        // an emptied cluster takes the point currently worst served
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&i| !taken[i] && counts[assign[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dists[b] >= dists[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = far {
                taken[i] = true;
                let old = assign[i];
                counts[old] -= 1;
                for (s, v) in sums[old * dim..(old + 1) * dim].iter_mut().zip(points[i]) {
                    *s -= v;
                }
                total -= dists[i];
                dists[i] = 0.0;
                assign[i] = c;
                counts[c] = 1;
                sums[c * dim..(c + 1) * dim].copy_from_slice(points[i]);
            }
        }
        objective.push(total);

        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let n = counts[c] as f64;
            let row = &mut centroids[c * dim..(c + 1) * dim];
            let mut moved = 0.0;
            for (r, s) in row.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                let v = s / n;
                moved += (v - *r) * (v - *r);
                *r = v;
            }
            shift = shift.max(moved.sqrt());
        }
        if shift < cfg.tol {
            break;
        }
    }

    Ok(KmeansResult {
        codebook: Codebook::euclidean(centroids, dim)?,
        objective,
        iterations,
    })
}

fn plus_plus_init(points: &[&[f64]], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..points.len());
    centroids.extend_from_slice(points[first]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, points[first])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // every point coincides with a centroid already
            rng.random_range(0..points.len())
        };
        let c = points[pick];
        centroids.extend_from_slice(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> FrameGeometry {
        FrameGeometry::default()
    }

    fn seq(rows: &[&[f64]]) -> EmbeddingSequence {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        EmbeddingSequence::from_rows(&rows, geom()).unwrap()
    }

    #[test]
    fn k1_gives_mean() {
        let data = seq(&[&[0.0, 2.0], &[2.0, 4.0], &[4.0, 0.0]]);
        let r = train_kmeans(
            &[data],
            &KmeansConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.codebook.centroids(), &[2.0, 2.0]);
    }

    #[test]
    fn two_clusters_on_a_line() {
        let data = seq(&[&[0.0], &[1.0], &[10.0], &[11.0]]);
        for seed in 0..20 {
            let r = train_kmeans(
                std::slice::from_ref(&data),
                &KmeansConfig {
                    k: 2,
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            let mut c = r.codebook.centroids().to_vec();
            c.sort_by(f64::total_cmp);
            assert_eq!(c, vec![0.5, 10.5], "seed {seed}");
        }
    }

    #[test]
    fn too_few_points() {
        let data = seq(&[&[0.0], &[1.0]]);
        let err = train_kmeans(
            &[data],
            &KmeansConfig {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { needed: 3, available: 2 }));
    }

    #[test]
    fn empty_cluster_is_reseeded() {
        // duplicates force k-means++ to choose coincident seeds
        let data = seq(&[&[0.0], &[0.0], &[0.0], &[5.0]]);
        let r = train_kmeans(
            &[data],
            &KmeansConfig {
                k: 3,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.codebook.centroids().contains(&5.0));
        assert!(r.codebook.centroids().contains(&0.0));
    }

    #[test]
    fn nearest_and_tie_break() {
        let cb = Codebook::euclidean(vec![0.0, 0.0, 1.0, 1.0], 2).unwrap();
        let u = vq_nearest(&seq(&[&[0.9, 0.8], &[0.5, 0.5]]), &cb).unwrap();
        assert_eq!(u.indices, vec![1, 0]);
        assert!(matches!(
            vq_nearest(&seq(&[&[0.0, 0.0, 0.0]]), &cb),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cosine_alignment() {
        let cb = Codebook::cosine(vec![1.0, 0.0, 0.0, 1.0], 2, Projection::identity(2), 0.1)
            .unwrap();
        let (u, degenerate) = vq_cosine(&seq(&[&[0.9, 0.1], &[0.1, 0.9], &[0.0, 0.0]]), &cb)
            .unwrap();
        assert_eq!(u.indices, vec![0, 1, 0]);
        assert_eq!(degenerate, 1);
    }

    #[test]
    fn cosine_rejects_zero_centroid() {
        assert!(Codebook::cosine(vec![0.0, 0.0, 0.0, 1.0], 2, Projection::identity(2), 0.1)
            .is_err());
    }

    #[test]
    fn lookup_expands_indices() {
        let cb = Codebook::euclidean(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        let u = UnitSequence::new(vec![0, 0, 1], 2, geom()).unwrap();
        assert_eq!(lookup(&u, &cb).unwrap().data(), &[1.0, 2.0, 1.0, 2.0, 3.0, 4.0]);
        let bad = UnitSequence {
            indices: vec![2],
            k: 3,
            geometry: geom(),
        };
        assert!(matches!(lookup(&bad, &cb), Err(Error::IndexOutOfRange { index: 2, k: 2 })));
    }

    #[test]
    fn quantize_lookup_fixed_point() {
        let cb = Codebook::euclidean(vec![0.0, 0.0, 1.0, 1.0, -2.0, 3.0], 2).unwrap();
        let z = seq(&[&[0.2, 0.1], &[5.0, 5.0], &[-1.0, 1.0], &[0.6, 0.4]]);
        let u = vq_nearest(&z, &cb).unwrap();
        let again = vq_nearest(&lookup(&u, &cb).unwrap(), &cb).unwrap();
        assert_eq!(u, again);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let cb = Codebook::cosine(vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0], 2, Projection::identity(2), 0.1)
            .unwrap();
        let p = cosine_posteriors(&[0.3, 0.7], &cb).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
