//! Plaintext spatial statistics surrounding the secure core: standardization,
//! inverse-distance weights, Moran post-processing, permutation significance,
//! pseudo-SD and cluster classification.
//!
//! The secure protocol only computes the interactive sums m_g and m_l; every
//! step before (standardize, weights) and after (post-processing, p-values,
//! clusters) is local plaintext math and lives here.

use crate::fixedpoint::{encode, FixedPointError, FixedPointFormat, FixedWord};
use crate::mathf;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Significance level used for cluster classification unless overridden.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Mean earth radius in kilometers for haversine distances. The scale cancels
/// under row normalization; the constant only matters for raw distances.
const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EsdaError {
    #[error("duplicate region id {0:?}")]
    DuplicateId(String),
    #[error("need at least {expected} regions, got {got}")]
    TooSmall { expected: usize, got: usize },
    #[error("vector lengths differ: {left} vs {right}")]
    Length { left: usize, right: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("all values equal, standard deviation is zero")]
    DegenerateData,
    #[error("weight matrix row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("negative weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error("nonzero diagonal {value} at row {row}")]
    NonzeroDiagonal { row: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSum { row: usize, sum: f64 },
    #[error("coincident points {a:?} and {b:?}")]
    CoincidentPoints { a: String, b: String },
}

/// Ordered region attribute values with their ids.
///
/// Both parties must hold their vectors in the same region order; the session
/// handshake compares [`RegionVector::id_digest`] values to enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionVector {
    ids: Vec<String>,
    values: Vec<f64>,
}

impl RegionVector {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self, EsdaError> {
        if ids.len() != values.len() {
            return Err(EsdaError::Length {
                left: ids.len(),
                right: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(EsdaError::NonFinite { index: i });
            }
        }
        for (i, id) in ids.iter().enumerate() {
            if ids[..i].contains(id) {
                return Err(EsdaError::DuplicateId(id.clone()));
            }
        }
        Ok(RegionVector { ids, values })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Order-sensitive digest of the id list; length-prefixed so that id
    /// boundaries cannot alias.
    pub fn id_digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for id in &self.ids {
            h.update((id.len() as u32).to_le_bytes());
            h.update(id.as_bytes());
        }
        h.finalize().into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

/// Distance used for raw inverse-distance weights. For [`Haversine`],
/// `x` is longitude and `y` latitude, both in degrees.
///
/// [`Haversine`]: DistanceMetric::Haversine
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Euclidean,
    Haversine,
}

/// Row-normalized spatial weights: zero diagonal, nonnegative, each nonzero
/// row summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    /// Validates an already-normalized matrix. Zero rows are allowed (an
    /// isolated region); nonzero rows must sum to 1 within 1e-9.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, EsdaError> {
        let n = rows.len();
        if n < 2 {
            return Err(EsdaError::TooSmall {
                expected: 2,
                got: n,
            });
        }
        let mut w = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(EsdaError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            let mut sum = 0.0;
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(EsdaError::NonFinite { index: i * n + j });
                }
                if v < 0.0 {
                    return Err(EsdaError::NegativeWeight {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if i == j && v != 0.0 {
                    return Err(EsdaError::NonzeroDiagonal { row: i, value: v });
                }
                sum += v;
            }
            if sum != 0.0 && mathf::abs(sum - 1.0) > 1e-9 {
                return Err(EsdaError::RowSum { row: i, sum });
            }
            w.extend_from_slice(row);
        }
        Ok(WeightMatrix { n, w })
    }

    /// Divides each nonzero row of a raw nonnegative matrix by its sum.
    pub fn row_normalized(rows: &[Vec<f64>]) -> Result<Self, EsdaError> {
        let n = rows.len();
        if n < 2 {
            return Err(EsdaError::TooSmall {
                expected: 2,
                got: n,
            });
        }
        let mut normalized = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(EsdaError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                normalized.push(row.clone());
            } else {
                normalized.push(row.iter().map(|v| v / sum).collect());
            }
        }
        Self::from_rows(&normalized)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Encodes every entry to fixed point, row-major. Builders and oracles
    /// both call this so they quantize weights identically.
    pub fn encode_words(&self, fmt: FixedPointFormat) -> Result<Vec<FixedWord>, FixedPointError> {
        self.w.iter().map(|&v| encode(v, fmt)).collect()
    }
}

/// Inverse-distance weights from centroids: w'_{i,j} = 1/d(i,j) off the
/// diagonal, then row-normalized.
pub fn build_weights(
    centroids: &[Centroid],
    metric: DistanceMetric,
) -> Result<WeightMatrix, EsdaError> {
    let n = centroids.len();
    if n < 2 {
        return Err(EsdaError::TooSmall {
            expected: 2,
            got: n,
        });
    }
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(&centroids[i], &centroids[j], metric);
            if d == 0.0 {
                return Err(EsdaError::CoincidentPoints {
                    a: centroids[i].id.clone(),
                    b: centroids[j].id.clone(),
                });
            }
            rows[i][j] = 1.0 / d;
            rows[j][i] = 1.0 / d;
        }
    }
    WeightMatrix::row_normalized(&rows)
}

fn distance(a: &Centroid, b: &Centroid, metric: DistanceMetric) -> f64 {
    match metric {
        DistanceMetric::Euclidean => {
            let dx = a.x - b.x;
            let dy = a.y - b.y;
            mathf::sqrt(dx * dx + dy * dy)
        }
        DistanceMetric::Haversine => {
            let to_rad = core::f64::consts::PI / 180.0;
            let (lon1, lat1) = (a.x * to_rad, a.y * to_rad);
            let (lon2, lat2) = (b.x * to_rad, b.y * to_rad);
            let sin_dlat = mathf::sin((lat2 - lat1) / 2.0);
            let sin_dlon = mathf::sin((lon2 - lon1) / 2.0);
            let h = sin_dlat * sin_dlat + mathf::cos(lat1) * mathf::cos(lat2) * sin_dlon * sin_dlon;
            let h = h.clamp(0.0, 1.0);
            // asin(sqrt(h)) via atan2 keeps the shim surface small.
            let angle = mathf::atan2(mathf::sqrt(h), mathf::sqrt(1.0 - h));
            2.0 * EARTH_RADIUS_KM * angle
        }
    }
}

/// Centers and scales by the population standard deviation (divisor n).
pub fn standardize(values: &[f64]) -> Result<Vec<f64>, EsdaError> {
    let n = values.len();
    if n < 2 {
        return Err(EsdaError::TooSmall {
            expected: 2,
            got: n,
        });
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(EsdaError::NonFinite { index: i });
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Err(EsdaError::DegenerateData);
    }
    let sd = mathf::sqrt(var);
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Spatial lag Σ_j w_{i,j}·z_j per region.
pub fn spatial_lag(w: &WeightMatrix, z: &[f64]) -> Result<Vec<f64>, EsdaError> {
    if w.n() != z.len() {
        return Err(EsdaError::Length {
            left: w.n(),
            right: z.len(),
        });
    }
    Ok((0..w.n())
        .map(|i| (0..w.n()).map(|j| w.get(i, j) * z[j]).sum())
        .collect())
}

/// Global post-processing: I = m_g / Σ z_x².
pub fn global_moran_post(m_g: f64, z_x: &[f64]) -> f64 {
    m_g / z_x.iter().map(|z| z * z).sum::<f64>()
}

/// Local post-processing: I_i = (n−1)·m_l[i] / Σ z_x².
pub fn local_moran_post(m_l: &[f64], z_x: &[f64], n: usize) -> Vec<f64> {
    let ssq: f64 = z_x.iter().map(|z| z * z).sum();
    m_l.iter().map(|m| (n as f64 - 1.0) * m / ssq).collect()
}

/// Deterministic Fisher-Yates shuffle keyed by `seed`. Hand-rolled so the
/// permutation stream is pinned by this crate, not by a dependency's
/// algorithm choice.
pub fn shuffled(values: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = values.to_vec();
    for i in (1..out.len()).rev() {
        let j = uniform_below(&mut rng, (i + 1) as u64) as usize;
        out.swap(i, j);
    }
    out
}

/// Unbiased sampling of [0, m) by rejection.
fn uniform_below(rng: &mut ChaCha20Rng, m: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % m);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % m;
        }
    }
}

/// Counts and p-values from a completed permutation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationSummary {
    pub k: u32,
    /// min(strictly greater, strictly lesser) for the global statistic.
    pub r_global: u32,
    pub p_global: f64,
    pub p_local: Vec<f64>,
    /// Permuted global statistics in round order, for pseudo-SD.
    pub permuted_global: Vec<f64>,
}

/// Runs `round` for indices 1..=k, each returning the permuted global
/// statistic and (possibly empty) permuted local statistics, then derives
/// p = (R+1)/(K+1) with R = min(greater, lesser) and ties counted as neither.
///
/// The round closure is either a plaintext oracle or one garbled execution of
/// a secure session; circuits are single-use so every round regarbles.
pub fn permutation_test<E>(
    observed_global: f64,
    observed_local: &[f64],
    k: u32,
    mut round: impl FnMut(u32) -> Result<(f64, Vec<f64>), E>,
) -> Result<PermutationSummary, E> {
    let nl = observed_local.len();
    let (mut g_global, mut l_global) = (0u32, 0u32);
    let mut g_local = vec![0u32; nl];
    let mut l_local = vec![0u32; nl];
    let mut permuted_global = Vec::with_capacity(k as usize);
    for r in 1..=k {
        let (pg, pl) = round(r)?;
        assert_eq!(pl.len(), nl, "round returned wrong local count");
        if pg > observed_global {
            g_global += 1;
        } else if pg < observed_global {
            l_global += 1;
        }
        for i in 0..nl {
            if pl[i] > observed_local[i] {
                g_local[i] += 1;
            } else if pl[i] < observed_local[i] {
                l_local[i] += 1;
            }
        }
        permuted_global.push(pg);
    }
    let p_of = |g: u32, l: u32| f64::from(g.min(l) + 1) / f64::from(k + 1);
    Ok(PermutationSummary {
        k,
        r_global: g_global.min(l_global),
        p_global: p_of(g_global, l_global),
        p_local: (0..nl).map(|i| p_of(g_local[i], l_local[i])).collect(),
        permuted_global,
    })
}

/// Sum of squared deviations from the mean, exactly that: no division, no
/// root. Named pseudo to avoid confusion with the true standard deviation.
pub fn pseudo_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// True population standard deviation, for diagnostics.
pub fn population_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    mathf::sqrt(pseudo_sd(values) / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Cluster {
    #[cfg_attr(feature = "serde", serde(rename = "HH"))]
    HighHigh,
    #[cfg_attr(feature = "serde", serde(rename = "LL"))]
    LowLow,
    #[cfg_attr(feature = "serde", serde(rename = "HL"))]
    HighLow,
    #[cfg_attr(feature = "serde", serde(rename = "LH"))]
    LowHigh,
    #[cfg_attr(feature = "serde", serde(rename = "NS"))]
    NotSignificant,
}

impl core::fmt::Display for Cluster {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Cluster::HighHigh => "HH",
            Cluster::LowLow => "LL",
            Cluster::HighLow => "HL",
            Cluster::LowHigh => "LH",
            Cluster::NotSignificant => "NS",
        })
    }
}

/// Labels each region by the signs of its standardized value and spatial lag,
/// gated on local significance. Exact zeros in either coordinate are NS.
pub fn classify_clusters(
    z_x: &[f64],
    lag: &[f64],
    p_local: &[f64],
    alpha: f64,
) -> Result<Vec<Cluster>, EsdaError> {
    if z_x.len() != lag.len() {
        return Err(EsdaError::Length {
            left: z_x.len(),
            right: lag.len(),
        });
    }
    if z_x.len() != p_local.len() {
        return Err(EsdaError::Length {
            left: z_x.len(),
            right: p_local.len(),
        });
    }
    Ok((0..z_x.len())
        .map(|i| {
            if p_local[i] > alpha || z_x[i] == 0.0 || lag[i] == 0.0 {
                Cluster::NotSignificant
            } else if z_x[i] > 0.0 && lag[i] > 0.0 {
                Cluster::HighHigh
            } else if z_x[i] < 0.0 && lag[i] < 0.0 {
                Cluster::LowLow
            } else if z_x[i] > 0.0 {
                Cluster::HighLow
            } else {
                Cluster::LowHigh
            }
        })
        .collect())
}

/// Per-item signed differences X_i − X̂_i plus the maximum magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub differences: Vec<f64>,
    pub max_abs: f64,
}

pub fn accuracy_report(x: &[f64], x_hat: &[f64]) -> Result<AccuracyReport, EsdaError> {
    if x.len() != x_hat.len() {
        return Err(EsdaError::Length {
            left: x.len(),
            right: x_hat.len(),
        });
    }
    let differences: Vec<f64> = x.iter().zip(x_hat).map(|(a, b)| a - b).collect();
    let max_abs = differences.iter().fold(0.0, |m, d| mathf::abs(*d).max(m));
    Ok(AccuracyReport {
        differences,
        max_abs,
    })
}

/// Complete output of one analysis: statistics, significance, stability and
/// cluster labels. Sessions running only the global statistic leave the
/// per-region vectors empty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MoranResult {
    pub global_i: f64,
    pub local_i: Vec<f64>,
    pub p_global: f64,
    pub p_local: Vec<f64>,
    /// min(greater, lesser) count behind `p_global`.
    pub r_global: u32,
    /// Number of permutation rounds.
    pub k: u32,
    /// Sum of squared deviations of the permuted global statistics.
    pub pseudo_sd: f64,
    pub clusters: Vec<Cluster>,
    /// Interactive sums as decoded reals.
    pub m_g: f64,
    pub m_l: Vec<f64>,
}

impl MoranResult {
    /// Post-processes interactive sums into the full result. `m_l` may be
    /// empty for a global-only run; clusters are derived only when local
    /// p-values exist.
    pub fn assemble(
        m_g: f64,
        m_l: Vec<f64>,
        z_x: &[f64],
        lag_x: &[f64],
        summary: PermutationSummary,
        alpha: f64,
    ) -> Result<MoranResult, EsdaError> {
        let global_i = global_moran_post(m_g, z_x);
        let local_i = if m_l.is_empty() {
            Vec::new()
        } else {
            local_moran_post(&m_l, z_x, z_x.len())
        };
        let clusters = if local_i.is_empty() || summary.p_local.is_empty() {
            Vec::new()
        } else {
            classify_clusters(z_x, lag_x, &summary.p_local, alpha)?
        };
        Ok(MoranResult {
            global_i,
            local_i,
            p_global: summary.p_global,
            p_local: summary.p_local,
            r_global: summary.r_global,
            k: summary.k,
            pseudo_sd: pseudo_sd(&summary.permuted_global),
            clusters,
            m_g,
            m_l,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use approx::assert_abs_diff_eq;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn region_vector_rejects_duplicates_and_nan() {
        let err = RegionVector::new(vec!["a".into(), "a".into()], vec![1.0, 2.0]).unwrap_err();
        assert_eq!(err, EsdaError::DuplicateId("a".into()));
        assert!(RegionVector::new(ids(2), vec![1.0, f64::NAN]).is_err());
        let v = RegionVector::new(ids(3), vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.n(), 3);
        assert_ne!(
            v.id_digest(),
            RegionVector::new(vec!["1".into(), "23".into(), "".into()], vec![0.0; 3])
                .unwrap()
                .id_digest()
        );
    }

    #[test]
    fn standardize_small_example() {
        let z = standardize(&[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(z[0], -1.2247449, epsilon = 1e-6);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(z[2], 1.2247449, epsilon = 1e-6);
    }

    #[test]
    fn standardize_rejects_constant() {
        assert_eq!(
            standardize(&[4.2, 4.2, 4.2]).unwrap_err(),
            EsdaError::DegenerateData
        );
    }

    #[test]
    fn standardize_identities_hold() {
        let values = [3.5, -1.0, 12.25, 0.0, 7.5];
        let z = standardize(&values).unwrap();
        let mean: f64 = z.iter().sum::<f64>() / z.len() as f64;
        let ssq: f64 = z.iter().map(|v| v * v).sum();
        assert!(mean.abs() <= 1e-9);
        assert!((ssq - z.len() as f64).abs() <= 1e-6);
    }

    #[test]
    fn build_weights_two_points() {
        let c = vec![
            Centroid {
                id: "a".into(),
                x: 0.0,
                y: 0.0,
            },
            Centroid {
                id: "b".into(),
                x: 17.0,
                y: -4.0,
            },
        ];
        let w = build_weights(&c, DistanceMetric::Euclidean).unwrap();
        assert_eq!(w.row(0), &[0.0, 1.0]);
        assert_eq!(w.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn build_weights_collinear_equidistant() {
        let c: Vec<Centroid> = (0..3)
            .map(|i| Centroid {
                id: i.to_string(),
                x: i as f64,
                y: 0.0,
            })
            .collect();
        let w = build_weights(&c, DistanceMetric::Euclidean).unwrap();
        assert_abs_diff_eq!(w.get(1, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1, 2), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(0, 1), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(0, 2), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(2, 1), 2.0 / 3.0, epsilon = 1e-12);
        for i in 0..3 {
            let sum: f64 = w.row(i).iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn build_weights_rejects_coincident() {
        let c = vec![
            Centroid {
                id: "p".into(),
                x: 1.0,
                y: 1.0,
            },
            Centroid {
                id: "q".into(),
                x: 1.0,
                y: 1.0,
            },
        ];
        match build_weights(&c, DistanceMetric::Euclidean).unwrap_err() {
            EsdaError::CoincidentPoints { a, b } => {
                assert_eq!((a.as_str(), b.as_str()), ("p", "q"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn haversine_matches_known_distance() {
        // Paris to Berlin, roughly 878 km.
        let paris = Centroid {
            id: "paris".into(),
            x: 2.3522,
            y: 48.8566,
        };
        let berlin = Centroid {
            id: "berlin".into(),
            x: 13.4050,
            y: 52.5200,
        };
        let d = distance(&paris, &berlin, DistanceMetric::Haversine);
        assert!((d - 878.0).abs() < 5.0, "got {d}");
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(WeightMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
        // Zero row is allowed.
        assert!(WeightMatrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).is_ok());
        assert!(matches!(
            WeightMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap_err(),
            EsdaError::TooSmall { .. }
        ));
        assert!(matches!(
            WeightMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).unwrap_err(),
            EsdaError::NotSquare { .. }
        ));
        assert!(matches!(
            WeightMatrix::from_rows(&[vec![0.0, 0.9], vec![1.0, 0.0]]).unwrap_err(),
            EsdaError::RowSum { row: 0, .. }
        ));
        assert!(matches!(
            WeightMatrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap_err(),
            EsdaError::NonzeroDiagonal { row: 0, .. }
        ));
        assert!(matches!(
            WeightMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap_err(),
            EsdaError::NegativeWeight { .. }
        ));
    }

    #[test]
    fn post_processing_symmetric_case() {
        // W rows: [0, .5, .5] pattern, z = standardize([1,2,3]).
        let z = standardize(&[1.0, 2.0, 3.0]).unwrap();
        let w = WeightMatrix::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        let lag = spatial_lag(&w, &z).unwrap();
        let m_l: Vec<f64> = lag.iter().zip(&z).map(|(l, z)| l * z).collect();
        let m_g: f64 = m_l.iter().sum();
        assert_abs_diff_eq!(m_g, -1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(global_moran_post(m_g, &z), -0.5, epsilon = 1e-9);
        let local = local_moran_post(&m_l, &z, 3);
        assert_abs_diff_eq!(local[0], -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(local[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(local[2], -0.5, epsilon = 1e-9);
        assert_eq!(global_moran_post(0.0, &z), 0.0);
        assert_eq!(local_moran_post(&[0.0; 3], &z, 3), vec![0.0; 3]);
    }

    #[test]
    fn permutation_counts_follow_formula() {
        // 99 rounds: 30 greater, 69 lesser -> R = 30, p = 0.31.
        let summary = permutation_test::<()>(0.0, &[], 99, |r| {
            Ok(if r <= 30 { (1.0, vec![]) } else { (-1.0, vec![]) })
        })
        .unwrap();
        assert_eq!(summary.r_global, 30);
        assert_abs_diff_eq!(summary.p_global, 0.31, epsilon = 1e-12);

        // All greater -> lesser = 0 -> R = 0 -> p = 1/(K+1).
        let summary = permutation_test::<()>(0.0, &[], 9, |_| Ok((1.0, vec![]))).unwrap();
        assert_eq!(summary.r_global, 0);
        assert_abs_diff_eq!(summary.p_global, 0.1, epsilon = 1e-12);

        // Ties count as neither, which drives p toward 1.
        let summary = permutation_test::<()>(0.5, &[0.5], 4, |_| Ok((0.5, vec![0.5]))).unwrap();
        assert_abs_diff_eq!(summary.p_global, 1.0 / 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(summary.p_local[0], 1.0 / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn permutation_k_zero_yields_p_one() {
        let summary = permutation_test::<()>(1.0, &[1.0], 0, |_| unreachable!()).unwrap();
        assert_eq!(summary.p_global, 1.0);
        assert_eq!(summary.p_local, vec![1.0]);
        assert!(summary.permuted_global.is_empty());
    }

    #[test]
    fn shuffle_is_seed_deterministic_and_a_permutation() {
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        let a = shuffled(&v, 7);
        let b = shuffled(&v, 7);
        let c = shuffled(&v, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, v);
    }

    #[test]
    fn pseudo_sd_examples() {
        assert_abs_diff_eq!(pseudo_sd(&[1.0, 2.0, 3.0]), 2.0, epsilon = 1e-12);
        assert_eq!(pseudo_sd(&[5.0; 8]), 0.0);
        // Identity: pseudo-SD = K * population variance.
        let vals = [0.25, -1.5, 3.0, 2.0, -0.75];
        let sd = population_sd(&vals);
        assert_abs_diff_eq!(
            pseudo_sd(&vals),
            vals.len() as f64 * sd * sd,
            epsilon = 1e-9
        );
    }

    #[test]
    fn cluster_rules() {
        let labels = classify_clusters(
            &[1.0, -1.0, 1.0, -1.0, 1.0, 0.0, 1.0],
            &[1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 0.0],
            &[0.01, 0.01, 0.01, 0.01, 0.2, 0.01, 0.01],
            DEFAULT_ALPHA,
        )
        .unwrap();
        assert_eq!(
            labels,
            vec![
                Cluster::HighHigh,
                Cluster::LowLow,
                Cluster::HighLow,
                Cluster::LowHigh,
                Cluster::NotSignificant,
                Cluster::NotSignificant,
                Cluster::NotSignificant,
            ]
        );
        assert_eq!(labels[0].to_string(), "HH");
        assert!(classify_clusters(&[1.0], &[1.0, 2.0], &[0.5], 0.05).is_err());
    }

    #[test]
    fn accuracy_report_examples() {
        let same = accuracy_report(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(same.differences, vec![0.0, 0.0]);
        assert_eq!(same.max_abs, 0.0);
        let r = accuracy_report(&[0.1971360077], &[0.1979123]).unwrap();
        assert_abs_diff_eq!(r.differences[0], -0.0007763, epsilon = 1e-9);
        assert_abs_diff_eq!(r.max_abs, 0.0007763, epsilon = 1e-9);
        let shift = accuracy_report(&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5]).unwrap();
        assert!(shift.differences.iter().all(|d| (d - 0.5).abs() < 1e-12));
        assert!(accuracy_report(&[1.0], &[]).is_err());
    }
}
