//! Reference executions of the full statistic pipeline, in two precisions:
//! pure float (ground truth for accuracy bounds) and bit-exact fixed point
//! (the value the secure path must reproduce exactly).
//!
//! The interactive sums follow one fixed loop order, region index ascending
//! in both loops, matching the circuit builders term for term. Zero weights
//! contribute identity operations, so skipping them (as the circuits do)
//! cannot change a single bit.

use crate::esda::{
    self, shuffled, standardize, EsdaError, MoranResult, PermutationSummary, WeightMatrix,
};
use crate::fixedpoint::{
    decode, encode, fx_add, fx_mul, FixedPointError, FixedPointFormat, FixedWord,
};
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Esda(#[from] EsdaError),
    #[error(transparent)]
    Encode(#[from] FixedPointError),
}

fn check_dims(w: &WeightMatrix, nx: usize, ny: usize) -> Result<(), EsdaError> {
    if w.n() != nx {
        return Err(EsdaError::Length {
            left: w.n(),
            right: nx,
        });
    }
    if nx != ny {
        return Err(EsdaError::Length {
            left: nx,
            right: ny,
        });
    }
    Ok(())
}

/// Interactive sums in double precision:
/// m_l[i] = (Σ_j w[i][j]·z_x[j]) · z_y[i], m_g = Σ_i m_l[i].
pub fn float_interactive_sums(
    z_x: &[f64],
    z_y: &[f64],
    w: &WeightMatrix,
) -> Result<(f64, Vec<f64>), EsdaError> {
    check_dims(w, z_x.len(), z_y.len())?;
    let n = w.n();
    let mut m_g = 0.0;
    let mut m_l = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = 0.0;
        for (j, &zx) in z_x.iter().enumerate() {
            sum += w.get(i, j) * zx;
        }
        let term = sum * z_y[i];
        m_g += term;
        m_l.push(term);
    }
    Ok((m_g, m_l))
}

/// Same sums on fixed-point words with pre-encoded weights (row-major, from
/// [`WeightMatrix::encode_words`]). Every operation is the wrapping
/// fixed-point semantics the circuits implement.
pub fn fixed_interactive_sums(
    z_x: &[FixedWord],
    z_y: &[FixedWord],
    w_words: &[FixedWord],
    fmt: FixedPointFormat,
) -> (FixedWord, Vec<FixedWord>) {
    let n = z_x.len();
    assert_eq!(z_y.len(), n);
    assert_eq!(w_words.len(), n * n);
    let mut m_g = FixedWord::ZERO;
    let mut m_l = Vec::with_capacity(n);
    for i in 0..n {
        let mut sum = FixedWord::ZERO;
        for (j, &zx) in z_x.iter().enumerate() {
            sum = fx_add(sum, fx_mul(w_words[i * n + j], zx, fmt), fmt);
        }
        let term = fx_mul(sum, z_y[i], fmt);
        m_g = fx_add(m_g, term, fmt);
        m_l.push(term);
    }
    (m_g, m_l)
}

/// Float pipeline for the global statistic: standardize, sums, post-process.
pub fn float_global_moran(x: &[f64], y: &[f64], w: &WeightMatrix) -> Result<f64, EsdaError> {
    check_dims(w, x.len(), y.len())?;
    let z_x = standardize(x)?;
    let z_y = standardize(y)?;
    let (m_g, _) = float_interactive_sums(&z_x, &z_y, w)?;
    Ok(esda::global_moran_post(m_g, &z_x))
}

/// Float pipeline for the local statistics.
pub fn float_local_moran(x: &[f64], y: &[f64], w: &WeightMatrix) -> Result<Vec<f64>, EsdaError> {
    check_dims(w, x.len(), y.len())?;
    let z_x = standardize(x)?;
    let z_y = standardize(y)?;
    let (_, m_l) = float_interactive_sums(&z_x, &z_y, w)?;
    Ok(esda::local_moran_post(&m_l, &z_x, z_x.len()))
}

fn encode_all(z: &[f64], fmt: FixedPointFormat) -> Result<Vec<FixedWord>, FixedPointError> {
    z.iter().map(|&v| encode(v, fmt)).collect()
}

/// Fixed-point pipeline for the global interactive sum. The returned word is
/// the bit pattern the secure path must produce.
pub fn fixed_global_moran(
    x: &[f64],
    y: &[f64],
    w: &WeightMatrix,
    fmt: FixedPointFormat,
) -> Result<FixedWord, OracleError> {
    check_dims(w, x.len(), y.len())?;
    let z_x = encode_all(&standardize(x)?, fmt)?;
    let z_y = encode_all(&standardize(y)?, fmt)?;
    let (m_g, _) = fixed_interactive_sums(&z_x, &z_y, &w.encode_words(fmt)?, fmt);
    Ok(m_g)
}

/// Fixed-point pipeline for the local interactive terms.
pub fn fixed_local_moran(
    x: &[f64],
    y: &[f64],
    w: &WeightMatrix,
    fmt: FixedPointFormat,
) -> Result<Vec<FixedWord>, OracleError> {
    check_dims(w, x.len(), y.len())?;
    let z_x = encode_all(&standardize(x)?, fmt)?;
    let z_y = encode_all(&standardize(y)?, fmt)?;
    let (_, m_l) = fixed_interactive_sums(&z_x, &z_y, &w.encode_words(fmt)?, fmt);
    Ok(m_l)
}

/// Which arithmetic the plaintext pipeline runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Float,
    Fixed(FixedPointFormat),
}

/// Full plaintext analysis: both statistics, K permutation rounds with the
/// receiver-side shuffle (round seed = `seed ^ round`), p-values, pseudo-SD
/// and clusters. In fixed mode the permuted vectors are re-encoded per round,
/// exactly as the secure receiver does.
pub fn run_pipeline(
    x: &[f64],
    y: &[f64],
    w: &WeightMatrix,
    mode: OracleMode,
    k: u32,
    seed: u64,
    alpha: f64,
) -> Result<MoranResult, OracleError> {
    check_dims(w, x.len(), y.len())?;
    let z_x = standardize(x)?;
    let z_y = standardize(y)?;
    let lag_x = esda::spatial_lag(w, &z_x)?;

    let stats_of = |z_y_round: &[f64]| -> Result<(f64, Vec<f64>), OracleError> {
        match mode {
            OracleMode::Float => {
                let (m_g, m_l) = float_interactive_sums(&z_x, z_y_round, w)?;
                Ok((m_g, m_l))
            }
            OracleMode::Fixed(fmt) => {
                let zx = encode_all(&z_x, fmt)?;
                let zy = encode_all(z_y_round, fmt)?;
                let (m_g, m_l) = fixed_interactive_sums(&zx, &zy, &w.encode_words(fmt)?, fmt);
                Ok((
                    decode(m_g, fmt),
                    m_l.iter().map(|&m| decode(m, fmt)).collect(),
                ))
            }
        }
    };

    let (m_g, m_l) = stats_of(&z_y)?;
    let observed_global = esda::global_moran_post(m_g, &z_x);
    let observed_local = esda::local_moran_post(&m_l, &z_x, z_x.len());

    let summary: PermutationSummary =
        esda::permutation_test(observed_global, &observed_local, k, |round| {
            let permuted = shuffled(&z_y, seed ^ u64::from(round));
            let (pm_g, pm_l) = stats_of(&permuted)?;
            Ok((
                esda::global_moran_post(pm_g, &z_x),
                esda::local_moran_post(&pm_l, &z_x, z_x.len()),
            ))
        })?;

    Ok(MoranResult::assemble(m_g, m_l, &z_x, &lag_x, summary, alpha)?)
}
