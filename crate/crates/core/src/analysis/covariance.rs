use serde::{Deserialize, Serialize};

use super::{decompose, subtract_average, AnalysisError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSummary {
    /// Population covariance of the four currents, nA^2.
    pub matrix: [[f64; 4]; 4],
    /// `<I_av^2>` over the records before any shift, nA^2.
    pub mean_iav_sq: f64,
    pub samples: usize,
    /// Whether each record was shifted by its own mean first.
    pub shifted: bool,
}

pub(crate) fn check_finite(vectors: &[[f64; 4]]) -> Result<(), AnalysisError> {
    match vectors.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
        Some(i) => Err(AnalysisError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Covariance matrix of the current vectors (divided by `N`), optionally
/// after subtracting each record's own mean.
pub fn covariance_matrix(vectors: &[[f64; 4]], shifted: bool) -> Result<CovarianceSummary, AnalysisError> {
    let n = vectors.len();
    if n < 2 {
        return Err(AnalysisError::TooFewRecords { needed: 2, got: n });
    }
    check_finite(vectors)?;
    let mean_iav_sq = vectors.iter().map(|v| decompose(*v).i_av.powi(2)).sum::<f64>() / n as f64;
    let data: Vec<[f64; 4]> =
        if shifted { vectors.iter().map(|v| subtract_average(*v)).collect() } else { vectors.to_vec() };

    let mut mean = [0.0; 4];
    for v in &data {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut c = [[0.0; 4]; 4];
    for v in &data {
        let d: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..4 {
            for j in i..4 {
                c[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..4 {
        for j in i..4 {
            c[i][j] /= n as f64;
            c[j][i] = c[i][j];
        }
    }
    Ok(CovarianceSummary { matrix: c, mean_iav_sq, samples: n, shifted })
}
