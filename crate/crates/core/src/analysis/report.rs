use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{
    analytic_eigenvalues, coupling_indicator, covariance_matrix, moments, ndr_indicators, pca, AnalysisError,
    AnalyticSpectrum, CovarianceSummary, MomentReport, PcaResult,
};

/// Full statistical characterization of a current-vector ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub samples: usize,
    /// Covariance of the mean-subtracted vectors.
    pub covariance: CovarianceSummary,
    pub eigenvalues: [f64; 4],
    pub normalized_eigenvalues: Option<[f64; 4]>,
    pub eigenvectors: [[f64; 4]; 4],
    /// Moments of the unshifted vectors (`M_l`, `M_r`, `X` do not change
    /// under the shift, `I_av` does).
    pub moments: MomentReport,
    pub pearson: [[Option<f64>; 3]; 3],
    pub sigma_ratio_lr: f64,
    pub analytic: AnalyticSpectrum,
    #[serde(rename = "Q_l")]
    pub q_l: Option<f64>,
    #[serde(rename = "Q_r")]
    pub q_r: Option<f64>,
    #[serde(rename = "Q_lr")]
    pub q_lr: Option<f64>,
}

/// Shift, covariance, PCA, moments and indicators in one pass. Indicators
/// that are undefined for the data are reported as `None`.
pub fn analyze(vectors: &[[f64; 4]]) -> Result<AnalysisReport, AnalysisError> {
    let covariance = covariance_matrix(vectors, true)?;
    let PcaResult { eigenvalues, eigenvectors, normalized_eigenvalues, .. } = pca(&covariance)?;
    let moments = moments(vectors)?;
    let (q_l, q_r) = match ndr_indicators(&moments) {
        Ok((l, r)) => (Some(l), Some(r)),
        Err(_) => (None, None),
    };
    Ok(AnalysisReport {
        samples: vectors.len(),
        eigenvalues,
        normalized_eigenvalues,
        eigenvectors,
        pearson: moments.pearson,
        sigma_ratio_lr: moments.sigma_ratio(),
        analytic: analytic_eigenvalues(&moments),
        q_l,
        q_r,
        q_lr: coupling_indicator(&moments).ok(),
        covariance,
        moments,
    })
}

impl AnalysisReport {
    /// Eigenvector components as CSV, one row per input combination and one
    /// column per eigenvector: `input,J0,J1,J2,J3`.
    pub fn write_eigenvector_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["input", "J0", "J1", "J2", "J3"])?;
        for (i, label) in ["00", "10", "01", "11"].iter().enumerate() {
            let mut row = vec![label.to_string()];
            row.extend(self.eigenvectors.iter().map(|v| v[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
