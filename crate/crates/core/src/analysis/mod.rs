//! Statistics of current-vector ensembles.
//!
//! A current vector `(I00, I10, I01, I11)` maps one-to-one onto
//!
//! ```text
//! I_av = (I00 + I10 + I01 + I11) / 4      average level
//! M_l  = (I11 + I10 - I01 - I00) / 4      response to the left input
//! M_r  = (I11 - I10 + I01 - I00) / 4      response to the right input
//! X    = (I11 - I10 - I01 + I00) / 4      nonlinear coupling of the inputs
//! ```
//!
//! Covariance, PCA and the nonlinearity indicators are built on top of this
//! decomposition.

mod covariance;
mod moments;
mod pca;
mod report;

pub use covariance::{covariance_matrix, CovarianceSummary};
pub use moments::{
    analytic_eigenvalues, coupling_indicator, moments, ndr_indicators, AnalyticSpectrum, MomentReport,
    NonlinearityReport,
};
pub use pca::{jacobi_eigen, pca, PcaResult};
pub use report::{analyze, AnalysisReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),
    #[error("{0} has zero variance")]
    ZeroVariance(&'static str),
    #[error("coupling indicator undefined: <M_l^2> + <M_r^2> = 0")]
    ZeroDenominator,
    #[error("non-finite current in record {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub i_av: f64,
    pub m_l: f64,
    pub m_r: f64,
    pub x: f64,
}

impl Decomposition {
    pub fn to_array(self) -> [f64; 4] {
        [self.i_av, self.m_l, self.m_r, self.x]
    }
}

pub fn decompose(v: [f64; 4]) -> Decomposition {
    let [i00, i10, i01, i11] = v;
    Decomposition {
        i_av: 0.25 * (i00 + i10 + i01 + i11),
        m_l: 0.25 * (i11 + i10 - i01 - i00),
        m_r: 0.25 * (i11 - i10 + i01 - i00),
        x: 0.25 * (i11 - i10 - i01 + i00),
    }
}

/// Inverse of [`decompose`].
pub fn recompose(d: Decomposition) -> [f64; 4] {
    let Decomposition { i_av, m_l, m_r, x } = d;
    [i_av - m_l - m_r + x, i_av + m_l - m_r - x, i_av - m_l + m_r - x, i_av + m_l + m_r + x]
}

/// Subtracts the component mean.
///
/// The last component is set to minus the sum of the first three, so the
/// result sums to exactly zero and a second application returns it
/// unchanged bit for bit.
pub fn subtract_average(v: [f64; 4]) -> [f64; 4] {
    let mean = (v[0] + v[1] + v[2] + v[3]) / 4.0;
    let a = v[0] - mean;
    let b = v[1] - mean;
    let c = v[2] - mean;
    [a, b, c, -(a + b + c)]
}
