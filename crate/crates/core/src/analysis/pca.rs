use serde::{Deserialize, Serialize};

use super::covariance::CovarianceSummary;
use super::AnalysisError;

const MAX_SWEEPS: usize = 64;
const AVERAGE_DIRECTION: [f64; 4] = [0.5; 4];

/// Eigen-decomposition of a symmetric `N x N` matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and the matching unit eigenvectors
/// (`vectors[k]` belongs to `values[k]`), unsorted, and the number of sweeps.
///
/// Sweeps stop once the off-diagonal Frobenius norm is below `1e-15` of the
/// matrix norm.
pub fn jacobi_eigen<const N: usize>(m: &[[f64; N]; N]) -> ([f64; N], [[f64; N]; N], usize) {
    let mut a = *m;
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let norm = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[[f64; N]; N]| {
        let mut s = 0.0;
        for i in 0..N {
            for j in 0..N {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off(&a) > 1e-15 * norm {
        sweeps += 1;
        for p in 0..N {
            for q in p + 1..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                // symmetric Schur rotation zeroing a[p][q]
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut values = [0.0; N];
    let mut vectors = [[0.0; N]; N];
    for k in 0..N {
        values[k] = a[k][k];
        for i in 0..N {
            vectors[k][i] = v[i][k];
        }
    }
    (values, vectors, sweeps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// `lambda_0` (the eigenvector closest to the average direction), then
    /// the rest in descending order, nA^2.
    pub eigenvalues: [f64; 4],
    /// Unit eigenvectors over `(I00, I10, I01, I11)`, largest-magnitude
    /// component positive.
    pub eigenvectors: [[f64; 4]; 4],
    /// Eigenvalues divided by `<I_av^2>`; `None` when that is zero.
    pub normalized_eigenvalues: Option<[f64; 4]>,
    pub sweeps: usize,
}

/// Principal components of a covariance summary.
pub fn pca(cov: &CovarianceSummary) -> Result<PcaResult, AnalysisError> {
    let c = &cov.matrix;
    let scale = c.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut asym = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            asym = asym.max((c[i][j] - c[j][i]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(AnalysisError::NotSymmetric(asym));
    }

    let (values, vectors, sweeps) = jacobi_eigen(c);
    let align = |v: &[f64; 4]| v.iter().zip(&AVERAGE_DIRECTION).map(|(a, b)| a * b).sum::<f64>().abs();
    let mut zero = 0;
    for k in 1..4 {
        if align(&vectors[k]) > align(&vectors[zero]) {
            zero = k;
        }
    }
    let mut rest: Vec<usize> = (0..4).filter(|&k| k != zero).collect();
    rest.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let mut eigenvalues = [0.0; 4];
    let mut eigenvectors = [[0.0; 4]; 4];
    for (slot, k) in std::iter::once(zero).chain(rest).enumerate() {
        eigenvalues[slot] = values[k];
        eigenvectors[slot] = orient(vectors[k]);
    }
    let normalized_eigenvalues = (cov.mean_iav_sq > 0.0).then(|| eigenvalues.map(|l| l / cov.mean_iav_sq));
    Ok(PcaResult { eigenvalues, eigenvectors, normalized_eigenvalues, sweeps })
}

/// Flips `v` so its largest-magnitude component is positive; among
/// components equal in magnitude to within rounding the first one decides.
fn orient(v: [f64; 4]) -> [f64; 4] {
    let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lead = v.iter().position(|x| x.abs() >= big * (1.0 - 1e-9)).unwrap_or(0);
    if v[lead] < 0.0 {
        v.map(|x| -x)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(matrix: [[f64; 4]; 4]) -> CovarianceSummary {
        CovarianceSummary { matrix, mean_iav_sq: 1.0, samples: 10, shifted: false }
    }

    #[test]
    fn diagonal_matrix_keeps_its_axes() {
        let mut m = [[0.0; 4]; 4];
        m[1][1] = 3.0;
        m[2][2] = 2.0;
        m[3][3] = 1.0;
        // the zero eigenvalue's axis e0 ties with the others for alignment;
        // the first maximal one is taken
        let r = pca(&summary(m)).unwrap();
        assert_eq!(r.eigenvalues, [0.0, 3.0, 2.0, 1.0]);
        for (k, v) in r.eigenvectors.iter().enumerate() {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            assert_eq!(*v, e);
        }
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let m = [[4.0, 1.0, -0.5, 0.2], [1.0, 3.0, 0.7, -1.0], [-0.5, 0.7, 2.0, 0.3], [0.2, -1.0, 0.3, 1.5]];
        let r = pca(&summary(m)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|k| r.eigenvectors[i][k] * r.eigenvectors[j][k]).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                let rec: f64 = (0..4).map(|k| r.eigenvalues[k] * r.eigenvectors[k][i] * r.eigenvectors[k][j]).sum();
                assert!((rec - m[i][j]).abs() < 1e-12 * 4.0);
            }
        }
        assert!(r.eigenvalues[1] >= r.eigenvalues[2] && r.eigenvalues[2] >= r.eigenvalues[3]);
        for v in &r.eigenvectors {
            let lead = v.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut m = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        m[0][1] = 0.5;
        assert!(matches!(pca(&summary(m)), Err(AnalysisError::NotSymmetric(_))));
    }

    #[test]
    fn jacobi_on_a_two_by_two() {
        let (vals, vecs, _) = jacobi_eigen(&[[2.0, 1.0], [1.0, 2.0]]);
        let mut v = vals;
        v.sort_by(f64::total_cmp);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 3.0).abs() < 1e-15);
        for (k, vec) in vecs.iter().enumerate() {
            let av = [2.0 * vec[0] + vec[1], vec[0] + 2.0 * vec[1]];
            assert!((av[0] - vals[k] * vec[0]).abs() < 1e-14 && (av[1] - vals[k] * vec[1]).abs() < 1e-14);
        }
    }
}
