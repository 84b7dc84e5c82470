//! Fréchet distance between Gaussian fits of two feature sets.

use super::MetricsError;
use nalgebra::DMatrix;

/// Ridge added to both covariances before the matrix square root; it
/// cancels in the self-distance because every trace term sees it.
pub const COV_REGULARIZER: f64 = 1e-6;

const SYMMETRY_TOL: f64 = 1e-8;
const EIGEN_FLOOR: f64 = -1e-8;

/// Square root of a symmetric PSD matrix (row-major `d x d`), via
/// eigendecomposition with slightly-negative eigenvalues clamped to 0.
pub fn sqrtm_psd(a: &[f64], d: usize) -> Result<Vec<f64>, MetricsError> {
    assert_eq!(a.len(), d * d, "matrix data must be d*d");
    for i in 0..d {
        for j in (i + 1)..d {
            let delta = (a[i * d + j] - a[j * d + i]).abs();
            if delta > SYMMETRY_TOL {
                return Err(MetricsError::Asymmetric { i, j, delta });
            }
        }
    }
    let m = DMatrix::from_row_slice(d, d, a);
    // Exact symmetrization so the eigensolver sees a symmetric matrix.
    let m = (&m + m.transpose()) * 0.5;
    let eigen = m.symmetric_eigen();
    let mut roots = Vec::with_capacity(d);
    for &ev in eigen.eigenvalues.iter() {
        if ev < EIGEN_FLOOR {
            return Err(MetricsError::NotPsd { eigenvalue: ev });
        }
        roots.push(ev.max(0.0).sqrt());
    }
    let q = eigen.eigenvectors;
    let sqrt = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(roots)) * q.transpose();
    Ok(sqrt.transpose().as_slice().to_vec())
}

fn mean_and_cov(features: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = features.len();
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, &v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    // Unbiased sample covariance.
    let mut cov = vec![0.0; d * d];
    for f in features {
        for i in 0..d {
            let di = f[i] - mean[i];
            for j in 0..d {
                cov[i * d + j] += di * (f[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1).max(1) as f64;
    for c in &mut cov {
        *c /= denom;
    }
    (mean, cov)
}

/// Fréchet distance from explicit Gaussian moments; both covariances
/// receive the same ridge so identical moments give exactly zero.
pub fn fid_from_moments(
    mu_real: &[f64],
    cov_real: &[f64],
    mu_fake: &[f64],
    cov_fake: &[f64],
) -> Result<f64, MetricsError> {
    let d = mu_real.len();
    if mu_fake.len() != d {
        return Err(MetricsError::DimMismatch {
            expected: d,
            got: mu_fake.len(),
        });
    }
    assert_eq!(cov_real.len(), d * d, "covariance must be d*d");
    assert_eq!(cov_fake.len(), d * d, "covariance must be d*d");

    let ridge = |cov: &[f64]| -> Vec<f64> {
        let mut out = cov.to_vec();
        for i in 0..d {
            out[i * d + i] += COV_REGULARIZER;
        }
        out
    };
    let cr = ridge(cov_real);
    let cf = ridge(cov_fake);

    let mean_gap: f64 = mu_real
        .iter()
        .zip(mu_fake)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    let trace = |m: &[f64]| (0..d).map(|i| m[i * d + i]).sum::<f64>();

    // tr((Cr Cf)^(1/2)) computed through the symmetric form
    // sqrt(Cr)^T Cf sqrt(Cr), which shares its eigenvalues.
    let sr = sqrtm_psd(&cr, d)?;
    let srm = DMatrix::from_row_slice(d, d, &sr);
    let cfm = DMatrix::from_row_slice(d, d, &cf);
    let inner = &srm * cfm * &srm;
    let inner_vec: Vec<f64> = inner.transpose().as_slice().to_vec();
    let cross = sqrtm_psd(&inner_vec, d)?;
    let tr_cross = trace(&cross);

    Ok(mean_gap + trace(&cr) + trace(&cf) - 2.0 * tr_cross)
}

/// Fréchet distance between Gaussian fits of two feature sets.
pub fn fid(
    features_real: &[Vec<f64>],
    features_fake: &[Vec<f64>],
) -> Result<f64, MetricsError> {
    if features_real.len() < 2 || features_fake.len() < 2 {
        return Err(MetricsError::SampleCount {
            need: 2,
            real: features_real.len(),
            fake: features_fake.len(),
        });
    }
    let d = features_real[0].len();
    for f in features_real.iter().chain(features_fake.iter()) {
        if f.len() != d {
            return Err(MetricsError::DimMismatch {
                expected: d,
                got: f.len(),
            });
        }
    }
    let (mu_r, cov_r) = mean_and_cov(features_real, d);
    let (mu_f, cov_f) = mean_and_cov(features_fake, d);
    fid_from_moments(&mu_r, &cov_r, &mu_f, &cov_f)
}
