use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{DriftSpec, PriorSpec};
use crate::path::DiffusionPath;

/// Gaussian full conditional of the linear drift coefficients.
#[derive(Debug, Clone)]
pub struct ConjugateConditional {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl ConjugateConditional {
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.precision.nrows();
        let l_inv = self
            .factor
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("nonsingular factor");
        l_inv.transpose() * l_inv
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let k = self.mean.len();
        let z = DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = self
            .factor
            .transpose()
            .solve_upper_triangular(&z)
            .expect("nonsingular factor");
        &self.mean + x
    }
}

/// Accumulates `sum f_i dx - f_i f0 dt` and `sum f_i f_j dt` over the
/// intervals `0..end` of one path, where `f0` collects the offset and the
/// non-block linear terms.
pub(crate) fn accumulate(
    drift: &DriftSpec,
    theta: &[f64],
    block: &[usize],
    times: &[f64],
    values: &[f64],
    end: usize,
    s: &mut DVector<f64>,
    l: &mut DMatrix<f64>,
) -> Result<()> {
    let coefs = drift.linear_coefficients().ok_or_else(|| {
        Error::InvalidArgument("conjugate update needs a linear-basis drift".into())
    })?;
    let slot: Vec<Option<usize>> = coefs
        .iter()
        .map(|c| block.iter().position(|b| b == c))
        .collect();
    let mut basis = vec![0.0; coefs.len()];
    let mut f = vec![0.0; block.len()];
    for k in 0..end {
        let mut f0 = drift
            .linear_design(values[k], theta, &mut basis)
            .expect("linear drift");
        f.iter_mut().for_each(|v| *v = 0.0);
        for (j, b) in basis.iter().enumerate() {
            match slot[j] {
                Some(p) => f[p] += b,
                None => f0 += theta[coefs[j]] * b,
            }
        }
        let dx = values[k + 1] - values[k];
        let dt = times[k + 1] - times[k];
        for i in 0..f.len() {
            s[i] += f[i] * (dx - f0 * dt);
            for j in 0..=i {
                l[(i, j)] += f[i] * f[j] * dt;
            }
        }
    }
    Ok(())
}

pub(crate) fn finish(
    mut s: DVector<f64>,
    mut l: DMatrix<f64>,
    sigma: f64,
    prior: &PriorSpec,
    block: &[usize],
) -> Result<ConjugateConditional> {
    let (mu, lambda) = prior.gaussian_subset(block).ok_or_else(|| {
        Error::InvalidArgument("conjugate block needs a Gaussian prior of its own".into())
    })?;
    let inv_s2 = 1.0 / (sigma * sigma);
    let k = block.len();
    for i in 0..k {
        for j in 0..i {
            l[(j, i)] = l[(i, j)];
        }
    }
    s *= inv_s2;
    s += &lambda * &mu;
    l *= inv_s2;
    l += &lambda;
    let chol = l.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mean = chol.solve(&s);
    Ok(ConjugateConditional {
        mean,
        precision: l,
        factor: chol.l(),
    })
}

/// Gaussian conditional of the coefficients `block` given paths observed on
/// windows `[start, end_k]`: precision `L = sigma^-2 sum int f f^T dt + Lambda`
/// and mean `L^-1 S` with `S = sigma^-2 sum (int f dx - int f f0 dt) + Lambda mu`.
pub fn conjugate_posterior(
    drift: &DriftSpec,
    theta: &[f64],
    block: &[usize],
    sigma: f64,
    paths: &[(&DiffusionPath, f64)],
    prior: &PriorSpec,
) -> Result<ConjugateConditional> {
    if theta.len() != drift.dim() {
        return Err(Error::DimensionMismatch {
            expected: drift.dim(),
            found: theta.len(),
        });
    }
    let k = block.len();
    let mut s = DVector::zeros(k);
    let mut l = DMatrix::zeros(k, k);
    for (path, end) in paths {
        let e = path.grid().index_of(*end)?;
        accumulate(drift, theta, block, path.times(), path.values(), e, &mut s, &mut l)?;
    }
    finish(s, l, sigma, prior, block)
}

/// Draws the coefficients in `block` from their Gaussian conditional and
/// returns the updated parameter vector.
pub fn conjugate_theta_update<R: Rng + ?Sized>(
    drift: &DriftSpec,
    theta: &[f64],
    block: &[usize],
    sigma: f64,
    paths: &[(&DiffusionPath, f64)],
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let post = conjugate_posterior(drift, theta, block, sigma, paths, prior)?;
    let draw = post.sample(rng);
    let mut out = theta.to_vec();
    for (p, &i) in block.iter().enumerate() {
        out[i] = draw[p];
    }
    Ok(out)
}
