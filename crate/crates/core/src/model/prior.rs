use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Univariate prior or proposal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution1D {
    Normal { mean: f64, var: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { mean: f64 },
    Beta { a: f64, b: f64 },
}

impl Distribution1D {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Normal { mean, var } => mean.is_finite() && var > 0.0 && var.is_finite(),
            Self::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Self::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            Self::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid distribution {self:?}")))
        }
    }

    /// Closed support bounds.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Uniform { lo, hi } => (lo, hi),
            Self::Exponential { .. } => (0.0, f64::INFINITY),
            Self::Beta { .. } => (0.0, 1.0),
        }
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Normal { mean, var } => -0.5 * (LN_2PI + var.ln() + (x - mean).powi(2) / var),
            Self::Uniform { lo, hi } => {
                if x >= lo && x <= hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Exponential { mean } => {
                if x >= 0.0 {
                    -mean.ln() - x / mean
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::Beta { a, b } => {
                if x > 0.0 && x < 1.0 {
                    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                        + (a - 1.0) * x.ln()
                        + (b - 1.0) * (1.0 - x).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Exponential { mean } => mean,
            Self::Beta { a, b } => a / (a + b),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, var } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + var.sqrt() * z
            }
            Self::Uniform { lo, hi } => rng.sample(Uniform::new_inclusive(lo, hi).expect("validated")),
            Self::Exponential { mean } => mean * rng.sample(Exp::new(1.0).expect("rate 1")),
            Self::Beta { a, b } => Beta::new(a, b).expect("validated").sample(rng),
        }
    }
}

/// Prior on one parameter or a jointly Gaussian group of parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorBlock {
    Marginal { index: usize, dist: Distribution1D },
    /// Gaussian with mean `mean` and precision matrix `precision`.
    Gaussian {
        indices: Vec<usize>,
        mean: DVector<f64>,
        precision: DMatrix<f64>,
    },
}

/// Prior over the whole drift/start parameter vector, as a product of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    dim: usize,
    blocks: Vec<PriorBlock>,
    /// Cholesky factors of the Gaussian block precisions, by block.
    factors: Vec<Option<DMatrix<f64>>>,
}

impl PriorSpec {
    pub fn new(dim: usize, blocks: Vec<PriorBlock>) -> Result<Self> {
        let mut seen = vec![false; dim];
        let mut factors = Vec::with_capacity(blocks.len());
        for block in &blocks {
            let indices = match block {
                PriorBlock::Marginal { index, dist } => {
                    dist.validate()?;
                    factors.push(None);
                    vec![*index]
                }
                PriorBlock::Gaussian {
                    indices,
                    mean,
                    precision,
                } => {
                    let k = indices.len();
                    if mean.len() != k || precision.nrows() != k || precision.ncols() != k {
                        return Err(Error::DimensionMismatch {
                            expected: k,
                            found: mean.len(),
                        });
                    }
                    if mean.iter().any(|m| !m.is_finite()) {
                        return Err(Error::InvalidArgument("non-finite prior mean".into()));
                    }
                    if (precision - precision.transpose()).amax() > 1e-12 * precision.amax() {
                        return Err(Error::InvalidArgument(
                            "prior precision is not symmetric".into(),
                        ));
                    }
                    let chol = precision
                        .clone()
                        .cholesky()
                        .ok_or(Error::NotPositiveDefinite)?;
                    factors.push(Some(chol.l()));
                    indices.clone()
                }
            };
            for i in indices {
                if i >= dim || seen[i] {
                    return Err(Error::InvalidArgument(format!(
                        "parameter {i} is out of range or has two priors"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("parameter {i} has no prior")));
        }
        Ok(Self {
            dim,
            blocks,
            factors,
        })
    }

    /// Independent marginal priors, one per parameter.
    pub fn independent(dists: Vec<Distribution1D>) -> Result<Self> {
        let dim = dists.len();
        let blocks = dists
            .into_iter()
            .enumerate()
            .map(|(index, dist)| PriorBlock::Marginal { index, dist })
            .collect();
        Self::new(dim, blocks)
    }

    /// A single joint Gaussian block over all parameters.
    pub fn gaussian(mean: Vec<f64>, precision: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        Self::new(
            dim,
            vec![PriorBlock::Gaussian {
                indices: (0..dim).collect(),
                mean: DVector::from_vec(mean),
                precision,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[PriorBlock] {
        &self.blocks
    }

    /// The marginal law of parameter `i` when it has its own block.
    pub fn marginal(&self, i: usize) -> Option<&Distribution1D> {
        self.blocks.iter().find_map(|b| match b {
            PriorBlock::Marginal { index, dist } if *index == i => Some(dist),
            _ => None,
        })
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: theta.len(),
            });
        }
        let mut total = 0.0;
        for (block, factor) in self.blocks.iter().zip(&self.factors) {
            total += match block {
                PriorBlock::Marginal { index, dist } => dist.logpdf(theta[*index]),
                PriorBlock::Gaussian {
                    indices,
                    mean,
                    precision,
                } => {
                    let r = DVector::from_iterator(
                        indices.len(),
                        indices.iter().zip(mean.iter()).map(|(&i, m)| theta[i] - m),
                    );
                    let l = factor.as_ref().expect("gaussian block factor");
                    let log_det: f64 = l.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
                    let quad = (r.transpose() * precision * &r)[(0, 0)];
                    -0.5 * (indices.len() as f64 * LN_2PI - log_det + quad)
                }
            };
        }
        Ok(total)
    }

    /// Log prior density of parameter `i` with the others held at `theta`.
    /// Differs from the joint log-density by a constant in `theta[i]`.
    pub fn log_conditional(&self, theta: &[f64], i: usize) -> f64 {
        match self.marginal(i) {
            Some(d) => d.logpdf(theta[i]),
            None => self.log_density(theta).unwrap_or(f64::NEG_INFINITY),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        for (block, factor) in self.blocks.iter().zip(&self.factors) {
            match block {
                PriorBlock::Marginal { index, dist } => theta[*index] = dist.sample(rng),
                PriorBlock::Gaussian { indices, mean, .. } => {
                    let l = factor.as_ref().expect("gaussian block factor");
                    let z = DVector::from_iterator(
                        indices.len(),
                        (0..indices.len()).map(|_| rng.sample::<f64, _>(StandardNormal)),
                    );
                    // precision = L L^T, so L^{-T} z has covariance precision^{-1}
                    let x = l
                        .transpose()
                        .solve_upper_triangular(&z)
                        .expect("nonsingular factor");
                    for (k, &i) in indices.iter().enumerate() {
                        theta[i] = mean[k] + x[k];
                    }
                }
            }
        }
        theta
    }

    /// Prior means; uniform laws give the support midpoint.
    pub fn mean(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        for block in &self.blocks {
            match block {
                PriorBlock::Marginal { index, dist } => theta[*index] = dist.mean(),
                PriorBlock::Gaussian { indices, mean, .. } => {
                    for (k, &i) in indices.iter().enumerate() {
                        theta[i] = mean[k];
                    }
                }
            }
        }
        theta
    }

    /// Gaussian mean and precision restricted to `indices`, when every one
    /// of them has a Gaussian prior that does not involve other parameters.
    pub(crate) fn gaussian_subset(&self, indices: &[usize]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let k = indices.len();
        let pos = |i: usize| indices.iter().position(|&j| j == i);
        let mut mu = DVector::zeros(k);
        let mut prec = DMatrix::zeros(k, k);
        let mut covered = vec![false; k];
        for block in &self.blocks {
            match block {
                PriorBlock::Marginal { index, dist } => {
                    if let Some(p) = pos(*index) {
                        let Distribution1D::Normal { mean, var } = *dist else {
                            return None;
                        };
                        mu[p] = mean;
                        prec[(p, p)] = 1.0 / var;
                        covered[p] = true;
                    }
                }
                PriorBlock::Gaussian {
                    indices: bi,
                    mean,
                    precision,
                } => {
                    let mapped: Vec<Option<usize>> = bi.iter().map(|&i| pos(i)).collect();
                    if mapped.iter().all(Option::is_none) {
                        continue;
                    }
                    if mapped.iter().any(Option::is_none) {
                        return None;
                    }
                    for (a, pa) in mapped.iter().enumerate() {
                        let pa = pa.expect("checked");
                        mu[pa] = mean[a];
                        covered[pa] = true;
                        for (b, pb) in mapped.iter().enumerate() {
                            prec[(pa, pb.expect("checked"))] = precision[(a, b)];
                        }
                    }
                }
            }
        }
        covered.iter().all(|&c| c).then_some((mu, prec))
    }
}

/// Diffusion coefficient: a known constant, or a parameter with a prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    Known(f64),
    Unknown { prior: Distribution1D, initial: f64 },
}

impl SigmaSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Known(s) if s > 0.0 && s.is_finite() => Ok(()),
            Self::Unknown { prior, initial } if initial > 0.0 && initial.is_finite() => {
                prior.validate()?;
                if prior.logpdf(initial).is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(
                        "initial sigma outside the prior support".into(),
                    ))
                }
            }
            _ => Err(Error::InvalidArgument(format!("invalid sigma {self:?}"))),
        }
    }

    pub fn initial(&self) -> f64 {
        match *self {
            Self::Known(s) => s,
            Self::Unknown { initial, .. } => initial,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Self::Unknown { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;

    #[test]
    fn uniform_contributions() {
        let u = Distribution1D::Uniform { lo: 0.0, hi: 1.0 };
        assert_eq!(u.logpdf(0.5), 0.0);
        assert_eq!(u.logpdf(1.5), f64::NEG_INFINITY);
    }

    #[test]
    fn standard_normal_at_zero() {
        let n = Distribution1D::Normal { mean: 0.0, var: 1.0 };
        assert!((n.logpdf(0.0) + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        let g = PriorSpec::gaussian(vec![0.0], DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!((g.log_density(&[0.0]).unwrap() - n.logpdf(0.0)).abs() < 1e-15);
    }

    #[test]
    fn beta_half_is_arcsine() {
        let b = Distribution1D::Beta { a: 0.5, b: 0.5 };
        let x: f64 = 0.3;
        let arcsine = 1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt());
        assert!((b.logpdf(x) - arcsine.ln()).abs() < 1e-12);
    }

    #[test]
    fn joint_gaussian_matches_marginals_when_diagonal() {
        let joint = PriorSpec::gaussian(
            vec![-1.4, -1.0],
            DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.2]),
        )
        .unwrap();
        let marg = PriorSpec::independent(vec![
            Distribution1D::Normal { mean: -1.4, var: 5.0 },
            Distribution1D::Normal { mean: -1.0, var: 5.0 },
        ])
        .unwrap();
        for th in [[0.0, 0.0], [-1.4, -1.0], [3.0, -7.0]] {
            let a = joint.log_density(&th).unwrap();
            let b = marg.log_density(&th).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let (mu, prec) = joint.gaussian_subset(&[1, 0]).unwrap();
        assert_eq!(mu.as_slice(), &[-1.0, -1.4]);
        assert_eq!(prec[(0, 0)], 0.2);
        assert!(joint.gaussian_subset(&[1]).is_none());
        let (mu, _) = marg.gaussian_subset(&[1]).unwrap();
        assert_eq!(mu[0], -1.0);
    }

    #[test]
    fn gaussian_sampling_moments() {
        let prec = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let cov = prec.clone().try_inverse().unwrap();
        let p = PriorSpec::gaussian(vec![1.0, -2.0], prec).unwrap();
        let mut rng = stream_rng(3, 0);
        let n = 100_000;
        let (mut s0, mut s1, mut s01) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let t = p.sample(&mut rng);
            s0 += (t[0] - 1.0).powi(2);
            s1 += (t[1] + 2.0).powi(2);
            s01 += (t[0] - 1.0) * (t[1] + 2.0);
        }
        let nf = n as f64;
        assert!((s0 / nf - cov[(0, 0)]).abs() < 0.02);
        assert!((s1 / nf - cov[(1, 1)]).abs() < 0.04);
        assert!((s01 / nf - cov[(0, 1)]).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(PriorSpec::independent(vec![Distribution1D::Uniform { lo: 1.0, hi: 1.0 }]).is_err());
        assert!(PriorSpec::independent(vec![Distribution1D::Exponential { mean: 0.0 }]).is_err());
        assert!(PriorSpec::gaussian(
            vec![0.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])
        )
        .is_err());
        assert!(PriorSpec::new(2, vec![PriorBlock::Marginal {
            index: 0,
            dist: Distribution1D::Normal { mean: 0.0, var: 1.0 }
        }])
        .is_err());
        assert!(PriorSpec::independent(vec![]).unwrap().log_density(&[1.0]).is_err());
    }

    #[test]
    fn finite_exactly_on_support() {
        let p = PriorSpec::independent(vec![
            Distribution1D::Uniform { lo: 0.0, hi: 1.0 },
            Distribution1D::Exponential { mean: 2.0 },
            Distribution1D::Beta { a: 0.5, b: 0.5 },
        ])
        .unwrap();
        let inside = [0.2, 3.0, 0.7];
        assert!(p.log_density(&inside).unwrap().is_finite());
        for (i, bad) in [(0, 1.1), (1, -0.1), (2, 1.0)] {
            let mut th = inside;
            th[i] = bad;
            assert_eq!(p.log_density(&th).unwrap(), f64::NEG_INFINITY);
        }
    }
}
