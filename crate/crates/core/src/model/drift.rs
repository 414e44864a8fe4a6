use std::fmt;
use std::sync::Arc;

/// Scalar function of the state and the full parameter vector.
pub type StateFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Drift that depends on a covariate vector `z`: `(x, z, theta) -> beta`.
pub type CovariateFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// One term `theta[coefficient] * f(x, theta)` of a linear-basis drift.
/// `f` may read parameters other than the ones used as coefficients.
#[derive(Clone)]
pub struct BasisTerm {
    pub coefficient: usize,
    pub f: StateFn,
}

#[derive(Clone)]
pub enum DriftForm {
    /// `sum_i theta[c_i] f_i(x, theta) + offset(x, theta)`.
    LinearBasis {
        terms: Vec<BasisTerm>,
        offset: Option<StateFn>,
    },
    General(StateFn),
    /// Covariate-dependent drift bound to one covariate vector.
    Covariate { f: CovariateFn, z: Vec<f64> },
}

/// Drift function `beta(x, theta)` with parameter metadata.
#[derive(Clone)]
pub struct DriftSpec {
    form: DriftForm,
    names: Vec<String>,
}

impl fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match &self.form {
            DriftForm::LinearBasis { terms, offset } => format!(
                "LinearBasis({} terms{})",
                terms.len(),
                if offset.is_some() { " + offset" } else { "" }
            ),
            DriftForm::General(_) => "General".to_string(),
            DriftForm::Covariate { z, .. } => format!("Covariate(z = {z:?})"),
        };
        f.debug_struct("DriftSpec")
            .field("form", &form)
            .field("names", &self.names)
            .finish()
    }
}

/// Builder for linear-basis drifts; parameters are numbered in the order
/// they are declared.
#[derive(Default)]
pub struct LinearDriftBuilder {
    terms: Vec<BasisTerm>,
    offset: Option<StateFn>,
    names: Vec<String>,
}

impl LinearDriftBuilder {
    /// Declares a coefficient parameter multiplying basis function `f`.
    pub fn term<F>(mut self, name: &str, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.terms.push(BasisTerm {
            coefficient: self.names.len(),
            f: Arc::new(f),
        });
        self.names.push(name.to_string());
        self
    }

    /// Declares a parameter that only enters through the basis functions.
    pub fn param(mut self, name: &str) -> Self {
        self.names.push(name.to_string());
        self
    }

    pub fn offset<F>(mut self, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        self.offset = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> DriftSpec {
        DriftSpec {
            form: DriftForm::LinearBasis {
                terms: self.terms,
                offset: self.offset,
            },
            names: self.names,
        }
    }
}

impl DriftSpec {
    pub fn linear_basis() -> LinearDriftBuilder {
        LinearDriftBuilder::default()
    }

    /// Pure linear drift `theta^T f(x)` from same-typed basis closures.
    pub fn linear<F>(terms: Vec<(&str, F)>) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        terms
            .into_iter()
            .fold(Self::linear_basis(), |b, (name, f)| b.term(name, f))
            .build()
    }

    pub fn general<F>(dim: usize, names: Vec<String>, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        assert_eq!(names.len(), dim, "one name per parameter");
        Self {
            form: DriftForm::General(Arc::new(f)),
            names,
        }
    }

    pub fn covariate(names: Vec<String>, f: CovariateFn, z: Vec<f64>) -> Self {
        Self {
            form: DriftForm::Covariate { f, z },
            names,
        }
    }

    /// Same covariate drift bound to another covariate vector. Other forms
    /// are returned unchanged.
    pub fn with_covariates(&self, z: &[f64]) -> Self {
        match &self.form {
            DriftForm::Covariate { f, .. } => Self {
                form: DriftForm::Covariate {
                    f: Arc::clone(f),
                    z: z.to_vec(),
                },
                names: self.names.clone(),
            },
            _ => self.clone(),
        }
    }

    pub fn form(&self) -> &DriftForm {
        &self.form
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn eval(&self, x: f64, theta: &[f64]) -> f64 {
        match &self.form {
            DriftForm::LinearBasis { terms, offset } => {
                let mut acc = 0.0;
                for t in terms {
                    acc += theta[t.coefficient] * (t.f)(x, theta);
                }
                if let Some(off) = offset {
                    acc += off(x, theta);
                }
                acc
            }
            DriftForm::General(f) => f(x, theta),
            DriftForm::Covariate { f, z } => f(x, z, theta),
        }
    }

    /// Parameter indices that enter linearly, if the drift is linear-basis.
    pub fn linear_coefficients(&self) -> Option<Vec<usize>> {
        match &self.form {
            DriftForm::LinearBasis { terms, .. } => {
                Some(terms.iter().map(|t| t.coefficient).collect())
            }
            _ => None,
        }
    }

    /// Writes the basis values `f_i(x, theta)` into `basis` and returns the
    /// offset; `None` for drifts that are not linear-basis.
    #[inline]
    pub fn linear_design(&self, x: f64, theta: &[f64], basis: &mut [f64]) -> Option<f64> {
        match &self.form {
            DriftForm::LinearBasis { terms, offset } => {
                for (slot, t) in basis.iter_mut().zip(terms) {
                    *slot = (t.f)(x, theta);
                }
                Some(offset.as_ref().map_or(0.0, |off| off(x, theta)))
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> DriftSpec {
        DriftSpec::linear_basis()
            .term("theta1", |x, _| x.sin())
            .term("theta2", |_, _| 1.0)
            .build()
    }

    #[test]
    fn basis_at_zero() {
        let mut b = [f64::NAN; 2];
        let off = toy().linear_design(0.0, &[0.0, 0.0], &mut b).unwrap();
        assert_eq!(b, [0.0, 1.0]);
        assert_eq!(off, 0.0);
    }

    #[test]
    fn covariate_rebinding() {
        let f: CovariateFn = Arc::new(|x, z, th| th[0] * z[0] * x);
        let d = DriftSpec::covariate(vec!["a".into()], f, vec![1.0]);
        let d2 = d.with_covariates(&[3.0]);
        assert_eq!(d.eval(2.0, &[1.5]), 3.0);
        assert_eq!(d2.eval(2.0, &[1.5]), 9.0);
    }

    proptest! {
        #[test]
        fn linear_matches_general(x in -20.0f64..20.0, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
            let general = DriftSpec::general(2, vec!["a".into(), "b".into()], |x, th| {
                let mut acc = 0.0;
                acc += th[0] * x.sin();
                acc += th[1] * 1.0;
                acc
            });
            prop_assert_eq!(toy().eval(x, &[t1, t2]), general.eval(x, &[t1, t2]));
        }
    }
}
