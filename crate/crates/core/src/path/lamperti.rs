use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::DriftSpec;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// State-dependent diffusion coefficient `sigma(x)`.
#[derive(Clone)]
pub enum DiffusionCoefficient {
    /// `sigma(x) = s`.
    Constant(f64),
    /// `sigma(x) = s * x` on `x > 0`.
    Proportional(f64),
    /// Arbitrary coefficient with its derivative on an open domain.
    /// The forward map is anchored so that `eta(anchor) = 0`.
    Custom {
        sigma: ScalarFn,
        derivative: ScalarFn,
        domain: (f64, f64),
        anchor: f64,
    },
}

impl fmt::Debug for DiffusionCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(s) => write!(f, "Constant({s})"),
            Self::Proportional(s) => write!(f, "Proportional({s})"),
            Self::Custom { domain, anchor, .. } => {
                write!(f, "Custom(domain = {domain:?}, anchor = {anchor})")
            }
        }
    }
}

/// Maps between the original state `x` and the unit-coefficient state
/// `y = eta(x)`, plus the drift of `y`.
#[derive(Clone, Debug)]
pub struct LampertiTransform {
    coefficient: DiffusionCoefficient,
    drift: DriftSpec,
}

fn vanishing(x: f64) -> Error {
    Error::InvalidArgument(format!("diffusion coefficient vanishes or is invalid at x = {x}"))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return f64::NAN;
        }
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 40)
}

impl DiffusionCoefficient {
    fn domain(&self) -> (f64, f64) {
        match self {
            Self::Constant(_) => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Proportional(_) => (0.0, f64::INFINITY),
            Self::Custom { domain, .. } => *domain,
        }
    }

    fn in_domain(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x.is_finite() && x > lo && x < hi
    }

    pub fn sigma(&self, x: f64) -> f64 {
        match self {
            Self::Constant(s) => *s,
            Self::Proportional(s) => s * x,
            Self::Custom { sigma, .. } => sigma(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::Proportional(s) => *s,
            Self::Custom { derivative, .. } => derivative(x),
        }
    }

    fn forward(&self, x: f64) -> Result<f64> {
        if !self.in_domain(x) {
            return Err(vanishing(x));
        }
        match self {
            Self::Constant(s) => Ok(x / s),
            Self::Proportional(s) => Ok(x.ln() / s),
            Self::Custom { sigma, anchor, .. } => {
                let check = |z: f64| {
                    let s = sigma(z);
                    if s > 0.0 && s.is_finite() {
                        1.0 / s
                    } else {
                        f64::NAN
                    }
                };
                let v = adaptive_simpson(&check, *anchor, x, 1e-14);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(vanishing(x))
                }
            }
        }
    }

    fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite state {y}")));
        }
        match self {
            Self::Constant(s) => Ok(s * y),
            Self::Proportional(s) => Ok((s * y).exp()),
            Self::Custom { anchor, domain, .. } => {
                // eta is increasing; bracket the root then bisect with Newton steps.
                let (dlo, dhi) = *domain;
                let mut step = 1.0f64;
                let (mut lo, mut hi) = (*anchor, *anchor);
                let target = |x: f64| self.forward(x).map(|v| v - y);
                if y >= 0.0 {
                    while target(hi)? < 0.0 {
                        lo = hi;
                        hi = if dhi.is_finite() { 0.5 * (hi + dhi) } else { hi + step };
                        step *= 2.0;
                        if step > 1e300 {
                            return Err(vanishing(hi));
                        }
                    }
                } else {
                    while target(lo)? > 0.0 {
                        hi = lo;
                        lo = if dlo.is_finite() { 0.5 * (lo + dlo) } else { lo - step };
                        step *= 2.0;
                        if step > 1e300 {
                            return Err(vanishing(lo));
                        }
                    }
                }
                let mut x = 0.5 * (lo + hi);
                for _ in 0..200 {
                    let fx = target(x)?;
                    if fx == 0.0 {
                        break;
                    }
                    if fx < 0.0 {
                        lo = x;
                    } else {
                        hi = x;
                    }
                    let newton = x - fx * self.sigma(x);
                    let next = if newton > lo && newton < hi {
                        newton
                    } else {
                        0.5 * (lo + hi)
                    };
                    if (next - x).abs() <= 1e-16 * x.abs().max(1.0) {
                        x = next;
                        break;
                    }
                    x = next;
                }
                Ok(x)
            }
        }
    }
}

impl LampertiTransform {
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.coefficient.forward(x)
    }

    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.coefficient.inverse(y)
    }

    /// Drift of `Y = eta(X)`: `beta(x)/sigma(x) - sigma'(x)/2` at `x = eta^{-1}(y)`.
    pub fn drift(&self) -> &DriftSpec {
        &self.drift
    }

    pub fn coefficient(&self) -> &DiffusionCoefficient {
        &self.coefficient
    }
}

/// Transforms `dX = beta(X) dt + sigma(X) dB` into a unit-coefficient SDE.
pub fn lamperti_transform(
    coefficient: &DiffusionCoefficient,
    drift: &DriftSpec,
) -> Result<LampertiTransform> {
    match coefficient {
        DiffusionCoefficient::Constant(s) | DiffusionCoefficient::Proportional(s)
            if !(*s > 0.0 && s.is_finite()) =>
        {
            return Err(vanishing(f64::NAN));
        }
        DiffusionCoefficient::Custom { domain, anchor, sigma, .. } => {
            if !(domain.0 < *anchor && *anchor < domain.1) {
                return Err(Error::InvalidArgument(
                    "anchor must lie inside the domain".into(),
                ));
            }
            if !(sigma(*anchor) > 0.0) {
                return Err(vanishing(*anchor));
            }
        }
        _ => {}
    }
    let coef = coefficient.clone();
    let inner = drift.clone();
    let transformed = DriftSpec::general(drift.dim(), drift.names().to_vec(), move |y, theta| {
        match coef.inverse(y) {
            Ok(x) => inner.eval(x, theta) / coef.sigma(x) - 0.5 * coef.derivative(x),
            Err(_) => f64::NAN,
        }
    });
    Ok(LampertiTransform {
        coefficient: coefficient.clone(),
        drift: transformed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_decay() -> DriftSpec {
        DriftSpec::linear(vec![("theta", |x: f64, _: &[f64]| -x * x)])
    }

    #[test]
    fn constant_rescales() {
        let t = lamperti_transform(&DiffusionCoefficient::Constant(2.0), &quadratic_decay()).unwrap();
        assert_eq!(t.forward(3.0).unwrap(), 1.5);
        // beta(x)/sigma at x = 2y
        let y = 0.7;
        let expected = -(2.0f64 * y).powi(2) * 0.3 / 2.0;
        assert!((t.drift().eval(y, &[0.3]) - expected).abs() < 1e-15);
    }

    #[test]
    fn proportional_matches_closed_form() {
        let s = 0.4;
        let theta = 1.7;
        let t = lamperti_transform(&DiffusionCoefficient::Proportional(s), &quadratic_decay()).unwrap();
        for y in [-3.0, -0.5, 0.0, 0.8, 2.5] {
            let closed = -(theta / s) * (s * y).exp() - s / 2.0;
            let got = t.drift().eval(y, &[theta]);
            assert!((got - closed).abs() < 1e-12 * closed.abs().max(1.0), "{got} vs {closed}");
        }
        assert!((t.forward(5.0).unwrap() - 5f64.ln() / s).abs() < 1e-15);
    }

    #[test]
    fn ito_generator_check() {
        // Independent route: drift of eta(X) is  beta eta' + sigma^2 eta'' / 2
        // with derivatives of the forward map taken by central differences.
        let s = 0.6;
        let theta = 0.9;
        let coef = DiffusionCoefficient::Proportional(s);
        let t = lamperti_transform(&coef, &quadratic_decay()).unwrap();
        let eta = |x: f64| t.forward(x).unwrap();
        for x in [0.3, 1.0, 2.2] {
            let h = 1e-4 * x;
            let d1 = (eta(x + h) - eta(x - h)) / (2.0 * h);
            let d2 = (eta(x + h) - 2.0 * eta(x) + eta(x - h)) / (h * h);
            let generator = -theta * x * x * d1 + 0.5 * (s * x).powi(2) * d2;
            let got = t.drift().eval(eta(x), &[theta]);
            assert!((got - generator).abs() < 1e-5, "{got} vs {generator}");
        }
    }

    #[test]
    fn round_trips() {
        let custom = DiffusionCoefficient::Custom {
            sigma: Arc::new(|x| 1.0 + x * x),
            derivative: Arc::new(|x| 2.0 * x),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            anchor: 0.0,
        };
        for coef in [
            DiffusionCoefficient::Constant(0.3),
            DiffusionCoefficient::Proportional(0.7),
            custom,
        ] {
            let t = lamperti_transform(&coef, &quadratic_decay()).unwrap();
            for x in [0.1, 1.0, 10.0] {
                let back = t.inverse(t.forward(x).unwrap()).unwrap();
                assert!((back - x).abs() < 1e-12 * x.max(1.0), "{coef:?}: {back} vs {x}");
            }
        }
    }

    #[test]
    fn custom_matches_arctan() {
        let custom = DiffusionCoefficient::Custom {
            sigma: Arc::new(|x| 1.0 + x * x),
            derivative: Arc::new(|x| 2.0 * x),
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            anchor: 0.0,
        };
        let t = lamperti_transform(&custom, &quadratic_decay()).unwrap();
        for x in [-2.0, 0.5, 3.0] {
            assert!((t.forward(x).unwrap() - f64::atan(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn vanishing_coefficient_errors() {
        let t = lamperti_transform(&DiffusionCoefficient::Proportional(1.0), &quadratic_decay()).unwrap();
        assert!(t.forward(0.0).is_err());
        assert!(t.forward(-1.0).is_err());
        assert!(lamperti_transform(&DiffusionCoefficient::Constant(0.0), &quadratic_decay()).is_err());
        let bad = DiffusionCoefficient::Custom {
            sigma: Arc::new(|x| x),
            derivative: Arc::new(|_| 1.0),
            domain: (-1.0, 1.0),
            anchor: 0.5,
        };
        let t = lamperti_transform(&bad, &quadratic_decay()).unwrap();
        assert!(t.forward(-0.5).is_err());
    }
}
