use super::likelihood::cumulative_profile;
use super::HazardSpec;
use crate::error::Result;
use crate::path::{DiffusionPath, TimeGrid};

/// A function of time tabulated on output nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

fn output_indices(path: &DiffusionPath, grid: &TimeGrid) -> Result<Vec<usize>> {
    grid.nodes()
        .iter()
        .map(|&t| path.grid().index_of(t))
        .collect()
}

/// `S(t) = exp(-Lambda(t))` at every node of `grid` (which must be path nodes).
pub fn survival_curve(path: &DiffusionPath, h: HazardSpec, grid: &TimeGrid) -> Result<Curve> {
    let idx = output_indices(path, grid)?;
    let cum = cumulative_profile(path.times(), path.values(), h);
    Ok(Curve {
        times: grid.nodes().to_vec(),
        values: idx.iter().map(|&k| (-cum[k]).exp()).collect(),
    })
}

/// `h(x_t)` at every node of `grid`.
pub fn hazard_curve(path: &DiffusionPath, h: HazardSpec, grid: &TimeGrid) -> Result<Curve> {
    let idx = output_indices(path, grid)?;
    Ok(Curve {
        times: grid.nodes().to_vec(),
        values: idx.iter().map(|&k| h.eval(path.values()[k])).collect(),
    })
}

/// `f(t) = h(x_t) S(t)` at every node of `grid`.
pub fn density_curve(path: &DiffusionPath, h: HazardSpec, grid: &TimeGrid) -> Result<Curve> {
    let s = survival_curve(path, h, grid)?;
    let hz = hazard_curve(path, h, grid)?;
    Ok(Curve {
        times: s.times,
        values: hz.values.iter().zip(&s.values).map(|(a, b)| a * b).collect(),
    })
}

/// Survival, hazard and density at node indices `idx` of a path.
pub(crate) fn curve_triplet(
    times: &[f64],
    values: &[f64],
    h: HazardSpec,
    idx: &[usize],
    out_s: &mut Vec<f64>,
    out_h: &mut Vec<f64>,
    out_f: &mut Vec<f64>,
) {
    let cum = cumulative_profile(times, values, h);
    for &k in idx {
        let s = (-cum[k]).exp();
        let hz = h.eval(values[k]);
        out_s.push(s);
        out_h.push(hz);
        out_f.push(hz * s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::{make_grid, sample_brownian_path};
    use crate::survival::cumulative_hazard;

    #[test]
    fn constant_path_is_exponential() {
        let g = make_grid(0.0, 2.0, 0.1, &[]).unwrap().shared();
        let p = DiffusionPath::new(g.clone(), vec![0.8; g.len()]).unwrap();
        let s = survival_curve(&p, HazardSpec::Square, &g).unwrap();
        for (t, v) in s.times.iter().zip(&s.values) {
            assert!((v - (-0.64 * t).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn flat_where_hazard_vanishes() {
        let g = make_grid(0.0, 1.0, 0.25, &[]).unwrap().shared();
        let p = DiffusionPath::new(g.clone(), vec![1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = survival_curve(&p, HazardSpec::Abs, &g).unwrap();
        assert_eq!(s.values[2], s.values[3]);
        assert_eq!(s.values[3], s.values[4]);
    }

    #[test]
    fn consistency_and_monotonicity() {
        let g = make_grid(0.0, 1.5, 0.01, &[]).unwrap().shared();
        for seed in 0..20 {
            let p = sample_brownian_path(&g, 1.0, 1.0, &mut stream_rng(seed, 0)).unwrap();
            let s = survival_curve(&p, HazardSpec::Square, &g).unwrap();
            let hz = hazard_curve(&p, HazardSpec::Square, &g).unwrap();
            let f = density_curve(&p, HazardSpec::Square, &g).unwrap();
            assert_eq!(s.values[0], 1.0);
            assert!(s.values.windows(2).all(|w| w[1] <= w[0]));
            for i in 0..g.len() {
                assert_eq!(f.values[i], hz.values[i] * s.values[i]);
                assert!(f.values[i] >= 0.0);
                let lam = cumulative_hazard(&p, HazardSpec::Square, g.nodes()[i]).unwrap();
                assert!((s.values[i] * lam.exp() - 1.0).abs() <= 4.0 * f64::EPSILON);
            }
        }
    }
}
