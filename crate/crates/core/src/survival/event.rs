use rand::Rng;
use rand_distr::Exp1;

use super::HazardSpec;
use crate::error::{Error, Result};
use crate::path::DiffusionPath;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventDraw {
    Event(f64),
    Censored(f64),
}

impl EventDraw {
    pub fn time(self) -> f64 {
        match self {
            Self::Event(t) | Self::Censored(t) => t,
        }
    }

    pub fn is_event(self) -> bool {
        matches!(self, Self::Event(_))
    }
}

/// First time the cumulative hazard reaches `barrier`, with linear
/// interpolation inside the crossing interval; censored at `horizon`.
pub fn event_time_for_barrier(
    path: &DiffusionPath,
    h: HazardSpec,
    horizon: f64,
    barrier: f64,
) -> Result<EventDraw> {
    let end = path.grid().index_of(horizon).map_err(|_| {
        Error::InvalidArgument(format!("horizon {horizon} is not a node of the path grid"))
    })?;
    let (times, values) = (path.times(), path.values());
    let mut cum = 0.0;
    for k in 0..end {
        let dt = times[k + 1] - times[k];
        let inc = h.eval(values[k]) * dt;
        if cum + inc >= barrier && inc > 0.0 {
            let frac = ((barrier - cum) / inc).clamp(0.0, 1.0);
            return Ok(EventDraw::Event(times[k] + frac * dt));
        }
        cum += inc;
    }
    Ok(EventDraw::Censored(horizon))
}

/// Event time under the random-barrier construction: the event happens
/// when the cumulative hazard first exceeds an independent `Exp(1)` barrier.
pub fn sample_event_time<R: Rng + ?Sized>(
    path: &DiffusionPath,
    h: HazardSpec,
    horizon: f64,
    rng: &mut R,
) -> Result<EventDraw> {
    let barrier: f64 = rng.sample(Exp1);
    event_time_for_barrier(path, h, horizon, barrier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::stream_rng;
    use crate::path::{make_grid, TimeGrid};

    #[test]
    fn piecewise_constant_inversion() {
        let g = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap().shared();
        let p = DiffusionPath::new(g, vec![1.0, 3.0, 3.0]).unwrap();
        let d = event_time_for_barrier(&p, HazardSpec::Identity, 2.0, 2.0).unwrap();
        match d {
            EventDraw::Event(t) => assert!((t - (1.0 + 1.0 / 3.0)).abs() < 1e-15),
            _ => panic!("expected an event"),
        }
    }

    #[test]
    fn zero_hazard_always_censored() {
        let g = make_grid(0.0, 3.0, 0.1, &[]).unwrap().shared();
        let p = DiffusionPath::new(g.clone(), vec![0.0; g.len()]).unwrap();
        let mut rng = stream_rng(0, 0);
        for _ in 0..100 {
            assert_eq!(
                sample_event_time(&p, HazardSpec::Abs, 3.0, &mut rng).unwrap(),
                EventDraw::Censored(3.0)
            );
        }
    }

    #[test]
    fn horizon_must_be_node() {
        let g = make_grid(0.0, 1.0, 0.1, &[]).unwrap().shared();
        let p = DiffusionPath::new(g.clone(), vec![1.0; g.len()]).unwrap();
        assert!(sample_event_time(&p, HazardSpec::Abs, 0.55, &mut stream_rng(0, 0)).is_err());
    }
}
