use crate::survival::{Observation, SurvivalDataset};

/// Remission lengths in weeks of the 6-MP arm; `true` marks censoring.
const SIX_MP: [(f64, bool); 21] = [
    (6.0, false),
    (6.0, false),
    (6.0, false),
    (6.0, true),
    (7.0, false),
    (9.0, true),
    (10.0, false),
    (10.0, true),
    (11.0, true),
    (13.0, false),
    (16.0, false),
    (17.0, true),
    (19.0, true),
    (20.0, true),
    (22.0, false),
    (23.0, false),
    (25.0, true),
    (32.0, true),
    (32.0, true),
    (34.0, true),
    (35.0, true),
];

/// Remission lengths in weeks of the placebo arm, all observed.
const PLACEBO: [f64; 21] = [
    1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0, 5.0, 8.0, 8.0, 8.0, 8.0, 11.0, 11.0, 12.0, 12.0, 15.0, 17.0, 22.0, 23.0,
];

pub const WEEKS_PER_YEAR: f64 = 52.0;

/// Acute leukemia remission data (6-MP against placebo, 42 patients).
#[derive(Debug, Clone, PartialEq)]
pub struct LeukemiaData {
    pub weeks: SurvivalDataset,
    /// The same data as fractions of a year.
    pub years: SurvivalDataset,
}

pub fn embedded_leukemia() -> LeukemiaData {
    let mut obs: Vec<Observation> = SIX_MP
        .iter()
        .map(|&(t, censored)| {
            let o = if censored { Observation::censored(t) } else { Observation::event(t) };
            o.in_group("6MP")
        })
        .collect();
    obs.extend(PLACEBO.iter().map(|&t| Observation::event(t).in_group("placebo")));
    let weeks = SurvivalDataset::new(obs, "weeks").expect("valid embedded data");
    let years = weeks.rescaled(WEEKS_PER_YEAR, "years").expect("positive divisor");
    LeukemiaData { weeks, years }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let d = embedded_leukemia();
        assert_eq!(d.weeks.len(), 42);
        let groups = d.weeks.by_group();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 21);
        assert_eq!(groups[1].1.len(), 21);
        let censored = |g: &[Observation]| g.iter().filter(|o| !o.status.is_event()).count();
        assert_eq!(censored(&groups[0].1), 12);
        assert_eq!(censored(&groups[1].1), 0);
        let last = groups[0].1.iter().max_by(|a, b| a.time.total_cmp(&b.time)).unwrap();
        assert_eq!(last.time, 35.0);
        assert!(!last.status.is_event());
        assert_eq!(d.years.observations()[0].time, 6.0 / 52.0);
    }
}
