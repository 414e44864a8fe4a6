use super::SurvivalDataset;

/// Product-limit survival estimate, tabulated at distinct event times.
#[derive(Debug, Clone, PartialEq)]
pub struct KaplanMeier {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub at_risk: Vec<usize>,
    pub events: Vec<usize>,
}

impl KaplanMeier {
    /// Right-continuous step function: 1 before the first event time.
    pub fn eval(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        if i == 0 {
            1.0
        } else {
            self.survival[i - 1]
        }
    }
}

/// Kaplan–Meier estimator; at tied times deaths are counted before
/// censorings, so censored subjects are still at risk at their own time.
pub fn kaplan_meier(data: &SurvivalDataset) -> KaplanMeier {
    let mut obs: Vec<(f64, bool)> = data
        .observations()
        .iter()
        .map(|o| (o.time, o.status.is_event()))
        .collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut km = KaplanMeier {
        times: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut at_risk = obs.len();
    let mut s = 1.0;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut deaths = 0;
        let mut leaving = 0;
        while i < obs.len() && obs[i].0 == t {
            if obs[i].1 {
                deaths += 1;
            }
            leaving += 1;
            i += 1;
        }
        if deaths > 0 {
            s *= 1.0 - deaths as f64 / at_risk as f64;
            km.times.push(t);
            km.survival.push(s);
            km.at_risk.push(at_risk);
            km.events.push(deaths);
        }
        at_risk -= leaving;
    }
    km
}
