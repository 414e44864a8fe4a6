use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Event,
    Censored,
}

impl Status {
    pub fn is_event(self) -> bool {
        self == Status::Event
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: f64,
    pub status: Status,
    pub group: Option<String>,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn event(time: f64) -> Self {
        Self {
            time,
            status: Status::Event,
            group: None,
            covariates: Vec::new(),
        }
    }

    pub fn censored(time: f64) -> Self {
        Self {
            time,
            status: Status::Censored,
            group: None,
            covariates: Vec::new(),
        }
    }

    pub fn in_group(mut self, group: &str) -> Self {
        self.group = Some(group.to_string());
        self
    }

    pub fn with_covariates(mut self, z: Vec<f64>) -> Self {
        self.covariates = z;
        self
    }
}

/// Right-censored survival data with optional group labels and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    observations: Vec<Observation>,
    covariate_names: Vec<String>,
    pub time_unit: String,
}

impl SurvivalDataset {
    pub fn new(observations: Vec<Observation>, time_unit: &str) -> Result<Self> {
        Self::with_covariates(observations, Vec::new(), time_unit)
    }

    pub fn with_covariates(
        observations: Vec<Observation>,
        covariate_names: Vec<String>,
        time_unit: &str,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        let data = Self {
            observations,
            covariate_names,
            time_unit: time_unit.to_string(),
        };
        data.validate()?;
        Ok(data)
    }

    /// A dataset without observations, used for prior-predictive runs.
    pub fn unobserved(time_unit: &str) -> Self {
        Self {
            observations: Vec::new(),
            covariate_names: Vec::new(),
            time_unit: time_unit.to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        for (i, o) in self.observations.iter().enumerate() {
            if !(o.time.is_finite() && o.time > 0.0) {
                return Err(Error::Dataset {
                    row: i + 1,
                    column: "time".into(),
                    message: format!("time must be positive and finite, got {}", o.time),
                });
            }
            if o.covariates.len() != self.covariate_names.len() {
                return Err(Error::Dataset {
                    row: i + 1,
                    column: "covariates".into(),
                    message: format!(
                        "expected {} covariates, found {}",
                        self.covariate_names.len(),
                        o.covariates.len()
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Largest observed time (event or censored); 0 when empty.
    pub fn max_time(&self) -> f64 {
        self.observations.iter().map(|o| o.time).fold(0.0, f64::max)
    }

    pub fn times(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.time).collect()
    }

    /// Distinct group labels in order of first appearance; unlabeled
    /// observations form the group `""`.
    pub fn group_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for o in &self.observations {
            let g = o.group.clone().unwrap_or_default();
            if !labels.contains(&g) {
                labels.push(g);
            }
        }
        labels
    }

    /// Observations split by group label, in `group_labels` order.
    pub fn by_group(&self) -> Vec<(String, Vec<Observation>)> {
        let labels = self.group_labels();
        let mut map: BTreeMap<&str, Vec<Observation>> = BTreeMap::new();
        for o in &self.observations {
            map.entry(o.group.as_deref().unwrap_or(""))
                .or_default()
                .push(o.clone());
        }
        labels
            .into_iter()
            .map(|l| {
                let obs = map.remove(l.as_str()).unwrap_or_default();
                (l, obs)
            })
            .collect()
    }

    /// Copy with every time divided by `divisor`.
    pub fn rescaled(&self, divisor: f64, time_unit: &str) -> Result<Self> {
        if !(divisor > 0.0 && divisor.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid divisor {divisor}")));
        }
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                time: o.time / divisor,
                ..o.clone()
            })
            .collect();
        Ok(Self {
            observations,
            covariate_names: self.covariate_names.clone(),
            time_unit: time_unit.to_string(),
        })
    }

    /// Copy with all group labels removed.
    pub fn pooled(&self) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation {
                group: None,
                ..o.clone()
            })
            .collect();
        Self {
            observations,
            covariate_names: self.covariate_names.clone(),
            time_unit: self.time_unit.clone(),
        }
    }

    /// Subset belonging to group `label`.
    pub fn group(&self, label: &str) -> Option<Self> {
        let observations: Vec<Observation> = self
            .observations
            .iter()
            .filter(|o| o.group.as_deref().unwrap_or("") == label)
            .cloned()
            .collect();
        if observations.is_empty() {
            return None;
        }
        Some(Self {
            observations,
            covariate_names: self.covariate_names.clone(),
            time_unit: self.time_unit.clone(),
        })
    }
}
