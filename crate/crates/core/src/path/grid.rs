use std::sync::Arc;

use crate::error::{Error, Result};

/// Strictly increasing discretization nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

/// Relative tolerance used when matching times to nodes and merging nodes.
const NODE_TOL: f64 = 1e-9;

fn tol_at(t: f64) -> f64 {
    NODE_TOL * t.abs().max(1.0)
}

impl TimeGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "nodes not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Length of interval `k`, i.e. `t[k+1] - t[k]`.
    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    /// Index of the node equal to `t` (up to a relative tolerance of 1e-9).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        if !t.is_finite() {
            return Err(Error::OffGrid { time: t });
        }
        let i = self.nodes.partition_point(|&x| x < t);
        let tol = tol_at(t);
        for j in [i.saturating_sub(1), i] {
            if j < self.nodes.len() && (self.nodes[j] - t).abs() <= tol {
                return Ok(j);
            }
        }
        Err(Error::OffGrid { time: t })
    }

    /// Index of the node closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x < t);
        if i == 0 {
            return 0;
        }
        if i >= self.nodes.len() {
            return self.nodes.len() - 1;
        }
        if (self.nodes[i] - t).abs() < (t - self.nodes[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// Merges `extra` into the node set. Existing nodes win over extras
    /// that coincide with them within tolerance.
    pub fn refine_union(&self, extra: &[f64]) -> Result<Self> {
        let mut tagged: Vec<(f64, u8)> = self.nodes.iter().map(|&t| (t, 2)).collect();
        for &t in extra {
            if !t.is_finite() {
                return Err(Error::InvalidGrid("non-finite extra node".into()));
            }
            tagged.push((t, 1));
        }
        Self::new(merge_tagged(tagged))
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Sorts and deduplicates tagged nodes; within a tolerance cluster the
/// node with the highest tag survives.
fn merge_tagged(mut tagged: Vec<(f64, u8)>) -> Vec<f64> {
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, u8)> = Vec::with_capacity(tagged.len());
    for (t, tag) in tagged {
        match out.last_mut() {
            Some(last) if (t - last.0).abs() <= tol_at(t) => {
                if tag > last.1 {
                    *last = (t, tag);
                }
            }
            _ => out.push((t, tag)),
        }
    }
    out.into_iter().map(|(t, _)| t).collect()
}

/// Uniform grid of spacing `dt` on `[t_start, t_end]` merged with
/// `extra_nodes`. The end points and the extra nodes are kept exactly.
pub fn make_grid(t_start: f64, t_end: f64, dt: f64, extra_nodes: &[f64]) -> Result<TimeGrid> {
    if !(t_start.is_finite() && t_end.is_finite() && dt.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid parameter".into()));
    }
    if t_end <= t_start {
        return Err(Error::InvalidGrid(format!(
            "empty range [{t_start}, {t_end}]"
        )));
    }
    if dt <= 0.0 {
        return Err(Error::InvalidGrid(format!("non-positive step {dt}")));
    }
    let steps = ((t_end - t_start) / dt).ceil() as usize;
    let mut tagged: Vec<(f64, u8)> = Vec::with_capacity(steps + 2 + extra_nodes.len());
    tagged.push((t_start, 3));
    for k in 1..steps {
        let t = t_start + k as f64 * dt;
        if t < t_end {
            tagged.push((t, 0));
        }
    }
    tagged.push((t_end, 3));
    for &t in extra_nodes {
        if !t.is_finite() {
            return Err(Error::InvalidGrid("non-finite extra node".into()));
        }
        if t < t_start - tol_at(t_start) || t > t_end + tol_at(t_end) {
            return Err(Error::InvalidGrid(format!(
                "extra node {t} outside [{t_start}, {t_end}]"
            )));
        }
        tagged.push((t, 1));
    }
    TimeGrid::new(merge_tagged(tagged))
}
