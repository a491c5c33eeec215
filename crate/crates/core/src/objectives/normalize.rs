use serde::{Deserialize, Serialize};

use super::Weights;
use crate::error::{Error, Result};

/// Raw objective values of one placement.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawObjectives {
    /// Flow covered, trips/day (maximized).
    pub j_flow: f64,
    /// Charging time cost, hours.
    pub j_ch: f64,
    /// Flow-weighted travel distance, km.
    pub j_dis: f64,
    /// Distribution-network penalty.
    pub j_dn: f64,
}

impl RawObjectives {
    pub fn as_array(&self) -> [f64; 4] {
        [self.j_flow, self.j_ch, self.j_dis, self.j_dn]
    }
}

/// Raw and normalized objective values with the aggregate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub j_flow: f64,
    pub j_ch: f64,
    pub j_dis: f64,
    pub j_dn: f64,
    pub jn_flow: f64,
    pub jn_ch: f64,
    pub jn_dis: f64,
    pub jn_dn: f64,
    pub gamma: f64,
}

impl ObjectiveBreakdown {
    pub fn raw(&self) -> RawObjectives {
        RawObjectives {
            j_flow: self.j_flow,
            j_ch: self.j_ch,
            j_dis: self.j_dis,
            j_dn: self.j_dn,
        }
    }

    pub fn normalized(&self) -> [f64; 4] {
        [self.jn_flow, self.jn_ch, self.jn_dis, self.jn_dn]
    }
}

/// Per-objective min/max used for min-max scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBounds {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl ObjectiveBounds {
    /// Bounds spanned by a candidate population.
    pub fn from_population(raw: &[RawObjectives]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Argument("cannot normalize an empty population".into()));
        }
        let mut min = [f64::INFINITY; 4];
        let mut max = [f64::NEG_INFINITY; 4];
        for r in raw {
            for (k, v) in r.as_array().into_iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Smallest bounds containing both.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..4 {
            out.min[k] = out.min[k].min(other.min[k]);
            out.max[k] = out.max[k].max(other.max[k]);
        }
        out
    }

    /// Min-max scaled objectives, each clamped to `[0, 1]`. Flow is flipped
    /// so that every scaled objective is minimized. A degenerate range
    /// scales to zero.
    pub fn scale(&self, raw: &RawObjectives) -> [f64; 4] {
        let values = raw.as_array();
        let mut out = [0.0; 4];
        for k in 0..4 {
            let span = self.max[k] - self.min[k];
            if span > 0.0 {
                let scaled = if k == 0 {
                    (self.max[k] - values[k]) / span
                } else {
                    (values[k] - self.min[k]) / span
                };
                out[k] = scaled.clamp(0.0, 1.0);
            }
        }
        out
    }

    pub fn breakdown(&self, raw: &RawObjectives, w: &Weights) -> ObjectiveBreakdown {
        let [jn_flow, jn_ch, jn_dis, jn_dn] = self.scale(raw);
        let gamma = (w.flow * jn_flow + w.ch * jn_ch + w.dis * jn_dis + w.dn * jn_dn).min(1.0);
        ObjectiveBreakdown {
            j_flow: raw.j_flow,
            j_ch: raw.j_ch,
            j_dis: raw.j_dis,
            j_dn: raw.j_dn,
            jn_flow,
            jn_ch,
            jn_dis,
            jn_dn,
            gamma,
        }
    }
}

/// Min-max normalizes each objective over the population and aggregates
/// with `w`.
pub fn normalize_and_aggregate(
    raw: &[RawObjectives],
    w: &Weights,
) -> Result<Vec<ObjectiveBreakdown>> {
    let bounds = ObjectiveBounds::from_population(raw)?;
    Ok(raw.iter().map(|r| bounds.breakdown(r, w)).collect())
}
