use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Station inclusion vector over the traffic nodes.
///
/// Serialized as `{"n": len, "selected": [ids...]}`. Ordering is
/// lexicographic over the inclusion vector with `false < true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "PlacementRepr", into = "PlacementRepr")]
pub struct Placement {
    included: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct PlacementRepr {
    n: usize,
    selected: Vec<usize>,
}

impl TryFrom<PlacementRepr> for Placement {
    type Error = Error;

    fn try_from(repr: PlacementRepr) -> Result<Self> {
        Placement::from_indices(repr.n, &repr.selected)
    }
}

impl From<Placement> for PlacementRepr {
    fn from(p: Placement) -> Self {
        PlacementRepr {
            n: p.len(),
            selected: p.selected().collect(),
        }
    }
}

impl Placement {
    pub fn empty(n: usize) -> Self {
        Self {
            included: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            included: vec![true; n],
        }
    }

    pub fn from_mask(included: Vec<bool>) -> Self {
        Self { included }
    }

    pub fn from_indices(n: usize, selected: &[usize]) -> Result<Self> {
        let mut included = vec![false; n];
        for &i in selected {
            if i >= n {
                return Err(Error::validation(
                    "placement",
                    format!("node {i} out of range for {n} nodes"),
                ));
            }
            included[i] = true;
        }
        Ok(Self { included })
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    /// Number of stations.
    pub fn count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.included[n]
    }

    pub fn set(&mut self, n: usize, value: bool) {
        self.included[n] = value;
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.included
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn mask(&self) -> &[bool] {
        &self.included
    }
}

/// Convex weights over (flow, charging time, travel distance, DN load).
/// Serialized as a four-element array in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Weights {
    pub flow: f64,
    pub ch: f64,
    pub dis: f64,
    pub dn: f64,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl Weights {
    pub fn new(flow: f64, ch: f64, dis: f64, dn: f64) -> Result<Self> {
        let w = Self { flow, ch, dis, dn };
        let values = w.as_array();
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation("weights", "weights must be non-negative"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::validation(
                "weights",
                format!("weights must sum to 1, got {sum}"),
            ));
        }
        Ok(w)
    }

    /// Scales non-negative raw weights to sum to one.
    pub fn normalized(raw: [f64; 4]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation("weights", "weights must be non-negative"));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::validation("weights", "at least one weight must be positive"));
        }
        if (sum - 1.0).abs() <= WEIGHT_SUM_TOL {
            return Self::new(raw[0], raw[1], raw[2], raw[3]);
        }
        Self::new(raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum)
    }

    /// Equal weights of 0.25.
    pub fn baseline() -> Self {
        Self {
            flow: 0.25,
            ch: 0.25,
            dis: 0.25,
            dn: 0.25,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.flow, self.ch, self.dis, self.dn]
    }
}

impl TryFrom<[f64; 4]> for Weights {
    type Error = Error;

    fn try_from(a: [f64; 4]) -> Result<Self> {
        Weights::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Weights> for [f64; 4] {
    fn from(w: Weights) -> Self {
        w.as_array()
    }
}
