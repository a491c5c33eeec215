//! Seeded synthetic traffic networks.
//!
//! Nodes are scattered uniformly over a square. A random "city center"
//! concentrates traffic: nodal flow decays exponentially with distance to
//! it, times a log-normal factor for a heavy tail. Regions are Voronoi
//! cells around randomly chosen seed nodes, and OD flows follow a gravity
//! model `f_mn ∝ f_m f_n / d_mn` with mild per-pair noise.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::{CoordSystem, TrafficNetwork, TrafficNode};
use crate::error::{Error, Result};

const MIN_SEPARATION_KM: f64 = 1e-3;

/// Shape knobs for [`TrafficNetwork::synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub side_km: f64,
    /// Nodal flow at the center before the log-normal factor (trips/day).
    pub peak_flow: f64,
    /// e-folding distance of the center gradient.
    pub decay_km: f64,
    /// Log-normal sigma of the nodal flow factor.
    pub flow_sigma: f64,
    /// Uniform background flow added everywhere, upper bound.
    pub background_flow: f64,
    /// Log-normal sigma of the per-pair OD noise.
    pub od_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            side_km: 80.0,
            peak_flow: 6000.0,
            decay_km: 14.0,
            flow_sigma: 0.75,
            background_flow: 40.0,
            od_sigma: 0.25,
        }
    }
}

/// Generates a network with the default [`SynthConfig`].
pub fn synthesize_network(n_nodes: usize, n_regions: usize, seed: u64) -> Result<TrafficNetwork> {
    TrafficNetwork::synthesize(n_nodes, n_regions, seed, &SynthConfig::default())
}

impl TrafficNetwork {
    pub fn synthesize(
        n_nodes: usize,
        n_regions: usize,
        seed: u64,
        config: &SynthConfig,
    ) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::Argument(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        if n_regions < 1 || n_regions > n_nodes {
            return Err(Error::Argument(format!(
                "regions must be in 1..={n_nodes}, got {n_regions}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = config.side_km;

        let mut positions: Vec<(f64, f64)> = Vec::with_capacity(n_nodes);
        while positions.len() < n_nodes {
            let p = (rng.random::<f64>() * side, rng.random::<f64>() * side);
            let clear = positions
                .iter()
                .all(|q| (p.0 - q.0).hypot(p.1 - q.1) > MIN_SEPARATION_KM);
            if clear {
                positions.push(p);
            }
        }

        let center = (
            side / 3.0 + rng.random::<f64>() * side / 3.0,
            side / 3.0 + rng.random::<f64>() * side / 3.0,
        );
        let seeds: Vec<usize> = index::sample(&mut rng, n_nodes, n_regions).into_vec();
        let region_of = |p: (f64, f64)| {
            seeds
                .iter()
                .enumerate()
                .map(|(r, &s)| (r, (p.0 - positions[s].0).hypot(p.1 - positions[s].1)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(r, _)| r)
                .expect("at least one region")
        };

        let factor = LogNormal::new(0.0, config.flow_sigma)
            .map_err(|err| Error::Argument(err.to_string()))?;
        let nodes: Vec<TrafficNode> = positions
            .iter()
            .enumerate()
            .map(|(id, &p)| {
                let to_center = (p.0 - center.0).hypot(p.1 - center.1);
                let flow = config.peak_flow * (-to_center / config.decay_km).exp()
                    * factor.sample(&mut rng)
                    + config.background_flow * rng.random::<f64>();
                TrafficNode {
                    id,
                    x: p.0,
                    y: p.1,
                    region: region_of(p),
                    flow,
                }
            })
            .collect();

        let total: f64 = nodes.iter().map(|node| node.flow).sum();
        let noise = LogNormal::new(0.0, config.od_sigma)
            .map_err(|err| Error::Argument(err.to_string()))?;
        let mut od = vec![vec![0.0; n_nodes]; n_nodes];
        for m in 0..n_nodes {
            for k in 0..n_nodes {
                if m == k {
                    continue;
                }
                let d = (nodes[m].x - nodes[k].x).hypot(nodes[m].y - nodes[k].y);
                od[m][k] = nodes[m].flow * nodes[k].flow / (d * total) * noise.sample(&mut rng);
            }
        }

        TrafficNetwork::new(nodes, Some(n_regions), None, Some(od), CoordSystem::Planar)
    }
}
