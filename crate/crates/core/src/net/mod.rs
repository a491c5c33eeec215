//! Traffic network overlaid by a multi-region distribution network.
//!
//! A [`TrafficNetwork`] is immutable once built: every constructor runs the
//! full set of structural checks, so downstream code can rely on symmetric
//! positive distances, a region partition of the nodes and a positive
//! maximum nodal flow.

mod io;
mod series;
mod synth;

pub use io::{load_network, load_od_csv, CoordSystem, NetworkDocument, NodeRecord};
pub use series::FlowSeries;
pub use synth::{synthesize_network, SynthConfig};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A traffic node. `x`/`y` are planar km, or lon/lat degrees when the
/// network uses [`CoordSystem::LatLon`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub region: usize,
    /// Nodal flow in trips/day.
    pub flow: f64,
}

#[derive(Debug, Clone)]
pub struct TrafficNetwork {
    nodes: Vec<TrafficNode>,
    coords: CoordSystem,
    regions: Vec<Vec<usize>>,
    /// Row-major `n * n` geospatial distances in km.
    dist: Vec<f64>,
    /// Row-major `n * n` route-captured OD flows in trips/day.
    od_flow: Vec<f64>,
    f_max: f64,
    od_max: f64,
    total_flow: f64,
}

impl TrafficNetwork {
    /// Builds and validates a network.
    ///
    /// `nodes` may arrive in any order but their ids must cover `0..n`
    /// exactly once. When `n_regions` is `None` it is inferred as one past
    /// the largest region id. When `dist` is `None` distances are computed
    /// from coordinates; when `od_flow` is `None` the OD matrix is all zero.
    pub fn new(
        mut nodes: Vec<TrafficNode>,
        n_regions: Option<usize>,
        dist: Option<Vec<Vec<f64>>>,
        od_flow: Option<Vec<Vec<f64>>>,
        coords: CoordSystem,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::validation("nodes", "network has no nodes"));
        }
        nodes.sort_by_key(|node| node.id);
        for (expected, node) in nodes.iter().enumerate() {
            if node.id != expected {
                let message = if node.id < expected {
                    "duplicate id".to_string()
                } else {
                    format!("ids must be contiguous; id {expected} is missing")
                };
                return Err(Error::validation(format!("node {}", node.id), message));
            }
            if !node.flow.is_finite() || node.flow < 0.0 {
                return Err(Error::validation(
                    format!("node {}", node.id),
                    format!("flow must be finite and non-negative, got {}", node.flow),
                ));
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(Error::validation(
                    format!("node {}", node.id),
                    "coordinates must be finite",
                ));
            }
            if coords == CoordSystem::LatLon && (node.y.abs() > 90.0 || node.x.abs() > 180.0) {
                return Err(Error::validation(
                    format!("node {}", node.id),
                    "lat/lon coordinates out of range",
                ));
            }
        }
        let n = nodes.len();

        let inferred = nodes.iter().map(|node| node.region).max().unwrap_or(0) + 1;
        let n_regions = n_regions.unwrap_or(inferred);
        if n_regions == 0 {
            return Err(Error::validation("n_regions", "must be at least 1"));
        }
        let mut regions = vec![Vec::new(); n_regions];
        for node in &nodes {
            if node.region >= n_regions {
                return Err(Error::validation(
                    format!("node {}", node.id),
                    format!(
                        "region {} does not exist (network has {n_regions} regions)",
                        node.region
                    ),
                ));
            }
            regions[node.region].push(node.id);
        }

        let f_max = nodes.iter().map(|node| node.flow).fold(0.0, f64::max);
        if f_max <= 0.0 {
            return Err(Error::validation(
                "nodes",
                "maximum nodal flow must be positive",
            ));
        }
        let total_flow = nodes.iter().map(|node| node.flow).sum();

        let dist = match dist {
            Some(rows) => flatten_square(rows, n, "dist")?,
            None => distances_from_coords(&nodes, coords),
        };
        validate_distances(&dist, n)?;

        let od_flow = match od_flow {
            Some(rows) => flatten_square(rows, n, "od_flow")?,
            None => vec![0.0; n * n],
        };
        validate_od(&od_flow, n)?;
        let od_max = od_flow.iter().copied().fold(0.0, f64::max);

        Ok(Self {
            nodes,
            coords,
            regions,
            dist,
            od_flow,
            f_max,
            od_max,
            total_flow,
        })
    }

    /// Returns a copy of this network with its OD matrix replaced.
    pub fn with_od_flow(&self, od_flow: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.len();
        let od_flow = flatten_square(od_flow, n, "od_flow")?;
        validate_od(&od_flow, n)?;
        let od_max = od_flow.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            od_flow,
            od_max,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TrafficNode] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> &TrafficNode {
        &self.nodes[n]
    }

    pub fn coords(&self) -> CoordSystem {
        self.coords
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// Node ids per region; the lists partition `0..len()`.
    pub fn regions(&self) -> &[Vec<usize>] {
        &self.regions
    }

    pub fn region_of(&self, n: usize) -> usize {
        self.nodes[n].region
    }

    pub fn flow(&self, n: usize) -> f64 {
        self.nodes[n].flow
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn total_flow(&self) -> f64 {
        self.total_flow
    }

    pub fn dist(&self, m: usize, n: usize) -> f64 {
        self.dist[m * self.len() + n]
    }

    /// Row `m` of the distance matrix.
    pub fn dist_row(&self, m: usize) -> &[f64] {
        let n = self.len();
        &self.dist[m * n..(m + 1) * n]
    }

    /// Flow captured on the route from `m` to `n`.
    pub fn od_flow(&self, m: usize, n: usize) -> f64 {
        self.od_flow[m * self.len() + n]
    }

    pub fn od_max(&self) -> f64 {
        self.od_max
    }

    /// OD flow scaled by the largest OD entry; zero when the matrix is empty.
    pub fn normalized_od_flow(&self, m: usize, n: usize) -> f64 {
        if self.od_max > 0.0 {
            self.od_flow(m, n) / self.od_max
        } else {
            0.0
        }
    }

    /// `f_n / F_max`.
    pub fn normalized_flow(&self, n: usize) -> f64 {
        self.nodes[n].flow / self.f_max
    }

    /// Flow-weighted mean position of the nodes.
    pub fn flow_center(&self) -> (f64, f64) {
        let (sx, sy) = self.nodes.iter().fold((0.0, 0.0), |(sx, sy), node| {
            (sx + node.flow * node.x, sy + node.flow * node.y)
        });
        (sx / self.total_flow, sy / self.total_flow)
    }

    pub(crate) fn dist_matrix(&self) -> &[f64] {
        &self.dist
    }

    pub(crate) fn od_matrix(&self) -> &[f64] {
        &self.od_flow
    }
}

/// `f_n / F_max` for node `n`.
pub fn normalized_flow(net: &TrafficNetwork, n: usize) -> f64 {
    net.normalized_flow(n)
}

fn flatten_square(rows: Vec<Vec<f64>>, n: usize, name: &str) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(Error::validation(
            name,
            format!("expected {n} rows, found {}", rows.len()),
        ));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation(
                format!("{name}[{i}]"),
                format!("expected {n} columns, found {}", row.len()),
            ));
        }
        flat.extend(row);
    }
    Ok(flat)
}

fn validate_distances(dist: &[f64], n: usize) -> Result<()> {
    for m in 0..n {
        let d = dist[m * n + m];
        if d != 0.0 {
            return Err(Error::validation(
                format!("dist[{m}][{m}]"),
                format!("diagonal must be zero, got {d}"),
            ));
        }
        for k in (m + 1)..n {
            let a = dist[m * n + k];
            let b = dist[k * n + m];
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::validation(
                    format!("dist[{m}][{k}]"),
                    format!("off-diagonal distances must be positive, got {a}"),
                ));
            }
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                return Err(Error::validation(
                    format!("dist[{m}][{k}]"),
                    format!("asymmetric: dist[{m}][{k}] = {a} but dist[{k}][{m}] = {b}"),
                ));
            }
        }
    }
    Ok(())
}

fn validate_od(od: &[f64], n: usize) -> Result<()> {
    for m in 0..n {
        for k in 0..n {
            let f = od[m * n + k];
            if !f.is_finite() || f < 0.0 {
                return Err(Error::validation(
                    format!("od_flow[{m}][{k}]"),
                    format!("flow must be finite and non-negative, got {f}"),
                ));
            }
            if m == k && f != 0.0 {
                return Err(Error::validation(
                    format!("od_flow[{m}][{m}]"),
                    format!("diagonal must be zero, got {f}"),
                ));
            }
        }
    }
    Ok(())
}

fn distances_from_coords(nodes: &[TrafficNode], coords: CoordSystem) -> Vec<f64> {
    let n = nodes.len();
    let mut dist = vec![0.0; n * n];
    for m in 0..n {
        for k in (m + 1)..n {
            let d = match coords {
                CoordSystem::Planar => (nodes[m].x - nodes[k].x).hypot(nodes[m].y - nodes[k].y),
                CoordSystem::LatLon => haversine_km(&nodes[m], &nodes[k]),
            };
            dist[m * n + k] = d;
            dist[k * n + m] = d;
        }
    }
    dist
}

fn haversine_km(a: &TrafficNode, b: &TrafficNode) -> f64 {
    let (lat1, lat2) = (a.y.to_radians(), b.y.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.x - a.x).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn node(id: usize, x: f64, y: f64, region: usize, flow: f64) -> TrafficNode {
        TrafficNode {
            id,
            x,
            y,
            region,
            flow,
        }
    }

    #[test]
    fn infers_regions_and_fmax() {
        let net = TrafficNetwork::new(
            vec![
                node(1, 3.0, 4.0, 1, 300.0),
                node(0, 0.0, 0.0, 0, 100.0),
                node(2, 6.0, 8.0, 1, 0.0),
            ],
            None,
            None,
            None,
            CoordSystem::Planar,
        )
        .unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.n_regions(), 2);
        assert_eq!(net.regions(), &[vec![0], vec![1, 2]]);
        assert_eq!(net.f_max(), 300.0);
        assert_eq!(net.dist(0, 1), 5.0);
        assert_eq!(net.dist(2, 0), 10.0);
        assert_eq!(net.node(0).flow, 100.0);
    }

    #[test]
    fn normalized_flow_values() {
        let net = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 100.0), node(1, 1.0, 0.0, 0, 300.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        )
        .unwrap();
        assert!((normalized_flow(&net, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(normalized_flow(&net, 1), 1.0);

        let zero = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 0.0), node(1, 1.0, 0.0, 0, 5.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        )
        .unwrap();
        assert_eq!(normalized_flow(&zero, 0), 0.0);
    }

    #[test]
    fn rejects_gaps_duplicates_and_dangling_regions() {
        let gap = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 1.0), node(2, 1.0, 0.0, 0, 1.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        );
        assert!(matches!(gap, Err(Error::Validation { record, .. }) if record == "node 2"));

        let dup = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 1.0), node(0, 1.0, 0.0, 0, 1.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        );
        assert!(matches!(dup, Err(Error::Validation { .. })));

        let dangling = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 1.0), node(1, 1.0, 0.0, 3, 1.0)],
            Some(2),
            None,
            None,
            CoordSystem::Planar,
        );
        assert!(matches!(dangling, Err(Error::Validation { record, .. }) if record == "node 1"));
    }

    #[test]
    fn rejects_zero_fmax_and_shared_positions() {
        let zero = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 0.0), node(1, 1.0, 0.0, 0, 0.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        );
        assert!(matches!(zero, Err(Error::Validation { .. })));

        let shared = TrafficNetwork::new(
            vec![node(0, 1.0, 1.0, 0, 1.0), node(1, 1.0, 1.0, 0, 1.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        );
        assert!(
            matches!(shared, Err(Error::Validation { record, .. }) if record == "dist[0][1]")
        );
    }

    #[test]
    fn rejects_bad_od_diagonal() {
        let od = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let err = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 1.0), node(1, 1.0, 0.0, 0, 1.0)],
            None,
            None,
            Some(od),
            CoordSystem::Planar,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { record, .. } if record == "od_flow[0][0]"));
    }

    #[test]
    fn haversine_one_degree_of_latitude() {
        let net = TrafficNetwork::new(
            vec![node(0, 104.0, 30.0, 0, 1.0), node(1, 104.0, 31.0, 0, 1.0)],
            None,
            None,
            None,
            CoordSystem::LatLon,
        )
        .unwrap();
        // One degree of arc on the mean-radius sphere.
        let expected = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        assert!((net.dist(0, 1) - expected).abs() < 1e-9);
    }

    #[test]
    fn flow_center_is_weighted_mean() {
        let net = TrafficNetwork::new(
            vec![node(0, 0.0, 0.0, 0, 1.0), node(1, 4.0, 8.0, 0, 3.0)],
            None,
            None,
            None,
            CoordSystem::Planar,
        )
        .unwrap();
        assert_eq!(net.flow_center(), (3.0, 6.0));
    }
}
