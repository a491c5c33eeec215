use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{TrafficNetwork, TrafficNode};
use crate::error::{Error, Result};

/// How node coordinates are interpreted when distances are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordSystem {
    /// `x`/`y` in km; Euclidean distances.
    #[default]
    Planar,
    /// `x` = longitude, `y` = latitude in degrees; haversine distances.
    LatLon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub region: usize,
    pub flow: f64,
}

/// On-disk JSON form of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default, skip_serializing_if = "is_planar")]
    pub coords: CoordSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_regions: Option<usize>,
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub od_flow: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
}

fn is_planar(coords: &CoordSystem) -> bool {
    *coords == CoordSystem::Planar
}

impl NetworkDocument {
    pub fn from_json(text: &str, source_name: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|err| Error::parse(source_name, err))
    }

    pub fn into_network(self) -> Result<TrafficNetwork> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|rec| TrafficNode {
                id: rec.id,
                x: rec.x,
                y: rec.y,
                region: rec.region,
                flow: rec.flow,
            })
            .collect();
        TrafficNetwork::new(nodes, self.n_regions, self.dist, self.od_flow, self.coords)
    }
}

impl TrafficNetwork {
    /// Serializable form. Distances are included only when `with_dist`.
    pub fn to_document(&self, with_dist: bool) -> NetworkDocument {
        let n = self.len();
        let rows = |flat: &[f64]| flat.chunks(n).map(<[f64]>::to_vec).collect::<Vec<_>>();
        NetworkDocument {
            coords: self.coords,
            n_regions: Some(self.n_regions()),
            nodes: self
                .nodes
                .iter()
                .map(|node| NodeRecord {
                    id: node.id,
                    x: node.x,
                    y: node.y,
                    region: node.region,
                    flow: node.flow,
                })
                .collect(),
            od_flow: Some(rows(self.od_matrix())),
            dist: with_dist.then(|| rows(self.dist_matrix())),
        }
    }

    /// Content hash over nodes, regions, distances and OD flows.
    pub fn fingerprint(&self) -> String {
        let doc = serde_json::to_vec(&self.to_document(true)).expect("network serializes");
        hex::encode(Sha256::digest(&doc))[..16].to_string()
    }
}

/// Reads a network JSON file. `force_latlon` overrides the document's
/// `coords` field.
pub fn load_network(path: impl AsRef<Path>, force_latlon: bool) -> Result<TrafficNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|err| Error::io(path, err))?;
    let mut doc = NetworkDocument::from_json(&text, &path.display().to_string())?;
    if force_latlon {
        doc.coords = CoordSystem::LatLon;
    }
    doc.into_network()
}

#[derive(Debug, Deserialize)]
struct OdRow {
    from: usize,
    to: usize,
    flow: f64,
}

/// Reads an OD matrix from CSV with header `from,to,flow`, one row per
/// nonzero pair.
pub fn load_od_csv(path: impl AsRef<Path>, n_nodes: usize) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|err| Error::io(path, err))?;
    parse_od_csv(file, n_nodes, &path.display().to_string())
}

pub(crate) fn parse_od_csv(
    reader: impl std::io::Read,
    n_nodes: usize,
    source_name: &str,
) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|err| Error::parse(source_name, err))?;
    if headers != vec!["from", "to", "flow"] {
        return Err(Error::parse(
            source_name,
            "expected header `from,to,flow`",
        ));
    }
    let mut od = vec![vec![0.0; n_nodes]; n_nodes];
    let mut seen = HashSet::new();
    for (line, row) in rdr.deserialize::<OdRow>().enumerate() {
        let row = row.map_err(|err| Error::parse(source_name, err))?;
        let record = format!("{source_name} row {}", line + 2);
        if row.from >= n_nodes || row.to >= n_nodes {
            return Err(Error::validation(record, "node id out of range"));
        }
        if !seen.insert((row.from, row.to)) {
            return Err(Error::validation(
                record,
                format!("duplicate pair ({}, {})", row.from, row.to),
            ));
        }
        od[row.from][row.to] = row.flow;
    }
    Ok(od)
}
