//! GeoJSON rendering of a placement.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::net::TrafficNetwork;
use crate::objectives::Placement;

/// One Point feature per node with `{id, region, flow, selected}`.
///
/// The collection also carries the flow-weighted center under
/// `flow_center` and the coordinate system under `coords`; GeoJSON readers
/// ignore both.
pub fn emit_geojson(net: &TrafficNetwork, placement: &Placement) -> Result<Value> {
    if placement.len() != net.len() {
        return Err(Error::LengthMismatch {
            expected: net.len(),
            found: placement.len(),
        });
    }
    let features: Vec<Value> = net
        .nodes()
        .iter()
        .map(|node| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [node.x, node.y]},
                "properties": {
                    "id": node.id,
                    "region": node.region,
                    "flow": node.flow,
                    "selected": placement.contains(node.id),
                },
            })
        })
        .collect();
    let (cx, cy) = net.flow_center();
    Ok(json!({
        "type": "FeatureCollection",
        "coords": net.coords(),
        "flow_center": [cx, cy],
        "features": features,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::synthesize_network;

    fn selected_flags(doc: &Value) -> Vec<bool> {
        doc["features"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| f["properties"]["selected"].as_bool().unwrap())
            .collect()
    }

    #[test]
    fn one_feature_per_node() {
        let net = synthesize_network(14, 3, 4).unwrap();
        let s = Placement::from_indices(14, &[2, 5, 13]).unwrap();
        let doc = emit_geojson(&net, &s).unwrap();
        assert_eq!(doc["type"], "FeatureCollection");
        let flags = selected_flags(&doc);
        assert_eq!(flags.len(), 14);
        assert_eq!(flags.iter().filter(|&&b| b).count(), 3);
        let first = &doc["features"][5];
        assert_eq!(first["properties"]["id"], 5);
        assert_eq!(first["properties"]["region"], net.region_of(5));
        assert_eq!(first["geometry"]["coordinates"][0], net.node(5).x);
    }

    #[test]
    fn empty_and_full() {
        let net = synthesize_network(6, 2, 0).unwrap();
        assert!(selected_flags(&emit_geojson(&net, &Placement::empty(6)).unwrap())
            .iter()
            .all(|&b| !b));
        assert!(selected_flags(&emit_geojson(&net, &Placement::full(6)).unwrap())
            .iter()
            .all(|&b| b));
        assert!(emit_geojson(&net, &Placement::empty(5)).is_err());
    }
}
