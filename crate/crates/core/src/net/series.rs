use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Per-node flow samples over a historical horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSeries {
    horizon_days: f64,
    /// `samples[node][period]`
    samples: Vec<Vec<f64>>,
}

impl FlowSeries {
    pub fn new(horizon_days: f64, samples: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon_days.is_finite() && horizon_days > 0.0) {
            return Err(Error::Argument(format!(
                "series horizon must be positive, got {horizon_days}"
            )));
        }
        let periods = samples.first().map_or(0, Vec::len);
        if periods == 0 {
            return Err(Error::validation("flow series", "no periods"));
        }
        for (node, row) in samples.iter().enumerate() {
            if row.len() != periods {
                return Err(Error::validation(
                    format!("flow series node {node}"),
                    format!("expected {periods} periods, found {}", row.len()),
                ));
            }
            if let Some((period, value)) = row
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0)
            {
                return Err(Error::validation(
                    format!("flow series node {node} period {period}"),
                    format!("flow must be finite and non-negative, got {value}"),
                ));
            }
        }
        Ok(Self {
            horizon_days,
            samples,
        })
    }

    /// Reads `node,period,flow` rows for a network of `n_nodes` nodes.
    pub fn load_csv(path: impl AsRef<Path>, n_nodes: usize, horizon_days: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|err| Error::io(path, err))?;
        Self::parse_csv(file, n_nodes, horizon_days, &path.display().to_string())
    }

    pub(crate) fn parse_csv(
        reader: impl std::io::Read,
        n_nodes: usize,
        horizon_days: f64,
        source_name: &str,
    ) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            node: usize,
            period: usize,
            flow: f64,
        }

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|err| Error::parse(source_name, err))?;
        if headers != vec!["node", "period", "flow"] {
            return Err(Error::parse(source_name, "expected header `node,period,flow`"));
        }
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); n_nodes];
        for (line, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|err| Error::parse(source_name, err))?;
            let record = format!("{source_name} row {}", line + 2);
            if row.node >= n_nodes {
                return Err(Error::validation(record, "node id out of range"));
            }
            let slots = &mut cells[row.node];
            if slots.len() <= row.period {
                slots.resize(row.period + 1, None);
            }
            if slots[row.period].replace(row.flow).is_some() {
                return Err(Error::validation(record, "duplicate (node, period)"));
            }
        }
        let periods = cells.iter().map(Vec::len).max().unwrap_or(0);
        let mut samples = Vec::with_capacity(n_nodes);
        for (node, slots) in cells.into_iter().enumerate() {
            if slots.len() != periods || slots.iter().any(Option::is_none) {
                return Err(Error::validation(
                    format!("flow series node {node}"),
                    format!("every node needs one sample for each of {periods} periods"),
                ));
            }
            samples.push(slots.into_iter().flatten().collect());
        }
        Self::new(horizon_days, samples)
    }

    pub fn horizon_days(&self) -> f64 {
        self.horizon_days
    }

    pub fn periods(&self) -> usize {
        self.samples[0].len()
    }

    pub fn n_nodes(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self, node: usize) -> &[f64] {
        &self.samples[node]
    }

    /// Flow of `node` summed over all periods.
    pub fn node_total(&self, node: usize) -> f64 {
        self.samples[node].iter().sum()
    }

    pub fn grand_total(&self) -> f64 {
        self.samples.iter().flatten().sum()
    }
}
