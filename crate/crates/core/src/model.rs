//! JSON model documents.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "topology": { "input_dim": 2, "apartments": [{ "word": 1, "hidden_count": 4, "output_count": 1 }] },
//!   "hidden_neurons": [{ "threshold": 0.1, "weights": [0.2, -0.3], "word_weight": 1 }],
//!   "output_neurons": [{ "threshold": -0.1, "weights": [0.4, 0.1, 0.0, 0.2] }]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is lossless.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::network::{ApartmentTopology, Network, Neuron};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    topology: ApartmentTopology,
    hidden_neurons: Vec<Neuron>,
    output_neurons: Vec<Neuron>,
}

#[derive(Serialize)]
struct ModelDocumentRef<'a> {
    format_version: u32,
    topology: &'a ApartmentTopology,
    hidden_neurons: &'a [Neuron],
    output_neurons: &'a [Neuron],
}

impl Serialize for Network {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDocumentRef {
            format_version: MODEL_FORMAT_VERSION,
            topology: self.topology(),
            hidden_neurons: self.hidden_neurons(),
            output_neurons: self.output_neurons(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDocument::deserialize(deserializer)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported model format_version {}",
                doc.format_version
            )));
        }
        Network::from_parts(doc.topology, doc.hidden_neurons, doc.output_neurons)
            .map_err(serde::de::Error::custom)
    }
}

pub fn to_json(net: &Network) -> Result<String> {
    let mut text = serde_json::to_string_pretty(net)?;
    text.push('\n');
    Ok(text)
}

pub fn from_json(text: &str) -> Result<Network> {
    Ok(serde_json::from_str(text)?)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
