use std::path::Path;

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::multilayer::MultiLayerPoint;
use super::point::TwoLayerPoint;
use crate::error::{invalid, Result};

/// On-disk model description. `widths` lists hidden widths only; `layers`
/// holds each weight matrix row-major, first layer first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d_in: usize,
    pub d_out: usize,
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub layers: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        ModelFile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn is_two_layer(&self) -> bool {
        self.widths.len() == 1
    }

    pub fn to_multi_layer(&self) -> Result<MultiLayerPoint> {
        let mut widths = Vec::with_capacity(self.widths.len() + 2);
        widths.push(self.d_in);
        widths.extend_from_slice(&self.widths);
        widths.push(self.d_out);
        MultiLayerPoint::new(self.activation, widths, self.layers.clone())
    }

    pub fn to_two_layer(&self) -> Result<TwoLayerPoint> {
        if !self.is_two_layer() {
            return Err(invalid(format!(
                "expected one hidden layer, found {}",
                self.widths.len()
            )));
        }
        self.to_multi_layer()?.hidden_block(1)
    }
}

impl From<&MultiLayerPoint> for ModelFile {
    fn from(p: &MultiLayerPoint) -> Self {
        ModelFile {
            d_in: p.d_in(),
            d_out: p.d_out(),
            widths: p.hidden_widths().to_vec(),
            activation: p.activation(),
            layers: p.layers().to_vec(),
        }
    }
}

impl From<&TwoLayerPoint> for ModelFile {
    fn from(p: &TwoLayerPoint) -> Self {
        ModelFile::from(&MultiLayerPoint::from_two_layer(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::point::Neuron;

    #[test]
    fn json_shape_and_round_trip() {
        let p = TwoLayerPoint::new(
            Activation::blended(1.0, 4.0).unwrap(),
            2,
            1,
            vec![Neuron::new(vec![0.6, 0.5], vec![1.0]), Neuron::new(vec![-0.5, 0.5], vec![2.0])],
        )
        .unwrap();
        let file = ModelFile::from(&p);
        let text = file.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["widths"], serde_json::json!([2]));
        assert_eq!(v["layers"], serde_json::json!([[0.6, 0.5, -0.5, 0.5], [1.0, 2.0]]));
        assert_eq!(v["activation"]["kind"], "blended");
        let back = ModelFile::from_json(&text).unwrap();
        assert_eq!(back.to_two_layer().unwrap(), p);
    }

    #[test]
    fn multi_layer_file() {
        let file = ModelFile {
            d_in: 1,
            d_out: 1,
            widths: vec![2, 1],
            activation: Activation::Tanh,
            layers: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0]],
        };
        let p = file.to_multi_layer().unwrap();
        assert_eq!(ModelFile::from(&p), file);
        assert!(file.to_two_layer().is_err());
    }
}
