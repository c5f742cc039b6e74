use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Linear,
}

fn yes() -> bool {
    true
}

/// One layer of a network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LayerSpec {
    Gru { units: usize },
    Lstm { units: usize },
    /// Applied per time step when the incoming value is a sequence.
    Dense {
        units: usize,
        activation: Activation,
        #[serde(default = "yes")]
        bias: bool,
    },
    Conv1d { filters: usize, kernel: usize, stride: usize, activation: Activation },
    Flatten,
    /// Keeps only the final time step of a sequence.
    LastStep,
    Dropout { rate: f64 },
}

impl LayerSpec {
    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense { units, activation, bias: true }
    }

    pub fn describe(&self) -> String {
        match self {
            LayerSpec::Gru { units } => format!("gru({units})"),
            LayerSpec::Lstm { units } => format!("lstm({units})"),
            LayerSpec::Dense { units, activation, .. } => format!("dense({units}, {activation:?})"),
            LayerSpec::Conv1d { filters, kernel, stride, .. } => format!("conv1d({filters}, k{kernel}, s{stride})"),
            LayerSpec::Flatten => "flatten".into(),
            LayerSpec::LastStep => "last_step".into(),
            LayerSpec::Dropout { rate } => format!("dropout({rate})"),
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Gru { .. } | LayerSpec::Lstm { .. } | LayerSpec::Dense { .. } | LayerSpec::Conv1d { .. })
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self, LayerSpec::Gru { .. } | LayerSpec::Lstm { .. })
    }
}

/// Shape of the value flowing between layers (batch dimension omitted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowShape {
    Seq { len: usize, dim: usize },
    Flat { dim: usize },
}

impl FlowShape {
    pub fn dims(&self) -> Vec<usize> {
        match *self {
            FlowShape::Seq { len, dim } => vec![len, dim],
            FlowShape::Flat { dim } => vec![dim],
        }
    }
}

/// Input shape, layer list and a name used in diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub name: String,
    /// `None` for flat `[batch, features]` input.
    pub seq_len: Option<usize>,
    pub input_features: usize,
    pub layers: Vec<LayerSpec>,
}

/// Parameter tensors a layer owns: `(suffix, shape, fan_in)`.
pub(crate) type ParamShapes = Vec<(&'static str, Vec<usize>, usize)>;

impl NetSpec {
    pub fn input_shape(&self) -> FlowShape {
        match self.seq_len {
            Some(len) => FlowShape::Seq { len, dim: self.input_features },
            None => FlowShape::Flat { dim: self.input_features },
        }
    }

    pub fn layer_label(&self, i: usize) -> String {
        format!("{} layer {} ({})", self.name, i, self.layers[i].describe())
    }

    /// Shapes entering each layer plus the final output shape, validating the chain.
    pub fn plan(&self) -> Result<(Vec<FlowShape>, FlowShape)> {
        if self.input_features == 0 || self.seq_len == Some(0) {
            return Err(Error::invalid(format!("{}: input dimensions must be positive", self.name)));
        }
        let mut shape = self.input_shape();
        let mut entering = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            entering.push(shape);
            let fail = |why: String| Error::shape(self.layer_label(i), why);
            shape = match (layer, shape) {
                (LayerSpec::Gru { units } | LayerSpec::Lstm { units }, FlowShape::Seq { len, .. }) => {
                    if *units == 0 {
                        return Err(fail("zero units".into()));
                    }
                    FlowShape::Seq { len, dim: *units }
                }
                (LayerSpec::Gru { .. } | LayerSpec::Lstm { .. }, FlowShape::Flat { dim }) => {
                    return Err(fail(format!("recurrent layer needs a sequence, got flat [{dim}]")))
                }
                (LayerSpec::Dense { units, .. }, s) => {
                    if *units == 0 {
                        return Err(fail("zero units".into()));
                    }
                    match s {
                        FlowShape::Seq { len, .. } => FlowShape::Seq { len, dim: *units },
                        FlowShape::Flat { .. } => FlowShape::Flat { dim: *units },
                    }
                }
                (LayerSpec::Conv1d { filters, kernel, stride, .. }, FlowShape::Seq { len, .. }) => {
                    if *kernel == 0 || *stride == 0 || *filters == 0 {
                        return Err(fail("filters, kernel and stride must be positive".into()));
                    }
                    if len < *kernel {
                        return Err(fail(format!("sequence length {len} shorter than kernel {kernel}")));
                    }
                    FlowShape::Seq { len: (len - kernel) / stride + 1, dim: *filters }
                }
                (LayerSpec::Conv1d { .. }, FlowShape::Flat { dim }) => {
                    return Err(fail(format!("convolution needs a sequence, got flat [{dim}]")))
                }
                (LayerSpec::Flatten, FlowShape::Seq { len, dim }) => FlowShape::Flat { dim: len * dim },
                (LayerSpec::Flatten, s) => s,
                (LayerSpec::LastStep, FlowShape::Seq { dim, .. }) => FlowShape::Flat { dim },
                (LayerSpec::LastStep, FlowShape::Flat { dim }) => {
                    return Err(fail(format!("last_step needs a sequence, got flat [{dim}]")))
                }
                (LayerSpec::Dropout { rate }, s) => {
                    if !(0.0..1.0).contains(rate) {
                        return Err(fail(format!("dropout rate {rate} outside [0, 1)")));
                    }
                    s
                }
            };
        }
        Ok((entering, shape))
    }

    pub fn output_shape(&self) -> Result<FlowShape> {
        Ok(self.plan()?.1)
    }

    /// Parameter tensors of layer `i` given the shape entering it.
    pub(crate) fn layer_params(layer: &LayerSpec, entering: FlowShape) -> ParamShapes {
        let in_dim = match entering {
            FlowShape::Seq { dim, .. } | FlowShape::Flat { dim } => dim,
        };
        match layer {
            LayerSpec::Gru { units } => {
                let fan = in_dim + units;
                ["z", "r", "h"]
                    .iter()
                    .flat_map(|g| gate(g, fan, *units))
                    .collect()
            }
            LayerSpec::Lstm { units } => {
                let fan = in_dim + units;
                ["f", "i", "o", "g"]
                    .iter()
                    .flat_map(|g| gate(g, fan, *units))
                    .collect()
            }
            LayerSpec::Dense { units, bias, .. } => {
                let mut v = vec![("w", vec![in_dim, *units], in_dim)];
                if *bias {
                    v.push(("b", vec![*units], in_dim));
                }
                v
            }
            LayerSpec::Conv1d { filters, kernel, .. } => {
                let fan = kernel * in_dim;
                vec![("w", vec![fan, *filters], fan), ("b", vec![*filters], fan)]
            }
            _ => vec![],
        }
    }

    /// Every parameter as `(full name, shape, fan_in)` in canonical order.
    pub fn param_layout(&self) -> Result<Vec<(String, Vec<usize>, usize)>> {
        let (entering, _) = self.plan()?;
        let mut out = Vec::new();
        for (i, (layer, shape)) in self.layers.iter().zip(entering).enumerate() {
            for (suffix, dims, fan) in Self::layer_params(layer, shape) {
                out.push((param_name(i, suffix), dims, fan));
            }
        }
        Ok(out)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.param_layout()?.iter().map(|(_, s, _)| s.iter().product::<usize>()).sum())
    }

    /// Parameterized layers, excluding the output layer.
    pub fn hidden_layer_count(&self) -> usize {
        self.layers.iter().filter(|l| l.has_params()).count().saturating_sub(1)
    }
}

fn gate(g: &str, fan: usize, units: usize) -> Vec<(&'static str, Vec<usize>, usize)> {
    let (w, b): (&'static str, &'static str) = match g {
        "z" => ("w_z", "b_z"),
        "r" => ("w_r", "b_r"),
        "h" => ("w_h", "b_h"),
        "f" => ("w_f", "b_f"),
        "i" => ("w_i", "b_i"),
        "o" => ("w_o", "b_o"),
        _ => ("w_g", "b_g"),
    };
    vec![(w, vec![fan, units], fan), (b, vec![units], fan)]
}

pub fn param_name(layer: usize, suffix: &str) -> String {
    format!("l{layer}.{suffix}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_counts() {
        let spec = NetSpec {
            name: "t".into(),
            seq_len: Some(10),
            input_features: 3,
            layers: vec![
                LayerSpec::Gru { units: 4 },
                LayerSpec::LastStep,
                LayerSpec::dense(2, Activation::Linear),
            ],
        };
        assert_eq!(spec.output_shape().unwrap(), FlowShape::Flat { dim: 2 });
        // gru: 3 * ((3 + 4) * 4 + 4) = 96; dense: 4 * 2 + 2 = 10
        assert_eq!(spec.param_count().unwrap(), 106);
        assert_eq!(spec.hidden_layer_count(), 1);
    }

    #[test]
    fn misplaced_recurrent_layer_named() {
        let spec = NetSpec {
            name: "bad".into(),
            seq_len: None,
            input_features: 3,
            layers: vec![LayerSpec::dense(2, Activation::Relu), LayerSpec::Lstm { units: 2 }],
        };
        let e = spec.plan().unwrap_err().to_string();
        assert!(e.contains("layer 1 (lstm(2))"), "{e}");
    }

    #[test]
    fn spec_json_round_trip() {
        let layers = vec![
            LayerSpec::Conv1d { filters: 2, kernel: 5, stride: 4, activation: Activation::Relu },
            LayerSpec::Flatten,
            LayerSpec::Dropout { rate: 0.4 },
        ];
        let json = serde_json::to_string(&layers).unwrap();
        assert_eq!(serde_json::from_str::<Vec<LayerSpec>>(&json).unwrap(), layers);
    }
}
