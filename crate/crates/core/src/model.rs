//! Flat parameter vectors with a per-layer layout, and small dense networks.
//!
//! Dense layer `i` of an [`MlpSpec`] owns two layout entries, `fc{i}.weight`
//! with shape `[in, out]` and `fc{i}.bias` with shape `[out]`. Every layout
//! entry is a separately fusable layer.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{Graph, NodeId, Tensor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatParams {
    data: Vec<f64>,
    layout: Vec<LayerLayout>,
}

/// Checks that `layout` tiles `[0, total)` contiguously with non-empty layers
/// whose shapes match their lengths.
pub fn validate_layout(layout: &[LayerLayout], total: usize) -> Result<()> {
    let mut cursor = 0;
    for l in layout {
        if l.len == 0 {
            return Err(Error::Layout(format!("layer `{}` is empty", l.name)));
        }
        if l.offset != cursor {
            return Err(Error::Layout(format!(
                "layer `{}` starts at {} but previous layers end at {cursor}",
                l.name, l.offset
            )));
        }
        let n: usize = l.shape.iter().product();
        if n != l.len || l.shape.is_empty() {
            return Err(Error::Layout(format!(
                "layer `{}` shape {:?} does not hold {} values",
                l.name, l.shape, l.len
            )));
        }
        cursor += l.len;
    }
    if cursor != total {
        return Err(Error::Layout(format!(
            "layout covers {cursor} values but the vector has {total}"
        )));
    }
    Ok(())
}

impl FlatParams {
    pub fn new(data: Vec<f64>, layout: Vec<LayerLayout>) -> Result<Self> {
        validate_layout(&layout, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i} is {}", data[i])));
        }
        Ok(Self { data, layout })
    }

    /// Packs per-layer tensors into one flat vector.
    pub fn from_layers(layers: &[(String, Tensor)]) -> Result<Self> {
        let mut data = Vec::new();
        let mut layout = Vec::with_capacity(layers.len());
        for (name, t) in layers {
            layout.push(LayerLayout {
                name: name.clone(),
                offset: data.len(),
                len: t.len(),
                shape: t.shape().to_vec(),
            });
            data.extend_from_slice(t.data());
        }
        Self::new(data, layout)
    }

    /// Splits the flat vector into per-layer tensors.
    pub fn to_layers(&self) -> Result<Vec<(String, Tensor)>> {
        self.layout
            .iter()
            .map(|l| {
                let t = Tensor::new(l.shape.clone(), self.layer(l).to_vec())?;
                Ok((l.name.clone(), t))
            })
            .collect()
    }

    /// Unpacks to layers and packs again.
    pub fn flatten_roundtrip(&self) -> Result<Self> {
        validate_layout(&self.layout, self.data.len())?;
        Self::from_layers(&self.to_layers()?)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable view of the values. The layout cannot change through it.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn layout(&self) -> &[LayerLayout] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn layer(&self, l: &LayerLayout) -> &[f64] {
        &self.data[l.offset..l.offset + l.len]
    }

    /// Same layout, new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(data, self.layout.clone())
    }

    pub fn same_layout(&self, other: &FlatParams) -> bool {
        self.layout == other.layout
    }

    /// Bit-level equality, distinguishing `0.0` from `-0.0`.
    pub fn bit_eq(&self, other: &FlatParams) -> bool {
        self.layout == other.layout
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Activation {
    Identity,
    LeakyRelu { slope: f64 },
    Sigmoid,
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu {
            slope: crate::tensor::DEFAULT_SLOPE,
        }
    }

    pub fn apply(self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        match self {
            Activation::Identity => Ok(x),
            Activation::LeakyRelu { slope } => g.leaky_relu(x, slope),
            Activation::Sigmoid => g.sigmoid(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let s = Self {
            widths,
            hidden,
            output,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::invalid("an MLP needs input and output widths"));
        }
        if self.widths.contains(&0) {
            return Err(Error::invalid(format!("zero width in {:?}", self.widths)));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("validated")
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn layout(&self) -> Vec<LayerLayout> {
        let mut out = Vec::with_capacity(2 * self.n_layers());
        let mut offset = 0;
        for (i, w) in self.widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            out.push(LayerLayout {
                name: format!("fc{i}.weight"),
                offset,
                len: fan_in * fan_out,
                shape: vec![fan_in, fan_out],
            });
            offset += fan_in * fan_out;
            out.push(LayerLayout {
                name: format!("fc{i}.bias"),
                offset,
                len: fan_out,
                shape: vec![fan_out],
            });
            offset += fan_out;
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(|l| l.len).sum()
    }
}

/// He-normal weights (std `sqrt(2 / fan_in)`), zero biases.
pub fn init_mlp(spec: &MlpSpec, seed: u64) -> Result<FlatParams> {
    spec.validate()?;
    let layout = spec.layout();
    let mut data = Vec::with_capacity(spec.param_count());
    for (i, w) in spec.widths.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let mut r = rng::stream(seed, &[rng::tag::INIT, i as u64]);
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        data.extend((0..fan_in * fan_out).map(|_| normal.sample(&mut r)));
        data.extend(std::iter::repeat_n(0.0, fan_out));
    }
    FlatParams::new(data, layout)
}

/// Graph nodes produced by [`mlp_apply`].
#[derive(Debug, Clone)]
pub struct MlpNodes {
    pub output: NodeId,
    /// One leaf per layout entry, in layout order.
    pub params: Vec<NodeId>,
}

impl MlpNodes {
    pub fn lens(params: &FlatParams) -> Vec<usize> {
        params.layout().iter().map(|l| l.len).collect()
    }
}

/// Builds the forward pass of `spec` on `input` (a `[batch, in]` node).
pub fn mlp_apply(params: &FlatParams, spec: &MlpSpec, input: NodeId, graph: &mut Graph) -> Result<MlpNodes> {
    spec.validate()?;
    if params.layout() != spec.layout().as_slice() {
        return Err(Error::Layout("parameters do not match the network spec".into()));
    }
    let in_shape = graph.value(input)?.shape().to_vec();
    if in_shape.len() != 2 || in_shape[1] != spec.input_width() {
        return Err(Error::ShapeMismatch {
            kind: "mlp_apply",
            shapes: vec![in_shape, vec![spec.input_width()]],
        });
    }
    let mut leaves = Vec::with_capacity(params.layout().len());
    for l in params.layout() {
        let t = Tensor::new(l.shape.clone(), params.layer(l).to_vec())?;
        leaves.push(graph.input(t));
    }
    let mut x = input;
    let n = spec.n_layers();
    for i in 0..n {
        x = graph.matmul(x, leaves[2 * i])?;
        x = graph.add(x, leaves[2 * i + 1])?;
        let act = if i + 1 == n { spec.output } else { spec.hidden };
        x = act.apply(graph, x)?;
    }
    Ok(MlpNodes {
        output: x,
        params: leaves,
    })
}

/// Forward pass without keeping the graph.
pub fn mlp_forward(params: &FlatParams, spec: &MlpSpec, input: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let x = g.input(input.clone());
    let nodes = mlp_apply(params, spec, x, &mut g)?;
    Ok(g.value(nodes.output)?.clone())
}
