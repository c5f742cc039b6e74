use serde::{Deserialize, Serialize};

use super::spec::{param_name, Activation, FlowShape, LayerSpec, NetSpec};
use crate::error::{Error, Result};
use crate::numcore::{Gradients, Mode, NetworkParams, ParamGrads, RngStream, Tape, Tensor, Var};

/// A network description together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub spec: NetSpec,
    pub params: NetworkParams,
}

/// Parameters of a network placed on a tape, in layout order.
#[derive(Debug, Clone)]
pub struct Bound {
    names: Vec<String>,
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Option<Var> {
        self.names.iter().position(|n| n == name).map(|i| self.vars[i])
    }

    fn layer(&self, layer: usize, suffix: &str) -> Result<Var> {
        let name = param_name(layer, suffix);
        self.var(&name).ok_or_else(|| Error::invalid(format!("missing parameter {name}")))
    }

    /// Gradient of every bound parameter, zero-filled where the loss did not reach it.
    pub fn grads(&self, tape_grads: &Gradients, net: &Network) -> Result<ParamGrads> {
        let mut out = NetworkParams::new();
        for (name, var) in self.names.iter().zip(&self.vars) {
            let g = match tape_grads.get(*var) {
                Some(g) => g.clone(),
                None => Tensor::zeros(net.params.get(name).map(|t| t.shape()).unwrap_or(&[])),
            };
            out.insert(name.clone(), g)?;
        }
        Ok(out)
    }
}

enum Flow {
    Steps(Vec<Var>),
    Grid(Var),
    Flat(Var),
}

impl Network {
    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init(spec: NetSpec, rng: &mut RngStream) -> Result<Network> {
        let mut params = NetworkParams::new();
        for (name, shape, fan) in spec.param_layout()? {
            let bound = 1.0 / (fan.max(1) as f64).sqrt();
            params.insert(name, rng.uniform_tensor(&shape, -bound, bound))?;
        }
        Ok(Network { spec, params })
    }

    /// Checks that `params` match the spec layout exactly.
    pub fn from_parts(spec: NetSpec, params: NetworkParams) -> Result<Network> {
        let layout = spec.param_layout()?;
        if layout.len() != params.len() {
            return Err(Error::invalid(format!(
                "{}: expected {} parameter tensors, found {}",
                spec.name,
                layout.len(),
                params.len()
            )));
        }
        for (name, shape, _) in &layout {
            match params.get(name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(Error::shape(name.clone(), format!("expected {:?}, found {:?}", shape, t.shape())))
                }
                None => return Err(Error::invalid(format!("{}: missing parameter {name}", spec.name))),
            }
        }
        Ok(Network { spec, params })
    }

    pub fn param_count(&self) -> usize {
        self.params.count()
    }

    pub fn output_shape(&self) -> Result<FlowShape> {
        self.spec.output_shape()
    }

    /// Places parameters on the tape; `trainable = false` binds them as constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Bound {
        let mut names = Vec::with_capacity(self.params.len());
        let mut vars = Vec::with_capacity(self.params.len());
        for (name, t) in self.params.iter() {
            names.push(name.to_string());
            vars.push(if trainable { tape.param(t.clone()) } else { tape.constant(t.clone()) });
        }
        Bound { names, vars }
    }

    /// Runs the network on the tape. Input is `[batch, seq, features]` or `[batch, features]`.
    pub fn forward_on(&self, tape: &mut Tape, bound: &Bound, input: Var, mode: Mode, rng: &mut RngStream) -> Result<Var> {
        let (entering, _) = self.spec.plan()?;
        let shape = tape.shape(input).to_vec();
        let expected = self.spec.input_shape().dims();
        if shape.len() != expected.len() + 1 || shape[1..] != expected[..] {
            return Err(Error::shape(
                format!("{} input", self.spec.name),
                format!("expected [batch, {}], got {:?}", dims_str(&expected), shape),
            ));
        }
        let batch = shape[0];
        let mut flow = if expected.len() == 2 { Flow::Grid(input) } else { Flow::Flat(input) };
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let label = || self.spec.layer_label(i);
            let in_dim = match entering[i] {
                FlowShape::Seq { dim, .. } | FlowShape::Flat { dim } => dim,
            };
            flow = match layer {
                LayerSpec::Gru { units } => {
                    let steps = to_steps(tape, flow, batch)?;
                    let cell = GruVars::bind(bound, i)?;
                    let mut h = tape.constant(Tensor::zeros(&[batch, *units]));
                    let mut out = Vec::with_capacity(steps.len());
                    for x in steps {
                        h = cell.step(tape, x, h).map_err(|e| relabel(e, label()))?;
                        out.push(h);
                    }
                    Flow::Steps(out)
                }
                LayerSpec::Lstm { units } => {
                    let steps = to_steps(tape, flow, batch)?;
                    let cell = LstmVars::bind(bound, i)?;
                    let mut h = tape.constant(Tensor::zeros(&[batch, *units]));
                    let mut c = h;
                    let mut out = Vec::with_capacity(steps.len());
                    for x in steps {
                        (h, c) = cell.step(tape, x, h, c).map_err(|e| relabel(e, label()))?;
                        out.push(h);
                    }
                    Flow::Steps(out)
                }
                LayerSpec::Dense { units, activation, bias } => {
                    let w = bound.layer(i, "w")?;
                    let b = if *bias { Some(bound.layer(i, "b")?) } else { None };
                    let apply = |tape: &mut Tape, x: Var| -> Result<Var> {
                        let mut y = tape.matmul(x, w)?;
                        if let Some(b) = b {
                            y = tape.add(y, b)?;
                        }
                        activate(tape, y, *activation)
                    };
                    match flow {
                        Flow::Flat(x) => Flow::Flat(apply(tape, x).map_err(|e| relabel(e, label()))?),
                        Flow::Steps(xs) => Flow::Steps(
                            xs.into_iter()
                                .map(|x| apply(tape, x))
                                .collect::<Result<_>>()
                                .map_err(|e| relabel(e, label()))?,
                        ),
                        Flow::Grid(x) => {
                            let len = tape.shape(x)[1];
                            let flat = tape.reshape(x, &[batch * len, in_dim])?;
                            let y = apply(tape, flat).map_err(|e| relabel(e, label()))?;
                            Flow::Grid(tape.reshape(y, &[batch, len, *units])?)
                        }
                    }
                }
                LayerSpec::Conv1d { kernel, stride, activation, .. } => {
                    let x = to_grid(tape, flow, batch)?;
                    let (w, b) = (bound.layer(i, "w")?, bound.layer(i, "b")?);
                    let y = tape.conv1d(x, w, b, *kernel, *stride).map_err(|e| relabel(e, label()))?;
                    Flow::Grid(activate(tape, y, *activation)?)
                }
                LayerSpec::Flatten => match flow {
                    Flow::Flat(x) => Flow::Flat(x),
                    Flow::Grid(x) => {
                        let n: usize = tape.shape(x)[1..].iter().product();
                        Flow::Flat(tape.reshape(x, &[batch, n])?)
                    }
                    Flow::Steps(xs) => Flow::Flat(tape.concat(&xs, 1)?),
                },
                LayerSpec::LastStep => match flow {
                    Flow::Steps(xs) => Flow::Flat(*xs.last().ok_or_else(|| Error::shape(label(), "empty sequence"))?),
                    Flow::Grid(x) => {
                        let len = tape.shape(x)[1];
                        let s = tape.slice(x, 1, len - 1, len)?;
                        Flow::Flat(tape.reshape(s, &[batch, in_dim])?)
                    }
                    Flow::Flat(_) => return Err(Error::shape(label(), "needs a sequence")),
                },
                LayerSpec::Dropout { rate } => match flow {
                    Flow::Flat(x) => Flow::Flat(tape.dropout(x, *rate, mode, rng)?),
                    Flow::Grid(x) => Flow::Grid(tape.dropout(x, *rate, mode, rng)?),
                    Flow::Steps(xs) => Flow::Steps(
                        xs.into_iter().map(|x| tape.dropout(x, *rate, mode, rng)).collect::<Result<_>>()?,
                    ),
                },
            };
        }
        match flow {
            Flow::Flat(x) | Flow::Grid(x) => Ok(x),
            steps @ Flow::Steps(_) => to_grid(tape, steps, batch),
        }
    }

    /// Stand-alone forward pass returning the output tensor.
    pub fn forward(&self, input: &Tensor, mode: Mode, rng: &mut RngStream) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let x = tape.constant(input.clone());
        let y = self.forward_on(&mut tape, &bound, x, mode, rng)?;
        Ok(tape.value(y).clone())
    }
}

fn dims_str(d: &[usize]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn relabel(e: Error, label: String) -> Error {
    match e {
        Error::Shape { op, detail } => Error::shape(label, format!("{op}: {detail}")),
        other => other,
    }
}

fn activate(tape: &mut Tape, x: Var, act: Activation) -> Result<Var> {
    match act {
        Activation::Sigmoid => tape.sigmoid(x),
        Activation::Tanh => tape.tanh(x),
        Activation::Relu => tape.relu(x),
        Activation::Linear => Ok(x),
    }
}

fn to_steps(tape: &mut Tape, flow: Flow, batch: usize) -> Result<Vec<Var>> {
    match flow {
        Flow::Steps(xs) => Ok(xs),
        Flow::Grid(x) => {
            let (len, dim) = (tape.shape(x)[1], tape.shape(x)[2]);
            (0..len)
                .map(|t| {
                    let s = tape.slice(x, 1, t, t + 1)?;
                    tape.reshape(s, &[batch, dim])
                })
                .collect()
        }
        Flow::Flat(_) => Err(Error::shape("sequence layer", "received a flat value")),
    }
}

fn to_grid(tape: &mut Tape, flow: Flow, batch: usize) -> Result<Var> {
    match flow {
        Flow::Grid(x) => Ok(x),
        Flow::Steps(xs) => {
            let dim = tape.shape(xs[0])[1];
            let parts = xs.iter().map(|&x| tape.reshape(x, &[batch, 1, dim])).collect::<Result<Vec<_>>>()?;
            tape.concat(&parts, 1)
        }
        Flow::Flat(_) => Err(Error::shape("sequence layer", "received a flat value")),
    }
}

/// GRU gate parameters on a tape.
pub struct GruVars {
    pub w_z: Var,
    pub b_z: Var,
    pub w_r: Var,
    pub b_r: Var,
    pub w_h: Var,
    pub b_h: Var,
}

impl GruVars {
    pub fn bind(bound: &Bound, layer: usize) -> Result<Self> {
        Ok(GruVars {
            w_z: bound.layer(layer, "w_z")?,
            b_z: bound.layer(layer, "b_z")?,
            w_r: bound.layer(layer, "w_r")?,
            b_r: bound.layer(layer, "b_r")?,
            w_h: bound.layer(layer, "w_h")?,
            b_h: bound.layer(layer, "b_h")?,
        })
    }

    /// `x: [b, in]`, `h: [b, units]` to the next hidden state.
    pub fn step(&self, tape: &mut Tape, x: Var, h: Var) -> Result<Var> {
        let xh = tape.concat(&[x, h], 1)?;
        let z = affine(tape, xh, self.w_z, self.b_z)?;
        let z = tape.sigmoid(z)?;
        let r = affine(tape, xh, self.w_r, self.b_r)?;
        let r = tape.sigmoid(r)?;
        let rh = tape.mul(r, h)?;
        let xrh = tape.concat(&[x, rh], 1)?;
        let cand = affine(tape, xrh, self.w_h, self.b_h)?;
        let cand = tape.tanh(cand)?;
        // (1 - z) * cand + z * h
        let d = tape.sub(h, cand)?;
        let zd = tape.mul(z, d)?;
        tape.add(cand, zd)
    }
}

/// LSTM gate parameters on a tape.
pub struct LstmVars {
    pub w_f: Var,
    pub b_f: Var,
    pub w_i: Var,
    pub b_i: Var,
    pub w_o: Var,
    pub b_o: Var,
    pub w_g: Var,
    pub b_g: Var,
}

impl LstmVars {
    pub fn bind(bound: &Bound, layer: usize) -> Result<Self> {
        Ok(LstmVars {
            w_f: bound.layer(layer, "w_f")?,
            b_f: bound.layer(layer, "b_f")?,
            w_i: bound.layer(layer, "w_i")?,
            b_i: bound.layer(layer, "b_i")?,
            w_o: bound.layer(layer, "w_o")?,
            b_o: bound.layer(layer, "b_o")?,
            w_g: bound.layer(layer, "w_g")?,
            b_g: bound.layer(layer, "b_g")?,
        })
    }

    pub fn step(&self, tape: &mut Tape, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let xh = tape.concat(&[x, h], 1)?;
        let f = affine(tape, xh, self.w_f, self.b_f)?;
        let f = tape.sigmoid(f)?;
        let i = affine(tape, xh, self.w_i, self.b_i)?;
        let i = tape.sigmoid(i)?;
        let o = affine(tape, xh, self.w_o, self.b_o)?;
        let o = tape.sigmoid(o)?;
        let g = affine(tape, xh, self.w_g, self.b_g)?;
        let g = tape.tanh(g)?;
        let fc = tape.mul(f, c)?;
        let ig = tape.mul(i, g)?;
        let c2 = tape.add(fc, ig)?;
        let tc = tape.tanh(c2)?;
        let h2 = tape.mul(o, tc)?;
        Ok((h2, c2))
    }
}

fn affine(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    tape.add(y, b)
}

/// Single GRU step outside any tape, for one unbatched input vector.
pub fn gru_cell_forward(params: &NetworkParams, layer: usize, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let (bound, xv, hv) = bind_cell(&mut tape, params, layer, x, h)?;
    let cell = GruVars::bind(&bound, layer)?;
    let y = cell.step(&mut tape, xv, hv)?;
    Ok(tape.value(y).data().to_vec())
}

/// Single LSTM step outside any tape; returns `(h, c)`.
pub fn lstm_cell_forward(
    params: &NetworkParams,
    layer: usize,
    x: &[f64],
    h: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut tape = Tape::new();
    let (bound, xv, hv) = bind_cell(&mut tape, params, layer, x, h)?;
    let cv = tape.constant(Tensor::new(vec![1, c.len()], c.to_vec())?);
    let cell = LstmVars::bind(&bound, layer)?;
    let (h2, c2) = cell.step(&mut tape, xv, hv, cv)?;
    Ok((tape.value(h2).data().to_vec(), tape.value(c2).data().to_vec()))
}

fn bind_cell(tape: &mut Tape, params: &NetworkParams, layer: usize, x: &[f64], h: &[f64]) -> Result<(Bound, Var, Var)> {
    let prefix = format!("l{layer}.");
    let mut names = Vec::new();
    let mut vars = Vec::new();
    for (name, t) in params.iter().filter(|(n, _)| n.starts_with(&prefix)) {
        names.push(name.to_string());
        vars.push(tape.constant(t.clone()));
    }
    let xv = tape.constant(Tensor::new(vec![1, x.len()], x.to_vec())?);
    let hv = tape.constant(Tensor::new(vec![1, h.len()], h.to_vec())?);
    Ok((Bound { names, vars }, xv, hv))
}
