//! Network state, forward evaluation, and reverse-mode gradients.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorNetError};
use crate::layer::{fans, output_shape, param_shapes, LayerKind, LayerSpec};
use crate::tensor::Tensor;

/// Declared model: input shape plus an ordered layer list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// Resolves the output shape of every layer, failing on the first layer
    /// whose hyperparameters do not produce a well-defined shape.
    pub fn resolve_shapes(&self) -> Result<Vec<Vec<usize>>> {
        if self.layers.is_empty() {
            return Err(TensorNetError::InvalidSpec("no layers".into()));
        }
        if self.input_shape.is_empty() || self.input_shape.iter().any(|&e| e == 0) {
            return Err(TensorNetError::InvalidSpec(format!(
                "bad input shape {:?}",
                self.input_shape
            )));
        }
        let mut shapes: Vec<Vec<usize>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            if !(layer.lr_mult > 0.0 && layer.lr_mult.is_finite()) {
                return Err(TensorNetError::InvalidSpec(format!(
                    "layer {i} has non-positive lr multiplier {}",
                    layer.lr_mult
                )));
            }
            let input = if i == 0 {
                &self.input_shape
            } else {
                &shapes[i - 1]
            };
            let out = output_shape(layer, i, input, &shapes)?;
            shapes.push(out);
        }
        Ok(shapes)
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }
}

/// Parameter (or gradient) tensors of one layer: `[weights, bias]` for
/// parameterized kinds, empty otherwise.
pub type LayerParams = Vec<Tensor>;

/// A spec bound to concrete parameters and gradient accumulators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkState {
    spec: NetworkSpec,
    shapes: Vec<Vec<usize>>,
    params: Vec<LayerParams>,
    #[serde(skip)]
    grads: Vec<LayerParams>,
    #[serde(skip)]
    velocity: Vec<LayerParams>,
}

/// Activations produced by [`NetworkState::forward`]: the input plus one
/// output tensor per layer, in layer order.
#[derive(Debug, Clone)]
pub struct Activations {
    pub input: Tensor,
    pub outputs: Vec<Tensor>,
}

impl Activations {
    /// Output of the final layer.
    pub fn last(&self) -> &Tensor {
        self.outputs.last().expect("non-empty network")
    }
}

fn zero_params_like(params: &[LayerParams]) -> Vec<LayerParams> {
    params
        .iter()
        .map(|p| p.iter().map(|t| Tensor::zeros(t.shape())).collect())
        .collect()
}

impl NetworkState {
    /// Initializes parameters with the seeded uniform(-s, s) rule,
    /// s = sqrt(6 / (fan_in + fan_out)); biases start at zero.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let shapes = spec.resolve_shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(spec.layers.len());
        for (i, layer) in spec.layers.iter().enumerate() {
            let input = if i == 0 {
                &spec.input_shape
            } else {
                &shapes[i - 1]
            };
            let pshapes = param_shapes(&layer.kind, input);
            let mut tensors = Vec::with_capacity(pshapes.len());
            if !pshapes.is_empty() {
                let (fan_in, fan_out) = fans(&layer.kind, input);
                let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let wshape = &pshapes[0];
                let n: usize = wshape.iter().product();
                let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-s..s)).collect();
                tensors.push(Tensor::from_vec(wshape, data)?);
                tensors.push(Tensor::zeros(&pshapes[1]));
            }
            params.push(tensors);
        }
        let grads = zero_params_like(&params);
        let velocity = zero_params_like(&params);
        Ok(NetworkState {
            spec,
            shapes,
            params,
            grads,
            velocity,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().expect("non-empty network")
    }

    pub fn params(&self, layer: usize) -> &LayerParams {
        &self.params[layer]
    }

    pub fn params_mut(&mut self, layer: usize) -> &mut LayerParams {
        &mut self.params[layer]
    }

    pub fn grads(&self, layer: usize) -> &LayerParams {
        &self.grads[layer]
    }

    pub fn n_layers(&self) -> usize {
        self.spec.layers.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().flatten().map(Tensor::len).sum()
    }

    /// All parameters flattened in layer order; useful for determinism checks
    /// and finite-difference probing.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params
            .iter()
            .flatten()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    pub fn set_flat_param(&mut self, index: usize, value: f64) {
        let mut k = index;
        for layer in &mut self.params {
            for t in layer {
                if k < t.len() {
                    t.data_mut()[k] = value;
                    return;
                }
                k -= t.len();
            }
        }
        panic!("flat parameter index {index} out of range");
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.grads {
            for t in layer {
                t.data_mut().fill(0.0);
            }
        }
    }

    /// Rebuilds gradient and momentum buffers after deserialization.
    pub fn reset_buffers(&mut self) {
        self.grads = zero_params_like(&self.params);
        self.velocity = zero_params_like(&self.params);
    }

    /// Runs the network on a single sample. Returns one activation per layer.
    pub fn forward(&self, input: &Tensor) -> Result<Activations> {
        if input.shape() != self.spec.input_shape.as_slice() {
            return Err(TensorNetError::ShapeMismatch {
                layer: 0,
                expected: self.spec.input_shape.clone(),
                actual: input.shape().to_vec(),
            });
        }
        let mut outputs: Vec<Tensor> = Vec::with_capacity(self.n_layers());
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let x = if i == 0 { input } else { &outputs[i - 1] };
            let y = self.forward_layer(i, &layer.kind, x, &outputs)?;
            outputs.push(y);
        }
        Ok(Activations {
            input: input.clone(),
            outputs,
        })
    }

    fn forward_layer(
        &self,
        index: usize,
        kind: &LayerKind,
        x: &Tensor,
        earlier: &[Tensor],
    ) -> Result<Tensor> {
        let out_shape = &self.shapes[index];
        let mut y = Tensor::zeros(out_shape);
        match *kind {
            LayerKind::Conv { kernel, stride, .. } => {
                let &[ci, hi, wi] = x.shape() else {
                    unreachable!()
                };
                let &[co, ho, wo] = out_shape.as_slice() else {
                    unreachable!()
                };
                let weights = &self.params[index][0];
                let bias = &self.params[index][1];
                let xd = x.data();
                let wd = weights.data();
                let yd = y.data_mut();
                for o in 0..co {
                    let b = bias.data()[o];
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let mut acc = b;
                            for c in 0..ci {
                                for ky in 0..kernel.0 {
                                    for kx in 0..kernel.1 {
                                        let iy = oy * stride.0 + ky;
                                        let ix = ox * stride.1 + kx;
                                        let w = wd[((o * ci + c) * kernel.0 + ky) * kernel.1 + kx];
                                        acc += w * xd[(c * hi + iy) * wi + ix];
                                    }
                                }
                            }
                            yd[(o * ho + oy) * wo + ox] = acc;
                        }
                    }
                }
            }
            LayerKind::MaxPool { kernel, stride } => {
                let &[c, hi, wi] = x.shape() else {
                    unreachable!()
                };
                let &[_, ho, wo] = out_shape.as_slice() else {
                    unreachable!()
                };
                let xd = x.data();
                let yd = y.data_mut();
                for ch in 0..c {
                    for oy in 0..ho {
                        for ox in 0..wo {
                            let mut best = f64::NEG_INFINITY;
                            for ky in 0..kernel.0 {
                                for kx in 0..kernel.1 {
                                    let iy = oy * stride.0 + ky;
                                    let ix = ox * stride.1 + kx;
                                    let v = xd[(ch * hi + iy) * wi + ix];
                                    if v > best {
                                        best = v;
                                    }
                                }
                            }
                            yd[(ch * ho + oy) * wo + ox] = best;
                        }
                    }
                }
            }
            LayerKind::Dense { width } => {
                let weights = &self.params[index][0];
                let bias = &self.params[index][1];
                let n_in = x.len();
                let xd = x.data();
                let wd = weights.data();
                let yd = y.data_mut();
                for o in 0..width {
                    let row = &wd[o * n_in..(o + 1) * n_in];
                    let mut acc = bias.data()[o];
                    for (w, v) in row.iter().zip(xd) {
                        acc += w * v;
                    }
                    yd[o] = acc;
                }
            }
            LayerKind::Relu => {
                for (o, v) in y.data_mut().iter_mut().zip(x.data()) {
                    *o = v.max(0.0);
                }
            }
            LayerKind::Sigmoid => {
                for (o, &v) in y.data_mut().iter_mut().zip(x.data()) {
                    *o = stable_sigmoid(v);
                }
            }
            LayerKind::Softmax => {
                let max = x.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &v) in y.data_mut().iter_mut().zip(x.data()) {
                    let e = (v - max).exp();
                    *o = e;
                    sum += e;
                }
                for o in y.data_mut() {
                    *o /= sum;
                }
            }
            LayerKind::Concat { with } => {
                let skip = &earlier[with];
                let yd = y.data_mut();
                yd[..skip.len()].copy_from_slice(skip.data());
                yd[skip.len()..].copy_from_slice(x.data());
            }
        }
        Ok(y)
    }

    fn check_activations(&self, acts: &Activations) -> Result<()> {
        if acts.outputs.len() != self.n_layers() {
            return Err(TensorNetError::StaleActivations(format!(
                "expected {} layer outputs, got {}",
                self.n_layers(),
                acts.outputs.len()
            )));
        }
        if acts.input.shape() != self.spec.input_shape.as_slice() {
            return Err(TensorNetError::StaleActivations(format!(
                "input shape {:?} does not match spec {:?}",
                acts.input.shape(),
                self.spec.input_shape
            )));
        }
        for (i, out) in acts.outputs.iter().enumerate() {
            if out.shape() != self.shapes[i].as_slice() {
                return Err(TensorNetError::StaleActivations(format!(
                    "layer {i} output shape {:?} does not match {:?}",
                    out.shape(),
                    self.shapes[i]
                )));
            }
        }
        Ok(())
    }

    /// Accumulates parameter gradients, seeding the loss gradient at the
    /// final layer's output. See [`NetworkState::backward_seeded`].
    pub fn backward(&mut self, acts: &Activations, loss_grad: &Tensor) -> Result<()> {
        let last = self.n_layers() - 1;
        self.backward_seeded(acts, &[(last, loss_grad.clone())])
    }

    /// Accumulates parameter gradients given loss-gradient seeds at one or
    /// more layer outputs (multi-head models seed several). Gradients add to
    /// the existing accumulators; they are cleared by the next SGD step or by
    /// [`NetworkState::zero_grads`].
    pub fn backward_seeded(&mut self, acts: &Activations, seeds: &[(usize, Tensor)]) -> Result<()> {
        self.check_activations(acts)?;
        let n = self.n_layers();
        let mut grad_out: Vec<Option<Tensor>> = vec![None; n];
        for (layer, g) in seeds {
            if *layer >= n {
                return Err(TensorNetError::StaleActivations(format!(
                    "gradient seed references layer {layer} of {n}"
                )));
            }
            if g.shape() != self.shapes[*layer].as_slice() {
                return Err(TensorNetError::ShapeMismatch {
                    layer: *layer,
                    expected: self.shapes[*layer].clone(),
                    actual: g.shape().to_vec(),
                });
            }
            accumulate(&mut grad_out[*layer], g);
        }

        for i in (0..n).rev() {
            let Some(gy) = grad_out[i].take() else {
                continue;
            };
            let x = if i == 0 { &acts.input } else { &acts.outputs[i - 1] };
            let y = &acts.outputs[i];
            let mut gx = Tensor::zeros(x.shape());
            match self.spec.layers[i].kind {
                LayerKind::Conv { kernel, stride, .. } => {
                    let &[ci, hi, wi] = x.shape() else {
                        unreachable!()
                    };
                    let &[co, ho, wo] = y.shape() else {
                        unreachable!()
                    };
                    let xd = x.data();
                    let gyd = gy.data();
                    let wd = self.params[i][0].data();
                    let (gw, gb) = {
                        let (a, b) = self.grads[i].split_at_mut(1);
                        (&mut a[0], &mut b[0])
                    };
                    let gwd = gw.data_mut();
                    let gbd = gb.data_mut();
                    let gxd = gx.data_mut();
                    for o in 0..co {
                        for oy in 0..ho {
                            for ox in 0..wo {
                                let g = gyd[(o * ho + oy) * wo + ox];
                                if g == 0.0 {
                                    continue;
                                }
                                gbd[o] += g;
                                for c in 0..ci {
                                    for ky in 0..kernel.0 {
                                        for kx in 0..kernel.1 {
                                            let iy = oy * stride.0 + ky;
                                            let ix = ox * stride.1 + kx;
                                            let w_idx =
                                                ((o * ci + c) * kernel.0 + ky) * kernel.1 + kx;
                                            let x_idx = (c * hi + iy) * wi + ix;
                                            gwd[w_idx] += g * xd[x_idx];
                                            gxd[x_idx] += g * wd[w_idx];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                LayerKind::MaxPool { kernel, stride } => {
                    let &[c, hi, wi] = x.shape() else {
                        unreachable!()
                    };
                    let &[_, ho, wo] = y.shape() else {
                        unreachable!()
                    };
                    let xd = x.data();
                    let gyd = gy.data();
                    let gxd = gx.data_mut();
                    for ch in 0..c {
                        for oy in 0..ho {
                            for ox in 0..wo {
                                // Recompute the argmax; ties go to the first
                                // scanned element, matching forward.
                                let mut best = f64::NEG_INFINITY;
                                let mut best_idx = 0;
                                for ky in 0..kernel.0 {
                                    for kx in 0..kernel.1 {
                                        let iy = oy * stride.0 + ky;
                                        let ix = ox * stride.1 + kx;
                                        let idx = (ch * hi + iy) * wi + ix;
                                        if xd[idx] > best {
                                            best = xd[idx];
                                            best_idx = idx;
                                        }
                                    }
                                }
                                gxd[best_idx] += gyd[(ch * ho + oy) * wo + ox];
                            }
                        }
                    }
                }
                LayerKind::Dense { width } => {
                    let n_in = x.len();
                    let xd = x.data();
                    let gyd = gy.data();
                    let wd = self.params[i][0].data();
                    let (gw, gb) = {
                        let (a, b) = self.grads[i].split_at_mut(1);
                        (&mut a[0], &mut b[0])
                    };
                    let gwd = gw.data_mut();
                    let gbd = gb.data_mut();
                    let gxd = gx.data_mut();
                    for o in 0..width {
                        let g = gyd[o];
                        if g == 0.0 {
                            continue;
                        }
                        gbd[o] += g;
                        let row = o * n_in;
                        for j in 0..n_in {
                            gwd[row + j] += g * xd[j];
                            gxd[j] += g * wd[row + j];
                        }
                    }
                }
                LayerKind::Relu => {
                    for ((gx, &gy), &yv) in gx.data_mut().iter_mut().zip(gy.data()).zip(y.data()) {
                        *gx = if yv > 0.0 { gy } else { 0.0 };
                    }
                }
                LayerKind::Sigmoid => {
                    for ((gx, &gy), &yv) in gx.data_mut().iter_mut().zip(gy.data()).zip(y.data()) {
                        *gx = gy * yv * (1.0 - yv);
                    }
                }
                LayerKind::Softmax => {
                    let dot: f64 = gy.data().iter().zip(y.data()).map(|(g, y)| g * y).sum();
                    for ((gx, &gy), &yv) in gx.data_mut().iter_mut().zip(gy.data()).zip(y.data()) {
                        *gx = yv * (gy - dot);
                    }
                }
                LayerKind::Concat { with } => {
                    let skip_len = acts.outputs[with].len();
                    let mut skip_grad = Tensor::zeros(&self.shapes[with]);
                    skip_grad
                        .data_mut()
                        .copy_from_slice(&gy.data()[..skip_len]);
                    accumulate(&mut grad_out[with], &skip_grad);
                    gx.data_mut().copy_from_slice(&gy.data()[skip_len..]);
                }
            }
            if i > 0 {
                accumulate(&mut grad_out[i - 1], &gx);
            }
        }
        Ok(())
    }

    /// One parameter update: `param -= rate * lr_mult * grad` (with optional
    /// momentum), then gradients are cleared. Errors on non-finite gradients.
    pub(crate) fn sgd_apply(&mut self, rate: f64, momentum: f64) -> Result<()> {
        for i in 0..self.spec.layers.len() {
            let lr = rate * self.spec.layers[i].lr_mult;
            for ((p, g), v) in self.params[i]
                .iter_mut()
                .zip(self.grads[i].iter_mut())
                .zip(self.velocity[i].iter_mut())
            {
                if !g.all_finite() {
                    return Err(TensorNetError::NonFinite {
                        layer: i,
                        what: "gradient",
                    });
                }
                if momentum > 0.0 {
                    for ((pv, gv), vv) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(v.data_mut().iter_mut())
                    {
                        *vv = momentum * *vv + gv;
                        *pv -= lr * *vv;
                    }
                } else {
                    for (pv, gv) in p.data_mut().iter_mut().zip(g.data()) {
                        *pv -= lr * gv;
                    }
                }
                g.data_mut().fill(0.0);
            }
        }
        Ok(())
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: &Tensor) {
    match slot {
        Some(t) => {
            for (a, b) in t.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        None => *slot = Some(g.clone()),
    }
}

fn stable_sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
