use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Softplus,
    NegatedSoftplus,
    Linear,
    Relu,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eᶻ)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Softplus => softplus(z),
            Activation::NegatedSoftplus => -softplus(z),
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative at pre-activation `z`; ReLU uses 0 at the kink.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Softplus => sigmoid(z),
            Activation::NegatedSoftplus => -sigmoid(z),
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Softplus => "softplus",
            Activation::NegatedSoftplus => "negated_softplus",
            Activation::Linear => "linear",
            Activation::Relu => "relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sigmoid" => Activation::Sigmoid,
            "softplus" => Activation::Softplus,
            "negated_softplus" => Activation::NegatedSoftplus,
            "linear" => Activation::Linear,
            "relu" => Activation::Relu,
            other => return Err(Error::validation(format!("unknown activation '{other}'"))),
        })
    }
}

/// Fully-connected network. Parameters live in one flat vector, layer by
/// layer, each layer as its row-major `out × in` weights followed by its
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
    version: u64,
}

/// Borrowed view of one layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
    pub activation: Activation,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    dims: Vec<usize>,
    batch: usize,
    /// Layer inputs `a₀ … a_{L−1}`, each `batch × dims[l]`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations `z₁ … z_L`.
    pre: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct MlpGradients {
    /// Same layout as the model parameters.
    pub params: Vec<f64>,
    /// `batch × input_dim`.
    pub inputs: Vec<f64>,
}

fn layer_len(inp: usize, out: usize) -> usize {
    out * inp + out
}

/// `C ← α·A·op(B) + β·C` with row-major `A: m×k`; `B` is `k×n` row-major
/// or, when `b_transposed`, an `n×k` row-major matrix used as `Bᵀ`.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_transposed: bool, b: &[f64], b_transposed: bool, beta: f64, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_transposed { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_transposed { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: slice lengths were checked against the stated shapes and the
    // strides stay within them.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Glorot-uniform weights `U[−√(6/(in+out)), √(6/(in+out))]` and zero
    /// biases, drawn from `seed`.
    pub fn new(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        let mut model = Self::zeros(dims, activations)?;
        let mut rng = SplitMix64::for_field(seed, 0, 0x4d4c_505f_494e_4954);
        let mut off = 0;
        for l in 0..activations.len() {
            let (inp, out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / (inp + out) as f64).sqrt();
            for w in &mut model.params[off..off + out * inp] {
                *w = rng.uniform_in(-limit, limit);
            }
            off += layer_len(inp, out);
        }
        Ok(model)
    }

    pub fn zeros(dims: &[usize], activations: &[Activation]) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::validation(
                "an MLP needs at least two layer sizes and one activation per layer",
            ));
        }
        if let Some(i) = dims.iter().position(|&d| d == 0) {
            return Err(Error::validation(format!("layer size {i} is zero")));
        }
        let count = dims.windows(2).map(|w| layer_len(w[0], w[1])).sum();
        Ok(Self {
            dims: dims.to_vec(),
            activations: activations.to_vec(),
            params: vec![0.0; count],
            version: 0,
        })
    }

    pub fn from_params(dims: &[usize], activations: &[Activation], params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(dims, activations)?;
        crate::error::check_len("MLP parameters", model.params.len(), params.len())?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("MLP parameters must be finite"));
        }
        model.params = params;
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layer sizes")
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameters. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn layer(&self, l: usize) -> LayerView<'_> {
        let off: usize = (0..l).map(|i| layer_len(self.dims[i], self.dims[i + 1])).sum();
        let (inp, out) = (self.dims[l], self.dims[l + 1]);
        LayerView {
            inputs: inp,
            outputs: out,
            weights: &self.params[off..off + out * inp],
            bias: &self.params[off + out * inp..off + layer_len(inp, out)],
            activation: self.activations[l],
        }
    }

    /// Forward pass on a row-major `batch × input_dim` matrix.
    pub fn forward(&self, x: &[f64], batch: usize) -> Result<(Vec<f64>, ForwardCache)> {
        crate::error::check_len("MLP input", batch * self.input_dim(), x.len())?;
        let mut inputs = Vec::with_capacity(self.num_layers());
        let mut pre = Vec::with_capacity(self.num_layers());
        let mut a = x.to_vec();
        for l in 0..self.num_layers() {
            let layer = self.layer(l);
            let mut z = Vec::with_capacity(batch * layer.outputs);
            for _ in 0..batch {
                z.extend_from_slice(layer.bias);
            }
            gemm(batch, layer.inputs, layer.outputs, &a, false, layer.weights, true, 1.0, &mut z);
            let next: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        let cache = ForwardCache {
            version: self.version,
            dims: self.dims.clone(),
            batch,
            inputs,
            pre,
        };
        Ok((a, cache))
    }

    pub fn predict(&self, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(self.forward(x, batch)?.0)
    }

    /// Gradients of `Σ cotangent ⊙ output` with respect to parameters and
    /// inputs.
    pub fn backward(&self, cache: &ForwardCache, cotangent: &[f64]) -> Result<MlpGradients> {
        if cache.version != self.version || cache.dims != self.dims {
            return Err(Error::validation(
                "forward cache does not match the current model parameters",
            ));
        }
        let batch = cache.batch;
        crate::error::check_len("MLP output cotangent", batch * self.output_dim(), cotangent.len())?;
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = cotangent.to_vec();
        let mut off_end = self.params.len();
        for l in (0..self.num_layers()).rev() {
            let layer = self.layer(l);
            let (inp, out) = (layer.inputs, layer.outputs);
            for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
                *d *= layer.activation.derivative(z);
            }
            let off = off_end - layer_len(inp, out);
            let (gw, gb) = grads[off..off_end].split_at_mut(out * inp);
            // dW = δᵀ a
            gemm(out, batch, inp, &delta, true, &cache.inputs[l], false, 0.0, gw);
            for row in delta.chunks_exact(out) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            let mut prev = vec![0.0; batch * inp];
            gemm(batch, out, inp, &delta, false, layer.weights, false, 0.0, &mut prev);
            delta = prev;
            off_end = off;
        }
        Ok(MlpGradients {
            params: grads,
            inputs: delta,
        })
    }
}

/// One layer as stored in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Mlp {
    pub fn to_layers(&self) -> Vec<LayerRecord> {
        (0..self.num_layers())
            .map(|l| {
                let v = self.layer(l);
                LayerRecord {
                    inputs: v.inputs,
                    outputs: v.outputs,
                    activation: v.activation,
                    weights: v.weights.to_vec(),
                    bias: v.bias.to_vec(),
                }
            })
            .collect()
    }

    pub fn from_layers(layers: &[LayerRecord]) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::validation("checkpoint has no layers"))?;
        let mut dims = vec![first.inputs];
        let mut acts = Vec::new();
        let mut params = Vec::new();
        for (l, rec) in layers.iter().enumerate() {
            if rec.inputs != *dims.last().unwrap() {
                return Err(Error::validation(format!(
                    "layer {l} expects {} inputs but the previous layer has {}",
                    rec.inputs,
                    dims.last().unwrap()
                )));
            }
            crate::error::check_len("layer weights", rec.inputs * rec.outputs, rec.weights.len())?;
            crate::error::check_len("layer bias", rec.outputs, rec.bias.len())?;
            dims.push(rec.outputs);
            acts.push(rec.activation);
            params.extend_from_slice(&rec.weights);
            params.extend_from_slice(&rec.bias);
        }
        Self::from_params(&dims, &acts, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loss(model: &Mlp, x: &[f64], batch: usize, cot: &[f64]) -> f64 {
        let y = model.predict(x, batch).unwrap();
        y.iter().zip(cot).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn zero_net_outputs_zero() {
        let m = Mlp::zeros(&[3, 4, 2], &[Activation::Sigmoid, Activation::Linear]).unwrap();
        let (y, cache) = m.forward(&[1.0, -2.0, 3.0], 1).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        assert!(cache.inputs[1].iter().all(|&v| v == 0.5));
    }

    #[test]
    fn negated_softplus_is_nonpositive() {
        let m = Mlp::new(&[4, 8, 3], &[Activation::Sigmoid, Activation::NegatedSoftplus], 1).unwrap();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 - 20.0) * 3.0).collect();
        assert!(m.predict(&x, 10).unwrap().iter().all(|&v| v < 0.0));
        assert!(Activation::NegatedSoftplus.apply(-30.0) < 0.0);
        assert!(Activation::NegatedSoftplus.apply(800.0).is_finite());
    }

    #[test]
    fn linear_layer_gradient_is_input() {
        let m = Mlp::from_params(&[3, 1], &[Activation::Linear], vec![0.3, -1.0, 2.0, 0.5]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let (_, cache) = m.forward(&x, 1).unwrap();
        let g = m.backward(&cache, &[1.0]).unwrap();
        assert_eq!(g.params, vec![1.0, 2.0, 3.0, 1.0]);
        assert_eq!(g.inputs, vec![0.3, -1.0, 2.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut m = Mlp::new(
            &[3, 5, 4, 2],
            &[Activation::Sigmoid, Activation::Softplus, Activation::NegatedSoftplus],
            7,
        )
        .unwrap();
        for (i, p) in m.params_mut().iter_mut().enumerate() {
            *p += 0.05 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
        }
        let x = [0.2, -0.7, 1.1, 0.5, 0.1, -0.3];
        let cot = [1.0, -0.5, 0.25, 2.0];
        let (_, cache) = m.forward(&x, 2).unwrap();
        let g = m.backward(&cache, &cot).unwrap();
        let h = 1e-6;
        for k in 0..m.params().len() {
            let mut plus = m.clone();
            plus.params_mut()[k] += h;
            let mut minus = m.clone();
            minus.params_mut()[k] -= h;
            let fd = (loss(&plus, &x, 2, &cot) - loss(&minus, &x, 2, &cot)) / (2.0 * h);
            assert!((fd - g.params[k]).abs() <= 1e-6 * (1.0 + fd.abs()), "param {k}: {fd} vs {}", g.params[k]);
        }
        for k in 0..x.len() {
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let fd = (loss(&m, &xp, 2, &cot) - loss(&m, &xm, 2, &cot)) / (2.0 * h);
            assert!((fd - g.inputs[k]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn stale_cache_rejected() {
        let mut m = Mlp::new(&[2, 2], &[Activation::Linear], 1).unwrap();
        let (_, cache) = m.forward(&[1.0, 1.0], 1).unwrap();
        m.params_mut()[0] = 3.0;
        assert!(m.backward(&cache, &[1.0, 1.0]).is_err());
        let other = Mlp::new(&[2, 3], &[Activation::Linear], 1).unwrap();
        let (_, cache) = other.forward(&[1.0, 1.0], 1).unwrap();
        assert!(m.backward(&cache, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let m = Mlp::new(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], 3).unwrap();
        let (_, cache) = m.forward(&[1.0, 2.0, 3.0], 1).unwrap();
        let g = m.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn layers_roundtrip() {
        let m = Mlp::new(&[3, 4, 2], &[Activation::Sigmoid, Activation::Linear], 9).unwrap();
        assert_eq!(Mlp::from_layers(&m.to_layers()).unwrap(), m);
        let mut bad = m.to_layers();
        bad[1].inputs = 5;
        assert!(Mlp::from_layers(&bad).is_err());
    }

    #[test]
    fn activation_names_roundtrip() {
        for a in [
            Activation::Sigmoid,
            Activation::Softplus,
            Activation::NegatedSoftplus,
            Activation::Linear,
            Activation::Relu,
        ] {
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
    }
}
