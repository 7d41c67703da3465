use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::checkpoint;
use crate::{Error, Result};

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

/// Fully connected network: rectifier on hidden layers, linear output.
///
/// Parameters live in one flat buffer, layer by layer, each layer's weight
/// matrix (row-major, `out x in`) followed by its bias. Optimizers, soft
/// updates and checkpoints all operate on that buffer directly.
#[derive(Debug)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    id: u64,
    generation: u64,
}

impl Clone for Mlp {
    fn clone(&self) -> Self {
        Mlp {
            sizes: self.sizes.clone(),
            params: self.params.clone(),
            id: next_id(),
            generation: 0,
        }
    }
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.params == other.params
    }
}

/// Activations recorded by a forward pass, needed for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    net_id: u64,
    generation: u64,
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Array2<f64>>,
    /// Pre-activation of every layer.
    pre: Vec<Array2<f64>>,
}

impl Trace {
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.activations.last().expect("trace has an output").view()
    }

    pub fn input(&self) -> ArrayView2<'_, f64> {
        self.activations[0].view()
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// Same layout as [`Mlp::params`].
    pub params: Vec<f64>,
    /// Gradient with respect to every input row.
    pub input: Array2<f64>,
}

fn block_name(sizes: &[usize], index: usize) -> String {
    let mut offset = 0;
    for layer in 0..sizes.len() - 1 {
        let w_end = offset + sizes[layer] * sizes[layer + 1];
        let b_end = w_end + sizes[layer + 1];
        if index < w_end {
            return format!("layer {layer} weights");
        }
        if index < b_end {
            return format!("layer {layer} bias");
        }
        offset = b_end;
    }
    format!("parameter {index}")
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        assert!(sizes.iter().all(|&n| n > 0), "layer sizes must be positive");
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; count],
            id: next_id(),
            generation: 0,
        }
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Mlp::zeros(sizes);
        for layer in 0..net.n_layers() {
            let bound = 1.0 / (net.sizes[layer] as f64).sqrt();
            let (w, b) = net.layer_ranges(layer);
            for i in w.start..b.end {
                net.params[i] = rng.random_range(-bound..=bound);
            }
        }
        net
    }

    /// Input size, `hidden` repeated `depth` times, output size.
    pub fn hidden_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        sizes
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Mlp::zeros(sizes);
        if params.len() != net.params.len() {
            return Err(Error::Shape {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable access invalidates every outstanding [`Trace`].
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    /// Multiplies the last layer's weights and bias by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let (w, b) = self.layer_ranges(self.n_layers() - 1);
        let params = self.params_mut();
        for x in &mut params[w.start..b.end] {
            *x *= factor;
        }
    }

    fn layer_ranges(&self, layer: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut offset = 0;
        for l in 0..layer {
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
        let w = offset..offset + fan_in * fan_out;
        let b = w.end..w.end + fan_out;
        (w, b)
    }

    /// Human-readable name of the block containing flat parameter `index`.
    pub fn block_name(&self, index: usize) -> String {
        block_name(&self.sizes, index)
    }

    /// Owned version of [`Mlp::block_name`], usable while the parameters are borrowed.
    pub fn clone_block_namer(&self) -> impl Fn(usize) -> String {
        let sizes = self.sizes.clone();
        move |i| block_name(&sizes, i)
    }

    fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (w, _) = self.layer_ranges(layer);
        ArrayView2::from_shape((self.sizes[layer + 1], self.sizes[layer]), &self.params[w])
            .expect("layer shape")
    }

    fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (_, b) = self.layer_ranges(layer);
        ArrayView1::from(&self.params[b])
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_size() {
            return Err(Error::Shape {
                expected: self.input_size(),
                got: cols,
            });
        }
        Ok(())
    }

    /// Forward pass over a batch (one row per sample), recording activations.
    pub fn forward_trace(&self, input: ArrayView2<'_, f64>) -> Result<Trace> {
        self.check_input(input.ncols())?;
        let n = self.n_layers();
        let mut activations = Vec::with_capacity(n + 1);
        let mut pre = Vec::with_capacity(n);
        activations.push(input.to_owned());
        for layer in 0..n {
            let z = activations[layer].dot(&self.weights(layer).t()) + &self.bias(layer);
            let a = if layer + 1 < n {
                z.mapv(|v| v.max(0.0))
            } else {
                z.clone()
            };
            pre.push(z);
            activations.push(a);
        }
        Ok(Trace {
            net_id: self.id,
            generation: self.generation,
            activations,
            pre,
        })
    }

    /// Batch forward pass without recording.
    pub fn predict(&self, input: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(input.ncols())?;
        let n = self.n_layers();
        let mut x = input.to_owned();
        for layer in 0..n {
            let mut z = x.dot(&self.weights(layer).t()) + &self.bias(layer);
            if layer + 1 < n {
                z.mapv_inplace(|v| v.max(0.0));
            }
            x = z;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.predict(x)?.into_raw_vec_and_offset().0)
    }

    fn check_trace(&self, trace: &Trace, seed: &ArrayView2<'_, f64>) -> Result<()> {
        if trace.net_id != self.id || trace.generation != self.generation {
            return Err(Error::NoForwardPass);
        }
        if seed.dim() != (trace.batch_size(), self.output_size()) {
            return Err(Error::Shape {
                expected: trace.batch_size() * self.output_size(),
                got: seed.len(),
            });
        }
        Ok(())
    }

    /// Reverse pass: `seed` is dL/d(output) for every row of the traced batch.
    /// Parameter gradients are summed over the batch. `relu'(0)` is taken as 0.
    pub fn backward(&self, trace: &Trace, seed: ArrayView2<'_, f64>) -> Result<Gradients> {
        self.check_trace(trace, &seed)?;
        let mut grads = vec![0.0; self.params.len()];
        let input = self.backprop(trace, seed, Some(&mut grads));
        Ok(Gradients {
            params: grads,
            input,
        })
    }

    /// Reverse pass that only produces the input gradient.
    pub fn input_gradient(&self, trace: &Trace, seed: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_trace(trace, &seed)?;
        Ok(self.backprop(trace, seed, None))
    }

    fn backprop(
        &self,
        trace: &Trace,
        seed: ArrayView2<'_, f64>,
        mut grads: Option<&mut Vec<f64>>,
    ) -> Array2<f64> {
        let n = self.n_layers();
        let mut delta = seed.to_owned();
        for layer in (0..n).rev() {
            if layer + 1 < n {
                ndarray::Zip::from(&mut delta)
                    .and(&trace.pre[layer])
                    .for_each(|d, &z| {
                        if z <= 0.0 {
                            *d = 0.0
                        }
                    });
            }
            if let Some(g) = grads.as_deref_mut() {
                let (w, b) = self.layer_ranges(layer);
                let dw = delta.t().dot(&trace.activations[layer]);
                g[w].iter_mut().zip(dw.iter()).for_each(|(d, &v)| *d = v);
                let db: Array1<f64> = delta.sum_axis(Axis(0));
                g[b].copy_from_slice(db.as_slice().expect("contiguous"));
            }
            delta = delta.dot(&self.weights(layer));
        }
        delta
    }

    /// Target-network blend: `self <- lambda * online + (1 - lambda) * self`.
    pub fn blend_from(&mut self, online: &Mlp, lambda: f64) -> Result<()> {
        if self.sizes != online.sizes {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: online.params.len(),
            });
        }
        for (t, &o) in self.params_mut().iter_mut().zip(&online.params) {
            *t = lambda * o + (1.0 - lambda) * *t;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.params.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::json!({
            "kind": "mlp",
            "layer_sizes": self.sizes,
            "len": self.params.len(),
        });
        checkpoint::encode(&header, &self.params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, params) = checkpoint::decode(bytes)?;
        if header.get("kind").and_then(|k| k.as_str()) != Some("mlp") {
            return Err(Error::Checkpoint("not an mlp checkpoint".into()));
        }
        let sizes: Vec<usize> = serde_json::from_value(
            header
                .get("layer_sizes")
                .cloned()
                .ok_or_else(|| Error::Checkpoint("missing layer_sizes".into()))?,
        )?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Checkpoint(format!("bad layer sizes {sizes:?}")));
        }
        Mlp::from_params(&sizes, params)
    }

    /// Column `col` of a batch, e.g. the scalar output of a value network.
    pub fn column(batch: &Array2<f64>, col: usize) -> Vec<f64> {
        batch.slice(s![.., col]).to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Straightforward per-sample evaluation with nested loops.
    fn reference_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let sizes = net.sizes();
        let p = net.params();
        let mut offset = 0;
        let mut act = x.to_vec();
        for l in 0..sizes.len() - 1 {
            let (fi, fo) = (sizes[l], sizes[l + 1]);
            let mut next = vec![0.0; fo];
            for o in 0..fo {
                let mut z = p[offset + fi * fo + o];
                for i in 0..fi {
                    z += p[offset + o * fi + i] * act[i];
                }
                next[o] = if l + 2 < sizes.len() { z.max(0.0) } else { z };
            }
            offset += fi * fo + fo;
            act = next;
        }
        act
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_chain() {
        let net = Mlp::from_params(&[1, 1, 1], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn matches_reference_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let net = Mlp::new(&[4, 7, 6, 3], &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = net.forward(&x).unwrap();
            let want = reference_forward(&net, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[2, 3, 1]);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Shape { expected: 2, got: 1 })
        ));
        let trace = net.forward_trace(array![[1.0, 2.0]].view()).unwrap();
        assert!(net.backward(&trace, array![[1.0, 1.0]].view()).is_err());
    }

    #[test]
    fn linear_weight_gradient_is_input() {
        // y = w x, dy/dw = x.
        let net = Mlp::from_params(&[1, 1], vec![0.7, 0.0]).unwrap();
        let trace = net.forward_trace(array![[3.0]].view()).unwrap();
        let g = net.backward(&trace, array![[1.0]].view()).unwrap();
        assert_eq!(g.params, vec![3.0, 1.0]);
        assert_eq!(g.input, array![[0.7]]);
    }

    #[test]
    fn relu_at_zero_has_zero_slope() {
        // Hidden pre-activation is exactly 0: 1 * 0 + 0.
        let net = Mlp::from_params(&[1, 1, 1], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let trace = net.forward_trace(array![[0.0]].view()).unwrap();
        let g = net.backward(&trace, array![[1.0]].view()).unwrap();
        assert_eq!(g.input, array![[0.0]]);
        assert_eq!(g.params, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn stale_trace_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::new(&[2, 4, 1], &mut rng);
        let trace = net.forward_trace(array![[0.1, 0.2]].view()).unwrap();
        net.params_mut()[0] += 1.0;
        assert!(matches!(
            net.backward(&trace, array![[1.0]].view()),
            Err(Error::NoForwardPass)
        ));
        let other = net.clone();
        let trace = net.forward_trace(array![[0.1, 0.2]].view()).unwrap();
        assert!(matches!(
            other.backward(&trace, array![[1.0]].view()),
            Err(Error::NoForwardPass)
        ));
    }

    #[test]
    fn blend_rule() {
        let online = Mlp::from_params(&[1, 1], vec![1.0, 1.0]).unwrap();
        let mut target = Mlp::zeros(&[1, 1]);
        target.blend_from(&online, 0.01).unwrap();
        assert_eq!(target.params(), &[0.01, 0.01]);
        let mut copy = Mlp::zeros(&[1, 1]);
        copy.blend_from(&online, 1.0).unwrap();
        assert_eq!(copy.params(), online.params());
        let mut same = Mlp::zeros(&[1, 1]);
        same.blend_from(&online, 0.0).unwrap();
        assert_eq!(same.params(), &[0.0, 0.0]);
        assert!(Mlp::zeros(&[2, 1]).blend_from(&online, 0.5).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let net = Mlp::new(&[3, 10, 10, 2], &mut rng);
        let loaded = Mlp::from_bytes(&net.to_bytes()).unwrap();
        assert_eq!(loaded.sizes(), net.sizes());
        let x = [0.3, -1.1, 2.5];
        let a = net.forward(&x).unwrap();
        let b = loaded.forward(&x).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn block_names() {
        let net = Mlp::zeros(&[2, 3, 1]);
        assert_eq!(net.block_name(0), "layer 0 weights");
        assert_eq!(net.block_name(6), "layer 0 bias");
        assert_eq!(net.block_name(9), "layer 1 weights");
        assert_eq!(net.block_name(12), "layer 1 bias");
    }
}
