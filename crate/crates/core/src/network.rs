//! The anomaly scoring network.
//!
//! A feature learner of `H` dense ReLU layers followed by a single linear
//! output unit: `score(x) = w_o · q(x) + bias`, with `q` the last hidden
//! representation (or `x` itself when there are no hidden layers). In
//! representation mode the output unit is dropped and `q` is the output.
//!
//! Batches are row-major: one object per row, one feature per column. Hidden
//! kernels have shape `(fan_in, fan_out)` so a layer is `relu(X W + b)`.

use std::fmt;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{DevNetError, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    /// Output the last hidden representation instead of a scalar score.
    pub rep_mode: bool,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_sizes: Vec<usize>, rep_mode: bool) -> Result<Self> {
        let arch = Architecture {
            input_dim,
            hidden_sizes,
            rep_mode,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(DevNetError::InvalidConfig(
                "input_dim must be at least 1".into(),
            ));
        }
        if let Some(i) = self.hidden_sizes.iter().position(|&h| h == 0) {
            return Err(DevNetError::InvalidConfig(format!(
                "hidden layer {} has zero units",
                i + 1
            )));
        }
        if self.rep_mode && self.hidden_sizes.is_empty() {
            return Err(DevNetError::InvalidConfig(
                "representation mode needs at least one hidden layer".into(),
            ));
        }
        Ok(())
    }

    /// Width `M` of the representation fed to the output unit.
    pub fn representation_dim(&self) -> usize {
        self.hidden_sizes.last().copied().unwrap_or(self.input_dim)
    }

    /// Columns produced by [`Parameters::forward`]: 1, or `M` in representation mode.
    pub fn output_dim(&self) -> usize {
        if self.rep_mode {
            self.representation_dim()
        } else {
            1
        }
    }

    fn fan(&self, layer: usize) -> (usize, usize) {
        let fan_in = if layer == 0 {
            self.input_dim
        } else {
            self.hidden_sizes[layer - 1]
        };
        (fan_in, self.hidden_sizes[layer])
    }

    /// Multiply-adds for one row through the whole network.
    pub fn multiply_adds_per_row(&self) -> usize {
        let mut total = 0;
        let mut prev = self.input_dim;
        for &h in &self.hidden_sizes {
            total += prev * h;
            prev = h;
        }
        if !self.rep_mode {
            total += prev;
        }
        total
    }
}

/// Half-width of the uniform Glorot initialization range.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Kernel of shape `(fan_in, fan_out)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Identifies one tensor inside [`Parameters`]; used in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorId {
    HiddenWeights(usize),
    HiddenBias(usize),
    Output,
}

impl TensorId {
    pub fn is_hidden_kernel(self) -> bool {
        matches!(self, TensorId::HiddenWeights(_))
    }
}

impl fmt::Display for TensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorId::HiddenWeights(i) => write!(f, "hidden layer {} weights", i + 1),
            TensorId::HiddenBias(i) => write!(f, "hidden layer {} bias", i + 1),
            TensorId::Output => write!(f, "output unit"),
        }
    }
}

/// All trainable weights of the network.
///
/// `output` holds `w_o` followed by the output bias (length `M + 1`) and is
/// absent in representation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    arch: Architecture,
    hidden: Vec<DenseLayer>,
    output: Option<Array1<f64>>,
}

/// Gradients share the exact layout of the parameters they belong to.
pub type Gradients = Parameters;

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Array2<f64>,
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn rows(&self) -> usize {
        self.input.nrows()
    }

    /// Pre-activations of every hidden layer, for kink diagnostics.
    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }
}

impl Parameters {
    /// Uniform Glorot weights, zero biases; deterministic in `seed`.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed);
        let mut hidden = Vec::with_capacity(arch.hidden_sizes.len());
        for layer in 0..arch.hidden_sizes.len() {
            let (fan_in, fan_out) = arch.fan(layer);
            let weights = glorot_matrix(fan_in, fan_out, &mut rng);
            hidden.push(DenseLayer {
                weights,
                bias: Array1::zeros(fan_out),
            });
        }
        let output = (!arch.rep_mode).then(|| {
            let m = arch.representation_dim();
            let bound = glorot_bound(m, 1);
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            let mut w: Array1<f64> = (0..m).map(|_| dist.sample(&mut rng)).collect();
            w = ndarray::concatenate![Axis(0), w, Array1::zeros(1)];
            w
        });
        Ok(Parameters {
            arch: arch.clone(),
            hidden,
            output,
        })
    }

    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let hidden = (0..arch.hidden_sizes.len())
            .map(|layer| {
                let (fan_in, fan_out) = arch.fan(layer);
                DenseLayer {
                    weights: Array2::zeros((fan_in, fan_out)),
                    bias: Array1::zeros(fan_out),
                }
            })
            .collect();
        let output = (!arch.rep_mode).then(|| Array1::zeros(arch.representation_dim() + 1));
        Ok(Parameters {
            arch: arch.clone(),
            hidden,
            output,
        })
    }

    /// Assembles parameters from explicit tensors, checking every shape.
    pub fn from_parts(
        arch: Architecture,
        hidden: Vec<DenseLayer>,
        output: Option<Array1<f64>>,
    ) -> Result<Self> {
        let hidden = hidden
            .into_iter()
            .map(|l| DenseLayer {
                weights: l.weights.as_standard_layout().into_owned(),
                bias: l.bias.as_standard_layout().into_owned(),
            })
            .collect();
        let params = Parameters {
            arch,
            hidden,
            output: output.map(|w| w.as_standard_layout().into_owned()),
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks shapes against the architecture and that every entry is finite.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let reference = Parameters::zeros(&self.arch)?;
        self.check_layout(&reference)?;
        for (id, values) in self.tensors() {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(DevNetError::InvalidConfig(format!(
                    "{id} has non-finite entries"
                )));
            }
        }
        Ok(())
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn hidden(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn hidden_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.hidden
    }

    pub fn output(&self) -> Option<&Array1<f64>> {
        self.output.as_ref()
    }

    pub fn output_mut(&mut self) -> Option<&mut Array1<f64>> {
        self.output.as_mut()
    }

    /// Flat views of every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<(TensorId, &[f64])> {
        let mut out = Vec::with_capacity(2 * self.hidden.len() + 1);
        for (i, layer) in self.hidden.iter().enumerate() {
            out.push((
                TensorId::HiddenWeights(i),
                contiguous(layer.weights.as_slice()),
            ));
            out.push((TensorId::HiddenBias(i), contiguous(layer.bias.as_slice())));
        }
        if let Some(w) = &self.output {
            out.push((TensorId::Output, contiguous(w.as_slice())));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(TensorId, &mut [f64])> {
        let mut out = Vec::with_capacity(2 * self.hidden.len() + 1);
        for (i, layer) in self.hidden.iter_mut().enumerate() {
            out.push((
                TensorId::HiddenWeights(i),
                contiguous(layer.weights.as_slice_mut()),
            ));
            out.push((
                TensorId::HiddenBias(i),
                contiguous(layer.bias.as_slice_mut()),
            ));
        }
        if let Some(w) = &mut self.output {
            out.push((TensorId::Output, contiguous(w.as_slice_mut())));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Errors unless `other` has the identical tensor layout.
    pub fn check_layout(&self, other: &Parameters) -> Result<()> {
        if self.arch != other.arch {
            return Err(DevNetError::shape(
                "parameter layout",
                format!("{:?}", self.arch),
                format!("{:?}", other.arch),
            ));
        }
        let ours = self.tensors();
        let theirs = other.tensors();
        if ours.len() != theirs.len() {
            return Err(DevNetError::shape(
                "parameter layout",
                ours.len(),
                theirs.len(),
            ));
        }
        for ((id, a), (_, b)) in ours.iter().zip(&theirs) {
            if a.len() != b.len() {
                return Err(DevNetError::Shape {
                    context: "parameter layout",
                    expected: format!("{id} with {} entries", a.len()),
                    actual: b.len().to_string(),
                });
            }
        }
        for (a, b) in self.hidden.iter().zip(&other.hidden) {
            if a.weights.dim() != b.weights.dim() {
                return Err(DevNetError::shape(
                    "parameter layout",
                    format!("{:?}", a.weights.dim()),
                    format!("{:?}", b.weights.dim()),
                ));
            }
        }
        Ok(())
    }

    /// Runs a batch through the network, keeping activations for [`backward`].
    ///
    /// Returns an `(rows, output_dim)` matrix: one score per row, or the
    /// `M`-dimensional representation per row in representation mode.
    ///
    /// [`backward`]: Parameters::backward
    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(batch)?;
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let input = post.last().map(|a| a.view()).unwrap_or(batch);
            let z = input.dot(&layer.weights) + &layer.bias;
            let a = z.mapv(relu);
            pre.push(z);
            post.push(a);
        }
        let q = post.last().map(|a| a.view()).unwrap_or(batch);
        let out = match &self.output {
            Some(w) => output_unit(q, w),
            None => q.to_owned(),
        };
        Ok((
            out,
            ForwardCache {
                input: batch.to_owned(),
                pre,
                post,
            },
        ))
    }

    /// Forward pass without retaining a cache.
    pub fn outputs(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(batch)?;
        let mut current: Option<Array2<f64>> = None;
        for layer in &self.hidden {
            let input = current.as_ref().map(|a| a.view()).unwrap_or(batch);
            let mut z = input.dot(&layer.weights) + &layer.bias;
            z.mapv_inplace(relu);
            current = Some(z);
        }
        let q = current.as_ref().map(|a| a.view()).unwrap_or(batch);
        Ok(match &self.output {
            Some(w) => output_unit(q, w),
            None => q.to_owned(),
        })
    }

    /// Scalar anomaly scores for a batch.
    pub fn scores(&self, batch: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if self.arch.rep_mode {
            return Err(DevNetError::InvalidConfig(
                "representation-mode networks have no scalar output".into(),
            ));
        }
        Ok(self.outputs(batch)?.column(0).to_owned())
    }

    /// Score of a single row; identical to [`forward`](Parameters::forward) on a one-row batch.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, row.len()), row)
            .map_err(|_| DevNetError::shape("score row", self.arch.input_dim, row.len()))?;
        Ok(self.scores(view)?[0])
    }

    /// Gradient of `sum_ij dout[i, j] * output[i, j]` with respect to every parameter.
    ///
    /// The ReLU derivative at exactly zero is taken as zero.
    pub fn backward(&self, cache: &ForwardCache, dout: ArrayView2<'_, f64>) -> Result<Gradients> {
        let rows = cache.rows();
        let expected = (rows, self.arch.output_dim());
        if dout.dim() != expected {
            return Err(DevNetError::shape(
                "backward output gradient",
                format!("{expected:?}"),
                format!("{:?}", dout.dim()),
            ));
        }
        if cache.pre.len() != self.hidden.len() {
            return Err(DevNetError::shape(
                "forward cache layers",
                self.hidden.len(),
                cache.pre.len(),
            ));
        }
        for (layer, z) in self.hidden.iter().zip(&cache.pre) {
            if z.dim() != (rows, layer.bias.len()) {
                return Err(DevNetError::shape(
                    "forward cache activations",
                    format!("{:?}", (rows, layer.bias.len())),
                    format!("{:?}", z.dim()),
                ));
            }
        }

        let mut grads = Parameters::zeros(&self.arch)?;
        let q = cache.post.last().unwrap_or(&cache.input);

        // Gradient flowing into the representation q.
        let mut delta: Array2<f64> = match &self.output {
            Some(w) => {
                let m = w.len() - 1;
                let dscore = dout.column(0);
                let g = grads.output.as_mut().expect("output present");
                g.slice_mut(s![..m]).assign(&q.t().dot(&dscore));
                g[m] = dscore.sum();
                let w_head = w.slice(s![..m]);
                let mut d = Array2::zeros((rows, m));
                Zip::from(d.rows_mut())
                    .and(&dscore)
                    .for_each(|mut row, &ds| row.assign(&(&w_head * ds)));
                d
            }
            None => dout.to_owned(),
        };

        for i in (0..self.hidden.len()).rev() {
            Zip::from(&mut delta).and(&cache.pre[i]).for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            let input = if i == 0 {
                &cache.input
            } else {
                &cache.post[i - 1]
            };
            // assign keeps the row-major layout that `tensors` relies on
            grads.hidden[i].weights.assign(&input.t().dot(&delta));
            grads.hidden[i].bias.assign(&delta.sum_axis(Axis(0)));
            if i > 0 {
                delta = delta.dot(&self.hidden[i].weights.t());
            }
        }
        Ok(grads)
    }

    fn check_input(&self, batch: ArrayView2<'_, f64>) -> Result<()> {
        if batch.ncols() != self.arch.input_dim {
            return Err(DevNetError::shape(
                "input columns",
                self.arch.input_dim,
                batch.ncols(),
            ));
        }
        Ok(())
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn output_unit(q: ArrayView2<'_, f64>, w: &Array1<f64>) -> Array2<f64> {
    let m = w.len() - 1;
    let scores = q.dot(&w.slice(s![..m])) + w[m];
    scores.insert_axis(Axis(1))
}

fn glorot_matrix(fan_in: usize, fan_out: usize, rng: &mut seed::Rng) -> Array2<f64> {
    let bound = glorot_bound(fan_in, fan_out);
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array2::from_shape_simple_fn((fan_in, fan_out), || dist.sample(rng))
}

fn contiguous<T>(slice: Option<T>) -> T {
    slice.expect("parameter tensors are always in standard layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn one_one_one() -> Parameters {
        let arch = Architecture::new(1, vec![1], false).unwrap();
        Parameters::from_parts(
            arch,
            vec![DenseLayer {
                weights: array![[2.0]],
                bias: array![0.0],
            }],
            Some(array![3.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn glorot_bounds() {
        assert_eq!(glorot_bound(3, 3), 1.0);
        assert!((glorot_bound(21, 20) - 0.382_546_5).abs() < 1e-6);
    }

    #[test]
    fn init_shapes_and_ranges() {
        let arch = Architecture::new(21, vec![20], false).unwrap();
        let p = Parameters::init(&arch, 3).unwrap();
        assert_eq!(p.hidden()[0].weights.dim(), (21, 20));
        assert_eq!(p.output().unwrap().len(), 21);
        let b = glorot_bound(21, 20);
        assert!(p.hidden()[0].weights.iter().all(|w| w.abs() <= b));
        assert!(p.hidden()[0].bias.iter().all(|&v| v == 0.0));
        assert_eq!(p.output().unwrap()[20], 0.0);
        assert_eq!(p, Parameters::init(&arch, 3).unwrap());
        assert_ne!(p, Parameters::init(&arch, 4).unwrap());
    }

    #[test]
    fn architecture_invariants() {
        assert!(Architecture::new(0, vec![], false).is_err());
        assert!(Architecture::new(3, vec![4, 0], false).is_err());
        assert!(Architecture::new(3, vec![], true).is_err());
        let rep = Architecture::new(3, vec![5], true).unwrap();
        assert_eq!(rep.output_dim(), 5);
        let p = Parameters::init(&rep, 0).unwrap();
        assert!(p.output().is_none());
    }

    #[test]
    fn constant_network() {
        let arch = Architecture::new(4, vec![3], false).unwrap();
        let mut p = Parameters::zeros(&arch).unwrap();
        p.output_mut().unwrap()[3] = 0.7;
        let x = Array2::from_shape_fn((5, 4), |(i, j)| (i * j) as f64 - 2.0);
        let s = p.scores(x.view()).unwrap();
        assert!(s.iter().all(|&v| v == 0.7));
        p.output_mut().unwrap()[3] = 0.0;
        assert_eq!(p.score(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn relu_clamps_and_composes() {
        let p = one_one_one();
        assert_eq!(p.score(&[-1.0]).unwrap(), 1.0);
        assert_eq!(p.score(&[0.5]).unwrap(), 4.0);
    }

    #[test]
    fn hand_chain_rule() {
        let p = one_one_one();
        let x = array![[0.5]];
        let (_, cache) = p.forward(x.view()).unwrap();
        let g = p.backward(&cache, array![[1.0]].view()).unwrap();
        assert_eq!(g.output().unwrap()[0], 1.0);
        assert_eq!(g.output().unwrap()[1], 1.0);
        assert_eq!(g.hidden()[0].weights[[0, 0]], 1.5);
        assert_eq!(g.hidden()[0].bias[0], 3.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let arch = Architecture::new(3, vec![4, 2], false).unwrap();
        let p = Parameters::init(&arch, 1).unwrap();
        let x = Array2::from_shape_fn((6, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let (_, cache) = p.forward(x.view()).unwrap();
        let g = p.backward(&cache, Array2::zeros((6, 1)).view()).unwrap();
        assert!(g.tensors().iter().all(|(_, t)| t.iter().all(|&v| v == 0.0)));
        g.check_layout(&p).unwrap();
    }

    #[test]
    fn shape_errors() {
        let p = one_one_one();
        assert!(p.forward(Array2::zeros((2, 3)).view()).is_err());
        assert!(p.score(&[1.0, 2.0]).is_err());
        let (_, cache) = p.forward(Array2::zeros((2, 1)).view()).unwrap();
        assert!(p.backward(&cache, Array2::zeros((3, 1)).view()).is_err());
        let other = Parameters::init(&Architecture::new(1, vec![2], false).unwrap(), 0).unwrap();
        assert!(other
            .backward(&cache, Array2::zeros((2, 1)).view())
            .is_err());
    }

    #[test]
    fn linear_variant_is_affine() {
        let arch = Architecture::new(2, vec![], false).unwrap();
        let p = Parameters::from_parts(arch, vec![], Some(array![1.5, -2.0, 0.25])).unwrap();
        assert_eq!(p.score(&[2.0, 1.0]).unwrap(), 1.25);
        let (_, cache) = p.forward(array![[2.0, 1.0]].view()).unwrap();
        let g = p.backward(&cache, array![[1.0]].view()).unwrap();
        assert_eq!(g.output().unwrap().to_vec(), vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn from_parts_accepts_column_major_arrays() {
        let arch = Architecture::new(2, vec![3], false).unwrap();
        let w = Array2::from_shape_fn((3, 2), |(i, j)| (i + 2 * j) as f64).reversed_axes();
        let layer = DenseLayer {
            weights: w.clone(),
            bias: Array1::zeros(3),
        };
        let p = Parameters::from_parts(arch, vec![layer], Some(Array1::zeros(4))).unwrap();
        assert_eq!(p.hidden()[0].weights, w);
        assert_eq!(p.parameter_count(), 6 + 3 + 4);
    }

    #[test]
    fn rejects_non_finite_parts() {
        let arch = Architecture::new(1, vec![], false).unwrap();
        assert!(Parameters::from_parts(arch.clone(), vec![], Some(array![f64::NAN, 0.0])).is_err());
        assert!(Parameters::from_parts(arch, vec![], Some(array![1.0])).is_err());
    }
}
