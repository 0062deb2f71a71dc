//! Wavelet neural network for node classification.
//!
//! A layer filters every input channel diagonally in the wavelet domain and
//! maps back: `out_j = σ(Wᵀ Σ_i g_ij ∘ (W f_i))`, with `W` the basis whose
//! rows are wavelets. Hidden layers use ReLU and the top layer a row-wise
//! softmax. Gradients are hand-derived and training is full-batch Adam.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{fmt_real, write_file};
use crate::matcore::SymMatrix;
use crate::wavelets::{BasisMode, WaveletBasis};

const PROB_FLOOR: f64 = 1e-12;

/// Filters of one layer: `filters[i * out + j]` is the diagonal `g_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnnLayer {
    pub in_features: usize,
    pub out_features: usize,
    pub filters: Vec<Vec<f64>>,
}

impl WnnLayer {
    /// All-ones filters plus uniform `±0.01` noise.
    pub fn near_identity(
        n: usize,
        in_features: usize,
        out_features: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let filters = (0..in_features * out_features)
            .map(|_| {
                (0..n)
                    .map(|_| 1.0 + rng.random_range(-0.01..0.01))
                    .collect()
            })
            .collect();
        WnnLayer {
            in_features,
            out_features,
            filters,
        }
    }

    pub fn filled(n: usize, in_features: usize, out_features: usize, value: f64) -> Self {
        WnnLayer {
            in_features,
            out_features,
            filters: vec![vec![value; n]; in_features * out_features],
        }
    }

    pub fn filter(&self, i: usize, j: usize) -> &[f64] {
        &self.filters[i * self.out_features + j]
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.filters.len() != self.in_features * self.out_features
            || self.filters.iter().any(|g| g.len() != n)
        {
            return Err(Error::DimensionMismatch(format!(
                "layer {}->{} needs {} filters of length {n}",
                self.in_features,
                self.out_features,
                self.in_features * self.out_features
            )));
        }
        if self.filters.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("filters must be finite".into()));
        }
        Ok(())
    }
}

/// Pre-activation of one layer plus the spectral inputs kept for backward.
struct LayerPass {
    /// `W f_i` as columns.
    spectral_in: DMatrix<f64>,
    pre: DMatrix<f64>,
}

fn layer_pass(layer: &WnnLayer, basis: &DMatrix<f64>, f_in: &DMatrix<f64>) -> LayerPass {
    let n = basis.nrows();
    let spectral_in = basis * f_in;
    let mut acc = DMatrix::zeros(n, layer.out_features);
    for i in 0..layer.in_features {
        for j in 0..layer.out_features {
            let g = layer.filter(i, j);
            for v in 0..n {
                acc[(v, j)] += g[v] * spectral_in[(v, i)];
            }
        }
    }
    LayerPass {
        spectral_in,
        pre: basis.tr_mul(&acc),
    }
}

/// `Wᵀ Σ_i g_ij ∘ (W f_i)` for every output channel, followed by ReLU when
/// `relu` is set.
pub fn layer_forward(
    layer: &WnnLayer,
    basis: &WaveletBasis,
    f_in: &DMatrix<f64>,
    relu: bool,
) -> Result<DMatrix<f64>> {
    layer.validate(basis.n())?;
    if f_in.shape() != (basis.n(), layer.in_features) {
        return Err(Error::DimensionMismatch(format!(
            "layer expects {}x{} input, got {:?}",
            basis.n(),
            layer.in_features,
            f_in.shape()
        )));
    }
    let pre = layer_pass(layer, basis.rows(), f_in).pre;
    Ok(if relu { pre.map(|v| v.max(0.0)) } else { pre })
}

fn softmax_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let total = row.sum();
        row /= total;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct WnnModel {
    basis: WaveletBasis,
    layers: Vec<WnnLayer>,
}

impl WnnModel {
    pub fn new(basis: WaveletBasis, layers: Vec<WnnLayer>) -> Result<Self> {
        if basis.mode() != BasisMode::Orthonormal {
            return Err(Error::UnsupportedMode(
                "the network needs an orthonormal basis".into(),
            ));
        }
        if layers.is_empty() {
            return Err(Error::InvalidArgument(
                "model needs at least one layer".into(),
            ));
        }
        for pair in layers.windows(2) {
            if pair[0].out_features != pair[1].in_features {
                return Err(Error::DimensionMismatch(
                    "consecutive layer widths differ".into(),
                ));
            }
        }
        for l in &layers {
            l.validate(basis.n())?;
        }
        Ok(WnnModel { basis, layers })
    }

    /// Near-identity filters for widths `dims[0] → dims[1] → ⋯`.
    pub fn initialized(basis: WaveletBasis, dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let n = basis.n();
        let layers = dims
            .windows(2)
            .map(|w| WnnLayer::near_identity(n, w[0], w[1], rng))
            .collect();
        WnnModel::new(basis, layers)
    }

    pub fn layers(&self) -> &[WnnLayer] {
        &self.layers
    }

    pub fn basis(&self) -> &WaveletBasis {
        &self.basis
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().unwrap().out_features
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.filters.len() * self.basis.n())
            .sum()
    }

    fn check_input(&self, f0: &DMatrix<f64>) -> Result<()> {
        let want = (self.basis.n(), self.layers[0].in_features);
        if f0.shape() != want {
            return Err(Error::DimensionMismatch(format!(
                "input is {:?}, expected {want:?}",
                f0.shape()
            )));
        }
        Ok(())
    }

    fn passes(&self, f0: &DMatrix<f64>) -> (Vec<LayerPass>, DMatrix<f64>) {
        let mut passes = Vec::with_capacity(self.layers.len());
        let mut f = f0.clone();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let pass = layer_pass(layer, self.basis.rows(), &f);
            f = if k == last {
                softmax_rows(&pass.pre)
            } else {
                pass.pre.map(|v| v.max(0.0))
            };
            passes.push(pass);
        }
        (passes, f)
    }

    /// Class probabilities, one row per node.
    pub fn forward(&self, f0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(f0)?;
        Ok(self.passes(f0).1)
    }

    /// Gradient of [`loss`] with respect to every filter, shaped like the
    /// layers.
    pub fn backward(
        &self,
        f0: &DMatrix<f64>,
        labels: &[usize],
        labeled: &[usize],
    ) -> Result<Vec<WnnLayer>> {
        self.check_input(f0)?;
        check_labels(labels, labeled, self.basis.n(), self.num_classes())?;
        let (passes, probs) = self.passes(f0);
        let basis = self.basis.rows();
        let n = basis.nrows();

        // softmax + cross-entropy; clipped terms are constant
        let mut d_pre = DMatrix::zeros(n, self.num_classes());
        for &v in labeled {
            if probs[(v, labels[v])] > PROB_FLOOR {
                for c in 0..self.num_classes() {
                    d_pre[(v, c)] += probs[(v, c)] - if c == labels[v] { 1.0 } else { 0.0 };
                }
            }
        }

        let mut grads: Vec<WnnLayer> = self
            .layers
            .iter()
            .map(|l| WnnLayer::filled(n, l.in_features, l.out_features, 0.0))
            .collect();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let spectral = &passes[k].spectral_in;
            let d_acc = basis * &d_pre;
            let mut d_spectral = DMatrix::zeros(n, layer.in_features);
            for i in 0..layer.in_features {
                for j in 0..layer.out_features {
                    let g = layer.filter(i, j);
                    let dg = &mut grads[k].filters[i * layer.out_features + j];
                    for v in 0..n {
                        dg[v] = d_acc[(v, j)] * spectral[(v, i)];
                        d_spectral[(v, i)] += g[v] * d_acc[(v, j)];
                    }
                }
            }
            if k > 0 {
                let d_out = basis.tr_mul(&d_spectral);
                d_pre = d_out.zip_map(&passes[k - 1].pre, |d, z| if z > 0.0 { d } else { 0.0 });
            }
        }
        Ok(grads)
    }

    fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.filters.iter().flatten().copied())
            .collect()
    }

    fn set_params(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for l in &mut self.layers {
            for g in &mut l.filters {
                for v in g.iter_mut() {
                    *v = *it.next().expect("parameter count matches");
                }
            }
        }
    }
}

fn check_labels(labels: &[usize], labeled: &[usize], n: usize, classes: usize) -> Result<()> {
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("no labeled nodes".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    for &v in labeled {
        if v >= n {
            return Err(Error::InvalidIndex { index: v, dim: n });
        }
        if labels[v] >= classes {
            return Err(Error::InvalidArgument(format!(
                "node {v} has class {} of {classes}",
                labels[v]
            )));
        }
    }
    Ok(())
}

/// `−Σ_{v ∈ labeled} ln max(p_{v, y_v}, 1e-12)`.
pub fn loss(probs: &DMatrix<f64>, labels: &[usize], labeled: &[usize]) -> Result<f64> {
    check_labels(labels, labeled, probs.nrows(), probs.ncols())?;
    Ok(labeled
        .iter()
        .map(|&v| -probs[(v, labels[v])].max(PROB_FLOOR).ln())
        .sum())
}

/// Fraction of `nodes` whose most probable class is their label (lowest
/// class wins ties).
pub fn accuracy(probs: &DMatrix<f64>, labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let hits = nodes
        .iter()
        .filter(|&&v| {
            let row = probs.row(v);
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best == labels[v]
        })
        .count();
    hits as f64 / nodes.len() as f64
}

/// Label-free node features for graphs without attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NodeFeatures {
    /// One-hot node indicators.
    Identity,
    /// Columns of `((2I − L̃)/2)^steps`, a lazy random walk of `steps` hops
    /// on the normalized Laplacian `L̃`.
    #[default]
    Diffusion,
}

pub const DEFAULT_DIFFUSION_STEPS: usize = 4;

/// `n × n` feature matrix for the normalized Laplacian `laplacian`.
pub fn node_features(laplacian: &SymMatrix, kind: NodeFeatures, steps: usize) -> DMatrix<f64> {
    let n = laplacian.dim();
    match kind {
        NodeFeatures::Identity => DMatrix::identity(n, n),
        NodeFeatures::Diffusion => {
            let walk = (DMatrix::identity(n, n) * 2.0 - laplacian.as_matrix()) * 0.5;
            let mut x = DMatrix::identity(n, n);
            for _ in 0..steps {
                x = &walk * x;
            }
            x
        }
    }
}

impl Split {
    /// `train` as given, every other node in `test`.
    pub fn complement(n: usize, train: Vec<usize>) -> Result<Split> {
        if train.is_empty() || train.iter().any(|&v| v >= n) {
            return Err(Error::InvalidArgument(format!(
                "training nodes must be a nonempty subset of 0..{n}"
            )));
        }
        let test = (0..n).filter(|v| !train.contains(v)).collect();
        Ok(Split { train, test })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

/// Full-batch Adam on the training nodes; records the training loss before
/// each update and the test accuracy after it.
pub fn train(
    model: &WnnModel,
    f0: &DMatrix<f64>,
    labels: &[usize],
    split: &Split,
    epochs: usize,
    adam: &AdamConfig,
) -> Result<(WnnModel, Vec<EpochRecord>)> {
    let mut model = model.clone();
    let mut theta = model.params();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let probs = model.forward(f0)?;
        let l = loss(&probs, labels, &split.train)?;
        if !l.is_finite() {
            return Err(Error::TrainingDivergence(format!(
                "loss became {l} at epoch {epoch}"
            )));
        }
        let grads: Vec<f64> = model
            .backward(f0, labels, &split.train)?
            .iter()
            .flat_map(|layer| layer.filters.iter().flatten().copied().collect::<Vec<_>>())
            .collect();
        let t = (epoch + 1) as i32;
        let (c1, c2) = (1.0 - adam.beta1.powi(t), 1.0 - adam.beta2.powi(t));
        for p in 0..theta.len() {
            m[p] = adam.beta1 * m[p] + (1.0 - adam.beta1) * grads[p];
            v[p] = adam.beta2 * v[p] + (1.0 - adam.beta2) * grads[p] * grads[p];
            theta[p] -= adam.lr * (m[p] / c1) / ((v[p] / c2).sqrt() + adam.eps);
        }
        model.set_params(&theta);
        let acc = accuracy(&model.forward(f0)?, labels, &split.test);
        trace.push(EpochRecord {
            epoch,
            loss: l,
            accuracy: acc,
        });
    }
    Ok((model, trace))
}

pub fn metrics_csv(trace: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,loss,accuracy\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.epoch,
            fmt_real(r.loss),
            fmt_real(r.accuracy)
        );
    }
    out
}

pub fn write_metrics_csv(trace: &[EpochRecord], path: &Path) -> Result<()> {
    write_file(path, &metrics_csv(trace))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsRecord {
    format: String,
    version: u32,
    n: usize,
    layers: Vec<WnnLayer>,
}

const WEIGHTS_TAG: &str = "learnable-mmf/wnn";

pub fn weights_to_json(model: &WnnModel) -> String {
    let record = WeightsRecord {
        format: WEIGHTS_TAG.into(),
        version: 1,
        n: model.basis.n(),
        layers: model.layers.clone(),
    };
    serde_json::to_string(&record).expect("weights serialize")
}

/// Rebuilds a model from saved weights and the basis it was trained on.
pub fn weights_from_json(text: &str, basis: WaveletBasis) -> Result<WnnModel> {
    let record: WeightsRecord =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if record.format != WEIGHTS_TAG || record.version != 1 || record.n != basis.n() {
        return Err(Error::Schema(
            "weights do not match this format or basis".into(),
        ));
    }
    WnnModel::new(basis, record.layers).map_err(|e| Error::Schema(e.to_string()))
}

pub fn save_weights(model: &WnnModel, path: &Path) -> Result<()> {
    write_file(path, &weights_to_json(model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::testutil::{random_sym, rng};
    use crate::mmf::testutil::random_factorization;
    use crate::wavelets::extract_basis;

    fn random_basis(n: usize, r: &mut impl Rng) -> WaveletBasis {
        let a = random_sym(n, r);
        let f = random_factorization(&a, n / 2, 3, r);
        extract_basis(&a, &f, BasisMode::Orthonormal).unwrap()
    }

    fn identity_basis(n: usize) -> WaveletBasis {
        let a = crate::matcore::SymMatrix::from_diagonal(&vec![1.0; n]);
        let plans = vec![crate::mmf::LevelPlan::new(
            crate::matcore::IndexSet::new(vec![0, 1], n).unwrap(),
            crate::matcore::IndexSet::singleton(0, n).unwrap(),
        )
        .unwrap()];
        let f =
            crate::mmf::Factorization::from_cores(&a, 2, 1, &plans, vec![DMatrix::identity(2, 2)])
                .unwrap();
        extract_basis(&a, &f, BasisMode::Orthonormal).unwrap()
    }

    #[test]
    fn identity_basis_and_filters_reduce_to_activation() {
        let basis = identity_basis(5);
        // rows are a permutation of the identity; W Wᵀ = I so unit filters pass signals through
        let layer = WnnLayer::filled(5, 1, 1, 1.0);
        let x = DMatrix::from_column_slice(5, 1, &[1.0, -2.0, 3.0, -0.5, 0.0]);
        assert_eq!(
            layer_forward(&layer, &basis, &x, true).unwrap(),
            x.map(|v| v.max(0.0))
        );
        let zero = WnnLayer::filled(5, 1, 1, 0.0);
        assert_eq!(layer_forward(&zero, &basis, &x, true).unwrap().amax(), 0.0);
    }

    #[test]
    fn layer_matches_dense_oracle() {
        let mut r = rng(1);
        let basis = random_basis(8, &mut r);
        let layer = WnnLayer::near_identity(8, 3, 2, &mut r);
        let layer = WnnLayer {
            filters: layer
                .filters
                .iter()
                .map(|g| g.iter().map(|v| v * r.random_range(-1.0..1.0)).collect())
                .collect(),
            ..layer
        };
        let x = DMatrix::from_fn(8, 3, |_, _| r.random_range(-1.0..1.0));
        let out = layer_forward(&layer, &basis, &x, false).unwrap();
        let w = basis.rows().transpose();
        for j in 0..2 {
            let mut col = DMatrix::zeros(8, 1);
            for i in 0..3 {
                let g = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
                    layer.filter(i, j),
                ));
                col += &w * g * w.transpose() * x.column(i);
            }
            assert!((out.column(j) - col).amax() < 1e-10);
        }
    }

    #[test]
    fn outputs_lie_on_simplex() {
        let mut r = rng(2);
        let basis = random_basis(9, &mut r);
        let model = WnnModel::initialized(basis, &[4, 6, 3], &mut r).unwrap();
        let x = DMatrix::from_fn(9, 4, |_, _| r.random_range(-2.0..2.0));
        let p = model.forward(&x).unwrap();
        for row in p.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12 && row.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(model.forward(&x).unwrap(), p);

        let uniform =
            WnnModel::new(identity_basis(4), vec![WnnLayer::filled(4, 1, 3, 0.0)]).unwrap();
        let p = uniform.forward(&DMatrix::from_element(4, 1, 1.0)).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn loss_examples() {
        let uniform = DMatrix::from_element(6, 2, 0.5);
        let labels = [0, 1, 0, 1, 0, 1];
        assert!((loss(&uniform, &labels, &[0, 1, 2, 3]).unwrap() - 4.0 * 2f64.ln()).abs() < 1e-12);
        let perfect = DMatrix::from_fn(6, 2, |v, c| if c == labels[v] { 1.0 } else { 0.0 });
        assert_eq!(loss(&perfect, &labels, &[0, 1]).unwrap(), 0.0);
        let wrong = DMatrix::from_fn(6, 2, |v, c| if c == labels[v] { 0.0 } else { 1.0 });
        assert!((loss(&wrong, &labels, &[0]).unwrap() + PROB_FLOOR.ln()).abs() < 1e-9);
        assert!(loss(&uniform, &labels, &[]).is_err());
    }

    fn fd_check(model: &WnnModel, x: &DMatrix<f64>, labels: &[usize], labeled: &[usize]) -> f64 {
        let analytic: Vec<f64> = model
            .backward(x, labels, labeled)
            .unwrap()
            .iter()
            .flat_map(|l| l.filters.iter().flatten().copied().collect::<Vec<_>>())
            .collect();
        let theta = model.params();
        let h = 1e-5;
        let mut worst = 0.0f64;
        let mut scale = 1e-8f64;
        let mut probe = model.clone();
        for p in 0..theta.len() {
            let mut t = theta.clone();
            t[p] += h;
            probe.set_params(&t);
            let up = loss(&probe.forward(x).unwrap(), labels, labeled).unwrap();
            t[p] -= 2.0 * h;
            probe.set_params(&t);
            let down = loss(&probe.forward(x).unwrap(), labels, labeled).unwrap();
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - analytic[p]).abs());
            scale = scale.max(fd.abs());
        }
        worst / scale
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut r = rng(3);
        for _ in 0..20 {
            let n = r.random_range(5..=12);
            let basis = random_basis(n, &mut r);
            let mut model = WnnModel::initialized(basis, &[3, 4, 2], &mut r).unwrap();
            let noisy: Vec<f64> = model
                .params()
                .iter()
                .map(|v| v * r.random_range(-1.0..1.0))
                .collect();
            model.set_params(&noisy);
            let x = DMatrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
            let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..2)).collect();
            let labeled: Vec<usize> = (0..n).filter(|_| r.random_bool(0.5)).chain([0]).collect();
            assert!(fd_check(&model, &x, &labels, &labeled) < 1e-4);
        }
    }

    #[test]
    fn unlabeled_nodes_do_not_contribute() {
        let mut r = rng(4);
        let basis = random_basis(6, &mut r);
        let model = WnnModel::initialized(basis, &[2, 2], &mut r).unwrap();
        let x = DMatrix::from_fn(6, 2, |_, _| r.random_range(-1.0..1.0));
        let labels = vec![0, 1, 0, 1, 0, 1];
        let mut flipped = labels.clone();
        flipped[5] = 0;
        assert_eq!(
            model.backward(&x, &labels, &[0, 1]).unwrap(),
            model.backward(&x, &flipped, &[0, 1]).unwrap()
        );
    }

    #[test]
    fn saturated_predictions_have_small_gradients() {
        let basis = identity_basis(4);
        let mut layer = WnnLayer::filled(4, 2, 2, 0.0);
        // logits ±40 on the true class through identity filters
        layer.filters[0] = vec![40.0; 4];
        layer.filters[3] = vec![40.0; 4];
        let model = WnnModel::new(basis, vec![layer]).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let grads = model.backward(&x, &[0, 1, 0, 1], &[0, 1, 2, 3]).unwrap();
        assert!(grads
            .iter()
            .flat_map(|l| l.filters.iter().flatten())
            .all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn zero_learning_rate_keeps_model() {
        let mut r = rng(5);
        let basis = random_basis(6, &mut r);
        let model = WnnModel::initialized(basis, &[2, 2], &mut r).unwrap();
        let x = DMatrix::from_fn(6, 2, |_, _| r.random_range(-1.0..1.0));
        let split = Split {
            train: vec![0, 1],
            test: vec![2, 3, 4, 5],
        };
        let labels = [0, 1, 0, 1, 0, 1];
        let (same, trace) = train(
            &model,
            &x,
            &labels,
            &split,
            5,
            &AdamConfig {
                lr: 0.0,
                ..AdamConfig::default()
            },
        )
        .unwrap();
        assert_eq!(same, model);
        assert_eq!(trace.len(), 5);
        let (a, t1) = train(&model, &x, &labels, &split, 5, &AdamConfig::default()).unwrap();
        let (b, t2) = train(&model, &x, &labels, &split, 5, &AdamConfig::default()).unwrap();
        assert_eq!((a, t1), (b, t2));
    }

    #[test]
    fn weights_round_trip() {
        let mut r = rng(6);
        let basis = random_basis(5, &mut r);
        let model = WnnModel::initialized(basis.clone(), &[2, 3, 2], &mut r).unwrap();
        assert_eq!(
            weights_from_json(&weights_to_json(&model), basis.clone()).unwrap(),
            model
        );
        assert!(matches!(
            weights_from_json("[]", basis),
            Err(Error::Schema(_))
        ));
    }
}
