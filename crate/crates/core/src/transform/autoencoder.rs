//! Four-layer fully connected autoencoder trained with mini-batch SGD.
//!
//! Layer widths are `N_feat → E1 → E2 → D1 → N_feat`. The first layer of the
//! encoder and of the decoder uses ReLU, the second LeakyReLU. The latent
//! representation is the output of `E2`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::persist::ModelDoc;
use crate::util::{check_dim, rng, row_width};
use crate::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    z
                } else {
                    s * z
                }
            }
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(s) => {
                if z > 0.0 {
                    1.0
                } else {
                    s
                }
            }
        }
    }
}

/// Dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn glorot(inputs: usize, outputs: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.random_range(-limit..=limit))
                .collect(),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Returns (pre-activation, activation).
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        let a = z.iter().map(|&v| self.activation.apply(v)).collect();
        (z, a)
    }

    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeVariant {
    /// Latent narrower than the input.
    Undercomplete,
    /// Latent wider than the input.
    Overcomplete,
}

impl AeVariant {
    pub fn tag(self) -> &'static str {
        match self {
            AeVariant::Undercomplete => "aer",
            AeVariant::Overcomplete => "aea",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AeArch {
    pub n_e1: usize,
    pub n_e2: usize,
    pub n_d1: usize,
}

impl AeArch {
    /// Architecture with a mirrored decoder (`D1 = E1`).
    pub fn symmetric(n_e1: usize, n_e2: usize) -> Self {
        Self {
            n_e1,
            n_e2,
            n_d1: n_e1,
        }
    }

    pub fn validate(&self, n_feat: usize, variant: AeVariant) -> Result<()> {
        let AeArch { n_e1, n_e2, n_d1 } = *self;
        let ok = match variant {
            AeVariant::Undercomplete => {
                n_e2 < n_e1 && n_e1 < n_feat && n_e2 < n_d1 && n_d1 < n_feat
            }
            AeVariant::Overcomplete => n_feat < n_e1 && n_e1 < n_e2 && n_feat < n_d1 && n_d1 < n_e2,
        };
        if !ok || n_e2 == 0 {
            let rule = match variant {
                AeVariant::Undercomplete => "E2 < E1 < N_feat and E2 < D1 < N_feat",
                AeVariant::Overcomplete => "N_feat < E1 < E2 and N_feat < D1 < E2",
            };
            return Err(Error::invalid(format!(
                "{} architecture {n_feat}-{n_e1}-{n_e2}-{n_d1} violates {rule}",
                variant.tag()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.03,
            batch_size: 64,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub variant: AeVariant,
    /// Encoder E1, E2 then decoder D1, output.
    pub layers: Vec<Layer>,
    pub train: TrainConfig,
    pub initial_loss: f64,
    pub final_loss: f64,
}

struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl AeModel {
    /// Freshly initialized, untrained network.
    pub fn init(n_feat: usize, variant: AeVariant, arch: AeArch, seed: u64) -> Result<Self> {
        arch.validate(n_feat, variant)?;
        let mut rng = rng(seed);
        let relu = Activation::Relu;
        let leaky = Activation::LeakyRelu(LEAKY_SLOPE);
        let layers = vec![
            Layer::glorot(n_feat, arch.n_e1, relu, &mut rng),
            Layer::glorot(arch.n_e1, arch.n_e2, leaky, &mut rng),
            Layer::glorot(arch.n_e2, arch.n_d1, relu, &mut rng),
            Layer::glorot(arch.n_d1, n_feat, leaky, &mut rng),
        ];
        Ok(Self {
            variant,
            layers,
            train: TrainConfig {
                seed,
                epochs: 0,
                ..TrainConfig::default()
            },
            initial_loss: f64::NAN,
            final_loss: f64::NAN,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[1].outputs
    }

    pub fn arch(&self) -> AeArch {
        AeArch {
            n_e1: self.layers[0].outputs,
            n_e2: self.layers[1].outputs,
            n_d1: self.layers[2].outputs,
        }
    }

    /// Latent code: output of the second encoder layer.
    pub fn encode(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), v.len())?;
        let h = self.layers[0].forward(v).1;
        Ok(self.layers[1].forward(&h).1)
    }

    pub fn reconstruct(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), v.len())?;
        Ok(self.layers.iter().fold(v.to_vec(), |x, l| l.forward(&x).1))
    }

    fn forward_trace(&self, v: &[f64]) -> (Vec<f64>, Trace) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = v.to_vec();
        for l in &self.layers {
            let (z, a) = l.forward(&x);
            inputs.push(x);
            pre.push(z);
            x = a;
        }
        (x, Trace { inputs, pre })
    }

    /// Mean squared reconstruction error over all entries of `rows`.
    pub fn loss(&self, rows: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for r in rows {
            let out = self.layers.iter().fold(r.clone(), |x, l| l.forward(&x).1);
            total += out
                .iter()
                .zip(r)
                .map(|(o, x)| (o - x) * (o - x))
                .sum::<f64>();
        }
        total / (rows.len() * self.input_dim()) as f64
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if i < l.weights.len() {
                return (li, true, i);
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return (li, false, i);
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter `i` in flat order: per layer, weights then biases.
    pub fn param(&self, i: usize) -> f64 {
        let (l, w, j) = self.locate(i);
        if w {
            self.layers[l].weights[j]
        } else {
            self.layers[l].bias[j]
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        let (l, w, j) = self.locate(i);
        if w {
            self.layers[l].weights[j] = v;
        } else {
            self.layers[l].bias[j] = v;
        }
    }

    /// Loss and its gradient over `batch`, flattened in [`param`](Self::param) order.
    pub fn gradient(&self, batch: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let scale = 1.0 / (batch.len() * self.input_dim()) as f64;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
            .collect();
        let mut loss = 0.0;
        for x in batch {
            let (out, trace) = self.forward_trace(x);
            let mut delta: Vec<f64> = out
                .iter()
                .zip(x)
                .map(|(o, t)| {
                    loss += (o - t) * (o - t);
                    2.0 * (o - t) * scale
                })
                .collect();
            for (li, l) in self.layers.iter().enumerate().rev() {
                for (d, z) in delta.iter_mut().zip(&trace.pre[li]) {
                    *d *= l.activation.derivative(*z);
                }
                let input = &trace.inputs[li];
                let (gw, gb) = &mut grads[li];
                for (o, d) in delta.iter().enumerate() {
                    gb[o] += d;
                    if *d != 0.0 {
                        let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                        for (g, v) in row.iter_mut().zip(input) {
                            *g += d * v;
                        }
                    }
                }
                if li > 0 {
                    let mut back = vec![0.0; l.inputs];
                    for (o, d) in delta.iter().enumerate() {
                        if *d != 0.0 {
                            let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                            for (b, w) in back.iter_mut().zip(row) {
                                *b += d * w;
                            }
                        }
                    }
                    delta = back;
                }
            }
        }
        let flat = grads
            .into_iter()
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        (loss * scale, flat)
    }

    fn step(&mut self, grad: &[f64], lr: f64) {
        let mut it = grad.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w -= lr * it.next().expect("gradient length matches parameters");
            }
        }
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("autoencoder");
        doc.text("variant", self.variant.tag())
            .scalar("lr", self.train.lr)
            .scalar("batch_size", self.train.batch_size as f64)
            .scalar("epochs", self.train.epochs as f64)
            .scalar("seed", self.train.seed as f64)
            .scalar("initial_loss", self.initial_loss)
            .scalar("final_loss", self.final_loss);
        for (i, l) in self.layers.iter().enumerate() {
            doc.block(&format!("w{i}"), l.outputs, l.inputs, l.weights.clone())
                .vector(&format!("b{i}"), &l.bias);
        }
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("autoencoder")?;
        let variant = match doc.get_text("variant")? {
            "aer" => AeVariant::Undercomplete,
            "aea" => AeVariant::Overcomplete,
            v => {
                return Err(Error::parse(
                    0,
                    format!("unknown autoencoder variant '{v}'"),
                ))
            }
        };
        let acts = [
            Activation::Relu,
            Activation::LeakyRelu(LEAKY_SLOPE),
            Activation::Relu,
            Activation::LeakyRelu(LEAKY_SLOPE),
        ];
        let mut layers = Vec::with_capacity(4);
        for (i, act) in acts.into_iter().enumerate() {
            let (outputs, inputs, w) = doc.get_block(&format!("w{i}"))?;
            let bias = doc.get_vector(&format!("b{i}"))?;
            if bias.len() != outputs {
                return Err(Error::parse(0, format!("layer {i}: bias length mismatch")));
            }
            layers.push(Layer {
                inputs,
                outputs,
                weights: w.to_vec(),
                bias,
                activation: act,
            });
        }
        if layers.windows(2).any(|p| p[0].outputs != p[1].inputs)
            || layers[3].outputs != layers[0].inputs
        {
            return Err(Error::parse(0, "autoencoder layers do not chain"));
        }
        Ok(Self {
            variant,
            layers,
            train: TrainConfig {
                lr: doc.get_scalar("lr")?,
                batch_size: doc.get_usize("batch_size")?,
                epochs: doc.get_usize("epochs")?,
                seed: doc.get_scalar("seed")? as u64,
            },
            initial_loss: doc.get_scalar("initial_loss")?,
            final_loss: doc.get_scalar("final_loss")?,
        })
    }
}

/// Trains an autoencoder on `rows` by mini-batch SGD, reshuffling every epoch.
pub fn fit_autoencoder(
    rows: &[Vec<f64>],
    variant: AeVariant,
    arch: AeArch,
    cfg: TrainConfig,
) -> Result<AeModel> {
    let n_feat = row_width(rows)?;
    if !(cfg.lr > 0.0) || !cfg.lr.is_finite() {
        return Err(Error::invalid(format!(
            "learning rate {} must be positive",
            cfg.lr
        )));
    }
    if cfg.batch_size == 0 || cfg.batch_size > rows.len() {
        return Err(Error::invalid(format!(
            "batch size {} must be in 1..={}",
            cfg.batch_size,
            rows.len()
        )));
    }
    let mut model = AeModel::init(n_feat, variant, arch, cfg.seed)?;
    model.train = cfg;
    model.initial_loss = model.loss(rows);
    let mut rng = rng(cfg.seed ^ 0x005e_ed0f_5eed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut current = model.initial_loss;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| rows[i].clone()));
            let (_, g) = model.gradient(&batch);
            model.step(&g, cfg.lr);
        }
        current = model.loss(rows);
        if !current.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: current,
            });
        }
    }
    model.final_loss = current;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn toy(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn arch_rules() {
        let aer = AeArch::symmetric(61, 32);
        assert!(aer.validate(70, AeVariant::Undercomplete).is_ok());
        assert!(aer.validate(70, AeVariant::Overcomplete).is_err());
        let aea = AeArch::symmetric(80, 85);
        assert!(aea.validate(70, AeVariant::Overcomplete).is_ok());
        assert!(AeArch::symmetric(75, 70)
            .validate(70, AeVariant::Overcomplete)
            .is_err());
        assert!(AeArch::symmetric(20, 30)
            .validate(70, AeVariant::Undercomplete)
            .is_err());
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let rows = toy(20, 8, 1);
        let cfg = TrainConfig {
            lr: 0.05,
            batch_size: 4,
            epochs: 0,
            seed: 3,
        };
        let m = fit_autoencoder(
            &rows,
            AeVariant::Undercomplete,
            AeArch::symmetric(6, 3),
            cfg,
        )
        .unwrap();
        let init = AeModel::init(8, AeVariant::Undercomplete, AeArch::symmetric(6, 3), 3).unwrap();
        assert_eq!(m.layers, init.layers);
        assert_eq!(m.final_loss, m.initial_loss);
    }

    #[test]
    fn zero_network_gives_zero_latent() {
        let mut m =
            AeModel::init(8, AeVariant::Overcomplete, AeArch::symmetric(10, 12), 0).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let z = m.encode(&[1.0; 8]).unwrap();
        assert_eq!(z, vec![0.0; 12]);
    }

    #[test]
    fn activations_on_negative_inputs() {
        let mut m = AeModel::init(3, AeVariant::Undercomplete, AeArch::symmetric(2, 1), 0).unwrap();
        // layer 0 (ReLU) sees -1 everywhere, layer 1 (LeakyReLU) gets bias -2
        m.layers[0].weights.iter_mut().for_each(|w| *w = 0.0);
        m.layers[0].bias.iter_mut().for_each(|b| *b = -1.0);
        let (_, a0) = m.layers[0].forward(&[1.0, 2.0, 3.0]);
        assert!(a0.iter().all(|v| *v == 0.0));
        m.layers[1].bias = vec![-2.0];
        let z = m.encode(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(z, vec![-2.0 * LEAKY_SLOPE]);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let rows = toy(64, 10, 5);
        let cfg = TrainConfig {
            lr: 0.05,
            batch_size: 16,
            epochs: 50,
            seed: 9,
        };
        let a = fit_autoencoder(
            &rows,
            AeVariant::Undercomplete,
            AeArch::symmetric(8, 4),
            cfg,
        )
        .unwrap();
        let b = fit_autoencoder(
            &rows,
            AeVariant::Undercomplete,
            AeArch::symmetric(8, 4),
            cfg,
        )
        .unwrap();
        assert!(a.final_loss < a.initial_loss);
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_names_epoch() {
        let rows: Vec<Vec<f64>> = toy(16, 6, 2)
            .into_iter()
            .map(|r| r.iter().map(|x| x * 1e3).collect())
            .collect();
        let cfg = TrainConfig {
            lr: 1e3,
            batch_size: 4,
            epochs: 50,
            seed: 0,
        };
        match fit_autoencoder(
            &rows,
            AeVariant::Overcomplete,
            AeArch::symmetric(8, 10),
            cfg,
        ) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn doc_round_trip() {
        let m = AeModel::init(5, AeVariant::Overcomplete, AeArch::symmetric(6, 7), 4).unwrap();
        let back = AeModel::from_doc(&m.to_doc()).unwrap();
        assert_eq!(back.layers, m.layers);
    }
}
