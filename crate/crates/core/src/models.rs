//! Per-pulse classifiers: bidirectional LSTM, bidirectional GRU and a
//! dilated residual convolutional network.
//!
//! Every model maps a DTOA sequence of length `L` to logits of shape `[L, C]`.
//! Parameters live in a [`ParamSet`] so the same forward code serves both
//! training (parameters as tape leaves) and inference.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::cells::{gru_composed, lstm_composed};
use crate::autograd::{Graph, ParamSet, Tensor, Var};
use crate::error::{Error, Result};
use crate::simulator::rng_from_seed;

/// Recurrent hidden size of the desk preset BLSTM.
pub const DESK_HIDDEN: usize = 64;
/// Default multiplier applied to DTOA values before they enter a network.
pub const DEFAULT_INPUT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Blstm,
    Bgru,
    Dcn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Blstm => "BLSTM",
            ModelKind::Bgru => "BGRU",
            ModelKind::Dcn => "DCN",
        }
    }

    pub fn is_recurrent(self) -> bool {
        !matches!(self, ModelKind::Dcn)
    }

    fn gates(self) -> usize {
        match self {
            ModelKind::Blstm => 4,
            ModelKind::Bgru => 3,
            ModelKind::Dcn => 0,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blstm" => Ok(ModelKind::Blstm),
            "bgru" => Ok(ModelKind::Bgru),
            "dcn" => Ok(ModelKind::Dcn),
            _ => Err(Error::invalid(format!("unknown model kind `{s}`"))),
        }
    }
}

/// Named capacity presets. `Desk` is sized for single-core training; the
/// other two target fixed parameter budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "desk")]
    Desk,
    #[serde(rename = "611k")]
    P611k,
    #[serde(rename = "211k")]
    P211k,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "611k" => Ok(Preset::P611k),
            "211k" => Ok(Preset::P211k),
            _ => Err(Error::invalid(format!("unknown preset `{s}` (desk | 611k | 211k)"))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::P611k => "611k",
            Preset::P211k => "211k",
        }
    }

    /// Parameter budget for a model with `num_classes` outputs. The desk
    /// budget is whatever a [`DESK_HIDDEN`] BLSTM costs, so all three kinds
    /// are compared at equal size.
    pub fn budget(self, num_classes: usize) -> usize {
        match self {
            Preset::Desk => recurrent_count(4, DESK_HIDDEN, num_classes),
            Preset::P611k => 611_000,
            Preset::P211k => 211_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Recurrent state size per direction (recurrent kinds).
    pub hidden_size: usize,
    /// Constant channel width of the residual blocks (DCN).
    pub channels: usize,
    pub kernel: usize,
    pub residual_blocks: usize,
    pub num_classes: usize,
    pub input_scale: f64,
}

fn recurrent_count(gates: usize, h: usize, c: usize) -> usize {
    2 * gates * (h * (1 + h) + h) + 2 * h * c + c
}

fn dcn_count(ch: usize, k: usize, blocks: usize, c: usize) -> usize {
    let mut total = 0;
    let mut cin = 1;
    for _ in 0..blocks {
        total += cin * ch * k + ch + ch * ch * k + ch;
        if cin != ch {
            total += cin * ch + ch;
        }
        cin = ch;
    }
    total + ch * c + c
}

impl ModelSpec {
    pub fn blstm(hidden_size: usize, num_classes: usize) -> Self {
        ModelSpec::recurrent(ModelKind::Blstm, hidden_size, num_classes)
    }

    pub fn bgru(hidden_size: usize, num_classes: usize) -> Self {
        ModelSpec::recurrent(ModelKind::Bgru, hidden_size, num_classes)
    }

    fn recurrent(kind: ModelKind, hidden_size: usize, num_classes: usize) -> Self {
        ModelSpec {
            kind,
            hidden_size,
            channels: 0,
            kernel: 3,
            residual_blocks: 8,
            num_classes,
            input_scale: DEFAULT_INPUT_SCALE,
        }
    }

    pub fn dcn(channels: usize, num_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Dcn,
            hidden_size: 0,
            channels,
            kernel: 3,
            residual_blocks: 8,
            num_classes,
            input_scale: DEFAULT_INPUT_SCALE,
        }
    }

    /// Spec of `kind` whose width brings the parameter count closest to the
    /// preset budget.
    pub fn from_preset(kind: ModelKind, preset: Preset, num_classes: usize) -> Self {
        let budget = preset.budget(num_classes) as f64;
        let make = |w: usize| match kind {
            ModelKind::Blstm => ModelSpec::blstm(w, num_classes),
            ModelKind::Bgru => ModelSpec::bgru(w, num_classes),
            ModelKind::Dcn => ModelSpec::dcn(w, num_classes),
        };
        (1..=2048)
            .map(make)
            .min_by(|a, b| {
                let da = (a.param_count() as f64 - budget).abs();
                let db = (b.param_count() as f64 - budget).abs();
                da.total_cmp(&db)
            })
            .expect("non-empty width range")
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes must be at least 2"));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::invalid("input_scale must be positive"));
        }
        match self.kind {
            ModelKind::Dcn => {
                if self.kernel.is_multiple_of(2) {
                    return Err(Error::invalid("DCN kernel must be odd"));
                }
                if self.residual_blocks == 0 || self.channels == 0 {
                    return Err(Error::invalid("DCN needs at least one block and one channel"));
                }
            }
            _ if self.hidden_size == 0 => return Err(Error::invalid("hidden_size must be positive")),
            _ => {}
        }
        Ok(())
    }

    /// Exact number of trainable scalars.
    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::Dcn => dcn_count(self.channels, self.kernel, self.residual_blocks, self.num_classes),
            kind => recurrent_count(kind.gates(), self.hidden_size, self.num_classes),
        }
    }

    /// Number of input steps that can influence one output step. Unbounded
    /// for the recurrent kinds.
    pub fn receptive_field(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Dcn => Some(dcn_receptive_field(self.kernel, self.residual_blocks)),
            _ => None,
        }
    }
}

/// `1 + sum over blocks of 2 convolutions * (k - 1) * 2^i`.
pub fn dcn_receptive_field(kernel: usize, blocks: usize) -> usize {
    1 + (0..blocks).map(|i| 2 * (kernel - 1) * (1 << i)).sum::<usize>()
}

fn uniform<R: Rng>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let s = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-s..s)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

/// A model specification with concrete parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: ParamSet,
}

impl Model {
    /// Fresh parameters: uniform in `±1/sqrt(fan_in)` for weights, zero
    /// biases and a forget-gate bias of one for LSTMs.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng_from_seed(seed);
        let mut params = ParamSet::new();
        let c = spec.num_classes;
        match spec.kind {
            ModelKind::Blstm | ModelKind::Bgru => {
                let h = spec.hidden_size;
                let g = spec.kind.gates() * h;
                for dir in ["fwd", "bwd"] {
                    params.insert(format!("{dir}.weight"), uniform(&[1 + h, g], 1 + h, &mut rng));
                    let mut bias = Tensor::zeros(&[g]);
                    if spec.kind == ModelKind::Blstm {
                        bias.data_mut()[h..2 * h].fill(1.0);
                    }
                    params.insert(format!("{dir}.bias"), bias);
                }
                params.insert("head.weight", uniform(&[2 * h, c], 2 * h, &mut rng));
                params.insert("head.bias", Tensor::zeros(&[c]));
            }
            ModelKind::Dcn => {
                let (ch, k) = (spec.channels, spec.kernel);
                let mut cin = 1;
                for b in 0..spec.residual_blocks {
                    params.insert(format!("block{b}.conv1.weight"), uniform(&[ch, cin, k], cin * k, &mut rng));
                    params.insert(format!("block{b}.conv1.bias"), Tensor::zeros(&[ch]));
                    params.insert(format!("block{b}.conv2.weight"), uniform(&[ch, ch, k], ch * k, &mut rng));
                    params.insert(format!("block{b}.conv2.bias"), Tensor::zeros(&[ch]));
                    if cin != ch {
                        params.insert(format!("block{b}.skip.weight"), uniform(&[ch, cin, 1], cin, &mut rng));
                        params.insert(format!("block{b}.skip.bias"), Tensor::zeros(&[ch]));
                    }
                    cin = ch;
                }
                params.insert("head.weight", uniform(&[c, ch, 1], ch, &mut rng));
                params.insert("head.bias", Tensor::zeros(&[c]));
            }
        }
        Ok(Model { spec, params })
    }

    /// Wraps loaded parameters after checking names and shapes against a
    /// freshly initialized model of the same spec.
    pub fn from_parts(spec: ModelSpec, params: ParamSet) -> Result<Self> {
        let reference = Model::init(spec.clone(), 0)?;
        let expected: Vec<(&str, &[usize])> = reference.params.iter().map(|(n, t)| (n, t.shape())).collect();
        let found: Vec<(&str, &[usize])> = params.iter().map(|(n, t)| (n, t.shape())).collect();
        if expected != found {
            return Err(Error::invalid(format!(
                "parameters do not match a {} spec",
                spec.kind.name()
            )));
        }
        Ok(Model { spec, params })
    }

    /// Registers every parameter as a tape leaf, in [`ParamSet`] order.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params
            .tensors()
            .map(|t| if trainable { g.param(t.clone()) } else { g.constant(t.clone()) })
            .collect()
    }

    fn var(&self, vars: &[Var], name: &str) -> Var {
        vars[self.params.index_of(name).expect("parameter registered at init")]
    }

    fn input(&self, g: &mut Graph, dtoa: &[f64], shape: Vec<usize>) -> Result<Var> {
        if dtoa.is_empty() {
            return Err(Error::invalid("empty DTOA sequence"));
        }
        let scaled = dtoa.iter().map(|d| d * self.spec.input_scale).collect();
        Ok(g.constant(Tensor::new(shape, scaled)?))
    }

    /// Logits `[L, C]` on a tape whose parameter leaves are `vars`.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], dtoa: &[f64]) -> Result<Var> {
        match self.spec.kind {
            ModelKind::Dcn => self.dcn_forward(g, vars, dtoa),
            _ => self.bidirectional_forward(g, vars, dtoa, Route::Fused),
        }
    }

    /// Recurrent forward pass. [`Route::Composed`] records every gate on the
    /// tape and exists to cross-check the fused kernels.
    pub fn bidirectional_forward(&self, g: &mut Graph, vars: &[Var], dtoa: &[f64], route: Route) -> Result<Var> {
        if !self.spec.kind.is_recurrent() {
            return Err(Error::WrongMode {
                expected: "BLSTM or BGRU",
                found: self.spec.kind.name(),
            });
        }
        let x = self.input(g, dtoa, vec![dtoa.len(), 1])?;
        let mut dirs = Vec::with_capacity(2);
        for (dir, reverse) in [("fwd", false), ("bwd", true)] {
            let (w, b) = (self.var(vars, &format!("{dir}.weight")), self.var(vars, &format!("{dir}.bias")));
            dirs.push(match (self.spec.kind, route) {
                (ModelKind::Blstm, Route::Fused) => g.lstm_sequence(x, w, b, reverse)?,
                (ModelKind::Blstm, Route::Composed) => lstm_composed(g, x, w, b, reverse)?,
                (_, Route::Fused) => g.gru_sequence(x, w, b, reverse)?,
                (_, Route::Composed) => gru_composed(g, x, w, b, reverse)?,
            });
        }
        let both = g.concat(&dirs, 1)?;
        let z = g.matmul(both, self.var(vars, "head.weight"))?;
        g.add(z, self.var(vars, "head.bias"))
    }

    pub fn dcn_forward(&self, g: &mut Graph, vars: &[Var], dtoa: &[f64]) -> Result<Var> {
        if self.spec.kind != ModelKind::Dcn {
            return Err(Error::WrongMode {
                expected: "DCN",
                found: self.spec.kind.name(),
            });
        }
        let mut x = self.input(g, dtoa, vec![1, dtoa.len()])?;
        for b in 0..self.spec.residual_blocks {
            let d = 1 << b;
            let p = |s: &str| format!("block{b}.{s}");
            let y = g.conv1d_dilated(x, self.var(vars, &p("conv1.weight")), Some(self.var(vars, &p("conv1.bias"))), d)?;
            let y = g.relu(y);
            let y = g.conv1d_dilated(y, self.var(vars, &p("conv2.weight")), Some(self.var(vars, &p("conv2.bias"))), d)?;
            let y = g.relu(y);
            let skip = match self.params.index_of(&p("skip.weight")) {
                Some(i) => g.conv1d_dilated(x, vars[i], Some(self.var(vars, &p("skip.bias"))), 1)?,
                None => x,
            };
            let sum = g.add(y, skip)?;
            x = g.relu(sum);
        }
        let head = g.conv1d_dilated(x, self.var(vars, "head.weight"), Some(self.var(vars, "head.bias")), 1)?;
        g.transpose(head)
    }

    /// Logits `[L, C]` without recording gradients.
    pub fn logits(&self, dtoa: &[f64]) -> Result<Tensor> {
        let mut g = Graph::new();
        let vars = self.bind(&mut g, false);
        let out = self.forward(&mut g, &vars, dtoa)?;
        Ok(g.value(out).clone())
    }

    /// Per-step class probabilities `[L, C]`.
    pub fn probabilities(&self, dtoa: &[f64]) -> Result<Tensor> {
        let mut g = Graph::new();
        let vars = self.bind(&mut g, false);
        let out = self.forward(&mut g, &vars, dtoa)?;
        let p = g.softmax(out, 1)?;
        Ok(g.value(p).clone())
    }

    pub fn predict_labels(&self, dtoa: &[f64]) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(dtoa)?))
    }
}

/// Which implementation of the recurrent layers to record on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Fused,
    Composed,
}

/// Row-wise argmax of a `[L, C]` tensor; ties go to the lower class id.
pub fn argmax_rows(t: &Tensor) -> Vec<usize> {
    let c = t.shape()[1];
    t.data()
        .chunks(c)
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::cells::{gru_cell, lstm_cell};
    use crate::autograd::{grad_check, random_projection, DEFAULT_EPS};

    #[test]
    fn argmax_and_ties() {
        let t = Tensor::matrix(2, 3, vec![0.0, 5.0, -1.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(argmax_rows(&t), vec![1, 0]);
    }

    #[test]
    fn receptive_field_covers_sequence() {
        assert_eq!(dcn_receptive_field(3, 8), 1021);
        assert_eq!(ModelSpec::dcn(4, 3).receptive_field(), Some(1021));
    }

    #[test]
    fn param_count_matches_enumeration() {
        for spec in [
            ModelSpec::blstm(7, 4),
            ModelSpec::bgru(5, 3),
            ModelSpec::dcn(6, 5),
            ModelSpec::dcn(1, 2),
        ] {
            let m = Model::init(spec.clone(), 1).unwrap();
            assert_eq!(m.params.numel(), spec.param_count(), "{spec:?}");
        }
        let (h, c) = (9, 4);
        assert_eq!(ModelSpec::blstm(h, c).param_count(), 2 * 4 * (h * (1 + h) + h) + 2 * h * c + c);
    }

    #[test]
    fn presets_hit_budgets() {
        for kind in [ModelKind::Blstm, ModelKind::Bgru, ModelKind::Dcn] {
            for (preset, budget) in [(Preset::P611k, 611_000.0), (Preset::P211k, 211_000.0)] {
                let n = ModelSpec::from_preset(kind, preset, 5).param_count() as f64;
                assert!((n / budget - 1.0).abs() < 0.1, "{kind:?} {preset:?} {n}");
            }
            let desk = ModelSpec::from_preset(kind, Preset::Desk, 5).param_count() as f64;
            let target = Preset::Desk.budget(5) as f64;
            assert!((desk / target - 1.0).abs() < 0.1, "{kind:?} desk {desk}");
        }
        assert_eq!(ModelSpec::from_preset(ModelKind::Blstm, Preset::Desk, 5).hidden_size, DESK_HIDDEN);
    }

    #[test]
    fn lstm_forget_bias_is_one() {
        let m = Model::init(ModelSpec::blstm(3, 2), 0).unwrap();
        let b = m.params.get("fwd.bias").unwrap().data();
        assert_eq!(b, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn output_shapes_and_normalization() {
        for spec in [ModelSpec::blstm(4, 3), ModelSpec::bgru(4, 3), ModelSpec::dcn(3, 3)] {
            let m = Model::init(spec, 2).unwrap();
            for len in [1, 7, 1000] {
                let dtoa: Vec<f64> = (0..len).map(|i| if i == 0 { 0.0 } else { 10.0 + (i % 13) as f64 }).collect();
                let p = m.probabilities(&dtoa).unwrap();
                assert_eq!(p.shape(), &[len, 3]);
                for row in p.data().chunks(3) {
                    assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
            assert!(m.logits(&[]).is_err());
        }
    }

    #[test]
    fn first_input_reaches_last_output() {
        for spec in [ModelSpec::blstm(4, 3), ModelSpec::bgru(4, 3)] {
            let m = Model::init(spec, 3).unwrap();
            let mut dtoa = vec![12.0; 20];
            let a = m.logits(&dtoa).unwrap();
            dtoa[0] = 40.0;
            let b = m.logits(&dtoa).unwrap();
            let last = |t: &Tensor| t.data()[19 * 3..].to_vec();
            let diff: f64 = last(&a).iter().zip(last(&b)).map(|(x, y)| (x - y).abs()).sum();
            assert!(diff > 1e-9, "{:?} {diff}", m.spec.kind);
        }
    }

    #[test]
    fn zero_conv_weights_give_constant_logits() {
        let mut m = Model::init(ModelSpec::dcn(3, 4), 4).unwrap();
        let names: Vec<String> = m.params.names().map(str::to_string).collect();
        for (i, n) in names.iter().enumerate() {
            let t = m.params.get_mut(n).unwrap();
            if n.ends_with("weight") {
                t.data_mut().fill(0.0);
            } else {
                t.data_mut().iter_mut().enumerate().for_each(|(j, v)| *v = 0.1 * (i + j) as f64);
            }
        }
        let l = m.logits(&[0.0, 30.0, 5.0, 70.0, 21.0]).unwrap();
        let first = l.data()[..4].to_vec();
        for row in l.data().chunks(4) {
            assert_eq!(row, &first[..]);
        }
    }

    #[test]
    fn reversal_symmetry_of_bidirectional_models() {
        for spec in [ModelSpec::blstm(3, 3), ModelSpec::bgru(3, 3)] {
            let m = Model::init(spec, 5).unwrap();
            let mut swapped = m.clone();
            for s in ["weight", "bias"] {
                let f = m.params.get(&format!("fwd.{s}")).unwrap().clone();
                let b = m.params.get(&format!("bwd.{s}")).unwrap().clone();
                swapped.params.insert(format!("fwd.{s}"), b);
                swapped.params.insert(format!("bwd.{s}"), f);
            }
            // the head sees [h_fwd; h_bwd], so its two row blocks swap as well
            let h = m.spec.hidden_size;
            let head = m.params.get("head.weight").unwrap();
            let c = head.shape()[1];
            let mut rows = head.data()[h * c..].to_vec();
            rows.extend_from_slice(&head.data()[..h * c]);
            swapped.params.insert("head.weight", Tensor::matrix(2 * h, c, rows).unwrap());

            let dtoa = [0.0, 31.0, 12.5, 44.0, 7.0, 60.0];
            let rev: Vec<f64> = dtoa.iter().rev().copied().collect();
            let a = m.logits(&dtoa).unwrap();
            let b = swapped.logits(&rev).unwrap();
            for t in 0..dtoa.len() {
                for k in 0..3 {
                    let x = a.at(t, k);
                    let y = b.at(dtoa.len() - 1 - t, k);
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fused_and_composed_routes_agree() {
        for spec in [ModelSpec::blstm(3, 3), ModelSpec::bgru(3, 3)] {
            let m = Model::init(spec, 6).unwrap();
            let dtoa = [0.0, 31.0, 12.5, 44.0, 7.0];
            let run = |route| {
                let mut g = Graph::new();
                let vars = m.bind(&mut g, false);
                let y = m.bidirectional_forward(&mut g, &vars, &dtoa, route).unwrap();
                g.value(y).clone()
            };
            let (a, b) = (run(Route::Fused), run(Route::Composed));
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn end_to_end_gradcheck_each_kind() {
        let dtoa = [0.0, 31.0, 12.5, 44.0, 7.0, 60.0, 3.0, 25.0];
        let labels = [0usize, 1, 2, 1, 0, 2, 2, 1];
        for spec in [ModelSpec::blstm(3, 3), ModelSpec::bgru(3, 3), ModelSpec::dcn(2, 3)] {
            let mut m = Model::init(spec, 7).unwrap();
            // nonzero biases keep ReLU inputs away from the kink at zero
            let mut rng = rng_from_seed(9);
            for t in m.params.tensors_mut().filter(|t| t.rank() == 1) {
                t.data_mut().iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
            }
            let tensors: Vec<Tensor> = m.params.tensors().cloned().collect();
            let mm = m.clone();
            let f = move |g: &mut Graph, vars: &[Var]| {
                let z = mm.forward(g, vars, &dtoa)?;
                let p = g.softmax(z, 1)?;
                let ce = g.cross_entropy(p, &labels)?;
                g.mean(ce)
            };
            let err = grad_check(&f, &tensors, DEFAULT_EPS, None, &mut rng_from_seed(0)).unwrap();
            assert!(err < 1e-4, "{:?}: {err}", m.spec.kind);
        }
    }

    #[test]
    fn lstm_cell_examples() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(1, 2, vec![0.7, -1.3]).unwrap());
        let h = g.constant(Tensor::zeros(&[1, 3]));
        let c = g.constant(Tensor::zeros(&[1, 3]));
        let w = g.constant(Tensor::zeros(&[5, 12]));
        let b = g.constant(Tensor::zeros(&[12]));
        let (h1, c1) = lstm_cell(&mut g, x, h, c, w, b).unwrap();
        assert!(g.value(h1).data().iter().chain(g.value(c1).data()).all(|v| *v == 0.0));

        // input gate closed, forget gate open: the cell is carried unchanged
        let mut bias = vec![0.0; 12];
        bias[..3].fill(-1e3);
        bias[3..6].fill(1e3);
        let b = g.constant(Tensor::vector(bias));
        let c = g.constant(Tensor::matrix(1, 3, vec![0.4, -2.0, 1.5]).unwrap());
        let (_, c1) = lstm_cell(&mut g, x, h, c, w, b).unwrap();
        assert_eq!(g.value(c1).data(), &[0.4, -2.0, 1.5]);
    }

    #[test]
    fn gru_cell_examples() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::matrix(1, 2, vec![0.7, -1.3]).unwrap());
        let h = g.constant(Tensor::zeros(&[1, 3]));
        let w = g.constant(Tensor::zeros(&[5, 9]));
        let b = g.constant(Tensor::zeros(&[9]));
        let h1 = gru_cell(&mut g, x, h, w, b).unwrap();
        assert!(g.value(h1).data().iter().all(|v| *v == 0.0));

        // update gate shut: the state is carried unchanged
        let mut bias = vec![0.0; 9];
        bias[..3].fill(-1e3);
        let b = g.constant(Tensor::vector(bias));
        let h = g.constant(Tensor::matrix(1, 3, vec![0.4, -0.2, 0.9]).unwrap());
        let h1 = gru_cell(&mut g, x, h, w, b).unwrap();
        assert_eq!(g.value(h1).data(), &[0.4, -0.2, 0.9]);
    }

    #[test]
    fn random_cells_pass_gradcheck() {
        let mut rng = rng_from_seed(8);
        let rt = |shape: &[usize], rng: &mut crate::simulator::SimRng| {
            let n = shape.iter().product();
            Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-0.8..0.8)).collect()).unwrap()
        };
        let lstm_params = vec![rt(&[1, 2], &mut rng), rt(&[1, 3], &mut rng), rt(&[1, 3], &mut rng), rt(&[5, 12], &mut rng), rt(&[12], &mut rng)];
        let f = |g: &mut Graph, p: &[Var]| {
            let (h, c) = lstm_cell(g, p[0], p[1], p[2], p[3], p[4])?;
            let both = g.concat(&[h, c], 1)?;
            random_projection(g, both, &mut rng_from_seed(1))
        };
        assert!(grad_check(&f, &lstm_params, DEFAULT_EPS, None, &mut rng_from_seed(0)).unwrap() < 1e-4);
        let gru_params = vec![rt(&[1, 2], &mut rng), rt(&[1, 3], &mut rng), rt(&[5, 9], &mut rng), rt(&[9], &mut rng)];
        let f = |g: &mut Graph, p: &[Var]| {
            let h = gru_cell(g, p[0], p[1], p[2], p[3])?;
            random_projection(g, h, &mut rng_from_seed(2))
        };
        assert!(grad_check(&f, &gru_params, DEFAULT_EPS, None, &mut rng_from_seed(0)).unwrap() < 1e-4);
    }
}
