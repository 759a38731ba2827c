use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{NodeId, Tape};
use super::window::{FeatureWindow, Normalizer, N_CALENDAR};
use super::ForecastError;

pub const CHECKPOINT_TAG: &str = "ies-e2e/forecast/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Stacked GRU over the history, last hidden state plus target calendar
    /// into a linear multi-step head.
    Gru,
    /// Flattened history and calendar through `tanh` layers; zero layers
    /// gives a linear model.
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub kind: ModelKind,
    pub layers: usize,
    pub hidden: usize,
    /// history steps fed in
    pub history: usize,
    /// steps predicted
    pub horizon: usize,
    pub channels: usize,
    /// calendar features per target step
    pub calendar: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            kind: ModelKind::Gru,
            layers: 2,
            hidden: 128,
            history: 24,
            horizon: 24,
            channels: 6,
            calendar: N_CALENDAR,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<(), ForecastError> {
        let bad = |m: &str| Err(ForecastError::Architecture(m.into()));
        if self.channels == 0 || self.horizon == 0 || self.history == 0 {
            return bad("channels, horizon and history must be positive");
        }
        if self.kind == ModelKind::Gru && self.layers == 0 {
            return bad("a GRU needs at least one layer");
        }
        if self.layers > 0 && self.hidden == 0 {
            return bad("hidden width must be positive");
        }
        Ok(())
    }

    fn output_len(&self) -> usize {
        self.horizon * self.channels
    }

    /// Parameter names and shapes, in storage order. Each entry carries the
    /// fan-in used for initialization.
    fn shapes(&self) -> Vec<(String, usize, usize, usize)> {
        let (h, mut out) = (self.hidden, Vec::new());
        let cal = self.horizon * self.calendar;
        let head_in = match self.kind {
            ModelKind::Gru => {
                for l in 0..self.layers {
                    let inp = if l == 0 { self.channels } else { h };
                    out.push((format!("gru{l}.w_in"), 3 * h, inp, inp));
                    out.push((format!("gru{l}.w_hid"), 3 * h, h, h));
                    out.push((format!("gru{l}.b_in"), 3 * h, 1, inp));
                    out.push((format!("gru{l}.b_hid"), 3 * h, 1, h));
                }
                h + cal
            }
            ModelKind::Mlp => {
                let mut d = self.history * self.channels + cal;
                for l in 0..self.layers {
                    out.push((format!("mlp{l}.w"), h, d, d));
                    out.push((format!("mlp{l}.b"), h, 1, d));
                    d = h;
                }
                d
            }
        };
        out.push(("head.w".into(), self.output_len(), head_in, head_in));
        out.push(("head.b".into(), self.output_len(), 1, head_in));
        out
    }
}

/// A multi-step forecaster: architecture, parameters and the normalization
/// it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub arch: Architecture,
    pub names: Vec<String>,
    pub params: Vec<DMatrix<f64>>,
    pub normalizer: Normalizer,
}

/// A forward pass with its tape, ready for one [`TapedPrediction::backprop`].
pub struct TapedPrediction<'m> {
    /// `horizon x channels`, normalized
    pub prediction: DMatrix<f64>,
    tape: Tape<'m>,
    out: NodeId,
}

impl TapedPrediction<'_> {
    /// Gradient of a loss with respect to every parameter, given its
    /// gradient `grad_output` (`horizon x channels`) on the prediction.
    pub fn backprop(&mut self, grad_output: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>, ForecastError> {
        let (t, c) = self.prediction.shape();
        if grad_output.shape() != (t, c) {
            return Err(ForecastError::ShapeMismatch(format!(
                "grad_output is {:?}, prediction is {t}x{c}",
                grad_output.shape()
            )));
        }
        let flat = DVector::from_fn(t * c, |i, _| grad_output[(i / c, i % c)]);
        self.tape.backward(self.out, &flat)
    }
}

impl ForecastModel {
    /// Uniform initialization in `+-sqrt(1 / fan_in)`, deterministic in `seed`.
    pub fn init(arch: Architecture, normalizer: Normalizer, seed: u64) -> Result<Self, ForecastError> {
        arch.validate()?;
        if normalizer.channels() != arch.channels {
            return Err(ForecastError::ShapeMismatch(format!(
                "normalizer has {} channels, architecture {}",
                normalizer.channels(),
                arch.channels
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        for (name, r, c, fan_in) in arch.shapes() {
            let k = (1.0 / fan_in.max(1) as f64).sqrt();
            params.push(DMatrix::from_fn(r, c, |_, _| rng.random_range(-k..=k)));
            names.push(name);
        }
        Ok(Self {
            arch,
            names,
            params,
            normalizer,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// All parameters in one vector (column-major per tensor, tensors in order).
    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<(), ForecastError> {
        if flat.len() != self.n_params() {
            return Err(ForecastError::ShapeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.n_params()
            )));
        }
        let mut at = 0;
        for p in self.params.iter_mut() {
            let n = p.len();
            p.as_mut_slice().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Flattens per-tensor gradients in the order of [`Self::flat_params`].
    pub fn flatten_grads(grads: &[DMatrix<f64>]) -> Vec<f64> {
        grads.iter().flat_map(|g| g.iter().copied()).collect()
    }

    fn check(&self, w: &FeatureWindow) -> Result<(), ForecastError> {
        let a = &self.arch;
        if w.history.shape() != (a.history, a.channels) {
            return Err(ForecastError::ShapeMismatch(format!(
                "history is {:?}, expected {}x{}",
                w.history.shape(),
                a.history,
                a.channels
            )));
        }
        if w.calendar.shape() != (a.horizon, a.calendar) {
            return Err(ForecastError::ShapeMismatch(format!(
                "calendar is {:?}, expected {}x{}",
                w.calendar.shape(),
                a.horizon,
                a.calendar
            )));
        }
        Ok(())
    }

    fn forward<'m>(&'m self, w: &FeatureWindow) -> Result<(Tape<'m>, NodeId), ForecastError> {
        self.check(w)?;
        let a = &self.arch;
        let mut tape = Tape::new(&self.params);
        let cal = tape.leaf(DVector::from_iterator(
            a.horizon * a.calendar,
            w.calendar.transpose().iter().copied(),
        ));
        let features = match a.kind {
            ModelKind::Gru => {
                let h = a.hidden;
                let mut seq: Vec<NodeId> = (0..a.history)
                    .map(|t| tape.leaf(w.history.row(t).transpose()))
                    .collect();
                for l in 0..a.layers {
                    let (wi, wh, bi, bh) = (4 * l, 4 * l + 1, 4 * l + 2, 4 * l + 3);
                    let mut state = tape.leaf(DVector::zeros(h));
                    for x in seq.iter_mut() {
                        let gi = tape.affine(wi, bi, *x);
                        let gh = tape.affine(wh, bh, state);
                        let (ir, iz, inn) = (tape.slice(gi, 0, h), tape.slice(gi, h, h), tape.slice(gi, 2 * h, h));
                        let (hr, hz, hn) = (tape.slice(gh, 0, h), tape.slice(gh, h, h), tape.slice(gh, 2 * h, h));
                        let r = tape.add(ir, hr);
                        let r = tape.sigmoid(r);
                        let z = tape.add(iz, hz);
                        let z = tape.sigmoid(z);
                        let rn = tape.mul(r, hn);
                        let n = tape.add(inn, rn);
                        let n = tape.tanh(n);
                        let keep = tape.one_minus(z);
                        let fresh = tape.mul(keep, n);
                        let old = tape.mul(z, state);
                        state = tape.add(fresh, old);
                        *x = state;
                    }
                }
                let last = *seq.last().expect("history is nonempty");
                tape.concat(&[last, cal])
            }
            ModelKind::Mlp => {
                let hist = tape.leaf(DVector::from_iterator(
                    a.history * a.channels,
                    w.history.transpose().iter().copied(),
                ));
                let mut x = tape.concat(&[hist, cal]);
                for l in 0..a.layers {
                    let y = tape.affine(2 * l, 2 * l + 1, x);
                    x = tape.tanh(y);
                }
                x
            }
        };
        let n = self.params.len();
        let out = tape.affine(n - 2, n - 1, features);
        Ok((tape, out))
    }

    fn reshape(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let c = self.arch.channels;
        DMatrix::from_fn(self.arch.horizon, c, |t, ch| v[t * c + ch])
    }

    /// Normalized `horizon x channels` prediction.
    pub fn predict(&self, w: &FeatureWindow) -> Result<DMatrix<f64>, ForecastError> {
        let (tape, out) = self.forward(w)?;
        Ok(self.reshape(tape.value(out)))
    }

    pub fn predict_with_tape(&self, w: &FeatureWindow) -> Result<TapedPrediction<'_>, ForecastError> {
        let (tape, out) = self.forward(w)?;
        Ok(TapedPrediction {
            prediction: self.reshape(tape.value(out)),
            tape,
            out,
        })
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), ForecastError> {
        let doc = CheckpointJson {
            format: CHECKPOINT_TAG.into(),
            arch: self.arch,
            normalizer: self.normalizer.clone(),
            params: self
                .names
                .iter()
                .zip(&self.params)
                .map(|(name, p)| TensorJson {
                    name: name.clone(),
                    rows: p.nrows(),
                    cols: p.ncols(),
                    data: p.transpose().iter().copied().collect(),
                })
                .collect(),
        };
        serde_json::to_writer(w, &doc).map_err(|e| ForecastError::Checkpoint(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, ForecastError> {
        let doc: CheckpointJson =
            serde_json::from_reader(r).map_err(|e| ForecastError::Checkpoint(e.to_string()))?;
        if doc.format != CHECKPOINT_TAG {
            return Err(ForecastError::Checkpoint(format!("unknown format tag {:?}", doc.format)));
        }
        let mut model = Self::init(doc.arch, doc.normalizer, 0)?;
        if doc.params.len() != model.params.len() {
            return Err(ForecastError::Checkpoint(format!(
                "{} tensors stored, architecture needs {}",
                doc.params.len(),
                model.params.len()
            )));
        }
        for (k, t) in doc.params.into_iter().enumerate() {
            let p = &model.params[k];
            if t.name != model.names[k] || (t.rows, t.cols) != p.shape() || t.data.len() != p.len() {
                return Err(ForecastError::Checkpoint(format!(
                    "tensor {k} ({}) does not match {} {:?}",
                    t.name,
                    model.names[k],
                    p.shape()
                )));
            }
            model.params[k] = DMatrix::from_row_slice(t.rows, t.cols, &t.data);
        }
        if model.normalizer.scale.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || model.normalizer.min.iter().any(|m| !m.is_finite())
        {
            return Err(ForecastError::Checkpoint("normalizer must be finite with positive scale".into()));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    name: String,
    rows: usize,
    cols: usize,
    /// row-major
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointJson {
    format: String,
    arch: Architecture,
    normalizer: Normalizer,
    params: Vec<TensorJson>,
}
