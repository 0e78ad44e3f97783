//! Forward computation of the encoder / stacked-LSTM / decoder model.
//!
//! Layers act per node row with shared weights: each snapshot row (length n)
//! is mapped through the encoder, the LSTM runs per node row over the N
//! timesteps, and the decoder maps the top cell's final hidden state back to
//! an n-wide score row. Hidden layers use ReLU; the output layer uses
//! sigmoid, so scores live in (0,1).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SampleWindow, Snapshot};
use crate::numeric::{
    self, glorot_init, hadamard, read_matrix, relu, sigmoid, tanh, write_matrix, Matrix,
    SeededRng,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Node count n; also the output layer width.
    pub n: usize,
    /// Historical snapshots per sample (N).
    pub window_len: usize,
    pub encoder_dims: Vec<usize>,
    pub lstm_dims: Vec<usize>,
    /// Last entry must equal `n`.
    pub decoder_dims: Vec<usize>,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.window_len == 0 {
            return Err(Error::InvalidArgument("n and window_len must be positive".into()));
        }
        if self.encoder_dims.is_empty() || self.lstm_dims.is_empty() || self.decoder_dims.is_empty()
        {
            return Err(Error::InvalidArgument(
                "encoder, lstm and decoder need at least one layer each".into(),
            ));
        }
        if *self.decoder_dims.last().unwrap() != self.n {
            return Err(Error::Shape(format!(
                "last decoder width {} must equal node count {}",
                self.decoder_dims.last().unwrap(),
                self.n
            )));
        }
        if self.encoder_dims.iter().chain(&self.lstm_dims).chain(&self.decoder_dims).any(|&d| d == 0)
        {
            return Err(Error::InvalidArgument("zero-width layer".into()));
        }
        Ok(())
    }

    pub fn top_lstm_dim(&self) -> usize {
        *self.lstm_dims.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// out x in.
    pub w: Matrix,
    /// out x 1.
    pub b: Matrix,
}

impl DenseLayer {
    /// Pre-activation `x Wᵀ + 1bᵀ` for a row batch x (rows x in).
    pub fn affine(&self, x: &Matrix) -> Result<Matrix> {
        x.mul_transpose(&self.w)?.add_row_bias(&self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// Each gate weight is d x (d + d_in), applied to [h_{t-1}, x].
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Matrix,
    pub b_i: Matrix,
    pub b_c: Matrix,
    pub b_o: Matrix,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Matrix,
    pub c: Matrix,
}

impl LstmState {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        LstmState { h: Matrix::zeros(rows, dim), c: Matrix::zeros(rows, dim) }
    }
}

/// Gate values of one timestep, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct LstmStepTrace {
    /// Concatenated input [h_{t-1}, x], rows x (d + d_in).
    pub z: Matrix,
    pub f: Matrix,
    pub i: Matrix,
    /// Candidate cell state (tanh branch).
    pub g: Matrix,
    pub o: Matrix,
    pub c: Matrix,
    pub tanh_c: Matrix,
    pub h: Matrix,
}

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub encoder: Vec<DenseLayer>,
    pub lstm: Vec<LstmCell>,
    pub decoder: Vec<DenseLayer>,
}

impl ModelParams {
    /// All weight matrices (biases excluded), in a fixed order.
    pub fn weight_matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.encoder {
            out.push(&l.w);
        }
        for c in &self.lstm {
            out.extend([&c.w_f, &c.w_i, &c.w_c, &c.w_o]);
        }
        for l in &self.decoder {
            out.push(&l.w);
        }
        out
    }

    /// Every parameter matrix (weights and biases), in a fixed order.
    pub fn all_matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.encoder {
            out.extend([&l.w, &l.b]);
        }
        for c in &self.lstm {
            out.extend([&c.w_f, &c.w_i, &c.w_c, &c.w_o, &c.b_f, &c.b_i, &c.b_c, &c.b_o]);
        }
        for l in &self.decoder {
            out.extend([&l.w, &l.b]);
        }
        out
    }

    pub fn all_matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::new();
        for l in &mut self.encoder {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        for c in &mut self.lstm {
            out.push(&mut c.w_f);
            out.push(&mut c.w_i);
            out.push(&mut c.w_c);
            out.push(&mut c.w_o);
            out.push(&mut c.b_f);
            out.push(&mut c.b_i);
            out.push(&mut c.b_c);
            out.push(&mut c.b_o);
        }
        for l in &mut self.decoder {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }
}

/// Everything the backward pass needs, cached from one forward call.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// enc_act[t][k]: post-ReLU activation of encoder layer k at timestep t.
    pub enc_act: Vec<Vec<Matrix>>,
    /// lstm[l][t]: per-cell gate record.
    pub lstm: Vec<Vec<LstmStepTrace>>,
    /// Initial cell state per LSTM layer (zero unless stateful mode).
    pub init_c: Vec<Matrix>,
    /// Top cell's final hidden state (the embedding H).
    pub h_final: Matrix,
    /// dec_act[k]: decoder activations; the last entry is the score matrix.
    pub dec_act: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn scores(&self) -> &Matrix {
        self.dec_act.last().expect("decoder has at least one layer")
    }
}

/// Glorot-initialized weights, zero biases except forget bias = 1.
pub fn init_model(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = SeededRng::new(seed);
    let mut encoder = Vec::new();
    let mut in_dim = config.n;
    for &out_dim in &config.encoder_dims {
        encoder.push(DenseLayer {
            w: glorot_init(out_dim, in_dim, &mut rng),
            b: Matrix::zeros(out_dim, 1),
        });
        in_dim = out_dim;
    }
    let mut lstm = Vec::new();
    for &d in &config.lstm_dims {
        let z_dim = d + in_dim;
        lstm.push(LstmCell {
            w_f: glorot_init(d, z_dim, &mut rng),
            w_i: glorot_init(d, z_dim, &mut rng),
            w_c: glorot_init(d, z_dim, &mut rng),
            w_o: glorot_init(d, z_dim, &mut rng),
            b_f: Matrix::from_fn(d, 1, |_, _| 1.0),
            b_i: Matrix::zeros(d, 1),
            b_c: Matrix::zeros(d, 1),
            b_o: Matrix::zeros(d, 1),
            input_dim: in_dim,
            hidden_dim: d,
        });
        in_dim = d;
    }
    let mut decoder = Vec::new();
    for &out_dim in &config.decoder_dims {
        decoder.push(DenseLayer {
            w: glorot_init(out_dim, in_dim, &mut rng),
            b: Matrix::zeros(out_dim, 1),
        });
        in_dim = out_dim;
    }
    Ok(ModelParams { encoder, lstm, decoder })
}

fn dense_affine(layer: &DenseLayer, x: &Matrix) -> Result<Matrix> {
    layer.affine(x)
}

/// Applies the ReLU encoder stack to each input snapshot, returning one
/// feature matrix (n x encoder_dims.last()) per timestep plus the
/// intermediate activations.
pub fn encode_with_trace(
    params: &ModelParams,
    inputs: &[Snapshot],
) -> Result<(Vec<Matrix>, Vec<Vec<Matrix>>)> {
    let mut features = Vec::with_capacity(inputs.len());
    let mut acts = Vec::with_capacity(inputs.len());
    for snap in inputs {
        let mut x = snap.adjacency.clone();
        let mut layer_acts = Vec::with_capacity(params.encoder.len());
        for layer in &params.encoder {
            x = relu(&dense_affine(layer, &x)?);
            layer_acts.push(x.clone());
        }
        features.push(x);
        acts.push(layer_acts);
    }
    Ok((features, acts))
}

pub fn encode(params: &ModelParams, window: &SampleWindow) -> Result<Vec<Matrix>> {
    Ok(encode_with_trace(params, &window.inputs)?.0)
}

/// One LSTM update on a row batch: gates over [h_{t-1}, x].
pub fn lstm_step(
    cell: &LstmCell,
    state: &LstmState,
    x: &Matrix,
) -> Result<(LstmState, LstmStepTrace)> {
    if x.cols != cell.input_dim || state.h.cols != cell.hidden_dim {
        return Err(Error::Shape(format!(
            "lstm_step: x {}x{}, h {}x{}, cell in={} hidden={}",
            x.rows, x.cols, state.h.rows, state.h.cols, cell.input_dim, cell.hidden_dim
        )));
    }
    let z = state.h.hconcat(x)?;
    let f = sigmoid(&z.mul_transpose(&cell.w_f)?.add_row_bias(&cell.b_f)?);
    let i = sigmoid(&z.mul_transpose(&cell.w_i)?.add_row_bias(&cell.b_i)?);
    let g = tanh(&z.mul_transpose(&cell.w_c)?.add_row_bias(&cell.b_c)?);
    let o = sigmoid(&z.mul_transpose(&cell.w_o)?.add_row_bias(&cell.b_o)?);
    let c = hadamard(&f, &state.c)?.add(&hadamard(&i, &g)?)?;
    let tanh_c = tanh(&c);
    let h = hadamard(&o, &tanh_c)?;
    let next = LstmState { h: h.clone(), c: c.clone() };
    Ok((next, LstmStepTrace { z, f, i, g, o, c, tanh_c, h }))
}

/// Runs the stacked LSTM over time-ordered features; layer l consumes the
/// full hidden sequence of layer l-1. Returns H (top cell, final step), the
/// final states of every cell, and the per-step traces.
pub fn stacked_lstm_with_trace(
    cells: &[LstmCell],
    features: &[Matrix],
    init: Option<&[LstmState]>,
) -> Result<(Matrix, Vec<LstmState>, Vec<Vec<LstmStepTrace>>, Vec<Matrix>)> {
    if features.is_empty() {
        return Err(Error::InvalidArgument("empty feature sequence".into()));
    }
    if let Some(states) = init {
        if states.len() != cells.len() {
            return Err(Error::Shape("initial state count != cell count".into()));
        }
    }
    let rows = features[0].rows;
    let mut sequence: Vec<Matrix> = features.to_vec();
    let mut traces = Vec::with_capacity(cells.len());
    let mut finals = Vec::with_capacity(cells.len());
    let mut init_c = Vec::with_capacity(cells.len());
    for (l, cell) in cells.iter().enumerate() {
        let mut state = match init {
            Some(states) => states[l].clone(),
            None => LstmState::zeros(rows, cell.hidden_dim),
        };
        init_c.push(state.c.clone());
        let mut layer_trace = Vec::with_capacity(sequence.len());
        let mut next_sequence = Vec::with_capacity(sequence.len());
        for x in &sequence {
            let (next, step) = lstm_step(cell, &state, x)?;
            next_sequence.push(step.h.clone());
            layer_trace.push(step);
            state = next;
        }
        finals.push(state);
        traces.push(layer_trace);
        sequence = next_sequence;
    }
    let h = sequence.last().unwrap().clone();
    Ok((h, finals, traces, init_c))
}

pub fn stacked_lstm_forward(cells: &[LstmCell], features: &[Matrix]) -> Result<Matrix> {
    Ok(stacked_lstm_with_trace(cells, features, None)?.0)
}

/// Decoder: hidden layers ReLU, final layer sigmoid.
pub fn decode_with_trace(params: &ModelParams, h: &Matrix) -> Result<Vec<Matrix>> {
    let mut acts = Vec::with_capacity(params.decoder.len());
    let mut x = h.clone();
    let last = params.decoder.len() - 1;
    for (k, layer) in params.decoder.iter().enumerate() {
        let pre = dense_affine(layer, &x)?;
        x = if k == last { sigmoid(&pre) } else { relu(&pre) };
        acts.push(x.clone());
    }
    Ok(acts)
}

pub fn decode(params: &ModelParams, h: &Matrix) -> Result<Matrix> {
    Ok(decode_with_trace(params, h)?.pop().unwrap())
}

/// Full forward pass; the trace caches every intermediate the backward pass
/// needs. `init` carries LSTM states across windows in stateful mode.
pub fn forward_with_state(
    params: &ModelParams,
    window: &SampleWindow,
    init: Option<&[LstmState]>,
) -> Result<(Matrix, ForwardTrace, Vec<LstmState>)> {
    let (features, enc_act) = encode_with_trace(params, &window.inputs)?;
    let (h_final, finals, lstm, init_c) =
        stacked_lstm_with_trace(&params.lstm, &features, init)?;
    let dec_act = decode_with_trace(params, &h_final)?;
    let scores = dec_act.last().unwrap().clone();
    let trace = ForwardTrace { enc_act, lstm, init_c, h_final, dec_act };
    Ok((scores, trace, finals))
}

pub fn forward(params: &ModelParams, window: &SampleWindow) -> Result<(Matrix, ForwardTrace)> {
    let (scores, trace, _) = forward_with_state(params, window, None)?;
    Ok((scores, trace))
}

/// Entry 1 iff score >= threshold; diagonal forced to zero.
pub fn binarize(scores: &Matrix, threshold: f64) -> Snapshot {
    let mut adjacency = Matrix::zeros(scores.rows, scores.cols);
    for i in 0..scores.rows {
        for j in 0..scores.cols {
            if i != j && scores.get(i, j) >= threshold {
                adjacency.set(i, j, 1.0);
            }
        }
    }
    Snapshot { adjacency, index: 0 }
}

pub const BINARIZE_THRESHOLD: f64 = 0.5;

/// Node embeddings: the stacked LSTM output H, one row per node.
pub fn embed(params: &ModelParams, window: &SampleWindow) -> Result<Matrix> {
    let (features, _) = encode_with_trace(params, &window.inputs)?;
    stacked_lstm_forward(&params.lstm, &features)
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"ELSTMD01";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    seed: u64,
    epoch: usize,
    matrices: usize,
}

/// Checkpoint file: magic, JSON header (config, seed, epoch), then every
/// parameter matrix as a little-endian binary blob.
pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    config: &ModelConfig,
    seed: u64,
    epoch: usize,
) -> Result<()> {
    let mats = params.all_matrices();
    let header = CheckpointHeader {
        config: config.clone(),
        seed,
        epoch,
        matrices: mats.len(),
    };
    let json = serde_json::to_vec(&header)
        .map_err(|e| Error::InvalidArgument(format!("checkpoint header: {e}")))?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for m in mats {
        write_matrix(&mut w, m)?;
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, ModelConfig, u64, usize)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse { line: 0, msg: "not a checkpoint file".into() });
    }
    let mut len8 = [0u8; 8];
    r.read_exact(&mut len8)?;
    let json_len = u64::from_le_bytes(len8) as usize;
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)
        .map_err(|e| Error::Parse { line: 0, msg: format!("checkpoint header: {e}") })?;
    let mut params = init_model(&header.config, header.seed)?;
    {
        let slots = params.all_matrices_mut();
        if slots.len() != header.matrices {
            return Err(Error::Shape("checkpoint matrix count mismatch".into()));
        }
        for slot in slots {
            let m = read_matrix(&mut r)?;
            if !slot.same_shape(&m) {
                return Err(Error::Shape("checkpoint matrix shape mismatch".into()));
            }
            *slot = m;
        }
    }
    Ok((params, header.config, header.seed, header.epoch))
}

/// Global L2 norm over a set of matrices (used by gradient clipping).
pub fn global_norm(mats: &[&Matrix]) -> f64 {
    mats.iter().map(|m| numeric::frobenius_sq(m)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::sigmoid_scalar;

    fn toy_config() -> ModelConfig {
        ModelConfig {
            n: 6,
            window_len: 3,
            encoder_dims: vec![4],
            lstm_dims: vec![5],
            decoder_dims: vec![6],
        }
    }

    fn snapshot_from(n: usize, edges: &[(usize, usize)]) -> Snapshot {
        let mut m = Matrix::zeros(n, n);
        for &(i, j) in edges {
            m.set(i, j, 1.0);
        }
        Snapshot { adjacency: m, index: 0 }
    }

    pub(crate) fn random_window(n: usize, window_len: usize, seed: u64) -> SampleWindow {
        let mut rng = SeededRng::new(seed);
        let mk = |rng: &mut SeededRng| {
            let mut m = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.next_bool(0.3) {
                        m.set(i, j, 1.0);
                    }
                }
            }
            Snapshot { adjacency: m, index: 0 }
        };
        SampleWindow {
            inputs: (0..window_len).map(|_| mk(&mut rng)).collect(),
            target: mk(&mut rng),
            t: window_len,
        }
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let config = ModelConfig {
            n: 274,
            window_len: 10,
            encoder_dims: vec![128],
            lstm_dims: vec![256, 256],
            decoder_dims: vec![274],
        };
        let a = init_model(&config, 1).unwrap();
        let b = init_model(&config, 1).unwrap();
        for (x, y) in a.all_matrices().iter().zip(b.all_matrices().iter()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.encoder[0].w.rows, 128);
        assert_eq!(a.encoder[0].w.cols, 274);
        assert_eq!(a.lstm[0].w_f.rows, 256);
        assert_eq!(a.lstm[0].w_f.cols, 256 + 128);
        assert_eq!(a.lstm[1].w_f.cols, 256 + 256);
        assert_eq!(a.decoder[0].w.rows, 274);
        // Forget bias starts at 1, other biases at 0.
        assert!(a.lstm[0].b_f.data.iter().all(|&v| v == 1.0));
        assert!(a.lstm[0].b_i.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lkml_table_dims_validate() {
        let config = ModelConfig {
            n: 2210,
            window_len: 10,
            encoder_dims: vec![1024, 512],
            lstm_dims: vec![384, 384],
            decoder_dims: vec![512, 2210],
        };
        assert!(config.validate().is_ok());
        let bad = ModelConfig { decoder_dims: vec![512, 2211], ..config };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn encode_zero_adjacency_gives_zero_features() {
        let config = toy_config();
        let mut params = init_model(&config, 3).unwrap();
        for l in &mut params.encoder {
            l.b = Matrix::zeros(l.b.rows, 1);
        }
        let window = SampleWindow {
            inputs: vec![snapshot_from(6, &[]); 3],
            target: snapshot_from(6, &[]),
            t: 3,
        };
        let features = encode(&params, &window).unwrap();
        assert_eq!(features.len(), 3);
        assert!(features.iter().all(|f| f.data.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn encode_matches_naive_loop_oracle() {
        let config = toy_config();
        let params = init_model(&config, 4).unwrap();
        let window = random_window(6, 3, 9);
        let features = encode(&params, &window).unwrap();
        let layer = &params.encoder[0];
        for (t, f) in features.iter().enumerate() {
            let a = &window.inputs[t].adjacency;
            for i in 0..6 {
                for j in 0..4 {
                    let mut pre = layer.b.get(j, 0);
                    for k in 0..6 {
                        pre += a.get(i, k) * layer.w.get(j, k);
                    }
                    let want = pre.max(0.0);
                    assert!((f.get(i, j) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lstm_step_zero_params_closed_form() {
        let cell = LstmCell {
            w_f: Matrix::zeros(2, 5),
            w_i: Matrix::zeros(2, 5),
            w_c: Matrix::zeros(2, 5),
            w_o: Matrix::zeros(2, 5),
            b_f: Matrix::zeros(2, 1),
            b_i: Matrix::zeros(2, 1),
            b_c: Matrix::zeros(2, 1),
            b_o: Matrix::zeros(2, 1),
            input_dim: 3,
            hidden_dim: 2,
        };
        let state = LstmState {
            h: Matrix::zeros(1, 2),
            c: Matrix::from_vec(1, 2, vec![0.8, -0.4]).unwrap(),
        };
        let x = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let (next, step) = lstm_step(&cell, &state, &x).unwrap();
        // sigma(0)=0.5 and tanh(0)=0: C_t = 0.5*C_{t-1}, h_t = 0.5*tanh(C_t).
        assert!(step.f.data.iter().all(|&v| v == 0.5));
        assert!(step.i.data.iter().all(|&v| v == 0.5));
        assert!(step.o.data.iter().all(|&v| v == 0.5));
        assert!(step.g.data.iter().all(|&v| v == 0.0));
        assert!((next.c.get(0, 0) - 0.4).abs() < 1e-12);
        assert!((next.c.get(0, 1) + 0.2).abs() < 1e-12);
        assert!((next.h.get(0, 0) - 0.5 * 0.4f64.tanh()).abs() < 1e-12);
    }

    #[test]
    fn lstm_step_saturated_forget_gate_preserves_cell() {
        let config = toy_config();
        let params = init_model(&config, 11).unwrap();
        let mut cell = params.lstm[0].clone();
        cell.b_f = Matrix::from_fn(cell.hidden_dim, 1, |_, _| 50.0);
        cell.w_i = Matrix::zeros(cell.hidden_dim, cell.w_i.cols);
        cell.b_i = Matrix::from_fn(cell.hidden_dim, 1, |_, _| -50.0);
        let state = LstmState {
            h: Matrix::zeros(1, cell.hidden_dim),
            c: Matrix::from_fn(1, cell.hidden_dim, |_, j| 0.3 * (j as f64 + 1.0)),
        };
        let x = Matrix::from_fn(1, cell.input_dim, |_, j| 0.1 * j as f64);
        let (next, _) = lstm_step(&cell, &state, &x).unwrap();
        for j in 0..cell.hidden_dim {
            assert!((next.c.get(0, j) - state.c.get(0, j)).abs() < 1e-6);
        }
    }

    #[test]
    fn gate_ranges() {
        let config = toy_config();
        let params = init_model(&config, 5).unwrap();
        let window = random_window(6, 3, 77);
        let (_, trace) = forward(&params, &window).unwrap();
        for layer in &trace.lstm {
            for step in layer {
                for v in step.f.data.iter().chain(&step.i.data).chain(&step.o.data) {
                    assert!(*v > 0.0 && *v < 1.0);
                }
                for v in &step.g.data {
                    assert!(*v > -1.0 && *v < 1.0);
                }
            }
        }
    }

    #[test]
    fn stacked_lstm_degenerate_chain_is_single_step() {
        let config = ModelConfig {
            n: 4,
            window_len: 1,
            encoder_dims: vec![3],
            lstm_dims: vec![5],
            decoder_dims: vec![4],
        };
        let params = init_model(&config, 6).unwrap();
        let feature = Matrix::from_fn(4, 3, |i, j| 0.1 * (i + j) as f64);
        let h = stacked_lstm_forward(&params.lstm, &[feature.clone()]).unwrap();
        let (state, _) =
            lstm_step(&params.lstm[0], &LstmState::zeros(4, 5), &feature).unwrap();
        assert_eq!(h, state.h);
    }

    #[test]
    fn stacked_lstm_is_order_sensitive() {
        let config = toy_config();
        let params = init_model(&config, 8).unwrap();
        let window = random_window(6, 3, 123);
        let features = encode(&params, &window).unwrap();
        let h_fwd = stacked_lstm_forward(&params.lstm, &features).unwrap();
        let reversed: Vec<Matrix> = features.iter().rev().cloned().collect();
        let h_rev = stacked_lstm_forward(&params.lstm, &reversed).unwrap();
        assert_ne!(h_fwd, h_rev);
    }

    #[test]
    fn stacked_lstm_zero_everything_closed_form_n2() {
        // With zero params and zero features, every gate is 0.5 and g = 0,
        // so per entry: c1 = 0, h1 = 0; c2 = 0, h2 = 0. The non-trivial
        // check uses forget bias 1 and nonzero initial cell state instead.
        let mut cell = LstmCell {
            w_f: Matrix::zeros(1, 2),
            w_i: Matrix::zeros(1, 2),
            w_c: Matrix::zeros(1, 2),
            w_o: Matrix::zeros(1, 2),
            b_f: Matrix::zeros(1, 1),
            b_i: Matrix::zeros(1, 1),
            b_c: Matrix::zeros(1, 1),
            b_o: Matrix::zeros(1, 1),
            input_dim: 1,
            hidden_dim: 1,
        };
        cell.b_c = Matrix::from_vec(1, 1, vec![1.0]).unwrap(); // g = tanh(1)
        let feats = vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)];
        let h = stacked_lstm_forward(std::slice::from_ref(&cell), &feats).unwrap();
        // Analytic unroll: c1 = 0.5*tanh(1); c2 = 0.5*c1 + 0.5*tanh(1);
        // h2 = 0.5*tanh(c2).
        let g = 1.0f64.tanh();
        let c1 = 0.5 * g;
        let c2 = 0.5 * c1 + 0.5 * g;
        assert!((h.get(0, 0) - 0.5 * c2.tanh()).abs() < 1e-12);
    }

    #[test]
    fn decode_zero_h_gives_half_scores() {
        let config = toy_config();
        let params = init_model(&config, 13).unwrap();
        let h = Matrix::zeros(6, 5);
        let scores = decode(&params, &h).unwrap();
        assert_eq!(scores.cols, 6);
        assert!(scores.data.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn decode_output_strictly_inside_unit_interval() {
        let config = toy_config();
        let params = init_model(&config, 14).unwrap();
        let h = Matrix::from_fn(6, 5, |i, j| (i as f64 - j as f64) * 3.0);
        let scores = decode(&params, &h).unwrap();
        assert!(scores.data.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn forward_deterministic_and_trace_replay() {
        let config = toy_config();
        let params = init_model(&config, 15).unwrap();
        let window = random_window(6, 3, 31);
        let (s1, trace) = forward(&params, &window).unwrap();
        let (s2, _) = forward(&params, &window).unwrap();
        assert_eq!(s1, s2);
        let replay = decode(&params, &trace.h_final).unwrap();
        assert_eq!(replay, s1);
    }

    #[test]
    fn forward_matches_straight_line_reimplementation() {
        // Independent oracle: unrolls the whole network with scalar loops.
        let config = toy_config();
        let params = init_model(&config, 16).unwrap();
        let window = random_window(6, 3, 41);
        let (scores, _) = forward(&params, &window).unwrap();

        let n = 6;
        let enc = &params.encoder[0];
        let cell = &params.lstm[0];
        let dec = &params.decoder[0];
        let d = cell.hidden_dim;
        let mut h = vec![vec![0.0; d]; n];
        let mut c = vec![vec![0.0; d]; n];
        for snap in &window.inputs {
            // encoder
            let mut feat = vec![vec![0.0; 4]; n];
            for i in 0..n {
                for j in 0..4 {
                    let mut acc = enc.b.get(j, 0);
                    for k in 0..n {
                        acc += snap.adjacency.get(i, k) * enc.w.get(j, k);
                    }
                    feat[i][j] = acc.max(0.0);
                }
            }
            // lstm
            for i in 0..n {
                let mut z = h[i].clone();
                z.extend(feat[i].iter());
                let gate = |w: &Matrix, b: &Matrix, row: usize| -> f64 {
                    let mut acc = b.get(row, 0);
                    for (k, zv) in z.iter().enumerate() {
                        acc += w.get(row, k) * zv;
                    }
                    acc
                };
                let mut nh = vec![0.0; d];
                let mut nc = vec![0.0; d];
                for r in 0..d {
                    let f = sigmoid_scalar(gate(&cell.w_f, &cell.b_f, r));
                    let inp = sigmoid_scalar(gate(&cell.w_i, &cell.b_i, r));
                    let g = gate(&cell.w_c, &cell.b_c, r).tanh();
                    let o = sigmoid_scalar(gate(&cell.w_o, &cell.b_o, r));
                    nc[r] = f * c[i][r] + inp * g;
                    nh[r] = o * nc[r].tanh();
                }
                h[i] = nh;
                c[i] = nc;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut acc = dec.b.get(j, 0);
                for k in 0..d {
                    acc += h[i][k] * dec.w.get(j, k);
                }
                let want = sigmoid_scalar(acc);
                assert!(
                    (scores.get(i, j) - want).abs() < 1e-12,
                    "mismatch at ({i},{j}): {} vs {want}",
                    scores.get(i, j)
                );
            }
        }
    }

    #[test]
    fn binarize_rules() {
        let mut scores = Matrix::from_fn(3, 3, |_, _| 0.4);
        let snap = binarize(&scores, BINARIZE_THRESHOLD);
        assert_eq!(snap.edge_count(), 0);
        scores.set(0, 1, 0.5); // exactly at threshold counts as a link
        scores.set(1, 1, 0.9); // diagonal stays zero
        let snap = binarize(&scores, BINARIZE_THRESHOLD);
        assert!(snap.has_edge(0, 1));
        assert_eq!(snap.adjacency.get(1, 1), 0.0);
    }

    #[test]
    fn embed_shape_and_consistency() {
        let config = toy_config();
        let params = init_model(&config, 17).unwrap();
        let window = random_window(6, 3, 55);
        let e = embed(&params, &window).unwrap();
        assert_eq!((e.rows, e.cols), (6, 5));
        let (_, trace) = forward(&params, &window).unwrap();
        assert_eq!(e, trace.h_final);
    }

    #[test]
    fn automorphic_twin_nodes_get_equal_embeddings() {
        // Nodes 0 and 1 have identical adjacency rows (and identical columns),
        // so row-shared layers must embed them identically.
        let n = 5;
        let edges = [(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)];
        let snap = snapshot_from(n, &edges);
        let window = SampleWindow {
            inputs: vec![snap.clone(), snap.clone(), snap.clone()],
            target: snap,
            t: 3,
        };
        let config = ModelConfig {
            n,
            window_len: 3,
            encoder_dims: vec![4],
            lstm_dims: vec![3],
            decoder_dims: vec![n],
        };
        let params = init_model(&config, 19).unwrap();
        let e = embed(&params, &window).unwrap();
        for j in 0..3 {
            assert!((e.get(0, j) - e.get(1, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn row_permutation_equivariance() {
        // Every layer acts per node row, so permuting the rows of all input
        // snapshots permutes the score rows identically.
        let n = 8;
        let config = ModelConfig {
            n,
            window_len: 2,
            encoder_dims: vec![5],
            lstm_dims: vec![4],
            decoder_dims: vec![n],
        };
        let params = init_model(&config, 23).unwrap();
        let window = random_window(n, 2, 61);
        let perm: Vec<usize> = vec![3, 1, 7, 0, 5, 2, 6, 4];
        let permute_rows =
            |m: &Matrix| Matrix::from_fn(n, n, |i, j| m.get(perm[i], j));
        let permuted = SampleWindow {
            inputs: window
                .inputs
                .iter()
                .map(|s| Snapshot { adjacency: permute_rows(&s.adjacency), index: s.index })
                .collect(),
            target: window.target.clone(),
            t: window.t,
        };
        let (base, _) = forward(&params, &window).unwrap();
        let (scores, _) = forward(&params, &permuted).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((scores.get(i, j) - base.get(perm[i], j)).abs() < 1e-12);
            }
        }
        // Nodes with identical adjacency rows get identical score rows.
        let window_dup = {
            let mut w = random_window(n, 2, 62);
            for s in &mut w.inputs {
                for j in 0..n {
                    let v = s.adjacency.get(0, j);
                    s.adjacency.set(1, j, v);
                }
            }
            w
        };
        let (dup_scores, _) = forward(&params, &window_dup).unwrap();
        for j in 0..n {
            assert!((dup_scores.get(0, j) - dup_scores.get(1, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let config = toy_config();
        let params = init_model(&config, 29).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&path, &params, &config, 29, 7).unwrap();
        let (loaded, cfg, seed, epoch) = load_checkpoint(&path).unwrap();
        assert_eq!(cfg, config);
        assert_eq!(seed, 29);
        assert_eq!(epoch, 7);
        for (a, b) in params.all_matrices().iter().zip(loaded.all_matrices().iter()) {
            assert_eq!(a, b);
        }
    }
}
