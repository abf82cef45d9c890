use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, CellKind};
use crate::rng::StreamRng;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Glorot-style uniform init in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    fn glorot(rows: usize, cols: usize, rng: &mut StreamRng) -> Self {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(-a..=a)).collect(),
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Weights of one affine map feeding a gate or the plain recurrent unit:
/// `w_in · x + w_hid · h + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub w_in: Matrix,
    pub w_hid: Matrix,
    pub bias: Vec<f64>,
}

impl Gate {
    fn zeros(hidden: usize, input: usize) -> Self {
        Gate {
            w_in: Matrix::zeros(hidden, input),
            w_hid: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }

    fn init(hidden: usize, input: usize, bias: f64, rng: &mut StreamRng) -> Self {
        Gate {
            w_in: Matrix::glorot(hidden, input, rng),
            w_hid: Matrix::glorot(hidden, hidden, rng),
            bias: vec![bias; hidden],
        }
    }

    fn zeros_like(&self) -> Self {
        Gate::zeros(self.bias.len(), self.w_in.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Rnn {
        hidden: Gate,
    },
    Lstm {
        input: Gate,
        forget: Gate,
        cell: Gate,
        output: Gate,
    },
    Gru {
        update: Gate,
        reset: Gate,
        candidate: Gate,
    },
}

impl Cell {
    pub fn kind(&self) -> CellKind {
        match self {
            Cell::Rnn { .. } => CellKind::Rnn,
            Cell::Lstm { .. } => CellKind::Lstm,
            Cell::Gru { .. } => CellKind::Gru,
        }
    }

    /// Gates with their stable names, in checkpoint order.
    pub fn gates(&self) -> Vec<(&'static str, &Gate)> {
        match self {
            Cell::Rnn { hidden } => vec![("hidden", hidden)],
            Cell::Lstm {
                input,
                forget,
                cell,
                output,
            } => vec![
                ("input", input),
                ("forget", forget),
                ("cell", cell),
                ("output", output),
            ],
            Cell::Gru {
                update,
                reset,
                candidate,
            } => vec![("update", update), ("reset", reset), ("candidate", candidate)],
        }
    }

    pub fn gates_mut(&mut self) -> Vec<(&'static str, &mut Gate)> {
        match self {
            Cell::Rnn { hidden } => vec![("hidden", hidden)],
            Cell::Lstm {
                input,
                forget,
                cell,
                output,
            } => vec![
                ("input", input),
                ("forget", forget),
                ("cell", cell),
                ("output", output),
            ],
            Cell::Gru {
                update,
                reset,
                candidate,
            } => vec![("update", update), ("reset", reset), ("candidate", candidate)],
        }
    }
}

/// All weights of a one-layer recurrent classifier: the cell plus the
/// two-class readout. Readout row 0 is the fall class, row 1 no fall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub activation: Activation,
    pub cell: Cell,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

/// Named view of one parameter tensor.
pub struct Tensor<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: (usize, usize),
    pub values: &'a mut [f64],
}

pub const FALL: usize = 0;
pub const NO_FALL: usize = 1;

impl ModelParams {
    pub fn zeros(kind: CellKind, hidden: usize, input: usize, activation: Activation) -> Self {
        let g = || Gate::zeros(hidden, input);
        let cell = match kind {
            CellKind::Rnn => Cell::Rnn { hidden: g() },
            CellKind::Lstm => Cell::Lstm {
                input: g(),
                forget: g(),
                cell: g(),
                output: g(),
            },
            CellKind::Gru => Cell::Gru {
                update: g(),
                reset: g(),
                candidate: g(),
            },
        };
        ModelParams {
            activation,
            cell,
            w_out: Matrix::zeros(2, hidden),
            b_out: vec![0.0; 2],
        }
    }

    /// Scaled uniform weights, zero biases except the LSTM forget gate.
    pub fn init(
        kind: CellKind,
        hidden: usize,
        input: usize,
        activation: Activation,
        forget_bias: f64,
        rng: &mut StreamRng,
    ) -> Self {
        let cell = match kind {
            CellKind::Rnn => Cell::Rnn {
                hidden: Gate::init(hidden, input, 0.0, rng),
            },
            CellKind::Lstm => Cell::Lstm {
                input: Gate::init(hidden, input, 0.0, rng),
                forget: Gate::init(hidden, input, forget_bias, rng),
                cell: Gate::init(hidden, input, 0.0, rng),
                output: Gate::init(hidden, input, 0.0, rng),
            },
            CellKind::Gru => Cell::Gru {
                update: Gate::init(hidden, input, 0.0, rng),
                reset: Gate::init(hidden, input, 0.0, rng),
                candidate: Gate::init(hidden, input, 0.0, rng),
            },
        };
        ModelParams {
            activation,
            cell,
            w_out: Matrix::glorot(2, hidden, rng),
            b_out: vec![0.0; 2],
        }
    }

    pub fn kind(&self) -> CellKind {
        self.cell.kind()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_out.cols
    }

    pub fn input_size(&self) -> usize {
        self.cell.gates()[0].1.w_in.cols
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, g) in z.cell.gates_mut() {
            *g = g.zeros_like();
        }
        z.w_out.data.fill(0.0);
        z.b_out.fill(0.0);
        z
    }

    pub fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (name, g) in self.cell.gates() {
            out.push(Tensor {
                name: format!("{name}.w_in"),
                shape: (g.w_in.rows, g.w_in.cols),
                values: &g.w_in.data,
            });
            out.push(Tensor {
                name: format!("{name}.w_hid"),
                shape: (g.w_hid.rows, g.w_hid.cols),
                values: &g.w_hid.data,
            });
            out.push(Tensor {
                name: format!("{name}.bias"),
                shape: (g.bias.len(), 1),
                values: &g.bias,
            });
        }
        out.push(Tensor {
            name: "readout.w".into(),
            shape: (self.w_out.rows, self.w_out.cols),
            values: &self.w_out.data,
        });
        out.push(Tensor {
            name: "readout.bias".into(),
            shape: (self.b_out.len(), 1),
            values: &self.b_out,
        });
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        for (name, g) in self.cell.gates_mut() {
            out.push(TensorMut {
                name: format!("{name}.w_in"),
                shape: (g.w_in.rows, g.w_in.cols),
                values: &mut g.w_in.data,
            });
            out.push(TensorMut {
                name: format!("{name}.w_hid"),
                shape: (g.w_hid.rows, g.w_hid.cols),
                values: &mut g.w_hid.data,
            });
            let n = g.bias.len();
            out.push(TensorMut {
                name: format!("{name}.bias"),
                shape: (n, 1),
                values: &mut g.bias,
            });
        }
        out.push(TensorMut {
            name: "readout.w".into(),
            shape: (self.w_out.rows, self.w_out.cols),
            values: &mut self.w_out.data,
        });
        let n = self.b_out.len();
        out.push(TensorMut {
            name: "readout.bias".into(),
            shape: (n, 1),
            values: &mut self.b_out,
        });
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.values.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.values.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.values.iter_mut().zip(b.values) {
                *x += scale * y;
            }
        }
    }
}
