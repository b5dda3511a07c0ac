use rand::Rng;

/// LSTM gates in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Forget gate `f`.
    Forget,
    /// Candidate cell update `g̃` (tanh activation).
    Cell,
    /// Input gate `i`.
    Input,
    /// Output gate `o`.
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Cell, Gate::Input, Gate::Output];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Gate::Forget => "f",
            Gate::Cell => "g",
            Gate::Input => "i",
            Gate::Output => "o",
        }
    }
}

/// All trainable tensors of the network in one flat buffer.
///
/// Layout: input weights `W_k` (H×D, row-major) for each gate, recurrent
/// weights `U_k` (H×H), biases `b_k` (H), then readout weights `W_d` (H)
/// and readout bias `b_d`. The same type carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input_size: usize,
    hidden_size: usize,
    data: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        assert!(input_size > 0 && hidden_size > 0, "LSTM dimensions must be positive");
        let len = Self::param_count(input_size, hidden_size);
        LstmParams {
            input_size,
            hidden_size,
            data: vec![0.0; len],
        }
    }

    pub fn param_count(input_size: usize, hidden_size: usize) -> usize {
        let (d, h) = (input_size, hidden_size);
        4 * h * d + 4 * h * h + 4 * h + h + 1
    }

    /// Uniform(−1/√fan_in, 1/√fan_in) weights, forget bias 1, other biases 0.
    pub fn init<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let in_bound = 1.0 / (input_size as f64).sqrt();
        let rec_bound = 1.0 / (hidden_size as f64).sqrt();
        for gate in Gate::ALL {
            for w in p.w_mut(gate) {
                *w = rng.random_range(-in_bound..in_bound);
            }
        }
        for gate in Gate::ALL {
            for u in p.u_mut(gate) {
                *u = rng.random_range(-rec_bound..rec_bound);
            }
        }
        p.b_mut(Gate::Forget).fill(1.0);
        for w in p.readout_weights_mut() {
            *w = rng.random_range(-rec_bound..rec_bound);
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &LstmParams) -> bool {
        self.input_size == other.input_size && self.hidden_size == other.hidden_size
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn w_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let n = self.hidden_size * self.input_size;
        gate.index() * n..(gate.index() + 1) * n
    }

    fn u_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let base = 4 * self.hidden_size * self.input_size;
        let n = self.hidden_size * self.hidden_size;
        base + gate.index() * n..base + (gate.index() + 1) * n
    }

    fn b_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let h = self.hidden_size;
        let base = 4 * h * self.input_size + 4 * h * h;
        base + gate.index() * h..base + (gate.index() + 1) * h
    }

    fn readout_range(&self) -> std::ops::Range<usize> {
        let h = self.hidden_size;
        let base = 4 * h * self.input_size + 4 * h * h + 4 * h;
        base..base + h
    }

    pub fn w(&self, gate: Gate) -> &[f64] {
        &self.data[self.w_range(gate)]
    }

    pub fn w_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.w_range(gate);
        &mut self.data[r]
    }

    pub fn u(&self, gate: Gate) -> &[f64] {
        &self.data[self.u_range(gate)]
    }

    pub fn u_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.u_range(gate);
        &mut self.data[r]
    }

    pub fn b(&self, gate: Gate) -> &[f64] {
        &self.data[self.b_range(gate)]
    }

    pub fn b_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.b_range(gate);
        &mut self.data[r]
    }

    pub fn readout_weights(&self) -> &[f64] {
        &self.data[self.readout_range()]
    }

    pub fn readout_weights_mut(&mut self) -> &mut [f64] {
        let r = self.readout_range();
        &mut self.data[r]
    }

    pub fn readout_bias(&self) -> f64 {
        self.data[self.data.len() - 1]
    }

    pub fn readout_bias_mut(&mut self) -> &mut f64 {
        let last = self.data.len() - 1;
        &mut self.data[last]
    }

    /// Named tensors with their (rows, cols) shapes, in serialization order.
    pub fn tensors(&self) -> Vec<(String, usize, usize, &[f64])> {
        let (d, h) = (self.input_size, self.hidden_size);
        let mut out = Vec::with_capacity(14);
        for g in Gate::ALL {
            out.push((format!("W_{}", g.suffix()), h, d, self.w(g)));
        }
        for g in Gate::ALL {
            out.push((format!("U_{}", g.suffix()), h, h, self.u(g)));
        }
        for g in Gate::ALL {
            out.push((format!("b_{}", g.suffix()), 1, h, self.b(g)));
        }
        out.push(("W_d".to_string(), 1, h, self.readout_weights()));
        let last = self.data.len() - 1;
        out.push(("b_d".to_string(), 1, 1, &self.data[last..]));
        out
    }

    /// Mutable slice of a tensor by its serialized name.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = match name {
            "W_d" => self.readout_range(),
            "b_d" => self.data.len() - 1..self.data.len(),
            _ => {
                let (kind, suffix) = name.split_once('_')?;
                let gate = Gate::ALL.into_iter().find(|g| g.suffix() == suffix)?;
                match kind {
                    "W" => self.w_range(gate),
                    "U" => self.u_range(gate),
                    "b" => self.b_range(gate),
                    _ => return None,
                }
            }
        };
        Some(&mut self.data[range])
    }
}
