//! LSTM cell with backpropagation through time.
//!
//! Gate layout is [input, forget, cell, output] stacked in blocks of the
//! hidden size. Only the last hidden state is consumed downstream, so the
//! backward pass seeds BPTT from that state's gradient alone; input
//! gradients are not produced (the embedding layer is frozen).

use rand::Rng;

/// LSTM parameters: wx (4H x D), wh (4H x H), b (4H), all row-major.
#[derive(Debug, Clone)]
pub(crate) struct LstmCell {
    pub wx: Vec<f64>,
    pub wh: Vec<f64>,
    pub b: Vec<f64>,
    pub hidden: usize,
    pub in_dim: usize,
}

/// Per-step activations cached for BPTT.
pub(crate) struct LstmTrace {
    /// Gate activations per step: i, f, g, o (each `hidden` long).
    gates: Vec<[Vec<f64>; 4]>,
    /// Cell states per step.
    cells: Vec<Vec<f64>>,
    /// Hidden states per step.
    hiddens: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn last_hidden(&self, hidden: usize) -> Vec<f64> {
        self.hiddens
            .last()
            .cloned()
            .unwrap_or_else(|| vec![0.0; hidden])
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    pub fn new(in_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let scale_x = 1.0 / (in_dim as f64).sqrt();
        let scale_h = 1.0 / (hidden as f64).sqrt();
        let wx = (0..4 * hidden * in_dim)
            .map(|_| rng.gen_range(-scale_x..scale_x))
            .collect();
        let wh = (0..4 * hidden * hidden)
            .map(|_| rng.gen_range(-scale_h..scale_h))
            .collect();
        // Forget-gate bias starts at 1 so early gradients flow.
        let mut b = vec![0.0; 4 * hidden];
        for i in hidden..2 * hidden {
            b[i] = 1.0;
        }
        LstmCell {
            wx,
            wh,
            b,
            hidden,
            in_dim,
        }
    }

    pub fn param_count(&self) -> usize {
        self.wx.len() + self.wh.len() + self.b.len()
    }

    /// Runs the sequence, returning the trace (empty input yields an empty
    /// trace whose last hidden state is zero).
    pub fn forward(&self, xs: &[&[f64]]) -> LstmTrace {
        let h = self.hidden;
        let mut trace = LstmTrace {
            gates: Vec::with_capacity(xs.len()),
            cells: Vec::with_capacity(xs.len()),
            hiddens: Vec::with_capacity(xs.len()),
        };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in xs {
            let mut z = self.b.clone();
            for (j, xv) in x.iter().enumerate() {
                if *xv != 0.0 {
                    for r in 0..4 * h {
                        z[r] += self.wx[r * self.in_dim + j] * xv;
                    }
                }
            }
            for (j, hv) in h_prev.iter().enumerate() {
                if *hv != 0.0 {
                    for r in 0..4 * h {
                        z[r] += self.wh[r * h + j] * hv;
                    }
                }
            }
            let mut i_g = vec![0.0; h];
            let mut f_g = vec![0.0; h];
            let mut g_g = vec![0.0; h];
            let mut o_g = vec![0.0; h];
            let mut c = vec![0.0; h];
            let mut h_new = vec![0.0; h];
            for u in 0..h {
                i_g[u] = sigmoid(z[u]);
                f_g[u] = sigmoid(z[h + u]);
                g_g[u] = z[2 * h + u].tanh();
                o_g[u] = sigmoid(z[3 * h + u]);
                c[u] = f_g[u] * c_prev[u] + i_g[u] * g_g[u];
                h_new[u] = o_g[u] * c[u].tanh();
            }
            trace.gates.push([i_g, f_g, g_g, o_g]);
            trace.cells.push(c.clone());
            trace.hiddens.push(h_new.clone());
            h_prev = h_new;
            c_prev = c;
        }
        trace
    }

    /// BPTT from the gradient of the loss w.r.t. the last hidden state.
    /// Accumulates into gwx / gwh / gb (flat, same layout as the params).
    pub fn backward(
        &self,
        xs: &[&[f64]],
        trace: &LstmTrace,
        d_last_hidden: &[f64],
        gwx: &mut [f64],
        gwh: &mut [f64],
        gb: &mut [f64],
    ) {
        let h = self.hidden;
        let steps = xs.len();
        if steps == 0 {
            return;
        }
        let mut dh = d_last_hidden.to_vec();
        let mut dc = vec![0.0; h];
        for t in (0..steps).rev() {
            let [i_g, f_g, g_g, o_g] = &trace.gates[t];
            let c = &trace.cells[t];
            let c_prev_vec;
            let c_prev: &[f64] = if t == 0 {
                c_prev_vec = vec![0.0; h];
                &c_prev_vec
            } else {
                &trace.cells[t - 1]
            };
            let h_prev_vec;
            let h_prev: &[f64] = if t == 0 {
                h_prev_vec = vec![0.0; h];
                &h_prev_vec
            } else {
                &trace.hiddens[t - 1]
            };

            let mut dz = vec![0.0; 4 * h];
            let mut dc_prev = vec![0.0; h];
            for u in 0..h {
                let tanh_c = c[u].tanh();
                let d_o = dh[u] * tanh_c;
                let d_c = dc[u] + dh[u] * o_g[u] * (1.0 - tanh_c * tanh_c);
                let d_i = d_c * g_g[u];
                let d_g = d_c * i_g[u];
                let d_f = d_c * c_prev[u];
                dc_prev[u] = d_c * f_g[u];
                dz[u] = d_i * i_g[u] * (1.0 - i_g[u]);
                dz[h + u] = d_f * f_g[u] * (1.0 - f_g[u]);
                dz[2 * h + u] = d_g * (1.0 - g_g[u] * g_g[u]);
                dz[3 * h + u] = d_o * o_g[u] * (1.0 - o_g[u]);
            }
            let x = xs[t];
            let mut dh_prev = vec![0.0; h];
            for r in 0..4 * h {
                let d = dz[r];
                if d == 0.0 {
                    continue;
                }
                gb[r] += d;
                for (j, xv) in x.iter().enumerate() {
                    if *xv != 0.0 {
                        gwx[r * self.in_dim + j] += d * xv;
                    }
                }
                for j in 0..h {
                    if h_prev[j] != 0.0 {
                        gwh[r * h + j] += d * h_prev[j];
                    }
                    dh_prev[j] += self.wh[r * h + j] * d;
                }
            }
            dh = dh_prev;
            dc = dc_prev;
        }
    }
}
