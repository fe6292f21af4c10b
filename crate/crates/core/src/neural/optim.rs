//! Gradient-descent optimizers over flat parameter slices.

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over parameter blocks and their gradients.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        debug_assert_eq!(params.len(), grads.len());
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = params.iter().map(|p| vec![0.0; p.len()]).collect();
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / b1t;
                let vhat = v[i] / b2t;
                p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

/// Plain stochastic gradient descent.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn new(lr: f64) -> Self {
        Sgd { lr }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        for (p, g) in params.iter_mut().zip(grads) {
            for i in 0..p.len() {
                p[i] -= self.lr * g[i];
            }
        }
    }
}

/// Either optimizer behind one interface.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Sgd(Sgd),
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        match self {
            Optimizer::Adam(a) => a.step(params, grads),
            Optimizer::Sgd(s) => s.step(params, grads),
        }
    }
}

/// Adam over one large flat parameter vector with sparse per-step gradients.
///
/// Entries whose gradient has always been zero have m = v = 0 and a zero
/// update, so only entries that have ever received gradient (the active set)
/// need touching. The result is bit-identical to dense Adam at a per-step
/// cost proportional to the active set.
#[derive(Debug, Clone)]
pub struct SparseAdam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    active: Vec<bool>,
    active_list: Vec<usize>,
    scratch: Vec<f64>,
}

impl SparseAdam {
    pub fn new(lr: f64, len: usize) -> Self {
        SparseAdam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            active: vec![false; len],
            active_list: Vec::new(),
            scratch: vec![0.0; len],
        }
    }

    /// One update; `grads` holds (flat index, gradient) pairs (duplicates
    /// accumulate).
    pub fn step(&mut self, params: &mut [f64], grads: &[(usize, f64)]) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        for (i, g) in grads {
            if !self.active[*i] {
                self.active[*i] = true;
                self.active_list.push(*i);
            }
            self.scratch[*i] += g;
        }
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for &i in &self.active_list {
            let g = self.scratch[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
        for (i, _) in grads {
            self.scratch[*i] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = vec![1.0, -1.0];
        let g = vec![0.5, -0.5];
        let mut adam = Adam::new(0.1);
        adam.step(&mut [&mut p], &[&g]);
        assert!(p[0] < 1.0);
        assert!(p[1] > -1.0);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = vec![1.0, 2.0];
        let g = vec![3.0, -4.0];
        let orig = p.clone();
        Adam::new(0.0).step(&mut [&mut p], &[&g]);
        assert_eq!(p, orig);
        Sgd::new(0.0).step(&mut [&mut p], &[&g]);
        assert_eq!(p, orig);
    }

    #[test]
    fn sparse_adam_matches_dense_adam() {
        let len = 64;
        let mut dense_p: Vec<f64> = (0..len).map(|i| (i as f64) * 0.01).collect();
        let mut sparse_p = dense_p.clone();
        let mut dense = Adam::new(0.05);
        let mut sparse = SparseAdam::new(0.05, len);

        // Three steps, each touching a few indices.
        let steps: Vec<Vec<(usize, f64)>> = vec![
            vec![(3, 1.0), (10, -2.0)],
            vec![(3, 0.5), (20, 0.25), (3, 0.5)],
            vec![(10, 1.0)],
        ];
        for step in &steps {
            let mut g = vec![0.0; len];
            for (i, v) in step {
                g[*i] += v;
            }
            dense.step(&mut [&mut dense_p], &[&g]);
            sparse.step(&mut sparse_p, step);
        }
        for i in 0..len {
            assert!(
                (dense_p[i] - sparse_p[i]).abs() == 0.0,
                "index {i}: {} vs {}",
                dense_p[i],
                sparse_p[i]
            );
        }
    }
}
