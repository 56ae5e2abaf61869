use std::io::{Read, Write};

use rand::Rng;

use crate::domain::NUM_ACTIONS;
use crate::error::{Error, Result};

/// Two-layer action-value network: `q = W2 · relu(W1 · x + b1) + b2`.
///
/// Parameters live in one flat vector laid out as `W1` (hidden × input, row
/// major), `b1`, `W2` (actions × hidden, row major), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Hidden activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub hidden: Vec<f64>,
    pub q: [f64; NUM_ACTIONS],
}

impl QNetwork {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            params: vec![0.0; Self::param_count(input, hidden)],
        }
    }

    /// Uniform fan-in scaled initialisation; output biases start at zero.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = Self::zeros(input, hidden);
        let a1 = (6.0 / input as f64).sqrt();
        let a2 = (6.0 / (hidden + NUM_ACTIONS) as f64).sqrt();
        let (w1, b1, w2, _) = net.offsets();
        for p in &mut net.params[w1..b1] {
            *p = rng.gen_range(-a1..a1);
        }
        for p in &mut net.params[w2..w2 + NUM_ACTIONS * hidden] {
            *p = rng.gen_range(-a2..a2);
        }
        net
    }

    pub fn param_count(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + NUM_ACTIONS * hidden + NUM_ACTIONS
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let b1 = self.hidden * self.input;
        let w2 = b1 + self.hidden;
        let b2 = w2 + NUM_ACTIONS * self.hidden;
        (0, b1, w2, b2)
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn same_shape(&self, other: &QNetwork) -> bool {
        self.input == other.input && self.hidden == other.hidden
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::InvalidInput(format!(
                "state encoding has length {}, network expects {}",
                x.len(),
                self.input
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<[f64; NUM_ACTIONS]> {
        Ok(self.forward_cached(x)?.q)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check(x)?;
        let (_, b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut hidden = vec![0.0; self.hidden];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &p[j * self.input..(j + 1) * self.input];
            let z = p[b1 + j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *h = z.max(0.0);
        }
        let mut q = [0.0; NUM_ACTIONS];
        for (a, qa) in q.iter_mut().enumerate() {
            let row = &p[w2 + a * self.hidden..w2 + (a + 1) * self.hidden];
            *qa = p[b2 + a] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        Ok(ForwardCache { hidden, q })
    }

    /// Accumulates into `grad` the parameter gradient for output gradient
    /// `dq` at input `x`.
    pub fn backward(&self, x: &[f64], cache: &ForwardCache, dq: &[f64; NUM_ACTIONS], grad: &mut [f64]) {
        let (_, b1, w2, b2) = self.offsets();
        let p = &self.params;
        let mut dh = vec![0.0; self.hidden];
        for (a, &g) in dq.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad[b2 + a] += g;
            let base = w2 + a * self.hidden;
            for j in 0..self.hidden {
                grad[base + j] += g * cache.hidden[j];
                dh[j] += g * p[base + j];
            }
        }
        for j in 0..self.hidden {
            // relu'(z) taken as 0 at z = 0
            if cache.hidden[j] <= 0.0 || dh[j] == 0.0 {
                continue;
            }
            grad[b1 + j] += dh[j];
            let row = &mut grad[j * self.input..(j + 1) * self.input];
            for (g, v) in row.iter_mut().zip(x) {
                *g += dh[j] * v;
            }
        }
    }

    pub fn copy_from(&mut self, other: &QNetwork) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::InvalidInput("network shapes differ".into()));
        }
        self.params.copy_from_slice(&other.params);
        Ok(())
    }

    /// Writes `QNET`, version `u32`, input/hidden/output sizes as `u64`, then
    /// every parameter as little-endian `f64` in layout order.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"QNET")?;
        w.write_all(&1u32.to_le_bytes())?;
        for n in [self.input, self.hidden, NUM_ACTIONS] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"QNET" {
            return Err(Error::InvalidInput("not a network parameter file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(Error::InvalidInput("unsupported parameter file version".into()));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            *d = u64::from_le_bytes(b8) as usize;
        }
        if dims[2] != NUM_ACTIONS {
            return Err(Error::InvalidInput(format!("{} outputs, expected {NUM_ACTIONS}", dims[2])));
        }
        let mut net = Self::zeros(dims[0], dims[1]);
        for p in &mut net.params {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)?;
            *p = f64::from_le_bytes(b8);
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite parameter".into()));
        }
        Ok(net)
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_give_biases() {
        let mut net = QNetwork::zeros(3, 4);
        let n = net.params().len();
        for (a, p) in net.params_mut()[n - NUM_ACTIONS..].iter_mut().enumerate() {
            *p = a as f64;
        }
        let q = net.forward(&[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(q.to_vec(), (0..NUM_ACTIONS).map(|a| a as f64).collect::<Vec<_>>());
    }

    #[test]
    fn dimension_mismatch() {
        let net = QNetwork::zeros(3, 4);
        assert!(matches!(net.forward(&[0.0; 2]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let net = QNetwork::new(5, 7, &mut ChaCha8Rng::seed_from_u64(1));
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 24 + 8 * net.params().len());
        assert_eq!(QNetwork::load(&buf[..]).unwrap(), net);
    }

    #[test]
    fn argmax_ties_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 11]), 0);
    }
}
