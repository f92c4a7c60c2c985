use serde::{Deserialize, Serialize};

/// Dense square table indexed by photon numbers `(k, l)` in `0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonTable {
    n_max: usize,
    data: Vec<f64>,
}

impl PhotonTable {
    pub fn zeros(n_max: usize) -> Self {
        let dim = n_max + 1;
        Self { n_max, data: vec![0.0; dim * dim] }
    }

    pub fn from_fn(n_max: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let dim = n_max + 1;
        let mut data = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            for l in 0..dim {
                data.push(f(k, l));
            }
        }
        Self { n_max, data }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.data[k * (self.n_max + 1) + l]
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        let dim = self.n_max + 1;
        self.data[k * dim + l] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Row-major nested copy, handy for serialization and Python.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n_max + 1).map(|r| r.to_vec()).collect()
    }
}
