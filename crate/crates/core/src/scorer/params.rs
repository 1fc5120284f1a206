use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::ModelConfig;
use crate::scalar::{Real, Score};

/// One pre-norm transformer layer. Vectors are stored as `1 x k` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub ln1_gain: Array2<T>,
    pub ln1_bias: Array2<T>,
    pub wq: Array2<T>,
    pub wk: Array2<T>,
    pub wv: Array2<T>,
    pub wo: Array2<T>,
    pub bo: Array2<T>,
    pub ln2_gain: Array2<T>,
    pub ln2_bias: Array2<T>,
    pub w1: Array2<T>,
    pub b1: Array2<T>,
    pub w2: Array2<T>,
    pub b2: Array2<T>,
}

/// Every trainable tensor of the scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    /// Row 0 is the unknown word.
    pub words: Array2<T>,
    pub positions: Array2<T>,
    /// One row per (symbol, replica index), in node-set order.
    pub symbols: Array2<T>,
    /// Rows for `Root` and `Unused`.
    pub special: Array2<T>,
    pub layers: Vec<LayerParams<T>>,
    pub parent_proj: Array2<T>,
    pub child_proj: Array2<T>,
    pub u_mat: Array2<T>,
    pub u_vec: Array2<T>,
}

const LAYER_NAMES: [&str; 13] = [
    "ln1_gain", "ln1_bias", "wq", "wk", "wv", "wo", "bo", "ln2_gain", "ln2_bias", "w1", "b1",
    "w2", "b2",
];

impl<T: Real> LayerParams<T> {
    fn zeros(c: &ModelConfig) -> Self {
        let (d, f) = (c.dim, c.ffn_dim);
        let z = Array2::zeros;
        LayerParams {
            ln1_gain: Array2::ones((1, d)),
            ln1_bias: z((1, d)),
            wq: z((d, d)),
            wk: z((d, d)),
            wv: z((d, d)),
            wo: z((d, d)),
            bo: z((1, d)),
            ln2_gain: Array2::ones((1, d)),
            ln2_bias: z((1, d)),
            w1: z((d, f)),
            b1: z((1, f)),
            w2: z((f, d)),
            b2: z((1, d)),
        }
    }

    fn tensors(&self) -> [&Array2<T>; 13] {
        [
            &self.ln1_gain, &self.ln1_bias, &self.wq, &self.wk, &self.wv, &self.wo, &self.bo,
            &self.ln2_gain, &self.ln2_bias, &self.w1, &self.b1, &self.w2, &self.b2,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Array2<T>; 13] {
        [
            &mut self.ln1_gain, &mut self.ln1_bias, &mut self.wq, &mut self.wk, &mut self.wv,
            &mut self.wo, &mut self.bo, &mut self.ln2_gain, &mut self.ln2_bias, &mut self.w1,
            &mut self.b1, &mut self.w2, &mut self.b2,
        ]
    }
}

impl<T: Real> Params<T> {
    /// Layer norms at identity, everything else zero. With these weights the
    /// encoder passes its input embeddings through unchanged.
    pub fn zeros(c: &ModelConfig, words: usize, symbols: usize) -> Self {
        let (d, b) = (c.dim, c.biaffine_dim);
        Params {
            words: Array2::zeros((words + 1, d)),
            positions: Array2::zeros((c.max_positions, d)),
            symbols: Array2::zeros((symbols, d)),
            special: Array2::zeros((2, d)),
            layers: (0..c.layers).map(|_| LayerParams::zeros(c)).collect(),
            parent_proj: Array2::zeros((d, b)),
            child_proj: Array2::zeros((d, b)),
            u_mat: Array2::zeros((b, b)),
            u_vec: Array2::zeros((1, b)),
        }
    }

    /// Gaussian initialization scaled by fan-in; biases zero, gains one.
    pub fn init(c: &ModelConfig, words: usize, symbols: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(c, words, symbols);
        let mut fill = |a: &mut Array2<T>, std: f64| {
            let normal = Normal::new(0.0, std).expect("valid deviation");
            a.mapv_inplace(|_| T::lit(normal.sample(rng)));
        };
        let d = c.dim as f64;
        fill(&mut p.words, 0.5);
        fill(&mut p.positions, 0.5);
        fill(&mut p.symbols, 0.5);
        fill(&mut p.special, 0.5);
        for l in &mut p.layers {
            for w in [&mut l.wq, &mut l.wk, &mut l.wv, &mut l.wo, &mut l.w1] {
                fill(w, 1.0 / d.sqrt());
            }
            fill(&mut l.w2, 1.0 / (c.ffn_dim as f64).sqrt());
        }
        fill(&mut p.parent_proj, 1.0 / d.sqrt());
        fill(&mut p.child_proj, 1.0 / d.sqrt());
        fill(&mut p.u_mat, 1.0 / (c.biaffine_dim as f64).sqrt());
        p
    }

    /// Same shapes, all zero. Used for gradients and optimizer moments.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["words", "positions", "symbols", "special"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for i in 0..self.layers.len() {
            names.extend(LAYER_NAMES.iter().map(|n| format!("layer{i}.{n}")));
        }
        names.extend(["parent_proj", "child_proj", "u_mat", "u_vec"].map(String::from));
        names
    }

    pub fn tensors(&self) -> Vec<&Array2<T>> {
        let mut out = vec![&self.words, &self.positions, &self.symbols, &self.special];
        for l in &self.layers {
            out.extend(l.tensors());
        }
        out.extend([&self.parent_proj, &self.child_proj, &self.u_mat, &self.u_vec]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<T>> {
        let mut out = vec![
            &mut self.words,
            &mut self.positions,
            &mut self.symbols,
            &mut self.special,
        ];
        for l in &mut self.layers {
            out.extend(l.tensors_mut());
        }
        out.extend([
            &mut self.parent_proj,
            &mut self.child_proj,
            &mut self.u_mat,
            &mut self.u_vec,
        ]);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn squared_norm(&self) -> T {
        self.tensors()
            .iter()
            .map(|t| t.iter().map(|&x| x * x).sum::<T>())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn scale(&mut self, k: T) {
        for t in self.tensors_mut() {
            t.mapv_inplace(|x| x * k);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            *a += b;
        }
    }

    pub fn cast<U: Real>(&self) -> Params<U> {
        let c = |a: &Array2<T>| a.mapv(|x| U::lit(Score::to_f64(x)));
        Params {
            words: c(&self.words),
            positions: c(&self.positions),
            symbols: c(&self.symbols),
            special: c(&self.special),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    ln1_gain: c(&l.ln1_gain),
                    ln1_bias: c(&l.ln1_bias),
                    wq: c(&l.wq),
                    wk: c(&l.wk),
                    wv: c(&l.wv),
                    wo: c(&l.wo),
                    bo: c(&l.bo),
                    ln2_gain: c(&l.ln2_gain),
                    ln2_bias: c(&l.ln2_bias),
                    w1: c(&l.w1),
                    b1: c(&l.b1),
                    w2: c(&l.w2),
                    b2: c(&l.b2),
                })
                .collect(),
            parent_proj: c(&self.parent_proj),
            child_proj: c(&self.child_proj),
            u_mat: c(&self.u_mat),
            u_vec: c(&self.u_vec),
        }
    }
}
