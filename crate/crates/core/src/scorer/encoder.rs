//! Joint transformer encoding of all nodes of a query, with a hand-written
//! backward pass.

use ndarray::{s, Array2, Axis, Zip};
use rand::{Rng, RngCore};

use super::config::ModelConfig;
use super::params::{LayerParams, Params};
use crate::scalar::Real;

const LN_EPS: f64 = 1e-5;

/// Embedding lookup key of one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeInput {
    /// `word` indexes the word table, 0 being the unknown word.
    Token { word: usize, position: usize },
    /// Row of the symbol-replica table.
    Symbol(usize),
    Root,
    Unused,
}

struct LnCache<T> {
    xhat: Array2<T>,
    inv_std: Vec<T>,
}

pub(crate) struct LayerCache<T> {
    ln1: LnCache<T>,
    a: Array2<T>,
    q: Array2<T>,
    k: Array2<T>,
    v: Array2<T>,
    probs: Vec<Array2<T>>,
    o: Array2<T>,
    drop1: Option<Array2<T>>,
    ln2: LnCache<T>,
    b: Array2<T>,
    h: Array2<T>,
    g: Array2<T>,
    drop2: Option<Array2<T>>,
}

/// Input embeddings, one row per node.
pub fn embed<T: Real>(p: &Params<T>, inputs: &[NodeInput]) -> Array2<T> {
    let d = p.words.ncols();
    let last_pos = p.positions.nrows() - 1;
    let mut x = Array2::zeros((inputs.len(), d));
    for (i, input) in inputs.iter().enumerate() {
        let mut row = x.row_mut(i);
        match *input {
            NodeInput::Token { word, position } => {
                row.assign(&p.words.row(word));
                row += &p.positions.row(position.min(last_pos));
            }
            NodeInput::Symbol(r) => row.assign(&p.symbols.row(r)),
            NodeInput::Root => row.assign(&p.special.row(0)),
            NodeInput::Unused => row.assign(&p.special.row(1)),
        }
    }
    x
}

/// Contextualized node encodings in evaluation mode (no dropout).
pub fn encode<T: Real>(p: &Params<T>, c: &ModelConfig, inputs: &[NodeInput]) -> Array2<T> {
    forward(p, c, inputs, None).0
}

pub(crate) fn forward<T: Real>(
    p: &Params<T>,
    c: &ModelConfig,
    inputs: &[NodeInput],
    mut rng: Option<&mut (dyn RngCore + 'static)>,
) -> (Array2<T>, Vec<LayerCache<T>>) {
    let mut x = embed(p, inputs);
    let mut caches = Vec::with_capacity(p.layers.len());
    for l in &p.layers {
        let (y, cache) = layer_forward(l, c, x, rng.as_deref_mut());
        x = y;
        caches.push(cache);
    }
    (x, caches)
}

pub(crate) fn backward<T: Real>(
    p: &Params<T>,
    c: &ModelConfig,
    inputs: &[NodeInput],
    caches: &[LayerCache<T>],
    d_out: Array2<T>,
    grads: &mut Params<T>,
) {
    let mut dx = d_out;
    for (i, cache) in caches.iter().enumerate().rev() {
        dx = layer_backward(&p.layers[i], c, cache, dx, &mut grads.layers[i]);
    }
    let last_pos = p.positions.nrows() - 1;
    for (i, input) in inputs.iter().enumerate() {
        let row = dx.row(i);
        match *input {
            NodeInput::Token { word, position } => {
                let mut w = grads.words.row_mut(word);
                w += &row;
                let mut q = grads.positions.row_mut(position.min(last_pos));
                q += &row;
            }
            NodeInput::Symbol(r) => {
                let mut s = grads.symbols.row_mut(r);
                s += &row;
            }
            NodeInput::Root => {
                let mut s = grads.special.row_mut(0);
                s += &row;
            }
            NodeInput::Unused => {
                let mut s = grads.special.row_mut(1);
                s += &row;
            }
        }
    }
}

fn layer_forward<T: Real>(
    l: &LayerParams<T>,
    c: &ModelConfig,
    x: Array2<T>,
    mut rng: Option<&mut (dyn RngCore + 'static)>,
) -> (Array2<T>, LayerCache<T>) {
    let n = x.nrows();
    let dh = c.head_dim();
    let scale = T::lit(1.0 / (dh as f64).sqrt());

    let (a, ln1) = layer_norm(&x, &l.ln1_gain, &l.ln1_bias);
    let q = a.dot(&l.wq);
    let k = a.dot(&l.wk);
    let v = a.dot(&l.wv);
    let mut o = Array2::zeros((n, c.dim));
    let mut probs = Vec::with_capacity(c.heads);
    for h in 0..c.heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let mut sc = q.slice(cols).dot(&k.slice(cols).t());
        sc.mapv_inplace(|v| v * scale);
        softmax_rows(&mut sc);
        o.slice_mut(cols).assign(&sc.dot(&v.slice(cols)));
        probs.push(sc);
    }
    let mut y = o.dot(&l.wo) + &l.bo;
    let drop1 = dropout_mask(y.dim(), c.dropout, rng.as_deref_mut());
    if let Some(m) = &drop1 {
        y *= m;
    }
    let x1 = x + &y;

    let (b, ln2) = layer_norm(&x1, &l.ln2_gain, &l.ln2_bias);
    let h = b.dot(&l.w1) + &l.b1;
    let g = h.mapv(gelu);
    let mut z = g.dot(&l.w2) + &l.b2;
    let drop2 = dropout_mask(z.dim(), c.dropout, rng);
    if let Some(m) = &drop2 {
        z *= m;
    }
    let out = x1 + &z;
    let cache = LayerCache {
        ln1,
        a,
        q,
        k,
        v,
        probs,
        o,
        drop1,
        ln2,
        b,
        h,
        g,
        drop2,
    };
    (out, cache)
}

fn layer_backward<T: Real>(
    l: &LayerParams<T>,
    c: &ModelConfig,
    cache: &LayerCache<T>,
    d_out: Array2<T>,
    g: &mut LayerParams<T>,
) -> Array2<T> {
    let dh = c.head_dim();
    let scale = T::lit(1.0 / (dh as f64).sqrt());

    // Feed-forward branch.
    let mut dz = d_out.clone();
    if let Some(m) = &cache.drop2 {
        dz *= m;
    }
    g.b2 += &dz.sum_axis(Axis(0)).insert_axis(Axis(0));
    g.w2 += &cache.g.t().dot(&dz);
    let mut dgl = dz.dot(&l.w2.t());
    Zip::from(&mut dgl).and(&cache.h).for_each(|d, &h| *d *= gelu_grad(h));
    g.b1 += &dgl.sum_axis(Axis(0)).insert_axis(Axis(0));
    g.w1 += &cache.b.t().dot(&dgl);
    let db = dgl.dot(&l.w1.t());
    let dx1 = d_out + &layer_norm_backward(&cache.ln2, &l.ln2_gain, &db, &mut g.ln2_gain, &mut g.ln2_bias);

    // Attention branch.
    let mut dy = dx1.clone();
    if let Some(m) = &cache.drop1 {
        dy *= m;
    }
    g.bo += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    g.wo += &cache.o.t().dot(&dy);
    let d_o = dy.dot(&l.wo.t());
    let mut dq = Array2::zeros(cache.q.dim());
    let mut dk = Array2::zeros(cache.k.dim());
    let mut dv = Array2::zeros(cache.v.dim());
    for (h, p) in cache.probs.iter().enumerate() {
        let cols = s![.., h * dh..(h + 1) * dh];
        let doh = d_o.slice(cols);
        let dp = doh.dot(&cache.v.slice(cols).t());
        dv.slice_mut(cols).assign(&p.t().dot(&doh));
        let mut ds = softmax_backward(p, &dp);
        ds.mapv_inplace(|v| v * scale);
        dq.slice_mut(cols).assign(&ds.dot(&cache.k.slice(cols)));
        dk.slice_mut(cols).assign(&ds.t().dot(&cache.q.slice(cols)));
    }
    g.wq += &cache.a.t().dot(&dq);
    g.wk += &cache.a.t().dot(&dk);
    g.wv += &cache.a.t().dot(&dv);
    let da = dq.dot(&l.wq.t()) + dk.dot(&l.wk.t()) + dv.dot(&l.wv.t());
    dx1 + &layer_norm_backward(&cache.ln1, &l.ln1_gain, &da, &mut g.ln1_gain, &mut g.ln1_bias)
}

fn layer_norm<T: Real>(x: &Array2<T>, gain: &Array2<T>, bias: &Array2<T>) -> (Array2<T>, LnCache<T>) {
    let d = T::from_usize(x.ncols()).unwrap();
    let eps = T::lit(LN_EPS);
    let mut xhat = x.clone();
    let mut inv_std = Vec::with_capacity(x.nrows());
    for mut row in xhat.rows_mut() {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<T>() / d;
        let inv = T::one() / (var + eps).sqrt();
        row.mapv_inplace(|v| v * inv);
        inv_std.push(inv);
    }
    let y = &xhat * gain + bias;
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward<T: Real>(
    cache: &LnCache<T>,
    gain: &Array2<T>,
    dy: &Array2<T>,
    dgain: &mut Array2<T>,
    dbias: &mut Array2<T>,
) -> Array2<T> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dxhat = dy * gain;
    let d = T::from_usize(dy.ncols()).unwrap();
    let mut dx = Array2::zeros(dy.dim());
    for (i, (mut out, (g, xh))) in dx
        .rows_mut()
        .into_iter()
        .zip(dxhat.rows().into_iter().zip(cache.xhat.rows()))
        .enumerate()
    {
        let mean_g = g.sum() / d;
        let mean_gx = g.iter().zip(xh.iter()).map(|(&a, &b)| a * b).sum::<T>() / d;
        let inv = cache.inv_std[i];
        Zip::from(&mut out)
            .and(&g)
            .and(&xh)
            .for_each(|o, &gv, &xv| *o = inv * (gv - mean_g - xv * mean_gx));
    }
    dx
}

pub(crate) fn softmax_rows<T: Real>(a: &mut Array2<T>) {
    for mut row in a.rows_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Gradient through a row-wise softmax with output `p`.
fn softmax_backward<T: Real>(p: &Array2<T>, dp: &Array2<T>) -> Array2<T> {
    let mut ds = p * dp;
    for (mut row, prow) in ds.rows_mut().into_iter().zip(p.rows()) {
        let dot = row.sum();
        Zip::from(&mut row).and(&prow).for_each(|r, &pv| *r -= pv * dot);
    }
    ds
}

fn dropout_mask<T: Real>(
    dim: (usize, usize),
    rate: f64,
    rng: Option<&mut (dyn RngCore + 'static)>,
) -> Option<Array2<T>> {
    let rng = rng?;
    if rate == 0.0 {
        return None;
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    Some(Array2::from_shape_simple_fn(dim, || {
        if rng.random::<f64>() < rate {
            T::zero()
        } else {
            keep
        }
    }))
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

/// Tanh approximation of GELU.
pub(crate) fn gelu<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let half = T::lit(0.5);
    half * x * (T::one() + (c * (x + T::lit(0.044715) * x * x * x)).tanh())
}

fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let half = T::lit(0.5);
    let t = (c * (x + T::lit(0.044715) * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0 * 0.044715) * x * x)
}
