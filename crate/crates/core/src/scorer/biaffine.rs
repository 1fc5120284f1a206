//! Biaffine edge scores `phi(p, c) = h_p^T U h_c + h_p^T u`.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::params::Params;
use crate::decoder::{DecodeError, EdgeScores, ScoreMatrix};
use crate::scalar::Real;
use crate::symbol_table::NodeSet;

/// Raw biaffine scores over given parent and child representations, with
/// the structural prohibitions of `node_set` applied.
pub fn score_edges<T: Real>(
    parent_repr: ArrayView2<T>,
    child_repr: ArrayView2<T>,
    u_mat: ArrayView2<T>,
    u_vec: ArrayView1<T>,
    node_set: &NodeSet,
) -> Result<ScoreMatrix<T>, DecodeError> {
    let s = biaffine(parent_repr, child_repr, u_mat, u_vec);
    to_matrix(&s, node_set)
}

pub(crate) fn biaffine<T: Real>(
    hp: ArrayView2<T>,
    hc: ArrayView2<T>,
    u_mat: ArrayView2<T>,
    u_vec: ArrayView1<T>,
) -> Array2<T> {
    let m = hp.dot(&u_mat);
    let r = hp.dot(&u_vec);
    m.dot(&hc.t()) + &r.insert_axis(Axis(1))
}

pub(crate) fn to_matrix<T: Real>(s: &Array2<T>, node_set: &NodeSet) -> Result<ScoreMatrix<T>, DecodeError> {
    let n = s.nrows();
    ScoreMatrix::new(
        node_set.clone(),
        EdgeScores::from_fn(n, |p, c| Some(s[[p, c]])),
    )
}

pub(crate) struct HeadCache<T> {
    hp: Array2<T>,
    hc: Array2<T>,
    m: Array2<T>,
}

/// Dense `parent x child` scores from encodings, before any prohibition.
pub(crate) fn head_forward<T: Real>(p: &Params<T>, enc: &Array2<T>) -> (Array2<T>, HeadCache<T>) {
    let hp = enc.dot(&p.parent_proj);
    let hc = enc.dot(&p.child_proj);
    let m = hp.dot(&p.u_mat);
    let r = hp.dot(&p.u_vec.row(0));
    let s = m.dot(&hc.t()) + &r.insert_axis(Axis(1));
    (s, HeadCache { hp, hc, m })
}

/// Accumulates head gradients for upstream `ds` and returns `d enc`.
pub(crate) fn head_backward<T: Real>(
    p: &Params<T>,
    enc: &Array2<T>,
    cache: &HeadCache<T>,
    ds: &Array2<T>,
    g: &mut Params<T>,
) -> Array2<T> {
    let dm = ds.dot(&cache.hc);
    let dhc = ds.t().dot(&cache.m);
    let dr = ds.sum_axis(Axis(1));
    g.u_mat += &cache.hp.t().dot(&dm);
    g.u_vec += &cache.hp.t().dot(&dr).insert_axis(Axis(0));
    let dhp = dm.dot(&p.u_mat.t()) + &dr.insert_axis(Axis(1)).dot(&p.u_vec);
    g.parent_proj += &enc.t().dot(&dhp);
    g.child_proj += &enc.t().dot(&dhc);
    dhp.dot(&p.parent_proj.t()) + dhc.dot(&p.child_proj.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::top_ir::SymbolLabel;
    use ndarray::array;

    #[test]
    fn zero_weights_give_zero_scores() {
        let ns = NodeSet::new(1, vec![SymbolLabel::new("IN:A").unwrap()], vec![1]);
        let e = Array2::<f64>::ones((4, 2));
        let m = score_edges(e.view(), e.view(), Array2::zeros((2, 2)).view(), Array2::zeros((1, 2)).row(0), &ns)
            .unwrap();
        for p in 0..4 {
            for c in 0..4 {
                if let Some(s) = m.get(p, c) {
                    assert_eq!(s, 0.0);
                }
            }
        }
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.get(1, 0), Some(0.0));
    }

    #[test]
    fn biaffine_single_pair() {
        let hp = array![[1.0, 0.0]];
        let hc = array![[0.0, 1.0]];
        let u = array![[0.0, 2.0], [0.0, 0.0]];
        let v = array![1.0, 0.0];
        let s = biaffine(hp.view(), hc.view(), u.view(), v.view());
        assert_eq!(s, array![[3.0]]);
    }
}
