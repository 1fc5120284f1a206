//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topgraph::mapping::extract_mask;
use topgraph::scorer::{symbol_rows, Model, ModelConfig, Params, TrainConfig, WordTable};
use topgraph::symbol_table::{build_node_set, build_vocabulary};
use topgraph::synth::{random_tree, RandomTreeConfig};
use topgraph::top_ir::{PartialTree, SupervisionMode, TopTree};

pub fn strings(t: &TopTree) -> Vec<String> {
    t.tokens().iter().map(|s| s.to_string()).collect()
}

pub fn tiny_config() -> TrainConfig {
    TrainConfig {
        model: ModelConfig {
            dim: 4,
            layers: 2,
            heads: 2,
            ffn_dim: 6,
            biaffine_dim: 3,
            max_positions: 8,
            dropout: 0.0,
        },
        ..Default::default()
    }
}

/// A small f64 model with every parameter drawn at random (including layer
/// norm gains and biases), built around one random tree.
pub fn random_model(seed: u64) -> (Model<f64>, TopTree) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomTreeConfig {
        max_depth: 3,
        max_children: 3,
        intents: 2,
        slots: 2,
        words: 4,
    };
    let tree = random_tree(&mut rng, &cfg);
    let vocab = build_vocabulary([&tree]).unwrap();
    let words = WordTable::from_tokens([strings(&tree).as_slice()]);
    let config = tiny_config();
    let mut params = Params::<f64>::init(&config.model, words.len(), symbol_rows(&vocab), &mut rng);
    for t in params.tensors_mut() {
        t.mapv_inplace(|x| x + rng.random_range(-0.5..0.5));
    }
    let model = Model {
        config,
        params,
        words,
        vocab,
    };
    (model, tree)
}

pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: String,
}

pub const FD_STEP: f64 = 1e-5;
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares analytic and central-difference gradients of the masked loss
/// on `per_tensor` random coordinates of every tensor.
pub fn gradient_check(seed: u64, mode: SupervisionMode, per_tensor: usize) -> GradCheck {
    let (mut model, tree) = random_model(seed);
    let tokens = strings(&tree);
    let ns = build_node_set(&tokens, &model.vocab);
    let mask = extract_mask(&PartialTree::project(&tree, mode), &ns).unwrap();
    let inputs = model.inputs(&tokens, &ns);
    let mut grads = model.params.zeros_like();
    model.loss(&inputs, &ns, &mask, Some(&mut grads), None).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let names = model.params.names();
    let mut out = GradCheck {
        checked: 0,
        max_rel_error: 0.0,
        worst: String::new(),
    };
    for ti in 0..names.len() {
        let (rows, cols) = model.params.tensors()[ti].dim();
        for _ in 0..per_tensor {
            let (r, c) = (rng.random_range(0..rows), rng.random_range(0..cols));
            let orig = model.params.tensors()[ti][[r, c]];
            model.params.tensors_mut()[ti][[r, c]] = orig + FD_STEP;
            let up = model.loss(&inputs, &ns, &mask, None, None).unwrap();
            model.params.tensors_mut()[ti][[r, c]] = orig - FD_STEP;
            let down = model.loss(&inputs, &ns, &mask, None, None).unwrap();
            model.params.tensors_mut()[ti][[r, c]] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = grads.tensors()[ti][[r, c]];
            let err = relative_error(analytic, numeric);
            out.checked += 1;
            if err > out.max_rel_error {
                out.max_rel_error = err;
                out.worst = format!("{}[{r},{c}] analytic {analytic:e} numeric {numeric:e}", names[ti]);
            }
        }
    }
    out
}

use topgraph::decoder::{EdgeScores, ScoreMatrix};
use topgraph::symbol_table::NodeSet;
use topgraph::top_ir::SymbolLabel;

/// Random node set with at most `max_nodes` nodes (at least one token and
/// one symbol replica).
pub fn random_node_set(rng: &mut impl Rng, max_nodes: usize) -> NodeSet {
    assert!(max_nodes >= 4);
    let budget = max_nodes - 2;
    let tokens = rng.random_range(1..budget);
    let mut left = budget - tokens;
    let mut labels = Vec::new();
    let mut replicas = Vec::new();
    let names = ["IN:A", "IN:B", "SL:C", "SL:D"];
    for name in names {
        if left == 0 || (!labels.is_empty() && rng.random_bool(0.3)) {
            break;
        }
        let r = rng.random_range(1..=left.min(3));
        labels.push(SymbolLabel::new(name).unwrap());
        replicas.push(r);
        left -= r;
    }
    NodeSet::new(tokens, labels, replicas)
}

/// Dense random integer scores over a random node set.
pub fn random_i64_matrix(rng: &mut impl Rng, max_nodes: usize, range: i64) -> ScoreMatrix<i64> {
    let ns = random_node_set(rng, max_nodes);
    ScoreMatrix::from_fn(ns, |_, _| rng.random_range(-range..=range)).unwrap()
}

/// Structural validity of a parent vector, checked from the definitions
/// without going through the library's own validator.
pub fn validate_parse(ns: &NodeSet, parent: &[Option<usize>]) -> Result<(), String> {
    let n = ns.len();
    let (root, unused) = (ns.root(), ns.unused());
    if parent.len() != n {
        return Err("length".into());
    }
    if parent[root].is_some() {
        return Err("root has a parent".into());
    }
    for c in 0..n {
        if c == root {
            continue;
        }
        let Some(p) = parent[c] else {
            return Err(format!("node {c} has no parent"));
        };
        if p >= n || p == c {
            return Err(format!("node {c} has bad parent {p}"));
        }
        if p < ns.token_count() {
            return Err(format!("token {p} is a parent"));
        }
    }
    if parent[unused] != Some(root) {
        return Err("unused is not under root".into());
    }
    let root_children = (0..n).filter(|&c| c != unused && parent[c] == Some(root)).count();
    if root_children != 1 {
        return Err(format!("root has {root_children} non-unused children"));
    }
    for c in 0..n {
        if parent[c] == Some(unused) && (0..n).any(|g| parent[g] == Some(c)) {
            return Err(format!("child {c} of unused has children"));
        }
    }
    for start in 0..n {
        let mut at = start;
        for _ in 0..=n {
            match parent[at] {
                Some(p) => at = p,
                None => break,
            }
        }
        if at != root {
            return Err(format!("node {start} does not reach root"));
        }
    }
    Ok(())
}

/// Best arborescence score by enumerating every parent vector.
pub fn brute_force_arborescence(w: &EdgeScores<i64>, root: usize) -> Option<i64> {
    let n = w.len();
    let others: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    let mut parent = vec![usize::MAX; n];
    let mut best = None;
    fn rec(
        w: &EdgeScores<i64>,
        root: usize,
        others: &[usize],
        k: usize,
        parent: &mut Vec<usize>,
        acc: i64,
        best: &mut Option<i64>,
    ) {
        let n = w.len();
        if k == others.len() {
            let acyclic = others.iter().all(|&s| {
                let mut at = s;
                for _ in 0..n {
                    if at == root {
                        return true;
                    }
                    at = parent[at];
                }
                false
            });
            if acyclic && best.is_none_or(|b| acc > b) {
                *best = Some(acc);
            }
            return;
        }
        let c = others[k];
        for p in 0..n {
            if let Some(s) = w.get(p, c) {
                parent[c] = p;
                rec(w, root, others, k + 1, parent, acc + s, best);
            }
        }
    }
    rec(w, root, &others, 0, &mut parent, 0, &mut best);
    best
}

/// Random general digraph: `n` nodes, weights in `[-range, range]`, each
/// edge absent with probability `sparsity`. Self-loops are always absent.
pub fn random_digraph(rng: &mut impl Rng, n: usize, range: i64, sparsity: f64) -> EdgeScores<i64> {
    EdgeScores::from_fn(n, |p, c| {
        (p != c && !rng.random_bool(sparsity)).then(|| rng.random_range(-range..=range))
    })
}
