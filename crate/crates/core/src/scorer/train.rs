use ndarray::Zip;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Optimizer, TrainConfig};
use super::params::Params;
use super::{example_loss, node_inputs, symbol_rows, Model, NodeInput, ScorerError, WordTable};
use crate::mapping::{extract_mask, SupervisionMask};
use crate::scalar::{Real, Score};
use crate::symbol_table::{build_node_set, NodeSet, Vocabulary};
use crate::top_ir::PartialTree;

/// One training item: query tokens and whatever annotation is available.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub tokens: Vec<String>,
    pub tree: PartialTree,
}

/// Mean batch loss after every step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossTrace {
    pub losses: Vec<f64>,
}

impl LossTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, l));
        }
        out
    }
}

struct Prepared {
    inputs: Vec<NodeInput>,
    ns: NodeSet,
    mask: SupervisionMask,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Fits a scorer by minimizing the masked negative log-likelihood.
///
/// All randomness (initialization, batch order, dropout) comes from
/// `config.seed`, and the loop is single-threaded, so equal inputs give
/// bit-identical parameters.
pub fn train<T: Real>(
    corpus: &[TrainExample],
    vocab: Vocabulary,
    config: &TrainConfig,
) -> Result<(Model<T>, LossTrace), ScorerError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(ScorerError::EmptyCorpus);
    }
    let words = WordTable::from_tokens(corpus.iter().map(|e| e.tokens.as_slice()));
    let mut data = Vec::with_capacity(corpus.len());
    for (index, ex) in corpus.iter().enumerate() {
        let ns = build_node_set(&ex.tokens, &vocab);
        let mask =
            extract_mask(&ex.tree, &ns).map_err(|source| ScorerError::Example { index, source })?;
        let inputs = node_inputs(&words, &ex.tokens, &ns);
        data.push(Prepared { inputs, ns, mask });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = Params::<T>::init(&config.model, words.len(), symbol_rows(&vocab), &mut rng);
    let mut grads = params.zeros_like();
    let mut m1 = params.zeros_like();
    let mut m2 = params.zeros_like();

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let mut trace = LossTrace::default();
    let batch = T::from_usize(config.batch_size).unwrap();

    for step in 0..config.steps {
        for g in grads.tensors_mut() {
            g.fill(T::zero());
        }
        let mut total = T::zero();
        for _ in 0..config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let ex = &data[order[cursor]];
            cursor += 1;
            let mut inputs = ex.inputs.clone();
            if config.word_dropout > 0.0 {
                for input in &mut inputs {
                    if let NodeInput::Token { word, .. } = input {
                        if rng.random::<f64>() < config.word_dropout {
                            *word = 0;
                        }
                    }
                }
            }
            total += example_loss(
                &params,
                &config.model,
                &inputs,
                &ex.ns,
                &ex.mask,
                Some(&mut grads),
                Some(&mut rng),
            )?;
        }
        let loss = total / batch;
        if !loss.is_finite() {
            return Err(ScorerError::NonFiniteLoss {
                step: step + 1,
                loss: Score::to_f64(loss),
            });
        }
        trace.losses.push(Score::to_f64(loss));

        grads.scale(T::one() / batch);
        if config.clip_norm > 0.0 {
            let norm = grads.squared_norm().sqrt();
            let clip = T::lit(config.clip_norm);
            if norm > clip {
                grads.scale(clip / norm);
            }
        }
        let lr = T::lit(config.rate_at(step));
        match config.optimizer {
            Optimizer::Sgd => {
                for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    Zip::from(p).and(g).for_each(|p, &g| *p -= lr * g);
                }
            }
            Optimizer::Adam => {
                let t = (step + 1) as i32;
                let (b1, b2) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2));
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                let eps = T::lit(ADAM_EPS);
                let tensors = params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(m1.tensors_mut().into_iter().zip(m2.tensors_mut()));
                for ((p, g), (m, v)) in tensors {
                    Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                        *m = b1 * *m + (T::one() - b1) * g;
                        *v = b2 * *v + (T::one() - b2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    });
                }
            }
        }
    }

    let model = Model {
        config: *config,
        params,
        words,
        vocab,
    };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::DecodeOptions;
    use crate::mapping::parse_to_top;
    use crate::symbol_table::build_vocabulary;
    use crate::top_ir::fixtures::*;
    use crate::top_ir::TopTree;

    fn corpus() -> Vec<TrainExample> {
        [fig1(), fig5()]
            .into_iter()
            .map(|t: TopTree| TrainExample {
                tokens: t.tokens().iter().map(|s| s.to_string()).collect(),
                tree: PartialTree::Full(t),
            })
            .collect()
    }

    fn small() -> TrainConfig {
        let mut c = TrainConfig {
            steps: 150,
            warmup_steps: 10,
            batch_size: 2,
            learning_rate: 1e-2,
            word_dropout: 0.0,
            ..Default::default()
        };
        c.model.dim = 16;
        c.model.ffn_dim = 16;
        c.model.biaffine_dim = 16;
        c.model.dropout = 0.0;
        c
    }

    #[test]
    fn memorizes_two_trees() {
        let data = corpus();
        let vocab = build_vocabulary([&fig1(), &fig5()]).unwrap();
        let (model, trace) = train::<f32>(&data, vocab, &small()).unwrap();
        assert!(trace.losses.last().unwrap() < &0.05);
        for ex in &data {
            let out = model.decode(&ex.tokens, &DecodeOptions::default()).unwrap();
            let tree = parse_to_top(&out.parse, &ex.tokens).unwrap();
            assert_eq!(PartialTree::Full(tree), ex.tree);
        }
    }

    #[test]
    fn same_seed_same_model() {
        let data = corpus();
        let vocab = build_vocabulary([&fig1(), &fig5()]).unwrap();
        let mut c = small();
        c.steps = 5;
        c.model.dropout = 0.2;
        c.word_dropout = 0.3;
        let (a, ta) = train::<f32>(&data, vocab.clone(), &c).unwrap();
        let (b, tb) = train::<f32>(&data, vocab.clone(), &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        c.seed += 1;
        let (d, _) = train::<f32>(&data, vocab, &c).unwrap();
        assert_ne!(a.params, d.params);
    }

    #[test]
    fn empty_corpus() {
        let vocab = build_vocabulary([&fig1()]).unwrap();
        assert!(matches!(
            train::<f32>(&[], vocab, &small()),
            Err(ScorerError::EmptyCorpus)
        ));
    }

    #[test]
    fn loss_trace_csv() {
        let t = LossTrace {
            losses: vec![1.5, 0.25],
        };
        assert_eq!(t.to_csv(), "step,loss\n1,1.5\n2,0.25\n");
    }
}
