//! Single-file checkpoints: a text header (configuration, word list,
//! symbol vocabulary, tensor manifest) followed by every tensor as
//! little-endian `f32` in manifest order.

use ndarray::Array2;

use super::config::TrainConfig;
use super::params::Params;
use super::{symbol_rows, Model, ScorerError, WordTable};
use crate::scalar::Real;
use crate::symbol_table::Vocabulary;

const MAGIC: &str = "topgraph-checkpoint v1";

pub fn save_checkpoint<T: Real>(model: &Model<T>) -> Vec<u8> {
    let mut head = format!("{MAGIC}\n");
    for (k, v) in model.config.to_pairs() {
        head.push_str(&format!("config {k}={v}\n"));
    }
    head.push_str(&format!("vocab_hash {}\n", model.vocab.hash()));
    head.push_str(&format!("words {}\n", model.words.len()));
    for w in model.words.words() {
        head.push_str(w);
        head.push('\n');
    }
    let vocab = model.vocab.to_text();
    head.push_str(&format!("vocab {}\n", vocab.lines().count()));
    head.push_str(&vocab);
    if !vocab.is_empty() && !vocab.ends_with('\n') {
        head.push('\n');
    }
    let names = model.params.names();
    let tensors = model.params.tensors();
    head.push_str(&format!("tensors {}\n", tensors.len()));
    for (name, t) in names.iter().zip(&tensors) {
        head.push_str(&format!("{name} {} {}\n", t.nrows(), t.ncols()));
    }
    head.push_str("data\n");
    let mut out = head.into_bytes();
    for t in tensors {
        for &x in t.iter() {
            out.extend_from_slice(&x.to_f32().unwrap().to_le_bytes());
        }
    }
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn next(&mut self) -> Result<&'a str, ScorerError> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header"))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))
    }

    fn counted(&mut self, key: &str) -> Result<usize, ScorerError> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| bad(&format!("expected `{key} <count>`, found {line:?}")))
    }
}

fn bad(msg: &str) -> ScorerError {
    ScorerError::Checkpoint(msg.to_string())
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Model<f32>, ScorerError> {
    let mut h = Header { bytes, pos: 0 };
    if h.next()? != MAGIC {
        return Err(bad("not a checkpoint"));
    }

    let mut config = TrainConfig::default();
    let mut line = h.next()?;
    while let Some(kv) = line.strip_prefix("config ") {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad("config line without `=`"))?;
        config.set(k, v)?;
        line = h.next()?;
    }
    config.validate()?;
    let hash = line
        .strip_prefix("vocab_hash ")
        .ok_or_else(|| bad("missing vocab_hash"))?
        .to_string();

    let n_words = h.counted("words")?;
    let mut words = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        words.push(h.next()?.to_string());
    }
    let n_vocab = h.counted("vocab")?;
    let mut vocab_text = String::new();
    for _ in 0..n_vocab {
        vocab_text.push_str(h.next()?);
        vocab_text.push('\n');
    }
    let vocab = Vocabulary::from_text(&vocab_text)?;
    if vocab.hash() != hash {
        return Err(bad("vocabulary does not match its recorded hash"));
    }

    let mut params =
        Params::<f32>::zeros(&config.model, words.len(), symbol_rows(&vocab));
    let n_tensors = h.counted("tensors")?;
    let names = params.names();
    if n_tensors != names.len() {
        return Err(bad(&format!("expected {} tensors, found {n_tensors}", names.len())));
    }
    for (name, t) in names.iter().zip(params.tensors()) {
        let line = h.next()?;
        let want = format!("{name} {} {}", t.nrows(), t.ncols());
        if line != want {
            return Err(bad(&format!("manifest entry {line:?}, expected {want:?}")));
        }
    }
    if h.next()? != "data" {
        return Err(bad("missing data section"));
    }
    let data = &bytes[h.pos..];
    let mut offset = 0;
    for t in params.tensors_mut() {
        let len = t.len() * 4;
        let chunk = data
            .get(offset..offset + len)
            .ok_or_else(|| bad("truncated tensor data"))?;
        let values: Vec<f32> = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        *t = Array2::from_shape_vec(t.dim(), values).expect("sized from manifest");
        offset += len;
    }
    if offset != data.len() {
        return Err(bad("trailing bytes after tensor data"));
    }
    if !params.all_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(Model {
        config,
        params,
        words: WordTable::new(words),
        vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol_table::build_vocabulary;
    use crate::top_ir::fixtures::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model<f32> {
        let mut config = TrainConfig::default();
        config.model.dim = 8;
        config.model.ffn_dim = 4;
        config.model.biaffine_dim = 6;
        let vocab = build_vocabulary([&fig1(), &fig5()]).unwrap();
        let words = WordTable::new(vec!["a".into(), "data".into()]);
        let params = Params::init(
            &config.model,
            words.len(),
            symbol_rows(&vocab),
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        Model {
            config,
            params,
            words,
            vocab,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = save_checkpoint(&m);
        let back = load_checkpoint(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(save_checkpoint(&back), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = save_checkpoint(&model());
        assert!(load_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(load_checkpoint(&extra).is_err());
        assert!(load_checkpoint(b"hello\ndata\n").is_err());
        let text = String::from_utf8_lossy(&bytes).replace("config dim=8", "config dim=9");
        assert!(load_checkpoint(text.as_bytes()).is_err());
    }
}
