//! Cover distributions: the innocuous plaintexts the mandated scheme encrypts.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::bitstr::BitStr;
use crate::error::{Error, Result};

const SHIPPED_CORPUS: &str = include_str!("../data/corpus.txt");
const PAD: u8 = b' ';

/// Word bigram counts. The corpus is treated as cyclic so every word has a successor.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramModel {
    words: Vec<String>,
    unigram: Vec<u64>,
    next: Vec<Vec<(usize, u64)>>,
}

impl BigramModel {
    pub fn from_text(text: &str) -> Result<Self> {
        let tokens: Vec<String> = text.split_whitespace().map(|t| t.to_lowercase()).collect();
        if tokens.len() < 2 {
            return Err(Error::InvalidParams(
                "corpus needs at least two tokens".into(),
            ));
        }
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for t in &tokens {
            let n = index.len();
            index.entry(t.clone()).or_insert(n);
        }
        let mut words = vec![String::new(); index.len()];
        for (w, &i) in &index {
            words[i] = w.clone();
        }
        let mut unigram = vec![0u64; words.len()];
        let mut pairs: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); words.len()];
        for (i, t) in tokens.iter().enumerate() {
            let a = index[t];
            let b = index[&tokens[(i + 1) % tokens.len()]];
            unigram[a] += 1;
            *pairs[a].entry(b).or_default() += 1;
        }
        let next = pairs.into_iter().map(|m| m.into_iter().collect()).collect();
        Ok(BigramModel {
            words,
            unigram,
            next,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading corpus {}", path.display()), e))?;
        Self::from_text(&text)
    }

    /// The corpus bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_text(SHIPPED_CORPUS).expect("shipped corpus is valid")
    }

    fn index_of(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    pub fn bigram_count(&self, a: &str, b: &str) -> u64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.next[i]
                .iter()
                .find(|(k, _)| *k == j)
                .map_or(0, |(_, c)| *c),
            _ => 0,
        }
    }

    fn pick(weights: &[(usize, u64)], rng: &mut dyn RngCore) -> usize {
        let total: u64 = weights.iter().map(|(_, c)| c).sum();
        let mut r = rng.gen_range(0..total);
        for &(i, c) in weights {
            if r < c {
                return i;
            }
            r -= c;
        }
        unreachable!("weights sum to total")
    }

    fn successor(&self, word: Option<usize>, rng: &mut dyn RngCore) -> usize {
        match word {
            Some(i) => Self::pick(&self.next[i], rng),
            None => {
                let all: Vec<(usize, u64)> = self.unigram.iter().copied().enumerate().collect();
                Self::pick(&all, rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverKind {
    Constant(BitStr),
    /// The messages `0 .. 2^k - 1`, uniformly.
    UniformFlat(usize),
    /// Space-padded text of `msg_bits / 8` bytes.
    NgramText(Arc<BigramModel>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverDist {
    kind: CoverKind,
    msg_bits: usize,
}

impl CoverDist {
    pub fn constant(m: BitStr) -> Self {
        let msg_bits = m.len();
        CoverDist {
            kind: CoverKind::Constant(m),
            msg_bits,
        }
    }

    pub fn uniform_flat(k: usize, msg_bits: usize) -> Result<Self> {
        if k > msg_bits {
            return Err(Error::InvalidParams(format!(
                "flat entropy {k} exceeds width {msg_bits}"
            )));
        }
        Ok(CoverDist {
            kind: CoverKind::UniformFlat(k),
            msg_bits,
        })
    }

    pub fn ngram_text(model: Arc<BigramModel>, msg_bits: usize) -> Result<Self> {
        if msg_bits == 0 || msg_bits % 8 != 0 {
            return Err(Error::InvalidParams(format!(
                "text messages need a whole number of bytes, got {msg_bits} bits"
            )));
        }
        let width = msg_bits / 8;
        if model.words.iter().all(|w| w.len() > width) {
            return Err(Error::InvalidParams(format!(
                "no corpus word fits in {width} bytes"
            )));
        }
        Ok(CoverDist {
            kind: CoverKind::NgramText(model),
            msg_bits,
        })
    }

    /// Parses `constant:<len:hex>`, `flat:<k>`, `ngram` or `ngram:<corpus path>`.
    pub fn parse(spec: &str, msg_bits: usize) -> Result<Self> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        match name {
            "constant" => {
                let m = if arg.is_empty() {
                    BitStr::zeros(msg_bits)
                } else {
                    BitStr::parse_hex(arg)?
                };
                if m.len() != msg_bits {
                    return Err(Error::BadLength {
                        expected: msg_bits,
                        actual: m.len(),
                    });
                }
                Ok(Self::constant(m))
            }
            "flat" => {
                let k = arg
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad flat entropy {arg:?}")))?;
                Self::uniform_flat(k, msg_bits)
            }
            "ngram" => {
                let model = if arg.is_empty() {
                    BigramModel::shipped()
                } else {
                    BigramModel::from_file(Path::new(arg))?
                };
                Self::ngram_text(Arc::new(model), msg_bits)
            }
            _ => Err(Error::Parse(format!("unknown cover distribution {spec:?}"))),
        }
    }

    pub fn kind(&self) -> &CoverKind {
        &self.kind
    }

    pub fn msg_bits(&self) -> usize {
        self.msg_bits
    }

    /// Samples the next message given the plaintext history.
    pub fn next_message(&self, history: &[BitStr], rng: &mut dyn RngCore) -> BitStr {
        match &self.kind {
            CoverKind::Constant(m) => m.clone(),
            CoverKind::UniformFlat(k) => {
                BitStr::zeros(self.msg_bits - k).concat(&BitStr::random(*k, rng))
            }
            CoverKind::NgramText(model) => {
                let last = history
                    .last()
                    .and_then(decode_text)
                    .and_then(|t| t.split_whitespace().last().and_then(|w| model.index_of(w)));
                BitStr::from_byte_vec(self.sample_text(model, last, rng))
            }
        }
    }

    fn sample_text(
        &self,
        model: &BigramModel,
        mut prev: Option<usize>,
        rng: &mut dyn RngCore,
    ) -> Vec<u8> {
        let width = self.msg_bits / 8;
        let mut out: Vec<u8> = Vec::with_capacity(width);
        loop {
            let w = model.successor(prev, rng);
            let word = model.words[w].as_bytes();
            let need = word.len() + usize::from(!out.is_empty());
            if out.len() + need > width {
                if out.is_empty() {
                    // Word too long to start a message; try another.
                    prev = None;
                    continue;
                }
                break;
            }
            if !out.is_empty() {
                out.push(b' ');
            }
            out.extend_from_slice(word);
            prev = Some(w);
        }
        out.resize(width, PAD);
        out
    }

    /// Whether `m` can be produced by [`next_message`](Self::next_message).
    pub fn in_support(&self, m: &BitStr) -> bool {
        if m.len() != self.msg_bits {
            return false;
        }
        match &self.kind {
            CoverKind::Constant(c) => c == m,
            CoverKind::UniformFlat(k) => m.slice(0, self.msg_bits - k).count_ones() == 0,
            CoverKind::NgramText(model) => {
                let Some(text) = decode_text(m) else {
                    return false;
                };
                let body = text.trim_end_matches(PAD as char);
                if body.is_empty() || body.starts_with(' ') || body.contains("  ") {
                    return false;
                }
                let words: Vec<&str> = body.split(' ').collect();
                words.iter().all(|w| model.index_of(w).is_some())
                    && words.windows(2).all(|p| model.bigram_count(p[0], p[1]) > 0)
            }
        }
    }
}

fn decode_text(m: &BitStr) -> Option<String> {
    if m.len() % 8 != 0 {
        return None;
    }
    String::from_utf8(m.as_bytes().to_vec()).ok()
}

/// Exact min-entropy for constant and flat distributions; text declares 0.
pub fn minentropy_of(dist: &CoverDist) -> f64 {
    match dist.kind {
        CoverKind::Constant(_) => 0.0,
        CoverKind::UniformFlat(k) => k as f64,
        CoverKind::NgramText(_) => 0.0,
    }
}
