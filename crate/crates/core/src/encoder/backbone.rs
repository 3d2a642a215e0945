use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix};

pub const CLS: &str = "[CLS]";

/// A token with char offsets into the text it was cut from. The leading
/// `[CLS]` token has the empty span `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Contextual encoder consumed by the entity-marker encoder.
pub trait EncoderBackbone: Send + Sync {
    /// Identity string stored in checkpoints.
    fn identity(&self) -> String;
    fn hidden_size(&self) -> usize;
    /// Maximum sequence length, `[CLS]` included.
    fn max_tokens(&self) -> usize;
    /// Tokenizes `text`; the first token is always `[CLS]`.
    fn tokenize(&self, text: &str) -> Vec<Token>;
    /// One hidden row per token.
    fn forward(&self, tokens: &[Token]) -> Matrix;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackboneConfig {
    pub name: String,
    pub hidden_size: usize,
    pub max_tokens: usize,
    pub context_radius: usize,
    pub weights_path: Option<String>,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            name: StubBackbone::NAME.into(),
            hidden_size: 768,
            max_tokens: 512,
            context_radius: 3,
            weights_path: None,
        }
    }
}

pub fn load_backbone(cfg: &BackboneConfig) -> Result<Box<dyn EncoderBackbone>> {
    match cfg.name.as_str() {
        StubBackbone::NAME => Ok(Box::new(StubBackbone::new(
            cfg.hidden_size,
            cfg.max_tokens,
            cfg.context_radius,
        ))),
        other => Err(Error::UnknownBackbone(other.to_string())),
    }
}

/// Word/punctuation tokenizer: runs of alphanumerics form one token, every
/// other non-space char is a token of its own. Offsets are in chars.
pub fn simple_tokenize(text: &str) -> Vec<Token> {
    let mut out = vec![Token {
        text: CLS.into(),
        start: 0,
        end: 0,
    }];
    let mut word: Option<(usize, String)> = None;
    let flush = |word: &mut Option<(usize, String)>, end: usize, out: &mut Vec<Token>| {
        if let Some((start, text)) = word.take() {
            out.push(Token { text, start, end });
        }
    };
    for (i, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            match &mut word {
                Some((_, w)) => w.push(ch),
                None => word = Some((i, ch.to_string())),
            }
        } else {
            flush(&mut word, i, &mut out);
            if !ch.is_whitespace() {
                out.push(Token {
                    text: ch.to_string(),
                    start: i,
                    end: i + 1,
                });
            }
        }
    }
    flush(&mut word, text.chars().count(), &mut out);
    out
}

/// Deterministic backbone without pretrained weights.
///
/// Each token type gets a pseudo-random embedding seeded by a hash of its
/// lower-cased text. A token's hidden state is its embedding plus half the
/// mean embedding of its neighbours within `context_radius`. The `[CLS]`
/// row is the mean embedding of the whole sequence.
#[derive(Debug, Clone)]
pub struct StubBackbone {
    hidden: usize,
    max_tokens: usize,
    radius: usize,
}

impl StubBackbone {
    pub const NAME: &'static str = "deterministic-stub";

    pub fn new(hidden: usize, max_tokens: usize, radius: usize) -> Self {
        assert!(hidden > 0 && max_tokens > 1);
        Self {
            hidden,
            max_tokens,
            radius,
        }
    }

    fn embed(&self, token: &str) -> Vec<f64> {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in token.to_lowercase().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        (0..self.hidden).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }
}

impl EncoderBackbone for StubBackbone {
    fn identity(&self) -> String {
        format!(
            "{}(d={},max_tokens={},radius={})",
            Self::NAME,
            self.hidden,
            self.max_tokens,
            self.radius
        )
    }

    fn hidden_size(&self) -> usize {
        self.hidden
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn tokenize(&self, text: &str) -> Vec<Token> {
        simple_tokenize(text)
    }

    fn forward(&self, tokens: &[Token]) -> Matrix {
        let d = self.hidden;
        let n = tokens.len();
        let mut out = Matrix::zeros(n, d);
        if n <= 1 {
            return out;
        }
        let emb: Vec<Vec<f64>> = tokens[1..].iter().map(|t| self.embed(&t.text)).collect();
        let body = emb.len();
        let mut cls = vec![0.0; d];
        for e in &emb {
            axpy(&mut cls, 1.0 / body as f64, e);
        }
        out.row_mut(0).copy_from_slice(&cls);
        for t in 0..body {
            let lo = t.saturating_sub(self.radius);
            let hi = (t + self.radius).min(body - 1);
            let row = out.row_mut(t + 1);
            row.copy_from_slice(&emb[t]);
            let neighbours = hi - lo;
            if neighbours > 0 {
                let w = 0.5 / neighbours as f64;
                for (j, e) in emb.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != t {
                        axpy(row, w, e);
                    }
                }
            }
        }
        out
    }
}
