use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token embeddings of one text, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TokenEmbeddingMatrix {
    dim: usize,
    values: Vec<f64>,
}

impl TokenEmbeddingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || dim == 0 {
            return Err(Error::InvalidInput(
                "embedding matrix needs at least one non-empty row".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("embedding rows differ in dimension".into()));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("embedding contains non-finite values".into()));
        }
        Ok(TokenEmbeddingMatrix { dim, values })
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    pub fn mean_pooled(&self) -> Vec<f64> {
        let n = self.rows() as f64;
        let mut out = vec![0.0; self.dim];
        for row in self.iter_rows() {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for TokenEmbeddingMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        TokenEmbeddingMatrix::new(rows)
    }
}

impl From<TokenEmbeddingMatrix> for Vec<Vec<f64>> {
    fn from(m: TokenEmbeddingMatrix) -> Self {
        m.iter_rows().map(<[f64]>::to_vec).collect()
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity("zero-norm embedding vector".into()));
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine similarity of the two mean-pooled vectors.
pub fn mean_pooled_cosine(a: &TokenEmbeddingMatrix, b: &TokenEmbeddingMatrix) -> Result<f64> {
    cosine(&a.mean_pooled(), &b.mean_pooled())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenAggregation {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy token matching: precision averages, over tokens of `a`, the best
/// cosine to any token of `b`; recall swaps the roles. No idf weighting and
/// no baseline rescaling.
pub fn token_aggregation(a: &TokenEmbeddingMatrix, b: &TokenEmbeddingMatrix) -> Result<TokenAggregation> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions differ ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    let mut sims = vec![0.0; a.rows() * b.rows()];
    for (i, ra) in a.iter_rows().enumerate() {
        for (j, rb) in b.iter_rows().enumerate() {
            sims[i * b.rows() + j] = cosine(ra, rb)?;
        }
    }
    let precision = (0..a.rows())
        .map(|i| {
            sims[i * b.rows()..(i + 1) * b.rows()]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / a.rows() as f64;
    let recall = (0..b.rows())
        .map(|j| {
            (0..a.rows())
                .map(|i| sims[i * b.rows() + j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum::<f64>()
        / b.rows() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(TokenAggregation { precision, recall, f1 })
}

pub fn token_aggregation_f1(a: &TokenEmbeddingMatrix, b: &TokenEmbeddingMatrix) -> Result<f64> {
    token_aggregation(a, b).map(|t| t.f1)
}

/// e.g. `xlm-roberta-large_L17_no-idf_version=0.2.0`
pub fn embedding_signature(embedder: &str, layer: Option<u32>, version: &str) -> String {
    match layer {
        Some(l) => format!("{embedder}_L{l}_no-idf_version={version}"),
        None => format!("{embedder}_no-idf_version={version}"),
    }
}
