use super::EmbedError;

/// A dense, finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &Self) -> Result<f64, EmbedError> {
        check_dims(self, other)?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Result<Self, EmbedError> {
        Self::new(self.values.iter().map(|v| v * k).collect())
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<(), EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Cosine of the angle between `a` and `b`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    check_dims(a, b)?;
    let aa = dot(&a.values, &a.values);
    let bb = dot(&b.values, &b.values);
    if aa == 0.0 || bb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    // sqrt of the product keeps cos(a, a) == 1 exactly
    let cos = dot(&a.values, &b.values) / (aa * bb).sqrt();
    Ok(cos.clamp(-1.0, 1.0))
}

/// `100 * (1 - cos(a, b))`, in `[0, 200]`.
pub fn semantic_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    Ok(100.0 * (1.0 - cosine_similarity(a, b)?))
}

/// Element-wise mean of one or more vectors of equal dimension.
pub fn mean_vector<'a, I>(vectors: I) -> Result<EmbeddingVector, EmbedError>
where
    I: IntoIterator<Item = &'a EmbeddingVector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(EmbedError::EmptyVector)?;
    let mut acc = first.values.clone();
    let mut count = 1usize;
    for v in iter {
        check_dims(first, v)?;
        for (a, x) in acc.iter_mut().zip(&v.values) {
            *a += x;
        }
        count += 1;
    }
    let n = count as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    EmbeddingVector::new(acc)
}
