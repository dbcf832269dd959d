use crate::math;
use crate::{Error, Result};

/// Cosine similarity; zero-norm inputs are an error.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = math::sqrt(a.iter().map(|x| x * x).sum());
    let nb = math::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 {
        return Err(Error::DegenerateEmbedding("caption"));
    }
    if nb == 0.0 {
        return Err(Error::DegenerateEmbedding("image"));
    }
    Ok(dot / (na * nb))
}

/// `1 + #{strictly more similar} + #{equally similar with a lower id}`.
pub fn rank_by_similarity(sims: &[(usize, f64)], target: usize) -> Result<usize> {
    if sims.is_empty() {
        return Err(Error::Empty("retrieval pool"));
    }
    let &(_, st) = sims
        .iter()
        .find(|(id, _)| *id == target)
        .ok_or(Error::UnknownImage(target))?;
    Ok(1 + sims
        .iter()
        .filter(|&&(id, s)| s > st || (s == st && id < target))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank_by_similarity(&[(4, 0.1)], 4).unwrap(), 1);
        assert_eq!(rank_by_similarity(&[(0, 0.2), (1, 0.9), (2, 0.3)], 1).unwrap(), 1);
        assert_eq!(rank_by_similarity(&[(0, 0.5), (1, 0.9), (2, 0.3)], 0).unwrap(), 2);
    }

    #[test]
    fn ties_break_by_id() {
        let s = [(3, 0.5), (1, 0.5), (2, 0.5)];
        assert_eq!(rank_by_similarity(&s, 1).unwrap(), 1);
        assert_eq!(rank_by_similarity(&s, 3).unwrap(), 3);
    }

    #[test]
    fn empty_pool_and_missing_target() {
        assert!(matches!(rank_by_similarity(&[], 0), Err(Error::Empty(_))));
        assert!(rank_by_similarity(&[(1, 0.0)], 0).is_err());
    }

    #[test]
    fn zero_norm_rejected() {
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
