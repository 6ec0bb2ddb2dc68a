use super::AnalysisError;
use crate::numeric::compensated_sum;

/// `Σ_i |p_i - q_i|`, the supremum of `|p(f) - q(f)|` over `‖f‖_∞ ≤ 1`.
/// Lies in `[0, 2]` for probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    if p.len() != q.len() {
        return Err(AnalysisError::DimensionMismatch { left: p.len(), right: q.len() });
    }
    Ok(compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((tv_distance(&[0.382, 0.618], &[0.5, 0.5]).unwrap() - 0.236).abs() < 1e-12);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }
}
