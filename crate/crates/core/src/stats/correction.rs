use crate::Scalar;

/// Bonferroni adjustment: each p multiplied by `m` (default: the number of
/// p values) and capped at 1.
pub fn bonferroni<T: Scalar>(p_values: &[T], m: Option<usize>) -> Vec<T> {
    let m = T::of_usize(m.unwrap_or(p_values.len()));
    p_values.iter().map(|&p| (p * m).min(T::one())).collect()
}
