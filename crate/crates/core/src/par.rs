//! Order-preserving parallel map with a sequential fallback.

use crate::error::Result;

/// Applies `f` to every item, returning results in input order.
///
/// The first error in input order wins, so outcomes do not depend on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn try_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    use rayon::prelude::*;
    let out: Vec<Result<U>> = items.par_iter().map(f).collect();
    out.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_map<T, U, F>(items: &[T], f: F) -> Result<Vec<U>>
where
    F: Fn(&T) -> Result<U>,
{
    items.iter().map(f).collect()
}

/// Pairwise (cascade) summation in index order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_order_and_first_error() {
        let xs: Vec<i32> = (0..100).collect();
        let ys = try_map(&xs, |&x| Ok(x * 2)).unwrap();
        assert_eq!(ys, (0..100).map(|x| x * 2).collect::<Vec<_>>());
        let err = try_map(&xs, |&x| {
            if x >= 40 {
                Err(crate::error::FinslerError::invalid(format!("{x}")))
            } else {
                Ok(x)
            }
        })
        .unwrap_err();
        assert_eq!(err, crate::error::FinslerError::invalid("40"));
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 5050.0);
    }
}
