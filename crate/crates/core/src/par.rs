//! Thin switch between rayon and plain iterators.
//!
//! Every data-parallel loop in the crate goes through these helpers. They
//! are order-preserving maps, so output is byte-identical whether the
//! `parallel` feature is enabled or not, and at any thread-pool size.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_slice<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(items: &[T], f: F) -> Vec<U> {
    items.par_iter().map(f).collect()
}

/// Map over a slice, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Map over owned items, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_vec<T: Send, U: Send, F: Fn(T) -> U + Sync + Send>(items: Vec<T>, f: F) -> Vec<U> {
    items.into_par_iter().map(f).collect()
}

/// Map over owned items, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_vec<T, U, F: Fn(T) -> U>(items: Vec<T>, f: F) -> Vec<U> {
    items.into_iter().map(f).collect()
}

/// Human-readable execution mode, used by benches and the CLI version line.
pub const MODE: &str = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_preserve_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let doubled = map_slice(&xs, |x| x * 2);
        assert_eq!(doubled, xs.iter().map(|x| x * 2).collect::<Vec<_>>());
        let tripled = map_vec(xs.clone(), |x| x * 3);
        assert_eq!(tripled, xs.iter().map(|x| x * 3).collect::<Vec<_>>());
    }
}
