use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

pub const MIN_GRID_COUNT: usize = 8;

/// Gauss–Legendre nodes mapped onto `(0, ∞)` by `p = s(1+x)/(1-x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub map_scale: f64,
    pub count: usize,
}

impl MomentumGrid {
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `∫₀^∞ f(p) dp` on the grid.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(count).expect("quadrature order must be positive");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

pub fn build_grid(count: usize, map_scale: f64) -> Result<MomentumGrid> {
    if count < MIN_GRID_COUNT {
        return Err(Error::Config(format!(
            "grid count must be >= {MIN_GRID_COUNT}, got {count}"
        )));
    }
    if !(map_scale > 0.0 && map_scale.is_finite()) {
        return Err(Error::Config(format!("grid map_scale must be positive, got {map_scale}")));
    }
    let (x, w) = gauss_legendre(count);
    let (nodes, weights) = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| {
            let d = 1.0 - x;
            (map_scale * (1.0 + x) / d, w * 2.0 * map_scale / (d * d))
        })
        .unzip();
    Ok(MomentumGrid { nodes, weights, map_scale, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn nodes_strictly_increasing_and_positive() {
        let g = build_grid(64, 1.0).unwrap();
        assert_eq!(g.nodes.len(), 64);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes.iter().all(|p| *p > 0.0 && p.is_finite()));
        assert!(g.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn rational_integral() {
        let f = |p: f64| p * p / ((p * p + 1.0) * (p * p + 1.0));
        let g = build_grid(64, 1.0).unwrap();
        assert!((g.integrate(f) - PI / 4.0).abs() / (PI / 4.0) < 1e-8);
    }

    #[test]
    fn refinement_reduces_error() {
        let f = |p: f64| p * p / ((p * p + 1.0) * (p * p + 1.0));
        let err = |n| (build_grid(n, 0.7).unwrap().integrate(f) - PI / 4.0).abs();
        let errs: Vec<f64> = [8, 16, 32].into_iter().map(err).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(err(128) < errs[0]);
    }

    #[test]
    fn rejects_small_or_bad() {
        assert!(build_grid(7, 1.0).is_err());
        assert!(build_grid(16, 0.0).is_err());
        assert!(build_grid(16, f64::NAN).is_err());
    }
}
