//! Deterministic low-discrepancy probe sets.
//!
//! Points come from the 4-d Halton sequence (bases 2, 3, 5, 7) with a random
//! Cranley–Patterson shift drawn from a seeded ChaCha generator, so the same
//! `(box, count, seed)` always yields the same points on every platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exterior::Point4;

pub const DEFAULT_PROBES: usize = 1000;
pub const DEFAULT_SEED: u64 = 20240917;

/// Axis-aligned box in ℝ⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeBox {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl Default for ProbeBox {
    fn default() -> Self {
        ProbeBox { min: [-2.0; 4], max: [2.0; 4] }
    }
}

impl ProbeBox {
    pub fn new(min: [f64; 4], max: [f64; 4]) -> Self {
        ProbeBox { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..4).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.min[k] < self.max[k])
    }
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// `count` shifted-Halton points inside `bx`.
pub fn probe_points(bx: &ProbeBox, count: usize, seed: u64) -> Vec<Point4> {
    const BASES: [u64; 4] = [2, 3, 5, 7];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 4] = std::array::from_fn(|_| rng.gen::<f64>());
    (0..count)
        .map(|i| {
            let c = std::array::from_fn(|k| {
                let u = (radical_inverse(i as u64 + 1, BASES[k]) + shift[k]).fract();
                bx.min[k] + u * (bx.max[k] - bx.min[k])
            });
            Point4::from_array(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_are_reproducible_and_inside_box() {
        let bx = ProbeBox::new([0.0, -1.0, 2.0, -3.0], [1.0, 1.0, 3.0, 3.0]);
        let a = probe_points(&bx, 200, 7);
        let b = probe_points(&bx, 200, 7);
        assert_eq!(a, b);
        for p in &a {
            let c = p.to_array();
            for k in 0..4 {
                assert!(c[k] >= bx.min[k] && c[k] <= bx.max[k]);
            }
        }
        assert_ne!(a, probe_points(&bx, 200, 8));
    }
}
