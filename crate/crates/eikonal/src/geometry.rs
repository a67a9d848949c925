//! Small dense-vector helpers and the axis-aligned validity box.
//!
//! Points live in low dimension (n = 1, 2, 3 in practice), so plain `Vec<f64>`
//! with free functions beats pulling matrix types through every signature.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `a + s * b`.
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Axis-aligned box on which a field is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundsBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(l, h)| l < h),
            "degenerate bounds box"
        );
        Self { lo, hi }
    }

    /// Cube `[-half, half]^dim`.
    pub fn cube(dim: usize, half: f64) -> Self {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Whether the closed ball `B_r(center)` stays inside the box.
    pub fn contains_ball(&self, center: &[f64], radius: f64) -> bool {
        center
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(c, (l, h))| c - radius >= *l && c + radius <= *h)
    }

    /// Clamps componentwise onto the box.
    pub fn clamp(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect()
    }
}

/// Mixes bit patterns into a well-distributed 64-bit stream; used to derive
/// deterministic per-query sampling offsets so results never depend on worker
/// count or call order.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Seed derived from a point's bit pattern plus a caller salt.
    pub fn from_point(salt: u64, coords: &[f64]) -> Self {
        let mut s = salt ^ 0x9e37_79b9_7f4a_7c15;
        for c in coords {
            s = s.wrapping_mul(0xff51_afd7_ed55_8ccd) ^ c.to_bits();
        }
        Self::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Low-discrepancy Halton point in `dim` dimensions (bases 2, 3, 5).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    const BASES: [u64; 3] = [2, 3, 5];
    assert!(dim <= BASES.len(), "halton supports up to 3 dimensions");
    (0..dim)
        .map(|d| {
            let base = BASES[d];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index + 1;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
