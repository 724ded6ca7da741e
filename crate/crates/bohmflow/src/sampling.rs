//! Tabulated-CDF inverse-transform sampling and deterministic RNG streams.
//!
//! One base seed plus one ChaCha stream per logical index keeps parallel and
//! serial runs bitwise identical.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Deterministic substream: same (seed, index) always yields the same stream,
/// distinct indices are independent.
pub fn substream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Numerically tabulated CDF of a nonnegative density on [a, b], with linear
/// interpolation of the inverse.
#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    total_mass: f64,
}

impl TabulatedCdf {
    /// Trapezoid tabulation on `n` uniform intervals.
    pub fn build(density: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<Self> {
        assert!(b > a && n >= 2);
        let h = (b - a) / n as f64;
        let mut xs = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut prev = density(a).max(0.0);
        xs.push(a);
        cdf.push(0.0);
        for i in 1..=n {
            let x = a + i as f64 * h;
            let f = density(x).max(0.0);
            acc += 0.5 * (prev + f) * h;
            xs.push(x);
            cdf.push(acc);
            prev = f;
        }
        let total_mass = acc;
        if !(total_mass > 1e-300) || !total_mass.is_finite() {
            return Err(Error::DegenerateDensity { mass: total_mass });
        }
        for c in cdf.iter_mut() {
            *c /= total_mass;
        }
        // enforce exact bounds
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { xs, cdf, total_mass })
    }

    /// Tabulates starting at 2^14 intervals, doubling until the mean and
    /// standard deviation drift by less than `moment_tol` (relative to the
    /// distribution width).
    pub fn build_refined(
        density: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        moment_tol: f64,
    ) -> Result<Self> {
        let mut n = 1 << 14;
        let mut current = Self::build(density, a, b, n)?;
        loop {
            if n >= 1 << 20 {
                return Ok(current);
            }
            n *= 2;
            let next = Self::build(density, a, b, n)?;
            let (m0, s0) = current.moments();
            let (m1, s1) = next.moments();
            let width = s1.max(1e-300);
            if ((m1 - m0) / width).abs() < moment_tol && ((s1 - s0) / width).abs() < moment_tol {
                return Ok(next);
            }
            current = next;
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Mean and standard deviation of the tabulated distribution (trapezoid).
    pub fn moments(&self) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for w in self.xs.windows(2).zip(self.cdf.windows(2)) {
            let (xw, cw) = w;
            let dm = cw[1] - cw[0];
            let xm = 0.5 * (xw[0] + xw[1]);
            m1 += xm * dm;
            m2 += xm * xm * dm;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Inverse CDF at level u in [0, 1].
    pub fn inverse(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // binary search for the bracketing segment
        let idx = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => return self.xs[i],
            Err(i) => i.clamp(1, self.cdf.len() - 1),
        };
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        if c1 > c0 {
            x0 + (u - c0) / (c1 - c0) * (x1 - x0)
        } else {
            0.5 * (x0 + x1)
        }
    }

    /// Positions at the CDF levels (i + 1/2) / n.
    pub fn quantiles(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.inverse((i as f64 + 0.5) / n as f64)).collect()
    }

    /// `n` i.i.d. draws from the given RNG.
    pub fn sample(&self, rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.inverse(rng.gen::<f64>())).collect()
    }
}
