//! Event-by-event detection Monte Carlo: arrival positions sampled from the
//! probability density at a detection time, binned into a 1D pixel array,
//! optionally contaminated with homogeneous Poisson background counts.
//!
//! Growing-exposure frames share one sample stream, so each frame's signal
//! events are a prefix of the next frame's.

use rand_distr::{Distribution, Poisson};

use crate::error::Result;
use crate::sampling::{substream_rng, TabulatedCdf};

/// 1D pixel array along the transverse coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_pixels: usize,
}

impl PixelGrid {
    pub fn new(x_min: f64, x_max: f64, n_pixels: usize) -> Self {
        assert!(x_max > x_min && n_pixels >= 1);
        Self { x_min, x_max, n_pixels }
    }

    pub fn pixel_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_pixels as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.pixel_width();
        (0..self.n_pixels).map(|i| self.x_min + (i as f64 + 0.5) * w).collect()
    }
}

/// Pixel-binned event counts for one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub counts: Vec<u64>,
    pub n_events: u64,
    pub n_noise: u64,
    /// Events that fell outside the pixel grid.
    pub n_discarded: u64,
    pub exposure_label: usize,
}

impl DetectionFrame {
    pub fn empty(grid: &PixelGrid, label: usize) -> Self {
        Self {
            counts: vec![0; grid.n_pixels],
            n_events: 0,
            n_noise: 0,
            n_discarded: 0,
            exposure_label: label,
        }
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// I.i.d. arrival positions from the (numerically normalized) density over
/// `domain`, deterministic per seed.
pub fn sample_arrivals(
    rho_t: impl Fn(f64) -> f64 + Copy,
    domain: (f64, f64),
    n_events: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_events == 0 {
        return Ok(vec![]);
    }
    let cdf = TabulatedCdf::build_refined(rho_t, domain.0, domain.1, 1e-4)?;
    let mut rng = substream_rng(seed, 0);
    Ok(cdf.sample(&mut rng, n_events))
}

/// Bins positions into half-open pixels [left, right); a position exactly on
/// an interior boundary goes to the right bin, out-of-range events are
/// tallied as discarded.
pub fn bin_to_pixels(positions: &[f64], grid: &PixelGrid) -> DetectionFrame {
    let mut frame = DetectionFrame::empty(grid, 0);
    let w = grid.pixel_width();
    for &x in positions {
        if x < grid.x_min || x >= grid.x_max {
            frame.n_discarded += 1;
        } else {
            let idx = (((x - grid.x_min) / w) as usize).min(grid.n_pixels - 1);
            frame.counts[idx] += 1;
            frame.n_events += 1;
        }
    }
    frame
}

/// Adds independent Poisson(noise_rate) background counts to each pixel.
pub fn add_background_noise(mut frame: DetectionFrame, noise_rate: f64, seed: u64) -> DetectionFrame {
    assert!(noise_rate >= 0.0);
    if noise_rate == 0.0 {
        return frame;
    }
    let poisson = Poisson::new(noise_rate).expect("positive rate");
    let mut rng = substream_rng(seed, frame.exposure_label as u64);
    for c in frame.counts.iter_mut() {
        let added = poisson.sample(&mut rng) as u64;
        *c += added;
        frame.n_noise += added;
    }
    frame
}

/// One cumulative frame per requested event total; frame k's signal events
/// are a prefix of frame k+1's stream, emulating a growing exposure time.
/// `noise_rate` is the expected background per pixel per frame.
pub fn exposure_series(
    rho_t: impl Fn(f64) -> f64 + Copy,
    grid: &PixelGrid,
    counts: &[usize],
    noise_rate: f64,
    seed: u64,
) -> Result<Vec<DetectionFrame>> {
    for w in counts.windows(2) {
        assert!(w[1] >= w[0], "cumulative event totals must be ascending");
    }
    let n_max = counts.last().copied().unwrap_or(0);
    let all = sample_arrivals(rho_t, (grid.x_min, grid.x_max), n_max, seed)?;
    let mut frames = Vec::with_capacity(counts.len());
    for (label, &n) in counts.iter().enumerate() {
        let mut frame = bin_to_pixels(&all[..n], grid);
        frame.exposure_label = label;
        frame = add_background_noise(frame, noise_rate, seed.wrapping_add(1));
        frames.push(frame);
    }
    Ok(frames)
}
