//! Derived diagnostics: fringe extrema tracking, interference-channel ladder
//! extraction, energy decomposition and dispersion-regime classification.

use crate::error::{Error, Result};
use crate::packet::PacketParams;
use crate::quadrature::simpson;

/// Locations of density extrema at one time.
#[derive(Debug, Clone)]
pub struct ExtremaReport {
    pub minima: Vec<f64>,
    pub maxima: Vec<f64>,
    /// Flat-topped maxima (plateau within 1e-12), reported separately.
    pub plateau_maxima: Vec<f64>,
}

impl ExtremaReport {
    /// All extrema in ascending order, minima and maxima interleaved.
    pub fn interleaved(&self) -> Vec<(f64, bool)> {
        let mut all: Vec<(f64, bool)> = self
            .minima
            .iter()
            .map(|&x| (x, false))
            .chain(self.maxima.iter().map(|&x| (x, true)))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        all
    }
}

fn golden_section(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    find_max: bool,
) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let sign = if find_max { -1.0 } else { 1.0 };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sign * f(c);
    let mut fd = sign * f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sign * f(d);
        }
    }
    0.5 * (a + b)
}

/// Locates extrema of `rho` on the grid by derivative sign changes, refining
/// each bracketed extremum by golden section to `position_tol` and
/// classifying by the second-difference sign. Flat runs (relative plateau
/// below 1e-12) bounded by a rise and a fall are reported as plateau maxima.
pub fn find_extrema(
    rho: impl Fn(f64) -> f64,
    grid: &[f64],
    position_tol: f64,
) -> Result<ExtremaReport> {
    assert!(grid.len() >= 5, "need at least five grid points");
    let values: Vec<f64> = grid.iter().map(|&x| rho(x)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let flat_tol = 1e-12 * scale;

    #[derive(PartialEq, Clone, Copy)]
    enum Slope {
        Up,
        Down,
        Flat,
    }
    let slopes: Vec<Slope> = values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d > flat_tol {
                Slope::Up
            } else if d < -flat_tol {
                Slope::Down
            } else {
                Slope::Flat
            }
        })
        .collect();

    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    let mut plateau_maxima = Vec::new();
    let mut brackets: Vec<f64> = Vec::new(); // refined positions, for spacing check

    let mut i = 0;
    while i < slopes.len() {
        if slopes[i] == Slope::Flat {
            i += 1;
            continue;
        }
        // find the next non-flat slope
        let mut j = i + 1;
        while j < slopes.len() && slopes[j] == Slope::Flat {
            j += 1;
        }
        if j >= slopes.len() {
            break;
        }
        if slopes[i] != slopes[j] {
            // sign change across [grid[i], grid[j+1]]
            let a = grid[i];
            let b = grid[j + 1];
            let is_max = slopes[i] == Slope::Up;
            if j > i + 1 {
                // a genuine plateau separated the rise and fall
                if is_max {
                    plateau_maxima.push(0.5 * (a + b));
                }
            } else {
                let x_star = golden_section(&rho, a, b, position_tol, is_max);
                if is_max {
                    maxima.push(x_star);
                } else {
                    minima.push(x_star);
                }
                if let Some(&prev) = brackets.last() {
                    let min_spacing = 4.0 * (grid[1] - grid[0]);
                    if x_star - prev < min_spacing {
                        return Err(Error::ResolutionError {
                            x_a: prev,
                            x_b: x_star,
                            min_spacing,
                        });
                    }
                }
                brackets.push(x_star);
            }
        }
        i = j;
    }
    Ok(ExtremaReport { minima, maxima, plateau_maxima })
}

/// One interference channel: the interval between adjacent density minima and
/// the density-weighted mean velocity of the flow across it.
#[derive(Debug, Clone, Copy)]
pub struct Channel {
    pub nu: i32,
    pub x_lo: f64,
    pub x_hi: f64,
    pub mean_velocity: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelLadder {
    pub channels: Vec<Channel>,
}

impl ChannelLadder {
    pub fn channel(&self, nu: i32) -> Option<&Channel> {
        self.channels.iter().find(|c| c.nu == nu)
    }
}

/// Splits the grid at density minima and computes, per channel, the
/// rho-weighted mean velocity int J dx / int rho dx (the flux integrand is
/// regular across nodes, so no floor is needed). Channel indices count
/// outward from the channel containing x = 0.
pub fn channel_ladder_extract(
    rho: impl Fn(f64) -> f64 + Copy,
    flux: impl Fn(f64) -> f64 + Copy,
    grid: &[f64],
    position_tol: f64,
) -> Result<ChannelLadder> {
    let extrema = find_extrema(rho, grid, position_tol)?;
    let minima = &extrema.minima;
    if minima.len() < 2 {
        return Ok(ChannelLadder { channels: vec![] });
    }
    let mut channels = Vec::new();
    let mut center_index = None;
    for (i, w) in minima.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let mass = simpson(rho, a, b, 512);
        let momentum = simpson(flux, a, b, 512);
        if a <= 0.0 && b > 0.0 {
            center_index = Some(i);
        }
        channels.push(Channel { nu: 0, x_lo: a, x_hi: b, mean_velocity: momentum / mass });
    }
    let center = center_index.unwrap_or(channels.len() / 2);
    for (i, c) in channels.iter_mut().enumerate() {
        c.nu = i as i32 - center as i32;
    }
    Ok(ChannelLadder { channels })
}

/// Density-weighted kinetic / quantum-potential energy split.
#[derive(Debug, Clone, Copy)]
pub struct EnergySplit {
    pub mean_kinetic: f64,
    pub mean_quantum: f64,
}

impl EnergySplit {
    pub fn total(&self) -> f64 {
        self.mean_kinetic + self.mean_quantum
    }
}

/// Quadratures of K rho and Q rho over [a, b], normalized by int rho.
pub fn energy_decomposition(
    kinetic: impl Fn(f64) -> f64,
    quantum: impl Fn(f64) -> f64,
    rho: impl Fn(f64) -> f64 + Copy,
    a: f64,
    b: f64,
) -> EnergySplit {
    let n = 8192;
    let mass = simpson(rho, a, b, n);
    let k = simpson(|x| kinetic(x) * rho(x), a, b, n);
    let q = simpson(|x| quantum(x) * rho(x), a, b, n);
    EnergySplit { mean_kinetic: k / mass, mean_quantum: q / mass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionRegime {
    Early,
    Transition,
    Asymptotic,
}

/// Classifies t against the dispersion timescale tau = 2 m sigma0^2 / hbar.
/// Default thresholds: early below 0.1 tau, asymptotic above 10 tau.
pub fn dispersion_regime(p: &PacketParams, t: f64) -> DispersionRegime {
    dispersion_regime_with(p, t, 0.1, 10.0)
}

pub fn dispersion_regime_with(
    p: &PacketParams,
    t: f64,
    early_frac: f64,
    asymptotic_frac: f64,
) -> DispersionRegime {
    let tau = p.tau();
    if t < early_frac * tau {
        DispersionRegime::Early
    } else if t > asymptotic_frac * tau {
        DispersionRegime::Asymptotic
    } else {
        DispersionRegime::Transition
    }
}

/// Fringe visibility (I_max - I_min) / (I_max + I_min) of a binned intensity
/// profile: averages the profile over windows of half-width `half_window`
/// centered at the expected maxima / minima positions.
pub fn fringe_visibility(
    profile: &[f64],
    centers: &[f64],
    maxima_at: &[f64],
    minima_at: &[f64],
    half_window: f64,
) -> f64 {
    let window_mean = |x0: f64| -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (c, v) in centers.iter().zip(profile.iter()) {
            if (c - x0).abs() <= half_window {
                sum += v;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    };
    let i_max: Vec<f64> = maxima_at.iter().filter_map(|&x| window_mean(x)).collect();
    let i_min: Vec<f64> = minima_at.iter().filter_map(|&x| window_mean(x)).collect();
    if i_max.is_empty() || i_min.is_empty() {
        return 0.0;
    }
    let max = i_max.iter().sum::<f64>() / i_max.len() as f64;
    let min = i_min.iter().sum::<f64>() / i_min.len() as f64;
    if max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}
