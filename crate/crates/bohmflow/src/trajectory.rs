//! Bohmian trajectory integration: streamlines of the local velocity field.
//!
//! Uses an embedded Dormand-Prince 4(5) pair with PI step-size control and
//! 4th-order dense output. Node passages ("kicks") are steep but integrable;
//! the step controller resolves them, and integration aborts only when the
//! velocity evaluation keeps reporting node proximity below the minimum step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::packet::PacketParams;
use crate::sampling::{substream_rng, TabulatedCdf};
use crate::superposition::SuperpositionConfig;

/// Local velocity field v(x, t). Implementations must be safe for concurrent
/// calls (swarm integration is parallel).
pub trait VelocityField: Sync {
    fn velocity(&self, x: f64, t: f64) -> Result<f64>;
}

impl VelocityField for PacketParams {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        Ok(PacketParams::velocity(self, x, t))
    }
}

impl VelocityField for SuperpositionConfig {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        SuperpositionConfig::velocity(self, x, t)
    }
}

impl<F: Fn(f64, f64) -> Result<f64> + Sync> VelocityField for F {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        self(x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    AbortedNearNode,
}

/// Time-ordered positions of one tracer.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial_condition: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub final_time: f64,
    pub final_position: f64,
    pub status: TrajectoryStatus,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, h_min: 1e-13, max_steps: 10_000_000 }
    }
}

impl IntegratorOptions {
    /// Defaults scaled to the packet: atol = 1e-10 sigma0, h_min = 1e-12 tau.
    pub fn for_packet(p: &PacketParams) -> Self {
        Self { rtol: 1e-8, atol: 1e-10 * p.sigma0, h_min: 1e-12 * p.tau(), max_steps: 10_000_000 }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 0.2;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;
// dense-output weights (Hairer & Wanner contd5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct DenseSegment {
    t: f64,
    h: f64,
    rcont: [f64; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> f64 {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        self.rcont[0]
            + theta
                * (self.rcont[1]
                    + theta1
                        * (self.rcont[2] + theta * (self.rcont[3] + theta1 * self.rcont[4])))
    }
}

/// Integrates dx/dt = v(x, t) from (x_init, t0) to t1 (either direction),
/// recording dense-output positions at `output_times` (which must lie inside
/// the window, ordered in the direction of integration).
pub fn integrate_trajectory(
    field: &dyn VelocityField,
    x_init: f64,
    t0: f64,
    t1: f64,
    output_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    assert!(t1 != t0, "empty integration window");
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    for w in output_times.windows(2) {
        assert!((w[1] - w[0]) * dir > 0.0, "output times must follow the integration direction");
    }
    if let (Some(first), Some(last)) = (output_times.first(), output_times.last()) {
        assert!((first - t0) * dir >= 0.0 && (t1 - last) * dir >= 0.0, "output times outside window");
    }

    let mut traj = Trajectory {
        initial_condition: x_init,
        times: Vec::with_capacity(output_times.len()),
        positions: Vec::with_capacity(output_times.len()),
        final_time: t0,
        final_position: x_init,
        status: TrajectoryStatus::Completed,
    };
    let mut next_output = 0usize;
    while next_output < output_times.len() && output_times[next_output] == t0 {
        traj.times.push(t0);
        traj.positions.push(x_init);
        next_output += 1;
    }

    let mut t = t0;
    let mut x = x_init;
    let mut h = dir * (span * 1e-4).max(opts.h_min);
    let mut k1 = match field.velocity(x, t) {
        Ok(v) => v,
        Err(Error::NodeProximity { .. }) => {
            traj.status = TrajectoryStatus::AbortedNearNode;
            return Ok(traj);
        }
        Err(e) => return Err(e),
    };
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;

    'outer: while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { t, h, h_min: opts.h_min });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        // evaluate stages; on node proximity shrink the step and retry
        let stages = loop {
            let eval = |xx: f64, tt: f64| field.velocity(xx, tt);
            let attempt = (|| -> Result<[f64; 7]> {
                let k2 = eval(x + h * A21 * k1, t + C[1] * h)?;
                let k3 = eval(x + h * (A31 * k1 + A32 * k2), t + C[2] * h)?;
                let k4 = eval(x + h * (A41 * k1 + A42 * k2 + A43 * k3), t + C[3] * h)?;
                let k5 = eval(
                    x + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
                    t + C[4] * h,
                )?;
                let k6 = eval(
                    x + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
                    t + C[5] * h,
                )?;
                let y5 = x + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
                let k7 = eval(y5, t + h)?;
                Ok([k2, k3, k4, k5, k6, k7, y5])
            })();
            match attempt {
                Ok(s) => break s,
                Err(Error::NodeProximity { .. }) => {
                    h *= 0.5;
                    if h.abs() < opts.h_min {
                        traj.status = TrajectoryStatus::AbortedNearNode;
                        break 'outer;
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let [k2, k3, k4, k5, k6, k7, y5] = stages;
        let _ = k2;
        let y4 = x + h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let sc = opts.atol + opts.rtol * x.abs().max(y5.abs());
        let err = ((y5 - y4) / sc).abs();

        if err <= 1.0 {
            // accept: build the dense segment and emit requested outputs
            let ydiff = y5 - x;
            let bspl = h * k1 - ydiff;
            let rcont = [
                x,
                ydiff,
                bspl,
                ydiff - h * k7 - bspl,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ];
            let seg = DenseSegment { t, h, rcont };
            while next_output < output_times.len()
                && (output_times[next_output] - (t + h)) * dir <= 0.0
            {
                let to = output_times[next_output];
                traj.times.push(to);
                traj.positions.push(seg.eval(to));
                next_output += 1;
            }
            t += h;
            x = y5;
            k1 = k7; // FSAL
            traj.final_time = t;
            traj.final_position = x;
            let fac = (0.9 * err.max(1e-10).powf(-0.17) * err_prev.powf(0.04)).clamp(0.2, 5.0);
            err_prev = err.max(1e-4);
            h *= fac;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
            if h.abs() < opts.h_min {
                return Err(Error::StepUnderflow { t, h, h_min: opts.h_min });
            }
        }
    }
    Ok(traj)
}

/// How swarm initial conditions are drawn from rho(., t0).
#[derive(Debug, Clone, PartialEq)]
pub enum SamplingMode {
    /// Deterministic positions at CDF levels (i + 1/2) / n.
    EquidistantQuantiles,
    /// I.i.d. inverse-transform draws, one RNG substream per trajectory.
    IidFromRho,
    ExplicitList(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SwarmSpec {
    pub n_trajectories: usize,
    pub t0: f64,
    pub t1: f64,
    pub sampling: SamplingMode,
    pub seed: u64,
    pub output_times: Vec<f64>,
    /// Swarm succeeds when at least this fraction of trajectories completes.
    pub min_complete_fraction: f64,
}

impl SwarmSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(Error::InvalidParameter {
                name: "n_trajectories",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.t1 > self.t0 && self.t0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t0/t1",
                reason: format!("need t1 > t0 >= 0, got t0={}, t1={}", self.t0, self.t1),
            });
        }
        Ok(())
    }
}

/// Samples initial positions from a density at t0 per the swarm's mode.
pub fn sample_initial_positions(
    rho0: impl Fn(f64) -> f64,
    domain: (f64, f64),
    spec: &SwarmSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    match &spec.sampling {
        SamplingMode::ExplicitList(xs) => Ok(xs.clone()),
        SamplingMode::EquidistantQuantiles => {
            let cdf = TabulatedCdf::build_refined(&rho0, domain.0, domain.1, 1e-4)?;
            Ok(cdf.quantiles(spec.n_trajectories))
        }
        SamplingMode::IidFromRho => {
            let cdf = TabulatedCdf::build_refined(&rho0, domain.0, domain.1, 1e-4)?;
            // one substream per trajectory index: parallel and serial agree
            Ok((0..spec.n_trajectories)
                .map(|i| {
                    let mut rng = substream_rng(spec.seed, i as u64);
                    cdf.inverse(rand::Rng::gen::<f64>(&mut rng))
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub trajectories: Vec<Trajectory>,
    pub completed_fraction: f64,
}

/// Integrates one trajectory per sampled initial condition, in parallel,
/// results ordered by trajectory index.
pub fn integrate_swarm(
    field: &dyn VelocityField,
    rho0: impl Fn(f64) -> f64,
    domain: (f64, f64),
    spec: &SwarmSpec,
    opts: &IntegratorOptions,
) -> Result<Swarm> {
    let inits = sample_initial_positions(rho0, domain, spec)?;
    let results: Vec<Result<Trajectory>> = inits
        .par_iter()
        .map(|&x0| integrate_trajectory(field, x0, spec.t0, spec.t1, &spec.output_times, opts))
        .collect();
    let mut trajectories = Vec::with_capacity(results.len());
    let mut completed = 0usize;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(tr) => {
                if tr.status == TrajectoryStatus::Completed {
                    completed += 1;
                }
                trajectories.push(tr);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    let completed_fraction = completed as f64 / spec.n_trajectories as f64;
    if completed_fraction < spec.min_complete_fraction {
        return Err(first_err.unwrap_or(Error::InvalidParameter {
            name: "swarm",
            reason: format!(
                "only {:.1}% of trajectories completed (need {:.1}%)",
                100.0 * completed_fraction,
                100.0 * spec.min_complete_fraction
            ),
        }));
    }
    Ok(Swarm { trajectories, completed_fraction })
}

#[derive(Debug, Clone)]
pub struct NonCrossingReport {
    pub ordered: bool,
    /// (check time, left trajectory index) of the first ordering violation.
    pub first_violation: Option<(f64, usize)>,
}

/// Verifies that the initial strict ordering of positions is preserved at
/// every shared output time.
pub fn check_non_crossing(trajectories: &[Trajectory]) -> NonCrossingReport {
    if trajectories.len() < 2 {
        return NonCrossingReport { ordered: true, first_violation: None };
    }
    let n_times = trajectories.iter().map(|t| t.times.len()).min().unwrap_or(0);
    for k in 0..n_times {
        for i in 0..trajectories.len() - 1 {
            if trajectories[i].positions[k] >= trajectories[i + 1].positions[k] {
                return NonCrossingReport {
                    ordered: false,
                    first_violation: Some((trajectories[i].times[k], i)),
                };
            }
        }
    }
    NonCrossingReport { ordered: true, first_violation: None }
}

#[derive(Debug, Clone, Copy)]
pub struct TransportOptions {
    pub n_samples: usize,
    pub seed: u64,
    pub n_bins: usize,
    /// Sampling domain for rho(., t0).
    pub domain_t0: (f64, f64),
    /// Histogram domain at t1.
    pub domain_t1: (f64, f64),
}

/// Quantum-equilibrium (equivariance) check: samples from rho(., t0), pushes
/// every sample along the flow to t1 and returns the L1 distance between the
/// normalized endpoint histogram and normalized rho(., t1).
pub fn transport_density_check(
    field: &dyn VelocityField,
    rho: impl Fn(f64, f64) -> f64 + Sync,
    t0: f64,
    t1: f64,
    opts: &TransportOptions,
    integ: &IntegratorOptions,
) -> Result<f64> {
    let cdf = TabulatedCdf::build_refined(|x| rho(x, t0), opts.domain_t0.0, opts.domain_t0.1, 1e-4)?;
    let n = opts.n_samples;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream_rng(opts.seed, i as u64);
            cdf.inverse(rand::Rng::gen::<f64>(&mut rng))
        })
        .collect();
    let endpoints: Vec<f64> = if t1 == t0 {
        samples
    } else {
        samples
            .par_iter()
            .map(|&x0| {
                integrate_trajectory(field, x0, t0, t1, &[], integ).map(|tr| tr.final_position)
            })
            .collect::<Result<Vec<f64>>>()?
    };

    let (lo, hi) = opts.domain_t1;
    let nb = opts.n_bins;
    let w = (hi - lo) / nb as f64;
    let mut counts = vec![0u64; nb];
    let mut overflow = 0u64;
    for &x in &endpoints {
        if x < lo || x >= hi {
            overflow += 1;
        } else {
            counts[(((x - lo) / w) as usize).min(nb - 1)] += 1;
        }
    }
    // bin-integrated reference masses (Simpson inside each bin)
    let masses: Vec<f64> = (0..nb)
        .map(|i| {
            let a = lo + i as f64 * w;
            crate::quadrature::simpson(|x| rho(x, t1), a, a + w, 16)
        })
        .collect();
    let total_mass: f64 = masses.iter().sum();
    if !(total_mass > 1e-300) {
        return Err(Error::DegenerateDensity { mass: total_mass });
    }
    let mut l1 = overflow as f64 / n as f64;
    for (c, m) in counts.iter().zip(masses.iter()) {
        l1 += (*c as f64 / n as f64 - m / total_mass).abs();
    }
    Ok(l1)
}
