//! Subcommand implementations behind the CLI binary, kept in the library so
//! they are testable without spawning processes.

use std::path::{Path, PathBuf};

use crate::analysis::{channel_ladder_extract, energy_decomposition, find_extrema, EnergySplit};
use crate::config::{RunConfig, Scenario};
use crate::detection::{exposure_series, PixelGrid};
use crate::error::Error;
use crate::fields::{
    continuity_residual, fields_at, hamilton_jacobi_residual, FieldSample, FreePotential,
    WaveFunction,
};
use crate::output::{self, OutputSet};
use crate::quadrature::linspace;
use crate::trajectory::{
    check_non_crossing, integrate_swarm, integrate_trajectory, transport_density_check,
    TransportOptions, VelocityField,
};

/// Density below which a grid point is dropped from field tables: the
/// wave function has underflowed and ratios would be meaningless.
const REPRESENTABLE_RHO: f64 = 1e-280;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 1.
    Compute(String),
    /// Exit code 3.
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Config(_) => 2,
            CliError::VerifyFailed(_) => 3,
        }
    }

    /// One machine-readable line for stderr.
    pub fn stderr_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Config(m) => ("config", m.clone()),
            CliError::Compute(m) => ("compute", m.clone()),
            CliError::VerifyFailed(n) => ("verify", format!("{n} check(s) failed")),
        };
        serde_json::json!({"error": {"kind": kind, "exit_code": self.exit_code(), "message": message}})
            .to_string()
    }
}

fn compute_err(e: Error) -> CliError {
    CliError::Compute(e.to_string())
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        compute_err(e)
    }
}

/// Loads the config file (defaults when absent) and applies overrides with
/// precedence flag > environment > file > built-in default.
pub fn load_config(
    path: Option<&Path>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    scenario: Option<Scenario>,
) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p).map_err(|e| CliError::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var("BOHMFLOW_OUTPUT_DIR") {
        if !dir.is_empty() {
            cfg.output_dir = PathBuf::from(dir);
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Normalized density for either scenario.
fn density(cfg: &RunConfig) -> Result<Box<dyn Fn(f64, f64) -> f64 + Sync>, CliError> {
    match cfg.scenario {
        Scenario::SinglePacket => {
            let p = cfg.packet().map_err(compute_err)?;
            Ok(Box::new(move |x, t| p.rho(x, t)))
        }
        Scenario::TwoSlit => {
            let sp = cfg.superposition().map_err(compute_err)?;
            Ok(Box::new(move |x, t| sp.norm_prefactor(t) * sp.rho(x, t)))
        }
    }
}

fn wavefunction(cfg: &RunConfig) -> Result<Box<dyn WaveFunction>, CliError> {
    match cfg.scenario {
        Scenario::SinglePacket => Ok(Box::new(cfg.packet().map_err(compute_err)?)),
        Scenario::TwoSlit => Ok(Box::new(cfg.superposition().map_err(compute_err)?)),
    }
}

fn velocity_field(cfg: &RunConfig) -> Result<Box<dyn VelocityField>, CliError> {
    match cfg.scenario {
        Scenario::SinglePacket => Ok(Box::new(cfg.packet().map_err(compute_err)?)),
        Scenario::TwoSlit => Ok(Box::new(cfg.superposition().map_err(compute_err)?)),
    }
}

pub fn run_fields(cfg: &RunConfig) -> Result<(), CliError> {
    let wf = wavefunction(cfg)?;
    let grid = linspace(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
    let mut rows: Vec<FieldSample> = Vec::new();
    for &t in &cfg.times {
        let h = wf.recommended_step(t);
        for &x in &grid {
            match fields_at(wf.as_ref(), x, t, h, REPRESENTABLE_RHO) {
                Ok(s) => rows.push(s),
                // Underflowed tails and stencil overruns are dropped, not fatal.
                Err(Error::NodeProximity { .. }) | Err(Error::DomainBounds { .. }) => {}
                Err(e) => return Err(compute_err(e)),
            }
        }
    }
    let mut out = OutputSet::create(&cfg.output_dir)?;
    out.write("fields.csv", &output::fields_csv(&rows))?;
    out.finish(cfg)?;
    Ok(())
}

pub fn run_trajectories(cfg: &RunConfig) -> Result<(), CliError> {
    let field = velocity_field(cfg)?;
    let rho = density(cfg)?;
    let spec = cfg.swarm_spec();
    let opts = cfg.integrator_options().map_err(compute_err)?;
    let t0 = spec.t0;
    let swarm = integrate_swarm(
        field.as_ref(),
        |x| rho(x, t0),
        (cfg.grid.x_min, cfg.grid.x_max),
        &spec,
        &opts,
    )
    .map_err(compute_err)?;
    let report = check_non_crossing(&swarm.trajectories);
    let mut out = OutputSet::create(&cfg.output_dir)?;
    out.write("trajectories.csv", &output::trajectories_csv(&swarm))?;
    out.write("non_crossing.csv", &output::non_crossing_csv(&report))?;
    out.finish(cfg)?;
    Ok(())
}

pub fn run_detect(cfg: &RunConfig) -> Result<(), CliError> {
    let rho = density(cfg)?;
    let t = cfg.detection.time;
    let grid = PixelGrid::new(cfg.detection.x_min, cfg.detection.x_max, cfg.detection.n_pixels);
    let frames = exposure_series(
        |x| rho(x, t),
        &grid,
        &cfg.detection.counts,
        cfg.detection.noise_rate,
        cfg.seed,
    )
    .map_err(compute_err)?;
    let mut out = OutputSet::create(&cfg.output_dir)?;
    for (i, frame) in frames.iter().enumerate() {
        out.write(&format!("detect_{i:03}.csv"), &output::detection_csv(&grid, frame))?;
    }
    out.finish(cfg)?;
    Ok(())
}

pub fn run_analyze(cfg: &RunConfig) -> Result<(), CliError> {
    let rho = density(cfg)?;
    let wf = wavefunction(cfg)?;
    let grid = linspace(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
    let t_last = cfg.times.last().copied().unwrap_or(0.0);

    let extrema =
        find_extrema(|x| rho(x, t_last), &grid, 1e-9 * (cfg.grid.x_max - cfg.grid.x_min))
            .map_err(compute_err)?;

    let mut out = OutputSet::create(&cfg.output_dir)?;
    out.write("extrema.csv", &output::extrema_csv(t_last, &extrema))?;

    if cfg.scenario == Scenario::TwoSlit {
        let sp = cfg.superposition().map_err(compute_err)?;
        let pref = sp.norm_prefactor(t_last);
        let ladder = channel_ladder_extract(
            |x| pref * sp.rho(x, t_last),
            |x| pref * sp.flux(x, t_last),
            &grid,
            1e-9 * (cfg.grid.x_max - cfg.grid.x_min),
        )
        .map_err(compute_err)?;
        out.write("ladder.csv", &output::ladder_csv(t_last, &ladder))?;
    }

    let mut energy_rows: Vec<(f64, EnergySplit)> = Vec::new();
    for &t in &cfg.times {
        let h = wf.recommended_step(t);
        let sample = |x: f64| fields_at(wf.as_ref(), x, t, h, REPRESENTABLE_RHO);
        let split = energy_decomposition(
            |x| sample(x).map(|s| s.kinetic).unwrap_or(0.0),
            |x| sample(x).map(|s| s.quantum_potential).unwrap_or(0.0),
            |x| rho(x, t),
            cfg.grid.x_min,
            cfg.grid.x_max,
        );
        energy_rows.push((t, split));
    }
    out.write("energy.csv", &output::energy_csv(&energy_rows))?;
    out.finish(cfg)?;
    Ok(())
}

type CheckResult = (&'static str, Result<(), String>);

fn check(name: &'static str, body: impl FnOnce() -> Result<(), String>) -> CheckResult {
    (name, body())
}

/// The self-verification suite: each named invariant is recomputed at reduced
/// scale and judged at its stated tolerance. Prints one line per check.
pub fn run_verify(cfg: &RunConfig) -> Result<(), CliError> {
    let results = verify_checks(cfg)?;
    let mut failures = 0usize;
    for (name, res) in &results {
        match res {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failures > 0 {
        Err(CliError::VerifyFailed(failures))
    } else {
        Ok(())
    }
}

pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let p = cfg.packet().map_err(compute_err)?;
    let sp = cfg.superposition().map_err(|e| {
        CliError::Config(format!("verify needs a valid two-slit setup: {e}"))
    })?;
    let opts = cfg.integrator_options().map_err(compute_err)?;
    let e_bar = p.energy_expectation();
    let mut results = Vec::new();

    results.push(check("energy_conservation", || {
        for &t in &[0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let w = 12.0 * p.sigma_t(t);
            let split = energy_decomposition(
                |x| p.kinetic_term(x, t),
                |x| p.quantum_potential(x, t),
                |x| p.rho(x, t),
                p.center_at(t) - w,
                p.center_at(t) + w,
            );
            let rel = (split.total() - e_bar).abs() / e_bar;
            if rel > 1e-6 {
                return Err(format!("<K>+<Q> off by {rel:.2e} at t={t}"));
            }
        }
        Ok(())
    }));

    results.push(check("closed_form_trajectories", || {
        let tau = p.tau();
        for &x0 in &[-2.0, -0.5, 0.0, 0.3, 1.0, 2.5] {
            let t1 = 5.0 * tau;
            let traj = integrate_trajectory(&p, x0, 0.0, t1, &[t1], &opts)
                .map_err(|e| e.to_string())?;
            let exact = p.trajectory_closed_form(x0, t1);
            let scale = exact.abs().max(p.sigma0);
            let rel = (traj.final_position - exact).abs() / scale;
            if rel > 1e-6 {
                return Err(format!("x0={x0}: relative error {rel:.2e}"));
            }
        }
        Ok(())
    }));

    results.push(check("axis_flux_zero", || {
        for i in 0..20 {
            let t = 0.5 + 0.5 * i as f64;
            let j = sp.flux(0.0, t);
            let scale = sp.rho(sp.half_separation, t).max(1e-300);
            if j.abs() > 1e-14 * scale {
                return Err(format!("J(0,{t}) = {j:.3e}"));
            }
        }
        Ok(())
    }));

    results.push(check("non_crossing", || {
        let spec = crate::trajectory::SwarmSpec {
            n_trajectories: 100,
            t0: 0.0,
            t1: 10.0,
            sampling: crate::trajectory::SamplingMode::EquidistantQuantiles,
            seed: cfg.seed,
            output_times: linspace(0.0, 10.0, 101),
            min_complete_fraction: 1.0,
        };
        let swarm = integrate_swarm(
            &sp,
            |x| sp.rho(x, 0.0),
            (cfg.grid.x_min, cfg.grid.x_max),
            &spec,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        let report = check_non_crossing(&swarm.trajectories);
        if let Some((t, i)) = report.first_violation {
            return Err(format!("ordering violated at t={t}, pair {i}"));
        }
        for traj in &swarm.trajectories {
            let s0 = traj.initial_condition.signum();
            if traj.positions.iter().any(|&x| x != 0.0 && x.signum() != s0) {
                return Err("a trajectory crossed the symmetry axis".into());
            }
        }
        Ok(())
    }));

    results.push(check("fringe_minima", || {
        let pi = std::f64::consts::PI;
        for &t in &[8.0, 10.0] {
            let grid = linspace(-4.0 * t, 4.0 * t, 4001);
            let ext = find_extrema(|x| sp.rho(x, t), &grid, 1e-9)
                .map_err(|e| e.to_string())?;
            let (min_rate, _) = sp.fringe_rates(0);
            let expect = min_rate * t;
            let nearest = ext
                .minima
                .iter()
                .filter(|&&x| x > 0.0)
                .cloned()
                .fold(f64::INFINITY, |best, x| {
                    if (x - expect).abs() < (best - expect).abs() { x } else { best }
                });
            if !nearest.is_finite() {
                return Err(format!("no positive minimum found at t={t}"));
            }
            let rel = (nearest - expect).abs() / expect;
            if rel > 5e-3 {
                return Err(format!("innermost minimum at t={t}: {nearest} vs {expect}"));
            }
        }
        // position accuracy of the innermost pair at t = 10
        let grid = linspace(-40.0, 40.0, 8001);
        let ext = find_extrema(|x| sp.rho(x, 10.0), &grid, 1e-9).map_err(|e| e.to_string())?;
        let inner = ext
            .minima
            .iter()
            .cloned()
            .fold(f64::INFINITY, |b, x| if x.abs() < b.abs() { x } else { b });
        if (inner.abs() - pi).abs() > 1e-3 {
            return Err(format!("innermost minimum |x| = {} vs pi", inner.abs()));
        }
        Ok(())
    }));

    results.push(check("channel_ladder", || {
        // asymptotic regime: the quantized means need t well past 20 tau
        let t = 50.0;
        let grid = linspace(-130.0, 130.0, 16001);
        let ladder = channel_ladder_extract(
            |x| sp.rho(x, t),
            |x| sp.flux(x, t),
            &grid,
            1e-9,
        )
        .map_err(|e| e.to_string())?;
        let step = sp.velocity_ladder_step();
        for nu in -3i32..=3 {
            let ch = ladder.channel(nu).ok_or(format!("channel {nu} missing"))?;
            if nu == 0 {
                if ch.mean_velocity.abs() > 0.05 * step {
                    return Err(format!("channel 0 velocity {:.3e}", ch.mean_velocity));
                }
                continue;
            }
            let expect = sp.channel_velocity(nu);
            let rel = (ch.mean_velocity - expect).abs() / expect.abs();
            if rel > 0.05 {
                return Err(format!("channel {nu}: {:.4} vs {expect:.4}", ch.mean_velocity));
            }
        }
        Ok(())
    }));

    results.push(check("field_consistency", || {
        for &t in &[0.5, 3.0, 10.0] {
            let h = p.sigma_t(t) * 1e-3;
            for &x in &[-1.2, 0.3, 2.0] {
                let s = fields_at(&p, x, t, h, 0.0).map_err(|e| e.to_string())?;
                let dv = (s.velocity - p.velocity(x, t)).abs()
                    / p.spreading_velocity();
                let dq = (s.quantum_potential - p.quantum_potential(x, t)).abs() / e_bar;
                if dv > 1e-6 {
                    return Err(format!("velocity mismatch {dv:.2e} at x={x}, t={t}"));
                }
                if dq > 1e-5 {
                    return Err(format!("Q mismatch {dq:.2e} at x={x}, t={t}"));
                }
            }
        }
        Ok(())
    }));

    results.push(check("madelung_residuals", || {
        let grid = linspace(-6.0, 6.0, 241);
        for &t in &[1.0, 5.0] {
            let dt = 1e-5 * p.tau();
            let h = 1e-3 * p.sigma_t(t);
            let cont = continuity_residual(&sp, &grid, t, dt, h).map_err(|e| e.to_string())?;
            if cont.max_abs() > 1e-4 * cont.scale {
                return Err(format!("continuity residual {:.2e} at t={t}", cont.max_abs()));
            }
            // phase unwrapping is unreliable across the near-nodes of the
            // superposition, so the Hamilton-Jacobi residual uses the packet
            let pgrid = linspace(-4.0 * p.sigma_t(t), 4.0 * p.sigma_t(t), 241);
            let hj = hamilton_jacobi_residual(&p, &FreePotential, &pgrid, t, dt, 1e-280)
                .map_err(|e| e.to_string())?;
            if hj.max_abs() > 1e-3 * e_bar {
                return Err(format!("HJ residual {:.2e} at t={t}", hj.max_abs()));
            }
        }
        Ok(())
    }));

    results.push(check("density_transport", || {
        let topts = TransportOptions {
            n_samples: 20_000,
            seed: cfg.seed,
            n_bins: 60,
            domain_t0: (-10.0, 10.0),
            domain_t1: (-45.0, 45.0),
        };
        let pref = |t: f64| sp.norm_prefactor(t);
        let l1 = transport_density_check(
            &sp,
            |x, t| pref(t) * sp.rho(x, t),
            0.0,
            10.0,
            &topts,
            &opts,
        )
        .map_err(|e| e.to_string())?;
        if l1 > 0.05 {
            return Err(format!("L1 distance {l1:.4} > 0.05 at n=2e4"));
        }
        Ok(())
    }));

    results.push(check("detection_buildup", || {
        let grid = PixelGrid::new(-45.0, 45.0, 512);
        let t = 10.0;
        let frames = exposure_series(
            |x| sp.rho(x, t),
            &grid,
            &[100, 10_000, 100_000],
            0.0,
            cfg.seed,
        )
        .map_err(|e| e.to_string())?;
        let centers = grid.centers();
        let pi = std::f64::consts::PI;
        let maxima: Vec<f64> = (-3i32..=3).map(|nu| 2.0 * nu as f64 * pi).collect();
        let minima: Vec<f64> = (-3i32..=3).map(|nu| (2 * nu + 1) as f64 * pi).collect();
        let mut last_v = -1.0;
        for frame in &frames {
            // add-one smoothing keeps sparse frames from reading as V ~ 1
            let profile: Vec<f64> = frame.counts.iter().map(|&c| c as f64 + 1.0).collect();
            let v = crate::analysis::fringe_visibility(&profile, &centers, &maxima, &minima, 0.8);
            if v < last_v {
                return Err(format!("visibility dropped: {last_v:.3} -> {v:.3}"));
            }
            last_v = v;
        }
        if last_v < 0.6 {
            return Err(format!("final visibility {last_v:.3} < 0.6"));
        }
        Ok(())
    }));

    Ok(results)
}
