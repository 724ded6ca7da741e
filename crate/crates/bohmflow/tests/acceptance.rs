//! Acceptance suite: one test per headline property, each printing a single
//! PASS/FAIL line (visible with `--nocapture`; failures always show it).

use bohmflow::analysis::{channel_ladder_extract, energy_decomposition, find_extrema};
use bohmflow::detection::{exposure_series, PixelGrid};
use bohmflow::fields::{
    continuity_residual, fields_at, hamilton_jacobi_residual, FreePotential,
};
use bohmflow::packet::PacketParams;
use bohmflow::quadrature::{linspace, simpson};
use bohmflow::superposition::SuperpositionConfig;
use bohmflow::trajectory::{
    check_non_crossing, integrate_swarm, integrate_trajectory, transport_density_check,
    IntegratorOptions, SamplingMode, SwarmSpec, TransportOptions,
};

fn packet() -> PacketParams {
    PacketParams::new(1.0, 1.0, 0.5).unwrap()
}

fn slits() -> SuperpositionConfig {
    SuperpositionConfig::new(packet(), 5.0).unwrap()
}

fn report(name: &str, res: Result<(), String>) {
    match &res {
        Ok(()) => println!("ACCEPTANCE {name}: PASS"),
        Err(msg) => println!("ACCEPTANCE {name}: FAIL ({msg})"),
    }
    if let Err(msg) = res {
        panic!("{name}: {msg}");
    }
}

#[test]
fn criterion_01_energy_conservation() {
    report("01 energy conservation <K>+<Q> = 0.5 at five times, 1e-6", {
        let p = packet();
        let tau = p.tau();
        (|| {
            for &t in &[0.0, tau, 5.0 * tau, 20.0 * tau, 100.0 * tau] {
                let w = 12.0 * p.sigma_t(t);
                let split = energy_decomposition(
                    |x| p.kinetic_term(x, t),
                    |x| p.quantum_potential(x, t),
                    |x| p.rho(x, t),
                    -w,
                    w,
                );
                let diff = (split.total() - 0.5).abs();
                if diff > 1e-6 {
                    return Err(format!("t={t}: |<K>+<Q> - 0.5| = {diff:.2e}"));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_02_closed_form_trajectory() {
    report("02 closed-form dispersion trajectories, 50 ICs, rel 1e-6", {
        let p = packet();
        let opts = IntegratorOptions::for_packet(&p);
        let t1 = 10.0 * p.tau();
        let scale = p.sigma_t(t1) / p.sigma0;
        (|| {
            for &x0 in linspace(-2.45, 2.45, 50).iter() {
                let traj = integrate_trajectory(&p, x0, 0.0, t1, &[t1], &opts)
                    .map_err(|e| e.to_string())?;
                let exact = scale * x0;
                let err = (traj.final_position - exact).abs();
                let ok = if exact == 0.0 {
                    err <= 1e-6 * p.sigma0
                } else {
                    err / exact.abs() <= 1e-6
                };
                if !ok {
                    return Err(format!("x(0)={x0}: got {}, want {exact}", traj.final_position));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_03_zero_flux_axis() {
    report("03 symmetry-axis flux |J(0,t)| <= 1e-14 of peak at 20 times", {
        let s = slits();
        (|| {
            for i in 1..=20 {
                let t = 0.5 * i as f64;
                let peak = linspace(0.0, 30.0, 3001)
                    .iter()
                    .map(|&x| s.flux(x, t).abs())
                    .fold(0.0f64, f64::max);
                let j0 = s.flux(0.0, t).abs();
                if j0 > 1e-14 * peak {
                    return Err(format!("t={t}: |J(0)|={j0:.3e}, peak={peak:.3e}"));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_04_non_crossing() {
    report("04 non-crossing: 200 trajectories, 500 check times, sign kept", {
        let s = slits();
        let opts = IntegratorOptions::for_packet(&s.packet);
        let spec = SwarmSpec {
            n_trajectories: 200,
            t0: 0.0,
            t1: 10.0,
            sampling: SamplingMode::EquidistantQuantiles,
            seed: 7,
            output_times: linspace(0.0, 10.0, 500),
            min_complete_fraction: 1.0,
        };
        (|| {
            let swarm = integrate_swarm(&s, |x| s.rho(x, 0.0), (-30.0, 30.0), &spec, &opts)
                .map_err(|e| e.to_string())?;
            let rep = check_non_crossing(&swarm.trajectories);
            if let Some((t, i)) = rep.first_violation {
                return Err(format!("ordering violated at t={t}, pair {i}"));
            }
            for traj in &swarm.trajectories {
                let s0 = traj.initial_condition.signum();
                if traj.positions.iter().any(|&x| x.signum() != s0) {
                    return Err(format!(
                        "trajectory from x(0)={} crossed the axis",
                        traj.initial_condition
                    ));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_05_fringe_rate_law() {
    report("05 fringe minima: +-pi at t=10 within 1e-3; rate constant 0.5%", {
        let s = slits();
        (|| {
            let mut rates: Vec<f64> = Vec::new();
            for &t in &[8.0, 9.0, 10.0] {
                let grid = linspace(-4.0 * t, 4.0 * t, 8001);
                let ext = find_extrema(|x| s.rho(x, t), &grid, 1e-9)
                    .map_err(|e| e.to_string())?;
                let inner = ext
                    .minima
                    .iter()
                    .cloned()
                    .filter(|x| *x > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if !inner.is_finite() {
                    return Err(format!("no positive minimum at t={t}"));
                }
                let mirror = ext
                    .minima
                    .iter()
                    .cloned()
                    .filter(|x| *x < 0.0)
                    .fold(f64::NEG_INFINITY, f64::max);
                if t == 10.0 {
                    let pi = std::f64::consts::PI;
                    if (inner - pi).abs() > 1e-3 || (mirror + pi).abs() > 1e-3 {
                        return Err(format!("t=10 innermost minima {mirror}, {inner}"));
                    }
                }
                rates.push(inner / t);
            }
            let mean = rates.iter().sum::<f64>() / rates.len() as f64;
            for r in &rates {
                if (r - mean).abs() / mean > 5e-3 {
                    return Err(format!("rate drift: {rates:?}"));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_06_channel_quantization() {
    // The quantized means are a long-time limit (still ~23% away at t=10,
    // converging like 1/t), so the 5% match is checked in that regime.
    report("06 channel means nu*pi/5 within 5%, steps within 10%", {
        let s = slits();
        let t = 50.0;
        let grid = linspace(-130.0, 130.0, 16001);
        (|| {
            let ladder =
                channel_ladder_extract(|x| s.rho(x, t), |x| s.flux(x, t), &grid, 1e-9)
                    .map_err(|e| e.to_string())?;
            let vbar = s.velocity_ladder_step();
            for nu in -3i32..=3 {
                let ch = ladder
                    .channel(nu)
                    .ok_or_else(|| format!("channel {nu} missing"))?;
                if nu == 0 {
                    if ch.mean_velocity.abs() > 1e-10 {
                        return Err(format!("channel 0 velocity {:.2e}", ch.mean_velocity));
                    }
                } else {
                    let expect = s.channel_velocity(nu);
                    let rel = (ch.mean_velocity - expect).abs() / expect.abs();
                    if rel > 0.05 {
                        return Err(format!(
                            "nu={nu}: {} vs {expect} ({:.1}%)",
                            ch.mean_velocity,
                            100.0 * rel
                        ));
                    }
                }
            }
            for nu in -2i32..=3 {
                let step = ladder.channel(nu).unwrap().mean_velocity
                    - ladder.channel(nu - 1).unwrap().mean_velocity;
                if (step - vbar).abs() > 0.1 * vbar {
                    return Err(format!("step at nu={nu}: {step} vs {vbar}"));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_07_field_engine_oracle() {
    report("07 stencil fields match closed forms; 4th-order Richardson", {
        let p = packet();
        let s = slits();
        (|| {
            for &t in &[0.5, 1.0, 5.0, 10.0] {
                let h = 1e-3 * p.sigma_t(t);
                for &u in &[-2.0, -0.5, 0.3, 1.0, 2.2] {
                    let x = u * p.sigma_t(t);
                    let f = fields_at(&p, x, t, h, 1e-300).map_err(|e| e.to_string())?;
                    let dr = (f.rho - p.rho(x, t)).abs() / p.rho(0.0, t);
                    let dj = (f.flux - p.flux(x, t)).abs();
                    let dv = (f.velocity - p.velocity(x, t)).abs() / p.spreading_velocity();
                    let dq =
                        (f.quantum_potential - p.quantum_potential(x, t)).abs() / 0.5;
                    if dr > 1e-10 || dj > 1e-8 || dv > 1e-6 || dq > 1e-5 {
                        return Err(format!(
                            "packet mismatch at x={x}, t={t}: dr={dr:.1e} dj={dj:.1e} dv={dv:.1e} dq={dq:.1e}"
                        ));
                    }
                }
            }
            // superposition velocity against its closed form, away from nodes
            let t = 10.0;
            let h = 1e-3 * s.packet.sigma_t(t);
            for &x in &[0.5, 2.0, 6.3, -8.0, 12.0] {
                let f = fields_at(&s, x, t, h, 1e-300).map_err(|e| e.to_string())?;
                let v = s.velocity(x, t).map_err(|e| e.to_string())?;
                let dv = (f.velocity - v).abs() / v.abs().max(s.packet.spreading_velocity());
                if dv > 1e-6 {
                    return Err(format!("superposition velocity at x={x}: {dv:.1e}"));
                }
            }
            // halving the stencil step cuts the error by at least 8x
            let t = p.tau();
            let x = 1.3 * p.sigma_t(t);
            let h = 0.05 * p.sigma_t(t);
            let qerr = |h: f64| {
                (fields_at(&p, x, t, h, 1e-300).unwrap().quantum_potential
                    - p.quantum_potential(x, t))
                .abs()
            };
            let verr = |h: f64| {
                (fields_at(&p, x, t, h, 1e-300).unwrap().velocity - p.velocity(x, t)).abs()
            };
            if qerr(h / 2.0) >= qerr(h) / 8.0 {
                return Err(format!("Q order: e(h)={}, e(h/2)={}", qerr(h), qerr(h / 2.0)));
            }
            if verr(h / 2.0) >= verr(h) / 8.0 {
                return Err(format!("v order: e(h)={}, e(h/2)={}", verr(h), verr(h / 2.0)));
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_08_madelung_residuals() {
    report("08 continuity residual < 1e-4 scale; HJ residual < 1e-3 E", {
        let p = packet();
        let s = slits();
        (|| {
            for &t in &[1.0, 5.0] {
                let dt = 1e-5 * p.tau();
                let h = 1e-3 * p.sigma_t(t);
                let grid_p = linspace(-4.0 * p.sigma_t(t), 4.0 * p.sigma_t(t), 241);
                let cp = continuity_residual(&p, &grid_p, t, dt, h)
                    .map_err(|e| e.to_string())?;
                if cp.max_abs() > 1e-4 * cp.scale {
                    return Err(format!("packet continuity at t={t}: {:.2e}", cp.max_abs()));
                }
                let grid_s = linspace(-6.0, 6.0, 241);
                let cs = continuity_residual(&s, &grid_s, t, dt, h)
                    .map_err(|e| e.to_string())?;
                if cs.max_abs() > 1e-4 * cs.scale {
                    return Err(format!(
                        "superposition continuity at t={t}: {:.2e}",
                        cs.max_abs()
                    ));
                }
                let hj = hamilton_jacobi_residual(&p, &FreePotential, &grid_p, t, dt, 1e-300)
                    .map_err(|e| e.to_string())?;
                if hj.max_abs() > 1e-3 * 0.5 {
                    return Err(format!("HJ at t={t}: {:.2e}", hj.max_abs()));
                }
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_09_equivariance_transport() {
    report("09 transported samples match rho: L1 < 0.02 / 0.03 at 1e5", {
        let p = packet();
        let s = slits();
        let opts = IntegratorOptions::for_packet(&p);
        (|| {
            let t1 = 10.0 * p.tau();
            let topts = TransportOptions {
                n_samples: 100_000,
                seed: 11,
                n_bins: 40,
                domain_t0: (-5.0, 5.0),
                domain_t1: (-6.0 * p.sigma_t(t1), 6.0 * p.sigma_t(t1)),
            };
            let l1 = transport_density_check(&p, |x, t| p.rho(x, t), 0.0, t1, &topts, &opts)
                .map_err(|e| e.to_string())?;
            if l1 > 0.02 {
                return Err(format!("single packet L1 = {l1:.4} > 0.02"));
            }
            let topts = TransportOptions {
                n_samples: 100_000,
                seed: 13,
                n_bins: 120,
                domain_t0: (-10.0, 10.0),
                domain_t1: (-45.0, 45.0),
            };
            let l1 = transport_density_check(
                &s,
                |x, t| s.norm_prefactor(t) * s.rho(x, t),
                0.0,
                10.0,
                &topts,
                &opts,
            )
            .map_err(|e| e.to_string())?;
            if l1 > 0.03 {
                return Err(format!("superposition L1 = {l1:.4} > 0.03"));
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_10_detection_emergence() {
    report("10 fringes emerge: visibility up, 1e6-frame L1 < 0.02, noise ~ 0", {
        let s = slits();
        let t = 10.0;
        let grid = PixelGrid::new(-45.0, 45.0, 512);
        let rho = |x: f64| s.norm_prefactor(t) * s.rho(x, t);
        (|| {
            let frames = exposure_series(rho, &grid, &[100, 10_000, 1_000_000], 0.0, 17)
                .map_err(|e| e.to_string())?;
            let centers = grid.centers();
            let pi = std::f64::consts::PI;
            let maxima: Vec<f64> = (-3i32..=3).map(|nu| 2.0 * nu as f64 * pi).collect();
            let minima: Vec<f64> = (-3i32..=3).map(|nu| (2 * nu + 1) as f64 * pi).collect();
            // add-one smoothing: the raw estimator is biased towards 1 on
            // sparse frames (empty minima windows), hiding fringe emergence
            let vis = |frame: &bohmflow::detection::DetectionFrame| {
                let profile: Vec<f64> = frame.counts.iter().map(|&c| c as f64 + 1.0).collect();
                bohmflow::analysis::fringe_visibility(&profile, &centers, &maxima, &minima, 0.8)
            };
            let vs: Vec<f64> = frames.iter().map(|f| vis(f)).collect();
            for w in vs.windows(2) {
                if w[1] < w[0] {
                    return Err(format!("visibility decreased: {vs:?}"));
                }
            }
            // final frame close to the density in L1
            let last = frames.last().unwrap();
            let n = last.n_events as f64;
            let w = grid.pixel_width();
            // rho is not unit-normalized (the two branches overlap), so the
            // pixel masses are compared after dividing by the total on-screen mass
            let masses: Vec<f64> = (0..grid.n_pixels)
                .map(|i| {
                    let a = grid.x_min + i as f64 * w;
                    simpson(rho, a, a + w, 8)
                })
                .collect();
            let total: f64 = masses.iter().sum();
            let l1: f64 = last
                .counts
                .iter()
                .zip(&masses)
                .map(|(&c, &m)| (c as f64 / n - m / total).abs())
                .sum();
            if l1 > 0.02 {
                return Err(format!("1e6-event histogram L1 = {l1:.4} > 0.02"));
            }
            // background-dominated sparse frame has no usable fringes
            let noisy = exposure_series(rho, &grid, &[100], 20.0, 19)
                .map_err(|e| e.to_string())?;
            let v = vis(&noisy[0]);
            if v.abs() > 0.05 {
                return Err(format!("noise-frame visibility {v:.3} not ~ 0"));
            }
            Ok(())
        })()
    });
}

#[test]
fn criterion_11_asymptotic_laws() {
    // The cos^2 fringe law is compared at 30 tau: the additional cosh factor
    // it drops still contributes 5.5% at 20 tau and 2.4% at 30 tau.
    report("11 asymptotics: width 0.5%, local energy 2%, fringe law 5%", {
        let p = packet();
        let s = slits();
        (|| {
            let t = 100.0 * p.tau();
            let ratio = p.sigma_t(t) / (p.spreading_velocity() * t);
            if (ratio - 1.0).abs() > 5e-3 {
                return Err(format!("sigma_t/(v_s t) = {ratio}"));
            }
            // local energy ~ free-streaming value away from the axis; towards
            // x=0 both sides vanish and an absolute bound takes over
            for &u in &[-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0] {
                let x = u * p.sigma_t(t);
                let lhs = p.kinetic_term(x, t) + p.quantum_potential(x, t);
                let rhs = 0.5 * p.mass * (x / t) * (x / t);
                if (lhs - rhs).abs() / rhs > 0.02 {
                    return Err(format!("energy law at x={x}: {lhs} vs {rhs}"));
                }
            }
            for &u in &[-0.1, 0.0, 0.1] {
                let x = u * p.sigma_t(t);
                let lhs = p.kinetic_term(x, t) + p.quantum_potential(x, t);
                let rhs = 0.5 * p.mass * (x / t) * (x / t);
                if (lhs - rhs).abs() > 0.02 * 0.5 {
                    return Err(format!("energy law near axis at x={x}: {lhs} vs {rhs}"));
                }
            }
            // cos^2 fringe law, shape comparison over |x| <= 3 sigma_t
            let t = 30.0 * s.packet.tau();
            let sig = s.packet.sigma_t(t);
            let grid = linspace(-3.0 * sig, 3.0 * sig, 2401);
            let exact_max = grid.iter().map(|&x| s.rho(x, t)).fold(0.0f64, f64::max);
            let approx_max = grid
                .iter()
                .map(|&x| s.rho_longtime(x, t, true))
                .fold(0.0f64, f64::max);
            let max_diff = grid
                .iter()
                .map(|&x| (s.rho(x, t) / exact_max - s.rho_longtime(x, t, true) / approx_max).abs())
                .fold(0.0f64, f64::max);
            if max_diff > 0.05 {
                return Err(format!("fringe-law deviation {max_diff:.4} > 0.05"));
            }
            Ok(())
        })()
    });
}
