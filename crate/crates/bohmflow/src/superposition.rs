//! Coherent superposition of two Gaussian packets centered at +/- x0
//! (Young-type two-slit arrangement along the transverse coordinate).
//!
//! Density and flux follow the explicit two-packet forms with the
//! time-dependent normalizing prefactor omitted; `norm_prefactor` restores it
//! where an absolute density is needed. The velocity field v = J / rho is
//! unaffected by the omission.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::packet::PacketParams;

#[derive(Debug, Clone, Copy)]
pub struct SuperpositionConfig {
    /// Shared packet parameters (mass, hbar, sigma0). The stored center is
    /// ignored; the two packets sit at +/- half_separation.
    pub packet: PacketParams,
    /// x0 = d/2, half the slit separation.
    pub half_separation: f64,
    /// Relative density floor below which velocity evaluation reports
    /// node proximity, measured against the interference-term envelope.
    pub rho_floor_rel: f64,
}

/// Phase difference between the two packet branches: phi(x) = -kappa x.
#[derive(Debug, Clone, Copy)]
pub struct PhaseDifference {
    pub kappa: f64,
}

impl PhaseDifference {
    pub fn phi_at(&self, x: f64) -> f64 {
        -self.kappa * x
    }
}

impl SuperpositionConfig {
    pub fn new(packet: PacketParams, half_separation: f64) -> Result<Self> {
        if !(half_separation > 0.0 && half_separation.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "half_separation",
                reason: format!("must be > 0, got {half_separation}"),
            });
        }
        Ok(Self { packet, half_separation, rho_floor_rel: 1e-12 })
    }

    pub fn slit_separation(&self) -> f64 {
        2.0 * self.half_separation
    }

    /// The two-slit picture assumes initially well-separated packets;
    /// callers may surface this as a warning (the model stays valid).
    pub fn overlap_warning(&self) -> Option<String> {
        if self.half_separation < 3.0 * self.packet.sigma0 {
            Some(format!(
                "x0 = {} < 3 sigma0 = {}: packets overlap initially, two-slit picture is degraded",
                self.half_separation,
                3.0 * self.packet.sigma0
            ))
        } else {
            None
        }
    }

    fn plus_packet(&self) -> PacketParams {
        self.packet.with_center(self.half_separation)
    }

    fn minus_packet(&self) -> PacketParams {
        self.packet.with_center(-self.half_separation)
    }

    /// kappa(t) = hbar t x0 / 2 m sigma0^2 sigma_t^2.
    pub fn kappa(&self, t: f64) -> f64 {
        let p = &self.packet;
        let sig = p.sigma_t(t);
        p.hbar * t * self.half_separation / (2.0 * p.mass * p.sigma0 * p.sigma0 * sig * sig)
    }

    pub fn phase_difference(&self, t: f64) -> PhaseDifference {
        PhaseDifference { kappa: self.kappa(t) }
    }

    /// Envelope of the interference cross term, exp(-(x^2 + x0^2) / 2 sigma_t^2).
    pub fn cross_envelope(&self, x: f64, t: f64) -> f64 {
        let sig = self.packet.sigma_t(t);
        let x0 = self.half_separation;
        (-(x * x + x0 * x0) / (2.0 * sig * sig)).exp()
    }

    /// Prefactor 1 / sqrt(2 pi) sigma_t that converts the unnormalized
    /// density/flux below into |psi_+ + psi_-|^2 and its exact flux.
    pub fn norm_prefactor(&self, t: f64) -> f64 {
        1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.packet.sigma_t(t))
    }

    /// Unnormalized probability density of the superposition.
    pub fn rho(&self, x: f64, t: f64) -> f64 {
        let sig = self.packet.sigma_t(t);
        let x0 = self.half_separation;
        let two_sig2 = 2.0 * sig * sig;
        let plus = (-(x - x0) * (x - x0) / two_sig2).exp();
        let minus = (-(x + x0) * (x + x0) / two_sig2).exp();
        plus + minus + 2.0 * self.cross_envelope(x, t) * (self.kappa(t) * x).cos()
    }

    /// Unnormalized quantum flux of the superposition (same omitted prefactor
    /// as `rho`, so velocity = flux / rho is exact).
    pub fn flux(&self, x: f64, t: f64) -> f64 {
        let p = &self.packet;
        let sig = p.sigma_t(t);
        let x0 = self.half_separation;
        let two_sig2 = 2.0 * sig * sig;
        let plus = (-(x - x0) * (x - x0) / two_sig2).exp();
        let minus = (-(x + x0) * (x + x0) / two_sig2).exp();
        let env = self.cross_envelope(x, t);
        let kx = self.kappa(t) * x;
        let spread_rate =
            p.hbar * p.hbar * t / (4.0 * p.mass * p.mass * p.sigma0 * p.sigma0 * sig * sig);
        spread_rate * ((x - x0) * plus + (x + x0) * minus + 2.0 * x * env * kx.cos())
            - p.hbar * x0 / (p.mass * sig * sig) * env * kx.sin()
    }

    /// Density floor at (x, t): `rho_floor_rel` times the cross-term envelope.
    pub fn rho_floor(&self, x: f64, t: f64) -> f64 {
        self.rho_floor_rel * self.cross_envelope(x, t)
    }

    /// Local velocity v = J / rho. Exactly zero on the symmetry axis; near an
    /// interference node (rho below the floor with nonzero flux) the field is
    /// singular and `NodeProximity` is reported instead of a value.
    pub fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        if x == 0.0 {
            // J(0,t) = 0 by odd parity; 0/0 resolves to the stationary axis.
            return Ok(0.0);
        }
        let rho = self.rho(x, t);
        let floor = self.rho_floor(x, t);
        if rho < floor {
            return Err(Error::NodeProximity { x, t, rho, floor });
        }
        Ok(self.flux(x, t) / rho)
    }

    /// Superposed wave function psi_+ + psi_- (each branch normalized).
    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.plus_packet().psi(x, t) + self.minus_packet().psi(x, t)
    }

    /// Long-time density: the cosh/cos form, or the cos^2 simplification
    /// when `simplified` is set. Same scale as the corresponding limit of the
    /// unnormalized exact `rho`.
    pub fn rho_longtime(&self, x: f64, t: f64, simplified: bool) -> f64 {
        let p = &self.packet;
        let sig_asym = p.hbar * t / (2.0 * p.mass * p.sigma0); // sigma_t ~ v_s t
        let x0 = self.half_separation;
        let gauss = (-x * x / (2.0 * sig_asym * sig_asym)).exp();
        if simplified {
            let c = (p.mass * x0 * x / (p.hbar * t)).cos();
            4.0 * gauss * c * c
        } else {
            let cosh_arg = x * x0 / (sig_asym * sig_asym);
            let cos_arg = 2.0 * p.mass * x0 * x / (p.hbar * t);
            2.0 * gauss * (cosh_arg.cosh() + cos_arg.cos())
        }
    }

    /// Long-time flux matching `rho_longtime`.
    pub fn flux_longtime(&self, x: f64, t: f64, simplified: bool) -> f64 {
        let p = &self.packet;
        let sig_asym = p.hbar * t / (2.0 * p.mass * p.sigma0);
        let x0 = self.half_separation;
        let gauss = (-x * x / (2.0 * sig_asym * sig_asym)).exp();
        let sinh_term = 2.0 * x0 / t * gauss * (x * x0 / (sig_asym * sig_asym)).sinh();
        x / t * self.rho_longtime(x, t, simplified) - sinh_term
    }

    /// Asymptotic velocity x/t - (x0/2t) sinh / cos^2 (the "kick" form).
    pub fn velocity_longtime(&self, x: f64, t: f64) -> f64 {
        let p = &self.packet;
        let sig_asym = p.hbar * t / (2.0 * p.mass * p.sigma0);
        let x0 = self.half_separation;
        let c = (p.mass * x0 * x / (p.hbar * t)).cos();
        x / t - x0 / (2.0 * t) * (x * x0 / (sig_asym * sig_asym)).sinh() / (c * c)
    }

    /// Quantized channel velocity nu * pi hbar / m x0.
    pub fn channel_velocity(&self, nu: i32) -> f64 {
        nu as f64 * self.velocity_ladder_step()
    }

    /// Ladder step pi hbar / m x0 = 2 pi hbar / m d.
    pub fn velocity_ladder_step(&self) -> f64 {
        std::f64::consts::PI * self.packet.hbar / (self.packet.mass * self.half_separation)
    }

    /// Constant rates at which fringe minima and maxima travel:
    /// minima at x = (2 nu + 1) pi hbar t / m d, maxima at x = 2 nu pi hbar t / m d.
    pub fn fringe_rates(&self, nu: i32) -> (f64, f64) {
        let base = std::f64::consts::PI * self.packet.hbar
            / (self.packet.mass * self.slit_separation());
        let min_rate = (2 * nu + 1) as f64 * base;
        let max_rate = 2.0 * nu as f64 * base;
        (min_rate, max_rate)
    }

    /// Unnormalized densities of the two branches plus the interference term,
    /// for decomposition checks: rho = rho_+ + rho_- + 2 sqrt(rho_+ rho_-) cos phi.
    pub fn branch_densities(&self, x: f64, t: f64) -> (f64, f64) {
        let sig = self.packet.sigma_t(t);
        let x0 = self.half_separation;
        let two_sig2 = 2.0 * sig * sig;
        (
            (-(x - x0) * (x - x0) / two_sig2).exp(),
            (-(x + x0) * (x + x0) / two_sig2).exp(),
        )
    }
}
