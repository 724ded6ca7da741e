//! Free Gaussian wave packet in closed form.
//!
//! A packet of initial width `sigma0` spreads under free evolution through the
//! complex spreading factor `sigma_tilde(t)`; every field of interest (density,
//! flux, velocity, kinetic and quantum-potential terms) and the tracer
//! trajectories themselves have closed forms, which the rest of the crate uses
//! both directly and as oracles for the numerical machinery.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical constants and Gaussian packet parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    pub mass: f64,
    pub hbar: f64,
    /// Initial width sigma_0.
    pub sigma0: f64,
    /// Packet center at t = 0.
    pub center: f64,
    /// Initial drift momentum. Zero in every scenario treated here; nonzero
    /// values are accepted (standard Galilean boost) but carry no guarantees.
    pub drift_momentum: f64,
}

impl PacketParams {
    pub fn new(mass: f64, hbar: f64, sigma0: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, reason: format!("must be > 0, got {v}") })
            }
        };
        check("mass", mass)?;
        check("hbar", hbar)?;
        check("sigma0", sigma0)?;
        Ok(Self { mass, hbar, sigma0, center: 0.0, drift_momentum: 0.0 })
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    /// Dispersion timescale tau = 2 m sigma0^2 / hbar.
    pub fn tau(&self) -> f64 {
        2.0 * self.mass * self.sigma0 * self.sigma0 / self.hbar
    }

    /// Spreading momentum p_s = hbar / 2 sigma0.
    pub fn spreading_momentum(&self) -> f64 {
        self.hbar / (2.0 * self.sigma0)
    }

    /// Asymptotic spreading velocity v_s = p_s / m.
    pub fn spreading_velocity(&self) -> f64 {
        self.spreading_momentum() / self.mass
    }

    /// Complex spreading factor sigma0 (1 + i hbar t / 2 m sigma0^2).
    pub fn sigma_tilde(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma0, self.sigma0 * t / self.tau())
    }

    /// Time-dependent width sigma_t = |sigma_tilde|.
    pub fn sigma_t(&self, t: f64) -> f64 {
        let r = t / self.tau();
        self.sigma0 * (1.0 + r * r).sqrt()
    }

    /// Instantaneous packet center (moves only when drifting).
    pub fn center_at(&self, t: f64) -> f64 {
        self.center + self.drift_momentum * t / self.mass
    }

    /// The time-dependent state. For zero drift this is
    /// (1 / 2 pi sigma_tilde^2)^{1/4} exp(-(x-c)^2 / 4 sigma0 sigma_tilde),
    /// with the quarter power on the principal branch. A nonzero drift adds
    /// the usual Galilean phase and translates the envelope.
    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let st = self.sigma_tilde(t);
        let st2 = st * st;
        // For t >= 0, arg(sigma_tilde) lies in [0, pi/2), so 2 pi sigma_tilde^2
        // stays off the negative real axis and the principal branch is unambiguous.
        debug_assert!(st2.arg() >= 0.0 && st2.arg() < std::f64::consts::PI);
        let prefactor = (Complex64::new(1.0, 0.0)
            / (2.0 * std::f64::consts::PI * st2))
            .powf(0.25);
        let u = x - self.center_at(t);
        let gauss = (-u * u / (4.0 * self.sigma0 * st)).exp();
        let body = prefactor * gauss;
        if self.drift_momentum == 0.0 {
            body
        } else {
            let p0 = self.drift_momentum;
            let phase = (p0 * (x - self.center) - p0 * p0 * t / (2.0 * self.mass)) / self.hbar;
            body * Complex64::from_polar(1.0, phase)
        }
    }

    /// Constant energy expectation hbar^2 / 8 m sigma0^2 (drift adds p0^2/2m).
    pub fn energy_expectation(&self) -> f64 {
        let e_spread = self.hbar * self.hbar / (8.0 * self.mass * self.sigma0 * self.sigma0);
        e_spread + self.drift_momentum * self.drift_momentum / (2.0 * self.mass)
    }

    /// Normalized probability density |psi|^2.
    pub fn rho(&self, x: f64, t: f64) -> f64 {
        let sig = self.sigma_t(t);
        let u = x - self.center_at(t);
        (-u * u / (2.0 * sig * sig)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sig)
    }

    /// Local velocity field of the free packet,
    /// v(x,t) = hbar^2 t (x - c) / 4 m^2 sigma0^2 sigma_t^2 (+ drift).
    pub fn velocity(&self, x: f64, t: f64) -> f64 {
        let sig = self.sigma_t(t);
        let u = x - self.center_at(t);
        let h2 = self.hbar * self.hbar;
        h2 * t * u / (4.0 * self.mass * self.mass * self.sigma0 * self.sigma0 * sig * sig)
            + self.drift_momentum / self.mass
    }

    /// Probability flux J = rho v.
    pub fn flux(&self, x: f64, t: f64) -> f64 {
        self.rho(x, t) * self.velocity(x, t)
    }

    /// Kinetic term K = (hbar^2 / 8 m sigma0^2) ((sigma_t^2 - sigma0^2)/sigma_t^2) (x^2/sigma_t^2).
    pub fn kinetic_term(&self, x: f64, t: f64) -> f64 {
        let s0sq = self.sigma0 * self.sigma0;
        let stsq = {
            let s = self.sigma_t(t);
            s * s
        };
        let u = x - self.center_at(t);
        let scale = self.hbar * self.hbar / (8.0 * self.mass * s0sq);
        scale * ((stsq - s0sq) / stsq) * (u * u / stsq)
    }

    /// Quantum potential Q = (hbar^2 / 8 m sigma0^2) (sigma0^2/sigma_t^2) (2 - x^2/sigma_t^2).
    pub fn quantum_potential(&self, x: f64, t: f64) -> f64 {
        let s0sq = self.sigma0 * self.sigma0;
        let stsq = {
            let s = self.sigma_t(t);
            s * s
        };
        let u = x - self.center_at(t);
        let scale = self.hbar * self.hbar / (8.0 * self.mass * s0sq);
        scale * (s0sq / stsq) * (2.0 - u * u / stsq)
    }

    /// Analytic tracer trajectory x(t) = (sigma_t / sigma0) x(0), measured
    /// from the (possibly moving) packet center.
    pub fn trajectory_closed_form(&self, x_init: f64, t: f64) -> f64 {
        let scale = self.sigma_t(t) / self.sigma0;
        self.center_at(t) + scale * (x_init - self.center)
    }
}
