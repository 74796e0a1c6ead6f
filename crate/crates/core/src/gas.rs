//! Polytropic gas closure in scaled variables (upstream speed normalised to one).
//!
//! Bernoulli's law fixes the density as a function of the speed,
//! `rho = (kt - (g-1) q^2 / 2)^(1/(g-1))` with `kt = (g-1) * kappa_inf`.

use crate::error::{Error, Result};

/// Arguments of the Bernoulli power below this value count as cavitation.
pub const CAVITATION_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    pub gamma: f64,
    pub rho_inf: f64,
    pub nu: f64,
    pub kappa_inf: f64,
    pub kappa_tilde: f64,
}

impl GasParameters {
    pub fn from_rho_inf(gamma: f64, rho_inf: f64) -> Result<Self> {
        let kappa_inf = bernoulli_constant(rho_inf, gamma)?;
        let nu = rho_inf.powf(gamma - 1.0);
        Ok(Self {
            gamma,
            rho_inf,
            nu,
            kappa_inf,
            kappa_tilde: (gamma - 1.0) * kappa_inf,
        })
    }

    /// `nu = rho_inf^(gamma-1) = 1/M_inf^2`.
    pub fn from_nu(gamma: f64, nu: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        let rho_inf = nu.powf(1.0 / (gamma - 1.0));
        let kappa_inf = 0.5 + nu / (gamma - 1.0);
        Ok(Self {
            gamma,
            rho_inf,
            nu,
            kappa_inf,
            kappa_tilde: (gamma - 1.0) * kappa_inf,
        })
    }

    pub fn from_mach(gamma: f64, mach_inf: f64) -> Result<Self> {
        if !(mach_inf > 0.0) {
            return Err(Error::InvalidParameter(format!("M_inf must be positive, got {mach_inf}")));
        }
        Self::from_nu(gamma, 1.0 / (mach_inf * mach_inf))
    }

    pub fn mach_inf(&self) -> f64 {
        self.nu.powf(-0.5)
    }

    /// `nu^(1/(gamma-1))`, the small scale of the transonic regime (equals `rho_inf`).
    pub fn nu_scale(&self) -> f64 {
        self.nu.powf(1.0 / (self.gamma - 1.0))
    }

    /// Squared sound speed `c^2 = rho^(gamma-1)` from Bernoulli.
    pub fn sound_speed_sq(&self, q: f64) -> Result<f64> {
        let arg = self.kappa_tilde - 0.5 * (self.gamma - 1.0) * q * q;
        if arg <= CAVITATION_GUARD {
            return Err(Error::Cavitation(arg));
        }
        Ok(arg)
    }

    pub fn density(&self, q: f64) -> Result<f64> {
        density_from_speed(q, self)
    }

    /// Bernoulli-consistent state with velocity `(u, v)`.
    pub fn state(&self, u: f64, v: f64) -> Result<FlowState> {
        let rho = self.density(u.hypot(v))?;
        Ok(FlowState { u, v, rho })
    }

    pub fn upstream(&self) -> FlowState {
        FlowState { u: 1.0, v: 0.0, rho: self.rho_inf }
    }

    /// Largest admissible speed (vanishing density).
    pub fn q_max(&self) -> f64 {
        (2.0 * self.kappa_tilde / (self.gamma - 1.0)).sqrt()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (1, 2], got {gamma}")));
    }
    Ok(())
}

/// `kappa_inf = 1/2 + rho_inf^(gamma-1)/(gamma-1)`.
pub fn bernoulli_constant(rho_inf: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(rho_inf > 0.0) || !rho_inf.is_finite() {
        return Err(Error::InvalidParameter(format!("rho_inf must be positive, got {rho_inf}")));
    }
    Ok(0.5 + rho_inf.powf(gamma - 1.0) / (gamma - 1.0))
}

pub fn density_from_speed(q: f64, params: &GasParameters) -> Result<f64> {
    let arg = params.sound_speed_sq(q)?;
    Ok(arg.powf(1.0 / (params.gamma - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub u: f64,
    pub v: f64,
    pub rho: f64,
}

impl FlowState {
    pub fn new(u: f64, v: f64, rho: f64) -> Self {
        Self { u, v, rho }
    }

    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn sound_speed(&self, gamma: f64) -> f64 {
        self.rho.powf(0.5 * (gamma - 1.0))
    }

    /// Mach number `q / rho^((gamma-1)/2)`.
    pub fn mach(&self, gamma: f64) -> Result<f64> {
        mach(self, gamma)
    }

    /// Flow angle `atan2(v, u)`.
    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    pub fn is_bernoulli_consistent(&self, params: &GasParameters, tol: f64) -> bool {
        match params.density(self.speed()) {
            Ok(r) => (r - self.rho).abs() <= tol * r.max(1e-300),
            Err(_) => false,
        }
    }
}

pub fn mach(state: &FlowState, gamma: f64) -> Result<f64> {
    if !(state.rho > 0.0) {
        return Err(Error::InvalidParameter(format!("density must be positive, got {}", state.rho)));
    }
    Ok(state.speed() / state.sound_speed(gamma))
}

/// Scales a raw state by the reference speed: `(u, v, rho) -> (u/ui, v/ui, rho/ui^(2/(g-1)))`.
pub fn scale_state(u: f64, v: f64, rho: f64, u_inf: f64, gamma: f64) -> Result<FlowState> {
    check_gamma(gamma)?;
    if u_inf == 0.0 || !u_inf.is_finite() {
        return Err(Error::InvalidParameter("reference speed must be nonzero".into()));
    }
    let s = u_inf.abs();
    Ok(FlowState {
        u: u / u_inf,
        v: v / u_inf,
        rho: rho / s.powf(2.0 / (gamma - 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_constant_examples() {
        assert_eq!(bernoulli_constant(1.0, 2.0).unwrap(), 1.5);
        assert!((bernoulli_constant(0.01, 2.0).unwrap() - 0.51).abs() < 1e-15);
        assert!((bernoulli_constant(1e-30, 1.5).unwrap() - 0.5).abs() < 1e-14);
        assert!(bernoulli_constant(0.0, 2.0).is_err());
        assert!(bernoulli_constant(1.0, 1.0).is_err());
        assert!(bernoulli_constant(1.0, 2.5).is_err());
    }

    #[test]
    fn density_examples() {
        let p = GasParameters::from_nu(1.4, 0.02).unwrap();
        let r0 = p.density(0.0).unwrap();
        assert!((r0 - p.kappa_tilde.powf(1.0 / 0.4)).abs() < 1e-15 * r0);
        assert!((p.density(1.0).unwrap() - p.rho_inf).abs() < 1e-14 * p.rho_inf);
        assert!(matches!(p.density(p.q_max()), Err(Error::Cavitation(_))));
    }

    #[test]
    fn nu_and_rho_are_cross_consistent() {
        let a = GasParameters::from_rho_inf(1.5, 0.003).unwrap();
        let b = GasParameters::from_nu(1.5, a.nu).unwrap();
        assert!((a.rho_inf - b.rho_inf).abs() < 1e-15);
        assert!((a.kappa_inf - b.kappa_inf).abs() < 1e-15);
        let m = a.upstream().mach(a.gamma).unwrap();
        assert!((m * m * a.nu - 1.0).abs() < 1e-13);
    }

    #[test]
    fn mach_examples() {
        let s = FlowState::new(1.0, 0.0, 0.1);
        assert!((s.mach(2.0).unwrap() - 0.1f64.powf(-0.5)).abs() < 1e-14);
        let c = 0.3f64.powf(0.25);
        let sonic = FlowState::new(c * 0.6, c * 0.8, 0.3);
        assert!((sonic.mach(1.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(FlowState::new(1.0, 0.0, 0.0).mach(2.0).is_err());
    }

    #[test]
    fn scale_identity_and_rejection() {
        let s = scale_state(0.3, -0.2, 0.7, 1.0, 1.4).unwrap();
        assert_eq!(s, FlowState::new(0.3, -0.2, 0.7));
        assert!(scale_state(0.3, -0.2, 0.7, 0.0, 1.4).is_err());
    }
}
