//! Cavity configuration, wall trajectory, mode frequencies and the
//! velocity-induced coupling coefficients.
//!
//! Units: l0 = 1 by convention, hbar = c = 1. All quantities are
//! dimensionless multiples of l0 (lengths, times) or 1/l0 (frequencies,
//! rates). `l0` is still carried explicitly so every formula stays
//! dimensionally honest.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrator::Method;

/// Amplitudes above this are rejected outright.
pub const EPSILON_MAX: f64 = 0.1;
/// Amplitudes above this are accepted with a warning: the resonance
/// analysis assumes epsilon << 1.
pub const EPSILON_WARN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub l0: f64,
    pub epsilon: f64,
    pub omega: f64,
    /// Mass parameter M = l0 * k_par. Zero is the massless limit.
    pub mass: f64,
    /// Highest retained mode index K.
    pub cutoff: usize,
    /// Shared relative and absolute local tolerance of the integrator.
    pub err: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub method: Method,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            l0: 1.0,
            epsilon: 0.001,
            omega: 2.0 * PI,
            mass: 0.0,
            cutoff: 20,
            err: 1e-10,
            t_max: 100.0,
            sample_dt: 1.0,
            method: Method::Dop853,
        }
    }
}

impl SimulationConfig {
    /// Configuration driven at the parametric resonance of mode `n`,
    /// i.e. omega = 2 * Omega_n^0.
    pub fn resonant(mass: f64, n: usize, cutoff: usize) -> Self {
        let mut cfg = Self {
            mass,
            cutoff,
            ..Self::default()
        };
        cfg.omega = 2.0 * omega_static(n, &cfg);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.l0.is_finite() && self.l0 > 0.0) {
            return bad(format!("l0 must be positive, got {}", self.l0));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0 && self.epsilon < EPSILON_MAX) {
            return bad(format!(
                "epsilon must lie in [0, {EPSILON_MAX}), got {}",
                self.epsilon
            ));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return bad(format!("omega must be finite and >= 0, got {}", self.omega));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return bad(format!("mass must be finite and >= 0, got {}", self.mass));
        }
        if self.cutoff == 0 {
            return bad("cutoff K must be at least 1".into());
        }
        if !(self.err.is_finite() && self.err > 0.0) {
            return bad(format!("err must be positive, got {}", self.err));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.sample_dt.is_finite() && self.sample_dt > 0.0) {
            return bad(format!(
                "sample_dt must be positive, got {}",
                self.sample_dt
            ));
        }
        if self.epsilon > EPSILON_WARN {
            log::warn!(
                "epsilon = {} exceeds {EPSILON_WARN}; small-amplitude predictions may not apply",
                self.epsilon
            );
        }
        if self.l0 != 1.0 {
            log::warn!("l0 = {} deviates from the unit length convention", self.l0);
        }
        Ok(())
    }

    pub fn trajectory(&self) -> SineMotion {
        SineMotion {
            l0: self.l0,
            epsilon: self.epsilon,
            omega: self.omega,
        }
    }

    /// Oscillation period 2 pi / omega, or `None` for a wall at rest.
    pub fn period(&self) -> Option<f64> {
        (self.omega > 0.0 && self.epsilon > 0.0).then(|| 2.0 * PI / self.omega)
    }
}

/// Lengths and transverse quantum numbers of the non-dynamical cavity
/// dimensions of a rectangular 3-D cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity3DSpec {
    pub ly: f64,
    pub lz: f64,
    pub ny: u32,
    pub nz: u32,
}

impl Cavity3DSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ly > 0.0 && self.lz > 0.0 && self.ly.is_finite() && self.lz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cavity lengths must be positive, got ly={}, lz={}",
                self.ly, self.lz
            )));
        }
        if self.ny == 0 || self.nz == 0 {
            return Err(Error::InvalidConfig(
                "transverse quantum numbers must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Mass parameter M = l0 * k_par of the equivalent 1-D problem.
    pub fn mass(&self, l0: f64) -> f64 {
        l0 * kpar_from_cavity(self)
    }
}

/// A prescribed wall trajectory l(t) with analytic derivatives.
pub trait Trajectory: Sync {
    fn position(&self, t: f64) -> f64;
    fn velocity(&self, t: f64) -> f64;
    fn acceleration(&self, t: f64) -> f64;
    /// Wall length at rest (t <= 0).
    fn rest_length(&self) -> f64;
}

/// l(t) = l0 [1 + epsilon sin(omega t)].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMotion {
    pub l0: f64,
    pub epsilon: f64,
    pub omega: f64,
}

impl Trajectory for SineMotion {
    fn position(&self, t: f64) -> f64 {
        self.l0 * (1.0 + self.epsilon * (self.omega * t).sin())
    }

    fn velocity(&self, t: f64) -> f64 {
        self.l0 * self.epsilon * self.omega * (self.omega * t).cos()
    }

    fn acceleration(&self, t: f64) -> f64 {
        -self.l0 * self.epsilon * self.omega * self.omega * (self.omega * t).sin()
    }

    fn rest_length(&self) -> f64 {
        self.l0
    }
}

pub fn wall_position(t: f64, cfg: &SimulationConfig) -> f64 {
    cfg.trajectory().position(t)
}

pub fn wall_velocity(t: f64, cfg: &SimulationConfig) -> f64 {
    cfg.trajectory().velocity(t)
}

/// Omega_n^0 = sqrt((n pi)^2 + M^2) / l0.
pub fn omega_static(n: usize, cfg: &SimulationConfig) -> f64 {
    static_frequency(n, cfg.mass, cfg.l0)
}

pub(crate) fn static_frequency(n: usize, mass: f64, l0: f64) -> f64 {
    debug_assert!(n >= 1);
    let np = n as f64 * PI;
    np.hypot(mass) / l0
}

/// Omega_n(t) = sqrt((n pi / l(t))^2 + (M / l0)^2).
pub fn omega_instant(n: usize, t: f64, cfg: &SimulationConfig) -> f64 {
    instantaneous_frequency(n, wall_position(t, cfg), cfg.mass, cfg.l0)
}

pub(crate) fn instantaneous_frequency(n: usize, l: f64, mass: f64, l0: f64) -> f64 {
    if l == l0 {
        return static_frequency(n, mass, l0);
    }
    (n as f64 * PI / l).hypot(mass / l0)
}

/// Transverse wavenumber k_par = pi sqrt((ny/ly)^2 + (nz/lz)^2).
pub fn kpar_from_cavity(spec: &Cavity3DSpec) -> f64 {
    PI * (spec.ny as f64 / spec.ly).hypot(spec.nz as f64 / spec.lz)
}

/// Mass parameter of a cavity with equal transverse sides l_par = ell * l0
/// and equal transverse quantum numbers n_par.
pub fn mass_from_aspect(ell: f64, n_par: u32) -> Result<f64> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "aspect ratio must be positive, got {ell}"
        )));
    }
    if n_par == 0 {
        return Err(Error::InvalidConfig("n_par must be >= 1".into()));
    }
    Ok(2f64.sqrt() * n_par as f64 * PI / ell)
}

/// Inverse of [`mass_from_aspect`].
pub fn aspect_from_mass(mass: f64, n_par: u32) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "mass must be positive to define an aspect ratio, got {mass}"
        )));
    }
    if n_par == 0 {
        return Err(Error::InvalidConfig("n_par must be >= 1".into()));
    }
    Ok(2f64.sqrt() * n_par as f64 * PI / mass)
}

/// Index part of the coupling matrix, (-1)^(n+k) 2nk / (k^2 - n^2), with
/// the diagonal fixed to zero.
pub(crate) fn coupling_index_factor(n: usize, k: usize) -> f64 {
    if n == k {
        return 0.0;
    }
    let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let (nf, kf) = (n as f64, k as f64);
    sign * 2.0 * nf * kf / ((kf - nf) * (kf + nf))
}

/// M_nk(t) = (l'/l) (-1)^(n+k) 2nk / (k^2 - n^2), zero on the diagonal.
pub fn coupling_m_matrix(n: usize, k: usize, t: f64, cfg: &SimulationConfig) -> f64 {
    if n == k {
        return 0.0;
    }
    let traj = cfg.trajectory();
    traj.velocity(t) / traj.position(t) * coupling_index_factor(n, k)
}

/// Returns (c+_kn, c-_kn) from the closed form
/// c+-_kn = -(l'/l) (-1)^(k+n) kn/(n^2-k^2) [1 -+ Omega_n^0/Omega_k^0].
pub fn coupling_c(n: usize, k: usize, t: f64, cfg: &SimulationConfig) -> (f64, f64) {
    if n == k {
        return (0.0, 0.0);
    }
    let traj = cfg.trajectory();
    let rate = traj.velocity(t) / traj.position(t);
    let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let (nf, kf) = (n as f64, k as f64);
    let common = -rate * sign * kf * nf / ((nf - kf) * (nf + kf));
    let ratio = omega_static(n, cfg) / omega_static(k, cfg);
    (common * (1.0 - ratio), common * (1.0 + ratio))
}

/// Returns (a+_nn, a-_nn) = (Omega_n^0/2) {1 +- [Omega_n(t)/Omega_n^0]^2}.
pub fn coupling_a(n: usize, t: f64, cfg: &SimulationConfig) -> (f64, f64) {
    let w0 = omega_static(n, cfg);
    let wt = omega_instant(n, t, cfg);
    let r2 = (wt / w0) * (wt / w0);
    (0.5 * w0 * (1.0 + r2), 0.5 * w0 * (1.0 - r2))
}

/// All coefficients of the first-order system at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCoefficients {
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
    /// `c_plus[k-1][n-1]` holds c+_kn.
    pub c_plus: Vec<Vec<f64>>,
    pub c_minus: Vec<Vec<f64>>,
}

impl CouplingCoefficients {
    pub fn at(t: f64, cfg: &SimulationConfig) -> Self {
        let kmax = cfg.cutoff;
        let (a_plus, a_minus) = (1..=kmax).map(|n| coupling_a(n, t, cfg)).unzip();
        let mut c_plus = vec![vec![0.0; kmax]; kmax];
        let mut c_minus = vec![vec![0.0; kmax]; kmax];
        for k in 1..=kmax {
            for n in 1..=kmax {
                let (cp, cm) = coupling_c(n, k, t, cfg);
                c_plus[k - 1][n - 1] = cp;
                c_minus[k - 1][n - 1] = cm;
            }
        }
        Self {
            a_plus,
            a_minus,
            c_plus,
            c_minus,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg(mass: f64) -> SimulationConfig {
        SimulationConfig {
            mass,
            omega: 7.0,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn wall_at_rest_at_origin() {
        let c = cfg(1.0);
        assert_eq!(wall_position(0.0, &c), 1.0);
        assert_relative_eq!(wall_velocity(0.0, &c), c.epsilon * c.omega);
        let t_peak = PI / (2.0 * c.omega);
        assert_relative_eq!(wall_position(t_peak, &c), 1.001, max_relative = 1e-15);
    }

    #[test]
    fn static_frequencies() {
        assert_eq!(omega_static(1, &cfg(0.0)), PI);
        let m = 2f64.sqrt() * PI;
        assert_relative_eq!(
            omega_static(1, &cfg(m)),
            3f64.sqrt() * PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            omega_static(1, &cfg(m)),
            5.441398092702653,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            omega_static(5, &cfg(m)),
            3.0 * omega_static(1, &cfg(m)),
            max_relative = 1e-15
        );
        for n in 1..30 {
            assert!(omega_static(n + 1, &cfg(0.3)) > omega_static(n, &cfg(0.3)));
            assert!(omega_static(n, &cfg(0.4)) > omega_static(n, &cfg(0.3)));
        }
    }

    #[test]
    fn instantaneous_frequencies() {
        let c = cfg(0.0);
        assert_eq!(omega_instant(3, 0.0, &c), omega_static(3, &c));
        assert_relative_eq!(
            instantaneous_frequency(1, 1.001, 0.0, 1.0),
            PI / 1.001,
            max_relative = 1e-15
        );
        assert!(
            instantaneous_frequency(2, 1.001, 0.5, 1.0) < instantaneous_frequency(2, 1.0, 0.5, 1.0)
        );
    }

    #[test]
    fn transverse_wavenumber() {
        let cube = Cavity3DSpec {
            ly: 1.0,
            lz: 1.0,
            ny: 1,
            nz: 1,
        };
        assert_relative_eq!(
            kpar_from_cavity(&cube),
            2f64.sqrt() * PI,
            max_relative = 1e-15
        );
        let wide = Cavity3DSpec {
            ly: 11.0,
            lz: 11.0,
            ny: 1,
            nz: 1,
        };
        assert_relative_eq!(
            kpar_from_cavity(&wide),
            2f64.sqrt() * PI / 11.0,
            max_relative = 1e-15
        );
        let huge = Cavity3DSpec {
            ly: 1e300,
            lz: 1e300,
            ny: 1,
            nz: 1,
        };
        assert!(kpar_from_cavity(&huge) < 1e-299);
        assert!(Cavity3DSpec { ly: 0.0, ..cube }.validate().is_err());
        assert!(Cavity3DSpec { ny: 0, ..cube }.validate().is_err());
    }

    #[test]
    fn aspect_mass_conversion() {
        assert_relative_eq!(mass_from_aspect(1.0, 1).unwrap(), 2f64.sqrt() * PI);
        assert_relative_eq!(mass_from_aspect(11.0, 1).unwrap(), 0.404, epsilon = 1e-3);
        assert_relative_eq!(
            aspect_from_mass(2f64.sqrt() * PI, 1).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(mass_from_aspect(0.0, 1).is_err());
        assert!(mass_from_aspect(-2.0, 1).is_err());
    }

    #[test]
    fn m_matrix_values() {
        let c = cfg(0.5);
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(coupling_m_matrix(3, 3, t, &c), 0.0);
        }
        // At t = 0, l = 1 and l' = epsilon * omega.
        let v = c.epsilon * c.omega;
        assert_relative_eq!(
            coupling_m_matrix(1, 2, 0.0, &c),
            -4.0 * v / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn c_coefficients_values() {
        let c = cfg(0.0);
        let v = c.epsilon * c.omega;
        assert_eq!(coupling_c(4, 4, 0.2, &c), (0.0, 0.0));
        let (cp, cm) = coupling_c(1, 2, 0.0, &c);
        assert_relative_eq!(cp, -v / 3.0, max_relative = 1e-14);
        assert_relative_eq!(cm, -v, max_relative = 1e-14);

        let rest = SimulationConfig {
            epsilon: 0.0,
            ..cfg(0.7)
        };
        for n in 1..6 {
            for k in 1..6 {
                assert_eq!(coupling_c(n, k, 1.3, &rest), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn a_coefficients_at_rest_length() {
        let c = cfg(0.9);
        for n in 1..8 {
            let (ap, am) = coupling_a(n, 0.0, &c);
            assert_eq!(ap, omega_static(n, &c));
            assert_eq!(am, 0.0);
        }
    }

    #[test]
    fn coefficient_table_diagonal_is_zero() {
        let c = SimulationConfig {
            cutoff: 7,
            ..cfg(0.3)
        };
        let tab = CouplingCoefficients::at(0.37, &c);
        for n in 0..7 {
            assert_eq!(tab.c_plus[n][n], 0.0);
            assert_eq!(tab.c_minus[n][n], 0.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::default().validate().is_ok());
        assert!(SimulationConfig {
            epsilon: 0.0,
            ..Default::default()
        }
        .validate()
        .is_ok());
        assert!(SimulationConfig {
            epsilon: 0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            cutoff: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            mass: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            err: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            t_max: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationConfig {
            sample_dt: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    proptest! {
        #[test]
        fn closed_form_c_matches_composition(
            n in 1usize..=30, k in 1usize..=30, t in 0.0f64..500.0, mass in 0.0f64..8.0
        ) {
            let c = cfg(mass);
            let (cp, cm) = coupling_c(n, k, t, &c);
            let ratio = omega_static(n, &c) / omega_static(k, &c);
            let m_nk = coupling_m_matrix(n, k, t, &c);
            let m_kn = coupling_m_matrix(k, n, t, &c);
            let cp_ref = 0.5 * (m_nk + ratio * m_kn);
            let cm_ref = 0.5 * (m_nk - ratio * m_kn);
            let scale = m_nk.abs().max(1e-300);
            prop_assert!((cp - cp_ref).abs() <= 1e-12 * scale);
            prop_assert!((cm - cm_ref).abs() <= 1e-12 * scale);
        }

        #[test]
        fn m_matrix_is_antisymmetric(n in 1usize..=40, k in 1usize..=40, t in 0.0f64..100.0) {
            let c = cfg(0.4);
            prop_assert_eq!(coupling_m_matrix(n, k, t, &c), -coupling_m_matrix(k, n, t, &c));
        }

        #[test]
        fn a_coefficient_identities(n in 1usize..=40, t in 0.0f64..1000.0, mass in 0.0f64..8.0) {
            let c = SimulationConfig { epsilon: 0.05, ..cfg(mass) };
            let (ap, am) = coupling_a(n, t, &c);
            let w0 = omega_static(n, &c);
            let wt = omega_instant(n, t, &c);
            prop_assert!(((ap + am) - w0).abs() <= 1e-13 * w0);
            prop_assert!(((ap - am) - wt * wt / w0).abs() <= 1e-13 * w0);
        }

        #[test]
        fn wall_stays_positive(t in 0.0f64..1e4, eps in 0.0f64..0.0999) {
            let c = SimulationConfig { epsilon: eps, ..cfg(0.0) };
            prop_assert!(wall_position(t, &c) > 0.0);
        }

        #[test]
        fn aspect_round_trip(mass in 1e-3f64..50.0, n_par in 1u32..5) {
            let ell = aspect_from_mass(mass, n_par).unwrap();
            let back = mass_from_aspect(ell, n_par).unwrap();
            prop_assert!((back - mass).abs() <= 1e-14 * mass);
        }
    }
}
