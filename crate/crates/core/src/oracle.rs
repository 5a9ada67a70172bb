//! Direct integration of the second-order mode equation
//!
//!   q_n'' + Omega_n(t)^2 q_n + 2 sum_m M_mn q_m' + sum_m [M_mn' - N_nm] q_m = 0,
//!   N_nm = sum_k M_nk M_mk,
//!
//! used as an independent check of the first-order xi/eta system for small
//! cutoffs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::sample_grid;
use crate::integrator::{Method, OdeSystem, Stepper};
use crate::model::{
    coupling_index_factor, static_frequency, SimulationConfig, SineMotion, Trajectory,
};

/// Largest cutoff accepted by [`second_order_oracle`].
pub const ORACLE_MAX_MODES: usize = 6;

/// dM_nk/dt = (l''/l - (l'/l)^2) (-1)^(n+k) 2nk / (k^2 - n^2).
pub fn coupling_m_derivative(n: usize, k: usize, t: f64, cfg: &SimulationConfig) -> f64 {
    if n == k {
        return 0.0;
    }
    let traj = cfg.trajectory();
    let l = traj.position(t);
    let rate = traj.velocity(t) / l;
    (traj.acceleration(t) / l - rate * rate) * coupling_index_factor(n, k)
}

/// Second-order system for one column; state is
/// (Re eps, Im eps, Re eps', Im eps'), each of length K.
struct SecondOrder {
    traj: SineMotion,
    k: usize,
    mass: f64,
    l0: f64,
    // S_mn, row-major.
    s: Vec<f64>,
    // sum over the truncated k of S_nk S_mk.
    g: Vec<f64>,
}

impl SecondOrder {
    fn new(cfg: &SimulationConfig, n_sum_bound: usize) -> Self {
        let k = cfg.cutoff;
        let mut s = vec![0.0; k * k];
        let mut g = vec![0.0; k * k];
        for m in 1..=k {
            for n in 1..=k {
                s[(m - 1) * k + n - 1] = coupling_index_factor(m, n);
                g[(n - 1) * k + m - 1] = (1..=n_sum_bound)
                    .map(|j| coupling_index_factor(n, j) * coupling_index_factor(m, j))
                    .sum();
            }
        }
        Self {
            traj: cfg.trajectory(),
            k,
            mass: cfg.mass,
            l0: cfg.l0,
            s,
            g,
        }
    }
}

impl OdeSystem for SecondOrder {
    fn dim(&self) -> usize {
        4 * self.k
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let k = self.k;
        let l = self.traj.position(t);
        let rate = self.traj.velocity(t) / l;
        let rate_dot = self.traj.acceleration(t) / l - rate * rate;
        let (er, rest) = y.split_at(k);
        let (ei, rest) = rest.split_at(k);
        let (dr, di) = rest.split_at(k);
        dy[..k].copy_from_slice(dr);
        dy[k..2 * k].copy_from_slice(di);
        for n in 0..k {
            let w = crate::model::instantaneous_frequency(n + 1, l, self.mass, self.l0);
            let mut acc_r = -w * w * er[n];
            let mut acc_i = -w * w * ei[n];
            for m in 0..k {
                let s_mn = self.s[m * k + n];
                let mdot = rate_dot * s_mn;
                let nn = rate * rate * self.g[n * k + m];
                acc_r -= 2.0 * rate * s_mn * dr[m] + (mdot - nn) * er[m];
                acc_i -= 2.0 * rate * s_mn * di[m] + (mdot - nn) * ei[m];
            }
            dy[2 * k + n] = acc_r;
            dy[3 * k + n] = acc_i;
        }
    }
}

/// Mode functions epsilon_n^(m)(t) on the sampling grid of `cfg`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub times: Vec<f64>,
    /// `modes[i][m - 1][n - 1]` is epsilon_n^(m)(times[i]).
    pub modes: Vec<Vec<Vec<Complex64>>>,
}

/// Integrates the second-order equation for every column m with initial
/// data equivalent to xi(0) = 2 delta, eta(0) = 0:
/// epsilon_n(0) = delta_nm, epsilon_n'(0) = -i Omega_m^0 delta_nm - M_mn(0).
///
/// `n_sum_bound` truncates the sum defining N_nm. With `n_sum_bound == K`
/// the equation is algebraically identical to the truncated first-order
/// system; larger bounds add the curvature of modes beyond the cutoff.
pub fn second_order_oracle(cfg: &SimulationConfig, n_sum_bound: usize) -> Result<OracleSolution> {
    cfg.validate()?;
    let k = cfg.cutoff;
    if k > ORACLE_MAX_MODES {
        return Err(Error::InvalidConfig(format!(
            "oracle supports at most {ORACLE_MAX_MODES} modes, got {k}"
        )));
    }
    if n_sum_bound < k {
        return Err(Error::InvalidConfig(format!(
            "N-matrix sum bound {n_sum_bound} is below the cutoff {k}"
        )));
    }
    let sys = SecondOrder::new(cfg, n_sum_bound);
    let traj = cfg.trajectory();
    let rate0 = traj.velocity(0.0) / traj.position(0.0);
    let grid = sample_grid(cfg.t_max, cfg.sample_dt);
    let tol = cfg.err;

    let mut modes = vec![vec![Vec::new(); k]; grid.len()];
    for m in 1..=k {
        let mut y0 = vec![0.0; 4 * k];
        y0[m - 1] = 1.0;
        for n in 1..=k {
            y0[2 * k + n - 1] = -rate0 * coupling_index_factor(m, n);
        }
        y0[3 * k + m - 1] = -static_frequency(m, cfg.mass, cfg.l0);

        let mut stepper = Stepper::new(Method::Dop853, &sys, 0.0, y0, tol, tol);
        for (i, &t) in grid.iter().enumerate() {
            stepper
                .advance_to(&sys, t)
                .map_err(|f| Error::IntegrationFailure {
                    column: m,
                    t: f.t,
                    reason: f.reason,
                })?;
            let y = stepper.y();
            modes[i][m - 1] = (0..k).map(|n| Complex64::new(y[n], y[k + n])).collect();
        }
    }
    Ok(OracleSolution { times: grid, modes })
}

/// Largest |epsilon_oracle - (xi + eta) / 2| over all modes, columns and
/// samples of `cfg`.
pub fn oracle_deviation(cfg: &SimulationConfig, n_sum_bound: usize) -> Result<f64> {
    let oracle = second_order_oracle(cfg, n_sum_bound)?;
    let mut worst = 0.0f64;
    let mut i = 0;
    crate::evolution::evolve_with(cfg, |_, states| {
        for (col, state) in oracle.modes[i].iter().zip(states) {
            for (n, e) in col.iter().enumerate() {
                worst = worst.max((e - state.mode_function(n + 1)).norm());
            }
        }
        i += 1;
    })?;
    Ok(worst)
}
