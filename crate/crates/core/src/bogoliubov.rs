//! Bogoliubov coefficients, particle numbers and the accuracy diagnostics
//! derived from them.
//!
//! Snapshots at an arbitrary time t1 use instantaneous matching: the
//! final-state frequencies are Omega_n(t1) and the wall is treated as if it
//! stopped at t1. At wall turning points and at multiples of the period the
//! definition coincides with a genuinely static final cavity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{evolve_with, EvolutionState};
use crate::integrator::StepStats;
use crate::model::{omega_instant, omega_static, SimulationConfig};

/// Returns (Delta+_n(t), Delta-_n(t)) = ((1 + r)/2, (1 - r)/2) with
/// r = Omega_n^0 / Omega_n(t).
pub fn delta_pm(n: usize, t: f64, cfg: &SimulationConfig) -> (f64, f64) {
    let r = omega_static(n, cfg) / omega_instant(n, t, cfg);
    (0.5 * (1.0 + r), 0.5 * (1.0 - r))
}

/// Complex K x K Bogoliubov matrices at one snapshot. Row index m labels the
/// initial mode, column index n the final mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovMatrices {
    pub t1: f64,
    k: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl BogoliubovMatrices {
    pub fn cutoff(&self) -> usize {
        self.k
    }

    /// A_mn, 1-based.
    pub fn a(&self, m: usize, n: usize) -> Complex64 {
        self.a[(m - 1) * self.k + n - 1]
    }

    /// B_mn, 1-based.
    pub fn b(&self, m: usize, n: usize) -> Complex64 {
        self.b[(m - 1) * self.k + n - 1]
    }

    /// N_n = sum_m |B_mn|^2 for n = 1..=K.
    pub fn particle_numbers(&self) -> Vec<f64> {
        (1..=self.k)
            .map(|n| (1..=self.k).map(|m| self.b(m, n).norm_sqr()).sum())
            .collect()
    }
}

/// Validates that `states` holds columns 1..=K, all at the same time, and
/// returns that time.
fn check_columns(states: &[EvolutionState], cfg: &SimulationConfig) -> Result<f64> {
    let k = cfg.cutoff;
    if states.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "expected {k} columns, got {}",
            states.len()
        )));
    }
    let t1 = states[0].t;
    for (i, s) in states.iter().enumerate() {
        if s.cutoff() != k {
            return Err(Error::ShapeMismatch(format!(
                "column {} has cutoff {}, expected {k}",
                s.m,
                s.cutoff()
            )));
        }
        if s.m != i + 1 {
            return Err(Error::ShapeMismatch(format!(
                "column at position {i} is labelled m={}",
                s.m
            )));
        }
        if s.t != t1 {
            return Err(Error::ShapeMismatch(format!(
                "column {} sampled at t={} but column 1 at t={t1}",
                s.m, s.t
            )));
        }
    }
    Ok(t1)
}

struct Matching {
    omega0: Vec<f64>,
    omega1: Vec<f64>,
    dplus: Vec<f64>,
    dminus: Vec<f64>,
}

impl Matching {
    fn at(t1: f64, cfg: &SimulationConfig) -> Self {
        let k = cfg.cutoff;
        let omega0: Vec<f64> = (1..=k).map(|n| omega_static(n, cfg)).collect();
        let omega1: Vec<f64> = (1..=k).map(|n| omega_instant(n, t1, cfg)).collect();
        let (dplus, dminus) = omega0
            .iter()
            .zip(&omega1)
            .map(|(w0, w1)| {
                let r = w0 / w1;
                (0.5 * (1.0 + r), 0.5 * (1.0 - r))
            })
            .unzip();
        Self {
            omega0,
            omega1,
            dplus,
            dminus,
        }
    }
}

/// A_mn = (1/2) sqrt(Omega_n^1 / Omega_m^0) [Delta+_n xi_n^(m) + Delta-_n eta_n^(m)],
/// B_mn = (1/2) sqrt(Omega_n^1 / Omega_m^0) [Delta-_n xi_n^(m) + Delta+_n eta_n^(m)].
pub fn bogoliubov_from_state(
    states: &[EvolutionState],
    cfg: &SimulationConfig,
) -> Result<BogoliubovMatrices> {
    let t1 = check_columns(states, cfg)?;
    let k = cfg.cutoff;
    let mt = Matching::at(t1, cfg);
    let mut a = vec![Complex64::new(0.0, 0.0); k * k];
    let mut b = vec![Complex64::new(0.0, 0.0); k * k];
    for (mi, s) in states.iter().enumerate() {
        for ni in 0..k {
            let pref = 0.5 * (mt.omega1[ni] / mt.omega0[mi]).sqrt();
            let xi = s.xi(ni + 1);
            let eta = s.eta(ni + 1);
            a[mi * k + ni] = pref * (mt.dplus[ni] * xi + mt.dminus[ni] * eta);
            b[mi * k + ni] = pref * (mt.dminus[ni] * xi + mt.dplus[ni] * eta);
        }
    }
    Ok(BogoliubovMatrices { t1, k, a, b })
}

/// N_n(t1) = (1/4) sum_m (Omega_n^1 / Omega_m^0)
///           {[Delta-_n u + Delta+_n x]^2 + [Delta-_n v + Delta+_n y]^2},
/// evaluated in the real decomposition.
pub fn particle_numbers(
    states: &[EvolutionState],
    cfg: &SimulationConfig,
    t1: f64,
) -> Result<Vec<f64>> {
    let t_states = check_columns(states, cfg)?;
    if t_states != t1 {
        return Err(Error::ShapeMismatch(format!(
            "states are sampled at t={t_states}, requested t1={t1}"
        )));
    }
    let k = cfg.cutoff;
    let mt = Matching::at(t1, cfg);
    let mut out = vec![0.0; k];
    for (mi, s) in states.iter().enumerate() {
        let (u, x, v, y) = (s.u(), s.x(), s.v(), s.y());
        let inv_w0m = 1.0 / mt.omega0[mi];
        for n in 0..k {
            let re = mt.dminus[n] * u[n] + mt.dplus[n] * x[n];
            let im = mt.dminus[n] * v[n] + mt.dplus[n] * y[n];
            out[n] += mt.omega1[n] * inv_w0m * (re * re + im * im);
        }
    }
    for n in out.iter_mut() {
        *n *= 0.25;
    }
    Ok(out)
}

/// The unweighted short form (1/4) sum_m [x_n^2 + y_n^2]. It coincides with
/// [`particle_numbers`] at multiples of the period only if the frequency
/// weight Omega_n^0 / Omega_m^0 is dropped, so it is reported as a separate
/// cross-check quantity.
pub fn particle_numbers_unweighted(states: &[EvolutionState]) -> Vec<f64> {
    let k = states.first().map_or(0, |s| s.cutoff());
    let mut out = vec![0.0; k];
    for s in states {
        for (n, (x, y)) in s.x().iter().zip(s.y()).enumerate() {
            out[n] += 0.25 * (x * x + y * y);
        }
    }
    out
}

/// d_n = 1 - sum_m (|A_mn|^2 - |B_mn|^2), computed in the real
/// decomposition. The matching factors cancel, leaving
/// d_n = 1 - (1/4) sum_m (Omega_n^0 / Omega_m^0) (|xi_n^(m)|^2 - |eta_n^(m)|^2).
pub fn diagonal_defects(states: &[EvolutionState], cfg: &SimulationConfig) -> Result<Vec<f64>> {
    check_columns(states, cfg)?;
    let k = cfg.cutoff;
    let omega0: Vec<f64> = (1..=k).map(|n| omega_static(n, cfg)).collect();
    let mut sums = vec![0.0; k];
    for (mi, s) in states.iter().enumerate() {
        let (u, x, v, y) = (s.u(), s.x(), s.v(), s.y());
        for n in 0..k {
            let w = omega0[n] / omega0[mi];
            sums[n] += w * ((u[n] * u[n] + v[n] * v[n]) - (x[n] * x[n] + y[n] * y[n]));
        }
    }
    Ok(sums.into_iter().map(|s| 1.0 - 0.25 * s).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// d_k for k = 1..=K.
    pub diagonal: Vec<f64>,
    /// Largest |.| over n != k of sum_m [A_mn A*_mk - B*_mn B_mk] and over
    /// all n, k of sum_m [A_mn B*_mk - B*_mn A_mk].
    pub max_off_diagonal: f64,
}

pub fn bogoliubov_residuals(bog: &BogoliubovMatrices) -> Residuals {
    let k = bog.k;
    let diagonal = (1..=k)
        .map(|n| {
            1.0 - (1..=k)
                .map(|m| bog.a(m, n).norm_sqr() - bog.b(m, n).norm_sqr())
                .sum::<f64>()
        })
        .collect();
    let mut worst = 0.0f64;
    for n in 1..=k {
        for kk in 1..=k {
            let mut first = Complex64::new(0.0, 0.0);
            let mut second = Complex64::new(0.0, 0.0);
            for m in 1..=k {
                let (amn, amk) = (bog.a(m, n), bog.a(m, kk));
                let (bmn, bmk) = (bog.b(m, n), bog.b(m, kk));
                first += amn * amk.conj() - bmn.conj() * bmk;
                second += amn * bmk.conj() - bmn.conj() * amk;
            }
            if n != kk {
                worst = worst.max(first.norm());
            }
            worst = worst.max(second.norm());
        }
    }
    Residuals {
        diagonal,
        max_off_diagonal: worst,
    }
}

/// Is `t` the grid point closest to a multiple of `period`?
pub fn is_period_aligned(t: f64, period: f64, sample_dt: f64) -> bool {
    let nearest = (t / period).round() * period;
    let off = t - nearest;
    -0.5 * sample_dt <= off && off < 0.5 * sample_dt
}

/// Particle numbers and normalization defects on the sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSpectrum {
    pub times: Vec<f64>,
    /// `numbers[i][n - 1]` is N_n(times[i]).
    pub numbers: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    /// `defects[i][k - 1]` is d_k(times[i]).
    pub defects: Vec<Vec<f64>>,
    pub period_aligned: Vec<bool>,
    pub stats: StepStats,
}

impl ParticleSpectrum {
    /// N_n over time for 1-based mode `n`.
    pub fn mode_series(&self, n: usize) -> Vec<f64> {
        self.numbers.iter().map(|row| row[n - 1]).collect()
    }

    /// Index of the sample closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(i, _)| i)
    }

    /// Spectrum N_1..N_K at the sample closest to `t`.
    pub fn at(&self, t: f64) -> &[f64] {
        &self.numbers[self.index_at(t)]
    }

    /// Largest |d_k| over all samples for 1-based k in `modes`.
    pub fn max_defect(&self, modes: std::ops::RangeInclusive<usize>) -> f64 {
        self.defects
            .iter()
            .flat_map(|row| modes.clone().map(move |k| row[k - 1].abs()))
            .fold(0.0, f64::max)
    }
}

/// Runs the evolution and records N_n(t), N(t) and d_k(t) at every sample.
pub fn particle_spectrum(cfg: &SimulationConfig) -> Result<ParticleSpectrum> {
    let mut spec = ParticleSpectrum {
        times: Vec::new(),
        numbers: Vec::new(),
        total: Vec::new(),
        defects: Vec::new(),
        period_aligned: Vec::new(),
        stats: StepStats::default(),
    };
    let period = cfg.period();
    let mut failure = None;
    let stats = evolve_with(cfg, |t, states| {
        if failure.is_some() {
            return;
        }
        let numbers = match particle_numbers(states, cfg, t) {
            Ok(n) => n,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let defects = match diagonal_defects(states, cfg) {
            Ok(d) => d,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        spec.times.push(t);
        spec.total.push(numbers.iter().sum());
        spec.numbers.push(numbers);
        spec.defects.push(defects);
        spec.period_aligned
            .push(period.is_some_and(|p| is_period_aligned(t, p, cfg.sample_dt)));
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    spec.stats = stats;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::evolve;
    use crate::model::static_frequency;
    use approx::assert_relative_eq;

    fn resonant(mass: f64, k: usize) -> SimulationConfig {
        SimulationConfig {
            mass,
            cutoff: k,
            omega: 2.0 * static_frequency(1, mass, 1.0),
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn deltas() {
        let c = resonant(0.0, 4);
        assert_eq!(delta_pm(2, 0.0, &c), (1.0, 0.0));
        for t in [0.1, 0.77, 3.2, 1e3] {
            let (p, m) = delta_pm(3, t, &c);
            assert!((p + m - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
        // l(t) = 1.001 at the first crest.
        let t_peak = std::f64::consts::PI / (2.0 * c.omega);
        let (_, m) = delta_pm(1, t_peak, &c);
        assert_relative_eq!(m, -5e-4, max_relative = 1e-9);
    }

    #[test]
    fn identity_at_start() {
        let c = resonant(1.1, 6);
        let states: Vec<_> = (1..=6).map(|m| EvolutionState::initial(m, 6)).collect();
        let bog = bogoliubov_from_state(&states, &c).unwrap();
        for m in 1..=6 {
            for n in 1..=6 {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert_eq!(bog.a(m, n), Complex64::new(expected, 0.0));
                assert_eq!(bog.b(m, n), Complex64::new(0.0, 0.0));
            }
        }
        assert!(particle_numbers(&states, &c, 0.0)
            .unwrap()
            .iter()
            .all(|&n| n == 0.0));
        let res = bogoliubov_residuals(&bog);
        assert!(res.diagonal.iter().all(|&d| d == 0.0));
        assert_eq!(res.max_off_diagonal, 0.0);
    }

    #[test]
    fn shape_errors() {
        let c = resonant(1.0, 3);
        let mut states: Vec<_> = (1..=3).map(|m| EvolutionState::initial(m, 3)).collect();
        assert!(matches!(
            bogoliubov_from_state(&states[..2], &c),
            Err(Error::ShapeMismatch(_))
        ));
        states[1].t = 0.5;
        assert!(matches!(
            bogoliubov_from_state(&states, &c),
            Err(Error::ShapeMismatch(_))
        ));
        states[1].t = 0.0;
        assert!(particle_numbers(&states, &c, 1.0).is_err());
        let wrong_k: Vec<_> = (1..=3).map(|m| EvolutionState::initial(m, 4)).collect();
        assert!(diagonal_defects(&wrong_k, &c).is_err());
    }

    #[test]
    fn two_paths_agree_during_mixing_run() {
        let c = SimulationConfig {
            t_max: 60.0,
            sample_dt: 0.37,
            epsilon: 0.01,
            ..resonant(0.4, 8)
        };
        let rec = evolve(&c).unwrap();
        let mut checked = 0;
        for (t, states) in rec.times.iter().zip(&rec.states) {
            let fast = particle_numbers(states, &c, *t).unwrap();
            let bog = bogoliubov_from_state(states, &c).unwrap();
            let slow = bog.particle_numbers();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} vs {b}");
            }
            let d_fast = diagonal_defects(states, &c).unwrap();
            let res = bogoliubov_residuals(&bog);
            for (a, b) in d_fast.iter().zip(&res.diagonal) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!(
                res.max_off_diagonal < 1e-6,
                "off-diagonal {}",
                res.max_off_diagonal
            );
            assert!(fast.iter().all(|&n| n >= 0.0));
            checked += 1;
        }
        assert!(checked > 100);
        let last = rec.states.last().unwrap();
        let n = particle_numbers(last, &c, *rec.times.last().unwrap()).unwrap();
        assert!(n[0] > 1e-2, "resonant mode should be excited: {n:?}");
    }

    #[test]
    fn mode_index_weighting_is_the_unitary_one() {
        // With sqrt(Omega_n^1 / Omega_n^0) in place of sqrt(Omega_n^1 / Omega_m^0)
        // the normalization sum drifts as soon as modes mix.
        let c = SimulationConfig {
            t_max: 200.0,
            sample_dt: 200.0,
            epsilon: 0.01,
            err: 1e-12,
            ..resonant(2f64.sqrt() * std::f64::consts::PI, 8)
        };
        let rec = evolve(&c).unwrap();
        let states = rec.states.last().unwrap();
        let d = diagonal_defects(states, &c).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-7), "{d:?}");

        let omega0: Vec<f64> = (1..=8).map(|n| omega_static(n, &c)).collect();
        let d5_other: f64 = 1.0
            - 0.25
                * states
                    .iter()
                    .map(|s| s.xi(5).norm_sqr() - s.eta(5).norm_sqr())
                    .sum::<f64>();
        let d5_ours: f64 = 1.0
            - 0.25
                * states
                    .iter()
                    .map(|s| {
                        omega0[4] / omega0[s.m - 1] * (s.xi(5).norm_sqr() - s.eta(5).norm_sqr())
                    })
                    .sum::<f64>();
        assert!(d5_ours.abs() < 1e-7);
        assert!(
            d5_other.abs() > 1e3 * d5_ours.abs().max(1e-12),
            "{d5_other}"
        );
    }

    #[test]
    fn period_alignment() {
        assert!(is_period_aligned(0.0, 1.3, 0.1));
        assert!(is_period_aligned(2.6, 1.3, 0.1));
        assert!(is_period_aligned(2.64, 1.3, 0.1));
        assert!(!is_period_aligned(2.7, 1.3, 0.1));
        let grid = crate::evolution::sample_grid(100.0, 0.1);
        let flagged = grid
            .iter()
            .filter(|&&t| is_period_aligned(t, 1.3, 0.1))
            .count();
        assert_eq!(flagged, 77);
    }

    #[test]
    fn static_cavity_spectrum_is_empty() {
        let c = SimulationConfig {
            epsilon: 0.0,
            t_max: 30.0,
            sample_dt: 0.5,
            ..resonant(0.7, 6)
        };
        let spec = particle_spectrum(&c).unwrap();
        for row in &spec.numbers {
            assert!(row.iter().all(|&n| n.abs() <= 1e-20));
        }
        assert!(spec.period_aligned.iter().all(|&p| !p));
        assert!(spec.max_defect(1..=6) < 1e-9, "{}", spec.max_defect(1..=6));
    }
}
