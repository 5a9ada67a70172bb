//! Resonance structure, analytic predictions, mass sweeps and cutoff
//! convergence studies.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::bogoliubov::particle_spectrum;
use crate::error::{Error, Result};
use crate::model::{static_frequency, SimulationConfig};

/// Detuning below which a coupling counts as strong.
///
/// The chain links quoted for M = 0.2 and M = sqrt(5) pi sit at detunings
/// between 8e-4 and 3.4e-3, so the classic 1e-3 rule of thumb would cut them.
pub const DEFAULT_STRONG_THRESHOLD: f64 = 5e-3;

/// Weak links are reported up to this multiple of the strong threshold.
pub const WEAK_FACTOR: f64 = 10.0;

/// Particle number of an isolated parametrically resonant mode,
/// sinh^2(n gamma_n epsilon t) with gamma_n = n pi^2 / (2 Omega_n^0 l0^2).
pub fn sinh_prediction(n: usize, cfg: &SimulationConfig, t: f64) -> f64 {
    let omega = static_frequency(n, cfg.mass, cfg.l0);
    let nf = n as f64;
    let gamma = nf * PI * PI / (2.0 * omega * cfg.l0 * cfg.l0);
    (nf * gamma * cfg.epsilon * t).sinh().powi(2)
}

/// Mass at which 3 Omega_n^0 = Omega_k^0, so that driving at 2 Omega_n^0
/// couples n and k exactly.
pub fn exact_coupling_mass(n: usize, k: usize) -> Result<f64> {
    if n == 0 || k <= 3 * n {
        return Err(Error::NoSolution(format!(
            "3 Omega_{n} = Omega_{k} needs k > 3n"
        )));
    }
    let (n, k) = (n as f64, k as f64);
    Ok(PI * ((k * k - 9.0 * n * n) / 8.0).sqrt())
}

/// Continuous mode index whose static frequency equals `omega`, if any.
fn mode_index_for(omega: f64, mass: f64, l0: f64) -> Option<f64> {
    if omega <= 0.0 {
        return None;
    }
    let floor = mass / l0;
    let q2 = omega * omega - floor * floor;
    (q2 > 0.0).then(|| l0 * q2.sqrt() / PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    /// omega = Omega_l + Omega_k
    Plus,
    /// omega = |Omega_l - Omega_k|
    Minus,
}

impl Branch {
    pub fn sign(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CouplingClass {
    Strong,
    Weak,
    None,
}

impl fmt::Display for CouplingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingClass::Strong => "strong",
            CouplingClass::Weak => "weak",
            CouplingClass::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEntry {
    /// Source mode, already part of the chain.
    pub k: usize,
    pub branch: Branch,
    pub l_tilde: f64,
    pub l: usize,
    /// |l - l_tilde| / l
    pub detuning: f64,
    pub class: CouplingClass,
    /// Number of strong links between the resonant mode and `k`.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub resonant: usize,
    pub threshold: f64,
    pub entries: Vec<CouplingEntry>,
    /// Modes reached through strong links, in breadth-first order starting
    /// with the resonant mode.
    pub chain: Vec<usize>,
}

impl CouplingGraph {
    pub fn strong(&self) -> impl Iterator<Item = &CouplingEntry> {
        self.entries
            .iter()
            .filter(|e| e.class == CouplingClass::Strong)
    }

    pub fn find(&self, k: usize, l: usize) -> Option<&CouplingEntry> {
        self.entries.iter().find(|e| e.k == k && e.l == l)
    }

    /// The first `count` chain members: the modes expected to dominate the
    /// spectrum, ordered by distance from the resonant mode.
    pub fn predicted_modes(&self, count: usize) -> Vec<usize> {
        self.chain.iter().copied().take(count).collect()
    }
}

/// Follows the coupling condition omega = |Omega_l^0 +- Omega_k^0| outward
/// from the resonant mode `n`.
///
/// Each mode reached through a strong link is itself used as a source.
/// Every candidate with l <= `max_mode` is recorded, including the
/// detuned ones, so the weak links one step past the strong frontier show
/// up in the listing.
pub fn coupling_scan(
    cfg: &SimulationConfig,
    n: usize,
    max_mode: usize,
    strong_threshold: f64,
) -> Result<CouplingGraph> {
    if n == 0 || max_mode == 0 {
        return Err(Error::InvalidConfig("mode indices start at 1".into()));
    }
    if !(strong_threshold.is_finite() && strong_threshold >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be >= 0, got {strong_threshold}"
        )));
    }
    let (mass, l0, omega) = (cfg.mass, cfg.l0, cfg.omega);
    let classify = |d: f64| {
        if d <= strong_threshold {
            CouplingClass::Strong
        } else if d <= WEAK_FACTOR * strong_threshold {
            CouplingClass::Weak
        } else {
            CouplingClass::None
        }
    };

    let mut entries = Vec::new();
    let mut chain = vec![n];
    let mut reached = BTreeSet::from([n]);
    let mut queue = VecDeque::from([(n, 0usize)]);
    while let Some((k, depth)) = queue.pop_front() {
        let wk = static_frequency(k, mass, l0);
        let targets = [
            (Branch::Plus, omega - wk),
            (Branch::Minus, wk + omega),
            (Branch::Minus, wk - omega),
        ];
        let mut found: Vec<CouplingEntry> = targets
            .into_iter()
            .filter_map(|(branch, w)| {
                let l_tilde = mode_index_for(w, mass, l0)?;
                let l = l_tilde.round() as usize;
                (l >= 1 && l != k && l <= max_mode).then(|| {
                    let detuning = (l as f64 - l_tilde).abs() / l as f64;
                    CouplingEntry {
                        k,
                        branch,
                        l_tilde,
                        l,
                        detuning,
                        class: classify(detuning),
                        depth,
                    }
                })
            })
            .collect();
        found.sort_by_key(|e| (e.branch, e.l));
        for e in &found {
            if e.class == CouplingClass::Strong && reached.insert(e.l) {
                chain.push(e.l);
                queue.push_back((e.l, depth + 1));
            }
        }
        entries.extend(found);
    }
    entries.sort_by_key(|e| (e.k, e.branch, e.l));
    Ok(CouplingGraph {
        resonant: n,
        threshold: strong_threshold,
        entries,
        chain,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub mass: f64,
    /// N_n(t_eval) for the resonant mode, NaN when the run failed.
    pub n_resonant: f64,
    pub sinh_prediction: f64,
    /// The mass sits on 3 Omega_n^0 = Omega_k^0 for some k.
    pub exact_coupling: bool,
    /// First strongly coupled partner of the resonant mode, if any.
    pub coupled_partner: Option<usize>,
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassSweepResult {
    pub resonant_n: usize,
    pub t_eval: f64,
    /// In grid order.
    pub points: Vec<SweepPoint>,
}

impl MassSweepResult {
    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mass).collect()
    }

    pub fn n_resonant(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.n_resonant).collect()
    }

    /// Grid point with the largest finite N_resonant.
    pub fn argmax(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .filter(|p| p.n_resonant.is_finite())
            .max_by(|a, b| a.n_resonant.total_cmp(&b.n_resonant))
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.failure.is_some()).count()
    }

    pub fn first_failure(&self) -> Option<(f64, &Error)> {
        self.points
            .iter()
            .find_map(|p| p.failure.as_ref().map(|e| (p.mass, e)))
    }
}

/// Masses closer than this to an exact-coupling mass are flagged.
const EXACT_MASS_TOL: f64 = 1e-9;

fn exact_partner(n: usize, mass: f64) -> Option<usize> {
    // 3 Omega_n = Omega_k fixes k^2 = 9 n^2 + 8 M^2 / pi^2.
    let k = (9.0 * (n * n) as f64 + 8.0 * mass * mass / (PI * PI))
        .sqrt()
        .round() as usize;
    let exact = exact_coupling_mass(n, k).ok()?;
    ((exact - mass).abs() <= EXACT_MASS_TOL * mass.max(1.0)).then_some(k)
}

/// Runs the resonant evolution for every mass in `masses`, driving each at
/// omega = 2 Omega_n^0(M), and reports N_n(t_eval) next to the sinh law.
///
/// Points run in parallel. A failed point is kept with NaN and its error so
/// the rest of the sweep survives; configuration errors abort the sweep.
pub fn mass_sweep(
    template: &SimulationConfig,
    masses: &[f64],
    resonant_n: usize,
    t_eval: f64,
) -> Result<MassSweepResult> {
    if resonant_n == 0 {
        return Err(Error::InvalidConfig("resonant mode must be >= 1".into()));
    }
    if resonant_n > template.cutoff {
        return Err(Error::InvalidConfig(format!(
            "resonant mode {resonant_n} exceeds the cutoff {}",
            template.cutoff
        )));
    }
    let configs = masses
        .iter()
        .map(|&mass| {
            let mut cfg = SimulationConfig {
                mass,
                t_max: t_eval,
                sample_dt: t_eval,
                ..template.clone()
            };
            cfg.omega = 2.0 * static_frequency(resonant_n, mass, cfg.l0);
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let points = configs
        .par_iter()
        .map(|cfg| {
            let partner = coupling_scan(cfg, resonant_n, cfg.cutoff, DEFAULT_STRONG_THRESHOLD)
                .ok()
                .and_then(|g| g.chain.get(1).copied());
            let exact = exact_partner(resonant_n, cfg.mass);
            let (n_resonant, failure) = match particle_spectrum(cfg) {
                Ok(spec) => (spec.at(t_eval)[resonant_n - 1], None),
                Err(e) => {
                    log::warn!("sweep point M={} failed: {e}", cfg.mass);
                    (f64::NAN, Some(e))
                }
            };
            SweepPoint {
                mass: cfg.mass,
                n_resonant,
                sinh_prediction: sinh_prediction(resonant_n, cfg, t_eval),
                exact_coupling: exact.is_some(),
                coupled_partner: exact.or(partner),
                failure,
            }
        })
        .collect();
    Ok(MassSweepResult {
        resonant_n,
        t_eval,
        points,
    })
}

/// Particle numbers of selected modes for a ladder of cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub cutoffs: Vec<usize>,
    pub modes: Vec<usize>,
    pub t_eval: f64,
    /// `values[c][i]` is N_{modes[i]}(t_eval) at cutoff `cutoffs[c]`.
    pub values: Vec<Vec<f64>>,
    /// `deviations[c]` is the largest relative change over the monitored
    /// modes between `cutoffs[c]` and `cutoffs[c + 1]`.
    pub deviations: Vec<f64>,
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else {
        (coarse - fine).abs() / fine.abs()
    }
}

/// Reruns `cfg` at each cutoff in `cutoffs` and compares N_n(t_eval) for
/// the modes of interest between consecutive cutoffs.
pub fn convergence_check(
    cfg: &SimulationConfig,
    cutoffs: &[usize],
    modes: &[usize],
    t_eval: f64,
) -> Result<ConvergenceReport> {
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "cutoff list must be non-empty and strictly ascending".into(),
        ));
    }
    if let Some(&bad) = modes.iter().find(|&&n| n == 0 || n > cutoffs[0]) {
        return Err(Error::InvalidConfig(format!(
            "mode {bad} is outside the smallest cutoff {}",
            cutoffs[0]
        )));
    }
    let values = cutoffs
        .par_iter()
        .map(|&cutoff| {
            let run = SimulationConfig {
                cutoff,
                t_max: t_eval,
                sample_dt: t_eval,
                ..cfg.clone()
            };
            let spec = particle_spectrum(&run)?;
            let n = spec.at(t_eval);
            Ok(modes.iter().map(|&m| n[m - 1]).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let deviations = values
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(&a, &b)| relative_change(a, b))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConvergenceReport {
        cutoffs: cutoffs.to_vec(),
        modes: modes.to_vec(),
        t_eval,
        values,
        deviations,
    })
}
