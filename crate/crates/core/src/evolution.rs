//! The truncated first-order system X' = W(t) X for the real and imaginary
//! parts of xi and eta, and its integration over all initial-condition
//! columns.
//!
//! State layout of one column: `(u_1..u_K, x_1..x_K, v_1..v_K, y_1..y_K)`
//! with xi_n = u_n + i v_n and eta_n = x_n + i y_n.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{Method, OdeSystem, StepStats, Stepper};
use crate::model::{coupling_a, coupling_c, SimulationConfig, SineMotion, Trajectory};

/// Precomputed mode data for the matrix-free evaluation of W(t) X.
///
/// With M_kn = (l'/l) S_kn the coupling blocks factor as
/// C- = (l'/l)(P + Q) and C+ = (l'/l)(P - Q), where
/// P_nk = S_kn / 2 and Q_nk = S_kn Omega_k^0 / (2 Omega_n^0).
/// Both share the kernel G_nk = 1 / (n^2 - k^2):
/// P = D G E and Q = D Omega^-1 G E Omega with D = diag((-1)^n n)
/// and E = diag((-1)^k k), so one sweep over G serves all four products.
#[derive(Debug, Clone)]
pub struct ModeSystem<T: Trajectory = SineMotion> {
    traj: T,
    kmax: usize,
    mass: f64,
    l0: f64,
    omega0: Vec<f64>,
    // (n pi)^2 / l0^2, the part of Omega_n(t)^2 that moves with the wall.
    kx2: Vec<f64>,
    // G_nk, row-major, zero diagonal.
    kernel: Vec<f64>,
    // (-1)^n n
    parity: Vec<f64>,
}

impl ModeSystem<SineMotion> {
    pub fn new(cfg: &SimulationConfig) -> Self {
        Self::with_trajectory(cfg, cfg.trajectory())
    }
}

impl<T: Trajectory> ModeSystem<T> {
    pub fn with_trajectory(cfg: &SimulationConfig, traj: T) -> Self {
        let kmax = cfg.cutoff;
        let l0 = traj.rest_length();
        let omega0: Vec<f64> = (1..=kmax)
            .map(|n| crate::model::static_frequency(n, cfg.mass, l0))
            .collect();
        let kx2 = (1..=kmax)
            .map(|n| (n as f64 * std::f64::consts::PI / l0).powi(2))
            .collect();
        let mut kernel = vec![0.0; kmax * kmax];
        for n in 1..=kmax {
            for k in (1..=kmax).filter(|&k| k != n) {
                let (nf, kf) = (n as f64, k as f64);
                kernel[(n - 1) * kmax + (k - 1)] = 1.0 / ((nf - kf) * (nf + kf));
            }
        }
        let parity = (1..=kmax)
            .map(|n| if n % 2 == 0 { n as f64 } else { -(n as f64) })
            .collect();
        Self {
            traj,
            kmax,
            mass: cfg.mass,
            l0,
            omega0,
            kx2,
            kernel,
            parity,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.kmax
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn rest_length(&self) -> f64 {
        self.l0
    }

    /// Omega_n^0 for n = 1..=K.
    pub fn omega0(&self) -> &[f64] {
        &self.omega0
    }

    pub fn trajectory(&self) -> &T {
        &self.traj
    }

    /// Omega_n(t) for n = 1..=K.
    pub fn omega_at(&self, t: f64) -> Vec<f64> {
        let l = self.traj.position(t);
        (1..=self.kmax)
            .map(|n| crate::model::instantaneous_frequency(n, l, self.mass, self.l0))
            .collect()
    }

    /// Computes `out = W(t) x` without forming W.
    pub fn apply_w(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let k = self.kmax;
        assert_eq!(x.len(), 4 * k);
        assert_eq!(out.len(), 4 * k);

        let l = self.traj.position(t);
        let rate = self.traj.velocity(t) / l;
        // 1/l0^2 - 1/l^2, formed from (l - l0) to keep a-_nn accurate.
        let dl = l - self.l0;
        let shrink = dl * (l + self.l0) / (self.l0 * self.l0 * l * l);

        let (u, rest) = x.split_at(k);
        let (xs, rest) = rest.split_at(k);
        let (v, y) = rest.split_at(k);

        // Interleaved (E s_re, E s_im, E Omega d_re, E Omega d_im) per mode.
        let mut buf_stack = [0.0f64; 4 * STACK_MODES];
        let mut buf_heap;
        let buf: &mut [f64] = if k <= STACK_MODES {
            &mut buf_stack[..4 * k]
        } else {
            buf_heap = vec![0.0; 4 * k];
            &mut buf_heap
        };
        let coupled = rate != 0.0;
        if coupled {
            for (i, w) in buf.chunks_exact_mut(4).enumerate() {
                let e = self.parity[i];
                let eo = e * self.omega0[i];
                w[0] = e * (u[i] + xs[i]);
                w[1] = e * (v[i] + y[i]);
                w[2] = eo * (u[i] - xs[i]);
                w[3] = eo * (v[i] - y[i]);
            }
        }

        let (du, rest) = out.split_at_mut(k);
        let (dx, rest) = rest.split_at_mut(k);
        let (dv, dy) = rest.split_at_mut(k);

        for n in 0..k {
            let (pu, pv, qu, qv) = if coupled {
                let g = sweep4(&self.kernel[n * k..(n + 1) * k], buf);
                let dp = rate * self.parity[n];
                let dq = dp / self.omega0[n];
                (dp * g[0], dp * g[1], dq * g[2], dq * g[3])
            } else {
                (0.0, 0.0, 0.0, 0.0)
            };
            let a_minus = 0.5 * self.kx2[n] * shrink / self.omega0[n];
            let a_plus = self.omega0[n] - a_minus;
            du[n] = a_plus * v[n] - a_minus * y[n] - (pu + qu);
            dx[n] = a_minus * v[n] - a_plus * y[n] - (pu - qu);
            dv[n] = -a_plus * u[n] + a_minus * xs[n] - (pv + qv);
            dy[n] = -a_minus * u[n] + a_plus * xs[n] - (pv - qv);
        }
    }
}

const STACK_MODES: usize = 64;

// Row of G against four interleaved vectors.
#[inline(always)]
fn sweep4(row: &[f64], w: &[f64]) -> [f64; 4] {
    let mut acc = [0.0f64; 4];
    for (&g, x) in row.iter().zip(w.chunks_exact(4)) {
        acc[0] += g * x[0];
        acc[1] += g * x[1];
        acc[2] += g * x[2];
        acc[3] += g * x[3];
    }
    acc
}

impl<T: Trajectory> OdeSystem for ModeSystem<T> {
    fn dim(&self) -> usize {
        4 * self.kmax
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.apply_w(t, y, dy);
    }
}

/// Dense 4K x 4K matrix W(t), row-major, built from the closed-form
/// coefficients of [`crate::model`].
pub fn assemble_w(t: f64, cfg: &SimulationConfig) -> Vec<f64> {
    let k = cfg.cutoff;
    let dim = 4 * k;
    let mut w = vec![0.0; dim * dim];
    // c_{row,col}; coupling_c(n, k) returns c_kn.
    let mut cp = vec![0.0; k * k];
    let mut cm = vec![0.0; k * k];
    for row in 1..=k {
        for col in 1..=k {
            let (p, m) = coupling_c(col, row, t, cfg);
            cp[(row - 1) * k + col - 1] = p;
            cm[(row - 1) * k + col - 1] = m;
        }
    }
    let a: Vec<(f64, f64)> = (1..=k).map(|n| coupling_a(n, t, cfg)).collect();

    #[derive(Clone, Copy)]
    enum Block {
        CPlus,
        CMinus,
        APlus(f64),
        AMinus(f64),
    }
    use Block::*;
    // W = -[[C-, C+, -A+, A-], [C+, C-, -A-, A+], [A+, -A-, C-, C+], [A-, -A+, C+, C-]]
    let layout = [
        [CMinus, CPlus, APlus(-1.0), AMinus(1.0)],
        [CPlus, CMinus, AMinus(-1.0), APlus(1.0)],
        [APlus(1.0), AMinus(-1.0), CMinus, CPlus],
        [AMinus(1.0), APlus(-1.0), CPlus, CMinus],
    ];
    for (bi, brow) in layout.iter().enumerate() {
        for (bj, block) in brow.iter().enumerate() {
            for r in 0..k {
                for c in 0..k {
                    let val = match *block {
                        CPlus => cp[r * k + c],
                        CMinus => cm[r * k + c],
                        APlus(s) if r == c => s * a[r].0,
                        AMinus(s) if r == c => s * a[r].1,
                        _ => 0.0,
                    };
                    w[(bi * k + r) * dim + bj * k + c] = -val;
                }
            }
        }
    }
    w
}

/// xi and eta of one initial-condition column at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    /// Initial excitation label, 1-based.
    pub m: usize,
    pub t: f64,
    data: Vec<f64>,
}

impl EvolutionState {
    /// xi_n = 2 delta_nm, eta_n = 0.
    pub fn initial(m: usize, cutoff: usize) -> Self {
        assert!(m >= 1 && m <= cutoff, "column index out of range");
        let mut data = vec![0.0; 4 * cutoff];
        data[m - 1] = 2.0;
        Self { m, t: 0.0, data }
    }

    pub fn from_raw(m: usize, t: f64, data: Vec<f64>) -> Result<Self> {
        if !data.len().is_multiple_of(4) || data.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "state length {} is not a positive multiple of 4",
                data.len()
            )));
        }
        Ok(Self { m, t, data })
    }

    pub fn cutoff(&self) -> usize {
        self.data.len() / 4
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn u(&self) -> &[f64] {
        let k = self.cutoff();
        &self.data[..k]
    }

    pub fn x(&self) -> &[f64] {
        let k = self.cutoff();
        &self.data[k..2 * k]
    }

    pub fn v(&self) -> &[f64] {
        let k = self.cutoff();
        &self.data[2 * k..3 * k]
    }

    pub fn y(&self) -> &[f64] {
        let k = self.cutoff();
        &self.data[3 * k..]
    }

    /// xi_n for 1-based `n`.
    pub fn xi(&self, n: usize) -> Complex64 {
        Complex64::new(self.u()[n - 1], self.v()[n - 1])
    }

    /// eta_n for 1-based `n`.
    pub fn eta(&self, n: usize) -> Complex64 {
        Complex64::new(self.x()[n - 1], self.y()[n - 1])
    }

    /// Mode function epsilon_n = (xi_n + eta_n) / 2.
    pub fn mode_function(&self, n: usize) -> Complex64 {
        0.5 * (self.xi(n) + self.eta(n))
    }
}

/// All columns sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// `states[i][m - 1]` is column m at `times[i]`.
    pub states: Vec<Vec<EvolutionState>>,
}

/// Uniform grid 0, dt, 2 dt, ... up to t_max (inclusive within rounding).
pub fn sample_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let count = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
    (0..=count).map(|i| i as f64 * dt).collect()
}

/// Integrates every column m = 1..=K of the configuration and returns all
/// samples. Memory grows as (samples x 4 K^2); use [`evolve_with`] for long
/// runs.
pub fn evolve(cfg: &SimulationConfig) -> Result<EvolutionRecord> {
    let mut record = EvolutionRecord {
        times: Vec::new(),
        states: Vec::new(),
    };
    evolve_with(cfg, |t, states| {
        record.times.push(t);
        record.states.push(states.to_vec());
    })?;
    Ok(record)
}

/// Integrates every column and hands each sample to `observer` in time
/// order. Returns the summed integrator statistics.
pub fn evolve_with<F>(cfg: &SimulationConfig, observer: F) -> Result<StepStats>
where
    F: FnMut(f64, &[EvolutionState]),
{
    cfg.validate()?;
    let grid = sample_grid(cfg.t_max, cfg.sample_dt);
    if cfg.period().is_none() {
        static_rotation(cfg, &grid, observer);
        return Ok(StepStats::default());
    }
    let sys = ModeSystem::new(cfg);
    let mut evolver = Evolver::vacuum(&sys, cfg.method, cfg.err);
    evolver.run(&grid, observer)?;
    Ok(evolver.stats())
}

/// A wall at rest leaves every column a free rotation,
/// xi_m^(m)(t) = 2 exp(-i Omega_m^0 t), which is evaluated in closed form.
fn static_rotation<F>(cfg: &SimulationConfig, grid: &[f64], mut observer: F)
where
    F: FnMut(f64, &[EvolutionState]),
{
    let k = cfg.cutoff;
    let omega0: Vec<f64> = (1..=k)
        .map(|n| crate::model::static_frequency(n, cfg.mass, cfg.l0))
        .collect();
    for &t in grid {
        let states: Vec<EvolutionState> = (1..=k)
            .map(|m| {
                let mut data = vec![0.0; 4 * k];
                let (s, c) = (omega0[m - 1] * t).sin_cos();
                data[m - 1] = 2.0 * c;
                data[2 * k + m - 1] = -2.0 * s;
                EvolutionState { m, t, data }
            })
            .collect();
        observer(t, &states);
    }
}

/// Set of independently integrated columns that advance together from
/// sample to sample.
pub struct Evolver<'s, T: Trajectory> {
    sys: &'s ModeSystem<T>,
    columns: Vec<(usize, Stepper)>,
}

impl<'s, T: Trajectory> Evolver<'s, T> {
    /// All K columns starting from the vacuum initial conditions.
    pub fn vacuum(sys: &'s ModeSystem<T>, method: Method, err: f64) -> Self {
        let k = sys.cutoff();
        let initial = (1..=k)
            .map(|m| (m, EvolutionState::initial(m, k).data))
            .collect();
        Self::with_initial(sys, method, err, initial)
    }

    /// Arbitrary initial vectors, labelled by column index.
    pub fn with_initial(
        sys: &'s ModeSystem<T>,
        method: Method,
        err: f64,
        initial: Vec<(usize, Vec<f64>)>,
    ) -> Self {
        let columns = initial
            .into_par_iter()
            .map(|(m, y0)| (m, Stepper::new(method, sys, 0.0, y0, err, err)))
            .collect();
        Self { sys, columns }
    }

    pub fn t(&self) -> f64 {
        self.columns.first().map_or(0.0, |(_, s)| s.t())
    }

    pub fn stats(&self) -> StepStats {
        self.columns
            .iter()
            .fold(StepStats::default(), |mut acc, (_, s)| {
                let st = s.stats();
                acc.accepted += st.accepted;
                acc.rejected += st.rejected;
                acc.evaluations += st.evaluations;
                acc
            })
    }

    pub fn states(&self) -> Vec<EvolutionState> {
        self.columns
            .iter()
            .map(|(m, s)| EvolutionState {
                m: *m,
                t: s.t(),
                data: s.y().to_vec(),
            })
            .collect()
    }

    /// Advances every column to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let sys = self.sys;
        let results: Vec<_> = self
            .columns
            .par_iter_mut()
            .map(|(m, stepper)| {
                stepper
                    .advance_to(sys, t)
                    .map_err(|f| integration_failure(*m, f))
            })
            .collect();
        results.into_iter().collect()
    }

    /// Visits every grid time (ascending, all >= current time) in order.
    pub fn run<F>(&mut self, grid: &[f64], mut observer: F) -> Result<()>
    where
        F: FnMut(f64, &[EvolutionState]),
    {
        let k = self.sys.cutoff();
        let per_sample = 4 * k * self.columns.len().max(1);
        let block = (BLOCK_BUDGET / per_sample).clamp(1, 4096);
        let sys = self.sys;

        for chunk in grid.chunks(block) {
            let results: Vec<Result<Vec<Vec<f64>>>> = self
                .columns
                .par_iter_mut()
                .map(|(m, stepper)| {
                    let mut out = Vec::with_capacity(chunk.len());
                    for &t in chunk {
                        stepper
                            .advance_to(sys, t)
                            .map_err(|f| integration_failure(*m, f))?;
                        out.push(stepper.y().to_vec());
                    }
                    Ok(out)
                })
                .collect();
            let mut per_column = Vec::with_capacity(results.len());
            for r in results {
                per_column.push(r?);
            }
            for (i, &t) in chunk.iter().enumerate() {
                let states: Vec<EvolutionState> = self
                    .columns
                    .iter()
                    .zip(&mut per_column)
                    .map(|((m, _), samples)| EvolutionState {
                        m: *m,
                        t,
                        data: std::mem::take(&mut samples[i]),
                    })
                    .collect();
                observer(t, &states);
            }
        }
        Ok(())
    }
}

// Doubles buffered per block of samples (~64 MB).
const BLOCK_BUDGET: usize = 8 << 20;

fn integration_failure(column: usize, f: crate::integrator::StepFailure) -> Error {
    Error::IntegrationFailure {
        column,
        t: f.t,
        reason: f.reason,
    }
}
