//! Embedded explicit Runge-Kutta pairs with adaptive step control.
//!
//! Two pairs are provided: Fehlberg 4(5) and the Dormand-Prince 8(5,3)
//! pair (DOP853). Both propagate the higher-order solution. The stepper
//! always lands exactly on requested output times, so a trajectory
//! sampled on a grid is reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

/// Right-hand side of y' = f(t, y).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    /// Runge-Kutta-Fehlberg 4(5).
    Rkf45,
    /// Dormand-Prince 8(5,3).
    #[default]
    Dop853,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rkf45 => "rkf45",
            Method::Dop853 => "dop853",
        }
    }

    /// Order of the propagated solution.
    pub fn order(self) -> u32 {
        match self {
            Method::Rkf45 => 5,
            Method::Dop853 => 8,
        }
    }

    // Stage count including f(t, y).
    fn stages(self) -> usize {
        match self {
            Method::Rkf45 => 6,
            Method::Dop853 => 12,
        }
    }

    // Exponent of the step-size controller.
    fn error_exponent(self) -> f64 {
        match self {
            Method::Rkf45 => 1.0 / 5.0,
            Method::Dop853 => 1.0 / 8.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rkf45" => Ok(Method::Rkf45),
            "dop853" | "rk8pd" => Ok(Method::Dop853),
            other => Err(format!(
                "unknown integrator '{other}' (expected rkf45 or dop853)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub t: f64,
    pub reason: String,
}

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 6.0;
const MAX_SHRINK: f64 = 1.0 / 3.0;
const DEFAULT_MAX_STEPS: u64 = 200_000_000;

/// Adaptive stepper holding the current point of one trajectory.
#[derive(Debug, Clone)]
pub struct Stepper {
    method: Method,
    rtol: f64,
    atol: f64,
    max_steps: u64,
    t: f64,
    y: Vec<f64>,
    // Proposed size of the next step.
    h: f64,
    // k[0] always holds f(t, y).
    k: Vec<Vec<f64>>,
    stage: Vec<f64>,
    y_new: Vec<f64>,
    stats: StepStats,
}

impl Stepper {
    pub fn new<S: OdeSystem + ?Sized>(
        method: Method,
        sys: &S,
        t0: f64,
        y0: Vec<f64>,
        rtol: f64,
        atol: f64,
    ) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "initial state has wrong dimension");
        let mut stepper = Self {
            method,
            rtol,
            atol,
            max_steps: DEFAULT_MAX_STEPS,
            t: t0,
            y: y0,
            h: 0.0,
            k: vec![vec![0.0; n]; method.stages()],
            stage: vec![0.0; n],
            y_new: vec![0.0; n],
            stats: StepStats::default(),
        };
        sys.rhs(t0, &stepper.y, &mut stepper.k[0]);
        stepper.stats.evaluations += 1;
        stepper.h = stepper.initial_step(sys);
        stepper
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Integrates forward until `t == t_end` exactly.
    pub fn advance_to<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t_end: f64,
    ) -> Result<(), StepFailure> {
        let mut last_rejected = false;
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.max_steps {
                return Err(self.fail("step budget exhausted"));
            }
            let remaining = t_end - self.t;
            let clipped = remaining <= 1.1 * self.h;
            let h = if clipped { remaining } else { self.h };
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(self.fail(&format!("step size underflow (h = {h:e})")));
            }

            let err = self.attempt(sys, h);
            if !err.is_finite() {
                // Shrink and retry; a persistent overflow ends in underflow.
                self.h = h * MAX_SHRINK;
                self.stats.rejected += 1;
                last_rejected = true;
                continue;
            }

            let scale = if err == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * err.powf(-self.method.error_exponent())).clamp(MAX_SHRINK, MAX_GROWTH)
            };

            if err <= 1.0 {
                let t_new = if clipped { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                if self.y.iter().any(|v| !v.is_finite()) {
                    return Err(self.fail("non-finite state"));
                }
                self.t = t_new;
                sys.rhs(self.t, &self.y, &mut self.k[0]);
                self.stats.evaluations += 1;
                self.stats.accepted += 1;

                let mut h_next = h * if last_rejected { scale.min(1.0) } else { scale };
                if clipped {
                    h_next = h_next.max(self.h);
                }
                self.h = h_next;
                last_rejected = false;
            } else {
                self.h = h * scale;
                self.stats.rejected += 1;
                last_rejected = true;
            }
        }
        Ok(())
    }

    fn fail(&self, reason: &str) -> StepFailure {
        StepFailure {
            t: self.t,
            reason: reason.to_string(),
        }
    }

    /// Computes a trial step of size `h` into `y_new` and returns the scaled
    /// error norm (accept when <= 1).
    fn attempt<S: OdeSystem + ?Sized>(&mut self, sys: &S, h: f64) -> f64 {
        match self.method {
            Method::Rkf45 => self.attempt_with(sys, h, &rkf45::TABLEAU),
            Method::Dop853 => self.attempt_with(sys, h, &dop853::TABLEAU),
        }
    }

    fn attempt_with<S: OdeSystem + ?Sized>(&mut self, sys: &S, h: f64, tab: &Tableau) -> f64 {
        let n = self.y.len();
        for (s, row) in tab.a.iter().enumerate() {
            let stage_index = s + 1;
            combine(&mut self.stage, &self.y, h, row, &self.k);
            sys.rhs(
                self.t + tab.c[stage_index] * h,
                &self.stage,
                &mut self.k[stage_index],
            );
        }
        self.stats.evaluations += tab.a.len() as u64;

        combine(&mut self.y_new, &self.y, h, tab.b, &self.k);

        match tab.error {
            ErrorEstimate::Single(e) => {
                let mut sum = 0.0;
                for i in 0..n {
                    let sk = self.atol + self.rtol * self.y[i].abs().max(self.y_new[i].abs());
                    let est: f64 = h * e.iter().map(|&(j, c)| c * self.k[j][i]).sum::<f64>();
                    sum += (est / sk).powi(2);
                }
                (sum / n as f64).sqrt()
            }
            ErrorEstimate::Dop853 { er, bhh } => {
                let mut err5 = 0.0;
                let mut err3 = 0.0;
                for i in 0..n {
                    let sk = self.atol + self.rtol * self.y[i].abs().max(self.y_new[i].abs());
                    let incr: f64 = tab.b.iter().map(|&(j, c)| c * self.k[j][i]).sum();
                    let e3 = incr - bhh.iter().map(|&(j, c)| c * self.k[j][i]).sum::<f64>();
                    let e5: f64 = er.iter().map(|&(j, c)| c * self.k[j][i]).sum();
                    err3 += (e3 / sk).powi(2);
                    err5 += (e5 / sk).powi(2);
                }
                let mut deno = err5 + 0.01 * err3;
                if deno <= 0.0 {
                    deno = 1.0;
                }
                h.abs() * err5 * (1.0 / (deno * n as f64)).sqrt()
            }
        }
    }

    // Hairer-Norsett-Wanner starting step heuristic.
    fn initial_step<S: OdeSystem + ?Sized>(&mut self, sys: &S) -> f64 {
        let n = self.y.len();
        let norm = |v: &[f64], y: &[f64]| -> f64 {
            let s: f64 = v
                .iter()
                .zip(y)
                .map(|(vi, yi)| (vi / (self.atol + self.rtol * yi.abs())).powi(2))
                .sum();
            (s / n as f64).sqrt()
        };
        let d0 = norm(&self.y, &self.y);
        let d1 = norm(&self.k[0], &self.y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };

        for i in 0..n {
            self.stage[i] = self.y[i] + h0 * self.k[0][i];
        }
        let mut f1 = vec![0.0; n];
        sys.rhs(self.t + h0, &self.stage, &mut f1);
        self.stats.evaluations += 1;
        let diff: Vec<f64> = f1.iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff, &self.y) / h0;

        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dmax).powf(1.0 / (self.method.order() as f64 + 1.0))
        };
        (100.0 * h0).min(h1)
    }
}

// out = y + h * sum_j c_j k_j
fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(usize, f64)], k: &[Vec<f64>]) {
    out.copy_from_slice(y);
    for &(j, c) in terms {
        let hc = h * c;
        for (o, kj) in out.iter_mut().zip(&k[j]) {
            *o += hc * kj;
        }
    }
}

enum ErrorEstimate {
    /// Difference between the propagated and the embedded solution.
    Single(&'static [(usize, f64)]),
    /// Hairer's combined 5th/3rd order estimate.
    Dop853 {
        er: &'static [(usize, f64)],
        bhh: &'static [(usize, f64)],
    },
}

/// Butcher tableau in sparse form; `a[s]` defines stage `s + 1`
/// (stage 0 is f(t, y)).
struct Tableau {
    c: &'static [f64],
    a: &'static [&'static [(usize, f64)]],
    b: &'static [(usize, f64)],
    error: ErrorEstimate,
}

mod rkf45 {
    use super::{ErrorEstimate, Tableau};

    pub(super) static TABLEAU: Tableau = Tableau {
        c: &[0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0],
        a: &[
            &[(0, 1.0 / 4.0)],
            &[(0, 3.0 / 32.0), (1, 9.0 / 32.0)],
            &[
                (0, 1932.0 / 2197.0),
                (1, -7200.0 / 2197.0),
                (2, 7296.0 / 2197.0),
            ],
            &[
                (0, 439.0 / 216.0),
                (1, -8.0),
                (2, 3680.0 / 513.0),
                (3, -845.0 / 4104.0),
            ],
            &[
                (0, -8.0 / 27.0),
                (1, 2.0),
                (2, -3544.0 / 2565.0),
                (3, 1859.0 / 4104.0),
                (4, -11.0 / 40.0),
            ],
        ],
        b: &[
            (0, 16.0 / 135.0),
            (2, 6656.0 / 12825.0),
            (3, 28561.0 / 56430.0),
            (4, -9.0 / 50.0),
            (5, 2.0 / 55.0),
        ],
        error: ErrorEstimate::Single(&[
            (0, 1.0 / 360.0),
            (2, -128.0 / 4275.0),
            (3, -2197.0 / 75240.0),
            (4, 1.0 / 50.0),
            (5, 2.0 / 55.0),
        ]),
    };
}

// Coefficients as published, beyond f64 precision.
#[allow(clippy::excessive_precision)]
mod dop853 {
    use super::{ErrorEstimate, Tableau};

    const A21: f64 = 5.26001519587677318785587544488E-2;
    const A31: f64 = 1.97250569845378994544595329183E-2;
    const A32: f64 = 5.91751709536136983633785987549E-2;
    const A41: f64 = 2.95875854768068491816892993775E-2;
    const A43: f64 = 8.87627564304205475450678981324E-2;
    const A51: f64 = 2.41365134159266685502369798665E-1;
    const A53: f64 = -8.84549479328286085344864962717E-1;
    const A54: f64 = 9.24834003261792003115737966543E-1;
    const A61: f64 = 3.7037037037037037037037037037E-2;
    const A64: f64 = 1.70828608729473871279604482173E-1;
    const A65: f64 = 1.25467687566822425016691814123E-1;
    const A71: f64 = 3.7109375E-2;
    const A74: f64 = 1.70252211019544039314978060272E-1;
    const A75: f64 = 6.02165389804559606850219397283E-2;
    const A76: f64 = -1.7578125E-2;
    const A81: f64 = 3.70920001185047927108779319836E-2;
    const A84: f64 = 1.70383925712239993810214054705E-1;
    const A85: f64 = 1.07262030446373284651809199168E-1;
    const A86: f64 = -1.53194377486244017527936158236E-2;
    const A87: f64 = 8.27378916381402288758473766002E-3;
    const A91: f64 = 6.24110958716075717114429577812E-1;
    const A94: f64 = -3.36089262944694129406857109825E0;
    const A95: f64 = -8.68219346841726006818189891453E-1;
    const A96: f64 = 2.75920996994467083049415600797E1;
    const A97: f64 = 2.01540675504778934086186788979E1;
    const A98: f64 = -4.34898841810699588477366255144E1;
    const A101: f64 = 4.77662536438264365890433908527E-1;
    const A104: f64 = -2.48811461997166764192642586468E0;
    const A105: f64 = -5.90290826836842996371446475743E-1;
    const A106: f64 = 2.12300514481811942347288949897E1;
    const A107: f64 = 1.52792336328824235832596922938E1;
    const A108: f64 = -3.32882109689848629194453265587E1;
    const A109: f64 = -2.03312017085086261358222928593E-2;
    const A111: f64 = -9.3714243008598732571704021658E-1;
    const A114: f64 = 5.18637242884406370830023853209E0;
    const A115: f64 = 1.09143734899672957818500254654E0;
    const A116: f64 = -8.14978701074692612513997267357E0;
    const A117: f64 = -1.85200656599969598641566180701E1;
    const A118: f64 = 2.27394870993505042818970056734E1;
    const A119: f64 = 2.49360555267965238987089396762E0;
    const A1110: f64 = -3.0467644718982195003823669022E0;
    const A121: f64 = 2.27331014751653820792359768449E0;
    const A124: f64 = -1.05344954667372501984066689879E1;
    const A125: f64 = -2.00087205822486249909675718444E0;
    const A126: f64 = -1.79589318631187989172765950534E1;
    const A127: f64 = 2.79488845294199600508499808837E1;
    const A128: f64 = -2.85899827713502369474065508674E0;
    const A129: f64 = -8.87285693353062954433549289258E0;
    const A1210: f64 = 1.23605671757943030647266201528E1;
    const A1211: f64 = 6.43392746015763530355970484046E-1;

    const B1: f64 = 5.42937341165687622380535766363E-2;
    const B6: f64 = 4.45031289275240888144113950566E0;
    const B7: f64 = 1.89151789931450038304281599044E0;
    const B8: f64 = -5.8012039600105847814672114227E0;
    const B9: f64 = 3.1116436695781989440891606237E-1;
    const B10: f64 = -1.52160949662516078556178806805E-1;
    const B11: f64 = 2.01365400804030348374776537501E-1;
    const B12: f64 = 4.47106157277725905176885569043E-2;

    const BHH1: f64 = 0.244094488188976377952755905512E+00;
    const BHH2: f64 = 0.733846688281611857341361741547E+00;
    const BHH3: f64 = 0.220588235294117647058823529412E-01;

    const C2: f64 = 0.526001519587677318785587544488E-01;
    const C3: f64 = 0.789002279381515978178381316732E-01;
    const C4: f64 = 0.118350341907227396726757197510E+00;
    const C5: f64 = 0.281649658092772603273242802490E+00;
    const C6: f64 = 0.333333333333333333333333333333E+00;
    const C7: f64 = 0.25E+00;
    const C8: f64 = 0.307692307692307692307692307692E+00;
    const C9: f64 = 0.651282051282051282051282051282E+00;
    const C10: f64 = 0.6E+00;
    const C11: f64 = 0.857142857142857142857142857142E+00;

    const ER1: f64 = 0.1312004499419488073250102996E-01;
    const ER6: f64 = -0.1225156446376204440720569753E+01;
    const ER7: f64 = -0.4957589496572501915214079952E+00;
    const ER8: f64 = 0.1664377182454986536961530415E+01;
    const ER9: f64 = -0.3503288487499736816886487290E+00;
    const ER10: f64 = 0.3341791187130174790297318841E+00;
    const ER11: f64 = 0.8192320648511571246570742613E-01;
    const ER12: f64 = -0.2235530786388629525884427845E-01;

    pub(super) static TABLEAU: Tableau = Tableau {
        c: &[0.0, C2, C3, C4, C5, C6, C7, C8, C9, C10, C11, 1.0],
        a: &[
            &[(0, A21)],
            &[(0, A31), (1, A32)],
            &[(0, A41), (2, A43)],
            &[(0, A51), (2, A53), (3, A54)],
            &[(0, A61), (3, A64), (4, A65)],
            &[(0, A71), (3, A74), (4, A75), (5, A76)],
            &[(0, A81), (3, A84), (4, A85), (5, A86), (6, A87)],
            &[(0, A91), (3, A94), (4, A95), (5, A96), (6, A97), (7, A98)],
            &[
                (0, A101),
                (3, A104),
                (4, A105),
                (5, A106),
                (6, A107),
                (7, A108),
                (8, A109),
            ],
            &[
                (0, A111),
                (3, A114),
                (4, A115),
                (5, A116),
                (6, A117),
                (7, A118),
                (8, A119),
                (9, A1110),
            ],
            &[
                (0, A121),
                (3, A124),
                (4, A125),
                (5, A126),
                (6, A127),
                (7, A128),
                (8, A129),
                (9, A1210),
                (10, A1211),
            ],
        ],
        b: &[
            (0, B1),
            (5, B6),
            (6, B7),
            (7, B8),
            (8, B9),
            (9, B10),
            (10, B11),
            (11, B12),
        ],
        error: ErrorEstimate::Dop853 {
            er: &[
                (0, ER1),
                (5, ER6),
                (6, ER7),
                (7, ER8),
                (8, ER9),
                (9, ER10),
                (10, ER11),
                (11, ER12),
            ],
            bhh: &[(0, BHH1), (8, BHH2), (11, BHH3)],
        },
    };
}
