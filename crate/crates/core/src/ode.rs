//! Adaptive Dormand-Prince 5(4) integrator with continuous output, event
//! location on the dense interpolant, and variational (tangent) propagation.
//!
//! All flows in this crate are nonstiff away from slow manifolds, and near
//! slow manifolds the contraction rate is at most O(1), so a tight-tolerance
//! explicit pair is sufficient. State vectors are fixed-size arrays.

use thiserror::Error;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_EVENT_TOL: f64 = 1e-12;
pub const DEFAULT_DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Error)]
pub enum OdeError {
    /// State norm exceeded the divergence bound. Expected near Painleve
    /// poles; callers that chase poles must do so in regularized
    /// coordinates.
    #[error("solution diverged at t = {t} (|y| = {norm:.3e})")]
    Divergence { t: f64, norm: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("time budget exhausted at t = {t}")]
    Timeout { t: f64 },
    #[error("no event sign change found before t = {t_final}")]
    NoEvent { t_final: f64 },
    #[error("integrator configuration invalid: {0}")]
    BadConfig(String),
}

pub type OdeResult<T> = Result<T, OdeError>;

#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Per-component absolute tolerance (scalar applied to every component).
    pub abs_tol: f64,
    pub max_step: f64,
    /// Time budget, measured as elapsed |t - t0|. Must be finite.
    pub max_time: f64,
    pub event_tol: f64,
    pub divergence_norm: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_step: f64::INFINITY,
            max_time: 1e7,
            event_tol: DEFAULT_EVENT_TOL,
            divergence_norm: DEFAULT_DIVERGENCE_NORM,
            max_steps: 500_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> OdeResult<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.event_tol > 0.0) {
            return Err(OdeError::BadConfig("tolerances must be positive".into()));
        }
        if !self.max_time.is_finite() || self.max_time <= 0.0 {
            return Err(OdeError::BadConfig("max_time must be finite and positive".into()));
        }
        Ok(())
    }

    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Rising,
    Falling,
    Any,
}

impl Orientation {
    fn matches(self, before: f64, after: f64) -> bool {
        match self {
            Orientation::Rising => before < 0.0 && after > 0.0,
            Orientation::Falling => before > 0.0 && after < 0.0,
            Orientation::Any => before * after < 0.0,
        }
    }
}

/// One accepted step together with the coefficients of the quartic
/// continuous extension (Hairer's contd5 form).
#[derive(Clone, Debug)]
pub struct Segment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    conts: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    /// Evaluate the interpolant at `t` inside `[t0, t0+h]` (or the reversed
    /// interval for backward integration).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            let c = &self.conts;
            y[i] = c[0][i] + theta * (c[1][i] + th1 * (c[2][i] + theta * (c[3][i] + th1 * c[4][i])));
        }
        y
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    /// Build a segment whose quartic interpolant passes through five given
    /// states at theta = 0, 1/4, 1/2, 3/4, 1. Used to re-embed trajectories
    /// into a larger state space without losing interpolation order.
    pub fn from_nodes(t0: f64, h: f64, nodes: [[f64; N]; 5]) -> Self {
        let thetas = [0.0, 0.25, 0.5, 0.75, 1.0];
        let basis = |th: f64| {
            [
                1.0,
                th,
                th * (1.0 - th),
                th * th * (1.0 - th),
                th * th * (1.0 - th) * (1.0 - th),
            ]
        };
        let mut conts = [[0.0; N]; 5];
        for i in 0..N {
            let mut a: Vec<Vec<f64>> = thetas.iter().map(|&t| basis(t).to_vec()).collect();
            let mut b: Vec<f64> = nodes.iter().map(|n| n[i]).collect();
            let c = crate::numerics::solve_n(&mut a, &mut b).expect("node basis is nonsingular");
            for (k, ck) in c.iter().enumerate() {
                conts[k][i] = *ck;
            }
        }
        Segment { t0, h, conts }
    }
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Clone, Debug)]
pub struct Event<const N: usize> {
    pub t: f64,
    pub state: [f64; N],
    pub event_id: usize,
}

/// Time-parameterized solution with interpolable output and recorded
/// section-crossing events.
#[derive(Clone, Debug)]
pub struct DenseTrajectory<const N: usize> {
    pub segments: Vec<Segment<N>>,
    pub events: Vec<Event<N>>,
    pub stats: Stats,
    t_first: f64,
    y_first: [f64; N],
}

impl<const N: usize> DenseTrajectory<N> {
    pub fn from_parts(
        segments: Vec<Segment<N>>,
        events: Vec<Event<N>>,
        stats: Stats,
        t_first: f64,
        y_first: [f64; N],
    ) -> Self {
        Self { segments, events, stats, t_first, y_first }
    }

    pub fn t_start(&self) -> f64 {
        self.t_first
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(self.t_first, |s| s.t_end())
    }

    pub fn first_state(&self) -> [f64; N] {
        self.y_first
    }

    pub fn last_state(&self) -> [f64; N] {
        self.segments.last().map_or(self.y_first, |s| s.eval(s.t_end()))
    }

    /// Interpolated state at `t`; clamps to the covered span.
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.segments.is_empty() {
            return self.y_first;
        }
        let fwd = self.segments[0].h > 0.0;
        let mut lo = 0usize;
        let mut hi = self.segments.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let te = self.segments[mid].t_end();
            let past = if fwd { te < t } else { te > t };
            if past {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        self.segments[lo].eval(t)
    }

    /// Sample `n` points uniformly in time across the whole span.
    pub fn sample(&self, n: usize) -> Vec<(f64, [f64; N])> {
        let (a, b) = (self.t_start(), self.t_end());
        (0..n)
            .map(|i| {
                let t = a + (b - a) * i as f64 / (n.max(2) - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Error weights: b5 - b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the fifth coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
const SAFETY: f64 = 0.9;

struct Stepper<'a, F, const N: usize> {
    f: &'a F,
    cfg: &'a IntegratorConfig,
    t: f64,
    y: [f64; N],
    dydt: [f64; N],
    h: f64,
    dir: f64,
    stats: Stats,
}

fn inf_norm<const N: usize>(y: &[f64; N]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl<'a, F, const N: usize> Stepper<'a, F, N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn new(f: &'a F, cfg: &'a IntegratorConfig, t0: f64, y0: [f64; N], dir: f64) -> OdeResult<Self> {
        cfg.validate()?;
        let dydt = f(t0, &y0);
        let mut s = Self { f, cfg, t: t0, y: y0, dydt, h: 0.0, dir, stats: Stats::default() };
        s.stats.rhs_evals += 1;
        s.h = s.initial_step();
        Ok(s)
    }

    fn tol_at(&self, y: &[f64; N], i: usize) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs()
    }

    fn initial_step(&mut self) -> f64 {
        // Hairer's starting-step heuristic, simplified.
        let d0 = inf_norm(&self.y).max(1e-5);
        let d1 = inf_norm(&self.dydt);
        let mut h0 = if d1 > 1e-10 { 0.01 * d0 / d1 } else { 1e-6 };
        h0 = h0.min(self.cfg.max_step);
        let yp: [f64; N] = std::array::from_fn(|i| self.y[i] + self.dir * h0 * self.dydt[i]);
        let dyp = (self.f)(self.t + self.dir * h0, &yp);
        self.stats.rhs_evals += 1;
        let d2: f64 = (0..N)
            .map(|i| ((dyp[i] - self.dydt[i]) / h0).abs())
            .fold(0.0, f64::max);
        let h1 = if d1.max(d2) > 1e-15 {
            (0.01 / d1.max(d2)).powf(0.2)
        } else {
            h0 * 10.0
        };
        (h0 * 100.0).min(h1).min(self.cfg.max_step).max(1e-12)
    }

    /// Attempt steps until one is accepted; returns the dense segment.
    fn step(&mut self) -> OdeResult<Segment<N>> {
        let norm0 = inf_norm(&self.y);
        if !norm0.is_finite() || norm0 > self.cfg.divergence_norm {
            return Err(OdeError::Divergence { t: self.t, norm: norm0 });
        }
        loop {
            if self.stats.steps + self.stats.rejected >= self.cfg.max_steps {
                return Err(OdeError::Timeout { t: self.t });
            }
            let h = self.dir * self.h;
            if self.h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { t: self.t });
            }

            let mut k = [[0.0; N]; 7];
            k[0] = self.dydt;
            for s in 1..7 {
                let mut ys = self.y;
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..N {
                            ys[i] += h * a * k[j][i];
                        }
                    }
                }
                k[s] = (self.f)(self.t + C[s] * h, &ys);
            }
            self.stats.rhs_evals += 6;
            // Seventh stage is FSAL: k[6] = f(t+h, y_new) where y_new uses b = A[6].
            let mut y_new = self.y;
            for j in 0..6 {
                let a = A[6][j];
                if a != 0.0 {
                    for i in 0..N {
                        y_new[i] += h * a * k[j][i];
                    }
                }
            }
            // k[6] recomputed at (t+h, y_new) to serve as next step's k[0].
            let k7 = (self.f)(self.t + h, &y_new);
            self.stats.rhs_evals += 1;
            k[6] = k7;

            let mut err: f64 = 0.0;
            let mut finite = true;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += E[j] * kj[i];
                    }
                }
                e *= h;
                let sc = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs().max(y_new[i].abs());
                let r = e / sc;
                if !r.is_finite() {
                    finite = false;
                    break;
                }
                err += r * r;
            }
            let err = if finite { (err / N as f64).sqrt() } else { f64::INFINITY };

            if err <= 1.0 {
                // Accepted: build the continuous extension.
                let mut conts = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * k[0][i] - ydiff;
                    conts[0][i] = self.y[i];
                    conts[1][i] = ydiff;
                    conts[2][i] = bspl;
                    conts[3][i] = ydiff - h * k7[i] - bspl;
                    let mut d = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        if D[j] != 0.0 {
                            d += D[j] * kj[i];
                        }
                    }
                    conts[4][i] = h * d;
                }
                let seg = Segment { t0: self.t, h, conts };
                self.t += h;
                self.y = y_new;
                self.dydt = k7;
                self.stats.steps += 1;
                let scale = if err == 0.0 {
                    MAX_SCALE
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
                };
                self.h = (self.h * scale).min(self.cfg.max_step);
                return Ok(seg);
            }
            self.stats.rejected += 1;
            let scale = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, 1.0)
            } else {
                MIN_SCALE
            };
            self.h *= scale;
        }
    }
}

/// Integrate `field` over `t_span`, producing a dense trajectory. The span
/// may run forward or backward.
pub fn integrate<F, const N: usize>(
    field: F,
    y0: [f64; N],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> OdeResult<DenseTrajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let (t0, t1) = t_span;
    if t0 == t1 {
        return Err(OdeError::BadConfig("degenerate t_span".into()));
    }
    if (t1 - t0).abs() > cfg.max_time {
        return Err(OdeError::BadConfig("t_span exceeds max_time".into()));
    }
    let dir = (t1 - t0).signum();
    let mut st = Stepper::new(&field, cfg, t0, y0, dir)?;
    let mut segments = Vec::new();
    while (t1 - st.t) * dir > 0.0 {
        let remaining = (t1 - st.t).abs();
        if st.h > remaining {
            st.h = remaining;
        }
        segments.push(st.step()?);
    }
    Ok(DenseTrajectory { segments, events: Vec::new(), stats: st.stats, t_first: t0, y_first: y0 })
}

/// What the crossing callback wants the driver to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventFlow {
    Continue,
    Stop,
}

/// Drive the integrator from `t0`, invoking `on_hit` at every refined
/// crossing of `event` with the requested orientation. Returns the dense
/// trajectory covering everything integrated (events included).
///
/// Crossings are detected between accepted steps and refined on the dense
/// interpolant by a bracketed secant/bisection hybrid. A start point already
/// on the section (|g| <= event_tol) does not count until the sign has left
/// the tolerance band, so re-running from a hit never reports an earlier
/// crossing.
pub fn integrate_crossings<F, G, H, const N: usize>(
    field: F,
    y0: [f64; N],
    t0: f64,
    direction: Direction,
    event: G,
    orientation: Orientation,
    cfg: &IntegratorConfig,
    mut on_hit: H,
) -> OdeResult<DenseTrajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
    H: FnMut(f64, &[f64; N]) -> EventFlow,
{
    let dir = direction.sign();
    let mut st = Stepper::new(&field, cfg, t0, y0, dir)?;
    let mut segments: Vec<Segment<N>> = Vec::new();
    let mut events = Vec::new();
    let mut g_prev = event(&y0);
    let mut armed = g_prev.abs() > cfg.event_tol;
    let mut stopped = false;

    'outer: while (st.t - t0).abs() < cfg.max_time {
        let seg = st.step()?;
        let g_new = event(&st.y);
        if !armed {
            if g_new.abs() > cfg.event_tol {
                armed = true;
                g_prev = g_new;
            }
            segments.push(seg);
            continue;
        }
        if g_prev != 0.0 && g_new != 0.0 && g_prev.signum() != g_new.signum() {
            // Bracketed refinement on the interpolant over this segment.
            let (t_hit, y_hit) = refine_crossing(&seg, &event, g_prev, cfg);
            let g_here = event(&y_hit);
            if orientation.matches(g_prev, g_new) && g_here.abs() <= cfg.event_tol.max(1e-9) {
                events.push(Event { t: t_hit, state: y_hit, event_id: 0 });
                if on_hit(t_hit, &y_hit) == EventFlow::Stop {
                    segments.push(seg);
                    stopped = true;
                    break 'outer;
                }
            }
        }
        g_prev = g_new;
        segments.push(seg);
    }
    if !stopped && (st.t - t0).abs() >= cfg.max_time {
        // Ran out of budget; caller decides whether that is NoEvent.
    }
    Ok(DenseTrajectory { segments, events, stats: st.stats, t_first: t0, y_first: y0 })
}

fn refine_crossing<G, const N: usize>(
    seg: &Segment<N>,
    event: &G,
    g_left: f64,
    cfg: &IntegratorConfig,
) -> (f64, [f64; N])
where
    G: Fn(&[f64; N]) -> f64,
{
    let mut a = seg.t0;
    let mut b = seg.t_end();
    let mut ga = g_left;
    let mut gb = event(&seg.eval(b));
    let mut t = b;
    for _ in 0..200 {
        // Secant proposal, guarded by bisection.
        let mut tm = if (gb - ga).abs() > 1e-300 {
            b - gb * (b - a) / (gb - ga)
        } else {
            0.5 * (a + b)
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(tm > lo && tm < hi) {
            tm = 0.5 * (a + b);
        }
        let ym = seg.eval(tm);
        let gm = event(&ym);
        if gm.abs() <= cfg.event_tol || (b - a).abs() <= f64::EPSILON * tm.abs().max(1.0) {
            return (tm, ym);
        }
        if ga.signum() == gm.signum() {
            a = tm;
            ga = gm;
        } else {
            b = tm;
            gb = gm;
        }
        t = tm;
    }
    (t, seg.eval(t))
}

/// First oriented crossing of `event` after `t0`.
pub fn integrate_to_event<F, G, const N: usize>(
    field: F,
    y0: [f64; N],
    t0: f64,
    direction: Direction,
    event: G,
    orientation: Orientation,
    cfg: &IntegratorConfig,
) -> OdeResult<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> f64,
{
    let mut hit: Option<(f64, [f64; N])> = None;
    let traj = integrate_crossings(field, y0, t0, direction, event, orientation, cfg, |t, y| {
        hit = Some((t, *y));
        EventFlow::Stop
    })?;
    hit.ok_or(OdeError::NoEvent { t_final: traj.t_end() })
}

/// Integrate while recording all oriented crossings of a list of event
/// functions (used for section-crossing bookkeeping in trajectories).
pub fn integrate_with_events<F, const N: usize>(
    field: F,
    y0: [f64; N],
    t_span: (f64, f64),
    events: &[(usize, Box<dyn Fn(&[f64; N]) -> f64 + '_>, Orientation)],
    cfg: &IntegratorConfig,
) -> OdeResult<DenseTrajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut traj = integrate(field, y0, t_span, cfg)?;
    for (id, g, orient) in events {
        let mut g_prev = g(&traj.y_first);
        let mut armed = g_prev.abs() > cfg.event_tol;
        for seg in &traj.segments {
            let y_end = seg.eval(seg.t_end());
            let g_new = g(&y_end);
            if !armed {
                if g_new.abs() > cfg.event_tol {
                    armed = true;
                    g_prev = g_new;
                }
                continue;
            }
            if g_prev != 0.0 && g_new != 0.0 && g_prev.signum() != g_new.signum() {
                let (t_hit, y_hit) = refine_crossing(seg, g, g_prev, cfg);
                if orient.matches(g_prev, g_new) {
                    traj.events.push(Event { t: t_hit, state: y_hit, event_id: *id });
                }
            }
            g_prev = g_new;
        }
    }
    traj.events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(traj)
}

macro_rules! variational_impl {
    ($name:ident, $n:literal, $aug:literal) => {
        /// Propagate the state together with the fundamental matrix of the
        /// variational equation M' = J(y) M, M(t0) = I.
        pub fn $name<F, J>(
            field: F,
            jacobian: J,
            y0: [f64; $n],
            t_span: (f64, f64),
            cfg: &IntegratorConfig,
        ) -> OdeResult<([f64; $n], [[f64; $n]; $n])>
        where
            F: Fn(f64, &[f64; $n]) -> [f64; $n],
            J: Fn(f64, &[f64; $n]) -> [[f64; $n]; $n],
        {
            let mut z0 = [0.0; $aug];
            z0[..$n].copy_from_slice(&y0);
            for i in 0..$n {
                z0[$n + i * $n + i] = 1.0;
            }
            let aug_field = |t: f64, z: &[f64; $aug]| -> [f64; $aug] {
                let mut y = [0.0; $n];
                y.copy_from_slice(&z[..$n]);
                let dy = field(t, &y);
                let jac = jacobian(t, &y);
                let mut dz = [0.0; $aug];
                dz[..$n].copy_from_slice(&dy);
                for col in 0..$n {
                    for row in 0..$n {
                        let mut s = 0.0;
                        for k in 0..$n {
                            s += jac[row][k] * z[$n + col * $n + k];
                        }
                        dz[$n + col * $n + row] = s;
                    }
                }
                dz
            };
            let traj = integrate(aug_field, z0, t_span, cfg)?;
            let zf = traj.last_state();
            let mut yf = [0.0; $n];
            yf.copy_from_slice(&zf[..$n]);
            let mut m = [[0.0; $n]; $n];
            for col in 0..$n {
                for row in 0..$n {
                    m[row][col] = zf[$n + col * $n + row];
                }
            }
            Ok((yf, m))
        }
    };
}

variational_impl!(variational_flow2, 2, 6);
variational_impl!(variational_flow3, 3, 12);
