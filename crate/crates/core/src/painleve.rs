//! Painleve-I engine: truncated asymptotics, the tritronquee solution, the
//! pole-regularizing coordinate change, and pole location.
//!
//! The working form of the equation is y2'' = -z2 + y2^2, written as the
//! system dx2/dz2 = -z2 + y2^2, dy2/dz2 = x2 (so x2 is the derivative of
//! y2), or as the autonomous flow x2' = z2 - y2^2, y2' = -x2, z2' = -1.
//! Poles of y2 are double with leading coefficient 6; near a pole the chart
//!
//!   y2 = -kappa^3 / eta^2,
//!   x2 = 2 kappa^2/eta^3 + (kappa^2 tau/2) eta + (kappa^2/2) eta^2
//!        - kappa^2 eta^3 xi,        z2 = kappa tau,  kappa = (-6)^{1/5},
//!
//! turns the pole into a simple rising zero of eta(tau) of the analytic
//! system
//!
//!   deta/dtau = 1 + (tau/4) eta^4 + (1/4) eta^5 - (1/2) eta^6 xi,
//!   dxi/dtau  = (1/8) tau^2 eta + (3/8) tau eta^2 - (tau xi - 1/4) eta^3
//!               - (5/4) eta^4 xi + (3/2) eta^5 xi^2.
//!
//! The chart requires y2 > 0 (eta real); on the approach branch flowing
//! toward a pole in forward tau the consistent sign is eta < 0.

use serde::Serialize;
use thiserror::Error;

use crate::ode::{
    integrate, integrate_to_event, Direction, IntegratorConfig, OdeError, Orientation,
};

/// kappa = (-6)^{1/5}, the real negative fifth root.
pub fn kappa() -> f64 {
    -(6.0f64.powf(0.2))
}

/// Threshold in y2 at which pole search switches from the plain system to
/// the regularized chart. Must be positive; the chart needs y2 > 0.
const Y_SWITCH: f64 = 2.0;
/// Validity edge of the truncated large-z2 asymptotics.
pub const ASYMPTOTIC_MIN_Z2: f64 = 10.0;

#[derive(Debug, Error)]
pub enum PainleveError {
    #[error("z2 = {z2} is below the asymptotic validity threshold {min}")]
    OutOfValidity { z2: f64, min: f64 },
    #[error("regularization requires y2 > 0 (pole side of the chart), got y2 = {y2}")]
    BranchViolation { y2: f64 },
    #[error("eta = 0 is the pole itself; the chart cannot be inverted there")]
    PoleAt,
    #[error("no pole found within the integration horizon")]
    NoPoleFound,
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Phase point of Painleve I: x2 = dy2/dz2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct P1State {
    pub x2: f64,
    pub y2: f64,
    pub z2: f64,
}

/// Pole-regularized image of a P1 state; z2 = kappa * tau.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularizedState {
    pub eta: f64,
    pub xi: f64,
    pub tau: f64,
}

/// Coefficients of the truncated large-z2 expansion. `c1 = c2 = 0` selects
/// the tritronquee solution; `order` 0 keeps the leading algebraic terms,
/// order 1 adds the next tritronquee correction (-z^-2/8 in y2).
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticParams {
    pub c1: f64,
    pub c2: f64,
    pub order: usize,
}

impl AsymptoticParams {
    pub fn tritronquee(order: usize) -> Self {
        Self { c1: 0.0, c2: 0.0, order }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleResult {
    pub z0: f64,
    /// |eta| at the reported root after event refinement.
    pub refinement_residual: f64,
    /// Fitted quartic Laurent coefficient, when a Laurent fit was run.
    pub branch_data: Option<f64>,
}

/// Truncated asymptotic evaluation of the two-parameter family at large z2.
pub fn asymptotic_eval(params: &AsymptoticParams, z2: f64) -> Result<P1State, PainleveError> {
    if z2 < ASYMPTOTIC_MIN_Z2 {
        return Err(PainleveError::OutOfValidity { z2, min: ASYMPTOTIC_MIN_Z2 });
    }
    let phi = 4.0 * 2.0f64.sqrt() / 5.0 * z2.powf(1.25);
    let (c, s) = (phi.cos(), phi.sin());
    let (c1, c2) = (params.c1, params.c2);
    let mut y2 = -z2.sqrt() + c1 * z2.powf(-0.125) * c + c2 * z2.powf(-0.125) * s;
    let mut x2 = -0.5 / z2.sqrt()
        - (c1 / 8.0 * z2.powf(-1.125) - 2.0f64.sqrt() * c2 * z2.powf(0.125)) * c
        - (c2 / 8.0 * z2.powf(-1.125) + 2.0f64.sqrt() * c1 * z2.powf(0.125)) * s;
    if params.order >= 1 {
        // Next algebraic terms of the tritronquee branch, derived by
        // substituting y = -sqrt(z) + w into the equation.
        y2 -= z2.powi(-2) / 8.0;
        x2 += 0.25 * z2.powi(-3);
    }
    Ok(P1State { x2, y2, z2 })
}

/// Autonomous P1 flow: x2' = z2 - y2^2, y2' = -x2, z2' = -1.
pub fn p1_field(_t: f64, y: &[f64; 3]) -> [f64; 3] {
    [y[2] - y[1] * y[1], -y[0], -1.0]
}

/// Right-hand side of the regularized system; tau is the independent
/// variable, state is [eta, xi].
pub fn regularized_field(tau: f64, s: &[f64; 2]) -> [f64; 2] {
    let (eta, xi) = (s[0], s[1]);
    let e2 = eta * eta;
    let e3 = e2 * eta;
    let e4 = e2 * e2;
    let e5 = e4 * eta;
    let e6 = e4 * e2;
    [
        1.0 + 0.25 * tau * e4 + 0.25 * e5 - 0.5 * e6 * xi,
        0.125 * tau * tau * eta + 0.375 * tau * e2 - (tau * xi - 0.25) * e3 - 1.25 * e4 * xi
            + 1.5 * e5 * xi * xi,
    ]
}

/// Map a P1 state with y2 > 0 into the regularized chart. The sign of eta
/// is chosen negative: that is the branch on which the forward-tau flow
/// reaches the pole as a rising zero of eta with xi staying bounded.
pub fn regularize(p: &P1State) -> Result<RegularizedState, PainleveError> {
    if p.y2 <= 0.0 {
        return Err(PainleveError::BranchViolation { y2: p.y2 });
    }
    let k = kappa();
    let k2 = k * k;
    let k3 = k2 * k;
    let eta = -(-k3 / p.y2).sqrt();
    let tau = p.z2 / k;
    let e2 = eta * eta;
    let e3 = e2 * eta;
    // Invert the x2 relation for xi.
    let xi = (2.0 * k2 / e3 + 0.5 * k2 * tau * eta + 0.5 * k2 * e2 - p.x2) / (k2 * e3);
    Ok(RegularizedState { eta, xi, tau })
}

/// Inverse of [`regularize`]; defined for eta != 0.
pub fn deregularize(r: &RegularizedState) -> Result<P1State, PainleveError> {
    if r.eta == 0.0 {
        return Err(PainleveError::PoleAt);
    }
    let k = kappa();
    let k2 = k * k;
    let k3 = k2 * k;
    let (eta, xi, tau) = (r.eta, r.xi, r.tau);
    let e2 = eta * eta;
    let e3 = e2 * eta;
    Ok(P1State {
        x2: 2.0 * k2 / e3 + 0.5 * k2 * tau * eta + 0.5 * k2 * e2 - k2 * e3 * xi,
        y2: -k3 / e2,
        z2: k * tau,
    })
}

fn pole_cfg() -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_time: 1e4,
        divergence_norm: 1e12,
        ..Default::default()
    }
}

/// Direction of pole search in z2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleDirection {
    DecreasingZ,
    IncreasingZ,
}

/// Locate the first pole of the solution through `start` in the requested
/// z2 direction: integrate the plain system until y2 exceeds a positive
/// switch level, change to the regularized chart, and refine the zero
/// crossing of eta by event location.
pub fn find_pole(start: &P1State, direction: PoleDirection) -> Result<PoleResult, PainleveError> {
    let (z0, _traj) = find_pole_with_approach(start, direction)?;
    Ok(z0)
}

/// As [`find_pole`], also returning the regularized approach trajectory
/// (state [eta, xi] over tau) for callers that need samples near the pole.
pub fn find_pole_with_approach(
    start: &P1State,
    direction: PoleDirection,
) -> Result<(PoleResult, crate::ode::DenseTrajectory<2>), PainleveError> {
    let cfg = pole_cfg();
    let t_dir = match direction {
        PoleDirection::DecreasingZ => Direction::Forward,
        PoleDirection::IncreasingZ => Direction::Backward,
    };
    // tau runs with t: z2 = kappa*tau and z2 = z_start - t, kappa < 0.
    let tau_dir = t_dir;

    let mut state = *start;
    for _attempt in 0..8 {
        // Phase A: plain coordinates until regularizable.
        if state.y2 <= Y_SWITCH {
            let (_, hit) = integrate_to_event(
                p1_field,
                [state.x2, state.y2, state.z2],
                0.0,
                t_dir,
                |y| y[1] - Y_SWITCH,
                Orientation::Rising,
                &cfg,
            )
            .map_err(|e| match e {
                OdeError::NoEvent { .. } => PainleveError::NoPoleFound,
                other => PainleveError::Ode(other),
            })?;
            state = P1State { x2: hit[0], y2: hit[1], z2: hit[2] };
        }
        // Phase B: regularized chart until eta crosses zero.
        let reg = regularize(&state)?;
        let mut pole_tau: Option<(f64, f64)> = None;
        let traj = crate::ode::integrate_crossings(
            regularized_field,
            [reg.eta, reg.xi],
            reg.tau,
            tau_dir,
            |s| s[0],
            Orientation::Any,
            &cfg,
            |tau, s| {
                pole_tau = Some((tau, s[0].abs()));
                crate::ode::EventFlow::Stop
            },
        )?;
        if let Some((tau_root, residual)) = pole_tau {
            let z0 = kappa() * tau_root;
            return Ok((PoleResult { z0, refinement_residual: residual, branch_data: None }, traj));
        }
        // The orbit left the chart's comfort zone (y2 dropped back toward
        // the switch level) without reaching a pole: drop back to the plain
        // coordinates at the final state and try again.
        let last = traj.last_state();
        let back = deregularize(&RegularizedState { eta: last[0], xi: last[1], tau: traj.t_end() })?;
        if (back.y2 - state.y2).abs() < 1e-9 && (back.z2 - state.z2).abs() < 1e-9 {
            return Err(PainleveError::NoPoleFound);
        }
        state = back;
    }
    Err(PainleveError::NoPoleFound)
}

/// Laurent-structure probe: locate a pole, then sample the approach orbit
/// at offsets d = z2 - z0 and fit y2 * d^2 = A + B d^4 + C d^5 + D d^6.
/// For a true P1 pole the fitted order is 2, A = 6 and B = z0/10.
#[derive(Clone, Debug, Serialize)]
pub struct LaurentFit {
    pub z0: f64,
    pub fitted_order: f64,
    pub lead_coeff: f64,
    pub quad_coeff: f64,
    pub quartic_coeff: f64,
}

pub fn laurent_fit(start: &P1State, direction: PoleDirection) -> Result<LaurentFit, PainleveError> {
    let (pole, traj) = find_pole_with_approach(start, direction)?;
    let k = kappa();
    let tau_root = pole.z0 / k;

    let sample_y2 = |d: f64| -> Option<f64> {
        // d = z2 - z0 > 0 on the approach side; tau = (z0 + d)/kappa.
        let tau = (pole.z0 + d) / k;
        let in_span = if traj.t_start() < traj.t_end() {
            (traj.t_start()..=traj.t_end()).contains(&tau)
        } else {
            (traj.t_end()..=traj.t_start()).contains(&tau)
        };
        if !in_span {
            return None;
        }
        let s = traj.eval(tau);
        deregularize(&RegularizedState { eta: s[0], xi: s[1], tau }).ok().map(|p| p.y2)
    };

    // Order fit on small offsets: log y2 vs log d has slope -order.
    let mut ds_small = Vec::new();
    let mut ys_small = Vec::new();
    for i in 0..12 {
        let d = 1e-4 * 10.0f64.powf(i as f64 / 5.5); // up to ~1e-2
        if let Some(y) = sample_y2(d) {
            if y > 0.0 {
                ds_small.push(d);
                ys_small.push(y);
            }
        }
    }
    let fitted_order = -crate::numerics::loglog_slope(&ds_small, &ys_small);

    // Coefficient fit on moderate offsets.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..40 {
        let d = 0.05 + 0.65 * i as f64 / 39.0;
        if let Some(y) = sample_y2(d) {
            xs.push(d);
            ys.push(y * d * d);
        }
    }
    let one = |_: f64| 1.0;
    let d4 = |d: f64| d.powi(4);
    let d5 = |d: f64| d.powi(5);
    let d6 = |d: f64| d.powi(6);
    let coeffs = crate::numerics::least_squares(&xs, &ys, &[&one, &d4, &d5, &d6])
        .ok_or(PainleveError::NoPoleFound)?;
    // tau at which the last sample sits determines nothing here; we report
    // the raw fit. A = coeffs[0], B = coeffs[1] (should be z0/10).
    Ok(LaurentFit {
        z0: pole.z0,
        fitted_order,
        lead_coeff: coeffs[0],
        quad_coeff: coeffs[1],
        quartic_coeff: coeffs[3],
    })
}

/// High-precision pole time for regularized initial data (s, eta0, xi0):
/// integrates with eta as the independent variable and tracks only the
/// deviation w = tau - (s - eta0 + eta), so the answer retains absolute
/// accuracy far below the f64 spacing of tau itself. Returns tau1 with
/// eta(tau1) = 0.
pub fn regularized_pole_time(s: f64, eta0: f64, xi0: f64) -> Result<f64, PainleveError> {
    // d tau/d eta = 1/P with P = 1 + (tau/4) eta^4 + ..., so
    // d w/d eta = 1/P - 1 = -(P - 1)/P, evaluated at tau = base(eta) + w.
    let field = move |eta: f64, st: &[f64; 2]| -> [f64; 2] {
        let (w, xi) = (st[0], st[1]);
        let tau = (s - eta0 + eta) + w;
        let e2 = eta * eta;
        let e3 = e2 * eta;
        let e4 = e2 * e2;
        let e5 = e4 * eta;
        let e6 = e4 * e2;
        let pm1 = 0.25 * tau * e4 + 0.25 * e5 - 0.5 * e6 * xi;
        let p = 1.0 + pm1;
        let q = 0.125 * tau * tau * eta + 0.375 * tau * e2 - (tau * xi - 0.25) * e3
            - 1.25 * e4 * xi
            + 1.5 * e5 * xi * xi;
        [-pm1 / p, q / p]
    };
    let cfg = IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-24,
        max_time: 10.0,
        ..Default::default()
    };
    let traj = integrate(field, [0.0, xi0], (eta0, 0.0), &cfg)?;
    let w_final = traj.last_state()[0];
    Ok(s - eta0 + w_final)
}

/// Series prediction of the pole time from regularized initial data,
/// accurate to O(eta0^8).
pub fn pole_time_series(s: f64, eta0: f64, xi0: f64) -> f64 {
    s - eta0 + s / 20.0 * eta0.powi(5) + eta0.powi(6) / 30.0 - xi0 / 14.0 * eta0.powi(7)
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaResult {
    /// Extrapolated tritronquee pole location.
    pub omega: f64,
    /// (z_init, z0) per seed.
    pub table: Vec<(f64, f64)>,
    /// Max minus min of the per-seed pole locations.
    pub spread: f64,
    /// Difference against the reference value -3.416 quoted in the
    /// literature for this normalization.
    pub deviation_from_reference: f64,
}

pub const OMEGA_REFERENCE: f64 = -3.416;

/// Seed the tritronquee at each z_init, run every seed to its pole, and
/// Richardson-extrapolate over the two largest seeds using the empirical
/// decay order of the truncation error.
pub fn compute_omega(z_init_list: &[f64]) -> Result<OmegaResult, PainleveError> {
    let mut table = Vec::new();
    for &z_init in z_init_list {
        let seed = asymptotic_eval(&AsymptoticParams::tritronquee(1), z_init)?;
        let pole = find_pole(&seed, PoleDirection::DecreasingZ)?;
        table.push((z_init, pole.z0));
    }
    let mut sorted = table.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let z0s: Vec<f64> = sorted.iter().map(|t| t.1).collect();
    let zis: Vec<f64> = sorted.iter().map(|t| t.0).collect();
    let n = z0s.len();
    let omega = if n >= 3 {
        // Empirical error order p from the last three seeds, then one
        // Richardson step on the two largest.
        let d1 = (z0s[n - 2] - z0s[n - 3]).abs();
        let d2 = (z0s[n - 1] - z0s[n - 2]).abs();
        let ratio = zis[n - 1] / zis[n - 2];
        let p = if d2 > 1e-15 && d1 > 1e-15 {
            (d1 / d2).ln() / ratio.ln()
        } else {
            4.5
        };
        let r = ratio.powf(p.clamp(0.5, 12.0));
        z0s[n - 1] + (z0s[n - 1] - z0s[n - 2]) / (r - 1.0)
    } else {
        z0s[n - 1]
    };
    let spread = z0s.iter().cloned().fold(f64::MIN, f64::max)
        - z0s.iter().cloned().fold(f64::MAX, f64::min);
    Ok(OmegaResult {
        omega,
        table,
        spread,
        deviation_from_reference: omega - OMEGA_REFERENCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kappa_value() {
        let k = kappa();
        assert!(k < 0.0);
        assert_relative_eq!(k.powi(5), -6.0, epsilon = 1e-12);
        assert_relative_eq!(k, -1.4309690811052556, epsilon = 1e-12);
    }

    #[test]
    fn tritronquee_leading_terms() {
        let p = asymptotic_eval(&AsymptoticParams::tritronquee(0), 100.0).unwrap();
        assert_relative_eq!(p.y2, -10.0, epsilon = 1e-12);
        assert_relative_eq!(p.x2, -0.05, epsilon = 1e-12);
    }

    #[test]
    fn continuity_in_oscillation_coefficients() {
        let a = asymptotic_eval(&AsymptoticParams::tritronquee(0), 100.0).unwrap();
        let b = asymptotic_eval(&AsymptoticParams { c1: 1e-30, c2: 1e-30, order: 0 }, 100.0).unwrap();
        assert!((a.y2 - b.y2).abs() < 1e-25 && (a.x2 - b.x2).abs() < 1e-25);
    }

    #[test]
    fn out_of_validity_is_rejected() {
        assert!(matches!(
            asymptotic_eval(&AsymptoticParams::tritronquee(0), 5.0),
            Err(PainleveError::OutOfValidity { .. })
        ));
    }

    #[test]
    fn truncation_residual_decays_with_expected_slope() {
        // Relative defect of the order-0 tritronquee truncation in the
        // first-order system, measured against the dominant scale z2:
        // |d x2/d z2 - (-z2 + y2^2)| / z2 = (1/4) z2^{-5/2}.
        let mut zs = Vec::new();
        let mut rs = Vec::new();
        for i in 0..10 {
            let z: f64 = 20.0 * (80.0f64 / 20.0).powf(i as f64 / 9.0);
            let h = 1e-4 * z;
            let pm = asymptotic_eval(&AsymptoticParams::tritronquee(0), z - h).unwrap();
            let pp = asymptotic_eval(&AsymptoticParams::tritronquee(0), z + h).unwrap();
            let p = asymptotic_eval(&AsymptoticParams::tritronquee(0), z).unwrap();
            let dxdz = (pp.x2 - pm.x2) / (2.0 * h);
            let dydz = (pp.y2 - pm.y2) / (2.0 * h);
            let r1 = dxdz - (-z + p.y2 * p.y2);
            let r2 = dydz - p.x2;
            let rel = (r1 * r1 + r2 * r2).sqrt() / z;
            zs.push(z);
            rs.push(rel);
        }
        let slope = crate::numerics::loglog_slope(&zs, &rs);
        assert!((slope - (-2.5)).abs() < 0.1, "slope {slope}");
        // And the prefactor is 1/4.
        let pref = rs[0] * zs[0].powf(2.5);
        assert_relative_eq!(pref, 0.25, max_relative = 1e-3);
    }

    #[test]
    fn regularize_round_trip() {
        // Round trip on the pole side of the chart (y2 > 0).
        let p = P1State { x2: -3.7, y2: 8.0, z2: -2.5 };
        let r = regularize(&p).unwrap();
        assert!(r.eta < 0.0);
        let back = deregularize(&r).unwrap();
        assert_relative_eq!(back.x2, p.x2, epsilon = 1e-12);
        assert_relative_eq!(back.y2, p.y2, epsilon = 1e-12);
        assert_relative_eq!(back.z2, p.z2, epsilon = 1e-12);
    }

    #[test]
    fn regularize_rejects_wrong_branch() {
        let p = P1State { x2: -0.05, y2: -10.0, z2: 100.0 };
        assert!(matches!(regularize(&p), Err(PainleveError::BranchViolation { .. })));
    }

    #[test]
    fn deregularize_rejects_pole() {
        let r = RegularizedState { eta: 0.0, xi: 0.3, tau: 1.0 };
        assert!(matches!(deregularize(&r), Err(PainleveError::PoleAt)));
    }

    #[test]
    fn y2_blows_up_as_eta_vanishes() {
        let k3 = kappa().powi(3);
        for eta in [-1e-2, -1e-4] {
            let p = deregularize(&RegularizedState { eta, xi: 0.1, tau: 2.0 }).unwrap();
            assert!(p.y2 > 0.0);
            assert_relative_eq!(p.y2, -k3 / (eta * eta), epsilon = 1e-9);
        }
    }

    #[test]
    fn regularized_flow_is_chain_rule_transport() {
        // Push the plain flow through the chart differential numerically
        // and compare with the closed-form regularized field.
        let k = kappa();
        for (x2, y2, z2) in [(-3.0, 5.0, -1.0), (2.0, 3.0, 4.0), (-0.5, 9.0, -3.0)] {
            let p = P1State { x2, y2, z2 };
            let r = regularize(&p).unwrap();
            // Numeric derivative deta/dtau along the plain flow: perturb z2
            // by kappa*dtau and transport (x2, y2) by the z2-form system
            // dx/dz = -z + y^2, dy/dz = x.
            let dtau = 1e-7;
            let dz = k * dtau;
            let deriv = |p: &P1State| [-p.z2 + p.y2 * p.y2, p.x2];
            // Fourth-order Runge-Kutta in z2 for the transport.
            let rk = |p: &P1State, dz: f64| -> P1State {
                let f = |st: [f64; 2], z: f64| {
                    let q = P1State { x2: st[0], y2: st[1], z2: z };
                    deriv(&q)
                };
                let y0 = [p.x2, p.y2];
                let k1 = f(y0, p.z2);
                let k2 = f([y0[0] + 0.5 * dz * k1[0], y0[1] + 0.5 * dz * k1[1]], p.z2 + 0.5 * dz);
                let k3 = f([y0[0] + 0.5 * dz * k2[0], y0[1] + 0.5 * dz * k2[1]], p.z2 + 0.5 * dz);
                let k4 = f([y0[0] + dz * k3[0], y0[1] + dz * k3[1]], p.z2 + dz);
                P1State {
                    x2: y0[0] + dz / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    y2: y0[1] + dz / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                    z2: p.z2 + dz,
                }
            };
            let pp = rk(&p, dz);
            let pm = rk(&p, -dz);
            let rp = regularize(&pp).unwrap();
            let rm = regularize(&pm).unwrap();
            let num = [
                (rp.eta - rm.eta) / (2.0 * dtau),
                (rp.xi - rm.xi) / (2.0 * dtau),
            ];
            let closed = regularized_field(r.tau, &[r.eta, r.xi]);
            assert!((num[0] - closed[0]).abs() < 1e-6 * closed[0].abs().max(1.0), "eta' {} vs {}", num[0], closed[0]);
            assert!((num[1] - closed[1]).abs() < 1e-5 * closed[1].abs().max(1.0), "xi' {} vs {}", num[1], closed[1]);
        }
    }

    #[test]
    fn tritronquee_pole_is_near_reference() {
        let seed = asymptotic_eval(&AsymptoticParams::tritronquee(1), 20.0).unwrap();
        let pole = find_pole(&seed, PoleDirection::DecreasingZ).unwrap();
        assert!(pole.refinement_residual <= 1e-12);
        assert!(
            (pole.z0 - OMEGA_REFERENCE).abs() < 0.05,
            "pole at {} vs reference {}",
            pole.z0,
            OMEGA_REFERENCE
        );
    }

    #[test]
    fn pole_is_independent_of_seed_point_on_same_orbit() {
        // Two seeds on the same tritronquee orbit, one obtained by
        // integrating the other, give the same pole to 1e-9.
        let seed = asymptotic_eval(&AsymptoticParams::tritronquee(1), 40.0).unwrap();
        let cfg = pole_cfg();
        let traj = integrate(p1_field, [seed.x2, seed.y2, seed.z2], (0.0, 15.0), &cfg).unwrap();
        let mid = traj.last_state();
        let seed2 = P1State { x2: mid[0], y2: mid[1], z2: mid[2] };
        let p1 = find_pole(&seed, PoleDirection::DecreasingZ).unwrap();
        let p2 = find_pole(&seed2, PoleDirection::DecreasingZ).unwrap();
        assert!((p1.z0 - p2.z0).abs() < 1e-9, "{} vs {}", p1.z0, p2.z0);
    }

    #[test]
    fn divergence_when_chasing_pole_in_plain_coordinates() {
        // Integrating the plain system into the pole raises Divergence.
        let seed = asymptotic_eval(&AsymptoticParams::tritronquee(1), 20.0).unwrap();
        let cfg = IntegratorConfig { max_time: 40.0, divergence_norm: 1e8, ..Default::default() };
        let r = integrate(p1_field, [seed.x2, seed.y2, seed.z2], (0.0, 30.0), &cfg);
        assert!(matches!(r, Err(OdeError::Divergence { .. })));
    }

    #[test]
    fn laurent_structure_at_tritronquee_pole() {
        let seed = asymptotic_eval(&AsymptoticParams::tritronquee(1), 20.0).unwrap();
        let fit = laurent_fit(&seed, PoleDirection::DecreasingZ).unwrap();
        assert!((fit.fitted_order - 2.0).abs() < 0.01, "order {}", fit.fitted_order);
        assert!((fit.lead_coeff - 6.0).abs() < 0.01 * 6.0, "lead {}", fit.lead_coeff);
        assert!(
            (fit.quad_coeff - fit.z0 / 10.0).abs() < 0.01 * (fit.z0 / 10.0).abs(),
            "quad {} vs {}",
            fit.quad_coeff,
            fit.z0 / 10.0
        );
    }

    #[test]
    fn pole_time_matches_series_to_eighth_order() {
        let s = 2.0;
        let xi0 = 0.7;
        let etas = [0.02, 0.01, 0.005];
        let mut diffs = Vec::new();
        for &eta0 in &etas {
            let tau_num = regularized_pole_time(s, eta0, xi0).unwrap();
            let tau_ser = pole_time_series(s, eta0, xi0);
            diffs.push((tau_num - tau_ser).abs());
        }
        let slope = crate::numerics::loglog_slope(&etas, &diffs);
        assert!((slope - 8.0).abs() < 1.0, "slope {slope}, diffs {diffs:?}");
    }

    #[test]
    fn omega_converges_across_seeds() {
        let res = compute_omega(&[20.0, 40.0, 80.0]).unwrap();
        assert!(res.spread < 1e-4, "spread {}", res.spread);
        assert!(res.deviation_from_reference.abs() < 0.05, "omega {}", res.omega);
    }
}
