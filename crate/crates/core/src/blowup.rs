//! Weighted blow-up charts for the fold at the origin of the canonical
//! model, following the weights (3, 2, 4, 5) on (X, Y, Z, eps):
//!
//!   K1: (X, Y, Z, eps) = (r1^3 x1, r1^2 y1, r1^4,     r1^5 eps1)   covers Z >= 0
//!   K2: (X, Y, Z, eps) = (r2^3 x2, r2^2 y2, r2^4 z2,  r2^5)        covers eps >= 0
//!   K3: (X, Y, Z, eps) = (r3^3 x3, r3^2,    r3^4 z3,  r3^5 eps3)   covers Y >= 0
//!
//! Chart fields below are the blown-up vector fields after dividing by one
//! power of the radial variable (K1, K3) or by r2 (K2); positive time
//! rescalings leave orbits unchanged. The extra division by -h16 that the
//! K3 analysis uses is deliberately not applied: the field is kept as
//! printed so that orbits in the chart match the blow-down of base orbits.

use serde::Serialize;
use thiserror::Error;

use crate::models::{BasePoint, FastSlowSystem, Params};

#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("point is outside chart {chart:?}: required coordinate {coord} must be positive, got {value}")]
    OutOfChart { chart: Chart, coord: &'static str, value: f64 },
    #[error("transition {from:?} -> {to:?} undefined at this point (inverted coordinate {coord} = {value} not positive)")]
    OutOfOverlap { from: Chart, to: Chart, coord: &'static str, value: f64 },
    #[error("no transition map between {from:?} and {to:?}")]
    UnsupportedTransition { from: Chart, to: Chart },
    #[error("expected a point in chart {expected:?}, got {got:?}")]
    WrongChart { expected: Chart, got: Chart },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Chart {
    Base,
    K1,
    K2,
    K3,
}

/// A point tagged with its chart. Coordinate order:
/// Base (X, Y, Z, eps); K1 (x1, y1, r1, eps1); K2 (x2, y2, z2, r2);
/// K3 (x3, r3, z3, eps3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub coords: [f64; 4],
}

impl ChartPoint {
    pub fn base(x: f64, y: f64, z: f64, eps: f64) -> Self {
        Self { chart: Chart::Base, coords: [x, y, z, eps] }
    }

    pub fn new(chart: Chart, coords: [f64; 4]) -> Self {
        Self { chart, coords }
    }

    fn expect(&self, chart: Chart) -> Result<(), BlowupError> {
        if self.chart != chart {
            return Err(BlowupError::WrongChart { expected: chart, got: self.chart });
        }
        Ok(())
    }
}

/// Lift a base point into the target chart. The radial coordinate must be
/// strictly positive: K1 needs Z > 0, K2 needs eps > 0, K3 needs Y > 0.
pub fn lift(target: Chart, base: &ChartPoint) -> Result<ChartPoint, BlowupError> {
    base.expect(Chart::Base)?;
    let [x, y, z, eps] = base.coords;
    match target {
        Chart::Base => Ok(*base),
        Chart::K1 => {
            if z <= 0.0 {
                return Err(BlowupError::OutOfChart { chart: Chart::K1, coord: "Z", value: z });
            }
            let r1 = z.powf(0.25);
            Ok(ChartPoint::new(Chart::K1, [x / r1.powi(3), y / (r1 * r1), r1, eps / r1.powi(5)]))
        }
        Chart::K2 => {
            if eps <= 0.0 {
                return Err(BlowupError::OutOfChart { chart: Chart::K2, coord: "eps", value: eps });
            }
            let r2 = eps.powf(0.2);
            Ok(ChartPoint::new(
                Chart::K2,
                [x / r2.powi(3), y / (r2 * r2), z / r2.powi(4), r2],
            ))
        }
        Chart::K3 => {
            if y <= 0.0 {
                return Err(BlowupError::OutOfChart { chart: Chart::K3, coord: "Y", value: y });
            }
            let r3 = y.sqrt();
            Ok(ChartPoint::new(Chart::K3, [x / r3.powi(3), r3, z / r3.powi(4), eps / r3.powi(5)]))
        }
    }
}

/// Evaluate the monomial blow-down map; identity on base points.
pub fn blow_down(p: &ChartPoint) -> ChartPoint {
    match p.chart {
        Chart::Base => *p,
        Chart::K1 => {
            let [x1, y1, r1, e1] = p.coords;
            ChartPoint::base(r1.powi(3) * x1, r1 * r1 * y1, r1.powi(4), r1.powi(5) * e1)
        }
        Chart::K2 => {
            let [x2, y2, z2, r2] = p.coords;
            ChartPoint::base(r2.powi(3) * x2, r2 * r2 * y2, r2.powi(4) * z2, r2.powi(5))
        }
        Chart::K3 => {
            let [x3, r3, z3, e3] = p.coords;
            ChartPoint::base(r3.powi(3) * x3, r3 * r3, r3.powi(4) * z3, r3.powi(5) * e3)
        }
    }
}

/// The four transition maps kappa_12, kappa_21, kappa_32, kappa_23.
pub fn chart_transition(from: Chart, to: Chart, p: &ChartPoint) -> Result<ChartPoint, BlowupError> {
    p.expect(from)?;
    let overlap_err = |coord: &'static str, value: f64| BlowupError::OutOfOverlap {
        from,
        to,
        coord,
        value,
    };
    match (from, to) {
        (Chart::K1, Chart::K2) => {
            let [x1, y1, r1, e1] = p.coords;
            if e1 <= 0.0 {
                return Err(overlap_err("eps1", e1));
            }
            Ok(ChartPoint::new(
                Chart::K2,
                [
                    x1 * e1.powf(-0.6),
                    y1 * e1.powf(-0.4),
                    e1.powf(-0.8),
                    r1 * e1.powf(0.2),
                ],
            ))
        }
        (Chart::K2, Chart::K1) => {
            let [x2, y2, z2, r2] = p.coords;
            if z2 <= 0.0 {
                return Err(overlap_err("z2", z2));
            }
            Ok(ChartPoint::new(
                Chart::K1,
                [
                    x2 * z2.powf(-0.75),
                    y2 * z2.powf(-0.5),
                    r2 * z2.powf(0.25),
                    z2.powf(-1.25),
                ],
            ))
        }
        (Chart::K3, Chart::K2) => {
            let [x3, r3, z3, e3] = p.coords;
            if e3 <= 0.0 {
                return Err(overlap_err("eps3", e3));
            }
            Ok(ChartPoint::new(
                Chart::K2,
                [
                    x3 * e3.powf(-0.6),
                    e3.powf(-0.4),
                    z3 * e3.powf(-0.8),
                    r3 * e3.powf(0.2),
                ],
            ))
        }
        (Chart::K2, Chart::K3) => {
            let [x2, y2, z2, r2] = p.coords;
            if y2 <= 0.0 {
                return Err(overlap_err("y2", y2));
            }
            Ok(ChartPoint::new(
                Chart::K3,
                [
                    x2 * y2.powf(-1.5),
                    r2 * y2.sqrt(),
                    z2 * y2.powi(-2),
                    y2.powf(-2.5),
                ],
            ))
        }
        _ => Err(BlowupError::UnsupportedTransition { from, to }),
    }
}

/// Closed-form chart fields for the canonical fold model (all higher-order
/// normal-form terms zero). The O(r2) term of the K2 field is the
/// pushforward of c1*delta*X*Y, namely c1*delta*r2*x2*y2; the numeric
/// pushforward below serves as its oracle.
pub fn chart_field(chart: Chart, p: &ChartPoint, delta: f64, c1: f64) -> [f64; 4] {
    let cd = c1 * delta;
    match chart {
        Chart::Base => {
            let [x, y, z, eps] = p.coords;
            [z - y * y + cd * x * y, -x, -eps, 0.0]
        }
        Chart::K1 => {
            let [x1, y1, r1, e1] = p.coords;
            [
                1.0 - y1 * y1 + cd * r1 * x1 * y1 + 0.75 * x1 * e1,
                -x1 + 0.5 * y1 * e1,
                -0.25 * r1 * e1,
                1.25 * e1 * e1,
            ]
        }
        Chart::K2 => {
            let [x2, y2, z2, r2] = p.coords;
            [z2 - y2 * y2 + cd * r2 * x2 * y2, -x2, -1.0, 0.0]
        }
        Chart::K3 => {
            let [x3, r3, z3, e3] = p.coords;
            [
                -1.0 + z3 + cd * r3 * x3 + 1.5 * x3 * x3,
                -0.5 * r3 * x3,
                -e3 + 2.0 * z3 * x3,
                2.5 * e3 * x3,
            ]
        }
    }
}

/// Numeric pushforward of an arbitrary fast-slow system's base field
/// through the chart differential, divided by the chart's time-rescaling
/// factor (one radial power for K1/K3, r2 for K2). The base point's eps is
/// taken from the chart coordinates; `params` supplies delta.
pub fn chart_field_numeric(
    chart: Chart,
    p: &ChartPoint,
    sys: &dyn FastSlowSystem,
    params: &Params,
) -> Result<[f64; 4], BlowupError> {
    let radial = match chart {
        Chart::Base => 1.0,
        Chart::K1 => p.coords[2],
        Chart::K2 => p.coords[3],
        Chart::K3 => p.coords[1],
    };
    if chart != Chart::Base && radial <= 0.0 {
        return Err(BlowupError::OutOfChart { chart, coord: "radial", value: radial });
    }
    let base = blow_down(p);
    let [bx, by, bz, beps] = base.coords;
    let prm = Params { eps: beps, delta: params.delta };
    let bp = BasePoint::new(bx, by, bz);
    let f = sys.fast(&bp, &prm);
    let g = sys.slow(&bp, &prm);
    let (f1, f2, f3) = (f[0], f[1], beps * g);
    Ok(match chart {
        Chart::Base => [f1, f2, f3, 0.0],
        Chart::K1 => {
            let r1 = radial;
            let [x1, y1, _, e1] = p.coords;
            [
                f1 / r1.powi(4) - 0.75 * f3 * x1 / r1.powi(5),
                f2 / r1.powi(3) - 0.5 * f3 * y1 / r1.powi(5),
                f3 / (4.0 * r1.powi(4)),
                -1.25 * f3 * e1 / r1.powi(5),
            ]
        }
        Chart::K2 => {
            let r2 = radial;
            [f1 / r2.powi(4), f2 / r2.powi(3), f3 / r2.powi(5), 0.0]
        }
        Chart::K3 => {
            let r3 = radial;
            let [x3, _, z3, e3] = p.coords;
            [
                f1 / r3.powi(4) - 1.5 * f2 * x3 / r3.powi(3),
                f2 / (2.0 * r3.powi(2)),
                f3 / r3.powi(5) - 2.0 * f2 * z3 / r3.powi(3),
                -2.5 * f2 * e3 / r3.powi(3),
            ]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin_canonical_fold;
    use crate::numerics::SplitMix64;
    use crate::ode::{integrate, IntegratorConfig};
    use approx::assert_relative_eq;

    fn random_base(rng: &mut SplitMix64) -> ChartPoint {
        ChartPoint::base(
            rng.uniform(-2.0, 2.0),
            rng.uniform(0.01, 2.0),
            rng.uniform(0.01, 2.0),
            rng.uniform(1e-6, 0.5),
        )
    }

    #[test]
    fn k2_lift_worked_example() {
        let base = ChartPoint::base(0.008, 0.04, 0.0016, 1e-5);
        let p = lift(Chart::K2, &base).unwrap();
        assert_relative_eq!(p.coords[3], 0.1, epsilon = 1e-13);
        assert_relative_eq!(p.coords[0], 8.0, epsilon = 1e-10);
        assert_relative_eq!(p.coords[1], 4.0, epsilon = 1e-10);
        assert_relative_eq!(p.coords[2], 16.0, epsilon = 1e-10);
    }

    #[test]
    fn k1_lift_of_section_point() {
        let rho1: f64 = 0.3;
        let eps = 1e-4;
        let base = ChartPoint::base(0.0, 0.0, rho1.powi(4), eps);
        let p = lift(Chart::K1, &base).unwrap();
        assert_relative_eq!(p.coords[2], rho1, epsilon = 1e-13);
        assert_relative_eq!(p.coords[1], 0.0);
        assert_relative_eq!(p.coords[3], eps / rho1.powi(5), epsilon = 1e-12);
    }

    #[test]
    fn lift_blow_down_round_trip_on_random_points() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..1000 {
            let base = random_base(&mut rng);
            for chart in [Chart::K1, Chart::K2, Chart::K3] {
                let lifted = lift(chart, &base).unwrap();
                let back = blow_down(&lifted);
                for i in 0..4 {
                    assert!(
                        (back.coords[i] - base.coords[i]).abs()
                            <= 1e-13 * base.coords[i].abs().max(1.0),
                        "{chart:?} coord {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn out_of_chart_is_rejected() {
        let base = ChartPoint::base(0.1, -0.5, -0.2, 0.0);
        assert!(matches!(lift(Chart::K1, &base), Err(BlowupError::OutOfChart { .. })));
        assert!(matches!(lift(Chart::K2, &base), Err(BlowupError::OutOfChart { .. })));
        assert!(matches!(lift(Chart::K3, &base), Err(BlowupError::OutOfChart { .. })));
    }

    #[test]
    fn exceptional_fiber_blows_down_to_origin() {
        let p = ChartPoint::new(Chart::K3, [1.3, 0.0, -0.4, 0.9]);
        let b = blow_down(&p);
        assert_eq!(b.coords, [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn k2_image_has_nonnegative_eps() {
        let p = ChartPoint::new(Chart::K2, [1.0, -2.0, 3.0, 0.17]);
        assert!(blow_down(&p).coords[3] >= 0.0);
    }

    #[test]
    fn kappa12_and_back() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..200 {
            let p = ChartPoint::new(
                Chart::K1,
                [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.0, 1.0), 0.5],
            );
            let q = chart_transition(Chart::K1, Chart::K2, &p).unwrap();
            let back = chart_transition(Chart::K2, Chart::K1, &q).unwrap();
            for i in 0..4 {
                assert!((back.coords[i] - p.coords[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kappa23_and_back() {
        let mut rng = SplitMix64::new(6);
        for _ in 0..200 {
            let p = ChartPoint::new(
                Chart::K2,
                [rng.uniform(-2.0, 2.0), rng.uniform(0.05, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.0, 1.0)],
            );
            let q = chart_transition(Chart::K2, Chart::K3, &p).unwrap();
            let back = chart_transition(Chart::K3, Chart::K2, &q).unwrap();
            for i in 0..4 {
                assert!((back.coords[i] - p.coords[i]).abs() < 1e-12 * p.coords[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn kappa12_at_unit_eps1_is_identity_on_xy() {
        let p = ChartPoint::new(Chart::K1, [0.7, -1.2, 0.4, 1.0]);
        let q = chart_transition(Chart::K1, Chart::K2, &p).unwrap();
        assert_relative_eq!(q.coords[0], 0.7);
        assert_relative_eq!(q.coords[1], -1.2);
        assert_relative_eq!(q.coords[2], 1.0);
        assert_relative_eq!(q.coords[3], 0.4);
    }

    #[test]
    fn transitions_factor_through_blow_down() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..200 {
            let p = ChartPoint::new(
                Chart::K1,
                [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)],
            );
            let via_transition = blow_down(&chart_transition(Chart::K1, Chart::K2, &p).unwrap());
            let direct = blow_down(&p);
            for i in 0..4 {
                assert!(
                    (via_transition.coords[i] - direct.coords[i]).abs()
                        < 1e-12 * direct.coords[i].abs().max(1.0)
                );
            }
        }
    }

    #[test]
    fn k2_field_at_zero_radius_is_painleve() {
        let p = ChartPoint::new(Chart::K2, [1.3, -0.4, 0.8, 0.0]);
        let f = chart_field(Chart::K2, &p, 1.0, 1.0);
        assert_eq!(f, [0.8 - 0.16, -1.3, -1.0, 0.0]);
        // Same flow as the plain Painleve system.
        let pf = crate::painleve::p1_field(0.0, &[1.3, -0.4, 0.8]);
        assert_eq!(&f[..3], &pf[..]);
        // Nontrivial at the exceptional fiber even though the base
        // linearization at the fold is nilpotent.
        assert!(f.iter().any(|v| v.abs() > 0.1));
    }

    #[test]
    fn k1_fixed_points_on_exceptional_fiber() {
        for y1 in [1.0, -1.0] {
            let p = ChartPoint::new(Chart::K1, [0.0, y1, 0.0, 0.0]);
            let f = chart_field(Chart::K1, &p, 0.7, 1.0);
            assert_eq!(f, [0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn k3_fixed_point() {
        let x3 = -(2.0f64 / 3.0).sqrt();
        let p = ChartPoint::new(Chart::K3, [x3, 0.0, 0.0, 0.0]);
        let f = chart_field(Chart::K3, &p, 0.7, 1.0);
        for v in f {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_matches_numeric_pushforward() {
        let sys = builtin_canonical_fold(1.0);
        let delta = 0.8;
        let prm = Params { eps: 0.0, delta };
        let mut rng = SplitMix64::new(9);
        for _ in 0..300 {
            for chart in [Chart::K1, Chart::K2, Chart::K3] {
                let p = match chart {
                    Chart::K1 => ChartPoint::new(Chart::K1, [
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(0.05, 1.0),
                        rng.uniform(0.0, 1.0),
                    ]),
                    Chart::K2 => ChartPoint::new(Chart::K2, [
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(0.05, 1.0),
                    ]),
                    _ => ChartPoint::new(Chart::K3, [
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(0.05, 1.0),
                        rng.uniform(-1.5, 1.5),
                        rng.uniform(0.0, 1.0),
                    ]),
                };
                let closed = chart_field(chart, &p, delta, 1.0);
                let numeric = chart_field_numeric(chart, &p, &sys, &prm).unwrap();
                for i in 0..4 {
                    assert!(
                        (closed[i] - numeric[i]).abs() <= 1e-10 * closed[i].abs().max(1.0),
                        "{chart:?}[{i}]: closed {} numeric {}",
                        closed[i],
                        numeric[i]
                    );
                }
            }
        }
    }

    #[test]
    fn numeric_pushforward_extends_continuously_to_zero_radius() {
        // One-sided extrapolation in r of the numeric field matches the
        // closed form at r = 0 (K2 case).
        let sys = builtin_canonical_fold(1.0);
        let prm = Params { eps: 0.0, delta: 0.6 };
        let coords = [0.9, -1.1, 0.5];
        let target = chart_field(
            Chart::K2,
            &ChartPoint::new(Chart::K2, [coords[0], coords[1], coords[2], 0.0]),
            0.6,
            1.0,
        );
        let f = |r: f64| {
            chart_field_numeric(
                Chart::K2,
                &ChartPoint::new(Chart::K2, [coords[0], coords[1], coords[2], r]),
                &sys,
                &prm,
            )
            .unwrap()
        };
        let (fa, fb) = (f(1e-3), f(5e-4));
        // Richardson: field is linear in r here, so 2*f(r/2) - f(r) hits r=0.
        for i in 0..4 {
            let extrap = 2.0 * fb[i] - fa[i];
            assert!((extrap - target[i]).abs() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn monomial_identities_in_k2_image() {
        let mut rng = SplitMix64::new(13);
        for _ in 0..100 {
            let p = ChartPoint::new(
                Chart::K2,
                [rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.01, 1.0)],
            );
            let b = blow_down(&p);
            let [x, _y, z, eps] = b.coords;
            let [x2, _y2, z2, r2] = p.coords;
            // Z^3 = z2^3 r2^12 and X^4 = x2^4 r2^12 weighted by eps^{12/5}.
            let w = eps.powf(2.4);
            assert!((z.powi(3) - z2.powi(3) * w).abs() <= 1e-12 * z.powi(3).abs().max(1e-30) + 1e-280);
            assert!((x.powi(4) - x2.powi(4) * w).abs() <= 1e-12 * x.powi(4).abs().max(1e-30) + 1e-280);
            assert_relative_eq!(r2.powi(12), w, max_relative = 1e-12);
        }
    }

    #[test]
    fn k2_orbit_blows_down_to_base_orbit() {
        // Integrate in K2 for 0.1 time units, blow down, and check the
        // image lies on the base orbit through blow_down(start) up to time
        // reparameterization (point-to-curve distance).
        let delta = 0.5;
        let start = ChartPoint::new(Chart::K2, [0.4, -0.8, 0.9, 0.3]);
        let field = |_t: f64, y: &[f64; 4]| {
            chart_field(Chart::K2, &ChartPoint::new(Chart::K2, *y), delta, 1.0)
        };
        let cfg = IntegratorConfig::default();
        let chart_traj = integrate(field, start.coords, (0.0, 0.1), &cfg).unwrap();

        let base_start = blow_down(&start);
        let base_field = |_t: f64, y: &[f64; 4]| {
            chart_field(Chart::Base, &ChartPoint::new(Chart::Base, *y), delta, 1.0)
        };
        // K2 time is base time divided by r2; cover generously.
        let base_traj = integrate(base_field, base_start.coords, (0.0, 0.2), &cfg).unwrap();
        let base_samples = base_traj.sample(4000);

        for (_, y) in chart_traj.sample(20) {
            let down = blow_down(&ChartPoint::new(Chart::K2, y));
            let min_d = base_samples
                .iter()
                .map(|(_, b)| {
                    (0..4)
                        .map(|i| (b[i] - down.coords[i]).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::MAX, f64::min);
            assert!(min_d < 1e-6, "blow-down strays from base orbit: {min_d}");
        }
    }

    #[test]
    fn k1_orbit_transports_to_k2_orbit() {
        // Flow commutation across kappa_12 up to time reparameterization.
        let delta = 0.5;
        let start = ChartPoint::new(Chart::K1, [0.2, -1.1, 0.4, 0.6]);
        let f1 = |_t: f64, y: &[f64; 4]| {
            chart_field(Chart::K1, &ChartPoint::new(Chart::K1, *y), delta, 1.0)
        };
        let f2 = |_t: f64, y: &[f64; 4]| {
            chart_field(Chart::K2, &ChartPoint::new(Chart::K2, *y), delta, 1.0)
        };
        let cfg = IntegratorConfig::default();
        let k1_traj = integrate(f1, start.coords, (0.0, 0.05), &cfg).unwrap();
        let k2_start = chart_transition(Chart::K1, Chart::K2, &start).unwrap();
        let k2_traj = integrate(f2, k2_start.coords, (0.0, 0.2), &cfg).unwrap();
        let k2_samples = k2_traj.sample(8000);
        for (_, y) in k1_traj.sample(15) {
            let q = chart_transition(Chart::K1, Chart::K2, &ChartPoint::new(Chart::K1, y)).unwrap();
            let min_d = k2_samples
                .iter()
                .map(|(_, b)| {
                    (0..4)
                        .map(|i| (b[i] - q.coords[i]).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::MAX, f64::min);
            assert!(min_d < 1e-7, "transported K1 orbit strays from K2 orbit: {min_d}");
        }
    }
}
