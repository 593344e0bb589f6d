//! Critical-manifold machinery: branch tracing by predictor-corrector
//! continuation in z, fold location via an extended Newton system,
//! classification of samples by fast-Jacobian eigenvalues, the reduced slow
//! flow, and the unperturbed jump orbits emerging from the cusps.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::models::{BasePoint, FastSlowSystem, Params};
use crate::numerics::{eig2, solve2, solve_n};
use crate::ode::{integrate, DenseTrajectory, IntegratorConfig, OdeError};

pub const FOLD_TOL: f64 = 1e-8;
pub const NEWTON_TOL: f64 = 1e-11;
pub const BASIN_TOL: f64 = 0.05;
pub const CUSP_OFFSET: f64 = 1e-6;
const STEP_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("Newton corrector diverged near z = {z}")]
    NewtonDivergence { z: f64 },
    #[error("fast Jacobian singular at z = {z}")]
    SingularJacobian { z: f64 },
    #[error("no fold bracketed: det J has the same sign at both ends")]
    NoFoldInBracket,
    #[error("seed rejected: |(f1,f2)| = {residual:.3e} at the seed (must be < 0.1)")]
    BadSeed { residual: f64 },
    #[error("fold is not of Bogdanov-Takens type: |trace J| = {trace:.3e}")]
    NotBTFold { trace: f64 },
    #[error("no outgoing direction found around the fold (offset too small?)")]
    NoDeparture,
    #[error("reduced slow flow changes sign along the branch")]
    SignChange { samples: Vec<(f64, f64)> },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointKind {
    StableFocus,
    StableNode,
    Saddle,
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct ManifoldSample {
    pub point: BasePoint,
    pub eigenvalues: [Complex64; 2],
    pub kind: PointKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchLabel {
    SAPlus,
    SRPlus,
    SAMinus,
    SRMinus,
    Other,
}

#[derive(Clone, Debug)]
pub struct CriticalBranch {
    pub samples: Vec<ManifoldSample>,
    pub delta: f64,
    pub label: BranchLabel,
}

/// A fold point with its double-zero certificate (det J, trace J).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FoldPoint {
    pub point: BasePoint,
    pub delta: f64,
    pub bt_certificate: (f64, f64),
}

impl FoldPoint {
    /// Double-zero eigenvalue with Jordan block: both det and trace vanish.
    pub fn is_bt(&self) -> bool {
        self.bt_certificate.0.abs() <= FOLD_TOL && self.bt_certificate.1.abs() <= FOLD_TOL
    }
}

pub fn classify(eig: [Complex64; 2], tol: f64) -> PointKind {
    let det = (eig[0] * eig[1]).re;
    let max_re = eig[0].re.max(eig[1].re);
    if det.abs() < tol || max_re.abs() < tol {
        return PointKind::Degenerate;
    }
    if eig[0].im.abs() > 0.0 {
        if max_re < 0.0 {
            PointKind::StableFocus
        } else {
            PointKind::Degenerate
        }
    } else if eig[0].re * eig[1].re < 0.0 {
        PointKind::Saddle
    } else if max_re < 0.0 {
        PointKind::StableNode
    } else {
        PointKind::Degenerate
    }
}

fn sample_at(
    sys: &dyn FastSlowSystem,
    delta: f64,
    point: BasePoint,
) -> ManifoldSample {
    let prm = Params { eps: 0.0, delta };
    let eig = eig2(sys.fast_jacobian(&point, &prm));
    ManifoldSample { point, eigenvalues: eig, kind: classify(eig, FOLD_TOL) }
}

/// Newton-solve (f1, f2) = 0 in (x, y) at fixed z.
fn corrector(
    sys: &dyn FastSlowSystem,
    delta: f64,
    z: f64,
    guess: (f64, f64),
) -> Result<(f64, f64), ManifoldError> {
    let prm = Params { eps: 0.0, delta };
    let (mut x, mut y) = guess;
    for _ in 0..50 {
        let p = BasePoint::new(x, y, z);
        let f = sys.fast(&p, &prm);
        let res = (f[0] * f[0] + f[1] * f[1]).sqrt();
        if res <= NEWTON_TOL {
            return Ok((x, y));
        }
        let j = sys.fast_jacobian(&p, &prm);
        let step = solve2(j, [-f[0], -f[1]]).ok_or(ManifoldError::SingularJacobian { z })?;
        x += step[0];
        y += step[1];
        if !x.is_finite() || !y.is_finite() {
            break;
        }
    }
    Err(ManifoldError::NewtonDivergence { z })
}

/// Trace a branch of the critical manifold over `z_range` by continuation
/// from `seed`, with adaptive step halved on corrector failure. Samples are
/// returned with z strictly ascending.
pub fn trace_branch(
    sys: &dyn FastSlowSystem,
    delta: f64,
    seed: BasePoint,
    z_range: (f64, f64),
    step: f64,
) -> Result<CriticalBranch, ManifoldError> {
    let prm = Params { eps: 0.0, delta };
    let f0 = sys.fast(&seed, &prm);
    let res0 = (f0[0] * f0[0] + f0[1] * f0[1]).sqrt();
    if res0 >= 0.1 {
        return Err(ManifoldError::BadSeed { residual: res0 });
    }
    let (z_lo, z_hi) = (z_range.0.min(z_range.1), z_range.0.max(z_range.1));
    let (sx, sy) = corrector(sys, delta, seed.z, (seed.x, seed.y))?;

    let walk = |dir: f64| -> Vec<ManifoldSample> {
        let mut out = Vec::new();
        let mut prev = (sx, sy, seed.z);
        let mut prev2: Option<(f64, f64, f64)> = None;
        let mut h = step.abs();
        loop {
            let z_next = prev.2 + dir * h;
            if z_next < z_lo - 1e-12 || z_next > z_hi + 1e-12 {
                // Land exactly on the boundary if any room remains.
                let z_edge = if dir > 0.0 { z_hi } else { z_lo };
                if (z_edge - prev.2).abs() > 1e-12 && (z_edge - prev.2) * dir > 0.0 {
                    if let Ok((x, y)) = corrector(sys, delta, z_edge, secant_predict(prev, prev2, z_edge)) {
                        out.push(sample_at(sys, delta, BasePoint::new(x, y, z_edge)));
                    }
                }
                break;
            }
            match corrector(sys, delta, z_next, secant_predict(prev, prev2, z_next)) {
                Ok((x, y)) => {
                    out.push(sample_at(sys, delta, BasePoint::new(x, y, z_next)));
                    prev2 = Some(prev);
                    prev = (x, y, z_next);
                    h = (h * 1.5).min(step.abs());
                }
                Err(_) => {
                    h *= 0.5;
                    if h < STEP_FLOOR {
                        break;
                    }
                }
            }
        }
        out
    };

    let mut samples = walk(-1.0);
    samples.reverse();
    samples.push(sample_at(sys, delta, BasePoint::new(sx, sy, seed.z)));
    samples.extend(walk(1.0));
    samples.retain(|s| s.point.z.is_finite());
    samples.dedup_by(|a, b| (a.point.z - b.point.z).abs() < 1e-14);

    let label = auto_label(&samples);
    Ok(CriticalBranch { samples, delta, label })
}

fn secant_predict(
    prev: (f64, f64, f64),
    prev2: Option<(f64, f64, f64)>,
    z_next: f64,
) -> (f64, f64) {
    match prev2 {
        Some(p2) if (prev.2 - p2.2).abs() > 1e-14 => {
            let s = (z_next - prev.2) / (prev.2 - p2.2);
            (prev.0 + s * (prev.0 - p2.0), prev.1 + s * (prev.1 - p2.1))
        }
        _ => (prev.0, prev.1),
    }
}

fn auto_label(samples: &[ManifoldSample]) -> BranchLabel {
    if samples.is_empty() {
        return BranchLabel::Other;
    }
    let n_attract = samples
        .iter()
        .filter(|s| matches!(s.kind, PointKind::StableFocus | PointKind::StableNode))
        .count();
    let n_saddle = samples.iter().filter(|s| s.kind == PointKind::Saddle).count();
    let mean_y: f64 = samples.iter().map(|s| s.point.y).sum::<f64>() / samples.len() as f64;
    let attracting = n_attract >= n_saddle;
    match (attracting, mean_y < 0.0) {
        (true, true) => BranchLabel::SAPlus,
        (false, true) => BranchLabel::SRPlus,
        (true, false) => BranchLabel::SAMinus,
        (false, false) => BranchLabel::SRMinus,
    }
}

fn det2(j: [[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Locate a fold between two points assumed to lie on (or near) the same
/// branch, by Newton on the extended system (f1, f2, det J) = 0.
pub fn locate_fold(
    sys: &dyn FastSlowSystem,
    delta: f64,
    bracket: (BasePoint, BasePoint),
) -> Result<FoldPoint, ManifoldError> {
    let prm = Params { eps: 0.0, delta };
    let det_on_branch = |z: f64, guess: (f64, f64)| -> Result<(f64, (f64, f64)), ManifoldError> {
        let (x, y) = corrector(sys, delta, z, guess)?;
        let j = sys.fast_jacobian(&BasePoint::new(x, y, z), &prm);
        Ok((det2(j), (x, y)))
    };

    // Bracket det = 0 in z along the branch when the sign changes; when it
    // only tends to zero (fold at or just past an edge), start Newton from
    // the edge with the smaller |det|.
    let (mut za, mut zb) = (bracket.0.z, bracket.1.z);
    let (mut ga, mut gb) = ((bracket.0.x, bracket.0.y), (bracket.1.x, bracket.1.y));
    let (mut da, ga_c) = det_on_branch(za, ga)?;
    let (db, gb_c) = det_on_branch(zb, gb)?;
    ga = ga_c;
    gb = gb_c;
    let sign_change = da.signum() != db.signum();
    // Operational reading of "det tends to 0": the smaller edge determinant
    // must itself be small when there is no sign change.
    if !sign_change && da.abs().min(db.abs()) > 1.0 {
        return Err(ManifoldError::NoFoldInBracket);
    }
    let (mut guess, mut z_start) = if da.abs() <= db.abs() { (ga, za) } else { (gb, zb) };
    if sign_change {
        for _ in 0..80 {
            let zm = 0.5 * (za + zb);
            let pred = ((ga.0 + gb.0) / 2.0, (ga.1 + gb.1) / 2.0);
            match det_on_branch(zm, pred) {
                Ok((dm, gm)) => {
                    guess = gm;
                    z_start = zm;
                    if dm.abs() < 1e-6 || (zb - za).abs() < 1e-10 {
                        break;
                    }
                    if dm.signum() == da.signum() {
                        za = zm;
                        ga = gm;
                        da = dm;
                    } else {
                        zb = zm;
                        gb = gm;
                    }
                }
                // Corrector failure mid-bracket: shrink toward side a.
                Err(_) => zb = 0.5 * (za + zb),
            }
        }
    }

    // Full 3D Newton on (f1, f2, det J) with finite-difference derivatives
    // of det; f-derivatives are analytic.
    let (mut x, mut y, mut z) = (guess.0, guess.1, z_start);
    for _ in 0..60 {
        let p = BasePoint::new(x, y, z);
        let f = sys.fast(&p, &prm);
        let d = det2(sys.fast_jacobian(&p, &prm));
        let res = (f[0] * f[0] + f[1] * f[1] + d * d).sqrt();
        if res <= NEWTON_TOL {
            break;
        }
        let jf = sys.fast_jacobian(&p, &prm);
        let h = 1e-7;
        let mut row2 = [0.0; 3];
        for (col, dv) in [(0usize, [h, 0.0, 0.0]), (1, [0.0, h, 0.0]), (2, [0.0, 0.0, h])] {
            let pp = BasePoint::new(x + dv[0], y + dv[1], z + dv[2]);
            let pm = BasePoint::new(x - dv[0], y - dv[1], z - dv[2]);
            row2[col] =
                (det2(sys.fast_jacobian(&pp, &prm)) - det2(sys.fast_jacobian(&pm, &prm))) / (2.0 * h);
        }
        // d f1/dz and d f2/dz from the full Jacobian's third column.
        let jfull = sys.full_jacobian(&p, &prm);
        let mut a = vec![
            vec![jf[0][0], jf[0][1], jfull[0][2]],
            vec![jf[1][0], jf[1][1], jfull[1][2]],
            vec![row2[0], row2[1], row2[2]],
        ];
        let mut b = [-f[0], -f[1], -d];
        let Some(step) = solve_n(&mut a, &mut b) else {
            return Err(ManifoldError::SingularJacobian { z });
        };
        x += step[0];
        y += step[1];
        z += step[2];
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(ManifoldError::NewtonDivergence { z });
        }
    }
    let p = BasePoint::new(x, y, z);
    let f = sys.fast(&p, &prm);
    let j = sys.fast_jacobian(&p, &prm);
    let (det, trace) = (det2(j), j[0][0] + j[1][1]);
    let res = (f[0] * f[0] + f[1] * f[1] + det * det).sqrt();
    if res > 1e2 * NEWTON_TOL {
        return Err(ManifoldError::NewtonDivergence { z });
    }
    // The solution must sit inside (or marginally beyond) the bracket.
    let (lo, hi) = (bracket.0.z.min(bracket.1.z), bracket.0.z.max(bracket.1.z));
    let slack = 0.2 * (hi - lo).max(0.05);
    if z < lo - slack || z > hi + slack {
        return Err(ManifoldError::NoFoldInBracket);
    }
    Ok(FoldPoint { point: p, delta, bt_certificate: (det, trace) })
}

/// Reduced slow flow (dz/dtau = g at eps = 0) sampled along a branch.
/// Errors with `SignChange` when the sign is not uniform, carrying the
/// samples so callers can still inspect them.
pub fn reduced_slow_flow(
    branch: &CriticalBranch,
    sys: &dyn FastSlowSystem,
) -> Result<Vec<(f64, f64)>, ManifoldError> {
    let prm = Params { eps: 0.0, delta: branch.delta };
    let samples: Vec<(f64, f64)> = branch
        .samples
        .iter()
        .map(|s| (s.point.z, sys.slow(&s.point, &prm)))
        .collect();
    let has_pos = samples.iter().any(|&(_, g)| g > 0.0);
    let has_neg = samples.iter().any(|&(_, g)| g < 0.0);
    if has_pos && has_neg {
        return Err(ManifoldError::SignChange { samples });
    }
    Ok(samples)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JumpTermination {
    EnteredBasin,
    ArcTimeReached,
    Diverged,
}

/// The unperturbed heteroclinic/jump orbit emerging from a cusp, as a dense
/// trajectory of the frozen fast system, with convergence metadata.
pub struct JumpOrbit {
    pub trajectory: DenseTrajectory<3>,
    pub termination: JumpTermination,
    /// Attracting equilibrium of the frozen system the orbit settled near,
    /// when it did.
    pub target: Option<BasePoint>,
}

/// Integrate the unique unperturbed-fast-system orbit leaving the cusp.
///
/// The departure direction is found by probing a small circle of radius
/// `offset` around the fold and selecting the direction whose orbit escapes
/// to 10x the offset fastest; all escaping probes collapse onto the cusp
/// orbit, so the crossing data downstream is insensitive to the choice (see
/// the offset-robustness test).
pub fn jump_orbit(
    sys: &dyn FastSlowSystem,
    delta: f64,
    fold: &FoldPoint,
    arc_time: f64,
) -> Result<JumpOrbit, ManifoldError> {
    jump_orbit_with_offset(sys, delta, fold, arc_time, CUSP_OFFSET)
}

pub fn jump_orbit_with_offset(
    sys: &dyn FastSlowSystem,
    delta: f64,
    fold: &FoldPoint,
    arc_time: f64,
    offset: f64,
) -> Result<JumpOrbit, ManifoldError> {
    if !fold.is_bt() {
        return Err(ManifoldError::NotBTFold { trace: fold.bt_certificate.1 });
    }
    let z = fold.point.z;
    let frozen = crate::models::frozen_fast_closure(sys, z, delta);

    // Probe the circle for the fastest-escaping direction. Escape from the
    // cusp takes O(offset^{-1/2}) time because the field vanishes
    // quadratically there, so the probes get their own generous budget.
    let probe_cfg = IntegratorConfig {
        rel_tol: 1e-9,
        abs_tol: 1e-14,
        max_time: 1e9,
        ..Default::default()
    };
    let n_probe = 64;
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n_probe {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n_probe as f64;
        let y0 = [fold.point.x + offset * th.cos(), fold.point.y + offset * th.sin()];
        let escape = crate::ode::integrate_to_event(
            &frozen,
            y0,
            0.0,
            crate::ode::Direction::Forward,
            |y| {
                let dx = y[0] - fold.point.x;
                let dy = y[1] - fold.point.y;
                (dx * dx + dy * dy).sqrt() - 10.0 * offset
            },
            crate::ode::Orientation::Rising,
            &probe_cfg,
        );
        if let Ok((t, _)) = escape {
            if best.map_or(true, |(tb, _)| t < tb) {
                best = Some((t, k));
            }
        }
    }
    let Some((_, k_best)) = best else {
        return Err(ManifoldError::NoDeparture);
    };
    let th = 2.0 * std::f64::consts::PI * k_best as f64 / n_probe as f64;
    let y0 = [fold.point.x + offset * th.cos(), fold.point.y + offset * th.sin()];

    // Integrate in chunks; after each chunk, Newton from the current point
    // looks for a nearby attracting equilibrium of the frozen system.
    let cfg = IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-13, max_time: arc_time, divergence_norm: 1e6, ..Default::default() };
    let chunk = (arc_time / 64.0).max(1e-3);
    let mut t = 0.0;
    let mut y = y0;
    let mut segs: Vec<crate::ode::Segment<2>> = Vec::new();
    let mut stats = crate::ode::Stats::default();
    let mut termination = JumpTermination::ArcTimeReached;
    let mut target = None;
    while t < arc_time {
        let t_next = (t + chunk).min(arc_time);
        match integrate(&frozen, y, (t, t_next), &cfg) {
            Ok(tr) => {
                y = tr.last_state();
                stats.steps += tr.stats.steps;
                stats.rejected += tr.stats.rejected;
                stats.rhs_evals += tr.stats.rhs_evals;
                segs.extend(tr.segments);
                t = t_next;
            }
            Err(OdeError::Divergence { .. }) => {
                termination = JumpTermination::Diverged;
                break;
            }
            Err(e) => return Err(e.into()),
        }
        if let Ok((ex, ey)) = corrector(sys, delta, z, (y[0], y[1])) {
            let s = sample_at(sys, delta, BasePoint::new(ex, ey, z));
            let d = ((y[0] - ex).powi(2) + (y[1] - ey).powi(2)).sqrt();
            if matches!(s.kind, PointKind::StableFocus | PointKind::StableNode) && d < BASIN_TOL {
                termination = JumpTermination::EnteredBasin;
                target = Some(s.point);
                break;
            }
        }
    }

    // Re-embed the planar segments as 3D with constant z for export.
    let traj3 = embed_z(&segs, stats, y0, z);
    Ok(JumpOrbit { trajectory: traj3, termination, target })
}

/// Re-embed planar frozen-system segments as 3D segments with constant z,
/// reproducing the quartic interpolant exactly through five nodes.
fn embed_z(
    segs: &[crate::ode::Segment<2>],
    stats: crate::ode::Stats,
    y0: [f64; 2],
    z: f64,
) -> DenseTrajectory<3> {
    let mut segments = Vec::with_capacity(segs.len());
    for s in segs {
        let h = s.t_end() - s.t0;
        let nodes: [[f64; 3]; 5] = std::array::from_fn(|k| {
            let y = s.eval(s.t0 + h * k as f64 / 4.0);
            [y[0], y[1], z]
        });
        segments.push(crate::ode::Segment::from_nodes(s.t0, h, nodes));
    }
    DenseTrajectory::<3>::from_parts(
        segments,
        Vec::new(),
        stats,
        segs.first().map_or(0.0, |s| s.t0),
        [y0[0], y0[1], z],
    )
}

/// Branch export with one row per sample:
/// z, x, y, re(lambda1), im(lambda1), re(lambda2), im(lambda2), kind.
pub fn branch_to_csv(branch: &CriticalBranch) -> String {
    let mut out = String::from("z,x,y,re_lambda1,im_lambda1,re_lambda2,im_lambda2,kind\r\n");
    for s in &branch.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:?}\r\n",
            s.point.z,
            s.point.x,
            s.point.y,
            s.eigenvalues[0].re,
            s.eigenvalues[0].im,
            s.eigenvalues[1].re,
            s.eigenvalues[1].im,
            s.kind
        ));
    }
    out
}

/// Trajectory export sampled at `n` uniform times with the given header
/// names for the state columns.
pub fn trajectory_to_csv(traj: &DenseTrajectory<3>, names: [&str; 3], n: usize) -> String {
    let mut out = format!("t,{},{},{}\r\n", names[0], names[1], names[2]);
    for (t, y) in traj.sample(n) {
        out.push_str(&format!("{},{},{},{}\r\n", t, y[0], y[1], y[2]));
    }
    out
}
