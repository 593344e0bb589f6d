//! Numerical laboratory for three-dimensional fast-slow systems whose fold
//! points are of Bogdanov-Takens type.
//!
//! The crate provides, bottom-up:
//!
//! - [`ode`]: an adaptive Dormand-Prince 5(4) integrator with dense output,
//!   event location, and variational propagation;
//! - [`models`]: the fast-slow system abstraction and the two built-in
//!   systems (a cubic example with odd symmetry, and the canonical fold
//!   normal form truncated at leading order);
//! - [`manifold`]: critical-manifold tracing, fold location, reduced slow
//!   flow, and the unperturbed jump orbits emerging from the cusps;
//! - [`painleve`]: the Painleve-I engine, including the tritronquee
//!   solution, pole regularization and pole location (the constant Omega);
//! - [`blowup`]: the weighted blow-up charts K1/K2/K3, their transition
//!   maps, and chart vector fields;
//! - [`poincare`]: sections, return maps, periodic orbits with Floquet
//!   data, horseshoe certification, and Lyapunov exponents;
//! - [`experiments`]: reproducible experiment drivers with JSON/CSV/SVG
//!   outputs and the command-line interface.
//!
//! Each runnable capability has a matching program under `examples/`.

pub mod blowup;
pub mod experiments;
pub mod manifold;
pub mod models;
pub mod numerics;
pub mod ode;
pub mod painleve;
pub mod poincare;
