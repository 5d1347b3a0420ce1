//! Numerical laboratory for near-integrable exact symplectic maps on the
//! annulus `T^n x R^n`.
//!
//! The crate builds explicit exact symplectic systems out of elementary
//! pieces (action shears, angle kicks, integrated pendulum flows, coupling
//! devices, rescaling conjugations), constructs their periodic and wandering
//! domains, and verifies the quantitative size and localization claims at
//! desk scale:
//!
//! - [`annulus`] — phase-space geometry: points, bands, ellipses, polydiscs,
//!   Gromov capacity and measure bookkeeping;
//! - [`gevrey`] — flat-top bump functions and the potentials built from them
//!   (plateau-quadratic kicks, the pseudo-pendulum well, the standard-map
//!   profile), with truncated Gevrey-norm estimation;
//! - [`maps`] — elementary symplectic maps, composition pipelines, a
//!   symmetric splitting integrator for the pendulum flow, and deviation
//!   ledgers;
//! - [`pendulum`] — period function, periodic-orbit solver, adapted boxes,
//!   the local twist normal form and the island linearization data;
//! - [`coupling`] — the synchronized coupling device and its closed-form
//!   iterate predictions;
//! - [`constructions`] — the assembled example systems: tuned pseudo-pendulum
//!   maps, periodic ellipses, standard-map wandering discs and the full
//!   product assemblies;
//! - [`suspension`] — generating functions of mixed variables and the
//!   explicit time-periodic suspension Hamiltonian;
//! - [`lab`] — verification engines (periodic / wandering / island /
//!   stability), configuration and report output.
//!
//! Orbit ensembles, boundary transport and parameter sweeps run in parallel
//! through [`exec`] when the `parallel` feature (default) is enabled; the
//! same entry points fall back to sequential loops without it.

pub mod annulus;
pub mod constructions;
pub mod coupling;
pub mod error;
pub mod exec;
pub mod gevrey;
pub mod lab;
pub mod maps;
pub mod pendulum;
pub mod quad;
pub mod spline;
pub mod suspension;

pub use error::{Error, Result};
