//! Deterministic preparation of two-mode mechanical squeezed states by cavity
//! dissipation, simulated at the Gaussian level.
//!
//! Two optomechanical arrangements are covered: a pair of membranes inside a
//! driven two-mode resonator (setup I), and two membranes in separate,
//! tunnel-coupled single-mode cavities driven through a two-step pump sequence
//! (setup II). In both, a two-tone pump engineers an effective coupling
//! `chi(t) = chi1 e^{-i(Omega t - phi)} + chi2` between a cavity mode and a
//! collective mechanical mode; for `chi2 > chi1` the cavity decay channel cools
//! a Bogoliubov mode to vacuum, leaving the mechanical pair in a two-mode
//! squeezed (thermal) state.
//!
//! Module layout:
//!
//! - [`gaussian`]: multimode Gaussian states, symplectic maps, squeezing and
//!   EPR metrics.
//! - [`dynamics`]: drift/diffusion generators for the linearized models,
//!   moment-equation time evolution and Lyapunov steady states.
//! - [`meanfield`]: classical pump-field equations, perturbative solutions,
//!   pump-phase bookkeeping, membrane-geometry couplings.
//! - [`analytics`]: every closed-form steady-state prediction, used as oracles
//!   by the rest of the crate.
//! - [`protocols`]: end-to-end runs of both setups plus parameter sweeps.
//! - [`fock`]: brute-force truncated-Fock master-equation integrator for
//!   cross-validation at small truncation.
//! - [`ode`]: the embedded adaptive Runge-Kutta pair shared by all
//!   integrations.
//!
//! All frequencies and rates are quoted in units of the mechanical frequency
//! (`omega_m = 1`), times in units of `1/omega_m`. Quadratures follow
//! `x = (c + c^dag)/sqrt(2)` with vacuum variance 1/2 and ordering
//! `(x_1, p_1, x_2, p_2, ...)`; `Delta_EPR < 2` is the nonclassicality
//! threshold in this normalization.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature simply forwards to the linear-algebra backend.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod analytics;
pub mod dynamics;
pub mod fock;
pub mod gaussian;
pub mod meanfield;
pub mod ode;
pub mod protocols;

pub use gaussian::GaussianState;
