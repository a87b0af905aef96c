//! Numerical workbench for the defocusing nonlinear Schrödinger equation
//!
//!   i ∂_t u = H u + |u|^(p-1) u
//!
//! posed on a non-compact metric graph, where `H = -d²/dx²` acts edgewise and is
//! made self-adjoint by vertex conditions `A Ψ(v) + B Ψ'(v) = 0` at every vertex.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`graph`]: metric graphs with finite and infinite edges, uniform meshes on
//!   truncated computational domains, and piecewise-linear [`graph::GraphFunction`]s
//!   with the L^p / H^1 calculus used everywhere else.
//! * [`vertex`]: self-adjoint vertex couplings, both in matrix form `(A, B)` and in
//!   the equivalent projector form `(P_D, P_N, P_R, Λ)`, with conversions in both
//!   directions and the classical δ, δ', Kirchhoff and Dirichlet families.
//! * [`operator`]: P1 finite-element discretization of the quadratic form of `H`
//!   on the constrained subspace selected by the vertex conditions, plus the
//!   discrete energy, mass and action functionals and their exact gradients.
//! * [`spectral`]: bottom of the spectrum of the discretized operator via inertia
//!   bisection and shifted inverse iteration, together with closed-form reference
//!   values on star graphs and the existence classification for ground states.
//! * [`star`]: closed-form standing-wave profiles on star graphs with attractive
//!   δ or δ' coupling, their masses and actions, used as an independent oracle.
//! * [`solvers`]: action minimization at fixed frequency, energy minimization at
//!   fixed mass, the mass-frequency curve, and consistency checks between the two
//!   variational routes.
//! * [`dynamics`]: mass-conserving relaxation Crank-Nicolson time stepping and an
//!   orbital-stability experiment around a standing wave.
//! * [`graphfile`] / [`cli`]: a JSON on-disk graph format and the `qgnls` command
//!   line tool built on top of the library.
//!
//! Real scalars are `f64` throughout; time evolution uses `num_complex::Complex64`.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod graphfile;
pub mod linalg;
pub mod operator;
pub mod output;
pub mod solvers;
pub mod spectral;
pub mod star;
pub mod vertex;

pub use error::{Error, Result};
