//! Newton polyhedra, quasi-homogeneous weights, sublevel-set growth and the
//! decay of oscillatory integrals for polynomial phases.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`]: exact rational polynomials, the text grammar, evaluation and
//!   the weighted gradient-flow ratio.
//! * [`newton`]: Newton polyhedron, Newton distance, faces and
//!   nondegeneracy certification.
//! * [`quasihom`]: quasi-homogeneous weights, Euler identity and the
//!   critical integrability exponent.
//! * [`sublevel`]: Monte Carlo sublevel-set measures and power-law fits.
//! * [`osc`]: quadrature of oscillatory integrals, decay ladders and the
//!   region/sublevel instrumentation used to check decay bounds.
//! * [`report`]: the end-to-end analysis pipeline and its file formats.

pub mod fit;
pub mod lp;
pub mod newton;
pub mod osc;
pub mod poly;
pub mod quasihom;
pub mod rational;
pub mod report;
pub mod rng;
pub mod sublevel;

pub use poly::{parse_polynomial, Point, Polynomial};
pub use rational::Rational;
