//! Exact Chern characters of locally abelian parabolic bundles, computed in
//! truncated graded Q-algebras presented by structure constants.
//!
//! The engine models a rational intersection ring as a [`ring::RingPresentation`],
//! records a parabolic bundle by its component Chern characters
//! ([`parabolic::ComponentTable`]) or by pushed-forward filtration data
//! ([`parabolic::FiltrationData`]), and evaluates the Chern character by
//! several independent routes ([`formulas`]): the weighted average over the
//! component window, shifted windows, two Gysin-style forms, a single-divisor
//! closed form via exact series division, and an integral form for
//! piecewise-constant weight data. All routes agree exactly on locally
//! abelian inputs; split bundles ([`parabolic::SplitBundle`]) provide the
//! brute-force oracle.
//!
//! [`residues`] adds the image/kernel/monodromy-weight filtrations of a
//! nilpotent operator, and [`blowup`] the surface blow-up calculus for
//! exceptionally constant structures. [`scene`] loads everything from JSON.

pub mod blowup;
pub mod class;
pub mod error;
pub mod formulas;
pub mod linalg;
pub mod parabolic;
pub mod rational;
pub mod ring;
pub mod scene;
pub mod window;

pub use class::GradedClass;
pub use error::{Error, ErrorKind, Result};
pub use rational::{parse_rational, Q};
pub use ring::RingPresentation;
