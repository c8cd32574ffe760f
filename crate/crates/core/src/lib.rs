//! Mod-2 chains, dipolyhedra and flat-norm tools for soap-film experiments.

pub mod error;
pub mod flatnorm;
pub mod gf2;
pub mod grid;
pub mod io;
pub mod measure;
pub mod deform;
pub mod dipoly;
pub mod natural;
pub mod planar;
pub mod plateau;
pub mod rational;
pub mod simplicial;
pub mod spanning;

pub use error::{FilmError, Result};
