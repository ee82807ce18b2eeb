//! Maps between fibres of a bundle carried along paths in its base.
//!
//! Paths and their algebra live in [`path`], bundles in [`bundle`], the
//! transport interface and law checkers in [`transport`]. [`factorization`]
//! and [`lifting`] build transports from factor families and from liftings,
//! [`instances`] holds the concrete transports and [`cli`] the command line.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod factorization;
pub mod holonomy;
pub mod instances;
pub mod lifting;
pub mod path;
pub mod tolerance;
pub mod transport;
