//! Toolkit for planning wireless-network jamming under data uncertainty.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`instgen`] builds synthetic network scenarios (testpoint grid, seeded
//!    transceiver and jammer placement, log-distance fading, population-driven
//!    revenues, profits and costs).
//! 2. [`netmodel`] holds the domain arithmetic: decibel conversions,
//!    signal-to-interference ratios, coverage balances and jamming checks.
//! 3. [`formulate`] turns instances into mixed-integer linear models
//!    (coverage design, jammer placement, adversarial separation).
//! 4. [`milp`] is a self-contained exact solver: a bounded-variable revised
//!    simplex plus best-bound branch and bound with a lazy-cut callback.
//! 5. [`robust`] implements the multiband uncertainty set, the separation
//!    oracle, the cutting-plane loop and an exhaustive audit.
//! 6. [`files`] and [`cli`] define the on-disk formats and the command-line
//!    verbs wired together by the `netjam` binary.
//!
//! All internal power arithmetic is carried out in linear milliwatts;
//! decibel values appear only at the I/O boundary.

pub mod cli;
pub mod files;
pub mod formulate;
pub mod instgen;
pub mod milp;
pub mod netmodel;
pub mod robust;
