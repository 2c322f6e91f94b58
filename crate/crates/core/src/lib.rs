//! Linear-optics simulation of four-dimensional OAM cyclic gates.
//!
//! A single photon lives in `port x polarization x OAM window`
//! ([`hilbert`]); optical elements are operators on that space
//! ([`elements`]), composed into sorters and gate circuits ([`circuit`]).
//! [`gates`] holds the ideal targets and conversion metrics, [`photonsim`]
//! the noisy photon-counting model, and [`io`] the table formats.

pub mod circuit;
pub mod elements;
pub mod error;
pub mod gates;
pub mod hilbert;
pub mod io;
pub mod photonsim;

pub use circuit::{compile, Circuit, GateKind, Setup, Stage};
pub use elements::ElementSpec;
pub use error::{Error, Result};
pub use gates::{ConversionTable, GateTarget, LabeledState};
pub use photonsim::{CountTable, NoiseModel, SourceSpec};
pub use hilbert::{BasisSpec, ModeLabel, OpticalOperator, Polarization, PureState, C64};
