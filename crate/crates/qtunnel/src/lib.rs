//! One-dimensional quantum tunnelling of wavepackets through a rectangular
//! barrier.
//!
//! The crate computes the plane-wave transmission amplitude of a rectangular
//! barrier with branch-correct complex wavenumbers, turns it into the delay
//! amplitude distribution (the coordinate-space kernel that builds the
//! transmitted pulse out of shifted copies of the free envelope), and
//! synthesizes transmitted pulses by three independent routes: a momentum
//! integral, a coordinate-space convolution against the kernel, and direct
//! unitary time evolution on a grid.  Closed-form high-barrier and
//! wide-barrier approximations and timing diagnostics (peak trajectories,
//! momentum filtering, phase/complex delay times) round out the toolbox.
//!
//! Units: hbar = particle mass = 1 throughout, so energy = p^2/2 and the
//! barrier opacity is the dimensionless beta = sqrt(2 W) d.
//!
//! All routines are pure functions of their arguments and evaluate grids in
//! a fixed sequential order, so results are bit-for-bit reproducible.
//!
//! ```
//! use qtunnel::barrier::{self, Barrier};
//! use qtunnel::grid::UniformGrid;
//! use qtunnel::packet::GaussianPacket;
//! use qtunnel::transmit::{self, MomentumQuadrature, NormalizationMode};
//!
//! let b = Barrier::from_beta(20.0, 1.0)?;
//! let pk = GaussianPacket::new(5.0, 8.0)?;
//!
//! // plane-wave transmission amplitude at the packet's mean momentum
//! let t0 = barrier::transmission(pk.p0(), &b)?;
//! assert!(t0.norm() < 1e-7); // opaque barrier
//!
//! // transmitted envelope, normalized by T(p0) so samples stay order unity
//! let t = 6.5;
//! let center = pk.p0() * t + b.width();
//! let xgrid = UniformGrid::from_bounds(center - 20.0, center + 20.0, 101)?;
//! let pulse = transmit::transmitted_envelope(
//!     &b,
//!     &pk,
//!     t,
//!     &xgrid,
//!     NormalizationMode::RatioToTransmission,
//!     &MomentumQuadrature::default(),
//! )?;
//! let peak = pulse.peak_position()?;
//! // the transmitted peak rides ahead of the free one by about the width
//! assert!((peak - pk.p0() * t - b.width()).abs() < 0.5);
//! # Ok::<(), qtunnel::Error>(())
//! ```

pub mod analysis;
pub mod barrier;
pub mod dad;
pub mod deriv;
pub mod error;
pub mod grid;
pub mod packet;
pub mod transmit;

pub use error::{Error, Result};
