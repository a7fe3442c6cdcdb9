//! Feedback codes built on rubber symbols.
//!
//! A sender with noiseless feedback steers the receiver's stack toward a
//! constrained skeleton word; the rubber symbol (or a run of them) undoes
//! or repairs the most recent damage. The crate provides the channels,
//! the skeleton codebooks, the feedback strategies, an exhaustive
//! verifier and asymptotic rate curves.

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod codec;
pub mod rubber;
pub mod verify;

pub use channel::{ChannelError, ChannelGraph, ChannelKind, Direction, ErrorPattern, Symbol};
pub use codec::{message_capacity, CodeParams, CodecError, Constraint, Method, SkeletonSpace};
pub use rubber::{
    encode_round_trip, lebedev_encode_round_trip, round_trip, unidirectional_round_trip, RoundTrip,
    RubberError, Transcript,
};
