//! Fixture writers for tests.
//!
//! Everything here is written from the format descriptions alone and shares
//! no code with the readers under test, so round-trip tests compare two
//! independent implementations.

pub mod bag1;
pub mod bag2;
pub mod datasets;
pub mod h5;
pub mod images;
pub mod msgs;
pub mod tfrecord;
