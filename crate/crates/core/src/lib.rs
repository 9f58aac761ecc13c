//! Factual probability laws, built and recovered constructively.
//!
//! A parcelled [`painting`] is the ground truth. It can be reassembled by the
//! [`puzzle`] games, turned into a random phenomenon by drawing tiles with
//! replacement ([`phenomenon`]), and analysed with the finite probability
//! machinery of [`prob`]. The [`integration`] module runs the inverse
//! direction: from a stream of complexified events it reassembles the hidden
//! integrated form and counts out the law it induces.

pub mod assembly;
pub mod integration;
pub mod mrc;
pub mod painting;
pub mod phenomenon;
pub mod prob;
pub mod puzzle;
pub mod rational;
pub mod runner;
pub mod seeding;

pub use rational::Rational;
