//! Library side of the `tship` command line tool: the acceptance batteries
//! and shared output helpers live here so integration tests can call them
//! directly.

#![forbid(unsafe_code)]

pub mod battery;
