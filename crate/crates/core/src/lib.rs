//! Return-time rates on shift spaces and full-dimension insertion plans.

pub mod bigmath;
pub mod cantor;
pub mod error;
pub mod ext_real;
pub mod phi;
pub mod plan;
pub mod rates;
pub mod return_time;
pub mod shift;

pub use error::{Error, ErrorKind, Result};
pub use ext_real::ExtReal;
