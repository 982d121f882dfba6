pub mod error;
pub mod harness;
pub mod kalman;
pub mod linalg;
pub mod numeric;
pub mod predictors;
pub mod rng;
pub mod structural;
pub mod systems;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/online-least-squares.md")]
    mod online_least_squares {}
    #[doc = include_str!("../../../book/src/kalman.md")]
    mod kalman {}
    #[doc = include_str!("../../../book/src/structural.md")]
    mod structural {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
