//! Safe-set verification for a robot with linear dynamics, a fixed-heading
//! 2D LiDAR and a ReLU network controller.

pub mod abstraction;
pub mod generate;
pub mod geometry;
pub mod imaging;
pub mod io;
pub mod network;
pub mod pipeline;
pub mod smc;
