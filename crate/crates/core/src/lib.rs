//! Automatic detection of distortion points on closed triangle meshes and
//! low-distortion parameterization through them.

pub mod cutgen;
pub mod detect;
pub mod graph;
pub mod mesh;
pub mod param;
pub mod pipeline;
pub mod shapes;
pub mod simplify;
pub mod vote;
