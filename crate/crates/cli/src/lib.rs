//! Workspace handling and rendering for the `placidus` command-line
//! tool.

pub mod render;
pub mod workspace;

pub use workspace::{ArtifactKind, Workspace};
