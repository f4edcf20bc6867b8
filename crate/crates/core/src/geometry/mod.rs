//! Fiber core layouts, the sample-plane raster, and the visibility
//! (core-difference frequency) set that links them.

mod grid;
mod layout;
mod visibility;

pub use grid::{ImageGrid, MAX_AUTO_SIDE};
pub use layout::{
    fermat_spiral_layout, golden_angle, integer_grid_layout, CoreLayout, LayoutKind, Optics, Point,
};
pub use visibility::{compute_visibilities, VisibilitySet};
