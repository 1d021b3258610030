//! Shared fixtures for the kernel benchmarks.

use qgeo_core::fisher::DensityGrid;
use qgeo_core::grid::{ComplexGridField, Grid};
use qgeo_core::madelung::Wavefield;
use qgeo_core::C64;

/// Free Gaussian packet on a periodic 1-D grid.
pub fn packet(nodes: usize) -> Wavefield {
    let grid = Grid::periodic_1d(nodes, -16.0, 16.0).expect("valid grid");
    let psi = ComplexGridField::from_fn(grid, |x| {
        C64::new(0.0, x[0]).exp() * (-x[0] * x[0] / 4.0).exp()
    });
    Wavefield::new(psi, 1.0, 1.0, None).expect("normalizable")
}

/// Isotropic 3-D Gaussian density on a decay grid.
pub fn density_3d(nodes: usize) -> DensityGrid {
    let grid = Grid::decay_cube(3, nodes, -6.0, 6.0).expect("valid grid");
    DensityGrid::gaussian(grid, &[1.0; 3], &[0.0; 3]).expect("valid density")
}
