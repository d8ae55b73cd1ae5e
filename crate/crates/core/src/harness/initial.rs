use crate::grid::Grid1D;

/// Initial data of the numerical experiments:
/// `(1 + sin 10x, 1 + cos 20x, 1 + cos x)`.
pub fn make_initial(grid: &Grid1D) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        grid.map(|x| 1.0 + (10.0 * x).sin()),
        grid.map(|x| 1.0 + (20.0 * x).cos()),
        grid.map(|x| 1.0 + x.cos()),
    )
}
