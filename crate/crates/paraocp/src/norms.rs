//! Discretization errors against the exact optimal pair.

use paraocp_core::{BlockVec, ControlProblem, FemSpace, TimeGrid};

use crate::problems::ManufacturedProblem;

/// `‖R_x Y_M − y*(·, T)‖_{L²(Ω)}`.
pub fn error_y_final(
    space: &FemSpace,
    y_final: &[f64],
    problem: &ManufacturedProblem,
) -> paraocp_core::Result<f64> {
    let t = problem.horizon();
    space.l2_error(y_final, |x, y| problem.y_star(x, y, t))
}

/// `‖Π_t R_x U − u*‖_{L²(Q_T)}`.
///
/// `Π_t` interpolates the midpoint snapshots `U_{m−1/2}` linearly between
/// consecutive midpoints; on the first and last half steps the adjacent linear
/// piece is continued (a constant continuation there would limit the measured
/// order to 3/2). With a single step the snapshot is constant in time. Each
/// piece is integrated in time with 2-point Gauss.
pub fn error_u_spacetime(
    space: &FemSpace,
    grid: &TimeGrid,
    controls: &BlockVec,
    problem: &ManufacturedProblem,
) -> paraocp_core::Result<f64> {
    let steps = grid.steps();
    if controls.count() != steps || controls.dim() != space.dof_count() {
        return Err(paraocp_core::Error::DimensionMismatch {
            expected: steps * space.dof_count(),
            actual: controls.count() * controls.dim(),
        });
    }
    let tau = grid.tau();
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    let mut coeffs = vec![0.0; space.dof_count()];

    // Piece boundaries: 0, t_{1/2}, …, t_{M−1/2}, T.
    let mut knots = Vec::with_capacity(steps + 2);
    knots.push(0.0);
    knots.extend((1..=steps).map(|m| grid.midpoint(m)));
    knots.push(grid.final_time());

    let mut total = 0.0;
    for piece in knots.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        for s in gauss {
            let t = a + s * (b - a);
            if steps == 1 {
                coeffs.copy_from_slice(controls.block(0));
            } else {
                // Snapshot pair whose linear interpolant covers t.
                let left = (((t / tau) - 0.5).floor().max(0.0) as usize).min(steps - 2);
                let w = (t - grid.midpoint(left + 1)) / tau;
                let (l, r) = (controls.block(left), controls.block(left + 1));
                coeffs
                    .iter_mut()
                    .zip(l.iter().zip(r))
                    .for_each(|(c, (l, r))| *c = (1.0 - w) * l + w * r);
            }
            total += 0.5 * (b - a) * space.l2_error_sq(&coeffs, |x, y| problem.u_star(x, y, t))?;
        }
    }
    Ok(total.sqrt())
}
