use nalgebra::DMatrix;
use robnik_fiber::eigenmodes::{lowest_modes, EigenConfig, EigenSolver};
use robnik_fiber::geometry::{rasterize_potential, BilliardShape, GridSpec, DEFAULT_V_OUT};

/// Lowest eigenvalues of `−Δ/2` with the 5-point stencil on interior cells,
/// zero on every exterior cell.
fn finite_difference_levels(shape: &BilliardShape, grid: &GridSpec, count: usize) -> Vec<f64> {
    let pot = rasterize_potential(shape, grid, DEFAULT_V_OUT).unwrap();
    let mask = pot.interior_mask();
    let mut index = vec![usize::MAX; grid.nx * grid.ny];
    let mut cells = Vec::new();
    for ((i, j), &inside) in mask.indexed_iter() {
        if inside {
            index[i * grid.ny + j] = cells.len();
            cells.push((i, j));
        }
    }
    let n = cells.len();
    let (hx2, hy2) = (grid.dx() * grid.dx(), grid.dy() * grid.dy());
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (row, &(i, j)) in cells.iter().enumerate() {
        h[(row, row)] = 1.0 / hx2 + 1.0 / hy2;
        let neighbours = [
            (i.wrapping_sub(1), j, hx2),
            (i + 1, j, hx2),
            (i, j.wrapping_sub(1), hy2),
            (i, j + 1, hy2),
        ];
        for (a, b, h2) in neighbours {
            if a < grid.nx && b < grid.ny {
                let col = index[a * grid.ny + b];
                if col != usize::MAX {
                    h[(row, col)] = -0.5 / h2;
                }
            }
        }
    }
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    ev
}

const FD_TOLERANCE: f64 = 0.02;

fn grid() -> GridSpec {
    GridSpec::square(64, 1.5).unwrap()
}

fn levels(lambda: f64, solver: EigenSolver, n: usize) -> Vec<f64> {
    let shape = BilliardShape::from_lambda(lambda).unwrap();
    let cfg = EigenConfig {
        solver,
        tol: match solver {
            EigenSolver::Lobpcg => 1e-8,
            EigenSolver::ImaginaryTime { .. } => 1e-10,
        },
        max_iter: 200_000,
        ..EigenConfig::default()
    };
    let set = lowest_modes(&shape, &grid(), n, &cfg).unwrap();
    assert!(set.orthonormality_error() < 1e-8);
    let scale = cfg.lambda_w * cfg.lambda_w / cfg.n0;
    set.energies.iter().map(|e| e / scale).collect()
}

#[test]
fn spectral_levels_track_finite_differences() {
    for lambda in [0.0, 0.15, 0.3, 0.499] {
        let shape = BilliardShape::from_lambda(lambda).unwrap();
        let fd = finite_difference_levels(&shape, &grid(), 8);
        let ours = levels(lambda, EigenSolver::Lobpcg, 8);
        for (k, (e, f)) in ours.iter().zip(&fd).enumerate() {
            let rel = (e - f).abs() / f;
            assert!(rel < FD_TOLERANCE, "lambda {lambda} mode {k}: {e} vs {f}");
        }
    }
}

#[test]
fn imaginary_time_agrees_with_block_solver() {
    let lambda = 0.3;
    let shape = BilliardShape::from_lambda(lambda).unwrap();
    let fd = finite_difference_levels(&shape, &grid(), 4);
    let slow = levels(lambda, EigenSolver::ImaginaryTime { dtau: 0.05 }, 4);
    let fast = levels(lambda, EigenSolver::Lobpcg, 4);
    for k in 0..4 {
        assert!((slow[k] - fd[k]).abs() / fd[k] < FD_TOLERANCE, "mode {k}: {} vs {}", slow[k], fd[k]);
        // the imaginary-time fixed point sits slightly above the exact one
        assert!(slow[k] >= fast[k] * (1.0 - 1e-9));
        assert!((slow[k] - fast[k]) / fast[k] < 5e-3, "mode {k}: {} vs {}", slow[k], fast[k]);
    }
}
