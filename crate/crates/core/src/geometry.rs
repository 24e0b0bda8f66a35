//! Robnik (limaçon) billiard family, boundary geometry and hard-wall rasterization.
//!
//! The boundary is the conformal image `w = A e^{iθ} + B e^{2iθ}` of the unit
//! circle. With `p = atan(λ√2)`, `A = cos p` and `B = sin p / √2` the enclosed
//! area stays `π` for every deformation `λ ∈ [0, 1/2]`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Largest admissible deformation; the boundary develops a cusp at `θ = π`.
pub const LAMBDA_MAX: f64 = 0.5;

/// Default exterior potential of the hard-wall grid.
pub const DEFAULT_V_OUT: f64 = 1e12;

/// `p` at the cusp, `atan(1/√2)`.
pub fn p_sing() -> f64 {
    FRAC_1_SQRT_2.atan()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilliardShape {
    lambda: f64,
    p: f64,
    a: f64,
    b: f64,
}

impl BilliardShape {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(0.0..=LAMBDA_MAX).contains(&lambda) {
            return Err(Error::Domain(format!(
                "deformation lambda = {lambda} outside [0, {LAMBDA_MAX}]"
            )));
        }
        let p = (lambda * SQRT_2).atan();
        Ok(Self {
            lambda,
            p,
            a: p.cos(),
            b: p.sin() / SQRT_2,
        })
    }

    pub fn circle() -> Self {
        Self {
            lambda: 0.0,
            p: 0.0,
            a: 1.0,
            b: 0.0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `A + B`, the largest distance of a boundary point from the origin.
    pub fn max_radius(&self) -> f64 {
        self.a + self.b
    }

    /// True at `λ = 1/2`, where `A = 2B` and the tangent vanishes at `θ = π`.
    pub fn is_cusped(&self) -> bool {
        self.a - 2.0 * self.b <= 1e-12
    }

    pub fn area(&self) -> f64 {
        PI * (self.a * self.a + 2.0 * self.b * self.b)
    }

    pub fn boundary_point(&self, theta: f64) -> [f64; 2] {
        let (s1, c1) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        [self.a * c1 + self.b * c2, self.a * s1 + self.b * s2]
    }

    /// `dw/dθ`, not normalized.
    pub fn boundary_velocity(&self, theta: f64) -> [f64; 2] {
        let (s1, c1) = theta.sin_cos();
        let (s2, c2) = (2.0 * theta).sin_cos();
        [
            -self.a * s1 - 2.0 * self.b * s2,
            self.a * c1 + 2.0 * self.b * c2,
        ]
    }

    /// Limaçon radius about the shifted center `(-B, 0)` in direction `phi`.
    pub fn limacon_radius(&self, phi: f64) -> f64 {
        self.a + 2.0 * self.b * phi.cos()
    }

    /// Signed radial excess `ρ - R(φ)` about `(-B, 0)`; negative strictly inside.
    pub fn radial_excess(&self, u: f64, v: f64) -> f64 {
        let x = u + self.b;
        x.hypot(v) - self.limacon_radius(v.atan2(x))
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        self.radial_excess(u, v) < 0.0
    }

    /// Polar angle about `(-B, 0)`. Equals the curve parameter `θ` for boundary points
    /// whenever `A + 2B cos θ > 0`, i.e. for every `λ < 1/2`.
    pub fn boundary_parameter(&self, u: f64, v: f64) -> f64 {
        let t = v.atan2(u + self.b);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    }

    /// Value of the Cartesian quartic
    /// `((u+B)² + v² − 2B(u+B))² − A²((u+B)² + v²)`, zero on the boundary.
    pub fn implicit_residual(&self, u: f64, v: f64) -> f64 {
        let x = u + self.b;
        let r2 = x * x + v * v;
        let lhs = r2 - 2.0 * self.b * x;
        lhs * lhs - self.a * self.a * r2
    }

    /// Unit tangent (direction of increasing `θ`) and outward unit normal.
    pub fn tangent_normal(&self, theta: f64) -> Result<([f64; 2], [f64; 2])> {
        let [tx, ty] = self.boundary_velocity(theta);
        let len = tx.hypot(ty);
        if len < 1e-10 {
            return Err(Error::Singularity { theta });
        }
        let t = [tx / len, ty / len];
        // The curve is traversed counter-clockwise, so rotating by -90° points outward.
        Ok((t, [t[1], -t[0]]))
    }
}

/// Uniform cell-centered Cartesian grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 16 || !n.is_power_of_two() {
                return Err(Error::Domain(format!(
                    "{name} = {n} must be a power of two >= 16"
                )));
            }
        }
        if !(x_max > x_min && y_max > y_min) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("grid extent must be finite and non-empty".into()));
        }
        Ok(Self {
            nx,
            ny,
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `n × n` cells over `[-half_width, half_width]²`.
    pub fn square(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, n, -half_width, half_width, -half_width, half_width)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + (j as f64 + 0.5) * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Angular wavenumbers of the x axis in FFT ordering.
    pub fn kx(&self) -> Vec<f64> {
        fft_wavenumbers(self.nx, self.x_max - self.x_min)
    }

    pub fn ky(&self) -> Vec<f64> {
        fft_wavenumbers(self.ny, self.y_max - self.y_min)
    }

    /// True if the open disc of the given radius about the origin lies strictly inside.
    pub fn contains_disc(&self, radius: f64) -> bool {
        self.x_min < -radius && self.x_max > radius && self.y_min < -radius && self.y_max > radius
    }
}

pub(crate) fn fft_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as f64 } else { i as f64 - n as f64 };
            m * dk
        })
        .collect()
}

/// Potential sampled on a grid. Rasterized billiards are two-valued `{0, v_out}`.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub grid: GridSpec,
    pub values: Array2<f64>,
    pub v_out: f64,
}

impl PotentialField {
    /// Arbitrary potential; `v_out` is taken as the maximum value.
    pub fn from_values(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.nx, grid.ny) {
            return Err(Error::Domain(format!(
                "potential shape {:?} does not match grid {}x{}",
                values.dim(),
                grid.nx,
                grid.ny
            )));
        }
        let v_out = values.iter().copied().fold(0.0, f64::max);
        Ok(Self { grid, values, v_out })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.nx, grid.ny)),
            v_out: 0.0,
        }
    }

    /// Cells where the potential vanishes.
    pub fn interior_mask(&self) -> Array2<bool> {
        self.values.mapv(|v| v == 0.0)
    }

    pub fn interior_cells(&self) -> usize {
        self.values.iter().filter(|&&v| v == 0.0).count()
    }

    pub fn interior_area(&self) -> f64 {
        self.interior_cells() as f64 * self.grid.cell_area()
    }
}

/// Zero on cells whose center lies inside the billiard, `v_out` elsewhere.
pub fn rasterize_potential(shape: &BilliardShape, grid: &GridSpec, v_out: f64) -> Result<PotentialField> {
    if !grid.contains_disc(shape.max_radius()) {
        return Err(Error::Domain(format!(
            "grid extent [{}, {}]x[{}, {}] does not contain the billiard of radius {}",
            grid.x_min,
            grid.x_max,
            grid.y_min,
            grid.y_max,
            shape.max_radius()
        )));
    }
    if !(v_out > 0.0 && v_out.is_finite()) {
        return Err(Error::Domain(format!("v_out = {v_out} must be positive and finite")));
    }
    let xs = grid.xs();
    let ys = grid.ys();
    let values = Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| {
        if shape.contains(xs[i], ys[j]) {
            0.0
        } else {
            v_out
        }
    });
    Ok(PotentialField {
        grid: *grid,
        values,
        v_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_limit() {
        let s = BilliardShape::from_lambda(0.0).unwrap();
        assert_eq!((s.p(), s.a(), s.b()), (0.0, 1.0, 0.0));
        let [u, v] = s.boundary_point(PI / 2.0);
        assert!(u.abs() < 1e-15 && (v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_lambda_constants() {
        // atan(1/√2), cos and sin/√2 of it, computed independently in closed form:
        // cos p = √(2/3), sin p = √(1/3).
        let s = BilliardShape::from_lambda(0.5).unwrap();
        assert!((s.p() - 0.615_479_708_670_387_3).abs() < 1e-12);
        assert!((s.a() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.b() - (1.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((s.b() - s.a() / 2.0).abs() < 1e-12);
        assert!((s.p() - p_sing()).abs() < 1e-15);
        assert!(s.is_cusped());
        let [u, v] = s.boundary_point(0.0);
        assert!((u - 1.224_744_871_391_589).abs() < 1e-12 && v.abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(BilliardShape::from_lambda(-0.01), Err(Error::Domain(_))));
        assert!(matches!(BilliardShape::from_lambda(0.51), Err(Error::Domain(_))));
        assert!(BilliardShape::from_lambda(f64::NAN).is_err());
    }

    #[test]
    fn area_and_reparametrisation() {
        for k in 0..=50 {
            let s = BilliardShape::from_lambda(k as f64 * 0.01).unwrap();
            assert!((s.a() * s.a() + 2.0 * s.b() * s.b() - 1.0).abs() < 1e-12);
            assert!((s.b() - s.lambda() * s.a()).abs() < 1e-12);
            assert!(s.p() >= 0.0 && s.p() <= p_sing() + 1e-15);
            assert!((s.area() - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_point() {
        let s = BilliardShape::from_lambda(0.37).unwrap();
        let [u, v] = s.boundary_point(PI);
        assert!((u - (s.b() - s.a())).abs() < 1e-14 && v.abs() < 1e-14);
    }

    #[test]
    fn containment_examples() {
        let s = BilliardShape::from_lambda(0.25).unwrap();
        assert!(s.contains(0.0, 0.0));
        for lam in [0.0, 0.2, 0.5] {
            assert!(!BilliardShape::from_lambda(lam).unwrap().contains(2.0, 0.0));
        }
        let c = BilliardShape::circle();
        for k in 0..360 {
            let t = k as f64 * PI / 180.0;
            assert!(c.contains(0.999 * t.cos(), 0.999 * t.sin()));
            assert!(!c.contains(1.001 * t.cos(), 1.001 * t.sin()));
        }
    }

    #[test]
    fn tangents_and_normals() {
        let c = BilliardShape::circle();
        let (t, n) = c.tangent_normal(0.0).unwrap();
        assert!((t[0]).abs() < 1e-15 && (t[1] - 1.0).abs() < 1e-15);
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
        let (t, n) = c.tangent_normal(PI / 2.0).unwrap();
        assert!((t[0] + 1.0).abs() < 1e-15 && t[1].abs() < 1e-15);
        assert!(n[0].abs() < 1e-15 && (n[1] - 1.0).abs() < 1e-15);
        let s = BilliardShape::from_lambda(0.3).unwrap();
        let (_, n) = s.tangent_normal(0.0).unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1].abs() < 1e-15);
    }

    #[test]
    fn cusp_is_singular() {
        let s = BilliardShape::from_lambda(0.5).unwrap();
        assert!(matches!(s.tangent_normal(PI), Err(Error::Singularity { .. })));
        assert!(s.tangent_normal(PI - 0.1).is_ok());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::square(8, 1.5).is_err());
        assert!(GridSpec::square(48, 1.5).is_err());
        assert!(GridSpec::square(64, 1.5).is_ok());
        assert!(GridSpec::new(64, 64, 1.0, -1.0, -1.0, 1.0).is_err());
        let g = GridSpec::square(16, 1.0).unwrap();
        let k = g.kx();
        assert_eq!(k[0], 0.0);
        assert!((k[1] - PI).abs() < 1e-14);
        assert!((k[8] + 8.0 * PI).abs() < 1e-12);
        assert!((k[15] + PI).abs() < 1e-14);
    }

    #[test]
    fn rasterize_two_valued() {
        let s = BilliardShape::from_lambda(0.2).unwrap();
        let g = GridSpec::square(64, 1.5).unwrap();
        let pot = rasterize_potential(&s, &g, DEFAULT_V_OUT).unwrap();
        assert!(pot.values.iter().all(|&v| v == 0.0 || v == 1e12));
        assert_eq!(pot.values[[32, 32]], 0.0);
        assert_eq!(pot.values[[0, 0]], 1e12);
        let small = GridSpec::square(64, 1.1).unwrap();
        let cusp = BilliardShape::from_lambda(0.5).unwrap();
        assert!(matches!(
            rasterize_potential(&cusp, &small, 1e12),
            Err(Error::Domain(_))
        ));
    }
}
