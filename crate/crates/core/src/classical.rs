//! Ray dynamics in the billiard: the bounce map, Birkhoff coordinates and
//! Poincaré sections.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::BilliardShape;

/// Marching step used to bracket the next wall crossing.
pub const MARCH_STEP: f64 = 0.01;
/// Bisection tolerance on the ray parameter.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Offset along the new direction before searching for the next hit.
pub const LAUNCH_EPSILON: f64 = 1e-9;
/// Panels of the composite Simpson arclength table.
pub const ARCLENGTH_PANELS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayState {
    /// Boundary parameter of the current impact, in `[0, 2π)`.
    pub theta_b: f64,
    /// Unit direction after reflection.
    pub direction: [f64; 2],
}

impl RayState {
    /// Ray leaving the boundary at `theta_b` with tangential momentum `p_t`.
    pub fn from_birkhoff(shape: &BilliardShape, theta_b: f64, p_t: f64) -> Result<Self> {
        if !(p_t.abs() < 1.0) {
            return Err(Error::Domain(format!("tangential momentum {p_t} must lie in (-1, 1)")));
        }
        let (t, n) = shape.tangent_normal(theta_b)?;
        let q = (1.0 - p_t * p_t).sqrt();
        Ok(Self {
            theta_b: theta_b.rem_euclid(TAU),
            direction: [p_t * t[0] - q * n[0], p_t * t[1] - q * n[1]],
        })
    }

    pub fn position(&self, shape: &BilliardShape) -> [f64; 2] {
        shape.boundary_point(self.theta_b)
    }

    pub fn tangential_momentum(&self, shape: &BilliardShape) -> Result<f64> {
        let (t, _) = shape.tangent_normal(self.theta_b)?;
        Ok(dot(self.direction, t))
    }

    /// The time-reversed state: leaves the same point back along the incoming ray.
    pub fn reversed(&self, shape: &BilliardShape) -> Result<Self> {
        let (_, n) = shape.tangent_normal(self.theta_b)?;
        let incoming = reflect(self.direction, n);
        Ok(Self {
            theta_b: self.theta_b,
            direction: [-incoming[0], -incoming[1]],
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirkhoffPoint {
    /// Arclength from `θ = 0`, normalized to the perimeter.
    pub s: f64,
    pub p_t: f64,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn reflect(d: [f64; 2], n: [f64; 2]) -> [f64; 2] {
    let k = 2.0 * dot(d, n);
    [d[0] - k * n[0], d[1] - k * n[1]]
}

/// Cumulative arclength `∫₀^θ |dw/dθ'| dθ'` on a uniform θ table.
#[derive(Clone, Debug)]
pub struct ArclengthTable {
    shape: BilliardShape,
    cumulative: Vec<f64>,
    h: f64,
}

impl ArclengthTable {
    pub fn new(shape: &BilliardShape) -> Self {
        let h = TAU / ARCLENGTH_PANELS as f64;
        let mut cumulative = Vec::with_capacity(ARCLENGTH_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..ARCLENGTH_PANELS {
            acc += simpson(shape, k as f64 * h, h);
            cumulative.push(acc);
        }
        Self {
            shape: *shape,
            cumulative,
            h,
        }
    }

    pub fn perimeter(&self) -> f64 {
        self.cumulative[ARCLENGTH_PANELS]
    }

    /// Arclength up to `theta` (taken modulo 2π).
    pub fn arclength(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        let k = ((theta / self.h) as usize).min(ARCLENGTH_PANELS - 1);
        let start = k as f64 * self.h;
        self.cumulative[k] + simpson(&self.shape, start, theta - start)
    }

    /// Normalized arclength in `[0, 1)`.
    pub fn s(&self, theta: f64) -> f64 {
        let s = self.arclength(theta) / self.perimeter();
        if s >= 1.0 {
            0.0
        } else {
            s
        }
    }
}

fn speed(shape: &BilliardShape, theta: f64) -> f64 {
    let [a, b] = shape.boundary_velocity(theta);
    a.hypot(b)
}

fn simpson(shape: &BilliardShape, start: f64, width: f64) -> f64 {
    if width == 0.0 {
        return 0.0;
    }
    width / 6.0 * (speed(shape, start) + 4.0 * speed(shape, start + 0.5 * width) + speed(shape, start + width))
}

/// Next impact and specular reflection.
pub fn bounce(shape: &BilliardShape, state: &RayState) -> Result<RayState> {
    if shape.is_cusped() {
        return Err(Error::Domain("the bounce map excludes the cusped boundary".into()));
    }
    let d = state.direction;
    let p0 = state.position(shape);
    let origin = [p0[0] + LAUNCH_EPSILON * d[0], p0[1] + LAUNCH_EPSILON * d[1]];
    let g = |t: f64| shape.radial_excess(origin[0] + t * d[0], origin[1] + t * d[1]);
    if g(0.0) >= 0.0 {
        return Err(Error::Geometric { theta: state.theta_b });
    }
    // any chord is shorter than twice the largest radius
    let max_path = 2.0 * shape.max_radius() + 4.0 * MARCH_STEP;
    let mut lo = 0.0;
    let mut hi = None;
    while lo < max_path {
        let t = lo + MARCH_STEP;
        if g(t) >= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi.ok_or(Error::Geometric { theta: state.theta_b })?;
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let theta_b = shape.boundary_parameter(origin[0] + t * d[0], origin[1] + t * d[1]);
    let (_, n) = shape.tangent_normal(theta_b)?;
    let out = reflect(d, n);
    let len = out[0].hypot(out[1]);
    Ok(RayState {
        theta_b,
        direction: [out[0] / len, out[1] / len],
    })
}

/// Birkhoff coordinates of `n_bounces` successive impacts.
pub fn poincare_section(shape: &BilliardShape, initial: &RayState, n_bounces: usize) -> Result<Vec<BirkhoffPoint>> {
    if n_bounces == 0 {
        return Err(Error::Domain("n_bounces must be at least 1".into()));
    }
    let table = ArclengthTable::new(shape);
    let mut state = *initial;
    let mut points = Vec::with_capacity(n_bounces);
    for _ in 0..n_bounces {
        state = bounce(shape, &state)?;
        points.push(BirkhoffPoint {
            s: table.s(state.theta_b),
            p_t: state.tangential_momentum(shape)?.clamp(-1.0, 1.0),
        });
    }
    Ok(points)
}

/// Fraction of cells of a `bins × bins` grid over `[0,1) × [−1,1]` holding at least one point.
pub fn coverage_fraction(points: &[BirkhoffPoint], bins: usize) -> f64 {
    let mut occupied = vec![false; bins * bins];
    for pt in points {
        let i = ((pt.s * bins as f64) as usize).min(bins - 1);
        let j = (((pt.p_t + 1.0) * 0.5 * bins as f64) as usize).min(bins - 1);
        occupied[i * bins + j] = true;
    }
    occupied.iter().filter(|&&o| o).count() as f64 / (bins * bins) as f64
}

/// Deterministic ensemble spread over the boundary and over `p_t ∈ [−0.95, 0.95]`.
pub fn default_ensemble(shape: &BilliardShape, n_orbits: usize) -> Result<Vec<RayState>> {
    (0..n_orbits)
        .map(|k| {
            let frac = if n_orbits > 1 { k as f64 / (n_orbits - 1) as f64 } else { 0.5 };
            let theta = TAU * (k as f64 + 0.5) / n_orbits as f64;
            RayState::from_birkhoff(shape, theta, -0.95 + 1.9 * frac)
        })
        .collect()
}

/// `(θ_b, p_t)` of the single orbit used for the coverage metric: a ray
/// launched along the inward normal slightly off the horizontal diameter.
pub const COVERAGE_START: (f64, f64) = (0.5, 0.0);

/// Occupied-cell fraction of the single coverage orbit over `n_bounces` impacts.
pub fn single_orbit_coverage(shape: &BilliardShape, n_bounces: usize, bins: usize) -> Result<f64> {
    let start = RayState::from_birkhoff(shape, COVERAGE_START.0, COVERAGE_START.1)?;
    Ok(coverage_fraction(&poincare_section(shape, &start, n_bounces)?, bins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn specular_law() {
        for lambda in [0.0, 0.2, 0.35, 0.499] {
            let shape = BilliardShape::from_lambda(lambda).unwrap();
            let mut state = RayState::from_birkhoff(&shape, 0.4, 0.3).unwrap();
            for _ in 0..200 {
                let prev = state;
                state = bounce(&shape, &prev).unwrap();
                let (_, n) = shape.tangent_normal(state.theta_b).unwrap();
                let d = state.direction;
                assert!((d[0].hypot(d[1]) - 1.0).abs() < 1e-12);
                // incidence equals reflection about the normal
                assert!((dot(prev.direction, n) + dot(d, n)).abs() < 1e-12);
                assert!(dot(d, n) < 0.0);
                let [x, y] = state.position(&shape);
                assert!(shape.implicit_residual(x, y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn diameter_orbit_has_period_two() {
        let shape = BilliardShape::circle();
        let start = RayState::from_birkhoff(&shape, 0.0, 0.0).unwrap();
        let one = bounce(&shape, &start).unwrap();
        let two = bounce(&shape, &one).unwrap();
        assert!((one.theta_b - PI).abs() < 1e-9);
        assert!(two.theta_b.min(TAU - two.theta_b) < 1e-9);
    }

    #[test]
    fn circle_conserves_tangential_momentum() {
        let shape = BilliardShape::circle();
        let start = RayState::from_birkhoff(&shape, 1.1, 0.37).unwrap();
        let points = poincare_section(&shape, &start, 10_000).unwrap();
        let p0 = points[0].p_t;
        assert!((p0 - 0.37).abs() < 1e-9);
        assert!(points.iter().all(|p| (p.p_t.abs() - p0.abs()).abs() < 1e-9));
    }

    fn reversal_error(shape: &BilliardShape, start: RayState, n: usize) -> f64 {
        let mut state = start;
        for _ in 0..n {
            state = bounce(shape, &state).unwrap();
        }
        state = state.reversed(shape).unwrap();
        for _ in 0..n {
            state = bounce(shape, &state).unwrap();
        }
        let [x0, y0] = start.position(shape);
        let [x1, y1] = state.position(shape);
        (x1 - x0).hypot(y1 - y0)
    }

    #[test]
    fn reversal_returns_home() {
        // regular orbits keep round-off growth linear over 100 bounces
        for lambda in [0.0, 0.1, 0.15] {
            let shape = BilliardShape::from_lambda(lambda).unwrap();
            for (th, pt) in [(0.5, 0.0), (1.0, 0.9), (0.3, 0.97)] {
                let start = RayState::from_birkhoff(&shape, th, pt).unwrap();
                assert!(reversal_error(&shape, start, 100) < 1e-6, "lambda {lambda}");
            }
        }
        // chaotic orbits amplify it exponentially, so only short runs come back
        for lambda in [0.2, 0.25, 0.3] {
            let shape = BilliardShape::from_lambda(lambda).unwrap();
            for (th, pt) in [(0.5, 0.0), (2.0, -0.4), (1.0, 0.6)] {
                let start = RayState::from_birkhoff(&shape, th, pt).unwrap();
                assert!(reversal_error(&shape, start, 10) < 1e-6, "lambda {lambda}");
            }
        }
    }

    #[test]
    fn arclength_matches_circle() {
        let table = ArclengthTable::new(&BilliardShape::circle());
        assert!((table.perimeter() - TAU).abs() < 1e-12);
        assert!((table.s(PI) - 0.5).abs() < 1e-12);
        assert!(table.s(TAU - 1e-15) < 1.0);
    }

    #[test]
    fn cusp_and_bad_momentum_rejected() {
        let cusp = BilliardShape::from_lambda(0.5).unwrap();
        let circle = BilliardShape::circle();
        assert!(RayState::from_birkhoff(&circle, 0.0, 1.0).is_err());
        let s = RayState::from_birkhoff(&circle, 0.3, 0.1).unwrap();
        assert!(bounce(&cusp, &s).is_err());
        assert!(poincare_section(&circle, &s, 0).is_err());
    }

    #[test]
    fn matches_reference_orbit() {
        // impacts from an independent chord/root solver on the parametric boundary
        let shape = BilliardShape::from_lambda(0.15).unwrap();
        let mut state = RayState::from_birkhoff(&shape, 0.5, 0.0).unwrap();
        let mut seen = Vec::new();
        for _ in 0..30 {
            state = bounce(&shape, &state).unwrap();
            seen.push((state.theta_b, state.tangential_momentum(&shape).unwrap()));
        }
        let expect = [(0, 3.936857, 0.082805), (1, 0.237619, 0.154701), (2, 3.092031, 0.164508)];
        for (k, th, pt) in expect {
            assert!((seen[k].0 - th).abs() < 1e-6 && (seen[k].1 - pt).abs() < 1e-6);
        }
        assert!((seen[29].0 - 6.030702965713).abs() < 1e-8);
        assert!((seen[29].1 + 0.149367650651).abs() < 1e-8);
    }

    #[test]
    fn coverage_separates_regular_and_chaotic() {
        let regular = single_orbit_coverage(&BilliardShape::from_lambda(0.15).unwrap(), 10_000, 50).unwrap();
        let chaotic = single_orbit_coverage(&BilliardShape::from_lambda(0.499).unwrap(), 10_000, 50).unwrap();
        assert!(regular < 0.2, "{regular}");
        assert!(chaotic > 0.5, "{chaotic}");
    }

    #[test]
    fn coverage_counts_cells() {
        let pts = [
            BirkhoffPoint { s: 0.0, p_t: -1.0 },
            BirkhoffPoint { s: 0.999, p_t: 1.0 },
            BirkhoffPoint { s: 0.001, p_t: -0.99 },
        ];
        assert_eq!(coverage_fraction(&pts, 2), 0.5);
    }
}
