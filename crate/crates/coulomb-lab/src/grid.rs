//! Radial grids, the reduced field variable and trajectories.
//!
//! All fields are stored in the reduced variable `w = r^((d-1)/2) u`, for
//! which the radial wave operator has a constant-coefficient principal part
//! plus the potential `lambda/r^2 + 1/r`. The mesh is staggered,
//! `r_j = (j + 1/2) dr`, so neither the potential nor the reduction factor is
//! ever evaluated at `r = 0`.

use crate::error::{Error, Result};

/// Staggered radial mesh in `d` spatial dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    d: u32,
    dr: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(d: u32, dr: f64, n: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidGrid(format!("d must be >= 3, got {d}")));
        }
        if !(dr > 0.0) || !dr.is_finite() {
            return Err(Error::InvalidGrid(format!("dr must be positive, got {dr}")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n must be >= 8, got {n}")));
        }
        Ok(Self { d, dr, n })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell center `r_j = (j + 1/2) dr`.
    pub fn r(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dr
    }

    /// Outer edge of the mesh, `n * dr`.
    pub fn r_max(&self) -> f64 {
        self.n as f64 * self.dr
    }

    /// `lambda = (d-1)(d-3)/4`, the coefficient of the `1/r^2` term of the
    /// reduced wave operator.
    pub fn lambda(&self) -> f64 {
        let d = self.d as f64;
        (d - 1.0) * (d - 3.0) / 4.0
    }

    /// Reduction exponent `(d-1)/2` in `w = r^((d-1)/2) u`.
    pub fn reduction_exponent(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }

    /// Area of the unit sphere `S^{d-1}`.
    pub fn sphere_area(&self) -> f64 {
        sphere_area(self.d)
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.r(j))
    }

    /// Index of the cell containing radius `r`, if any.
    pub fn cell_of(&self, r: f64) -> Option<usize> {
        if r < 0.0 || r >= self.r_max() {
            return None;
        }
        Some(((r / self.dr) as usize).min(self.n - 1))
    }
}

/// Area of the unit sphere `S^{d-1}` in `R^d`: `2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_area(d: u32) -> f64 {
    let x = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(x) / gamma_half_integer(d)
}

/// Gamma(d/2) for integer d >= 1, by the recurrence from Gamma(1/2) = sqrt(pi).
fn gamma_half_integer(d: u32) -> f64 {
    let mut x = d as f64 / 2.0;
    let mut acc = 1.0;
    while x > 1.0 + 1e-12 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 0.5).abs() < 1e-12 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc
    }
}

/// `w_j = r_j^((d-1)/2) u_j`.
pub fn reduce(u: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    if u.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            got: u.len(),
        });
    }
    let a = grid.reduction_exponent();
    Ok(u.iter()
        .enumerate()
        .map(|(j, &uj)| grid.r(j).powf(a) * uj)
        .collect())
}

/// `u_j = r_j^(-(d-1)/2) w_j`, inverse of [`reduce`].
pub fn lift(w: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    if w.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            got: w.len(),
        });
    }
    let a = grid.reduction_exponent();
    Ok(w.iter()
        .enumerate()
        .map(|(j, &wj)| grid.r(j).powf(-a) * wj)
        .collect())
}

/// Reduced field state at a single time.
///
/// `zeta = 0` is the linear equation, `zeta = 1` the defocusing nonlinear
/// equation with exponent `p` (conformal to energy-critical range).
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub grid: RadialGrid,
    pub t: f64,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
    pub zeta: u8,
    pub p: f64,
}

impl ReducedState {
    pub fn new(grid: RadialGrid, t: f64, w: Vec<f64>, wt: Vec<f64>, zeta: u8, p: f64) -> Result<Self> {
        let state = Self { grid, t, w, wt, zeta, p };
        state.validate()?;
        Ok(state)
    }

    pub fn zero(grid: RadialGrid) -> Self {
        Self {
            grid,
            t: 0.0,
            w: vec![0.0; grid.n()],
            wt: vec![0.0; grid.n()],
            zeta: 0,
            p: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.len() != self.grid.n() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n(),
                got: self.w.len(),
            });
        }
        if self.wt.len() != self.grid.n() {
            return Err(Error::LengthMismatch {
                expected: self.grid.n(),
                got: self.wt.len(),
            });
        }
        if !self.w.iter().chain(self.wt.iter()).all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("state contains non-finite entries".into()));
        }
        if self.zeta > 1 {
            return Err(Error::InvalidArgument(format!("zeta must be 0 or 1, got {}", self.zeta)));
        }
        if self.zeta == 1 {
            let d = self.grid.d() as f64;
            let lo = 1.0 + 4.0 / (d - 1.0);
            let hi = 1.0 + 4.0 / (d - 2.0);
            if !(self.p >= lo - 1e-12 && self.p <= hi + 1e-12) {
                return Err(Error::ExponentRange(format!(
                    "p = {} outside [{lo}, {hi}] for d = {d}",
                    self.p
                )));
            }
        }
        Ok(())
    }

    /// Field values `u_j` in the original (unreduced) variable.
    pub fn u(&self) -> Vec<f64> {
        lift(&self.w, &self.grid).expect("state arrays match the grid")
    }

    pub fn max_abs_w(&self) -> f64 {
        self.w.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Time-ordered snapshots with uniform cadence `store_every * dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<ReducedState>,
    pub store_every: usize,
    pub dt: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &RadialGrid {
        &self.snapshots[0].grid
    }

    pub fn t_first(&self) -> f64 {
        self.snapshots.first().map_or(0.0, |s| s.t)
    }

    pub fn t_last(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    /// Snapshot spacing in time.
    pub fn cadence(&self) -> f64 {
        self.store_every as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if self.snapshots.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no snapshots".into()));
        }
        for pair in self.snapshots.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::InvalidArgument("snapshot times are not strictly increasing".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_matches_known_dimensions() {
        // lambda = (d-1)(d-3)/4: 0, 3/4, 2 for d = 3, 4, 5.
        assert_eq!(RadialGrid::new(3, 0.1, 16).unwrap().lambda(), 0.0);
        assert_eq!(RadialGrid::new(4, 0.1, 16).unwrap().lambda(), 0.75);
        assert_eq!(RadialGrid::new(5, 0.1, 16).unwrap().lambda(), 2.0);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(RadialGrid::new(2, 0.1, 16).is_err());
        assert!(RadialGrid::new(3, 0.0, 16).is_err());
        assert!(RadialGrid::new(3, 0.1, 4).is_err());
    }

    #[test]
    fn staggering_avoids_origin() {
        let g = RadialGrid::new(3, 0.01, 32).unwrap();
        assert!(g.r(0) > 0.0);
        assert_eq!(g.r(0), 0.005);
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn reduce_zero_is_zero() {
        let g = RadialGrid::new(3, 0.1, 16).unwrap();
        let u = vec![0.0; 16];
        assert!(reduce(&u, &g).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reduce_one_over_r_is_unit() {
        let g = RadialGrid::new(3, 0.1, 16).unwrap();
        let u: Vec<f64> = g.radii().map(|r| 1.0 / r).collect();
        for w in reduce(&u, &g).unwrap() {
            assert!((w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_r_squared_in_d5() {
        let g = RadialGrid::new(5, 0.1, 16).unwrap();
        let w: Vec<f64> = g.radii().map(|r| r * r).collect();
        for u in lift(&w, &g).unwrap() {
            assert!((u - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reduce_lift_round_trip() {
        let g = RadialGrid::new(4, 0.05, 64).unwrap();
        let u: Vec<f64> = g.radii().map(|r| (r - 1.0).sin() * (-r).exp()).collect();
        let back = lift(&reduce(&u, &g).unwrap(), &g).unwrap();
        for (a, b) in u.iter().zip(back.iter()) {
            let denom = a.abs().max(1e-300);
            assert!((a - b).abs() / denom <= 1e-14);
        }
    }

    #[test]
    fn reduce_rejects_length_mismatch() {
        let g = RadialGrid::new(3, 0.1, 16).unwrap();
        assert!(reduce(&[0.0; 15], &g).is_err());
    }

    proptest::proptest! {
        #[test]
        fn reduce_lift_round_trip_prop(
            d in 3u32..8,
            dr in 1e-4f64..0.5,
            seed in 0u64..u64::MAX,
        ) {
            let g = RadialGrid::new(d, dr, 64).unwrap();
            let mut s = seed | 1;
            let mut next = move || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            };
            let u: Vec<f64> = (0..64).map(|_| next()).collect();
            let back = lift(&reduce(&u, &g).unwrap(), &g).unwrap();
            for (a, b) in u.iter().zip(back.iter()) {
                proptest::prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
            }
        }
    }
}
