//! Initial-data factories for the radial evolver.

use crate::error::{Error, Result};
use crate::grid::{reduce, RadialGrid, ReducedState};
use crate::special::SeriesPhi;

/// Analytic radial profile for either the field or its time derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `A exp(-(r-r_c)^2 / (2 sigma^2))`, truncated at `|r - r_c| > 5 sigma`
    /// and shifted so the cut is continuous.
    GaussianShell { center: f64, width: f64, amplitude: f64 },
    /// `A exp(-1/(1-x^2))`, `x = (r-r_c)/a`; smooth and exactly supported in
    /// `|r - r_c| < a`.
    BumpShell { center: f64, half_width: f64, amplitude: f64 },
    /// The regular static solution `u = r^{-(d-1)/2} Phi(r)` of the Laplace
    /// problem; useful as a stencil test field, not for long evolutions.
    LaplaceStatic { amplitude: f64 },
    /// Field values sampled at the grid cells.
    Custom(Vec<f64>),
}

impl Profile {
    /// Closed interval outside which the profile vanishes, if it has one.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::GaussianShell { center, width, .. } => {
                Some((center - 5.0 * width, center + 5.0 * width))
            }
            Profile::BumpShell { center, half_width, .. } => {
                Some((center - half_width, center + half_width))
            }
            Profile::LaplaceStatic { .. } | Profile::Custom(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::GaussianShell { amplitude, .. }
            | Profile::BumpShell { amplitude, .. }
            | Profile::LaplaceStatic { amplitude } => *amplitude == 0.0,
            Profile::Custom(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    fn sample(&self, grid: &RadialGrid) -> Result<Vec<f64>> {
        match self {
            Profile::GaussianShell { center, width, amplitude } => {
                if *width <= 0.0 {
                    return Err(Error::InvalidArgument("shell width must be positive".into()));
                }
                // Subtract the 5-sigma value so the truncation is C0; the
                // residual kink is exp(-12.5) ~ 3.7e-6 in slope, below the
                // scheme error at the resolutions of interest.
                let cut = (-12.5f64).exp();
                Ok(grid
                    .radii()
                    .map(|r| {
                        let x = (r - center) / width;
                        if x.abs() < 5.0 {
                            amplitude * ((-0.5 * x * x).exp() - cut)
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            Profile::BumpShell { center, half_width, amplitude } => {
                if *half_width <= 0.0 {
                    return Err(Error::InvalidArgument("bump half-width must be positive".into()));
                }
                Ok(grid
                    .radii()
                    .map(|r| {
                        let x = (r - center) / half_width;
                        if x.abs() < 1.0 {
                            amplitude * (-1.0 / (1.0 - x * x)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            Profile::LaplaceStatic { amplitude } => {
                let series = SeriesPhi::new(grid.d())?;
                let a = grid.reduction_exponent();
                grid.radii()
                    .map(|r| Ok(amplitude * series.eval(r)?.0 * r.powf(-a)))
                    .collect()
            }
            Profile::Custom(values) => {
                if values.len() != grid.n() {
                    return Err(Error::LengthMismatch {
                        expected: grid.n(),
                        got: values.len(),
                    });
                }
                Ok(values.clone())
            }
        }
    }
}

/// Initial data: position profile `u0` and velocity profile `u1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub u0: Option<Profile>,
    pub u1: Option<Profile>,
}

impl DataSpec {
    pub fn position(profile: Profile) -> Self {
        Self { u0: Some(profile), u1: None }
    }

    pub fn velocity(profile: Profile) -> Self {
        Self { u0: None, u1: Some(profile) }
    }

    /// Outer radius of the data support, when both profiles have one.
    pub fn support_radius(&self) -> Option<f64> {
        let mut radius = 0.0f64;
        for profile in [&self.u0, &self.u1].into_iter().flatten() {
            if profile.is_zero() {
                continue;
            }
            match profile.support() {
                Some((_, hi)) => radius = radius.max(hi),
                None => return None,
            }
        }
        Some(radius)
    }

    fn check_support(&self, grid: &RadialGrid) -> Result<()> {
        for profile in [&self.u0, &self.u1].into_iter().flatten() {
            if profile.is_zero() {
                continue;
            }
            if let Some((lo, hi)) = profile.support() {
                if lo <= 0.0 {
                    return Err(Error::InvariantViolation(format!(
                        "data support reaches the origin (inner radius {lo}); \
                         shells must vanish near r = 0"
                    )));
                }
                if hi >= grid.r_max() {
                    return Err(Error::SupportOutsideGrid {
                        lo,
                        hi,
                        rmax: grid.r_max(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Samples the data profiles, reduces them and assembles an evolver state.
pub fn make_state(spec: &DataSpec, grid: RadialGrid, zeta: u8, p: f64) -> Result<ReducedState> {
    spec.check_support(&grid)?;
    let zero = vec![0.0; grid.n()];
    let u0 = match &spec.u0 {
        Some(pr) => pr.sample(&grid)?,
        None => zero.clone(),
    };
    let u1 = match &spec.u1 {
        Some(pr) => pr.sample(&grid)?,
        None => zero,
    };
    ReducedState::new(grid, 0.0, reduce(&u0, &grid)?, reduce(&u1, &grid)?, zeta, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_gives_zero_state() {
        let grid = RadialGrid::new(3, 0.01, 1024).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 0.0,
        });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        assert!(state.w.iter().all(|&x| x == 0.0));
        assert!(state.wt.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gaussian_shell_matches_definition_in_d3() {
        let grid = RadialGrid::new(3, 0.01, 1024).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        let cut = (-12.5f64).exp();
        for (j, r) in grid.radii().enumerate() {
            let expected = if (r - 2.0).abs() < 1.0 {
                r * ((-(r - 2.0) * (r - 2.0) / (2.0 * 0.04)).exp() - cut)
            } else {
                0.0
            };
            assert!((state.w[j] - expected).abs() <= 1e-13, "j = {j}");
        }
    }

    #[test]
    fn support_must_stay_inside_grid() {
        let grid = RadialGrid::new(3, 0.01, 256).unwrap(); // r_max = 2.56
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        });
        assert!(matches!(
            make_state(&spec, grid, 0, 0.0),
            Err(Error::SupportOutsideGrid { .. })
        ));
    }

    #[test]
    fn support_must_avoid_origin() {
        let grid = RadialGrid::new(3, 0.01, 1024).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 0.5,
            width: 0.2,
            amplitude: 1.0,
        });
        assert!(make_state(&spec, grid, 0, 0.0).is_err());
    }

    #[test]
    fn laplace_static_reduces_to_series() {
        let grid = RadialGrid::new(3, 1e-3, 4000).unwrap();
        let spec = DataSpec::position(Profile::LaplaceStatic { amplitude: 1.0 });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        let (expect, _) = crate::special::phi(grid.r(100), 3).unwrap();
        assert!((state.w[100] - expect).abs() <= 1e-12 * expect.max(1.0));
    }
}
