//! Special solutions of the radial Laplace problem `-u'' ... + u/r = 0`.
//!
//! In the reduced variable the equation reads
//!
//! ```text
//!     -w'' + (lambda/r^2 + 1/r) w = 0,      lambda = (d-1)(d-3)/4,
//! ```
//!
//! with a regular solution given by an everywhere-convergent power series
//!
//! ```text
//!     Phi(r) = sum_{k>=0} (d-2)! / (k! (k+d-2)!) r^{(d-1)/2 + k}
//! ```
//!
//! and a second, fast-decaying solution `Psi(r) = Phi(r) Int_r^inf Phi^{-2}`.
//! Their Wronskian `Phi Psi' - Phi' Psi` is -1 by construction, which fixes
//! the variation-of-parameters formula used by [`h_inverse`].

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Largest radius the series evaluator accepts before the overflow guard trips.
pub const PHI_MAX_RADIUS: f64 = 50.0;

/// Regular series solution of the reduced Laplace equation.
///
/// Coefficients follow the two-term recurrence `c_k = c_{k-1} / (k (k+d-2))`
/// with `c_0 = 1`; the sum is truncated adaptively once a term drops below
/// `1e-18` of the partial sum (the terms decay super-factorially).
#[derive(Debug, Clone, Copy)]
pub struct SeriesPhi {
    d: u32,
}

impl SeriesPhi {
    pub fn new(d: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidArgument(format!("d must be >= 3, got {d}")));
        }
        Ok(Self { d })
    }

    /// `(Phi(r), Phi'(r))`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if r < 0.0 {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
        }
        if r > PHI_MAX_RADIUS {
            return Err(Error::InvalidArgument(format!(
                "radius {r} exceeds the supported range {PHI_MAX_RADIUS}"
            )));
        }
        let mu = (self.d as f64 - 1.0) / 2.0;
        if r == 0.0 {
            // Every term carries a positive power of r (mu >= 1).
            return Ok((0.0, if self.d == 3 { 1.0 } else { 0.0 }));
        }
        let d = self.d as f64;
        // term_k = c_k r^{mu+k}; start from c_0 r^mu. Compensated summation:
        // downstream consumers divide differences of Phi by dr^2, so the
        // plain-sum roundoff (~30 eps) is visible there.
        let mut term = r.powf(mu);
        let mut sum = term;
        let mut sum_c = 0.0;
        let mut dsum = mu * term / r;
        let mut dsum_c = 0.0;
        let add = |acc: &mut f64, comp: &mut f64, x: f64| {
            let y = x - *comp;
            let t = *acc + y;
            *comp = (t - *acc) - y;
            *acc = t;
        };
        let mut k = 1.0;
        loop {
            term *= r / (k * (k + d - 2.0));
            add(&mut sum, &mut sum_c, term);
            add(&mut dsum, &mut dsum_c, (mu + k) * term / r);
            if term <= 1e-18 * sum || k > 400.0 {
                break;
            }
            k += 1.0;
        }
        Ok((sum, dsum))
    }
}

/// `Phi(r)` and its derivative for dimension `d`.
pub fn phi(r: f64, d: u32) -> Result<(f64, f64)> {
    SeriesPhi::new(d)?.eval(r)
}

/// `Psi(r) = Phi(r) Int_r^inf Phi^{-2}(s) ds` and its derivative
/// `Psi' = Phi' Int_r^inf Phi^{-2} - 1/Phi`.
pub fn psi(r: f64, d: u32) -> Result<(f64, f64)> {
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("psi requires r > 0, got {r}")));
    }
    let series = SeriesPhi::new(d)?;
    let tail = phi_inverse_square_tail(&series, r)?;
    let (ph, dph) = series.eval(r)?;
    Ok((ph * tail, dph * tail - 1.0 / ph))
}

/// `Int_r^inf Phi^{-2}(s) ds` by adaptive Simpson quadrature.
///
/// The integrand decays like `exp(-4 sqrt(s))`, so the upper limit is extended
/// in doubling segments until a segment contributes below `1e-16` of the
/// accumulated value.
fn phi_inverse_square_tail(series: &SeriesPhi, r: f64) -> Result<f64> {
    let f = |s: f64| -> f64 {
        let (ph, _) = series.eval(s).expect("radius within guard");
        1.0 / (ph * ph)
    };
    let mut total = 0.0;
    let mut lo = r;
    let mut hi = (2.0 * r).min(lo + 4.0);
    loop {
        if hi > PHI_MAX_RADIUS {
            hi = PHI_MAX_RADIUS;
        }
        let piece = adaptive_simpson(&f, lo, hi, 1e-14, 40);
        total += piece;
        if hi >= PHI_MAX_RADIUS {
            break;
        }
        if piece.abs() <= 1e-16 * total.abs() {
            break;
        }
        lo = hi;
        hi = (2.0 * hi).min(PHI_MAX_RADIUS);
    }
    // Bounded remainder beyond the guard radius: Phi is increasing, and for
    // s > S the integrand is below Phi(S)^-2 exp(-4(sqrt(s)-sqrt(S))).
    if (PHI_MAX_RADIUS - r) > 1e-12 {
        let (ph_end, _) = series.eval(PHI_MAX_RADIUS)?;
        let s0 = PHI_MAX_RADIUS.sqrt();
        // Int_S^inf exp(-4(sqrt(s)-sqrt(S))) ds = (s0/2 + 1/8) via substitution.
        total += (s0 / 2.0 + 0.125) / (ph_end * ph_end);
    }
    Ok(total)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        rel_tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * rel_tol * (left + right).abs().max(1e-300) {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, rel_tol, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), rel_tol, depth)
}

/// Phi, Phi', Psi, Psi' tabulated on the cells of a radial grid.
///
/// The tail integral is accumulated backwards from the outer edge so the whole
/// table costs O(n) series evaluations.
pub struct SpecialTable {
    pub phi: Vec<f64>,
    pub phi_prime: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
}

impl SpecialTable {
    pub fn build(grid: &RadialGrid) -> Result<Self> {
        let series = SeriesPhi::new(grid.d())?;
        if grid.r_max() > PHI_MAX_RADIUS {
            return Err(Error::InvalidArgument(format!(
                "grid extends to {} which exceeds the series guard {PHI_MAX_RADIUS}",
                grid.r_max()
            )));
        }
        let n = grid.n();
        let mut phi_v = vec![0.0; n];
        let mut dphi_v = vec![0.0; n];
        for j in 0..n {
            let (p, dp) = series.eval(grid.r(j))?;
            phi_v[j] = p;
            dphi_v[j] = dp;
        }
        // tail[j] = Int_{r_j}^inf Phi^-2, built backwards cell by cell.
        let mut tail = vec![0.0; n];
        let f = |s: f64| -> f64 {
            let (p, _) = series.eval(s).expect("within guard");
            1.0 / (p * p)
        };
        let mut acc = phi_inverse_square_tail(&series, grid.r(n - 1))?;
        tail[n - 1] = acc;
        for j in (0..n - 1).rev() {
            acc += adaptive_simpson(&f, grid.r(j), grid.r(j + 1), 1e-13, 24);
            tail[j] = acc;
        }
        let psi_v: Vec<f64> = (0..n).map(|j| phi_v[j] * tail[j]).collect();
        let psi_prime: Vec<f64> = (0..n).map(|j| dphi_v[j] * tail[j] - 1.0 / phi_v[j]).collect();
        Ok(Self {
            phi: phi_v,
            phi_prime: dphi_v,
            psi: psi_v,
            psi_prime,
        })
    }
}

/// Solves `-Delta u + u/|x| = f` for a radial source supported away from the
/// origin and the grid edge, by variation of parameters in the reduced
/// variable:
///
/// ```text
///     w(r) = Psi(r) Int_0^r Phi g ds + Phi(r) Int_r^inf Psi g ds,
///     g = r^{(d-1)/2} f,
/// ```
///
/// so that `w = c Phi` below the support and `w = c' Psi` above it. Returns
/// the solution in the original variable `u`.
pub fn h_inverse(f: &[f64], grid: &RadialGrid) -> Result<Vec<f64>> {
    if f.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            got: f.len(),
        });
    }
    let n = grid.n();
    let first = f.iter().position(|&x| x != 0.0);
    let Some(first) = first else {
        return Ok(vec![0.0; n]); // zero source
    };
    let last = f.iter().rposition(|&x| x != 0.0).unwrap();
    if first < 2 || last > n - 3 {
        return Err(Error::SupportOutsideGrid {
            lo: grid.r(first),
            hi: grid.r(last),
            rmax: grid.r_max(),
        });
    }
    let a = grid.reduction_exponent();
    let table = SpecialTable::build(grid)?;
    let dr = grid.dr();
    let g: Vec<f64> = (0..n).map(|j| grid.r(j).powf(a) * f[j]).collect();

    // Midpoint cumulative sums with half-weight on the current cell.
    let mut w = vec![0.0; n];
    let mut lower = 0.0; // Int_0^{r_j} Phi g, excluding cell j
    let mut upper: f64 = (0..n).map(|j| table.psi[j] * g[j]).sum::<f64>() * dr; // Int Psi g over all cells
    for j in 0..n {
        let phi_g = table.phi[j] * g[j] * dr;
        let psi_g = table.psi[j] * g[j] * dr;
        let int_lower = lower + 0.5 * phi_g;
        upper -= 0.5 * psi_g;
        w[j] = table.psi[j] * int_lower + table.phi[j] * upper;
        lower += phi_g;
        upper -= 0.5 * psi_g;
    }
    Ok((0..n).map(|j| grid.r(j).powf(-a) * w[j]).collect())
}

/// `sqrt(<f, H^{-1} f>)`, the negative-order norm used by the L2-level
/// balance diagnostics. Quadrature weight is `sigma_{d-1} r^{d-1} dr`.
pub fn h_minus1_norm(f: &[f64], grid: &RadialGrid) -> Result<f64> {
    let u = h_inverse(f, grid)?;
    let quad: f64 = (0..grid.n())
        .map(|j| f[j] * u[j] * grid.r(j).powi(grid.d() as i32 - 1))
        .sum::<f64>()
        * grid.dr()
        * grid.sphere_area();
    Ok(quad.max(0.0).sqrt())
}
