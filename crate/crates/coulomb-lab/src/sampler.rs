//! Space-time interpolation of stored trajectories.

use crate::error::{Error, Result};
use crate::grid::Trajectory;

/// Field values interpolated at one space-time point.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub w: f64,
    pub wt: f64,
    pub wr: f64,
}

/// Bilinear (r, t) interpolation over the snapshots of a trajectory.
///
/// `w_r` is precomputed per snapshot by central differences (odd ghost at the
/// origin, zero beyond the edge) and interpolated as a field of its own.
pub struct TrajSampler<'a> {
    traj: &'a Trajectory,
    wr: Vec<Vec<f64>>,
}

impl<'a> TrajSampler<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<Self> {
        traj.validate()?;
        let grid = traj.grid();
        let dr = grid.dr();
        let n = grid.n();
        let wr = traj
            .snapshots
            .iter()
            .map(|s| {
                (0..n)
                    .map(|j| {
                        let left = if j == 0 { -s.w[0] } else { s.w[j - 1] };
                        let right = if j + 1 == n { 0.0 } else { s.w[j + 1] };
                        (right - left) / (2.0 * dr)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { traj, wr })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.traj.t_first(), self.traj.t_last())
    }

    /// Index of the last snapshot with `t_k <= t`, and the fraction into the
    /// following interval.
    fn locate_t(&self, t: f64) -> Result<(usize, f64)> {
        let snaps = &self.traj.snapshots;
        let (lo, hi) = self.t_range();
        if t < lo - 1e-9 || t > hi + 1e-9 {
            return Err(Error::OutsideWindow { r: f64::NAN, t });
        }
        let k = snaps.partition_point(|s| s.t <= t).saturating_sub(1);
        if k + 1 >= snaps.len() {
            return Ok((k.saturating_sub(1), 1.0));
        }
        let frac = (t - snaps[k].t) / (snaps[k + 1].t - snaps[k].t);
        Ok((k, frac.clamp(0.0, 1.0)))
    }

    /// Linear interpolation in r on the staggered cells; odd about the origin.
    fn interp_r(values: &[f64], dr: f64, r: f64) -> f64 {
        let x = r / dr - 0.5; // cell-index coordinate
        if x <= -1.0 || x >= values.len() as f64 {
            return 0.0;
        }
        if x < 0.0 {
            // between the ghost value -w[0] at x = -1 and w[0] at x = 0
            return values[0] * (2.0 * x + 1.0);
        }
        let j = x.floor() as usize;
        let f = x - j as f64;
        let right = if j + 1 < values.len() { values[j + 1] } else { 0.0 };
        values[j] * (1.0 - f) + right * f
    }

    pub fn sample(&self, r: f64, t: f64) -> Result<Sample> {
        let grid = self.traj.grid();
        if r < 0.0 || r > grid.r_max() {
            return Err(Error::OutsideWindow { r, t });
        }
        let (k, frac) = self.locate_t(t)?;
        let dr = grid.dr();
        let lerp = |a: f64, b: f64| a * (1.0 - frac) + b * frac;
        let s0 = &self.traj.snapshots[k];
        let s1 = &self.traj.snapshots[(k + 1).min(self.traj.snapshots.len() - 1)];
        Ok(Sample {
            w: lerp(Self::interp_r(&s0.w, dr, r), Self::interp_r(&s1.w, dr, r)),
            wt: lerp(Self::interp_r(&s0.wt, dr, r), Self::interp_r(&s1.wt, dr, r)),
            wr: lerp(Self::interp_r(&self.wr[k], dr, r), Self::interp_r(&self.wr[(k + 1).min(self.wr.len() - 1)], dr, r)),
        })
    }
}

/// Anything that can produce `(w, w_r, w_t)` at a space-time point. The
/// inverse profile construction is generic over this so it can run either on
/// a full stored trajectory or on a light-cone band recording.
pub trait SpaceTimeField {
    fn grid(&self) -> &crate::grid::RadialGrid;
    fn t_span(&self) -> (f64, f64);
    fn sample_wrt(&self, r: f64, t: f64) -> Result<(f64, f64, f64)>;
}

/// Cubic Lagrange value and derivative in r through 4 consecutive cells.
/// `x` is the cell-index coordinate `r/dr - 1/2`; `j1` the second stencil
/// cell.
fn lagrange4(values: &[f64], j1: usize, x: f64, dr: f64) -> (f64, f64) {
    let xs = [j1 as f64 - 1.0, j1 as f64, j1 as f64 + 1.0, j1 as f64 + 2.0];
    let ys = [values[j1 - 1], values[j1], values[j1 + 1], values[j1 + 2]];
    let mut val = 0.0;
    let mut deriv = 0.0;
    for i in 0..4 {
        let mut li = 1.0;
        let mut dli = 0.0;
        for m in 0..4 {
            if m == i {
                continue;
            }
            let denom = xs[i] - xs[m];
            dli = (dli * (x - xs[m]) + li) / denom;
            li *= (x - xs[m]) / denom;
        }
        val += ys[i] * li;
        deriv += ys[i] * dli;
    }
    (val, deriv / dr)
}

/// Hermite blend in time of two `(value, r-derivative, t-derivative)`
/// triples at `t0` and `t0 + h`; `s` in [0, 1].
fn hermite_blend(
    s: f64,
    h: f64,
    (w0, w0r, v0, v0r): (f64, f64, f64, f64),
    (w1, w1r, v1, v1r): (f64, f64, f64, f64),
) -> (f64, f64, f64) {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let g00 = 6.0 * s * (s - 1.0) / h;
    let g10 = (1.0 - s) * (1.0 - 3.0 * s);
    let g01 = -6.0 * s * (s - 1.0) / h;
    let g11 = s * (3.0 * s - 2.0);
    let w = h00 * w0 + h10 * h * v0 + h01 * w1 + h11 * h * v1;
    let wr = h00 * w0r + h10 * h * v0r + h01 * w1r + h11 * h * v1r;
    let wt = g00 * w0 + g10 * v0 + g01 * w1 + g11 * v1;
    (w, wr, wt)
}

/// Higher-order sampler: cubic Hermite in time (from stored `w` and `wt`),
/// 4-point Lagrange in radius. Used where second differences of the sampled
/// field are taken, which bilinear interpolation is too rough for.
pub struct HermiteSampler<'a> {
    traj: &'a Trajectory,
}

impl<'a> HermiteSampler<'a> {
    pub fn new(traj: &'a Trajectory) -> Result<Self> {
        traj.validate()?;
        if traj.snapshots.len() < 4 {
            return Err(Error::InvalidArgument("need at least 4 snapshots".into()));
        }
        Ok(Self { traj })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.traj.t_first(), self.traj.t_last())
    }

    /// `(w, w_r, w_t)` at an arbitrary point of the stored window.
    pub fn sample(&self, r: f64, t: f64) -> Result<(f64, f64, f64)> {
        let snaps = &self.traj.snapshots;
        let grid = self.traj.grid();
        if r < grid.r(1) || r > grid.r_max() - 2.0 * grid.dr() {
            return Err(Error::OutsideWindow { r, t });
        }
        if t < snaps[0].t - 1e-9 || t > snaps[snaps.len() - 1].t + 1e-9 {
            return Err(Error::OutsideWindow { r, t });
        }
        let k = snaps
            .partition_point(|s| s.t <= t)
            .saturating_sub(1)
            .min(snaps.len() - 2);
        let s0 = &snaps[k];
        let s1 = &snaps[k + 1];
        let h = s1.t - s0.t;
        let s = ((t - s0.t) / h).clamp(0.0, 1.0);
        let dr = grid.dr();
        let x = r / dr - 0.5;
        let j1 = (x.floor() as isize).clamp(1, grid.n() as isize - 3) as usize;
        let (w0, w0r) = lagrange4(&s0.w, j1, x, dr);
        let (w1, w1r) = lagrange4(&s1.w, j1, x, dr);
        let (v0, v0r) = lagrange4(&s0.wt, j1, x, dr);
        let (v1, v1r) = lagrange4(&s1.wt, j1, x, dr);
        Ok(hermite_blend(s, h, (w0, w0r, v0, v0r), (w1, w1r, v1, v1r)))
    }
}

impl SpaceTimeField for HermiteSampler<'_> {
    fn grid(&self) -> &crate::grid::RadialGrid {
        self.traj.grid()
    }

    fn t_span(&self) -> (f64, f64) {
        self.t_range()
    }

    fn sample_wrt(&self, r: f64, t: f64) -> Result<(f64, f64, f64)> {
        self.sample(r, t)
    }
}

/// Recording of `(w, wt)` restricted to a diagonal band
/// `band_lo <= t - r <= band_hi` around the outgoing light cone, at fine
/// uniform cadence. Memory scales with the band width, not the domain, which
/// is what makes fine-cadence Hermite sampling near the cone affordable.
pub struct ConeBandRecording {
    grid: crate::grid::RadialGrid,
    band_lo: f64,
    band_hi: f64,
    rows: Vec<BandRow>,
}

struct BandRow {
    t: f64,
    j0: usize,
    w: Vec<f64>,
    wt: Vec<f64>,
}

impl ConeBandRecording {
    pub fn new(grid: crate::grid::RadialGrid, band_lo: f64, band_hi: f64) -> Self {
        Self {
            grid,
            band_lo,
            band_hi,
            rows: Vec::new(),
        }
    }

    /// Step visitor; call on every step whose `t` should be recorded (the
    /// caller controls cadence through `is_snapshot`).
    pub fn observe(&mut self, view: &crate::evolver::StepView) {
        if !view.is_snapshot {
            return;
        }
        let dr = self.grid.dr();
        let lo_r = (view.t - self.band_hi).max(0.0);
        let hi_r = (view.t - self.band_lo).max(0.0);
        let j0 = ((lo_r / dr - 0.5).floor().max(0.0) as usize).saturating_sub(2);
        let j1 = (((hi_r / dr - 0.5).ceil() as usize) + 3).min(self.grid.n() - 1);
        if j1 <= j0 {
            return;
        }
        self.rows.push(BandRow {
            t: view.t,
            j0,
            w: view.w[j0..=j1].to_vec(),
            wt: view.wt[j0..=j1].to_vec(),
        });
    }
}

impl SpaceTimeField for ConeBandRecording {
    fn grid(&self) -> &crate::grid::RadialGrid {
        &self.grid
    }

    fn t_span(&self) -> (f64, f64) {
        (
            self.rows.first().map_or(0.0, |r| r.t),
            self.rows.last().map_or(0.0, |r| r.t),
        )
    }

    fn sample_wrt(&self, r: f64, t: f64) -> Result<(f64, f64, f64)> {
        if self.rows.len() < 2 {
            return Err(Error::OutsideWindow { r, t });
        }
        if t - r < self.band_lo - 1e-9 || t - r > self.band_hi + 1e-9 {
            return Err(Error::OutsideWindow { r, t });
        }
        let (t0, t1) = self.t_span();
        if t < t0 - 1e-9 || t > t1 + 1e-9 {
            return Err(Error::OutsideWindow { r, t });
        }
        let k = self
            .rows
            .partition_point(|row| row.t <= t)
            .saturating_sub(1)
            .min(self.rows.len() - 2);
        let r0 = &self.rows[k];
        let r1 = &self.rows[k + 1];
        let dr = self.grid.dr();
        let x = r / dr - 0.5;
        let pick = |row: &BandRow| -> Result<(f64, f64, f64, f64)> {
            let xl = x - row.j0 as f64;
            let j1 = xl.floor() as isize;
            if j1 < 1 || (j1 as usize) + 2 >= row.w.len() {
                return Err(Error::OutsideWindow { r, t });
            }
            let j1 = j1 as usize;
            let (w, wr) = lagrange4(&row.w, j1, xl, dr);
            let (v, vr) = lagrange4(&row.wt, j1, xl, dr);
            Ok((w, wr, v, vr))
        };
        let a = pick(r0)?;
        let b = pick(r1)?;
        let h = r1.t - r0.t;
        let s = ((t - r0.t) / h).clamp(0.0, 1.0);
        Ok(hermite_blend(s, h, a, b))
    }
}
