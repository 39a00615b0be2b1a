//! Explicit central-difference time stepping for the reduced wave equation
//!
//! ```text
//!   w_tt = w_rr - (lambda/r^2 + 1/r) w - zeta r^{-(d-1)(p-1)/2} |w|^{p-1} w  (+ source)
//! ```
//!
//! The scheme is the classic three-level leapfrog
//! `w^{n+1} = 2 w^n - w^{n-1} + dt^2 RHS(w^n)`, bootstrapped with a Taylor
//! first step, and is implemented in its algebraically equivalent
//! kick-drift-kick form so a state `(w, wt)` maps to a state `(w, wt)` with
//! `wt` the centered-difference velocity. Boundary conditions: odd ghost
//! extension at the origin (`w(-r_0) = -w(r_0)`), homogeneous Dirichlet at the
//! outer edge (never reached when the config containment invariant holds).

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, ReducedState, Trajectory};

/// Nonlinear term `f(u)` on the right side of `u_tt + H u = f(u)`.
///
/// `Defocusing` is the sign of the unified equation (`f = -|u|^{p-1} u`);
/// `Focusing` and `Absolute` cover the small-data experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Linear,
    Defocusing { p: f64 },
    Focusing { p: f64 },
    Absolute { p: f64 },
}

impl Nonlinearity {
    pub fn from_state(zeta: u8, p: f64) -> Self {
        if zeta == 0 {
            Nonlinearity::Linear
        } else {
            Nonlinearity::Defocusing { p }
        }
    }

    fn exponent(&self) -> Option<f64> {
        match self {
            Nonlinearity::Linear => None,
            Nonlinearity::Defocusing { p } | Nonlinearity::Focusing { p } | Nonlinearity::Absolute { p } => {
                Some(*p)
            }
        }
    }
}

/// Largest stable time step, from the spectral bound of the full discrete
/// operator: `2 / sqrt(4/dr^2 + V_max)` with
/// `V_max = max_j (lambda/r_j^2 + 1/r_j)`.
///
/// This is sharper than `min(dr, 2/sqrt(V_max))`: for d = 4 the potential
/// and stencil contributions are comparable and treating them separately
/// admits unstable steps.
pub fn cfl_limit(grid: &RadialGrid) -> f64 {
    let r0 = grid.r(0);
    let v_max = grid.lambda() / (r0 * r0) + 1.0 / r0;
    let dr = grid.dr();
    2.0 / (4.0 / (dr * dr) + v_max).sqrt()
}

/// Default step `0.8 * cfl_limit`.
pub fn default_dt(grid: &RadialGrid) -> f64 {
    0.8 * cfl_limit(grid)
}

/// Inhomogeneous term in the reduced equation, evaluated per step.
pub trait Source {
    /// Adds `f(r_j, t)` to `accel[j]` for every cell it touches.
    fn add_into(&self, t: f64, grid: &RadialGrid, accel: &mut [f64]);
}

impl<F: Fn(f64, f64) -> f64> Source for F {
    fn add_into(&self, t: f64, grid: &RadialGrid, accel: &mut [f64]) {
        for (j, a) in accel.iter_mut().enumerate() {
            *a += self(grid.r(j), t);
        }
    }
}

/// Borrowed view of the state handed to step visitors.
pub struct StepView<'a> {
    pub grid: &'a RadialGrid,
    pub t: f64,
    pub w: &'a [f64],
    pub wt: &'a [f64],
    pub step: usize,
    pub is_snapshot: bool,
    pub zeta: u8,
    pub p: f64,
}

pub struct EvolveOptions<'a> {
    pub dt: f64,
    pub t_final: f64,
    pub store_every: usize,
    /// Restrict stored snapshots to `t` in this window (first/last snapshots
    /// of the run are not forced in when a window is set).
    pub store_window: Option<(f64, f64)>,
    /// Abort when `max|w|` exceeds this multiple of its initial value.
    pub max_amplification: Option<f64>,
    pub nonlinearity: Option<Nonlinearity>,
    pub source: Option<&'a dyn Source>,
}

impl Default for EvolveOptions<'_> {
    fn default() -> Self {
        Self {
            dt: 0.0,
            t_final: 0.0,
            store_every: 1,
            store_window: None,
            max_amplification: None,
            nonlinearity: None,
            source: None,
        }
    }
}

struct Stepper {
    grid: RadialGrid,
    potential: Vec<f64>,
    /// `r^{-(d-1)(p-1)/2}` per cell when a power nonlinearity is active.
    nl_scale: Vec<f64>,
    nl: Nonlinearity,
}

impl Stepper {
    fn new(grid: RadialGrid, nl: Nonlinearity) -> Self {
        let potential: Vec<f64> = grid
            .radii()
            .map(|r| grid.lambda() / (r * r) + 1.0 / r)
            .collect();
        let nl_scale = match nl.exponent() {
            Some(p) => {
                let e = -(grid.d() as f64 - 1.0) * (p - 1.0) / 2.0;
                grid.radii().map(|r| r.powf(e)).collect()
            }
            None => Vec::new(),
        };
        Self { grid, potential, nl_scale, nl }
    }

    fn accel(&self, t: f64, w: &[f64], out: &mut [f64], source: Option<&dyn Source>) {
        let n = w.len();
        let inv_dr2 = 1.0 / (self.grid.dr() * self.grid.dr());
        // Odd ghost at the origin, Dirichlet zero at the outer edge.
        for j in 0..n {
            let left = if j == 0 { -w[0] } else { w[j - 1] };
            let right = if j + 1 == n { 0.0 } else { w[j + 1] };
            out[j] = (left - 2.0 * w[j] + right) * inv_dr2 - self.potential[j] * w[j];
        }
        match self.nl {
            Nonlinearity::Linear => {}
            Nonlinearity::Defocusing { p } => self.add_power(w, out, p, -1.0, false),
            Nonlinearity::Focusing { p } => self.add_power(w, out, p, 1.0, false),
            Nonlinearity::Absolute { p } => self.add_power(w, out, p, 1.0, true),
        }
        if let Some(src) = source {
            src.add_into(t, &self.grid, out);
        }
    }

    /// Adds `sign * scale_j * |w|^{p-1} w` (or `|w|^p` when `absolute`).
    fn add_power(&self, w: &[f64], out: &mut [f64], p: f64, sign: f64, absolute: bool) {
        let int_p = if (p - p.round()).abs() < 1e-12 && p >= 1.0 && p <= 16.0 {
            Some(p.round() as u32)
        } else {
            None
        };
        for j in 0..w.len() {
            let term = match (int_p, absolute) {
                (Some(k), false) => w[j].abs().powi(k as i32 - 1) * w[j],
                (Some(k), true) => w[j].abs().powi(k as i32),
                (None, false) => w[j].abs().powf(p - 1.0) * w[j],
                (None, true) => w[j].abs().powf(p),
            };
            out[j] += sign * self.nl_scale[j] * term;
        }
    }
}

/// Advances the state and visits every step (including the initial one).
///
/// Returns the final state. The visitor sees `(w, wt)` at integer step times;
/// `is_snapshot` marks the cadence steps selected by `store_every` and the
/// optional window.
pub fn evolve_visit<F>(state: &ReducedState, opts: &EvolveOptions, mut visit: F) -> Result<ReducedState>
where
    F: FnMut(&StepView),
{
    state.validate()?;
    if !(opts.dt > 0.0) && opts.t_final > 0.0 {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", opts.dt)));
    }
    if opts.t_final < 0.0 {
        return Err(Error::InvalidArgument("t_final must be >= 0".into()));
    }
    let nl = opts
        .nonlinearity
        .unwrap_or_else(|| Nonlinearity::from_state(state.zeta, state.p));
    let stepper = Stepper::new(state.grid, nl);
    let n_steps = if opts.t_final > 0.0 {
        (opts.t_final / opts.dt).round().max(1.0) as usize
    } else {
        0
    };
    let store_every = opts.store_every.max(1);
    let n = state.grid.n();

    let mut w = state.w.clone();
    let mut wt = state.wt.clone();
    let mut accel = vec![0.0; n];
    let mut accel_next = vec![0.0; n];
    let w0_max = state.max_abs_w().max(f64::MIN_POSITIVE);

    let in_window = |t: f64| -> bool {
        match opts.store_window {
            Some((lo, hi)) => t >= lo - 1e-12 && t <= hi + 1e-12,
            None => true,
        }
    };
    let is_snapshot = |step: usize, t: f64| -> bool {
        (step % store_every == 0 || step == n_steps) && in_window(t)
    };

    visit(&StepView {
        grid: &state.grid,
        t: state.t,
        w: &w,
        wt: &wt,
        step: 0,
        is_snapshot: is_snapshot(0, state.t),
        zeta: state.zeta,
        p: state.p,
    });

    if n_steps == 0 {
        return Ok(ReducedState { t: state.t, w, wt, ..state.clone() });
    }

    let dt = opts.t_final / n_steps as f64;
    stepper.accel(state.t, &w, &mut accel, opts.source);
    for step in 1..=n_steps {
        let t_new = state.t + step as f64 * dt;
        // Kick-drift-kick; identical orbit to the three-level scheme with the
        // Taylor bootstrap w^1 = w^0 + dt wt^0 + dt^2/2 RHS(w^0).
        for j in 0..n {
            w[j] += dt * wt[j] + 0.5 * dt * dt * accel[j];
        }
        stepper.accel(t_new, &w, &mut accel_next, opts.source);
        for j in 0..n {
            wt[j] += 0.5 * dt * (accel[j] + accel_next[j]);
        }
        std::mem::swap(&mut accel, &mut accel_next);

        let max = w.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        // 1e150 still squares without overflow in the diagnostics; anything
        // beyond it is a runaway mode (CFL violation signal).
        if !max.is_finite() || max > 1e150 {
            return Err(Error::Unstable { t: t_new, step });
        }
        if let Some(cap) = opts.max_amplification {
            if max > cap * w0_max {
                return Err(Error::AmplitudeCap { t: t_new, factor: max / w0_max });
            }
        }

        visit(&StepView {
            grid: &state.grid,
            t: t_new,
            w: &w,
            wt: &wt,
            step,
            is_snapshot: is_snapshot(step, t_new),
            zeta: state.zeta,
            p: state.p,
        });
    }

    Ok(ReducedState {
        t: state.t + opts.t_final,
        w,
        wt,
        ..state.clone()
    })
}

/// One explicit step of size `dt`.
pub fn step(state: &ReducedState, dt: f64) -> Result<ReducedState> {
    if dt > cfl_limit(&state.grid) * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} exceeds the CFL limit {}",
            cfl_limit(&state.grid)
        )));
    }
    let opts = EvolveOptions {
        dt,
        t_final: dt,
        ..Default::default()
    };
    evolve_visit(state, &opts, |_| {})
}

/// Repeated stepping with snapshots every `store_every` steps (the initial
/// and final states are always stored).
pub fn evolve(state: &ReducedState, t_final: f64, dt: f64, store_every: usize) -> Result<Trajectory> {
    let opts = EvolveOptions {
        dt,
        t_final,
        store_every,
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    evolve_visit(state, &opts, |view| {
        if view.is_snapshot {
            snapshots.push(ReducedState {
                grid: *view.grid,
                t: view.t,
                w: view.w.to_vec(),
                wt: view.wt.to_vec(),
                zeta: view.zeta,
                p: view.p,
            });
        }
    })?;
    let traj = Trajectory {
        snapshots,
        store_every,
        dt,
    };
    traj.validate()?;
    Ok(traj)
}

/// `u(0, t)` for `d = 3`: linear extrapolation of `w/r` through the first two
/// cells.
pub fn center_value(state: &ReducedState) -> Result<f64> {
    center_value_of(&state.grid, &state.w)
}

pub(crate) fn center_value_of(grid: &RadialGrid, w: &[f64]) -> Result<f64> {
    if grid.d() != 3 {
        return Err(Error::DimensionNot3(grid.d()));
    }
    let y0 = w[0] / grid.r(0);
    let y1 = w[1] / grid.r(1);
    Ok(1.5 * y0 - 0.5 * y1)
}
