//! Inward/outward energy ledger.
//!
//! Computes the energy density `e`, the non-directional density `e'`, the
//! directional densities `e_-` and `e_+` built from `L_+- u`, the Morawetz
//! density `M`, the energies they integrate to, energy fluxes through
//! truncated light cones, and the identity checks that tie them together:
//!
//! * `E_-(t) + E_+(t) = E` (globally, by the Wronskian-free cancellation of
//!   the `L u` cross terms),
//! * the cone law `E_-(0, s-t0; t0) = Int_K M + Q_-^-(s) [+ pi Int u(0,t)^2]`,
//! * the truncated Morawetz identity `E_-(0) - E_-(T) = Int_0^T Int M [+ ...]`,
//! * the half-energy limits and the L2-level balance.
//!
//! Quadrature is midpoint in radius with weight `sigma_{d-1} r^{d-1} dr` and
//! trapezoid in time. The two space-time accumulators (Morawetz integral and
//! the d=3 center term) can be updated every step during an evolution, which
//! is far more accurate than summing snapshots.

use crate::error::{Error, Result};
use crate::evolver::{center_value_of, StepView};
use crate::grid::{RadialGrid, ReducedState, Trajectory};
use crate::sampler::TrajSampler;

/// Pointwise densities at one time.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub t: f64,
    pub e: Vec<f64>,
    pub eprime: Vec<f64>,
    pub eminus: Vec<f64>,
    pub eplus: Vec<f64>,
    pub m: Vec<f64>,
    /// `u(0, t)` by extrapolation; `None` for d >= 4.
    pub u0: Option<f64>,
}

/// `mu = min(1/2, (d-1)(p-1)/4)` in the pointwise bound `M >= mu e'/r`.
pub fn mu_constant(d: u32, zeta: u8, p: f64) -> f64 {
    if zeta == 0 {
        0.5
    } else {
        0.5f64.min((d as f64 - 1.0) * (p - 1.0) / 4.0)
    }
}

fn radial_derivative(w: &[f64], dr: f64) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|j| {
            let left = if j == 0 { -w[0] } else { w[j - 1] };
            let right = if j + 1 == n { 0.0 } else { w[j + 1] };
            (right - left) / (2.0 * dr)
        })
        .collect()
}

/// `L u`, `L_+ u`, `L_- u` at the grid cells.
///
/// In reduced variables `L u = r^{-(d-1)/2} w_r` and
/// `L_+- u = r^{-(d-1)/2} (w_r +- w_t)`.
pub fn l_operators(state: &ReducedState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let grid = &state.grid;
    let a = grid.reduction_exponent();
    let wr = radial_derivative(&state.w, grid.dr());
    let mut lu = Vec::with_capacity(grid.n());
    let mut lplus = Vec::with_capacity(grid.n());
    let mut lminus = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let s = grid.r(j).powf(-a);
        lu.push(s * wr[j]);
        lplus.push(s * (wr[j] + state.wt[j]));
        lminus.push(s * (wr[j] - state.wt[j]));
    }
    (lu, lplus, lminus)
}

pub(crate) fn densities_of(grid: &RadialGrid, t: f64, w: &[f64], wt: &[f64], zeta: u8, p: f64) -> DensityField {
    let n = grid.n();
    let a = grid.reduction_exponent();
    let lam = grid.lambda();
    let wr = radial_derivative(w, grid.dr());
    let mut e = vec![0.0; n];
    let mut eprime = vec![0.0; n];
    let mut eminus = vec![0.0; n];
    let mut eplus = vec![0.0; n];
    let mut m = vec![0.0; n];
    let nl_coef = if zeta == 1 {
        (grid.d() as f64 - 1.0) * (p - 1.0) / (4.0 * (p + 1.0))
    } else {
        0.0
    };
    for j in 0..n {
        let r = grid.r(j);
        let scale = r.powf(-a);
        let u = scale * w[j];
        let ut = scale * wt[j];
        let ur = scale * (wr[j] - a * w[j] / r);
        let lu = scale * wr[j];
        let lp = lu + ut;
        let lm = lu - ut;
        let u2 = u * u;
        let pot = if zeta == 1 { u.abs().powf(p + 1.0) } else { 0.0 };
        let ep = 0.5 * lam * u2 / (r * r) + 0.5 * u2 / r + if zeta == 1 { pot / (p + 1.0) } else { 0.0 };
        e[j] = 0.5 * ur * ur + 0.5 * ut * ut + 0.5 * u2 / r + if zeta == 1 { pot / (p + 1.0) } else { 0.0 };
        eprime[j] = ep;
        eminus[j] = 0.25 * lp * lp + 0.5 * ep;
        eplus[j] = 0.25 * lm * lm + 0.5 * ep;
        m[j] = 0.5 * lam * u2 / (r * r * r) + 0.25 * u2 / (r * r) + nl_coef * pot / r;
    }
    let u0 = if grid.d() == 3 {
        center_value_of(grid, w).ok()
    } else {
        None
    };
    DensityField { t, e, eprime, eminus, eplus, m, u0 }
}

/// All energy densities of a state.
pub fn densities(state: &ReducedState) -> DensityField {
    densities_of(&state.grid, state.t, &state.w, &state.wt, state.zeta, state.p)
}

/// `sigma_{d-1} Int_{lo < r < hi} dens r^{d-1} dr` by the midpoint rule.
pub fn integrate_density(grid: &RadialGrid, dens: &[f64], lo: f64, hi: f64) -> f64 {
    let dm1 = grid.d() as i32 - 1;
    let mut sum = 0.0;
    for j in 0..grid.n() {
        let r = grid.r(j);
        if r >= lo && r < hi {
            sum += dens[j] * r.powi(dm1);
        }
    }
    sum * grid.dr() * grid.sphere_area()
}

/// Total, inward and outward energies plus the integral of `e'`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub e_total: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub eprime_integral: f64,
}

pub fn total_energies(state: &ReducedState) -> EnergyBreakdown {
    let dens = densities(state);
    let grid = &state.grid;
    EnergyBreakdown {
        e_total: integrate_density(grid, &dens.e, 0.0, f64::INFINITY),
        e_minus: integrate_density(grid, &dens.eminus, 0.0, f64::INFINITY),
        e_plus: integrate_density(grid, &dens.eplus, 0.0, f64::INFINITY),
        eprime_integral: integrate_density(grid, &dens.eprime, 0.0, f64::INFINITY),
    }
}

/// `Int |u(t)|^2 dx = sigma Int w^2 dr`.
pub fn l2_norm_sq(state: &ReducedState) -> f64 {
    state.w.iter().map(|w| w * w).sum::<f64>() * state.grid.dr() * state.grid.sphere_area()
}

/// Squared norms `(||u_t||^2, ||u||_{H1}^2, ||u||_{dotH1}^2)` where the middle
/// norm carries the potential term `|u|^2/|x|`.
pub fn sobolev_norms_sq(state: &ReducedState) -> (f64, f64, f64) {
    let grid = &state.grid;
    let a = grid.reduction_exponent();
    let dr = grid.dr();
    let wr = radial_derivative(&state.w, dr);
    let mut ut2 = 0.0;
    let mut grad2 = 0.0;
    let mut pot = 0.0;
    for j in 0..grid.n() {
        let r = grid.r(j);
        let ur_red = wr[j] - a * state.w[j] / r; // r^{(d-1)/2} u_r
        ut2 += state.wt[j] * state.wt[j];
        grad2 += ur_red * ur_red;
        pot += state.w[j] * state.w[j] / r;
    }
    let s = dr * grid.sphere_area();
    (ut2 * s, (grad2 + pot) * s, grad2 * s)
}

/// Both sides of the annulus identity
/// `Int_{a<|x|<b} (|Lu|^2 + lambda |u|^2/|x|^2) = Int |u_r|^2
///  + (d-1)/(2b) Int_{|x|=b} |u|^2 - (d-1)/(2a) Int_{|x|=a} |u|^2`;
/// surface terms are dropped at `a = 0` and `b >= r_max`.
pub fn lemma_l_check(state: &ReducedState, a: f64, b: f64) -> Result<(f64, f64)> {
    let grid = &state.grid;
    if !(0.0..grid.r_max() + grid.dr()).contains(&a) || b <= a {
        return Err(Error::InvalidArgument(format!("need 0 <= a < b, got a = {a}, b = {b}")));
    }
    let red = grid.reduction_exponent();
    let lam = grid.lambda();
    let dr = grid.dr();
    let wr = radial_derivative(&state.w, dr);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 0..grid.n() {
        let r = grid.r(j);
        if r < a || r >= b {
            continue;
        }
        let w = state.w[j];
        lhs += wr[j] * wr[j] + lam * w * w / (r * r);
        let ur_red = wr[j] - red * w / r;
        rhs += ur_red * ur_red;
    }
    let sigma = grid.sphere_area();
    lhs *= dr * sigma;
    rhs *= dr * sigma;
    let dm1 = grid.d() as f64 - 1.0;
    let sampler_u_sq = |r: f64| -> f64 {
        // |u(r)|^2 r^{d-1} = w(r)^2 in reduced form; linear interpolation.
        let x = r / dr - 0.5;
        let j = (x.floor().max(0.0) as usize).min(grid.n() - 1);
        let j1 = (j + 1).min(grid.n() - 1);
        let f = (x - j as f64).clamp(0.0, 1.0);
        let w = state.w[j] * (1.0 - f) + state.w[j1] * f;
        w * w
    };
    if b < grid.r_max() {
        rhs += sigma * dm1 / (2.0 * b) * sampler_u_sq(b);
    }
    if a > 0.0 {
        rhs -= sigma * dm1 / (2.0 * a) * sampler_u_sq(a);
    }
    Ok((lhs, rhs))
}

/// Fraction of the total energy inside the shell `inner < |x| < outer`.
pub fn shell_fraction(state: &ReducedState, inner: f64, outer: f64) -> Result<f64> {
    if !(inner >= 0.0 && outer > inner) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= inner < outer, got {inner}, {outer}"
        )));
    }
    let dens = densities(state);
    let total = integrate_density(&state.grid, &dens.e, 0.0, f64::INFINITY);
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(integrate_density(&state.grid, &dens.e, inner, outer) / total)
}

/// One ledger row; the accumulator columns integrate from the start of the
/// run up to `t`.
#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    pub t: f64,
    pub e_total: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub eprime_integral: f64,
    pub center_u0: f64,
    /// `pi Int_0^t |u(0,s)|^2 ds` (d = 3; zero otherwise).
    pub center_integral_accum: f64,
    /// `Int_0^t Int M dx ds`.
    pub morawetz_accum: f64,
    pub shell_frac_inner: f64,
    pub shell_frac_outer: f64,
}

/// Step visitor that accumulates the space-time integrals every step and
/// emits an [`EnergyReport`] row at every snapshot step.
pub struct Ledger {
    grid: RadialGrid,
    /// fraction-of-t radius for the inner shell column
    pub shell_inner_factor: f64,
    /// weights sigma r^{d-1} dr per cell for the linear part of M
    m_weight: Vec<f64>,
    /// weights for the nonlinear part of M
    m_weight_nl: Vec<f64>,
    p: f64,
    zeta: u8,
    morawetz_accum: f64,
    center_accum: f64,
    last_m: Option<(f64, f64)>,
    last_c: Option<(f64, f64)>,
    pub rows: Vec<EnergyReport>,
}

impl Ledger {
    pub fn new(grid: RadialGrid, zeta: u8, p: f64) -> Self {
        let lam = grid.lambda();
        let sigma = grid.sphere_area();
        // The density M is c(r) u^2 (+ nonlinear part); with u^2 r^{d-1} = w^2
        // the integral weight per w_j^2 is just c(r_j) dr sigma.
        let m_weight: Vec<f64> = grid
            .radii()
            .map(|r| (0.5 * lam / (r * r * r) + 0.25 / (r * r)) * grid.dr() * sigma)
            .collect();
        // |u|^{p+1}/r weighted: |u|^{p+1} r^{d-1} = |w|^{p+1} r^{-(d-1)(p-1)/2}
        let coef = (grid.d() as f64 - 1.0) * (p - 1.0) / (4.0 * (p + 1.0));
        let nl_e = -(grid.d() as f64 - 1.0) * (p - 1.0) / 2.0;
        let m_weight_nl: Vec<f64> = if zeta == 1 {
            grid.radii()
                .map(|r| coef * r.powf(nl_e) / r * grid.dr() * sigma)
                .collect()
        } else {
            Vec::new()
        };
        Self {
            grid,
            shell_inner_factor: 0.5,
            m_weight,
            m_weight_nl,
            p,
            zeta,
            morawetz_accum: 0.0,
            center_accum: 0.0,
            last_m: None,
            last_c: None,
            rows: Vec::new(),
        }
    }

    /// In reduced variables `|u|^{p+1} r^{d-1} = |w|^{p+1} r^{e}` with
    /// `e = -(d-1)(p-1)/2`; `m_weight_nl` already carries `r^e / r`.
    fn morawetz_integral(&self, w: &[f64]) -> f64 {
        let mut sum = 0.0;
        for j in 0..w.len() {
            sum += self.m_weight[j] * w[j] * w[j];
        }
        if self.zeta == 1 {
            for j in 0..w.len() {
                sum += self.m_weight_nl[j] * w[j].abs().powf(self.p + 1.0);
            }
        }
        sum
    }

    pub fn observe(&mut self, view: &StepView) {
        // Trapezoid-in-time accumulators, updated on every step.
        let m_now = self.morawetz_integral(view.w);
        if let Some((t_prev, m_prev)) = self.last_m {
            self.morawetz_accum += 0.5 * (view.t - t_prev) * (m_prev + m_now);
        }
        self.last_m = Some((view.t, m_now));
        let u0 = if self.grid.d() == 3 {
            center_value_of(&self.grid, view.w).unwrap_or(0.0)
        } else {
            0.0
        };
        let c_now = std::f64::consts::PI * u0 * u0;
        if let Some((t_prev, c_prev)) = self.last_c {
            self.center_accum += 0.5 * (view.t - t_prev) * (c_prev + c_now);
        }
        self.last_c = Some((view.t, c_now));

        if view.is_snapshot {
            let dens = densities_of(&self.grid, view.t, view.w, view.wt, view.zeta, view.p);
            let e_total = integrate_density(&self.grid, &dens.e, 0.0, f64::INFINITY);
            let (inner_frac, outer_frac) = if e_total > 0.0 && view.t > 1.0 {
                let inner = integrate_density(&self.grid, &dens.e, 0.0, self.shell_inner_factor * view.t) / e_total;
                let lo = (view.t - view.t.ln() * view.t.ln()).max(0.0);
                let outer = integrate_density(&self.grid, &dens.e, lo, view.t) / e_total;
                (inner, outer)
            } else {
                (0.0, 0.0)
            };
            self.rows.push(EnergyReport {
                t: view.t,
                e_total,
                e_minus: integrate_density(&self.grid, &dens.eminus, 0.0, f64::INFINITY),
                e_plus: integrate_density(&self.grid, &dens.eplus, 0.0, f64::INFINITY),
                eprime_integral: integrate_density(&self.grid, &dens.eprime, 0.0, f64::INFINITY),
                center_u0: u0,
                center_integral_accum: self.center_accum,
                morawetz_accum: self.morawetz_accum,
                shell_frac_inner: inner_frac,
                shell_frac_outer: outer_frac,
            });
        }
    }
}

/// Ledger rows computed from stored snapshots only (accumulators by trapezoid
/// over the snapshot cadence).
pub fn ledger_rows_from_trajectory(traj: &Trajectory) -> Vec<EnergyReport> {
    let s0 = &traj.snapshots[0];
    let mut ledger = Ledger::new(s0.grid, s0.zeta, s0.p);
    for (i, s) in traj.snapshots.iter().enumerate() {
        ledger.observe(&StepView {
            grid: &s.grid,
            t: s.t,
            w: &s.w,
            wt: &s.wt,
            step: i,
            is_snapshot: true,
            zeta: s.zeta,
            p: s.p,
        });
    }
    ledger.rows
}

/// Truncated light cone used by the flux integrals.
#[derive(Debug, Clone, Copy)]
pub enum Cone {
    /// `|x| + t = s`
    Backward { s: f64 },
    /// `t - |x| = tau`
    Forward { tau: f64 },
}

/// Which of the four flux integrals `Q_-^-, Q_+^-, Q_-^+, Q_+^+` to compute.
/// The first sign is the energy direction, the second the cone direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    InwardBackward,
    OutwardBackward,
    InwardForward,
    OutwardForward,
}

/// Energy flux through a truncated cone between times `t1 < t2`.
///
/// The `1/sqrt(2)` surface factor of the definitions cancels against the
/// line-element of the characteristic, leaving
/// `sigma Int e' r^{d-1} dt` (same-direction flux) or
/// `sigma/2 Int |L_-+ u|^2 r^{d-1} dt` (opposite-direction flux).
pub fn cone_flux(traj: &Trajectory, cone: Cone, t1: f64, t2: f64, kind: FluxKind) -> Result<f64> {
    match (cone, kind) {
        (Cone::Backward { .. }, FluxKind::InwardBackward | FluxKind::OutwardBackward) => {}
        (Cone::Forward { .. }, FluxKind::InwardForward | FluxKind::OutwardForward) => {}
        _ => {
            return Err(Error::InvalidArgument(
                "flux kind does not match the cone direction".into(),
            ))
        }
    }
    if t2 <= t1 {
        return Err(Error::InvalidArgument("need t1 < t2".into()));
    }
    if t2 - t1 < 2.0 * traj.cadence() {
        return Err(Error::InvalidArgument(
            "cone must span at least two snapshot intervals".into(),
        ));
    }
    let grid = traj.grid();
    let state0 = &traj.snapshots[0];
    let sampler = TrajSampler::new(traj)?;
    let a = grid.reduction_exponent();
    let lam = grid.lambda();
    let dm1 = grid.d() as i32 - 1;
    let r_of_t = |t: f64| -> f64 {
        match cone {
            Cone::Backward { s } => s - t,
            Cone::Forward { tau } => t - tau,
        }
    };
    // Resolve at least the snapshot cadence, at least 64 samples.
    let n_samples = (((t2 - t1) / traj.cadence()).ceil() as usize * 2).max(64);
    let dt = (t2 - t1) / n_samples as f64;
    let mut sum = 0.0;
    for i in 0..=n_samples {
        let t = t1 + i as f64 * dt;
        let r = r_of_t(t);
        if r <= 0.0 {
            continue;
        }
        let smp = sampler.sample(r, t)?;
        let scale = r.powf(-a);
        let integrand = match kind {
            FluxKind::InwardBackward | FluxKind::OutwardForward => {
                // e' along the characteristic
                let u = scale * smp.w;
                let u2 = u * u;
                let pot = if state0.zeta == 1 {
                    u.abs().powf(state0.p + 1.0) / (state0.p + 1.0)
                } else {
                    0.0
                };
                0.5 * lam * u2 / (r * r) + 0.5 * u2 / r + pot
            }
            FluxKind::OutwardBackward => {
                let lm = scale * (smp.wr - smp.wt);
                0.5 * lm * lm
            }
            FluxKind::InwardForward => {
                let lp = scale * (smp.wr + smp.wt);
                0.5 * lp * lp
            }
        };
        let weight = if i == 0 || i == n_samples { 0.5 } else { 1.0 };
        sum += weight * integrand * r.powi(dm1);
    }
    Ok(sum * dt * grid.sphere_area())
}

/// Interpolates a full state at time `t` from the two bracketing snapshots.
fn state_at(traj: &Trajectory, t: f64) -> Result<ReducedState> {
    let snaps = &traj.snapshots;
    if t < snaps[0].t - 1e-9 || t > snaps[snaps.len() - 1].t + 1e-9 {
        return Err(Error::OutsideWindow { r: f64::NAN, t });
    }
    let k = snaps.partition_point(|s| s.t <= t).saturating_sub(1).min(snaps.len() - 2);
    let s0 = &snaps[k];
    let s1 = &snaps[k + 1];
    let f = ((t - s0.t) / (s1.t - s0.t)).clamp(0.0, 1.0);
    let w = s0.w.iter().zip(&s1.w).map(|(a, b)| a * (1.0 - f) + b * f).collect();
    let wt = s0.wt.iter().zip(&s1.wt).map(|(a, b)| a * (1.0 - f) + b * f).collect();
    Ok(ReducedState { grid: s0.grid, t, w, wt, zeta: s0.zeta, p: s0.p })
}

/// Residual of the cone law on the backward cone `K^-(s; t0, s)`, relative to
/// the total energy:
///
/// `E_-(0, s-t0; t0) = Int_K M + Q_-^-(s; t0, s) [+ pi Int_{t0}^s u(0,t)^2]`.
pub fn cone_law_check(traj: &Trajectory, s: f64, t0: f64) -> Result<f64> {
    if t0 >= s {
        return Err(Error::InvalidArgument("need t0 < s (apex after base)".into()));
    }
    let base = state_at(traj, t0)?;
    let dens0 = densities(&base);
    let grid = traj.grid();
    let lhs = integrate_density(grid, &dens0.eminus, 0.0, s - t0);
    let e_total = integrate_density(grid, &dens0.e, 0.0, f64::INFINITY);
    if e_total == 0.0 {
        return Ok(0.0);
    }

    // Interior Morawetz integral over the shrinking balls, trapezoid in t.
    let n_t = (((s - t0) / traj.cadence()).ceil() as usize * 2).max(32);
    let dt = (s - t0) / n_t as f64;
    let mut m_int = 0.0;
    let mut center = 0.0;
    for i in 0..=n_t {
        let t = t0 + i as f64 * dt;
        let radius = s - t;
        let weight = if i == 0 || i == n_t { 0.5 } else { 1.0 };
        let st = state_at(traj, t)?;
        let dens = densities(&st);
        if radius > 0.0 {
            m_int += weight * integrate_density(grid, &dens.m, 0.0, radius);
        }
        if grid.d() == 3 {
            let u0 = dens.u0.unwrap_or(0.0);
            center += weight * std::f64::consts::PI * u0 * u0;
        }
    }
    m_int *= dt;
    center *= dt;
    let flux = cone_flux(traj, Cone::Backward { s }, t0, s - 2.0 * traj.cadence(), FluxKind::InwardBackward)?;
    Ok((lhs - (m_int + flux + center)).abs() / e_total)
}

/// Result of the truncated Morawetz identity over a ledger run.
#[derive(Debug, Clone, Copy)]
pub struct MorawetzIdentity {
    /// `Int_0^T Int M dx dt [+ pi Int_0^T |u(0,t)|^2 dt]`
    pub lhs: f64,
    pub e_minus_start: f64,
    pub e_minus_end: f64,
    /// `|lhs + E_-(T) - E_-(0)| / E`
    pub defect: f64,
}

/// Checks `E_-(0) - E_-(T) = Int_0^T Int M [+ center term]` on ledger rows.
pub fn morawetz_identity_from_rows(rows: &[EnergyReport]) -> Result<MorawetzIdentity> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("need at least two ledger rows".into()));
    }
    let first = rows[0];
    let last = rows[rows.len() - 1];
    let lhs = (last.morawetz_accum - first.morawetz_accum)
        + (last.center_integral_accum - first.center_integral_accum);
    let e = first.e_total;
    if e == 0.0 {
        return Ok(MorawetzIdentity { lhs: 0.0, e_minus_start: 0.0, e_minus_end: 0.0, defect: 0.0 });
    }
    Ok(MorawetzIdentity {
        lhs,
        e_minus_start: first.e_minus,
        e_minus_end: last.e_minus,
        defect: (lhs + last.e_minus - first.e_minus).abs() / e,
    })
}

/// Snapshot-based variant of [`morawetz_identity_from_rows`].
pub fn morawetz_identity_check(traj: &Trajectory) -> Result<MorawetzIdentity> {
    morawetz_identity_from_rows(&ledger_rows_from_trajectory(traj))
}

/// Curves `(t, ||u_t||^2, ||u||_{H1}^2, ||u||_{dotH1}^2)` and their maximum
/// relative deviation from the conserved energy over the final quarter.
pub struct HalfEnergyCurve {
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub energy: f64,
    pub max_rel_deviation_final_quarter: f64,
}

pub fn half_energy_check(traj: &Trajectory) -> Result<HalfEnergyCurve> {
    let first = &traj.snapshots[0];
    if first.zeta != 0 {
        return Err(Error::InvalidArgument("half-energy limits hold for the linear flow".into()));
    }
    let energy = total_energies(first).e_total;
    let rows: Vec<(f64, f64, f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let (ut2, h1, dh1) = sobolev_norms_sq(s);
            (s.t, ut2, h1, dh1)
        })
        .collect();
    let t_last = traj.t_last();
    let t_from = traj.t_first() + 0.75 * (t_last - traj.t_first());
    let mut worst = 0.0f64;
    for &(t, ut2, h1, dh1) in &rows {
        if t >= t_from && energy > 0.0 {
            for v in [ut2, h1, dh1] {
                worst = worst.max((v - energy).abs() / energy);
            }
        }
    }
    Ok(HalfEnergyCurve {
        rows,
        energy,
        max_rel_deviation_final_quarter: worst,
    })
}

/// Least-squares slope of `log E_-(t)` against `log t` over `t in [T/4, T]`.
///
/// `kappa` only selects the reporting threshold conventions of the caller;
/// the fit itself is parameter-free. Aborts when the inward energy falls
/// below `1e-10 E` (quadrature noise floor).
pub fn weighted_morawetz_fit(rows: &[EnergyReport], _kappa: f64) -> Result<f64> {
    if rows.len() < 4 {
        return Err(Error::FitAborted("need at least 4 rows".into()));
    }
    let e = rows[0].e_total;
    if e <= 0.0 {
        return Err(Error::FitAborted("zero-energy trajectory".into()));
    }
    let t_end = rows[rows.len() - 1].t;
    let t_from = 0.25 * t_end;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= t_from && r.t > 0.0)
        .map(|r| (r.t, r.e_minus))
        .collect();
    if pts.len() < 2 {
        return Err(Error::FitAborted("not enough points in the fit window".into()));
    }
    if pts.iter().any(|&(_, em)| em < 1e-10 * e) {
        return Err(Error::FitAborted("inward energy below the noise floor 1e-10 E".into()));
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, em) in &pts {
        let x = t.ln();
        let y = em.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}
