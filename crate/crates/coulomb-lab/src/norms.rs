//! Space-time Lebesgue norms over trajectories and the admissible-exponent
//! region of the radial Strichartz estimates.
//!
//! A pair `(p, q)` is allowed when either
//!
//! ```text
//!   2 < p <= inf,  1/p + d/q >= d/2 - 1,  2/p + (2d-1)/q < d - 3/2,
//! ```
//!
//! or it sits on the closed upper edge
//!
//! ```text
//!   p >= 2(2d+1)/(2d-3),  2/p + (2d-1)/q = d - 3/2.
//! ```
//!
//! In the `(1/p, 1/q)` plane this is a trapezoid; the lower edge (through
//! `A = (0, (d-2)/2d)`), the left edge and the upper edge down to
//! `C = (1/p, 1/p)` with `p = 2(2d+1)/(2d-3)` are included, the rest of the
//! boundary is not. Exponent arithmetic uses exact rationals whenever the
//! inputs are rational, so membership on the equality edge is decidable.

use crate::error::{Error, Result};
use crate::grid::Trajectory;
use num_rational::Rational64;

/// An exponent in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Rational(Rational64),
    /// Floating exponent; equality-edge membership degrades to a 1e-12 band.
    Float(f64),
    Infinity,
}

impl Exponent {
    pub fn rational(num: i64, den: i64) -> Self {
        Exponent::Rational(Rational64::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Exponent::Rational(Rational64::from_integer(n))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Exponent::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Float(x) => *x,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    fn inverse_f64(&self) -> f64 {
        match self {
            Exponent::Infinity => 0.0,
            other => 1.0 / other.as_f64(),
        }
    }

    fn inverse_rational(&self) -> Option<Rational64> {
        match self {
            Exponent::Rational(r) => Some(Rational64::new(*r.denom(), *r.numer())),
            Exponent::Infinity => Some(Rational64::from_integer(0)),
            Exponent::Float(_) => None,
        }
    }

    /// Parses "inf", "14/3", "5", or a float literal.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Exponent::Infinity);
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| bad_exponent(t))?;
            let den: i64 = b.trim().parse().map_err(|_| bad_exponent(t))?;
            if den == 0 {
                return Err(bad_exponent(t));
            }
            return Ok(Exponent::rational(num, den));
        }
        if let Ok(n) = t.parse::<i64>() {
            return Ok(Exponent::integer(n));
        }
        t.parse::<f64>().map(Exponent::Float).map_err(|_| bad_exponent(t))
    }
}

fn bad_exponent(t: &str) -> Error {
    Error::InvalidArgument(format!("cannot parse exponent '{t}'"))
}

/// A candidate space-time pair for dimension `d`.
#[derive(Debug, Clone, Copy)]
pub struct PairPQ {
    pub p: Exponent,
    pub q: Exponent,
    pub d: u32,
}

/// Which branch admitted the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admissibility {
    NotAllowed,
    Interior,
    EqualityEdge,
}

impl Admissibility {
    pub fn allowed(&self) -> bool {
        !matches!(self, Admissibility::NotAllowed)
    }
}

/// Membership in the radial Coulomb allowed region.
pub fn is_coulomb_allowed(pair: &PairPQ) -> Admissibility {
    let d = pair.d as i64;
    if let (Some(ip), Some(iq)) = (pair.p.inverse_rational(), pair.q.inverse_rational()) {
        // Exact arithmetic path.
        let two = Rational64::from_integer(2);
        let dd = Rational64::from_integer(d);
        let lower = ip + dd * iq; // 1/p + d/q
        let upper = two * ip + Rational64::from_integer(2 * d - 1) * iq; // 2/p + (2d-1)/q
        let lower_bound = dd / 2 - 1;
        let upper_bound = Rational64::new(2 * d - 3, 2); // d - 3/2
        let p_gt_2 = ip < Rational64::new(1, 2);
        if p_gt_2 && lower >= lower_bound && upper < upper_bound {
            return Admissibility::Interior;
        }
        // Equality edge: p >= 2(2d+1)/(2d-3) i.e. 1/p <= (2d-3)/(2(2d+1)).
        let p_edge = Rational64::new(2 * d - 3, 2 * (2 * d + 1));
        if ip <= p_edge && upper == upper_bound {
            return Admissibility::EqualityEdge;
        }
        return Admissibility::NotAllowed;
    }
    // Float fallback with a 1e-12 tolerance band on the equality edge.
    let ip = pair.p.inverse_f64();
    let iq = pair.q.inverse_f64();
    let d = d as f64;
    let lower = ip + d * iq;
    let upper = 2.0 * ip + (2.0 * d - 1.0) * iq;
    let upper_bound = d - 1.5;
    if ip < 0.5 - 1e-12 && lower >= d / 2.0 - 1.0 - 1e-12 && upper < upper_bound - 1e-12 {
        return Admissibility::Interior;
    }
    if ip <= (2.0 * d - 3.0) / (2.0 * (2.0 * d + 1.0)) + 1e-12 && (upper - upper_bound).abs() <= 1e-12 {
        return Admissibility::EqualityEdge;
    }
    Admissibility::NotAllowed
}

/// The labeled vertices of the allowed-region figure, as `(1/p, 1/q)`
/// rationals: `A`, `B`, `C` are included in the region, `D`, `E` are not.
pub fn region_vertex(d: u32, label: char) -> Option<PairPQ> {
    let d = d as i64;
    let (ip, iq) = match label.to_ascii_uppercase() {
        'A' => (Rational64::from_integer(0), Rational64::new(d - 2, 2 * d)),
        'B' => (Rational64::from_integer(0), Rational64::new(2 * d - 3, 2 * (2 * d - 1))),
        'C' => {
            let x = Rational64::new(2 * d - 3, 2 * (2 * d + 1));
            (x, x)
        }
        'D' => (Rational64::new(1, 2), Rational64::new(2 * d - 5, 2 * (2 * d - 1))),
        'E' => (Rational64::new(1, 2), Rational64::new(d - 3, 2 * d)),
        _ => return None,
    };
    let to_exp = |inv: Rational64| {
        if inv == Rational64::from_integer(0) {
            Exponent::Infinity
        } else {
            Exponent::Rational(Rational64::new(*inv.denom(), *inv.numer()))
        }
    };
    Some(PairPQ { p: to_exp(ip), q: to_exp(iq), d: d as u32 })
}

/// `L^p_t L^q_x` norm of the lifted field over the stored snapshots
/// (midpoint in radius with weight `sigma r^{d-1} dr`, trapezoid in time,
/// sups for infinite exponents).
pub fn lpq_norm(traj: &Trajectory, pair: &PairPQ) -> Result<f64> {
    if traj.snapshots.is_empty() {
        return Err(Error::InvalidArgument("empty trajectory".into()));
    }
    let p = pair.p.as_f64();
    let q = pair.q.as_f64();
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::ExponentRange(format!("need p, q >= 1, got ({p}, {q})")));
    }
    let grid = traj.grid();
    let dm1 = grid.d() as i32 - 1;
    let sigma = grid.sphere_area();
    let spatial: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let a = grid.reduction_exponent();
            let norm = if q.is_finite() {
                let mut sum = 0.0;
                for (j, r) in grid.radii().enumerate() {
                    let u = s.w[j].abs() * r.powf(-a);
                    sum += u.powf(q) * r.powi(dm1);
                }
                (sum * grid.dr() * sigma).powf(1.0 / q)
            } else {
                grid.radii()
                    .enumerate()
                    .map(|(j, r)| s.w[j].abs() * r.powf(-a))
                    .fold(0.0, f64::max)
            };
            (s.t, norm)
        })
        .collect();
    if !p.is_finite() {
        return Ok(spatial.iter().map(|&(_, n)| n).fold(0.0, f64::max));
    }
    if spatial.len() == 1 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for pair2 in spatial.windows(2) {
        let (t0, n0) = pair2[0];
        let (t1, n1) = pair2[1];
        acc += 0.5 * (t1 - t0) * (n0.powf(p) + n1.powf(p));
    }
    Ok(acc.powf(1.0 / p))
}

/// `sup_j r_j^{(2d-3)/4} |u_j| / ||u||_{H1}`; zero state maps to zero.
pub fn pointwise_decay_check(state: &crate::grid::ReducedState) -> f64 {
    let grid = &state.grid;
    let a = grid.reduction_exponent();
    let e = (2.0 * grid.d() as f64 - 3.0) / 4.0;
    let sup = grid
        .radii()
        .enumerate()
        .map(|(j, r)| r.powf(e) * state.w[j].abs() * r.powf(-a))
        .fold(0.0, f64::max);
    let (_, h1_sq, _) = crate::energy::sobolev_norms_sq(state);
    if h1_sq == 0.0 {
        0.0
    } else {
        sup / h1_sq.sqrt()
    }
}

/// Valid `q` range of the slow-growth experiment: `2(2d-1)/(2d-5) <= q <=
/// 2d/(d-3)` (upper limit infinite in d = 3).
pub fn slow_growth_q_range(d: u32) -> (f64, f64) {
    let dd = d as f64;
    let lo = 2.0 * (2.0 * dd - 1.0) / (2.0 * dd - 5.0);
    let hi = if d == 3 { f64::INFINITY } else { 2.0 * dd / (dd - 3.0) };
    (lo, hi)
}

/// Result of the slow-growth measurement.
#[derive(Debug, Clone)]
pub struct SlowGrowthReport {
    /// `(T, ||u||_{L^2 L^q([0,T])})`
    pub norms: Vec<(f64, f64)>,
    /// fitted exponent of `||u|| ~ T^alpha`
    pub alpha_hat: f64,
}

/// Measures `||u||_{L^2 L^q([0, T])}` at the given horizons and fits the
/// growth exponent by log-log least squares.
pub fn slow_growth_experiment(traj: &Trajectory, q: f64, t_list: &[f64]) -> Result<SlowGrowthReport> {
    let grid = traj.grid();
    let (lo, hi) = slow_growth_q_range(grid.d());
    if !(q >= lo - 1e-12 && q <= hi) {
        return Err(Error::ExponentRange(format!(
            "q = {q} outside the slow-growth range [{lo}, {hi}] for d = {}",
            grid.d()
        )));
    }
    let t_max = t_list.iter().fold(0.0f64, |m, &t| m.max(t));
    if traj.t_last() + 1e-9 < t_max {
        return Err(Error::InvalidArgument(format!(
            "trajectory ends at {} but T list reaches {t_max}",
            traj.t_last()
        )));
    }
    // Cumulative trapezoid of the q-norm to the power 2.
    let a = grid.reduction_exponent();
    let dm1 = grid.d() as i32 - 1;
    let sigma = grid.sphere_area();
    let series: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mut sum = 0.0;
            for (j, r) in grid.radii().enumerate() {
                let u = s.w[j].abs() * r.powf(-a);
                sum += u.powf(q) * r.powi(dm1);
            }
            (s.t, (sum * grid.dr() * sigma).powf(2.0 / q))
        })
        .collect();
    let mut norms = Vec::with_capacity(t_list.len());
    for &t_end in t_list {
        let mut acc = 0.0;
        for w in series.windows(2) {
            let (t0, n0) = w[0];
            let (t1, n1) = w[1];
            if t1 <= t_end + 1e-12 {
                acc += 0.5 * (t1 - t0) * (n0 + n1);
            }
        }
        norms.push((t_end, acc.sqrt()));
    }
    if norms.iter().any(|&(_, n)| n <= 0.0) {
        return Ok(SlowGrowthReport { norms, alpha_hat: 0.0 });
    }
    let n = norms.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in &norms {
        let x = t.ln();
        let y = v.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let alpha_hat = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(SlowGrowthReport { norms, alpha_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_state, DataSpec, Profile};
    use crate::energy::l2_norm_sq;
    use crate::evolver::{default_dt, evolve};
    use crate::grid::{RadialGrid, ReducedState};

    #[test]
    fn vertices_classified_per_figure() {
        for d in [3u32, 4, 5] {
            for (label, expect) in [('A', true), ('B', true), ('C', true), ('D', false), ('E', false)] {
                let v = region_vertex(d, label).unwrap();
                assert_eq!(
                    is_coulomb_allowed(&v).allowed(),
                    expect,
                    "d = {d}, vertex {label}"
                );
            }
            // C sits exactly on the equality edge.
            let c = region_vertex(d, 'C').unwrap();
            assert_eq!(is_coulomb_allowed(&c), Admissibility::EqualityEdge);
        }
    }

    #[test]
    fn point_a_is_p_inf_q_six_in_d3() {
        let a = region_vertex(3, 'A').unwrap();
        assert!(matches!(a.p, Exponent::Infinity));
        assert_eq!(a.q.as_f64(), 6.0);
        // C in d = 3 is p = q = 14/3.
        let c = region_vertex(3, 'C').unwrap();
        assert_eq!(c.p.as_f64(), 14.0 / 3.0);
    }

    #[test]
    fn p_equal_two_never_allowed() {
        for d in [3u32, 4, 5] {
            for q in [2i64, 4, 6, 10, 100] {
                let pair = PairPQ {
                    p: Exponent::integer(2),
                    q: Exponent::integer(q),
                    d,
                };
                assert!(!is_coulomb_allowed(&pair).allowed(), "d={d} q={q}");
            }
            let pair = PairPQ { p: Exponent::integer(2), q: Exponent::Infinity, d };
            assert!(!is_coulomb_allowed(&pair).allowed());
        }
    }

    #[test]
    fn float_fallback_matches_rational() {
        for d in [3u32, 4] {
            for &(p, q) in &[(14.0 / 3.0, 14.0 / 3.0), (5.0, 10.0), (3.0, 20.0), (2.5, 3.0)] {
                let exact = PairPQ {
                    p: Exponent::parse(&format!("{}", p)).unwrap(),
                    q: Exponent::parse(&format!("{}", q)).unwrap(),
                    d,
                };
                let float = PairPQ {
                    p: Exponent::Float(p),
                    q: Exponent::Float(q),
                    d,
                };
                assert_eq!(
                    is_coulomb_allowed(&exact).allowed(),
                    is_coulomb_allowed(&float).allowed(),
                    "d={d} ({p},{q})"
                );
            }
        }
        // The equality edge is decidable for rationals.
        let c = PairPQ {
            p: Exponent::rational(14, 3),
            q: Exponent::rational(14, 3),
            d: 3,
        };
        assert_eq!(is_coulomb_allowed(&c), Admissibility::EqualityEdge);
    }

    #[test]
    fn exponent_parsing() {
        assert!(matches!(Exponent::parse("inf").unwrap(), Exponent::Infinity));
        assert_eq!(Exponent::parse("14/3").unwrap().as_f64(), 14.0 / 3.0);
        assert_eq!(Exponent::parse("5").unwrap().as_f64(), 5.0);
        assert!(Exponent::parse("x").is_err());
        assert!(Exponent::parse("1/0").is_err());
    }

    fn shell_traj(t_final: f64) -> Trajectory {
        let grid = RadialGrid::new(3, 0.01, ((4.0 + t_final + 1.0) / 0.01) as usize).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        evolve(&state, t_final, default_dt(&grid), 25).unwrap()
    }

    #[test]
    fn lpq_zero_and_single_snapshot() {
        let grid = RadialGrid::new(3, 0.05, 64).unwrap();
        let zero = ReducedState::zero(grid);
        let traj = evolve(&zero, 2.0, default_dt(&grid), 8).unwrap();
        let pair = PairPQ { p: Exponent::integer(5), q: Exponent::integer(10), d: 3 };
        assert_eq!(lpq_norm(&traj, &pair).unwrap(), 0.0);
    }

    #[test]
    fn lpq_p_infinity_on_static_snapshot() {
        // A single stored snapshot with p = inf equals the snapshot q-norm.
        let grid = RadialGrid::new(3, 0.005, 1000).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        let traj = Trajectory { snapshots: vec![state.clone()], store_every: 1, dt: 0.0 };
        let pair = PairPQ { p: Exponent::Infinity, q: Exponent::integer(4), d: 3 };
        let got = lpq_norm(&traj, &pair).unwrap();
        // Independent quadrature of |u|^4.
        let u = state.u();
        let mut sum = 0.0;
        for (j, r) in grid.radii().enumerate() {
            sum += u[j].powi(4) * r * r;
        }
        let expect = (sum * grid.dr() * grid.sphere_area()).powf(0.25);
        assert!((got - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn lpq_q2_pinf_matches_ledger_l2() {
        let traj = shell_traj(4.0);
        let pair = PairPQ { p: Exponent::Infinity, q: Exponent::integer(2), d: 3 };
        let got = lpq_norm(&traj, &pair).unwrap();
        let expect = traj
            .snapshots
            .iter()
            .map(|s| l2_norm_sq(s).sqrt())
            .fold(0.0, f64::max);
        assert!((got - expect).abs() <= 1e-12 * expect, "{got} vs {expect}");
    }

    #[test]
    fn lpq_norm_is_homogeneous() {
        let traj = shell_traj(2.0);
        let mut scaled = traj.clone();
        for s in &mut scaled.snapshots {
            for v in s.w.iter_mut() {
                *v *= -3.5;
            }
        }
        let pair = PairPQ { p: Exponent::integer(5), q: Exponent::integer(10), d: 3 };
        let n1 = lpq_norm(&traj, &pair).unwrap();
        let n2 = lpq_norm(&scaled, &pair).unwrap();
        assert!((n2 - 3.5 * n1).abs() <= 1e-12 * n2);
    }

    #[test]
    fn pointwise_decay_bounded_and_scale_invariant() {
        let traj = shell_traj(6.0);
        for s in &traj.snapshots {
            let ratio = pointwise_decay_check(s);
            assert!(ratio <= 3.0, "t = {}: ratio {ratio}", s.t);
        }
        let s = &traj.snapshots[3];
        let mut doubled = s.clone();
        for v in doubled.w.iter_mut() {
            *v *= 2.0;
        }
        for v in doubled.wt.iter_mut() {
            *v *= 2.0;
        }
        let r1 = pointwise_decay_check(s);
        let r2 = pointwise_decay_check(&doubled);
        assert!((r1 - r2).abs() <= 1e-12 * r1);
        assert_eq!(pointwise_decay_check(&ReducedState::zero(s.grid)), 0.0);
    }

    #[test]
    fn radial_sobolev_constant_along_trajectory() {
        // ||u||_{L^{2+4/(2d-3)}} <= 2 ||u||_{H1} measured across snapshots.
        let traj = shell_traj(6.0);
        let q = 2.0 + 4.0 / 3.0;
        for s in &traj.snapshots {
            let grid = &s.grid;
            let a = grid.reduction_exponent();
            let mut sum = 0.0;
            for (j, r) in grid.radii().enumerate() {
                let u = s.w[j].abs() * r.powf(-a);
                sum += u.powf(q) * r * r;
            }
            let lq = (sum * grid.dr() * grid.sphere_area()).powf(1.0 / q);
            let (_, h1_sq, _) = crate::energy::sobolev_norms_sq(s);
            assert!(lq <= 2.0 * h1_sq.sqrt(), "t = {}", s.t);
        }
    }

    #[test]
    fn slow_growth_range_is_enforced() {
        let traj = shell_traj(2.0);
        assert!(slow_growth_experiment(&traj, 4.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn slow_growth_exponent_and_saturation_d4() {
        // d = 4 shell: the L^2 L^q norm at the bottom of the slow-growth
        // range creeps up slower than any fixed power (measured exponent
        // well below 0.25), while the norm of the special self-dual pair
        // p = q = 2 + 8/(2d-3) saturates outright.
        let grid = RadialGrid::new(4, 0.02, 8300).unwrap();
        let spec = DataSpec::position(Profile::GaussianShell {
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        });
        let state = make_state(&spec, grid, 0, 0.0).unwrap();
        let traj = evolve(&state, 160.0, default_dt(&grid), 100).unwrap();
        let rep = slow_growth_experiment(&traj, 14.0 / 3.0, &[10.0, 20.0, 40.0, 80.0]).unwrap();
        assert!(rep.alpha_hat <= 0.25, "alpha_hat = {}", rep.alpha_hat);

        let q = 2.0 + 8.0 / 5.0;
        let pair = PairPQ {
            p: Exponent::Float(q),
            q: Exponent::Float(q),
            d: 4,
        };
        assert!(is_coulomb_allowed(&pair).allowed());
        let take = |t_end: f64| {
            let cut = Trajectory {
                snapshots: traj.snapshots.iter().filter(|s| s.t <= t_end + 1e-9).cloned().collect(),
                store_every: traj.store_every,
                dt: traj.dt,
            };
            lpq_norm(&cut, &pair).unwrap()
        };
        let half = take(80.0);
        let full = take(160.0);
        assert!(full <= 1.05 * half, "norm grew {half} -> {full}");
    }

    #[test]
    fn slow_growth_zero_data() {
        let grid = RadialGrid::new(4, 0.05, 200).unwrap();
        let zero = ReducedState::zero(grid);
        let traj = evolve(&zero, 4.0, default_dt(&grid), 8).unwrap();
        let rep = slow_growth_experiment(&traj, 14.0 / 3.0, &[2.0, 4.0]).unwrap();
        assert!(rep.norms.iter().all(|&(_, n)| n == 0.0));
        assert_eq!(rep.alpha_hat, 0.0);
    }
}
