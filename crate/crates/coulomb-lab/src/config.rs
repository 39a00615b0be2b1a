//! Flat `key = value` scenario configuration with `[section]` headers.
//!
//! The format is line-oriented and diff-friendly: blank lines and `#`
//! comments are ignored, sections group keys, and overrides are addressed as
//! `section.key=value`. Parse errors carry the line number.

use crate::data::{DataSpec, Profile};
use crate::error::{Error, Result};
use crate::evolver::cfl_limit;
use crate::grid::RadialGrid;
use std::collections::BTreeMap;

/// Parsed scenario: grid, time stepping, data, nonlinearity, diagnostics.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub d: u32,
    pub dr: f64,
    pub n: usize,
    pub t_final: f64,
    /// explicit step; `None` means `cfl * cfl_limit`
    pub dt: Option<f64>,
    pub cfl: f64,
    pub store_every: usize,
    pub store_window: Option<(f64, f64)>,
    pub u0: Option<Profile>,
    pub u1: Option<Profile>,
    /// replace the velocity profile by `+w_r` (purely ingoing shell)
    pub ingoing: bool,
    pub zeta: u8,
    pub p: f64,
    pub shell_inner_factor: f64,
    pub out_dir: String,
    /// every key as parsed, echoed into CSV metadata
    pub raw: BTreeMap<String, String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            d: 3,
            dr: 0.01,
            n: 4700,
            t_final: 40.0,
            dt: None,
            cfl: 0.8,
            store_every: 100,
            store_window: None,
            u0: Some(Profile::GaussianShell {
                center: 2.0,
                width: 0.2,
                amplitude: 1.0,
            }),
            u1: None,
            ingoing: false,
            zeta: 0,
            p: 3.0,
            shell_inner_factor: 0.5,
            out_dir: "out".into(),
            raw: BTreeMap::new(),
        }
    }
}

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::ConfigParse {
            line,
            message: format!("expected a boolean, got '{v}'"),
        }),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| Error::ConfigParse {
        line,
        message: format!("cannot parse number '{v}'"),
    })
}

struct ProfileKeys {
    kind: Option<String>,
    center: f64,
    width: f64,
    amplitude: f64,
}

impl ProfileKeys {
    fn new() -> Self {
        Self {
            kind: None,
            center: 2.0,
            width: 0.2,
            amplitude: 1.0,
        }
    }

    fn build(&self, line: usize) -> Result<Option<Profile>> {
        match self.kind.as_deref() {
            None | Some("none") => Ok(None),
            Some("gaussian_shell") => Ok(Some(Profile::GaussianShell {
                center: self.center,
                width: self.width,
                amplitude: self.amplitude,
            })),
            Some("bump_shell") => Ok(Some(Profile::BumpShell {
                center: self.center,
                half_width: self.width,
                amplitude: self.amplitude,
            })),
            Some("laplace_static") => Ok(Some(Profile::LaplaceStatic {
                amplitude: self.amplitude,
            })),
            Some(other) => Err(Error::ConfigParse {
                line,
                message: format!("unknown data kind '{other}'"),
            }),
        }
    }
}

/// Parses the text form; `overrides` are `section.key=value` pairs applied
/// after the file.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut entries: Vec<(String, String, usize)> = Vec::new();
    let mut section = String::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(Error::ConfigParse {
                line: line_no,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
            line: line_no,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let full_key = if section.is_empty() {
            key.trim().to_string()
        } else {
            format!("{section}.{}", key.trim())
        };
        entries.push((full_key, value.trim().to_string(), line_no));
    }
    for (i, ov) in overrides.iter().enumerate() {
        let (key, value) = ov.split_once('=').ok_or(Error::ConfigParse {
            line: 0,
            message: format!("override {} is not key=value: '{ov}'", i + 1),
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string(), 0));
    }

    let mut cfg = ScenarioConfig::default();
    let mut u0 = ProfileKeys::new();
    let mut u1 = ProfileKeys {
        amplitude: 0.0,
        ..ProfileKeys::new()
    };
    let mut store_from: Option<f64> = None;
    let mut store_until: Option<f64> = None;
    for (key, value, line) in &entries {
        let line = *line;
        match key.as_str() {
            "grid.d" => cfg.d = parse_num(value, line)?,
            "grid.dr" => cfg.dr = parse_num(value, line)?,
            "grid.n" => cfg.n = parse_num(value, line)?,
            "time.t_final" => cfg.t_final = parse_num(value, line)?,
            "time.dt" => cfg.dt = Some(parse_num(value, line)?),
            "time.cfl" => cfg.cfl = parse_num(value, line)?,
            "time.store_every" => cfg.store_every = parse_num(value, line)?,
            "time.store_from" => store_from = Some(parse_num(value, line)?),
            "time.store_until" => store_until = Some(parse_num(value, line)?),
            "data.u0_kind" => u0.kind = Some(value.clone()),
            "data.u0_center" => u0.center = parse_num(value, line)?,
            "data.u0_width" => u0.width = parse_num(value, line)?,
            "data.u0_amplitude" => u0.amplitude = parse_num(value, line)?,
            "data.u1_kind" => u1.kind = Some(value.clone()),
            "data.u1_center" => u1.center = parse_num(value, line)?,
            "data.u1_width" => u1.width = parse_num(value, line)?,
            "data.u1_amplitude" => u1.amplitude = parse_num(value, line)?,
            "data.ingoing" => cfg.ingoing = parse_bool(value, line)?,
            "nonlinear.zeta" => cfg.zeta = parse_num(value, line)?,
            "nonlinear.p" => cfg.p = parse_num(value, line)?,
            "diagnostics.shell_inner_factor" => cfg.shell_inner_factor = parse_num(value, line)?,
            "output.dir" => cfg.out_dir = value.clone(),
            other => {
                return Err(Error::ConfigParse {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
        cfg.raw.insert(key.clone(), value.clone());
    }
    cfg.u0 = u0.build(0)?;
    cfg.u1 = u1.build(0)?;
    cfg.store_window = match (store_from, store_until) {
        (None, None) => None,
        (a, b) => Some((a.unwrap_or(0.0), b.unwrap_or(f64::INFINITY))),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.d, self.dr, self.n)
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec {
            u0: self.u0.clone(),
            u1: self.u1.clone(),
        }
    }

    /// Time step after applying the CFL rule.
    pub fn step_size(&self, grid: &RadialGrid) -> f64 {
        self.dt.unwrap_or(self.cfl * cfl_limit(grid))
    }

    /// Builds the initial state, applying the ingoing-velocity option.
    pub fn initial_state(&self) -> Result<crate::grid::ReducedState> {
        let grid = self.grid()?;
        let mut state = crate::data::make_state(&self.data_spec(), grid, self.zeta, self.p)?;
        if self.ingoing {
            let dr = grid.dr();
            let n = grid.n();
            for j in 0..n {
                let left = if j == 0 { -state.w[0] } else { state.w[j - 1] };
                let right = if j + 1 == n { 0.0 } else { state.w[j + 1] };
                state.wt[j] = (right - left) / (2.0 * dr);
            }
        }
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.t_final < 0.0 {
            return Err(Error::InvariantViolation("t_final must be >= 0".into()));
        }
        let limit = cfl_limit(&grid);
        let dt = self.step_size(&grid);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::InvariantViolation(format!(
                "CFL rule violated: dt = {dt} exceeds the stable limit {limit}"
            )));
        }
        if self.cfl <= 0.0 || self.cfl > 1.0 + 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "cfl factor must be in (0, 1], got {}",
                self.cfl
            )));
        }
        // Finite-speed containment: the domain must hold the data's light
        // cone for the whole run.
        let spec = self.data_spec();
        if let Some(radius) = spec.support_radius() {
            let needed = radius + self.t_final + 4.0 * self.dr;
            if grid.r_max() < needed {
                return Err(Error::InvariantViolation(format!(
                    "domain radius {} is below the light-cone containment bound {needed} \
                     (support {radius} + t_final {} + 4 dr)",
                    grid.r_max(),
                    self.t_final
                )));
            }
        }
        if self.zeta == 1 {
            let d = self.d as f64;
            let lo = 1.0 + 4.0 / (d - 1.0);
            let hi = 1.0 + 4.0 / (d - 2.0);
            if !(self.p >= lo - 1e-12 && self.p <= hi + 1e-12) {
                return Err(Error::InvariantViolation(format!(
                    "nonlinear exponent p = {} outside [{lo}, {hi}] for d = {d}",
                    self.p
                )));
            }
        }
        if !(self.shell_inner_factor > 0.0 && self.shell_inner_factor < 1.0) {
            return Err(Error::InvariantViolation(
                "shell_inner_factor must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample scenario
[grid]
d = 3
dr = 0.005
n = 9000

[time]
t_final = 40
cfl = 0.8
store_every = 250

[data]
u0_kind = gaussian_shell
u0_center = 2.0
u0_width = 0.2
u0_amplitude = 1.0

[nonlinear]
zeta = 0
";

    #[test]
    fn parses_and_validates() {
        let cfg = parse_config(SAMPLE, &[]).unwrap();
        assert_eq!(cfg.d, 3);
        assert_eq!(cfg.n, 9000);
        assert!(matches!(cfg.u0, Some(Profile::GaussianShell { .. })));
        assert!(cfg.u1.is_none());
        let state = cfg.initial_state().unwrap();
        assert!(state.wt.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn overrides_win() {
        let cfg = parse_config(SAMPLE, &["time.t_final=10".into(), "data.u0_amplitude=0.5".into()]).unwrap();
        assert_eq!(cfg.t_final, 10.0);
        match cfg.u0 {
            Some(Profile::GaussianShell { amplitude, .. }) => assert_eq!(amplitude, 0.5),
            other => panic!("unexpected profile {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "[grid]\nd == 3\n";
        match parse_config(bad, &[]) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let unknown = "[grid]\nq = 3\n";
        match parse_config(unknown, &[]) {
            Err(Error::ConfigParse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("unknown key"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn containment_invariant_is_named() {
        // t_final too large for the domain.
        let err = parse_config(SAMPLE, &["time.t_final=100".into()]).unwrap_err();
        match err {
            Error::InvariantViolation(msg) => assert!(msg.contains("light-cone containment")),
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn cfl_invariant_is_named() {
        let err = parse_config(SAMPLE, &["time.dt=1.0".into()]).unwrap_err();
        match err {
            Error::InvariantViolation(msg) => assert!(msg.contains("CFL")),
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn ingoing_velocity_is_radial_derivative() {
        let cfg = parse_config(SAMPLE, &["data.ingoing=true".into()]).unwrap();
        let state = cfg.initial_state().unwrap();
        let grid = state.grid;
        let j = grid.cell_of(2.0).unwrap();
        let expect = (state.w[j + 1] - state.w[j - 1]) / (2.0 * grid.dr());
        assert_eq!(state.wt[j], expect);
    }
}
