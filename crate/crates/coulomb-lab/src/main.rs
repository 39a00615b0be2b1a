//! Command-line front end: named scenarios in, deterministic CSV out.

use clap::{Parser, Subcommand};
use coulomb_lab::config::{parse_config, ScenarioConfig};
use coulomb_lab::csvout::{write_ledger_rows, CsvWriter};
use coulomb_lab::energy::{
    cone_law_check, half_energy_check, morawetz_identity_from_rows, weighted_morawetz_fit, Cone,
    FluxKind, Ledger,
};
use coulomb_lab::error::Result;
use coulomb_lab::evolver::{evolve_visit, EvolveOptions};
use coulomb_lab::grid::{ReducedState, Trajectory};
use coulomb_lab::harmonics::AngularBasis;
use coulomb_lab::kg::KgWave;
use coulomb_lab::norms::{is_coulomb_allowed, lpq_norm, region_vertex, Admissibility, Exponent, PairPQ};
use coulomb_lab::scattering::{defocusing_scatter_experiment, small_data_experiment};
use coulomb_lab::special::{phi, psi};
use coulomb_lab::transform::{error_term_l2, forward_transform_experiment};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "coulomb-lab", version, about = "Numerical laboratory for the radial wave equation with a repulsive Coulomb potential")]
struct Cli {
    /// Scenario configuration file (key = value with [sections])
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. --set time.t_final=10 (repeatable)
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured scenario and write the energy ledger CSV
    Evolve,
    /// Evolve and run the cone-law / Morawetz / half-energy / decay-fit diagnostics
    Diagnose {
        /// backward-cone apex time (cone spans [t0, s])
        #[arg(long, default_value_t = 14.0)]
        cone_s: f64,
        #[arg(long, default_value_t = 10.0)]
        cone_t0: f64,
    },
    /// Profile-transform experiments (norm identity and error-term decay)
    Transform {
        #[arg(long, default_value_t = 100.0)]
        t0: f64,
        #[arg(long, default_value_t = 400.0)]
        t1: f64,
        #[arg(long, default_value_t = 0.04)]
        dr: f64,
        /// spectral width of the reference Klein-Gordon wave
        #[arg(long, default_value_t = 0.25)]
        sigma_xi: f64,
    },
    /// Defocusing scattering indicators and the small-data amplitude ladder
    Scatter {
        /// run the small-data ladder instead of the defocusing experiment
        #[arg(long)]
        ladder: bool,
    },
    /// Spherical-harmonic decomposition diagnostics
    Harmonics {
        #[arg(long, default_value_t = 4)]
        max_degree: u32,
    },
    /// Admissible-pair queries and tables
    Norms {
        /// classify one pair: d p q (exponents as integers, fractions or "inf")
        #[arg(long, num_args = 3, value_names = ["D", "P", "Q"])]
        point: Option<Vec<String>>,
    },
    /// Tables of the special solutions Phi, Psi and their Wronskian
    Special {
        #[arg(long, default_value_t = 0.1)]
        r_min: f64,
        #[arg(long, default_value_t = 20.0)]
        r_max: f64,
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
    /// Run the acceptance suite and print one line per criterion
    Accept {
        /// run the bundled desk-scale configurations (the default suite)
        #[arg(long)]
        quick: bool,
    },
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text, &cli.set)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn collect_snapshots(cfg: &ScenarioConfig) -> Result<Trajectory> {
    let state = cfg.initial_state()?;
    let grid = state.grid;
    let dt = cfg.step_size(&grid);
    let mut snaps = Vec::new();
    let opts = EvolveOptions {
        dt,
        t_final: cfg.t_final,
        store_every: cfg.store_every,
        store_window: cfg.store_window,
        ..Default::default()
    };
    evolve_visit(&state, &opts, |view| {
        if view.is_snapshot {
            snaps.push(ReducedState {
                grid: *view.grid,
                t: view.t,
                w: view.w.to_vec(),
                wt: view.wt.to_vec(),
                zeta: view.zeta,
                p: view.p,
            });
        }
    })?;
    Ok(Trajectory {
        snapshots: snaps,
        store_every: cfg.store_every,
        dt,
    })
}

fn cmd_evolve(cfg: &ScenarioConfig) -> Result<()> {
    let state = cfg.initial_state()?;
    let grid = state.grid;
    let mut ledger = Ledger::new(grid, cfg.zeta, cfg.p);
    ledger.shell_inner_factor = cfg.shell_inner_factor;
    let opts = EvolveOptions {
        dt: cfg.step_size(&grid),
        t_final: cfg.t_final,
        store_every: cfg.store_every,
        store_window: cfg.store_window,
        ..Default::default()
    };
    evolve_visit(&state, &opts, |view| ledger.observe(view))?;
    let path = Path::new(&cfg.out_dir).join("evolve.csv");
    write_ledger_rows(&path, &cfg.raw, &ledger.rows)?;
    println!("wrote {} rows to {}", ledger.rows.len(), path.display());
    Ok(())
}

fn cmd_diagnose(cfg: &ScenarioConfig, cone_s: f64, cone_t0: f64) -> Result<()> {
    let state = cfg.initial_state()?;
    let grid = state.grid;
    let mut ledger = Ledger::new(grid, cfg.zeta, cfg.p);
    ledger.shell_inner_factor = cfg.shell_inner_factor;
    let opts = EvolveOptions {
        dt: cfg.step_size(&grid),
        t_final: cfg.t_final,
        store_every: cfg.store_every,
        ..Default::default()
    };
    evolve_visit(&state, &opts, |view| ledger.observe(view))?;
    let out = Path::new(&cfg.out_dir);
    write_ledger_rows(&out.join("diagnostics.csv"), &cfg.raw, &ledger.rows)?;

    let id = morawetz_identity_from_rows(&ledger.rows)?;
    println!(
        "Morawetz identity: lhs = {:.6e}, E_-(0) = {:.6e}, E_-(T) = {:.6e}, defect = {:.3e}",
        id.lhs, id.e_minus_start, id.e_minus_end, id.defect
    );
    match weighted_morawetz_fit(&ledger.rows, 1.0) {
        Ok(slope) => println!("inward-energy decay fit: slope {slope:.3}"),
        Err(e) => println!("inward-energy decay fit: {e}"),
    }

    // Dedicated windowed run for the cone law (snapshot cadence <= 2 dr).
    let dt = cfg.step_size(&grid);
    let every = ((2.0 * grid.dr() / dt) as usize).max(1);
    let mut snaps = Vec::new();
    let opts = EvolveOptions {
        dt,
        t_final: cone_s + 2.0 * dt,
        store_every: every,
        store_window: Some((cone_t0 - 0.2, cone_s + 2.0 * dt)),
        ..Default::default()
    };
    evolve_visit(&state, &opts, |view| {
        if view.is_snapshot {
            snaps.push(ReducedState {
                grid: *view.grid,
                t: view.t,
                w: view.w.to_vec(),
                wt: view.wt.to_vec(),
                zeta: view.zeta,
                p: view.p,
            });
        }
    })?;
    let traj = Trajectory { snapshots: snaps, store_every: every, dt };
    let residual = cone_law_check(&traj, cone_s, cone_t0)?;
    println!("cone law (s = {cone_s}, t0 = {cone_t0}): residual {residual:.3e}");
    let q = coulomb_lab::energy::cone_flux(
        &traj,
        Cone::Backward { s: cone_s },
        cone_t0,
        cone_s - 2.0 * traj.cadence(),
        FluxKind::InwardBackward,
    )?;
    println!("inward flux through the cone: {q:.6e}");

    if cfg.zeta == 0 {
        let stored = collect_snapshots(cfg)?;
        let he = half_energy_check(&stored)?;
        println!(
            "half-energy: E = {:.6e}, max relative deviation over the final quarter = {:.3e}",
            he.energy, he.max_rel_deviation_final_quarter
        );
        let mut w = CsvWriter::create(
            &out.join("half_energy.csv"),
            &cfg.raw,
            &["t", "ut_l2_sq", "h1_sq", "dot_h1_sq"],
        )?;
        for (t, a, b, c) in he.rows {
            w.row(&[t, a, b, c])?;
        }
        w.finish()?;
    }
    Ok(())
}

fn cmd_transform(cfg: &ScenarioConfig, t0: f64, t1: f64, dr: f64, sigma_xi: f64) -> Result<()> {
    let wave = KgWave::reference(sigma_xi, 1.0)?;
    let rep = forward_transform_experiment(&wave, cfg.d, t0, t1, dr)?;
    println!(
        "norm identity: ||Tv||_C^2 = {:.6e}, sigma ||v||_K^2 = {:.6e}, ratio = {:.4}",
        rep.c_norm_sq, rep.target, rep.ratio
    );
    println!(
        "source budget: int ||f|| dt = {:.3e}; |E_src - E_free| = {:.3e} <= Duhamel bound {:.3e}: {}",
        rep.source_l1_l2,
        (rep.energy_end - rep.energy_end_sourceless).abs(),
        rep.duhamel_bound,
        rep.duhamel_ok
    );
    let out = Path::new(&cfg.out_dir);
    let mut w = CsvWriter::create(&out.join("transform.csv"), &cfg.raw, &["quantity", "value"])?;
    w.row_strings(&["c_norm_sq".into(), format!("{}", rep.c_norm_sq)])?;
    w.row_strings(&["target".into(), format!("{}", rep.target)])?;
    w.row_strings(&["ratio".into(), format!("{}", rep.ratio)])?;
    w.finish()?;

    let mut fw = CsvWriter::create(&out.join("f_decay.csv"), &cfg.raw, &["t", "f_l2"])?;
    for &t in &[100.0, 316.0, 1000.0, 3160.0, 10000.0] {
        fw.row(&[t, error_term_l2(&wave, t, cfg.d, 0.02)?])?;
    }
    fw.finish()?;
    Ok(())
}

fn cmd_scatter(cfg: &ScenarioConfig, ladder: bool) -> Result<()> {
    let grid = cfg.grid()?;
    let out = Path::new(&cfg.out_dir);
    if ladder {
        let amps = [1e-4, 2e-4, 4e-4, 1e-3];
        let rep = small_data_experiment(
            &cfg.data_spec(),
            grid,
            cfg.p,
            coulomb_lab::evolver::Nonlinearity::Defocusing { p: cfg.p },
            &amps,
            cfg.t_final,
        )?;
        let mut w = CsvWriter::create(
            &out.join("ladder.csv"),
            &cfg.raw,
            &["amplitude", "norm", "data_norm", "ratio", "unstable"],
        )?;
        for pt in &rep.points {
            w.row_strings(&[
                format!("{}", pt.amplitude),
                format!("{}", pt.norm),
                format!("{}", pt.data_norm),
                format!("{}", pt.ratio),
                format!("{}", pt.unstable as u8),
            ])?;
        }
        w.finish()?;
        println!(
            "small-end ratio variation {:.3e}; linear-flow ratio {:.6e}",
            rep.small_end_variation, rep.linear_ratio
        );
    } else {
        let rep = defocusing_scatter_experiment(&cfg.data_spec(), grid, cfg.p, cfg.t_final, 0.05, 0.01)?;
        let mut w = CsvWriter::create(&out.join("scatter.csv"), &cfg.raw, &["t", "potential_energy"])?;
        for &(t, v) in &rep.potential {
            w.row(&[t, v])?;
        }
        w.finish()?;
        println!(
            "potential end/start = {:.3e}; norm saturation over final doubling = {:.4}; verdict: {}",
            rep.potential_end_over_start,
            rep.saturation,
            if rep.scattering_verdict { "scattering" } else { "not settled" }
        );
    }
    Ok(())
}

fn cmd_harmonics(cfg: &ScenarioConfig, max_degree: u32) -> Result<()> {
    let basis = AngularBasis::new(max_degree);
    println!(
        "basis: degree <= {max_degree}, {} harmonics, orthonormality defect {:.2e}",
        basis.harmonics().len(),
        basis.orthonormality_defect()
    );
    let grid = cfg.grid()?;
    // Band-limited field built on the configured radial profile.
    let state = cfg.initial_state()?;
    let radial = state.u();
    let mut u = vec![vec![0.0; grid.n()]; basis.node_count()];
    for (k, amp) in [(0usize, 1.0), (1, 0.6), (4, -0.5)] {
        if k >= basis.harmonics().len() {
            continue;
        }
        let h = basis.harmonics()[k];
        for (q, row) in u.iter_mut().enumerate() {
            let y = basis.value(k, q);
            for (j, r) in grid.radii().enumerate() {
                row[j] += amp * radial[j] * r.powi(h.degree as i32) * y;
            }
        }
    }
    let zero = vec![vec![0.0; grid.n()]; basis.node_count()];
    let (direct, summed, defect) = basis.energy_identity_check(&u, &zero, &grid)?;
    println!("energy identity: direct {direct:.6e}, component sum {summed:.6e}, defect {defect:.2e}");
    let out = Path::new(&cfg.out_dir);
    let mut w = CsvWriter::create(&out.join("harmonics.csv"), &cfg.raw, &["quantity", "value"])?;
    w.row_strings(&["orthonormality_defect".into(), format!("{}", basis.orthonormality_defect())])?;
    w.row_strings(&["energy_identity_defect".into(), format!("{defect}")])?;
    w.finish()?;
    Ok(())
}

fn cmd_norms(cfg: &ScenarioConfig, point: Option<Vec<String>>) -> Result<()> {
    if let Some(args) = point {
        let d: u32 = args[0]
            .parse()
            .map_err(|_| coulomb_lab::Error::InvalidArgument(format!("bad dimension '{}'", args[0])))?;
        let pair = PairPQ {
            p: Exponent::parse(&args[1])?,
            q: Exponent::parse(&args[2])?,
            d,
        };
        match is_coulomb_allowed(&pair) {
            Admissibility::Interior => println!("allowed"),
            Admissibility::EqualityEdge => println!("allowed (equality branch)"),
            Admissibility::NotAllowed => println!("not allowed"),
        }
        return Ok(());
    }
    let out = Path::new(&cfg.out_dir);
    let mut w = CsvWriter::create(
        &out.join("norms_region.csv"),
        &cfg.raw,
        &["d", "vertex", "p", "q", "allowed"],
    )?;
    for d in [3u32, 4, 5] {
        for label in ['A', 'B', 'C', 'D', 'E'] {
            let v = region_vertex(d, label).unwrap();
            w.row_strings(&[
                format!("{d}"),
                label.to_string(),
                format!("{}", v.p.as_f64()),
                format!("{}", v.q.as_f64()),
                format!("{}", is_coulomb_allowed(&v).allowed() as u8),
            ])?;
        }
    }
    w.finish()?;
    let traj = collect_snapshots(cfg)?;
    let pair = PairPQ {
        p: Exponent::Infinity,
        q: Exponent::integer(2),
        d: cfg.d,
    };
    println!("sup_t ||u||_L2 over the run: {:.6e}", lpq_norm(&traj, &pair)?);
    Ok(())
}

fn cmd_special(cfg: &ScenarioConfig, r_min: f64, r_max: f64, count: usize) -> Result<()> {
    let out = Path::new(&cfg.out_dir);
    let mut w = CsvWriter::create(
        &out.join("special.csv"),
        &cfg.raw,
        &["r", "phi", "phi_prime", "psi", "psi_prime", "wronskian"],
    )?;
    for i in 0..count {
        let r = r_min + (r_max - r_min) * i as f64 / (count.max(2) - 1) as f64;
        let (ph, dph) = phi(r, cfg.d)?;
        let (ps, dps) = psi(r, cfg.d)?;
        w.row(&[r, ph, dph, ps, dps, ph * dps - dph * ps])?;
    }
    w.finish()?;
    println!("wrote special-function table for d = {}", cfg.d);
    Ok(())
}

fn cmd_accept(quick: bool) -> i32 {
    let results = coulomb_lab::acceptance::run_all(quick);
    let mut all_pass = true;
    for r in &results {
        println!(
            "criterion {:2} [{}] {}: {}",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all_pass &= r.pass;
    }
    println!(
        "{} of {} criteria passed",
        results.iter().filter(|r| r.pass).count(),
        results.len()
    );
    if all_pass {
        0
    } else {
        1
    }
}

fn main() {
    // COULOMBLAB_THREADS caps the worker pool.
    if let Ok(threads) = std::env::var("COULOMBLAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Accept { quick } => cmd_accept(*quick),
        command => {
            let run = || -> Result<()> {
                let cfg = load_config(&cli)?;
                match command {
                    Command::Evolve => cmd_evolve(&cfg),
                    Command::Diagnose { cone_s, cone_t0 } => cmd_diagnose(&cfg, *cone_s, *cone_t0),
                    Command::Transform { t0, t1, dr, sigma_xi } => {
                        cmd_transform(&cfg, *t0, *t1, *dr, *sigma_xi)
                    }
                    Command::Scatter { ladder } => cmd_scatter(&cfg, *ladder),
                    Command::Harmonics { max_degree } => cmd_harmonics(&cfg, *max_degree),
                    Command::Norms { point } => cmd_norms(&cfg, point.clone()),
                    Command::Special { r_min, r_max, count } => {
                        cmd_special(&cfg, *r_min, *r_max, *count)
                    }
                    Command::Accept { .. } => unreachable!(),
                }
            };
            match run() {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
    };
    std::process::exit(code);
}
