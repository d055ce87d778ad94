//! `ov`: command-line front end.
//!
//! Every subcommand reads its parameters from flags, falling back to the
//! matching table of `--config <file.toml>`, writes plot-ready CSV and a
//! JSON manifest next to its output.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use ov_core::io::{self, num, Manifest};
use ov_core::local_model::{asymptotic_solution, AsymptoticOptions};
use ov_core::pde::{self, EvolveOptions, FieldState, LagrangianState};
use ov_core::scattering::{self, InitialProfile, LoopSolitonPath, PoleSearchOptions, SpectralPath};
use ov_core::soliton::{self, ParametricProfile};
use ov_core::spectral::{Reflection, Region, ScatteringData};
use ov_core::{OvError, Result};

#[derive(Parser, Debug)]
#[command(name = "ov", version, about = "Loop solitons, inverse scattering and long-time asymptotics for the Ostrovsky-Vakhnenko equation")]
struct Cli {
    /// TOML file with one table per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel sweeps (falls back to OV_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact profile from reflectionless scattering data.
    Soliton(SolitonArgs),
    /// Long-time asymptotic profile.
    Asympt(AsymptArgs),
    /// Scattering data of an initial profile.
    Scatter(ScatterArgs),
    /// Direct numerical integration.
    Evolve(EvolveArgs),
    /// Error between profiles, or the soliton-resolution error table.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolitonArgs {
    /// Scattering data file (TOML or JSON).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_max: Option<f64>,
    /// Number of y samples.
    #[arg(long)]
    n: Option<usize>,
    /// Output CSV `y,x,u`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AsymptArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_max: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Output CSV `y,x,u,region,order`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Smallest time at which the asymptotic formulas are applied.
    #[arg(long)]
    t_min: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ScatterArgs {
    /// Initial profile CSV `x,u0` on a uniform grid.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Use the exact loop soliton of a one-pole data file instead.
    #[arg(long, conflicts_with = "profile")]
    loop_soliton: Option<PathBuf>,
    /// Amplitude perturbation applied to the loop soliton.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// Output scattering data file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reflection grid `[-zmax, zmax]`.
    #[arg(long)]
    zmax: Option<f64>,
    #[arg(long)]
    nz: Option<usize>,
    /// Matching point (default 0 for profiles).
    #[arg(long, allow_hyphen_values = true)]
    s_match: Option<f64>,
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Write `reflection = "zero"` when sup|r| is below this.
    #[arg(long)]
    r_zero: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EvolveArgs {
    /// Initial profile CSV `x,u`, resampled onto the periodic grid.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Evolve the loop soliton of a one-pole data file in the label variable.
    #[arg(long, conflicts_with = "profile")]
    loop_soliton: Option<PathBuf>,
    /// Amplitude perturbation of the loop soliton.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Period.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    length: Option<f64>,
    /// Left end of the periodic grid (default `-L/2`).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long)]
    snap_every: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    boundary_tol: Option<f64>,
    /// Output directory for `snap_NNNN.csv` and `manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CompareArgs {
    /// Exact profile CSV `y,x,u`.
    #[arg(long)]
    exact: Option<PathBuf>,
    /// Oracle state CSV `x,u`.
    #[arg(long, requires = "exact")]
    state: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    window_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    window_max: Option<f64>,
    /// Reflectionless data for the resolution table.
    #[arg(long, conflicts_with_all = ["exact", "state"])]
    data: Option<PathBuf>,
    /// Comma-separated times of the resolution table.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Margin around the soliton centres in `y`.
    #[arg(long)]
    pad: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Output CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolitonArgs {
    fn fill(mut self) -> Self {
        self.t.get_or_insert(0.0);
        self.y_min.get_or_insert(-10.0);
        self.y_max.get_or_insert(10.0);
        self.n.get_or_insert(401);
        self
    }
}

impl AsymptArgs {
    fn fill(mut self) -> Self {
        self.t.get_or_insert(AsymptoticOptions::default().t_min);
        self.y_min.get_or_insert(-10.0);
        self.y_max.get_or_insert(10.0);
        self.n.get_or_insert(401);
        self.t_min.get_or_insert(AsymptoticOptions::default().t_min);
        self
    }
}

impl ScatterArgs {
    fn fill(mut self) -> Self {
        let d = PoleSearchOptions::default();
        self.eta.get_or_insert(0.0);
        self.zmax.get_or_insert(8.0);
        self.nz.get_or_insert(161);
        self.rho_min.get_or_insert(d.rho_min);
        self.rho_max.get_or_insert(d.rho_max);
        self.samples.get_or_insert(d.samples);
        self.r_zero.get_or_insert(1e-3);
        self
    }
}

impl EvolveArgs {
    fn fill(mut self) -> Self {
        let e = EvolveOptions::default();
        let l = *self.length.get_or_insert(80.0);
        self.x0.get_or_insert(-0.5 * l);
        self.t_end.get_or_insert(e.t_end);
        self.dt.get_or_insert(e.dt);
        self.modes.get_or_insert(512);
        self.snap_every.get_or_insert(e.snap_every);
        self.cfl.get_or_insert(e.cfl);
        self
    }
}

impl CompareArgs {
    fn fill(mut self) -> Self {
        if self.data.is_some() {
            self.times.get_or_insert_with(|| vec![20.0, 50.0, 100.0, 200.0]);
            self.pad.get_or_insert(30.0);
            self.n.get_or_insert(2001);
        }
        self
    }
}

/// Flags win; unset flags take the value of the config table.
fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&toml::Table>, table: &str) -> Result<T> {
    let mut merged = match config.and_then(|c| c.get(table)) {
        Some(v) => serde_json::to_value(v).map_err(|e| OvError::Validation(format!("config [{table}]: {e}")))?,
        None => json!({}),
    };
    let over = serde_json::to_value(flags).map_err(|e| OvError::Validation(e.to_string()))?;
    if let (Some(m), Some(o)) = (merged.as_object_mut(), over.as_object()) {
        for (k, v) in o {
            if !v.is_null() {
                m.insert(k.clone(), v.clone());
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| OvError::Validation(format!("config [{table}]: {e}")))
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| OvError::Validation(format!("missing required parameter --{name}")))
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(OvError::Validation(format!("--{name} must be positive, got {v}")))
    }
}

fn check_input(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(OvError::Validation(format!("input file {} does not exist", p.display())))
    }
}

fn check_output(p: &Path) -> Result<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
            Err(OvError::Validation(format!("output directory {} does not exist", d.display())))
        }
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

struct Grid {
    data: ScatteringData,
    t: f64,
    y: Vec<f64>,
    out: PathBuf,
}

fn grid(a: &SolitonArgs) -> Result<Grid> {
    let data_path = required(&a.data, "data")?;
    let out = required(&a.out, "out")?;
    check_input(&data_path)?;
    check_output(&out)?;
    let t = required(&a.t, "t")?;
    let (y0, y1) = (required(&a.y_min, "y-min")?, required(&a.y_max, "y-max")?);
    let n = required(&a.n, "n")?;
    if !(y1 > y0) || n < 2 || !t.is_finite() {
        return Err(OvError::Validation("need y_max > y_min, n >= 2 and finite t".into()));
    }
    let y = (0..n).map(|k| y0 + (y1 - y0) * k as f64 / (n - 1) as f64).collect();
    Ok(Grid { data: io::read_scattering(&data_path)?, t, y, out })
}

fn profile_rows(p: &ParametricProfile) -> Vec<Vec<String>> {
    p.samples.iter().map(|(y, x, u)| vec![num(*y), num(*x), num(*u)]).collect()
}

fn cmd_soliton(a: SolitonArgs) -> Result<()> {
    let g = grid(&a)?;
    let p = soliton::profile(&g.data, &g.y, g.t)?;
    io::write_csv(&g.out, &["y", "x", "u"], &profile_rows(&p))?;
    Manifest::new("soliton", to_json(&a), json!({ "monotone_x": p.monotone_x, "poles": g.data.poles.len() }))
        .write(&io::manifest_path(&g.out))
}

fn cmd_asympt(a: AsymptArgs) -> Result<()> {
    let g = grid(&SolitonArgs {
        data: a.data.clone(),
        t: a.t,
        y_min: a.y_min,
        y_max: a.y_max,
        n: a.n,
        out: a.out.clone(),
    })?;
    let opts = AsymptoticOptions { t_min: positive(required(&a.t_min, "t-min")?, "t-min")? };
    let rows = {
        use rayon::prelude::*;
        g.y.par_iter().map(|&y| asymptotic_solution(&g.data, y, g.t, opts)).collect::<Result<Vec<_>>>()?
    };
    let csv: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let region = match r.region {
                Region::I => "I",
                Region::II => "II",
            };
            vec![num(r.y), num(r.x), num(r.u), region.to_string(), r.error_order.to_string()]
        })
        .collect();
    io::write_csv(&g.out, &["y", "x", "u", "region", "order"], &csv)?;
    let c_hat = rows.first().map(|r| to_json(&r.c_hat));
    Manifest::new("asympt", to_json(&a), json!({ "c_hat_first_sample": c_hat }))
        .write(&io::manifest_path(&g.out))
}

fn cmd_scatter(mut a: ScatterArgs) -> Result<()> {
    let out = required(&a.out, "out")?;
    check_output(&out)?;
    let profile;
    let loop_path;
    let (path, s_match): (&dyn SpectralPath, f64) = match (&a.profile, &a.loop_soliton) {
        (Some(p), None) => {
            check_input(p)?;
            let rows = io::read_table(p, &["x", "u0"])?;
            let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let u: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            profile = InitialProfile::from_samples(&x, &u)?;
            (&profile, *a.s_match.get_or_insert(0.0))
        }
        (None, Some(d)) => {
            check_input(d)?;
            let data = io::read_scattering(d)?;
            if data.poles.len() != 1 || !data.reflection.is_zero() {
                return Err(OvError::Validation("--loop-soliton needs reflectionless data with one pole".into()));
            }
            loop_path = LoopSolitonPath::new(&data.poles[0], required(&a.eta, "eta")?)?;
            let m = *a.s_match.get_or_insert(loop_path.default_match());
            (&loop_path, m)
        }
        _ => return Err(OvError::Validation("give exactly one of --profile or --loop-soliton".into())),
    };
    let zmax = positive(required(&a.zmax, "zmax")?, "zmax")?;
    let nz = required(&a.nz, "nz")?;
    let r_zero = positive(required(&a.r_zero, "r-zero")?, "r-zero")?;
    let opts = PoleSearchOptions {
        rho_min: required(&a.rho_min, "rho-min")?,
        rho_max: required(&a.rho_max, "rho-max")?,
        samples: required(&a.samples, "samples")?,
        ..PoleSearchOptions::default()
    };
    let zs: Vec<f64> = (0..nz).map(|k| -zmax + 2.0 * zmax * k as f64 / (nz.max(2) - 1) as f64).collect();
    let r = {
        use rayon::prelude::*;
        zs.par_iter()
            .map(|&z| if z.abs() < 1e-12 * zmax { Ok(Default::default()) } else { scattering::reflection_at(path, z, s_match) })
            .collect::<Result<Vec<_>>>()?
    };
    let sampled = ov_core::spectral::SampledReflection::new(&zs, &r)?;
    let sup = sampled.sup_abs();
    let search = scattering::pole_search(path, opts)?;
    let reflection = if sup < r_zero { Reflection::Zero } else { Reflection::Sampled(sampled) };
    let data = ScatteringData::new(reflection, search.poles.clone())?;
    io::write_scattering(&out, &data)?;
    Manifest::new(
        "scatter",
        to_json(&a),
        json!({
            "sup_abs_r": sup,
            "reflection_zeroed": data.reflection.is_zero(),
            "s_match": s_match,
            "poles": search.poles.len(),
            "diagnostics": search.diagnostics,
        }),
    )
    .write(&io::manifest_path(&out))
}

/// Linear interpolation, zero outside the samples.
fn resample(x: &[f64], u: &[f64], at: f64) -> f64 {
    if x.is_empty() || at < x[0] || at > x[x.len() - 1] {
        return 0.0;
    }
    let k = x.partition_point(|v| *v <= at).clamp(1, x.len() - 1);
    let (x0, x1) = (x[k - 1], x[k]);
    let s = if x1 > x0 { (at - x0) / (x1 - x0) } else { 0.0 };
    u[k - 1] + s * (u[k] - u[k - 1])
}

fn cmd_evolve(a: EvolveArgs) -> Result<()> {
    let out = required(&a.out, "out")?;
    if !out.is_dir() {
        std::fs::create_dir_all(&out)?;
    }
    let length = positive(required(&a.length, "L")?, "L")?;
    let modes = required(&a.modes, "modes")?;
    let x0 = required(&a.x0, "x0")?;
    let opts = EvolveOptions {
        dt: positive(required(&a.dt, "dt")?, "dt")?,
        t_end: required(&a.t_end, "T")?,
        snap_every: required(&a.snap_every, "snap-every")?,
        cfl: positive(required(&a.cfl, "cfl")?, "cfl")?,
        boundary_tol: a.boundary_tol,
    };
    let (failure, steps, files) = match (&a.profile, &a.loop_soliton) {
        (Some(p), None) => {
            check_input(p)?;
            let rows = io::read_table(p, &["x", "u"])?;
            let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let us: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            if xs.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(OvError::Validation(format!("{}: x must increase", p.display())));
            }
            let u0 = FieldState::from_fn(x0, length, modes, |x| resample(&xs, &us, x))?;
            let traj = pde::evolve(&u0, &opts)?;
            let mut files = Vec::new();
            for (k, s) in traj.snapshots.iter().enumerate() {
                let name = format!("snap_{k:04}.csv");
                let rows: Vec<Vec<String>> = s.grid().iter().zip(&s.u).map(|(x, u)| vec![num(*x), num(*u)]).collect();
                io::write_csv(&out.join(&name), &["x", "u"], &rows)?;
                files.push(json!({ "file": name, "t": s.t, "mean": s.mean() }));
            }
            (traj.failure, traj.steps, files)
        }
        (None, Some(d)) => {
            check_input(d)?;
            let data = io::read_scattering(d)?;
            if data.poles.len() != 1 || !data.reflection.is_zero() || data.poles[0].c.im != 0.0 {
                return Err(OvError::Validation(
                    "--loop-soliton needs reflectionless data with one pole and real c".into(),
                ));
            }
            let p = data.poles[0];
            let mut s0 = LagrangianState::single_soliton(p.rho(), p.c.re, x0, length, modes)?;
            if let Some(eta) = a.eta {
                s0 = s0.perturb_amplitude(eta)?;
            }
            let traj = pde::evolve_lagrangian(&s0, &opts)?;
            let mut files = Vec::new();
            for (k, s) in traj.snapshots.iter().enumerate() {
                let name = format!("snap_{k:04}.csv");
                let prof = s.profile()?;
                io::write_csv(&out.join(&name), &["y", "x", "u"], &profile_rows(&prof))?;
                files.push(json!({ "file": name, "t": s.t }));
            }
            (traj.failure, traj.steps, files)
        }
        _ => return Err(OvError::Validation("give exactly one of --profile or --loop-soliton".into())),
    };
    Manifest::new("evolve", to_json(&a), json!({ "steps": steps, "failure": failure, "snapshots": files }))
        .write(&out.join("manifest.json"))?;
    match failure {
        Some(f) => Err(OvError::Numerical(f)),
        None => Ok(()),
    }
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let out = required(&a.out, "out")?;
    check_output(&out)?;
    if let Some(d) = &a.data {
        check_input(d)?;
        let data = io::read_scattering(d)?;
        if !data.reflection.is_zero() || data.poles.is_empty() {
            return Err(OvError::Validation("resolution table needs reflectionless data with poles".into()));
        }
        let times = required(&a.times, "times")?;
        let pad = positive(required(&a.pad, "pad")?, "pad")?;
        let n = required(&a.n, "n")?;
        let mut rows = Vec::new();
        for &t in &times {
            let (lo, hi, sup) = soliton::resolution_error(&data, t, pad, n)?;
            rows.push(vec![num(t), num(lo), num(hi), num(sup)]);
        }
        io::write_csv(&out, &["t", "y_min", "y_max", "sup_u_err"], &rows)?;
        return Manifest::new("compare", to_json(&a), json!({ "mode": "resolution" })).write(&io::manifest_path(&out));
    }
    let exact_path = required(&a.exact, "exact")?;
    let state_path = required(&a.state, "state")?;
    check_input(&exact_path)?;
    check_input(&state_path)?;
    let e = io::read_table(&exact_path, &["y", "x", "u"])?;
    let exact = ParametricProfile {
        samples: e.iter().map(|r| (r[0], r[1], r[2])).collect(),
        t: 0.0,
        monotone_x: e.windows(2).all(|w| w[1][1] > w[0][1]),
    };
    let s = io::read_table(&state_path, &["x", "u"])?;
    if s.len() < 2 {
        return Err(OvError::Validation("state needs >= 2 samples".into()));
    }
    let dx = s[1][0] - s[0][0];
    let state = FieldState::new(s[0][0], dx * s.len() as f64, s.iter().map(|r| r[1]).collect())?;
    let window = match (a.window_min, a.window_max) {
        (Some(l), Some(h)) => Some((l, h)),
        (None, None) => None,
        _ => return Err(OvError::Validation("give both --window-min and --window-max".into())),
    };
    let (linf, l2) = pde::compare(&exact, &state, window)?;
    io::write_csv(&out, &["linf", "l2"], &[vec![num(linf), num(l2)]])?;
    Manifest::new("compare", to_json(&a), json!({ "mode": "profile", "linf": linf, "l2": l2 }))
        .write(&io::manifest_path(&out))
}

fn threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("OV_THREADS") {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| OvError::Validation(format!("OV_THREADS = {s:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(OvError::Validation("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| OvError::Validation(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    threads(cli.threads)?;
    let config = match &cli.config {
        Some(p) => {
            check_input(p)?;
            let text = std::fs::read_to_string(p)?;
            Some(text.parse::<toml::Table>().map_err(|e| OvError::Validation(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let c = config.as_ref();
    match cli.command {
        Command::Soliton(a) => cmd_soliton(resolve(&a, c, "soliton")?.fill()),
        Command::Asympt(a) => cmd_asympt(resolve(&a, c, "asympt")?.fill()),
        Command::Scatter(a) => cmd_scatter(resolve(&a, c, "scatter")?.fill()),
        Command::Evolve(a) => cmd_evolve(resolve(&a, c, "evolve")?.fill()),
        Command::Compare(a) => cmd_compare(resolve(&a, c, "compare")?.fill()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ov: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
