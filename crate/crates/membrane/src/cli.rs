//! Command-line front end: configuration loading, experiment orchestration
//! (gen-data → evolve → sweep → analyze → report), checkpoint persistence,
//! and the invariant-suite runner.
//!
//! Exit codes are fixed for harness scripting: 0 success, 1 configuration
//! error, 2 solver failure (degeneracy/blow-up/io), 3 diagnostics failure or
//! a failing invariant suite. The only environment variable consulted is
//! `MEMBRANE_WORKERS` (sweep worker-pool size); all other behaviour comes
//! from the config file and flags. Outputs are deterministic: identical
//! configs produce byte-identical CSV/JSON reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{scaling_fit, slice_energy_leq1, Observers, SweepAccumulator, Verdict};
use crate::error::{MembraneError, Result};
use crate::io::{
    fmt_f64, load_config, parse_multiplier, read_checkpoint, write_checkpoint, write_csv,
    write_json, write_table, RunConfig,
};
use crate::shortpulse::{
    check_constraints, direct_data, rrme_data, CauchyData, ConstraintFamily, PulseProfile,
};
use crate::solver::{evolve_damped, FieldState, Mode, MonitorCollector, StepObserver};
use crate::verify;

#[derive(Parser)]
#[command(
    name = "membrane",
    about = "Short-pulse laboratory for the relativistic membrane equation",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override δ with a single value.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate short-pulse Cauchy data files and constraint reports.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Evolve one δ to t_end, writing monitors, flux tables, checkpoints.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Resume from a checkpoint instead of the data file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run every configured δ through gen-data + evolve, then merge fits.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fit scaling exponents from existing per-δ run summaries.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Run the self-contained invariant suites.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Enumerate suites without running them.
        #[arg(long)]
        list: bool,
        /// Run a single named suite.
        #[arg(long)]
        suite: Option<String>,
        /// Override every check tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Render the plain-text report from analyze/sweep outputs.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

/// Parse arguments, dispatch, and map errors onto the exit-code contract.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::GenData { common } => load(&common).and_then(|cfg| cmd_gen_data(&cfg)),
        Cmd::Evolve { common, resume } => {
            load(&common).and_then(|cfg| cmd_evolve(&cfg, resume.as_deref()))
        }
        Cmd::Sweep { common } => load(&common).and_then(|cfg| cmd_sweep(&cfg)),
        Cmd::Analyze { common } => load(&common).and_then(|cfg| cmd_analyze(&cfg).map(|_| ())),
        Cmd::Verify {
            common,
            list,
            suite,
            tol,
        } => return cmd_verify(&common, list, suite.as_deref(), tol),
        Cmd::Report { common } => load(&common).and_then(|cfg| cmd_report(&cfg)),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| MembraneError::Config("--config PATH is required".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(d) = common.delta {
        cfg.delta = Some(d);
        cfg.deltas.clear();
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// δ rendered for file names: 0.08 → "0p08".
fn dtag(delta: f64) -> String {
    format!("{delta}").replace('.', "p")
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn profile(cfg: &RunConfig) -> Result<PulseProfile> {
    Ok(match cfg.profile.family.as_str() {
        "poly" => PulseProfile::poly(
            cfg.profile.p.expect("validated"),
            cfg.profile.c0,
            cfg.profile.c1,
        ),
        _ => PulseProfile::bump(cfg.profile.c0, cfg.profile.c1),
    })
}

fn require_unprimed(cfg: &RunConfig) -> Result<()> {
    if matches!(cfg.mode_enum(), Mode::Rescaled { .. }) {
        return Err(MembraneError::Config(
            "mode: rescaled runs happen inside the data construction; \
             gen-data/evolve/sweep take planar or radial"
                .into(),
        ));
    }
    Ok(())
}

fn data_path(dir: &Path, delta: f64) -> PathBuf {
    dir.join(format!("data_{}.memb", dtag(delta)))
}

/// Construct the Cauchy data for one δ along the configured path.
fn build_data(cfg: &RunConfig, delta: f64) -> Result<CauchyData> {
    let spec = profile(cfg)?;
    let grid = cfg.grid_spec()?;
    match cfg.profile.source.as_str() {
        "direct" => direct_data(delta, &spec, grid),
        _ => {
            let pts = cfg.profile.rrme_points.unwrap_or(cfg.grid.n_points);
            Ok(rrme_data(delta, &spec, grid, pts, cfg.evolve.cfl)?.0)
        }
    }
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

fn cmd_gen_data(cfg: &RunConfig) -> Result<()> {
    require_unprimed(cfg)?;
    let dir = out_dir(cfg)?;
    let mut entries = Vec::new();
    for delta in cfg.delta_list() {
        let data = build_data(cfg, delta)?;
        let report = check_constraints(&data, 2)?;
        let leak = data.support_leak();
        let rows: Vec<Vec<f64>> = report
            .entries
            .iter()
            .map(|e| {
                let fam = match e.family {
                    ConstraintFamily::Outgoing => 0.0,
                    ConstraintFamily::Amplitude => 1.0,
                    ConstraintFamily::GoodDerivative => 2.0,
                };
                vec![fam, e.k as f64, e.l as f64, e.m as f64, e.sup]
            })
            .collect();
        write_csv(
            &dir.join(format!("constraints_{}.csv", dtag(delta))),
            &[
                "short-pulse constraint sups over the annulus [1-2delta, 1]",
                "family: 0 = outgoing combination, 1 = amplitude, 2 = good derivative",
                "k, l, m: derivative multi-order of the measured combination",
            ],
            &["family", "k", "l", "m", "sup"],
            &rows,
        )?;
        let state = data.into_state()?;
        write_checkpoint(&data_path(&dir, delta), &state)?;
        entries.push(serde_json::json!({
            "delta": delta,
            "support_leak": leak,
            "min_g": state.min_g(),
            "outgoing_max": report.family_max(ConstraintFamily::Outgoing),
            "amplitude_max": report.family_max(ConstraintFamily::Amplitude),
            "good_derivative_max": report.family_max(ConstraintFamily::GoodDerivative),
        }));
        println!(
            "gen-data delta={delta}: support leak {:.3e}, data written",
            leak
        );
    }
    write_json(
        &dir.join("gen_summary.json"),
        &serde_json::json!({"source": cfg.profile.source, "runs": entries}),
    )
}

// ---------------------------------------------------------------------------
// evolve / sweep
// ---------------------------------------------------------------------------

/// Writes a checkpoint every `stride` accepted steps.
struct CheckpointWriter {
    dir: PathBuf,
    tag: String,
    stride: u64,
}

impl StepObserver for CheckpointWriter {
    fn observe(&mut self, state: &FieldState) -> Result<()> {
        if self.stride > 0 && state.step > 0 && state.step % self.stride == 0 {
            write_checkpoint(
                &self
                    .dir
                    .join(format!("ckpt_{}_step{:08}.memb", self.tag, state.step)),
                state,
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MultiplierSummary {
    name: String,
    /// E²_{≤1}[ξ] on the initial data slice.
    energy_data: f64,
    min_integrand: f64,
    cones: Vec<f64>,
    /// energy_at_station[cone][station], None when the station was not
    /// crossed before t_end.
    energy_at_station: Vec<Vec<Option<f64>>>,
    /// max/min of E²_{≤1} on the pulse cone over crossed stations.
    energy_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RunSummary {
    delta: f64,
    t_end: f64,
    final_step: u64,
    min_g: f64,
    sup_phi: f64,
    sup_dphi: f64,
    sup_l_region: f64,
    sup_lbar_cdelta: f64,
    stations: Vec<f64>,
    /// |L̲φ| on the pulse cone C_δ nearest each station.
    lbar_at_station: Vec<Option<f64>>,
    multipliers: Vec<MultiplierSummary>,
}

fn run_summary_path(dir: &Path, delta: f64) -> PathBuf {
    dir.join(format!("run_{}.json", dtag(delta)))
}

/// Evolve one δ from `start`, stream the diagnostics, and persist
/// monitor/flux/summary files. The monitor table is written even when the
/// evolution aborts, so partial results survive a blow-up.
fn run_one(cfg: &RunConfig, delta: f64, start: FieldState) -> Result<()> {
    let dir = out_dir(cfg)?;
    let tag = dtag(delta);
    let t_end = cfg.evolve.t_end;

    // The near-pulse interior cone u = 5δ/4 is always tracked first (the
    // exact cone u = δ sits under the discretely smeared front); configured
    // cones follow.
    let mut cones = vec![1.25 * delta];
    cones.extend(cfg.diagnostics.cones.iter().copied());

    // Initial-slice commuted energies realize the data hierarchy in δ.
    let mut energy_data = Vec::new();
    for name in &cfg.diagnostics.multipliers {
        let xi = parse_multiplier(name).expect("validated");
        energy_data.push(slice_energy_leq1(&start, xi)?);
    }
    let mut accums: Vec<(String, SweepAccumulator)> = cfg
        .diagnostics
        .multipliers
        .iter()
        .map(|name| {
            let xi = parse_multiplier(name).expect("validated");
            (
                name.clone(),
                SweepAccumulator::new(delta, xi, cones.clone(), cfg.diagnostics.stations.clone()),
            )
        })
        .collect();
    let mut monitor = MonitorCollector::new(25);
    let mut ckptw = CheckpointWriter {
        dir: dir.clone(),
        tag: tag.clone(),
        stride: cfg.evolve.checkpoint_stride,
    };

    let outcome = {
        let mut list: Vec<&mut dyn StepObserver> = vec![&mut monitor, &mut ckptw];
        for (_, a) in &mut accums {
            list.push(a);
        }
        evolve_damped(
            start,
            t_end,
            cfg.evolve.cfl,
            cfg.evolve.dissipation,
            &mut Observers(list),
        )
    };

    let rows: Vec<Vec<f64>> = monitor
        .records
        .iter()
        .map(|r| vec![r.t, r.min_g, r.max_speed, r.sup_phi, r.sup_dphi])
        .collect();
    write_csv(
        &dir.join(format!("monitor_{tag}.csv")),
        &["per-step solver monitor (stride 25)"],
        &["t", "min_g", "max_speed", "sup_phi", "sup_dphi"],
        &rows,
    )?;
    let end = outcome?;
    write_checkpoint(&dir.join(format!("final_{tag}.memb")), &end)?;

    let min_g_run = monitor
        .records
        .iter()
        .map(|r| r.min_g)
        .fold(f64::INFINITY, f64::min);
    let (sup_phi, sup_dphi) = monitor
        .records
        .iter()
        .fold((0.0f64, 0.0f64), |(a, b), r| {
            (a.max(r.sup_phi), b.max(r.sup_dphi))
        });

    let mut mult_summaries = Vec::new();
    for ((name, acc), &e_data) in accums.iter().zip(&energy_data) {
        let mut rows = Vec::new();
        for (ci, &u) in acc.cones.iter().enumerate() {
            for (si, &s) in acc.stations.iter().enumerate() {
                if let Some(e) = acc.energy_at_station[ci][si] {
                    rows.push(vec![u, s, e]);
                }
            }
        }
        write_csv(
            &dir.join(format!("energy_{tag}_{name}.csv")),
            &[
                "commuted cone energies E^2_{<=1}[xi] on outgoing cones C_u",
                "sampled when the cone crosses each ubar station",
            ],
            &["cone_u", "station_ubar", "energy"],
            &rows,
        )?;
        let crossed: Vec<f64> = acc.energy_at_station[0].iter().flatten().copied().collect();
        let energy_ratio = if crossed.len() >= 2 {
            let max = crossed.iter().fold(0.0f64, |a, &b| a.max(b));
            let min = crossed.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            (min > 0.0).then(|| max / min)
        } else {
            None
        };
        mult_summaries.push(MultiplierSummary {
            name: name.clone(),
            energy_data: e_data,
            min_integrand: acc.min_integrand,
            cones: acc.cones.clone(),
            energy_at_station: acc.energy_at_station.clone(),
            energy_ratio,
        });
    }

    let lead = &accums
        .first()
        .ok_or_else(|| MembraneError::Config("diagnostics.multipliers: empty".into()))?
        .1;
    let summary = RunSummary {
        delta,
        t_end,
        final_step: end.step,
        min_g: min_g_run,
        sup_phi,
        sup_dphi,
        sup_l_region: lead.sup_l_region,
        sup_lbar_cdelta: lead.sup_lbar_cdelta,
        stations: cfg.diagnostics.stations.clone(),
        lbar_at_station: lead
            .lbar_at_station
            .iter()
            .map(|o| o.map(|(_, v)| v))
            .collect(),
        multipliers: mult_summaries,
    };
    let value = serde_json::to_value(&summary)
        .map_err(|e| MembraneError::Config(format!("json encode: {e}")))?;
    write_json(&run_summary_path(&dir, delta), &value)
}

/// Load the data file for δ, constructing it on the fly when absent (the
/// construction is deterministic, so the result matches a prior gen-data).
fn load_or_build_state(cfg: &RunConfig, delta: f64) -> Result<FieldState> {
    let dir = out_dir(cfg)?;
    let path = data_path(&dir, delta);
    if path.exists() {
        read_checkpoint(&path)
    } else {
        let state = build_data(cfg, delta)?.into_state()?;
        write_checkpoint(&path, &state)?;
        Ok(state)
    }
}

fn cmd_evolve(cfg: &RunConfig, resume: Option<&Path>) -> Result<()> {
    require_unprimed(cfg)?;
    let delta = cfg.delta_list()[0];
    let start = match resume {
        Some(ckpt) => read_checkpoint(ckpt)?,
        None => load_or_build_state(cfg, delta)?,
    };
    run_one(cfg, delta, start)?;
    println!("evolve delta={delta}: reached t = {}", cfg.evolve.t_end);
    Ok(())
}

fn worker_count(jobs: usize) -> Result<usize> {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let n = match std::env::var("MEMBRANE_WORKERS") {
        Ok(v) => v.parse::<usize>().map_err(|_| {
            MembraneError::Config(format!("MEMBRANE_WORKERS: '{v}' is not a positive integer"))
        })?,
        Err(_) => available,
    };
    if n == 0 {
        return Err(MembraneError::Config(
            "MEMBRANE_WORKERS: must be at least 1".into(),
        ));
    }
    Ok(n.min(jobs.max(1)))
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    require_unprimed(cfg)?;
    let deltas = cfg.delta_list();
    let workers = worker_count(deltas.len())?;
    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<(f64, MembraneError)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&delta) = deltas.get(i) else { break };
                let run = load_or_build_state(cfg, delta).and_then(|s| run_one(cfg, delta, s));
                match run {
                    Ok(()) => println!("sweep delta={delta}: done"),
                    Err(e) => {
                        eprintln!("sweep delta={delta}: {e}");
                        failures.lock().unwrap().push((delta, e));
                    }
                }
            });
        }
    });
    let mut failures = failures.into_inner().unwrap();
    // Merge whatever completed; per-δ files from failed runs stay on disk.
    let merge = cmd_analyze(cfg);
    if let Some((_, e)) = failures.pop() {
        return Err(e);
    }
    merge.map(|_| ())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FitRow {
    quantity: String,
    exponent: f64,
    std_error: f64,
    reference: f64,
    pass: bool,
}

fn read_summaries(cfg: &RunConfig) -> Result<Vec<RunSummary>> {
    let dir = out_dir(cfg)?;
    let mut out = Vec::new();
    for delta in cfg.delta_list() {
        let path = run_summary_path(&dir, delta);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let s: RunSummary = serde_json::from_str(&text).map_err(|e| {
            MembraneError::Config(format!("{}: {e}", path.display()))
        })?;
        out.push(s);
    }
    if out.is_empty() {
        return Err(MembraneError::Config(
            "analyze: no run summaries found (run evolve or sweep first)".into(),
        ));
    }
    out.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    Ok(out)
}

fn push_fit(
    fits: &mut Vec<FitRow>,
    quantity: &str,
    samples: &[(f64, f64)],
    reference: f64,
    verdict: Verdict,
) {
    if let Ok(fit) = scaling_fit(samples, reference, verdict) {
        fits.push(FitRow {
            quantity: quantity.to_string(),
            exponent: fit.exponent,
            std_error: fit.std_error,
            reference,
            pass: fit.pass,
        });
    }
}

fn energy_sample(s: &RunSummary, mult: &str) -> Option<f64> {
    s.multipliers
        .iter()
        .find(|m| m.name == mult)
        .map(|m| m.energy_data)
}

/// Power-law fits across δ (one-sided verdicts against the expected
/// short-pulse exponents) plus the per-δ u̲-decay fit on the pulse cone.
fn cmd_analyze(cfg: &RunConfig) -> Result<Vec<FitRow>> {
    let dir = out_dir(cfg)?;
    let summaries = read_summaries(cfg)?;
    let mut fits = Vec::new();

    let sup_l: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (s.delta, s.sup_l_region))
        .collect();
    push_fit(&mut fits, "sup_l_region", &sup_l, 1.0, Verdict::AtLeast(0.9));

    let sup_lbar: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (s.delta, s.sup_lbar_cdelta))
        .collect();
    push_fit(
        &mut fits,
        "sup_lbar_cdelta",
        &sup_lbar,
        0.75,
        Verdict::AtLeast(0.7),
    );

    for (mult, reference, threshold) in
        [("lbartilde", 1.0, 0.9), ("ltilde", 2.0, 1.8)]
    {
        let samples: Vec<(f64, f64)> = summaries
            .iter()
            .filter_map(|s| energy_sample(s, mult).map(|e| (s.delta, e)))
            .collect();
        push_fit(
            &mut fits,
            &format!("energy_data_{mult}"),
            &samples,
            reference,
            Verdict::AtLeast(threshold),
        );
    }

    // u̲-decay of |L̲φ| along C_δ, fitted per δ over the stations.
    for s in &summaries {
        let samples: Vec<(f64, f64)> = s
            .stations
            .iter()
            .zip(&s.lbar_at_station)
            .filter_map(|(&u, v)| v.map(|v| (u, v)))
            .collect();
        push_fit(
            &mut fits,
            &format!("lbar_ubar_decay_{}", dtag(s.delta)),
            &samples,
            -1.0,
            Verdict::AtMost(-0.8),
        );
    }

    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| {
            vec![
                f.quantity.clone(),
                fmt_f64(f.exponent),
                fmt_f64(f.std_error),
                fmt_f64(f.reference),
                f.pass.to_string(),
            ]
        })
        .collect();
    write_table(
        &dir.join("fits.csv"),
        &[
            "log-log power-law fits; x = delta except lbar_ubar_decay_* (x = ubar)",
            "pass is the one-sided verdict against the expected exponent",
        ],
        &["quantity", "exponent", "std_error", "reference", "pass"],
        &rows,
    )?;
    let value = serde_json::json!({
        "deltas": summaries.iter().map(|s| s.delta).collect::<Vec<_>>(),
        "fits": serde_json::to_value(&fits)
            .map_err(|e| MembraneError::Config(format!("json encode: {e}")))?,
        "runs": serde_json::to_value(&summaries)
            .map_err(|e| MembraneError::Config(format!("json encode: {e}")))?,
    });
    write_json(&dir.join("analysis.json"), &value)?;
    println!("analyze: {} fits over {} runs", fits.len(), summaries.len());
    Ok(fits)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(common: &Common, list: bool, suite: Option<&str>, tol: Option<f64>) -> i32 {
    if list {
        for s in verify::SUITES {
            println!("{s}");
        }
        return 0;
    }
    let checks = match suite {
        Some(name) => verify::run_suite(name, tol),
        None => verify::run_all(tol),
    };
    let checks = match checks {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for c in &checks {
        println!(
            "{}/{}: {} ({:.3e} <= {:.3e})",
            c.suite,
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.value,
            c.tol
        );
    }
    if let Some(out) = &common.out {
        let report = verify::report_json(&checks);
        if let Err(e) = fs::create_dir_all(out)
            .map_err(MembraneError::from)
            .and_then(|()| write_json(&out.join("verify.json"), &report))
        {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    if checks.iter().all(|c| c.pass) {
        0
    } else {
        3
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let dir = out_dir(cfg)?;
    let path = dir.join("analysis.json");
    if !path.exists() {
        return Err(MembraneError::Config(
            "report: analysis.json not found (run analyze or sweep first)".into(),
        ));
    }
    let text = fs::read_to_string(&path)?;
    let analysis: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| MembraneError::Config(format!("analysis.json: {e}")))?;
    let runs: Vec<RunSummary> = serde_json::from_value(analysis["runs"].clone())
        .map_err(|e| MembraneError::Config(format!("analysis.json runs: {e}")))?;
    let fits: Vec<FitRow> = serde_json::from_value(analysis["fits"].clone())
        .map_err(|e| MembraneError::Config(format!("analysis.json fits: {e}")))?;

    let mut out = String::new();
    out.push_str("membrane sweep report\n=====================\n\n");
    out.push_str(&format!(
        "mode {} (n = {}), profile {}/{}, t_end {}\n\n",
        cfg.mode,
        cfg.n,
        cfg.profile.family,
        cfg.profile.source,
        fmt_f64(cfg.evolve.t_end)
    ));
    out.push_str("per-delta runs\n--------------\n");
    out.push_str("delta      min_g      sup|Lphi|   sup|Lbarphi|@C_d  E-ratio\n");
    for r in &runs {
        let ratio = r
            .multipliers
            .first()
            .and_then(|m| m.energy_ratio)
            .map(|x| fmt_f64((x * 1e4).round() / 1e4))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{:<10} {:<10.4} {:<11.3e} {:<17.3e} {ratio}\n",
            fmt_f64(r.delta),
            r.min_g,
            r.sup_l_region,
            r.sup_lbar_cdelta
        ));
    }
    out.push_str("\nscaling fits\n------------\n");
    for f in &fits {
        out.push_str(&format!(
            "{:<28} exponent {:>8.4} (ref {:>5}) stderr {:.2e}  {}\n",
            f.quantity,
            f.exponent,
            fmt_f64(f.reference),
            f.std_error,
            if f.pass { "PASS" } else { "FAIL" }
        ));
    }
    fs::write(dir.join("report.txt"), &out)?;
    print!("{out}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtag_is_filesystem_safe() {
        assert_eq!(dtag(0.08), "0p08");
        assert_eq!(dtag(0.16), "0p16");
    }

    #[test]
    fn worker_count_respects_env_contract() {
        // Without touching the ambient environment, only the clamp logic is
        // testable deterministically.
        assert!(worker_count(4).unwrap() >= 1);
        assert!(worker_count(1).unwrap() == 1);
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from(["membrane", "verify", "--list"]).unwrap();
        assert!(matches!(cli.cmd, Cmd::Verify { list: true, .. }));
        let cli = Cli::try_parse_from([
            "membrane", "evolve", "--config", "run.toml", "--delta", "0.08",
        ])
        .unwrap();
        match cli.cmd {
            Cmd::Evolve { common, resume } => {
                assert_eq!(common.delta, Some(0.08));
                assert!(resume.is_none());
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
