//! The subcommands. Each writes its outputs and the resolved configuration into `run.out`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use zrp_core::empirical::{build_young, extract_fields};
use zrp_core::ensembles::{CanonicalTable, DensityProfile, InitialCondition};
use zrp_core::pde::{deposit_condensate, solve, Grid};
use zrp_core::rng::stream_rng;
use zrp_core::sim::Checkpoint;
use zrp_core::thermo::ThermoProfile;
use zrp_core::verify::{
    continuity_residuals, double_block_stat, energy_stat, eoe_table, hydro, jump_rate_bound, martingale_qv_check,
    one_block_stat, DiscreteTestField, Ensemble, ReplicaStats, SpaceTimeWeight, SpatialFn, Verdict,
};
use zrp_core::Error;

use crate::config::{ExperimentConfig, FieldShape};
use crate::output::{num, OutDir};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Thermo,
    SampleCanonical,
    Simulate,
    Pde,
    Verify(Which),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    OneBlock,
    Eoe,
    Continuity,
    Qv,
    JumpBound,
    DoubleBlock,
    Energy,
    Hydro,
}

impl Which {
    pub fn file_stem(self) -> &'static str {
        match self {
            Self::OneBlock => "one_block",
            Self::Eoe => "eoe",
            Self::Continuity => "continuity",
            Self::Qv => "qv",
            Self::JumpBound => "jump_bound",
            Self::DoubleBlock => "double_block",
            Self::Energy => "energy",
            Self::Hydro => "hydro",
        }
    }
}

/// Runs one subcommand on a validated configuration.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = OutDir::create(&cfg.run.out)?;
    out.write_text("resolved_config.toml", &cfg.to_toml())?;
    let threads = cfg.run.threads;
    crate::with_workers(threads, || match cmd {
        Command::Thermo => thermo(cfg, &out),
        Command::SampleCanonical => sample_canonical(cfg, &out),
        Command::Simulate => simulate(cfg, &out),
        Command::Pde => pde(cfg, &out),
        Command::Verify(which) => verify(cfg, &out, which),
    })?
}

fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}

fn thermo(cfg: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let profile = cfg.profile()?;
    let phi_c = profile.phi_c();
    let points = cfg.stats.thermo_points;
    let mut phis: Vec<f64> = (0..points).map(|i| phi_c * i as f64 / points as f64).collect();
    phis.extend(cfg.stats.fugacities.iter().copied());
    let rows = phis
        .iter()
        .map(|&phi| {
            let z = profile.partition_z(phi)?;
            let r = profile.mean_density(phi)?;
            Ok(vec![num(phi), num(z), num(r)])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    out.write_csv("thermo.csv", &["phi", "Z", "R"], rows)?;

    let rho_max = cfg.stats.rho_max;
    let phibar = (0..points).map(|i| {
        let rho = rho_max * i as f64 / (points - 1) as f64;
        vec![num(rho), num(profile.mean_jump_rate(rho))]
    });
    out.write_csv("phibar.csv", &["rho", "phibar"], phibar)?;
    out.write_json(
        "thermo.json",
        &json!({
            "phi_c": json_number(phi_c),
            "rho_c": json_number(profile.rho_c()),
            "grad_sup": json_number(profile.grad_sup()),
            "k_max": cfg.model.k_max,
        }),
    )?;
    Ok(())
}

fn sample_canonical(cfg: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let InitialCondition::Canonical { particles } = cfg.initial else {
        return Err(CliError::Config("sample-canonical needs initial.kind = \"canonical\"".into()));
    };
    let spec = cfg.spec()?;
    let sites = cfg.lattice()?.sites();
    let k = particles as usize;
    let table = CanonicalTable::build(&spec, sites, k)?;
    let mut rng = stream_rng(cfg.run.seed, 0);
    let draws: Vec<Vec<u32>> = (0..cfg.stats.canonical_samples).map(|_| table.sample(&mut rng)).collect();
    let rows = draws.iter().enumerate().flat_map(|(s, occ)| {
        occ.iter().enumerate().map(move |(x, &v)| vec![s.to_string(), x.to_string(), v.to_string()])
    });
    out.write_csv("canonical_samples.csv", &["sample", "site", "occupancy"], rows)?;

    let mut counts = vec![0u64; k + 1];
    for &v in draws.iter().flatten() {
        counts[v as usize] += 1;
    }
    let pooled = (draws.len() * sites).max(1) as f64;
    let marginal = (0..=k).map(|j| {
        vec![j.to_string(), num(table.marginal(sites, k, j)), num(counts[j] as f64 / pooled)]
    });
    out.write_csv("canonical_marginal.csv", &["k", "exact", "empirical"], marginal)?;
    Ok(())
}

fn ensemble(cfg: &ExperimentConfig) -> Result<Ensemble, CliError> {
    let ens = Ensemble::new(
        cfg.profile()?,
        cfg.lattice()?,
        cfg.initial.clone(),
        cfg.run.horizon,
        cfg.run.replicas,
        cfg.run.seed,
    )?;
    Ok(ens.with_budget(cfg.run.event_budget))
}

#[derive(Debug, Serialize)]
struct ReplicaEntry {
    replica: usize,
    stream: u64,
    initial_particles: u64,
    events: u64,
    predicted_events: f64,
    final_time: f64,
    budget_exhausted: bool,
}

#[derive(Debug, Serialize)]
struct Manifest {
    seed: u64,
    replicas: usize,
    horizon: f64,
    sample_times: Vec<f64>,
    event_budget: u64,
    budget_exhausted: bool,
    mean_events: f64,
    mean_predicted_events: f64,
    runs: Vec<ReplicaEntry>,
}

struct ReplicaOutput {
    fields: Vec<Vec<String>>,
    young: Vec<(usize, String)>,
    checkpoint: String,
    entry: ReplicaEntry,
}

fn sample_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let t = cfg.run.horizon;
    let mut times = vec![0.0];
    if t > 0.0 {
        let s = cfg.run.samples;
        times.extend((1..=s).map(|i| t * i as f64 / s as f64));
    }
    times
}

fn simulate(cfg: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let ens = ensemble(cfg)?;
    let lattice = ens.lattice().clone();
    let times = sample_times(cfg);
    let obs = &cfg.observables;
    let st = &cfg.stats;
    let runs = zrp_core::parallel::map_replicas(cfg.run.replicas, |r| {
        let mut sim = ens.start(r)?;
        let predicted = sim.total_rate() * cfg.run.horizon;
        let initial_particles = sim.config().total();
        let mut fields = Vec::new();
        let mut young = Vec::new();
        let mut exhausted = false;
        for (s, &t) in times.iter().enumerate() {
            match sim.run_until(t, &mut []) {
                Ok(()) => {}
                Err(Error::EventBudgetExceeded { .. }) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            if obs.fields {
                let f = extract_fields(sim.config(), &lattice, t);
                for x in 0..lattice.sites() {
                    let u = f.position(x);
                    let c2 = if f.dim == 2 { f.current[1][x] } else { 0.0 };
                    fields.push(vec![
                        num(t),
                        x.to_string(),
                        num(u[0]),
                        num(u[1]),
                        num(f.density[x]),
                        num(f.jump_rate[x]),
                        num(f.current[0][x]),
                        num(c2),
                    ]);
                }
            }
            if obs.young {
                young.push((s, build_young(sim.config(), &lattice, st.ell, st.m, st.dlambda)?.to_csv()));
            }
        }
        let clock = sim.clock();
        Ok(ReplicaOutput {
            fields,
            young,
            checkpoint: Checkpoint::capture(&sim).to_json(),
            entry: ReplicaEntry {
                replica: r,
                stream: r as u64,
                initial_particles,
                events: clock.events,
                predicted_events: predicted,
                final_time: clock.t,
                budget_exhausted: exhausted,
            },
        })
    })?;

    const FIELD_HEADER: [&str; 8] = ["t", "site", "u_1", "u_2", "density", "jump_rate", "current_1", "current_2"];
    let mut entries = Vec::with_capacity(runs.len());
    for run in runs {
        let r = run.entry.replica;
        if obs.fields {
            out.write_csv(&format!("fields_r{r}.csv"), &FIELD_HEADER, run.fields)?;
        }
        for (s, text) in &run.young {
            out.write_text(&format!("young_r{r}_s{s}.csv"), text)?;
        }
        if obs.checkpoint {
            out.write_text(&format!("checkpoint_r{r}.json"), &run.checkpoint)?;
        }
        entries.push(run.entry);
    }
    let count = entries.len() as f64;
    let exhausted = entries.iter().find(|e| e.budget_exhausted).map(|e| e.final_time);
    let manifest = Manifest {
        seed: cfg.run.seed,
        replicas: cfg.run.replicas,
        horizon: cfg.run.horizon,
        sample_times: times,
        event_budget: cfg.run.event_budget,
        budget_exhausted: exhausted.is_some(),
        mean_events: entries.iter().map(|e| e.events as f64).sum::<f64>() / count,
        mean_predicted_events: entries.iter().map(|e| e.predicted_events).sum::<f64>() / count,
        runs: entries,
    };
    out.write_json("manifest.json", &manifest)?;
    match exhausted {
        Some(t) => Err(Error::EventBudgetExceeded { budget: cfg.run.event_budget, t }.into()),
        None => Ok(()),
    }
}

/// Initial PDE data on the grid and the profile to evolve.
fn pde_initial(cfg: &ExperimentConfig, grid: Grid) -> Result<Vec<f64>, CliError> {
    let d = grid.dim;
    match &cfg.initial {
        InitialCondition::Product { profile } => Ok(profile.on_grid(d, grid.side)?),
        InitialCondition::GrandCanonical { density } => Ok(DensityProfile::constant(*density).on_grid(d, grid.side)?),
        InitialCondition::ProductWithCondensate { profile, position, mass } => {
            let mut rho = profile.on_grid(d, grid.side)?;
            deposit_condensate(&mut rho, grid, position, *mass)?;
            Ok(rho)
        }
        _ => Err(CliError::Config("pde needs a product, grand_canonical or product_with_condensate initial".into())),
    }
}

fn pde(cfg: &ExperimentConfig, out: &OutDir) -> Result<(), CliError> {
    let profile: ThermoProfile = cfg.profile()?;
    let grid = Grid::new(cfg.lattice.d, cfg.stats.grid)?;
    let rho0 = pde_initial(cfg, grid)?;
    let times = sample_times(cfg);
    let sol = solve(&rho0, grid, &profile, cfg.run.horizon, cfg.stats.safety, &times[1..])?;
    out.write_text("pde.csv", &sol.to_csv())?;
    let snapshots: Vec<Value> =
        sol.snapshots.iter().map(|s| json!({"t": s.t, "energy_rate": json_number(s.energy_rate)})).collect();
    out.write_json(
        "pde_summary.json",
        &json!({
            "grid": grid.side,
            "dim": grid.dim,
            "dt": sol.dt,
            "steps": sol.steps,
            "cfl": sol.cfl,
            "safety": sol.safety,
            "initial_mass": sol.initial_mass,
            "final_mass": sol.final_mass,
            "max_mass_drift": sol.max_mass_drift,
            "energy": json_number(sol.energy),
            "snapshots": snapshots,
        }),
    )?;
    Ok(())
}

fn spatial(shape: FieldShape) -> SpatialFn {
    match shape {
        FieldShape::One => SpatialFn::constant(1.0),
        FieldShape::Cos2pi => SpatialFn::cosine(1.0, 1, 0),
        FieldShape::Sin2pi => SpatialFn::sine(1.0, 1, 0),
        FieldShape::Cos4pi => SpatialFn::cosine(1.0, 2, 0),
        FieldShape::Sin4pi => SpatialFn::sine(1.0, 2, 0),
    }
}

/// Rows `(statistic, field, index, value)` for a replicated statistic.
fn stat_rows(name: &str, s: &ReplicaStats) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = s
        .values
        .iter()
        .zip(&s.streams)
        .map(|(v, stream)| vec![name.into(), "replica".into(), stream.to_string(), num(*v)])
        .collect();
    rows.push(vec![name.into(), "mean".into(), "0".into(), num(s.mean)]);
    rows.push(vec![name.into(), "se".into(), "0".into(), num(s.se)]);
    rows
}

fn param_rows(name: &str, params: &[(&str, f64)]) -> Vec<Vec<String>> {
    params.iter().map(|(k, v)| vec![name.into(), format!("param:{k}"), "0".into(), num(*v)]).collect()
}

fn verify(cfg: &ExperimentConfig, out: &OutDir, which: Which) -> Result<(), CliError> {
    let st = &cfg.stats;
    let name = which.file_stem();
    let d = cfg.lattice.d;
    let (rows, verdict, details): (Vec<Vec<String>>, Verdict, Value) = match which {
        Which::Eoe => {
            let profile = cfg.profile()?;
            let table = eoe_table(&profile, st.rho, &st.sizes)?;
            let mut rows = param_rows(name, &[("rho", st.rho), ("tolerance", st.tolerance)]);
            for row in &table {
                for (field, v) in
                    [("k", row.k as f64), ("expectation", row.expectation), ("target", row.target), ("deviation", row.deviation)]
                {
                    rows.push(vec![name.into(), field.into(), row.n.to_string(), num(v)]);
                }
            }
            let decreasing = table.windows(2).all(|w| w[1].deviation < w[0].deviation);
            let last_ok = table.last().is_some_and(|r| r.deviation < st.tolerance);
            (rows, Verdict::from_bool(decreasing && last_ok), json!({ "rows": table }))
        }
        Which::OneBlock => {
            let ens = ensemble(cfg)?;
            let space = spatial(st.field);
            let weight = SpaceTimeWeight { time: None, space: Arc::new(move |u| space.value(u)) };
            let stats = one_block_stat(&ens, &weight, &cfg.cylinder(), st.ell)?;
            let mut rows = param_rows(name, &[("ell", st.ell as f64), ("horizon", cfg.run.horizon)]);
            rows.extend(stat_rows(name, &stats));
            (rows, Verdict::Diagnostic, json!({ "statistic": stats }))
        }
        Which::Continuity => {
            let ens = ensemble(cfg)?;
            let field = DiscreteTestField::stationary(d, spatial(st.field));
            let rep = continuity_residuals(&ens, &field, cfg.run.samples)?;
            let mut rows = param_rows(name, &[("samples", cfg.run.samples as f64)]);
            rows.extend(stat_rows("v1", &rep.v1));
            rows.extend(stat_rows("v2", &rep.v2));
            (rows, Verdict::Diagnostic, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Which::Qv => {
            let ens = ensemble(cfg)?;
            let field = DiscreteTestField::stationary(d, spatial(st.field));
            let rep = martingale_qv_check(&ens, &field)?;
            let mut rows = param_rows(
                name,
                &[("variance", rep.variance), ("variance_upper95", rep.variance_upper95), ("bound", rep.bound)],
            );
            rows.extend(stat_rows("martingale", &rep.martingale));
            rows.extend(stat_rows("initial_mass", &rep.initial_mass));
            (rows, rep.verdict, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Which::JumpBound => {
            let ens = ensemble(cfg)?;
            let rep = jump_rate_bound(&ens, st.eps, cfg.run.samples)?;
            let mut rows = param_rows(
                name,
                &[("phi_c", rep.phi_c), ("radius", rep.radius as f64), ("worst_excess", rep.worst_excess)],
            );
            for (x, (m, se)) in rep.site_mean.iter().zip(&rep.site_se).enumerate() {
                rows.push(vec!["site".into(), "mean".into(), x.to_string(), num(*m)]);
                rows.push(vec!["site".into(), "se".into(), x.to_string(), num(*se)]);
            }
            rows.extend(stat_rows("time_averaged_max", &rep.time_averaged_max));
            rows.extend(stat_rows("instantaneous_max", &rep.instantaneous_max));
            (rows, rep.verdict, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Which::DoubleBlock => {
            let ens = ensemble(cfg)?;
            let rep = double_block_stat(&ens, st.ell, st.eps, st.m, st.a, cfg.run.samples)?;
            let mut rows = param_rows(
                name,
                &[("ell", st.ell as f64), ("radius", rep.radius as f64), ("m", rep.m), ("a", rep.a)],
            );
            rows.extend(stat_rows("truncated", &rep.truncated));
            rows.extend(stat_rows("cutoff", &rep.cutoff));
            (rows, Verdict::Diagnostic, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Which::Energy => {
            let ens = ensemble(cfg)?;
            let rep = energy_stat(&ens, st.eps, cfg.run.samples)?;
            let mut rows = param_rows(name, &[("radius", rep.radius as f64)]);
            rows.extend(stat_rows("dictionary_max", &rep.dictionary_max));
            rows.extend(stat_rows("fisher", &rep.fisher));
            (rows, Verdict::Diagnostic, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
        Which::Hydro => {
            let ens = ensemble(cfg)?;
            let rep = hydro(&ens, st.grid, st.tolerance)?;
            let mut rows = param_rows(
                name,
                &[("grid", rep.grid as f64), ("weak_error", rep.weak_error), ("tolerance", rep.tolerance)],
            );
            for row in &rep.rows {
                rows.extend(stat_rows(&row.name, &row.empirical));
                rows.push(vec![row.name.clone(), "pde".into(), "0".into(), num(row.pde)]);
            }
            (rows, rep.verdict, serde_json::to_value(&rep).map_err(|e| CliError::Io(e.to_string()))?)
        }
    };
    out.write_csv(&format!("{name}.csv"), &["statistic", "field", "index", "value"], rows)?;
    let mut summary = BTreeMap::new();
    summary.insert("which", json!(name));
    summary.insert("verdict", json!(verdict));
    summary.insert("seed", json!(cfg.run.seed));
    summary.insert("replicas", json!(cfg.run.replicas));
    summary.insert("details", details);
    out.write_json(&format!("{name}_verdict.json"), &summary)?;
    if st.assert && verdict == Verdict::Fail {
        return Err(CliError::VerdictFailed { which: name.into(), detail: format!("see {name}_verdict.json") });
    }
    Ok(())
}
