use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{Ensemble, ReplicaStats, SpaceTimeWeight, Verdict, SE_MARGIN};
use crate::error::{invalid, Error, Result};
use crate::sim::blocks::{block_averages, window_sums, window_sums_f64};
use crate::sim::{Configuration, Lattice, LocalSum, SiteFunctional, SiteIntegrals, SiteQuantity};
use crate::thermo::{CylinderObservable, Offset, ThermoProfile};

/// `(1/|B_ℓ|) sum_{|y| <= ℓ} Ψ(τ_{x+y} η) - Ψ̄(η^ℓ(x))`, with `Ψ̄` cached by block sum.
#[derive(Clone)]
struct OneBlock {
    psi: CylinderObservable,
    profile: ThermoProfile,
    ell: usize,
    ball: Vec<Offset>,
    window: Vec<u32>,
    cache: Vec<f64>,
    error: Option<String>,
}

impl OneBlock {
    fn new(psi: CylinderObservable, profile: ThermoProfile, lattice: &Lattice, ell: usize) -> Self {
        let window = vec![0; psi.offsets().len()];
        Self { ball: lattice.ball_offsets(ell), psi, profile, ell, window, cache: Vec::new(), error: None }
    }

    fn psi_bar(&mut self, sum: u64) -> f64 {
        let s = sum as usize;
        if s >= self.cache.len() {
            self.cache.resize(s + 1, f64::NAN);
        }
        if self.cache[s].is_nan() {
            let rho = sum as f64 / self.ball.len() as f64;
            self.cache[s] = match self.psi.extended_homologue(&self.profile, rho) {
                Ok(v) => v,
                Err(e) => {
                    self.error.get_or_insert(e.to_string());
                    0.0
                }
            };
        }
        self.cache[s]
    }
}

impl SiteFunctional for OneBlock {
    fn radius(&self) -> usize {
        self.ell + self.psi.radius()
    }

    fn eval(&mut self, config: &Configuration, lattice: &Lattice, site: usize) -> f64 {
        let mut acc = 0.0;
        let mut sum = 0u64;
        for k in 0..self.ball.len() {
            let y = lattice.shift(site, self.ball[k]);
            let occ = config.occ(y);
            sum += occ as u64;
            for (slot, &off) in self.window.iter_mut().zip(self.psi.offsets()) {
                *slot = config.occ(lattice.shift(y, off));
            }
            acc += self.psi.eval(&self.window, &self.profile);
        }
        acc / self.ball.len() as f64 - self.psi_bar(sum)
    }
}

/// One-block statistic: per replica
/// `|∫_0^T N^{-d} sum_x H_t(x/N) [τ_x Ψ^ℓ(η_t) - Ψ̄(η^ℓ_t(x))] dt|`.
pub fn one_block_stat(
    ens: &Ensemble,
    weight: &SpaceTimeWeight,
    psi: &CylinderObservable,
    ell: usize,
) -> Result<ReplicaStats> {
    let lattice = ens.lattice();
    lattice.check_radius(ell + psi.radius())?;
    let weights = weight.on_lattice(lattice);
    let values = ens.map(|mut sim| {
        let functional = OneBlock::new(psi.clone(), ens.profile().clone(), lattice, ell);
        let mut sum = LocalSum::new(functional, lattice.clone(), weights.clone(), sim.config())?;
        if let Some(a) = &weight.time {
            sum = sum.with_time_factor(a.clone());
        }
        sim.run_until(ens.horizon(), &mut [&mut sum])?;
        if let Some(e) = &sum.functional().error {
            return Err(Error::InvalidArgument(format!("extended homologue failed: {e}")));
        }
        Ok(sum.integral().abs())
    })?;
    Ok(ens.stats(values))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpBoundReport {
    pub phi_c: f64,
    /// Block radius `[Nε]`.
    pub radius: usize,
    /// Replica mean of `(1/T) ∫ g^{[Nε]}(x) dt` for every site.
    pub site_mean: Vec<f64>,
    pub site_se: Vec<f64>,
    /// `max_x` of the time-averaged block rate, per replica.
    pub time_averaged_max: ReplicaStats,
    /// `max_x` over sample times of the instantaneous block rate, per replica.
    pub instantaneous_max: ReplicaStats,
    /// `max_x (mean_x - phi_c - 3 se_x)`; non-positive when every site passes.
    pub worst_excess: f64,
    pub verdict: Verdict,
}

/// ε-block-averaged empirical jump rate against `φ_c`.
pub fn jump_rate_bound(ens: &Ensemble, eps: f64, samples: usize) -> Result<JumpBoundReport> {
    let phi_c = ens.profile().phi_c();
    if !phi_c.is_finite() {
        return invalid("the jump-rate bound needs a condensing model (finite φ_c)");
    }
    let lattice = ens.lattice();
    let radius = (lattice.side() as f64 * eps).floor() as usize;
    lattice.check_radius(radius)?;
    let size = lattice.ball_size(radius) as f64;
    let horizon = ens.horizon();
    if !(horizon > 0.0) {
        return invalid("the jump-rate bound needs T > 0");
    }
    let times = ens.sample_times(samples.max(1));
    let runs = ens.map(|mut sim| {
        let mut integrals = SiteIntegrals::new(SiteQuantity::JumpRate, sim.config(), 0.0);
        let mut inst = 0.0f64;
        for &t in &times {
            sim.run_until(t, &mut [&mut integrals])?;
            let rates: Vec<f64> = (0..lattice.sites()).map(|x| sim.config().rate_at(x)).collect();
            let block = window_sums_f64(lattice, &rates, radius)?;
            inst = inst.max(block.iter().fold(0.0f64, |m, &v| m.max(v / size)));
        }
        let avg: Vec<f64> =
            window_sums_f64(lattice, &integrals.integrals(), radius)?.into_iter().map(|v| v / (size * horizon)).collect();
        Ok((avg, inst))
    })?;
    let r = runs.len() as f64;
    let sites = lattice.sites();
    let mut site_mean = vec![0.0; sites];
    let mut site_se = vec![0.0; sites];
    for x in 0..sites {
        let m = runs.iter().map(|run| run.0[x]).sum::<f64>() / r;
        let var = if runs.len() > 1 { runs.iter().map(|run| (run.0[x] - m).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
        site_mean[x] = m;
        site_se[x] = (var / r).sqrt();
    }
    let worst_excess =
        (0..sites).map(|x| site_mean[x] - phi_c - SE_MARGIN * site_se[x]).fold(f64::NEG_INFINITY, f64::max);
    Ok(JumpBoundReport {
        phi_c,
        radius,
        time_averaged_max: ens.stats(runs.iter().map(|run| run.0.iter().copied().fold(0.0, f64::max)).collect()),
        instantaneous_max: ens.stats(runs.iter().map(|run| run.1).collect()),
        verdict: Verdict::from_bool(worst_excess <= 0.0),
        worst_excess,
        site_mean,
        site_se,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoubleBlockReport {
    pub ell: usize,
    pub radius: usize,
    pub m: f64,
    pub a: f64,
    /// `∫ N^{-d} sum_x [(η^ℓ - M)^+]^{[Nε]}(x) 1{(η^ℓ)^{[Nε]}(x) <= M} dt`.
    pub truncated: ReplicaStats,
    /// `∫ N^{-d} sum_x (η^ℓ(x) ∧ M) 1{η^ℓ(x) > A} dt`.
    pub cutoff: ReplicaStats,
}

/// The two integrands at one configuration.
pub(crate) fn double_block_integrands(
    lattice: &Lattice,
    occ: &[u32],
    ell: usize,
    radius: usize,
    m: f64,
    a: f64,
) -> Result<(f64, f64)> {
    let inner = block_averages(lattice, occ, ell)?;
    let excess: Vec<f64> = inner.iter().map(|&v| (v - m).max(0.0)).collect();
    let outer_excess = window_sums_f64(lattice, &excess, radius)?;
    let block_sum: Vec<u64> = occ.iter().map(|&k| k as u64).collect();
    let double = window_sums(lattice, &window_sums(lattice, &block_sum, ell)?, radius)?;
    let outer_size = lattice.ball_size(radius) as f64;
    let double_size = outer_size * lattice.ball_size(ell) as f64;
    let vol = lattice.volume();
    let mut truncated = 0.0;
    for x in 0..occ.len() {
        if double[x] as f64 / double_size <= m {
            truncated += outer_excess[x] / outer_size;
        }
    }
    let cutoff: f64 = inner.iter().filter(|&&v| v > a).map(|&v| v.min(m)).sum();
    Ok((truncated / vol, cutoff / vol))
}

/// Truncated double-block and large-density cut-off statistics, time integrals
/// estimated by the midpoint rule on `samples` sub-intervals of `[0, T]`.
pub fn double_block_stat(
    ens: &Ensemble,
    ell: usize,
    eps: f64,
    m: f64,
    a: f64,
    samples: usize,
) -> Result<DoubleBlockReport> {
    let lattice = ens.lattice();
    let radius = (lattice.side() as f64 * eps).floor() as usize;
    if radius == 0 {
        return invalid(format!("[Nε] must be at least 1, got N = {}, ε = {eps}", lattice.side()));
    }
    lattice.check_radius(ell)?;
    lattice.check_radius(radius)?;
    if samples == 0 {
        return invalid("at least one sample time is required");
    }
    let dt = ens.horizon() / samples as f64;
    let runs = ens.map(|mut sim| {
        let (mut tr, mut cut) = (0.0, 0.0);
        for s in 0..samples {
            sim.run_until((s as f64 + 0.5) * dt, &mut [])?;
            let (p, q) = double_block_integrands(lattice, sim.config().occupancy(), ell, radius, m, a)?;
            tr += p * dt;
            cut += q * dt;
        }
        Ok((tr, cut))
    })?;
    Ok(DoubleBlockReport {
        ell,
        radius,
        m,
        a,
        truncated: ens.stats(runs.iter().map(|r| r.0).collect()),
        cutoff: ens.stats(runs.iter().map(|r| r.1).collect()),
    })
}

/// The fixed dictionary of `H` fields for the energy functional: shapes
/// `sin 2πu, sin 4πu, sin 6πu, cos 2πu, cos 4πu` in the first coordinate, each
/// at amplitudes `1/8, 1/4, 1/2, 1`. Entries are `(name, H, ∂_1 H)`.
pub fn energy_dictionary() -> Vec<(String, Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>)> {
    let shapes: [(&str, f64, bool); 5] =
        [("sin2pi", 1.0, true), ("sin4pi", 2.0, true), ("sin6pi", 3.0, true), ("cos2pi", 1.0, false), ("cos4pi", 2.0, false)];
    let mut out: Vec<(String, Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>)> = Vec::new();
    for (name, k, is_sin) in shapes {
        for amp in [0.125, 0.25, 0.5, 1.0] {
            let w = TAU * k;
            let f: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync> = if is_sin {
                Box::new(move |u| (amp * (w * u).sin(), amp * w * (w * u).cos()))
            } else {
                Box::new(move |u| (amp * (w * u).cos(), -amp * w * (w * u).sin()))
            };
            out.push((format!("{name}_x{amp}"), f));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub radius: usize,
    /// Dictionary maximum of `∫∫ (∂_1 H - 2H²) dσ̃`, per replica (a lower bound for `K_0`).
    pub dictionary_max: ReplicaStats,
    /// Index into [`energy_dictionary`] of the maximizer, per replica.
    pub maximizer: Vec<usize>,
    /// `∫ N^{-d} sum_x |∇^N σ̃|² / σ̃ dt`, per replica.
    pub fisher: ReplicaStats,
}

/// `(dictionary integrands, fisher integrand)` at one smoothed jump-rate field.
pub(crate) fn energy_integrands(lattice: &Lattice, sigma: &[f64], dict_h: &[Vec<(f64, f64)>]) -> (Vec<f64>, f64) {
    let vol = lattice.volume();
    let n = lattice.side() as f64;
    let dict = dict_h
        .iter()
        .map(|h| sigma.iter().zip(h).map(|(s, (v, dv))| (dv - 2.0 * v * v) * s).sum::<f64>() / vol)
        .collect();
    let mut fisher = 0.0;
    for x in 0..sigma.len() {
        for j in 0..lattice.dim() {
            let y = lattice.neighbor(x, 2 * j);
            let mid = 0.5 * (sigma[x] + sigma[y]);
            if mid > 0.0 {
                let grad = n * (sigma[y] - sigma[x]);
                fisher += grad * grad / mid;
            }
        }
    }
    (dict, fisher / vol)
}

/// Energy diagnostics from ε-block-smoothed jump-rate snapshots taken at the
/// midpoints of `samples` sub-intervals of `[0, T]`.
pub fn energy_stat(ens: &Ensemble, eps: f64, samples: usize) -> Result<EnergyReport> {
    let lattice = ens.lattice();
    let radius = (lattice.side() as f64 * eps).floor() as usize;
    lattice.check_radius(radius)?;
    if samples == 0 {
        return invalid("at least one sample time is required");
    }
    let size = lattice.ball_size(radius) as f64;
    let dictionary = energy_dictionary();
    let dict_h: Vec<Vec<(f64, f64)>> =
        dictionary.iter().map(|(_, h)| (0..lattice.sites()).map(|x| h(lattice.position(x)[0])).collect()).collect();
    let dt = ens.horizon() / samples as f64;
    let runs = ens.map(|mut sim| {
        let mut dict = vec![0.0; dict_h.len()];
        let mut fisher = 0.0;
        for s in 0..samples {
            sim.run_until((s as f64 + 0.5) * dt, &mut [])?;
            let rates: Vec<f64> = (0..lattice.sites()).map(|x| sim.config().rate_at(x)).collect();
            let sigma: Vec<f64> = window_sums_f64(lattice, &rates, radius)?.into_iter().map(|v| v / size).collect();
            let (d, f) = energy_integrands(lattice, &sigma, &dict_h);
            for (acc, v) in dict.iter_mut().zip(d) {
                *acc += v * dt;
            }
            fisher += f * dt;
        }
        let (arg, best) =
            dict.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        Ok((best, arg, fisher))
    })?;
    Ok(EnergyReport {
        radius,
        dictionary_max: ens.stats(runs.iter().map(|r| r.0).collect()),
        maximizer: runs.iter().map(|r| r.1).collect(),
        fisher: ens.stats(runs.iter().map(|r| r.2).collect()),
    })
}
