use std::sync::Arc;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use zrp_core::empirical::{time_integrate, WeightTerm};
use zrp_core::ensembles::{sample_initial, CanonicalTable, InitialCondition};
use zrp_core::parallel::map_replicas;
use zrp_core::rng::stream_rng;
use zrp_core::sim::{Configuration, Lattice, LocalSum, Occupancy, Simulation};
use zrp_core::thermo::{JumpRateSpec, ThermoProfile};

/// Pearson statistic and p-value, merging trailing cells until each expects at least 5.
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, f64) {
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o as f64;
        e_acc += e;
        if e_acc >= 5.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        *obs.last_mut().unwrap() += o_acc;
        *exp.last_mut().unwrap() += e_acc;
    }
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (obs.len() - 1) as f64;
    (stat, 1.0 - ChiSquared::new(dof).unwrap().cdf(stat))
}

fn evans(b: f64) -> ThermoProfile {
    ThermoProfile::new(Arc::new(JumpRateSpec::evans(b).unwrap())).unwrap()
}

#[test]
fn canonical_law_is_invariant_under_the_dynamics() {
    let (n, k) = (8, 12);
    let profile = evans(4.0);
    let table = CanonicalTable::build(profile.spec(), n, k).unwrap();
    let lattice = Arc::new(Lattice::new(1, n).unwrap());
    let mut rng = stream_rng(41, 0);
    let config = Configuration::new(profile.spec().clone(), table.sample(&mut rng)).unwrap();
    let mut sim = Simulation::new(lattice, config, rng).unwrap();
    let samples = 20_000;
    let mut counts = vec![0u64; k + 1];
    for s in 1..=samples {
        sim.run_until(0.1 * s as f64, &mut []).unwrap();
        counts[sim.config().occ(0) as usize] += 1;
    }
    let expected: Vec<f64> = (0..=k).map(|j| samples as f64 * table.marginal(n, k, j)).collect();
    let (stat, p) = chi_square(&counts, &expected);
    assert!(p > 0.001, "χ² = {stat}, p = {p}");
}

#[test]
fn product_sampler_matches_site_law() {
    let profile = evans(4.0);
    let lattice = Lattice::new(1, 1000).unwrap();
    let phi = profile.mean_jump_rate(0.3);
    let law = profile.site_law(phi).unwrap();
    let mut counts = vec![0u64; 60];
    let mut rng = stream_rng(42, 0);
    for _ in 0..100 {
        let occ = sample_initial(&InitialCondition::GrandCanonical { density: 0.3 }, &lattice, &profile, &mut rng).unwrap();
        for k in occ {
            counts[(k as usize).min(59)] += 1;
        }
    }
    let mut expected: Vec<f64> = (0..59).map(|k| 1e5 * law.probability(k)).collect();
    expected.push(1e5 - expected.iter().sum::<f64>());
    let (stat, p) = chi_square(&counts, &expected);
    assert!(p > 0.001, "χ² = {stat}, p = {p}");
}

#[test]
fn single_walker_equidistributes() {
    let n = 16;
    let spec = Arc::new(JumpRateSpec::evans(0.0).unwrap());
    let lattice = Arc::new(Lattice::new(1, n).unwrap());
    let ends = map_replicas(8000, |r| {
        let mut occ = vec![0u32; n];
        occ[0] = 1;
        let config = Configuration::new(spec.clone(), occ)?;
        let mut sim = Simulation::new(lattice.clone(), config, stream_rng(43, r as u64))?;
        sim.run_until(1.0, &mut [])?;
        Ok(sim.config().occupancy().iter().position(|&k| k == 1).unwrap())
    })
    .unwrap();
    let mut counts = vec![0u64; n];
    for x in ends {
        counts[x] += 1;
    }
    let (stat, p) = chi_square(&counts, &vec![8000.0 / n as f64; n]);
    assert!(p > 0.001, "χ² = {stat}, p = {p}");
}

#[test]
fn grand_canonical_law_is_stationary_at_b0() {
    // ν_ρ with ρ = 1/2: P(η(x) = 0) = 2/3.
    let profile = evans(0.0);
    let lattice = Arc::new(Lattice::new(1, 64).unwrap());
    let ic = InitialCondition::GrandCanonical { density: 0.5 };
    let fractions = map_replicas(200, |r| {
        let mut rng = stream_rng(44, r as u64);
        let occ = sample_initial(&ic, &lattice, &profile, &mut rng)?;
        let config = Configuration::new(profile.spec().clone(), occ)?;
        let mut sim = Simulation::new(lattice.clone(), config, rng)?;
        sim.run_until(0.05, &mut [])?;
        Ok(sim.config().occupancy().iter().filter(|&&k| k == 0).count() as f64 / 64.0)
    })
    .unwrap();
    let mean = fractions.iter().sum::<f64>() / 200.0;
    let sd = (fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    assert!((mean - 2.0 / 3.0).abs() < 3.0 * sd / 200f64.sqrt(), "{mean} ± {}", sd / 200f64.sqrt());
}

#[test]
fn exact_time_integral_matches_fine_riemann_sum() {
    let profile = evans(4.0);
    let lattice = Arc::new(Lattice::new(1, 32).unwrap());
    let occ: Vec<u32> = (0..32).map(|x| (x % 5) as u32).collect();
    let weights: Vec<f64> = (0..32).map(|x| (x as f64 / 32.0 * std::f64::consts::TAU).cos()).collect();
    let a: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|t: f64| 1.0 + 10.0 * t);
    let config = Configuration::new(profile.spec().clone(), occ).unwrap();
    let mut sum = LocalSum::new(Occupancy, lattice.clone(), weights.clone(), &config).unwrap().with_time_factor(a.clone());
    let mut sim = Simulation::new(lattice, config, stream_rng(45, 0)).unwrap();
    let steps = 20_000;
    let h = 0.01 / steps as f64;
    let mut riemann = 0.0;
    let mut sampled = 0.0f64;
    for s in 0..steps {
        let t = (s as f64 + 0.5) * h;
        sim.run_until(t, &mut [&mut sum]).unwrap();
        let pair: f64 = sim.config().occupancy().iter().zip(&weights).map(|(&k, w)| k as f64 * w).sum();
        riemann += a(t) * pair * h;
        sampled = sampled.max((pair - sum.current()).abs());
    }
    sim.run_until(0.01, &mut [&mut sum]).unwrap();
    assert!(sampled < 1e-12, "running sum drifted by {sampled}");
    let exact = sum.integral();
    let scale: f64 = weights.iter().map(|w| w.abs()).sum::<f64>() * 4.0 * 0.01 * 1.1;
    assert!((exact - riemann).abs() < 0.02 * scale, "{exact} vs {riemann}");
}

#[test]
fn time_integrate_is_reproducible() {
    let profile = evans(0.0);
    let lattice = Arc::new(Lattice::new(1, 32).unwrap());
    let run = || {
        let config = Configuration::new(profile.spec().clone(), vec![1; 32]).unwrap();
        let mut sim = Simulation::new(lattice.clone(), config, stream_rng(46, 0)).unwrap();
        time_integrate(&mut sim, 0.02, Occupancy, &[WeightTerm::stationary(vec![1.0 / 32.0; 32])]).unwrap()
    };
    let first = run();
    assert_eq!(first.to_bits(), run().to_bits());
    assert!((first - 0.02).abs() < 1e-12);
}
