//! Worked examples with closed-form or independently computed answers.

use std::collections::HashSet;
use std::sync::Arc;

use localtime_ito::harness::seed::split_seed;
use localtime_ito::harness::{run_experiment, ExperimentConfig};
use localtime_ito::ito::{
    catalog, ito_residual, ito_stochastic_integral, mollify, quadratic_covariation, time_integral_f,
    verify_smooth_ito_chain, BaseKernel, Cutoff, ItoConfig, LatticeSpec, MollifierKernel, WeakDiffFunction,
};
use localtime_ito::local_time::{estimate_local_time_occupation, estimate_local_time_tanaka, SpaceGrid};
use localtime_ito::lt_integral::{
    extend_epsilon_to_zero, h_norm, integrate_elementary, integrate_wrt_local_time, project_to_elementary,
    ElementaryFunction, LtIntegralPlan, RefinementSchedule, Smoothness, SpaceTimeFunction,
};
use localtime_ito::partitions::{
    make_partition_sequence, validate_condition_m, Partition, PartitionKind, PartitionSequence,
};
use localtime_ito::sim::{empirical_density_bound, simulate_path, IntegrandSpec, SamplePath, TimeGrid};
use localtime_ito::Error;
use rayon::prelude::*;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

fn unit() -> IntegrandSpec {
    IntegrandSpec::constant(1.0).unwrap()
}

fn grid(steps: usize) -> Arc<TimeGrid> {
    Arc::new(TimeGrid::uniform(steps).unwrap())
}

fn paths(spec: &IntegrandSpec, steps: usize, n: usize, master: u64) -> Vec<SamplePath> {
    let g = grid(steps);
    (0..n)
        .into_par_iter()
        .map(|i| simulate_path(spec, g.clone(), split_seed(master, i as u64)).unwrap())
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

// ---- simulation ----

#[test]
fn constant_sigma_two_has_quadratic_variation_4t() {
    let spec = IntegrandSpec::constant(2.0).unwrap();
    let path = simulate_path(&spec, grid(1000), 3).unwrap();
    for (qv, t) in path.cumulative_qv().iter().zip(path.times()) {
        assert!((qv - 4.0 * t).abs() < 1e-12);
    }
}

#[test]
fn terminal_variance_of_brownian_motion() {
    let g = TimeGrid::uniform(10_000).unwrap();
    let spec = unit();
    let x1: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|i| localtime_ito::sim::simulate_value_at(&spec, &g, split_seed(11, i), 10_000).unwrap())
        .collect();
    let v = variance(&x1);
    assert!((0.97..=1.03).contains(&v), "variance {v}");
}

#[test]
fn bounded_sine_stays_in_band() {
    let spec = IntegrandSpec::bounded_sine(1.0, 1.0).unwrap();
    for p in paths(&spec, 2000, 50, 5) {
        assert!(p.u.iter().all(|&u| (1.0..=2.0).contains(&u)));
    }
}

#[test]
fn gaussian_density_peaks() {
    let g = TimeGrid::uniform(400).unwrap();
    for (t, peak) in [(1.0, 0.398_942_280_4), (0.25, 0.797_884_560_8)] {
        let d = empirical_density_bound(&unit(), &g, t, 100_000, 100, 8).unwrap();
        assert!((d.max_density / peak - 1.0).abs() < 0.05, "t={t}: {}", d.max_density);
    }
    assert!(matches!(
        empirical_density_bound(&unit(), &g, 1.0, 0, 100, 8),
        Err(Error::EmptySample)
    ));
}

// ---- partitions ----

#[test]
fn uniform_partition_points_and_ratio() {
    let seq = make_partition_sequence(PartitionKind::Uniform, 4).unwrap();
    let finest = seq.finest();
    assert_eq!(finest.points().len(), 17);
    assert!(finest.points().iter().enumerate().all(|(i, p)| *p == i as f64 / 16.0));
    assert_eq!(finest.mesh(), 1.0 / 16.0);
    assert_eq!(seq.ratio_constant(), 2.0);
    let dyadic = make_partition_sequence(PartitionKind::GeometricDyadic, 8).unwrap();
    assert_eq!(dyadic.ratio_constant(), 2.0);
}

#[test]
fn condition_m_verdicts() {
    let seq = make_partition_sequence(PartitionKind::Uniform, 6).unwrap();
    let r = validate_condition_m(&seq, 4.0).unwrap();
    assert!(r.passes);
    assert_eq!(r.ratio_constant, 2.0);

    let p = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
    let same = PartitionSequence::custom(vec![p.clone(), p.clone(), p]).unwrap();
    assert!(matches!(
        validate_condition_m(&same, 4.0),
        Err(Error::MeshNotVanishing { .. })
    ));

    let family = (1..=4)
        .map(|n| Partition::new(vec![0.0, 4f64.powi(-n), 0.5, 1.0]).unwrap())
        .collect();
    let bad = PartitionSequence::custom(family).unwrap();
    assert!(matches!(
        validate_condition_m(&bad, 16.0),
        Err(Error::RatioUnbounded { .. })
    ));
}

// ---- local time ----

#[test]
fn local_time_vanishes_far_from_the_path() {
    let path = simulate_path(&unit(), grid(4000), 2).unwrap();
    let reach = path.x.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let level = (reach + 1.0).ceil();
    let space = SpaceGrid::symmetric(level + 1.0, 0.25).unwrap();
    let field = estimate_local_time_occupation(&path, &space, &[1.0], 0.25).unwrap();
    let k = field.level_index(level).unwrap();
    assert_eq!(field.value(field.times().len() - 1, k), 0.0);

    let tanaka = estimate_local_time_tanaka(&path, level, 1.0).unwrap();
    assert!(tanaka.abs() < 1e-12, "{tanaka}");
    assert_eq!(estimate_local_time_tanaka(&path, 0.0, 0.0).unwrap(), 0.0);
}

#[test]
fn estimators_agree_at_zero() {
    let all = paths(&unit(), 4000, 1000, 17);
    let space = SpaceGrid::symmetric(4.0, 1.0 / 64.0).unwrap();
    let (occ, tan): (Vec<f64>, Vec<f64>) = all
        .par_iter()
        .map(|p| {
            let f = estimate_local_time_occupation(p, &space, &[1.0], 1.0 / 32.0).unwrap();
            let l = f.value(f.times().len() - 1, f.level_index(0.0).unwrap());
            (l, estimate_local_time_tanaka(p, 0.0, 1.0).unwrap())
        })
        .unzip();
    let (mo, mt) = (mean(&occ), mean(&tan));
    assert!((mo / mt - 1.0).abs() < 0.05, "{mo} vs {mt}");
    assert!((mo / SQRT_2_OVER_PI - 1.0).abs() < 0.1, "{mo}");
    let cov = occ.iter().zip(&tan).map(|(a, b)| (a - mo) * (b - mt)).sum::<f64>() / (occ.len() - 1) as f64;
    assert!(cov / (variance(&occ) * variance(&tan)).sqrt() > 0.9);
}

// ---- weighted norm and elementary functions ----

fn box_fn() -> SpaceTimeFunction {
    SpaceTimeFunction::new("box", 1.0, Smoothness::PiecewiseContinuous, |x, _| {
        if x > 0.0 && x <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn norm_examples() {
    let zero = SpaceTimeFunction::new("zero", 1.0, Smoothness::Smooth, |_, _| 0.0).unwrap();
    assert_eq!(h_norm(&zero).unwrap().value, 0.0);
    assert!((h_norm(&box_fn()).unwrap().value - 2.0).abs() < 1e-9);
    let singular = SpaceTimeFunction::new("singular", 1.0, Smoothness::Continuous, |x, s| {
        if x > 0.0 && x <= 1.0 {
            s.powf(-0.5)
        } else {
            0.0
        }
    })
    .unwrap();
    assert!(matches!(h_norm(&singular), Err(Error::DivergentNorm { .. })));
}

#[test]
fn projection_examples() {
    let sign = SpaceTimeFunction::new("sign", 1.0, Smoothness::PiecewiseContinuous, |x, _| x.signum()).unwrap();
    let p = project_to_elementary(&sign, &[-1.0, 0.0, 1.0], &[0.0, 1.0]).unwrap();
    assert!(p.distance < 1e-12);

    let e = ElementaryFunction::from_fn(vec![-1.0, 0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0], |k, l| {
        (k + 2 * l) as f64
    })
    .unwrap();
    let again = project_to_elementary(
        &SpaceTimeFunction::from_elementary(e.clone()),
        e.x_breaks(),
        e.s_breaks(),
    )
    .unwrap();
    assert_eq!(again.function.coeffs(), e.coeffs());

    let linear = SpaceTimeFunction::new("x", 1.0, Smoothness::Continuous, |x, _| x).unwrap();
    let breaks = |n: usize| (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect::<Vec<_>>();
    let coarse = project_to_elementary(&linear, &breaks(8), &[0.0, 1.0])
        .unwrap()
        .distance;
    let fine = project_to_elementary(&linear, &breaks(16), &[0.0, 1.0])
        .unwrap()
        .distance;
    let ratio = fine / coarse;
    assert!((ratio - 0.5).abs() <= 0.15, "ratio {ratio}");
}

#[test]
fn elementary_integral_examples() {
    let path = simulate_path(&unit(), grid(1000), 4).unwrap();
    let space = SpaceGrid::symmetric(3.0, 0.5).unwrap();
    let field = estimate_local_time_occupation(&path, &space, &[0.5, 1.0], 0.5).unwrap();
    let zero = ElementaryFunction::from_fn(vec![-1.0, 1.0], vec![0.0, 1.0], |_, _| 0.0).unwrap();
    assert_eq!(integrate_elementary(&zero, &field, 1.0).unwrap(), 0.0);

    let c = 2.5;
    let cell = ElementaryFunction::from_fn(vec![-0.5, 1.0], vec![0.5, 1.0], |_, _| c).unwrap();
    let (k0, k1) = (field.level_index(-0.5).unwrap(), field.level_index(1.0).unwrap());
    let (l0, l1) = (field.time_index(0.5).unwrap(), field.time_index(1.0).unwrap());
    let rect = field.value(l1, k1) - field.value(l0, k1) - field.value(l1, k0) + field.value(l0, k0);
    assert!((integrate_elementary(&cell, &field, 1.0).unwrap() - c * rect).abs() < 1e-12);
}

#[test]
fn refinement_levels_reproduce_elementary_integrals() {
    let path = simulate_path(&unit(), grid(1000), 9).unwrap();
    let e = ElementaryFunction::from_fn(
        vec![-3.0, 0.0, 3.0],
        vec![0.0, 1.0],
        |k, _| if k == 0 { -1.0 } else { 1.0 },
    )
    .unwrap();
    let f = SpaceTimeFunction::from_elementary(e.clone());
    let schedule = RefinementSchedule::default();
    let plan = LtIntegralPlan::new(3.0, (0.0, 1.0), &schedule, path.grid.mesh()).unwrap();
    let field = plan.field(&path, &[]).unwrap();
    let levels = plan.integrate(&plan.project(&f).unwrap(), &field).unwrap();
    let direct = integrate_elementary(&e, &field, 1.0).unwrap();
    assert!(
        levels.iter().all(|v| (v - direct).abs() < 1e-12),
        "{levels:?} vs {direct}"
    );
    let r = integrate_wrt_local_time(&f, &path, 1.0, &schedule).unwrap();
    assert!((r.value - direct).abs() < 1e-12);
}

#[test]
fn linear_integrand_gives_minus_twice_the_quadratic_variation() {
    let f = SpaceTimeFunction::new("2x", 6.0, Smoothness::Continuous, |x, _| 2.0 * x).unwrap();
    let schedule = RefinementSchedule::default();
    let v: Vec<f64> = paths(&unit(), 1000, 200, 21)
        .par_iter()
        .map(|p| integrate_wrt_local_time(&f, p, 1.0, &schedule).unwrap().value)
        .collect();
    let m = mean(&v);
    assert!((m / -2.0 - 1.0).abs() < 0.1, "mean {m}");
}

#[test]
fn epsilon_extension_examples() {
    let path = simulate_path(&unit(), grid(1024), 12).unwrap();
    let f = SpaceTimeFunction::new("s^-1/8 sign", 3.0, Smoothness::PiecewiseContinuous, |x, s| {
        s.powf(-0.125) * x.signum()
    })
    .unwrap();
    let schedule = RefinementSchedule::default();
    let eps = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0];
    let exts: Vec<_> = paths(&unit(), 1024, 200, 13)
        .par_iter()
        .map(|p| extend_epsilon_to_zero(&f, p, 1.0, &eps, &schedule).unwrap())
        .collect();
    assert!(exts.iter().all(|e| e.limit.is_finite() && !e.warning));
    assert!(exts.iter().all(|e| e.values.iter().all(|(_, v)| v.is_finite())));
    // Mean absolute increments shrink along the schedule.
    let inc = |j: usize| {
        mean(
            &exts
                .iter()
                .map(|e| (e.values[j + 1].1 - e.values[j].1).abs())
                .collect::<Vec<_>>(),
        )
    };
    assert!(inc(1) < inc(0), "{} vs {}", inc(1), inc(0));

    let single = extend_epsilon_to_zero(&f, &path, 1.0, &[1.0 / 16.0], &schedule).unwrap();
    assert!(single.warning);
    assert_eq!(single.limit, single.values[0].1);
}

// ---- covariation and path integrals ----

#[test]
fn covariation_examples() {
    let path = simulate_path(&unit(), grid(10_000), 31).unwrap();
    let seq = make_partition_sequence(PartitionKind::Uniform, 13).unwrap();
    let c = quadratic_covariation(|_, _| 3.0, &path, &seq, 1.0).unwrap();
    assert!(c.levels.iter().all(|(_, v)| *v == 0.0));
    let x = quadratic_covariation(|x, _| x, &path, &seq, 1.0).unwrap();
    assert!((x.limit - 1.0).abs() < 0.02 * 1.0 + 0.03, "{}", x.limit);
    assert!((x.limit / path.quadratic_variation() - 1.0).abs() < 0.05);
}

#[test]
fn sign_covariation_is_twice_the_local_time() {
    let seq = make_partition_sequence(PartitionKind::Uniform, 10).unwrap();
    let v: Vec<f64> = paths(&unit(), 1024, 4000, 40)
        .par_iter()
        .map(|p| quadratic_covariation(|x, _| x.signum(), p, &seq, 1.0).unwrap().limit)
        .collect();
    let m = mean(&v);
    assert!((m / (2.0 * SQRT_2_OVER_PI) - 1.0).abs() < 0.07, "{m}");
}

#[test]
fn forward_time_integral_examples() {
    let path = simulate_path(&unit(), grid(8192), 32).unwrap();
    let seq = make_partition_sequence(PartitionKind::Uniform, 13).unwrap();
    let g = time_integral_f(|_, t| (3.0 * t).sin(), &path, &seq, 1.0).unwrap();
    assert!((g - 3f64.sin()).abs() < 1e-12);
    assert_eq!(time_integral_f(|x, _| x, &path, &seq, 1.0).unwrap(), 0.0);
}

#[test]
fn stochastic_integral_examples() {
    let path = simulate_path(&unit(), grid(1000), 33).unwrap();
    assert_eq!(ito_stochastic_integral(|_, _| 0.0, &path, 1.0).unwrap(), 0.0);
    let one = ito_stochastic_integral(|_, _| 1.0, &path, 0.5).unwrap();
    assert!((one - path.x[500]).abs() < 1e-12);

    let v: Vec<f64> = paths(&unit(), 1000, 10_000, 34)
        .par_iter()
        .map(|p| ito_stochastic_integral(|x, _| x, p, 1.0).unwrap())
        .collect();
    assert!(mean(&v).abs() < 4.0 * (variance(&v) / v.len() as f64).sqrt());
    assert!((variance(&v) / 0.5 - 1.0).abs() < 0.05, "{}", variance(&v));
}

// ---- mollifier and formula ----

#[test]
fn mollifier_examples() {
    let lattice = LatticeSpec::default();
    let c = mollify(&catalog::constant(1.5), &MollifierKernel::bump(8), &lattice).unwrap();
    assert!((c.value(0.3, 0.4) - 1.5).abs() < 1e-12);

    let cut = Cutoff::new(4.0, 6.0).unwrap();
    let id = mollify(&catalog::identity(cut), &MollifierKernel::bump(8), &lattice).unwrap();
    for x in [-2.0, -0.3, 0.0, 1.7] {
        assert!((id.value(x, 0.5) - x).abs() < 1e-9);
    }

    let abs = catalog::abs(cut);
    let sup = |n: u32| {
        let m = mollify(&abs, &MollifierKernel::bump(n), &lattice).unwrap();
        (0..=400)
            .map(|i| -2.0 + i as f64 / 100.0)
            .map(|x| (m.value(x, 0.5) - x.abs()).abs())
            .fold(0.0, f64::max)
    };
    let (a, b, c) = (sup(8), sup(16), sup(32));
    for r in [b / a, c / b] {
        assert!((r - 0.5).abs() < 0.15, "ratio {r}");
    }
}

#[test]
fn constant_has_zero_residual_and_square_is_unbiased() {
    let cfg = ItoConfig::default();
    let path = simulate_path(&unit(), grid(1000), 50).unwrap();
    let r = ito_residual(&catalog::constant(2.0), &path, 1.0, 0.0, &cfg).unwrap();
    assert_eq!(r.residual, 0.0);

    let sq = catalog::square(Cutoff::new(4.0, 6.0).unwrap());
    let v: Vec<f64> = paths(&unit(), 1000, 2000, 51)
        .par_iter()
        .map(|p| ito_residual(&sq, p, 1.0, 0.0, &cfg).unwrap().residual)
        .collect();
    let (m, se) = (mean(&v), (variance(&v) / v.len() as f64).sqrt());
    assert!(m.abs() <= 2.0 * se + 1e-12 && m.abs() <= 0.02, "{m} +- {se}");
}

#[test]
fn chain_with_one_kernel_has_no_verdict() {
    let path = simulate_path(&unit(), grid(512), 60).unwrap();
    let t = verify_smooth_ito_chain(
        &catalog::abs_trunc(),
        &BaseKernel::Bump,
        &[16],
        &path,
        1.0,
        1.0 / 64.0,
        &ItoConfig::default(),
        &LatticeSpec::default(),
    )
    .unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.verdict, None);
}

#[test]
fn smooth_function_chain_distances_are_small() {
    let path = simulate_path(&unit(), grid(512), 61).unwrap();
    let smooth = WeakDiffFunction::new(
        "gauss",
        5.0,
        Smoothness::Smooth,
        |x, _| (-x * x).exp(),
        |x, _| -2.0 * x * (-x * x).exp(),
        |_, _| 0.0,
    )
    .unwrap();
    let t = verify_smooth_ito_chain(
        &smooth,
        &BaseKernel::Bump,
        &[16, 32],
        &path,
        1.0,
        1.0 / 64.0,
        &ItoConfig::default(),
        &LatticeSpec::default(),
    )
    .unwrap();
    let last = t.rows.last().unwrap();
    assert!(last.distances[..4].iter().all(|d| *d < 0.01), "{:?}", last.distances);
}

// ---- harness ----

#[test]
fn zero_function_residual_experiment() {
    let cfg = ExperimentConfig::from_toml_str("kind = 'ito-residual'\nfunction = 'zero'\nn_paths = 200\nmesh = 1e-3\n")
        .unwrap();
    let o = run_experiment(&cfg).unwrap();
    assert_eq!(o.summary.mean, 0.0);
    assert_eq!(o.summary.stderr, 0.0);
    assert!(o.pass());
}

#[test]
fn derived_seeds() {
    assert_ne!(split_seed(7, 0), split_seed(7, 1));
    assert_eq!(split_seed(7, 0), split_seed(7, 0));
    let seeds: HashSet<u64> = (0..1_000_000).map(|i| split_seed(12345, i)).collect();
    assert_eq!(seeds.len(), 1_000_000);
}
