//! Structural invariants checked over random inputs.

use std::sync::Arc;

use localtime_ito::harness::pairwise_sum;
use localtime_ito::harness::seed::split_seed;
use localtime_ito::local_time::{estimate_local_time_occupation, LocalTimeField, SpaceGrid};
use localtime_ito::lt_integral::{integrate_elementary, ElementaryFunction};
use localtime_ito::partitions::{make_partition_sequence, Partition, PartitionKind};
use localtime_ito::sim::{simulate_path, IntegrandSpec, SamplePath, TimeGrid};
use proptest::prelude::*;

fn path(seed: u64, sine: bool) -> SamplePath {
    let spec = if sine {
        IntegrandSpec::bounded_sine(1.0, 1.0).unwrap()
    } else {
        IntegrandSpec::constant(1.0).unwrap()
    };
    simulate_path(&spec, Arc::new(TimeGrid::uniform(400).unwrap()), seed).unwrap()
}

/// Field on levels `k / 4` in `[-2, 2]` at times `l / 8`.
fn field(p: &SamplePath) -> LocalTimeField {
    let space = SpaceGrid::symmetric(2.0, 0.25).unwrap();
    let times: Vec<f64> = (0..=8).map(|l| l as f64 / 8.0).collect();
    estimate_local_time_occupation(p, &space, &times, 0.25).unwrap()
}

/// Random elementary function whose breaks sit on the field grid.
fn elementary() -> impl Strategy<Value = ElementaryFunction> {
    (
        proptest::sample::subsequence((0..=16).collect::<Vec<i32>>(), 2..6),
        proptest::sample::subsequence((0..=8).collect::<Vec<i32>>(), 2..5),
        proptest::collection::vec(-5.0f64..5.0, 25),
    )
        .prop_map(|(xs, ss, c)| {
            let xb: Vec<f64> = xs.iter().map(|&k| -2.0 + k as f64 / 4.0).collect();
            let sb: Vec<f64> = ss.iter().map(|&l| l as f64 / 8.0).collect();
            let m = xb.len() - 1;
            ElementaryFunction::from_fn(xb, sb, |k, l| c[(k + m * l) % c.len()]).unwrap()
        })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_is_linear(f in elementary(), a in -3.0f64..3.0, seed in 0u64..1000, sine: bool) {
        let fld = field(&path(seed, sine));
        let g = ElementaryFunction::from_fn(f.x_breaks().to_vec(), f.s_breaks().to_vec(), |k, l| (k as f64) - 0.5 * l as f64).unwrap();
        let sum = f.scaled(a).try_add(&g).unwrap();
        let lhs = integrate_elementary(&sum, &fld, 1.0).unwrap();
        let rhs = a * integrate_elementary(&f, &fld, 1.0).unwrap() + integrate_elementary(&g, &fld, 1.0).unwrap();
        prop_assert!(close(lhs, rhs), "{lhs} vs {rhs}");
    }

    #[test]
    fn splitting_a_cell_leaves_the_integral_unchanged(f in elementary(), seed in 0u64..1000) {
        let fld = field(&path(seed, false));
        let xb = f.x_breaks();
        let sb = f.s_breaks();
        // Insert every field level and time inside the support.
        let fine_x: Vec<f64> = (0..=16).map(|k| -2.0 + k as f64 / 4.0).filter(|x| *x >= xb[0] && *x <= *xb.last().unwrap()).collect();
        let fine_s: Vec<f64> = (0..=8).map(|l| l as f64 / 8.0).filter(|s| *s >= sb[0] && *s <= *sb.last().unwrap()).collect();
        let refined = ElementaryFunction::from_fn(fine_x.clone(), fine_s.clone(), |k, l| {
            f.eval(0.5 * (fine_x[k] + fine_x[k + 1]), 0.5 * (fine_s[l] + fine_s[l + 1]))
        }).unwrap();
        let a = integrate_elementary(&f, &fld, 1.0).unwrap();
        let b = integrate_elementary(&refined, &fld, 1.0).unwrap();
        prop_assert!(close(a, b), "{a} vs {b}");
    }

    #[test]
    fn csv_round_trip(f in elementary()) {
        let back = ElementaryFunction::from_csv(&f.to_csv()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn norm_is_homogeneous(f in elementary(), c in -10.0f64..10.0) {
        prop_assert!(close(f.scaled(c).h_norm(), c.abs() * f.h_norm()));
    }

    #[test]
    fn euler_increments_and_field_monotonicity(seed in any::<u64>(), sine: bool) {
        let p = path(seed, sine);
        for i in 0..p.steps() {
            let dx = p.x[i + 1] - p.x[i];
            let dw = p.w[i + 1] - p.w[i];
            prop_assert!((dx - p.u[i] * dw).abs() <= 1e-12 * (1.0 + dx.abs()));
            prop_assert!(p.qv_increments[i] > 0.0);
        }
        let fld = field(&p);
        for k in 0..fld.space().len() {
            for l in 1..fld.times().len() {
                prop_assert!(fld.value(l, k) >= fld.value(l - 1, k));
                prop_assert!(fld.value(l - 1, k) >= 0.0);
            }
        }
    }

    #[test]
    fn bisection_halves_the_mesh(cuts in proptest::collection::btree_set(1u32..1000, 1..20)) {
        let mut pts = vec![0.0];
        pts.extend(cuts.iter().map(|c| *c as f64 / 1000.0));
        pts.push(1.0);
        let p = Partition::new(pts).unwrap();
        let b = p.bisect();
        prop_assert_eq!(b.points().len(), 2 * p.points().len() - 1);
        prop_assert!(p.points().iter().all(|x| b.points().contains(x)));
        prop_assert!(close(b.mesh(), p.mesh() / 2.0));
        prop_assert_eq!(Partition::from_csv_line(&p.to_csv_line()).unwrap(), p);
    }

    #[test]
    fn built_in_sequences_are_nested(depth in 1u32..10, dyadic: bool) {
        let kind = if dyadic { PartitionKind::GeometricDyadic } else { PartitionKind::Uniform };
        let seq = make_partition_sequence(kind, depth).unwrap();
        for w in seq.family().windows(2) {
            prop_assert!(w[0].points().iter().all(|x| w[1].points().contains(x)));
            prop_assert!(w[1].mesh() < w[0].mesh());
        }
        prop_assert!(seq.ratio_constant() <= 2.0);
    }

    #[test]
    fn derived_seeds_are_distinct(master in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(split_seed(master, i), split_seed(master, j));
        prop_assert_eq!(split_seed(master, i), split_seed(master, i));
    }

    #[test]
    fn pairwise_sum_matches_naive(v in proptest::collection::vec(-1e3f64..1e3, 0..500)) {
        let naive: f64 = v.iter().sum();
        prop_assert!((pairwise_sum(&v) - naive).abs() <= 1e-9 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>()));
    }
}
