mod common;

use proptest::prelude::*;
use snnbound::bounds::{
    all_bounds, comparator_bound, gen_bound_spn, rad_lower, rad_upper_frob, rad_upper_path,
};
use snnbound::datasets::Dataset;
use snnbound::linalg::{frobenius_norm, l2_norm};
use snnbound::measures::{class_report, init_activation_sum, measure_report, MeasureOptions};
use snnbound::model::init_kaiming;
use snnbound::rademacher::mc_rad_estimate;
use snnbound::trainer::sgd_train;
use snnbound::{Activation, BoundInputs, Matrix, MeasureReport, RadConfig, SeededRng, TrainConfig};

fn unit_columns(d: usize, n: usize, rng: &mut SeededRng) -> Matrix {
    let mut x = Matrix::from_fn(d, n, |_, _| rng.normal());
    for j in 0..n {
        let norm = l2_norm(&x.column(j));
        for i in 0..d {
            x.set(i, j, x.get(i, j) / norm);
        }
    }
    x
}

fn synthetic(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let x = unit_columns(d, n, &mut rng);
    let y = (0..n).map(|i| if x.get(0, i) >= 0.0 { 1.0 } else { -1.0 }).collect();
    Dataset::new(x, y, "synthetic").unwrap()
}

#[test]
fn upper_bound_dominates_sigma_batches() {
    let mut rng = SeededRng::new(6);
    let x = unit_columns(3, 6, &mut rng);
    let w0 = Matrix::from_fn(2, 3, |_, _| rng.normal());
    let (r_w, r_v) = (1.5, 1.0);
    let report = class_report(&x, &w0, r_w, r_v, Activation::Relu, 1, &MeasureOptions::default()).unwrap();
    let upper = rad_upper_path(&BoundInputs::new(report, 0.01).unwrap()).unwrap();
    for batch in 0..200 {
        let cfg = RadConfig {
            sigma_samples: 16,
            pga_steps: 40,
            pga_restarts: 2,
            exhaustive: false,
            seed: batch,
            ..RadConfig::default()
        };
        let est = mc_rad_estimate(&x, &w0, r_w, r_v, Activation::Relu, 1, &cfg).unwrap();
        assert!(est.mean <= upper, "batch {batch}: {} > {upper}", est.mean);
    }
}

#[test]
fn upper_bound_scales_with_data() {
    let mut rng = SeededRng::new(9);
    let x = unit_columns(4, 10, &mut rng);
    let w0 = Matrix::zeros(3, 4);
    let opts = MeasureOptions::default();
    let a = class_report(&x, &w0, 1.2, 0.8, Activation::Relu, 1, &opts).unwrap();
    let b = class_report(&x.scale(2.0), &w0, 1.2, 0.8, Activation::Relu, 1, &opts).unwrap();
    let ua = rad_upper_path(&BoundInputs::new(a, 0.01).unwrap()).unwrap();
    let ub = rad_upper_path(&BoundInputs::new(b, 0.01).unwrap()).unwrap();
    assert!((ub - 2.0 * ua).abs() <= 1e-12 * ub, "{ub} vs 2·{ua}");
}

#[test]
fn init_term_below_linear_init_term() {
    let mut rng = SeededRng::new(12);
    for act in [Activation::Relu, Activation::Tanh] {
        let x = unit_columns(5, 20, &mut rng);
        let w0 = Matrix::from_fn(7, 5, |_, _| rng.normal());
        let lhs = init_activation_sum(&w0, &x, act).unwrap().sqrt();
        let rhs = act.lipschitz() * frobenius_norm(&w0.matmul(&x).unwrap());
        assert!(lhs <= rhs * (1.0 + 1e-12), "{act}: {lhs} > {rhs}");
    }
}

fn trained(seed: u64) -> (MeasureReport, Dataset) {
    let ds = synthetic(120, 6, seed);
    let (mut p, s) = init_kaiming(&mut SeededRng::new(seed), 16, 6, 1, Activation::Relu).unwrap();
    let cfg = TrainConfig {
        batch_size: 32,
        learning_rate: 0.05,
        max_epochs: 5,
        seed,
        ..TrainConfig::default()
    };
    sgd_train(&mut p, &s, &ds, &cfg).unwrap();
    (measure_report(&p, &s, &ds).unwrap(), ds)
}

#[test]
fn spn_bound_matches_hand_composition() {
    let (r, _) = trained(3);
    let ks = r.kappa_s.unwrap();
    let n = r.n as f64;
    let first = 4.0 / n * (ks + 1.0) * r.x_fro;
    let second = 3.0 * ((2.0 * (ks + 1.0) * (ks + 2.0) / 0.01f64).ln() / (2.0 * n)).sqrt();
    let got = gen_bound_spn(&BoundInputs::new(r, 0.01).unwrap()).unwrap();
    assert!((got - (first + second)).abs() < 1e-12);
}

#[test]
fn untrained_network_comparators() {
    let ds = synthetic(50, 4, 1);
    let (p, s) = init_kaiming(&mut SeededRng::new(1), 9, 4, 1, Activation::Relu).unwrap();
    let r = measure_report(&p, &s, &ds).unwrap();
    assert_eq!((r.r_w, r.v_dist, r.kappa), (0.0, 0.0, 0.0));
    let i = BoundInputs::new(r.clone(), 0.01).unwrap();
    let n = r.n as f64;
    assert_eq!(comparator_bound(5, &i).unwrap().value, 0.0);
    assert_eq!(comparator_bound(6, &i).unwrap().value, 0.0);
    let row7 = (r.w0_spectral * r.r_v + 3.0) * r.x_fro / n;
    assert!((comparator_bound(7, &i).unwrap().value - row7).abs() < 1e-12 * row7);
    let row9 = r.w0_spectral * r.r_v * r.b_x / n.sqrt();
    assert!((comparator_bound(9, &i).unwrap().value - row9).abs() < 1e-12 * row9);
    // unit-norm data
    assert!((r.b_x - 1.0).abs() < 1e-12);
}

#[test]
fn bounds_survive_csv_round_trip() {
    let (r, _) = trained(4);
    let fields = r.csv_fields();
    let refs: Vec<&str> = fields.iter().map(String::as_str).collect();
    let back = MeasureReport::from_csv_fields(r.m, &refs).unwrap();
    let a = all_bounds(&BoundInputs::new(r, 0.01).unwrap()).unwrap();
    let b = all_bounds(&BoundInputs::new(back, 0.01).unwrap()).unwrap();
    assert_eq!(a.len(), 14);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.method, y.method);
        assert_eq!(x.value.to_bits(), y.value.to_bits(), "{}", x.method);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn lower_path_frob_ordering(
        seed in any::<u64>(),
        n in 1usize..9,
        d in 1usize..5,
        m in 1usize..5,
        extra in 0.0f64..3.0,
        r_v in 0.01f64..3.0,
    ) {
        let mut rng = SeededRng::new(seed);
        let x = unit_columns(d, n, &mut rng);
        let w0 = Matrix::from_fn(m, d, |_, _| rng.normal());
        let r0 = snnbound::linalg::row_l2_norms(&w0).into_iter().fold(f64::INFINITY, f64::min);
        let r_w = r0 + extra;
        let report = class_report(&x, &w0, r_w, r_v, Activation::Relu, 1, &MeasureOptions::default()).unwrap();
        let inputs = BoundInputs::new(report, 0.01).unwrap();
        let lower = rad_lower(&inputs).unwrap();
        let frob = rad_upper_frob(&inputs).unwrap();
        let path = rad_upper_path(&inputs).unwrap();
        prop_assert!(lower <= path, "{lower} > {path}");
        prop_assert!(path <= frob, "{path} > {frob}");
    }
}

/// Shrinking the class supremum does not always tighten the path bound: the
/// peeling constant grows when ⌈log₂(2 R_W R_V √(cm) / sup κ)⌉ steps up.
#[test]
fn smaller_supremum_can_loosen_path_bound() {
    let x = Matrix::from_rows(&[&[1.0]]);
    let w0 = Matrix::from_rows(&[&[0.5]]);
    let report = class_report(&x, &w0, 1.0, 1.0, Activation::Relu, 1, &MeasureOptions::default()).unwrap();
    let mut inputs = BoundInputs::new(report, 0.01).unwrap();
    let frob = rad_upper_frob(&inputs).unwrap();
    inputs.sup_kappa = Some(0.85);
    assert!(rad_upper_path(&inputs).unwrap() > frob);
    // far enough below the default the linear factor wins again
    inputs.sup_kappa = Some(0.1);
    assert!(rad_upper_path(&inputs).unwrap() < frob);
}
