use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spokesense::classifier::LabeledSet;
use spokesense::linalg::Matrix;
use spokesense::rng::Xoshiro256;
use spokesense::similarity::{build_library, euclidean_distance, mahalanobis_distance, rank_unknown};

fn vector(rng: &mut Xoshiro256, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.normal()).collect()
}

/// `B B^T / d + I`: symmetric positive definite with a bounded condition number.
fn spd(rng: &mut Xoshiro256, d: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..d).map(|_| vector(rng, d, 1.0)).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let dot: f64 = (0..d).map(|k| b[i][k] * b[j][k]).sum();
                    dot / d as f64 + if i == j { 1.0 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

fn explicit_inverse_distance(x: &[f64], y: &[f64], s: &[Vec<f64>]) -> f64 {
    let d = x.len();
    let m = DMatrix::from_fn(d, d, |i, j| s[i][j]);
    let inv = m.try_inverse().unwrap();
    let v = DVector::from_iterator(d, x.iter().zip(y).map(|(a, b)| a - b));
    (v.transpose() * inv * &v)[(0, 0)].sqrt()
}

proptest! {
    #[test]
    fn euclidean_metric_axioms(seed in any::<u64>(), d in 1usize..40) {
        let mut rng = Xoshiro256::new(seed);
        let (x, y, z) = (vector(&mut rng, d, 5.0), vector(&mut rng, d, 5.0), vector(&mut rng, d, 5.0));
        let dxy = euclidean_distance(&x, &y).unwrap();
        prop_assert!(dxy >= 0.0);
        prop_assert_eq!(dxy, euclidean_distance(&y, &x).unwrap());
        prop_assert_eq!(euclidean_distance(&x, &x).unwrap(), 0.0);
        prop_assert!(dxy > 0.0 || x == y);
        let dxz = euclidean_distance(&x, &z).unwrap();
        let dzy = euclidean_distance(&z, &y).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-12);
    }

    #[test]
    fn identity_covariance_gives_euclidean(seed in any::<u64>(), d in 1usize..30) {
        let mut rng = Xoshiro256::new(seed);
        let (x, y) = (vector(&mut rng, d, 3.0), vector(&mut rng, d, 3.0));
        let m = mahalanobis_distance(&x, &y, &Matrix::identity(d)).unwrap();
        prop_assert!((m - euclidean_distance(&x, &y).unwrap()).abs() <= 1e-12 * m.max(1.0));
    }

    #[test]
    fn agrees_with_explicit_inverse(seed in any::<u64>(), d in 1usize..=30) {
        let mut rng = Xoshiro256::new(seed);
        let s = spd(&mut rng, d);
        let (x, y) = (vector(&mut rng, d, 2.0), vector(&mut rng, d, 2.0));
        let got = mahalanobis_distance(&x, &y, &Matrix::from_rows(&s).unwrap()).unwrap();
        let want = explicit_inverse_distance(&x, &y, &s);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn invariant_under_linear_maps(seed in any::<u64>(), d in 1usize..=20) {
        let mut rng = Xoshiro256::new(seed);
        let s = spd(&mut rng, d);
        // Diagonally dominant, hence invertible and well conditioned.
        let a: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| 0.3 * rng.normal() / (d as f64).sqrt() + if i == j { 2.0 } else { 0.0 }).collect())
            .collect();
        let (x, y) = (vector(&mut rng, d, 2.0), vector(&mut rng, d, 2.0));
        let am = DMatrix::from_fn(d, d, |i, j| a[i][j]);
        let sm = DMatrix::from_fn(d, d, |i, j| s[i][j]);
        let s2 = &am * sm * am.transpose();
        let s2: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| 0.5 * (s2[(i, j)] + s2[(j, i)])).collect()).collect();
        let map = |v: &[f64]| -> Vec<f64> { (&am * DVector::from_column_slice(v)).iter().copied().collect() };
        let before = mahalanobis_distance(&x, &y, &Matrix::from_rows(&s).unwrap()).unwrap();
        let after = mahalanobis_distance(&map(&x), &map(&y), &Matrix::from_rows(&s2).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-8 * before.max(1.0), "{before} vs {after}");
    }

    #[test]
    fn more_regularization_never_increases_distance(seed in any::<u64>(), d in 1usize..15, e1 in 0.0..1.0f64, extra in 0.0..10.0f64) {
        let mut rng = Xoshiro256::new(seed);
        let s = Matrix::from_rows(&spd(&mut rng, d)).unwrap();
        let (x, y) = (vector(&mut rng, d, 2.0), vector(&mut rng, d, 2.0));
        let near = mahalanobis_distance(&x, &y, &s.add_diagonal(e1)).unwrap();
        let far = mahalanobis_distance(&x, &y, &s.add_diagonal(e1 + extra)).unwrap();
        prop_assert!(far <= near * (1.0 + 1e-12));
    }

    #[test]
    fn report_invariants(seed in any::<u64>(), standardize in any::<bool>()) {
        let mut rng = Xoshiro256::new(seed);
        let names: Vec<String> = (0..40).map(|i| format!("c{}", i % 4)).collect();
        let rows: Vec<Vec<f64>> = (0..40).map(|i| {
            let mut r = vector(&mut rng, 5, 1.0);
            r[0] += (i % 4) as f64 * 3.0;
            r
        }).collect();
        let set = LabeledSet::from_names(rows, &names).unwrap();
        let lib = build_library(&set, 1e-6, standardize).unwrap();
        prop_assert!(lib.pooled_covariance.asymmetry() <= 1e-12);
        let probe = vec![vector(&mut rng, 5, 2.0), vector(&mut rng, 5, 2.0)];
        let rep = rank_unknown(&probe, &lib).unwrap();
        prop_assert_eq!(rep.entries.len(), 4);
        let min_e = rep.entries.iter().map(|e| e.euclidean).fold(f64::INFINITY, f64::min);
        let min_m = rep.entries.iter().map(|e| e.mahalanobis).fold(f64::INFINITY, f64::min);
        for e in &rep.entries {
            prop_assert!(e.euclidean.is_finite() && e.euclidean >= 0.0);
            prop_assert!(e.mahalanobis.is_finite() && e.mahalanobis >= 0.0);
        }
        let at = |name: &str| rep.entries.iter().find(|e| e.class == name).unwrap();
        prop_assert_eq!(at(&rep.nearest_euclidean).euclidean, min_e);
        prop_assert_eq!(at(&rep.nearest_mahalanobis).mahalanobis, min_m);
        prop_assert_eq!(rep.metric_divergence, rep.nearest_euclidean != rep.nearest_mahalanobis);
    }
}

#[test]
fn class_mean_as_unknown_is_at_distance_zero() {
    let mut rng = Xoshiro256::new(8);
    let names: Vec<String> = (0..30).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
    let rows: Vec<Vec<f64>> = (0..30).map(|i| {
        let mut r = vector(&mut rng, 4, 1.0);
        r[1] += (i % 3) as f64 * 4.0;
        r
    }).collect();
    let set = LabeledSet::from_names(rows.clone(), &names).unwrap();
    let lib = build_library(&set, 1e-6, false).unwrap();
    let class_b: Vec<Vec<f64>> = rows.iter().zip(&set.labels).filter(|(_, &l)| l == 1).map(|(r, _)| r.clone()).collect();
    let rep = rank_unknown(&class_b, &lib).unwrap();
    assert_eq!(rep.nearest_euclidean, "b");
    assert_eq!(rep.nearest_mahalanobis, "b");
    assert!(!rep.metric_divergence);
    assert!(rep.entries[1].euclidean < 1e-12 && rep.entries[1].mahalanobis < 1e-9);
}
