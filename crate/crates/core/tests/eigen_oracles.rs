use mnewton::linalg::{jacobi_eigs, SymMatrix};
use mnewton::problems::{toeplitz_rayleigh, TOEPLITZ_LAMBDA_MIN};
use mnewton::sphere::{
    cg_extreme_eig, cg_extreme_eig_observed, default_start, extreme_pair, EigConfig, Extreme,
    PairConfig,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn to_nalgebra(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
}

fn random_sym(n: usize, entries: &[f64]) -> SymMatrix {
    let mut it = entries.iter().cycle();
    SymMatrix::from_lower_fn(n, |_, _| *it.next().unwrap())
}

fn sorted_nalgebra_eigs(m: &SymMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(to_nalgebra(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #[test]
    fn jacobi_matches_nalgebra(n in 1usize..12, entries in prop::collection::vec(-10.0f64..10.0, 78)) {
        let m = random_sym(n, &entries);
        let ours = jacobi_eigs(&m).unwrap();
        let theirs = sorted_nalgebra_eigs(&m);
        let scale = 1.0 + m.frobenius_norm();
        for (a, b) in ours.values.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
        }
        for (i, v) in ours.vectors.iter().enumerate() {
            let mv = m.matvec(v).unwrap();
            let res = mv.iter().zip(v).map(|(a, b)| (a - ours.values[i] * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-11 * scale);
        }
    }

    #[test]
    fn extreme_pair_matches_nalgebra(n in 2usize..20, entries in prop::collection::vec(-5.0f64..5.0, 210)) {
        let m = random_sym(n, &entries);
        let pair = extreme_pair(&m, &PairConfig::default(), None, None).unwrap();
        let theirs = sorted_nalgebra_eigs(&m);
        let (lo, hi) = (theirs[0], theirs[n - 1]);
        prop_assert!((pair.lo.value - lo).abs() <= 1e-8 * (1.0 + lo.abs()));
        prop_assert!((pair.hi.value - hi).abs() <= 1e-8 * (1.0 + hi.abs()));
    }

    #[test]
    fn sphere_iterates_stay_on_the_sphere(n in 2usize..16, entries in prop::collection::vec(-3.0f64..3.0, 136), max in any::<bool>()) {
        let m = random_sym(n, &entries);
        let which = if max { Extreme::Max } else { Extreme::Min };
        let cfg = EigConfig::for_dim(which, n);
        let mut prev: Option<f64> = None;
        cg_extreme_eig_observed(&m, &default_start(n), &cfg, |s| {
            let norm = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
            let q_norm = s.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xq: f64 = s.x.iter().zip(&s.direction).map(|(a, b)| a * b).sum();
            assert!(xq.abs() <= 1e-10 * q_norm);
            if let Some(p) = prev {
                let step = which.sign() * (s.rho - p);
                assert!(step >= -1e-12 * (1.0 + p.abs()), "Rayleigh quotient moved the wrong way");
            }
            prev = Some(s.rho);
        })
        .unwrap();
    }
}

#[test]
fn toeplitz_smallest_eigenvalue() {
    let t = toeplitz_rayleigh();
    let dense = jacobi_eigs(&t).unwrap();
    assert!((dense.min().0 - TOEPLITZ_LAMBDA_MIN).abs() <= 1e-12);
    assert!((sorted_nalgebra_eigs(&t)[0] - TOEPLITZ_LAMBDA_MIN).abs() <= 1e-12);

    let cfg = EigConfig::new(Extreme::Min, 1e-9, 160).unwrap();
    let alt: Vec<f64> = (0..16)
        .map(|i| if i % 2 == 0 { -0.25 } else { 0.25 })
        .collect();
    let mut e1 = vec![0.0; 16];
    e1[0] = 1.0;
    for start in [alt, e1] {
        let est = cg_extreme_eig(&t, &start, &cfg).unwrap();
        assert!(est.converged);
        assert!(
            (est.value - TOEPLITZ_LAMBDA_MIN).abs() <= 1e-9,
            "{}",
            est.value
        );
        assert!(est.residual_norm(&t) <= 1e-9 * (1.0 + est.value.abs()));
    }
}
