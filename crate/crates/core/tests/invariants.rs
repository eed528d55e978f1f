//! Property tests across module boundaries.

use num_traits::Zero;
use proptest::prelude::*;

use psdlab::forms::{random_form, random_sos};
use psdlab::gram::{canonical_gram, filtration, gram_apply, kernel_basis, GramSpace};
use psdlab::membership::{
    moment_from_points, single_point_certificate, sos_test, verify_certificate, Certificate, Options, SosOutcome,
    Verdict,
};
use psdlab::psdcore::{eigen_sym, ldlt_exact, psd_project, reconstruct_exact, Ldlt, Matrix};
use psdlab::rational::{frac, int};
use psdlab::{MonomialOrder, OrderedBasis, Rational, SymMat};

fn shape() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((1, 2)), Just((2, 2)), Just((2, 3)), Just((3, 2))]
}

fn order() -> impl Strategy<Value = MonomialOrder> {
    prop_oneof![Just(MonomialOrder::LexDesc), Just(MonomialOrder::Example34)]
}

fn small_symmetric(dim: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-4i32..=4, dim * dim).prop_map(move |v| {
        Matrix::from_fn(dim, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            v[a * dim + b] as f64
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_gram_reproduces_the_form(seed in any::<u64>(), (n, d) in shape(), ord in order()) {
        let f = random_form(seed, n, 2 * d as u32);
        let basis = OrderedBasis::new(n, d, ord).unwrap();
        let g = canonical_gram(&f, &basis).unwrap();
        prop_assert_eq!(gram_apply(&g, &basis).unwrap(), f);
    }

    #[test]
    fn kernel_maps_to_zero(seed in any::<u64>(), (n, d) in shape(), ord in order()) {
        let basis = OrderedBasis::new(n, d, ord).unwrap();
        let ker = kernel_basis(&basis);
        // a random rational combination of generators still has zero image
        let mut combo = SymMat::zeros(basis.len());
        for (i, m) in ker.iter().enumerate() {
            combo = combo.add(&m.scale(&frac(((seed >> (i % 60)) & 7) as i64 - 3, 1 + (i as i64 % 4))));
        }
        prop_assert!(gram_apply(&combo, &basis).unwrap().is_zero());
    }

    #[test]
    fn fiber_projection_is_idempotent(seed in any::<u64>(), (n, d) in shape(), entries in proptest::collection::vec(-6i64..=6, 100)) {
        let f = random_form(seed, n, 2 * d as u32);
        let basis = OrderedBasis::lex(n, d).unwrap();
        let space = GramSpace::new(&f, &basis).unwrap();
        let dim = basis.len();
        let mut a = SymMat::zeros(dim);
        for s in 0..dim {
            for t in s..dim {
                a.set(s, t, frac(entries[(s * dim + t) % entries.len()], 3));
            }
        }
        let p = space.project_exact(&a);
        prop_assert!(space.contains(&p));
        prop_assert_eq!(space.project_exact(&p), p);
    }

    #[test]
    fn psd_projection_is_psd_and_idempotent(m in (1usize..=6).prop_flat_map(small_symmetric)) {
        let p = psd_project(&m).unwrap();
        let lmin = eigen_sym(&p).unwrap().min();
        prop_assert!(lmin >= -1e-9 * p.frobenius().max(1.0));
        let q = psd_project(&p).unwrap();
        prop_assert!(q.sub(&p).frobenius() <= 1e-9 * p.frobenius().max(1.0));
    }

    #[test]
    fn exact_ldlt_reconstructs_gram_products(rows in proptest::collection::vec(proptest::collection::vec(-3i64..=3, 5), 1..5)) {
        let dim = 5;
        let mut a = SymMat::zeros(dim);
        for r in &rows {
            for s in 0..dim {
                for t in s..dim {
                    a.add_to(s, t, &int(r[s] * r[t]));
                }
            }
        }
        let Ldlt::Factor(fac) = ldlt_exact(&a) else { panic!("a Gram product is PSD") };
        prop_assert_eq!(reconstruct_exact(&fac), a);
    }

    #[test]
    fn moment_matrices_of_points_are_psd(xs in proptest::collection::vec(proptest::collection::vec(-5i64..=5, 3), 1..4)) {
        let basis = OrderedBasis::lex(2, 2).unwrap();
        let pts: Vec<(Rational, Vec<Rational>)> = xs
            .iter()
            .map(|x| (int(1), basis.veronese_exact(&x.iter().map(|&v| int(v)).collect::<Vec<_>>())))
            .collect();
        let m = moment_from_points(&basis, &pts).unwrap();
        prop_assert!(ldlt_exact(&m.m).is_psd());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn accepted_certificates_verify_and_tampering_is_caught(seed in 0u64..1000) {
        let (f, _) = random_sos(seed, 2, 2, 4).unwrap();
        let SosOutcome::Accepted(cert) = sos_test(&f, &Options::with_seed(seed)).unwrap() else {
            panic!("random_sos({seed},2,2,4) not accepted");
        };
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        prop_assert_eq!(verify_certificate(&cert.clone().into(), &f, &desc).unwrap(), Verdict::Valid);

        let mut bad = cert.clone();
        let v = bad.gram.get(0, 0) + int(1);
        bad.gram.set(0, 0, v);
        let verdict = verify_certificate(&Certificate::from(bad), &f, &desc).unwrap();
        prop_assert!(matches!(verdict, Verdict::Invalid(_)));
    }

    #[test]
    fn negative_points_give_valid_certificates(seed in any::<u64>(), xs in proptest::collection::vec(-4i64..=4, 3)) {
        let f = random_form(seed, 2, 4);
        let x: Vec<Rational> = xs.iter().map(|&v| frac(v, 2)).collect();
        let desc = filtration(2, 2, MonomialOrder::LexDesc).unwrap();
        let value = f.eval_exact(&x);
        let cert = single_point_certificate(&f, &desc, desc.top_level(), &x).unwrap();
        prop_assert_eq!(cert.is_some(), value < Rational::zero());
        if let Some(c) = cert {
            prop_assert_eq!(c.gap.clone(), int(-1));
            let mut scaled = c.clone();
            scaled.points[0].weight = &scaled.points[0].weight * frac(1, 2);
            let verdict = verify_certificate(&Certificate::from(scaled), &f, &desc).unwrap();
            prop_assert!(matches!(verdict, Verdict::Invalid(_)));
        }
    }
}
