use lfwave_core::{
    CosetAddress, Complex64, FieldElement, GfBlock, GfParams, SpectralStepFunction,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = GfParams> {
    prop_oneof![Just((2, 1)), Just((3, 1)), Just((2, 2)), Just((5, 1))]
        .prop_map(|(p, s)| GfParams::new(p, s).unwrap())
}

fn element(params: GfParams) -> impl Strategy<Value = FieldElement> {
    prop::collection::vec((-4i32..4, 0..params.q()), 0..5).prop_map(move |bs| {
        let blocks = bs.into_iter().map(|(j, c)| (j, GfBlock::from_code(params, c)));
        // later entries overwrite earlier ones at the same index
        let mut map = std::collections::BTreeMap::new();
        for (j, b) in blocks {
            map.insert(j, b);
        }
        FieldElement::from_blocks(params, map).unwrap()
    })
}

fn address(params: GfParams, floor: i32) -> impl Strategy<Value = CosetAddress> {
    prop::collection::vec(0..params.q(), 4).prop_map(move |codes| {
        let digits: Vec<(i32, usize)> = codes.into_iter().enumerate().map(|(i, c)| (floor + i as i32, c)).collect();
        CosetAddress::from_codes(params, floor, &digits)
    })
}

fn spectrum(params: GfParams, floor: i32) -> impl Strategy<Value = SpectralStepFunction> {
    prop::collection::vec((address(params, floor), -1.0..1.0f64, -1.0..1.0f64), 1..6).prop_map(
        move |vals| {
            let vals = vals.into_iter().map(|(a, re, im)| (a, Complex64::new(re, im)));
            SpectralStepFunction::from_values(params, floor, vals.collect::<Vec<_>>()).unwrap()
        },
    )
}

proptest! {
    #[test]
    fn field_addition_is_a_group((x, y, z) in params().prop_flat_map(|p| (element(p), element(p), element(p)))) {
        let xy = x.add(&y).unwrap();
        prop_assert_eq!(&xy, &y.add(&x).unwrap());
        prop_assert_eq!(xy.add(&z).unwrap(), x.add(&y.add(&z).unwrap()).unwrap());
        prop_assert!(x.sub(&x).unwrap().is_zero());
        prop_assert_eq!(x.neg().neg(), x.clone());
    }

    #[test]
    fn norm_is_ultrametric((x, y) in params().prop_flat_map(|p| (element(p), element(p)))) {
        let s = x.add(&y).unwrap();
        prop_assert!(s.norm() <= x.norm().max(y.norm()) * (1.0 + 1e-12));
    }

    #[test]
    fn dilation_scales_norm(x in params().prop_flat_map(element), n in -3i32..3) {
        let q = x.params().q() as f64;
        let d = x.dilate(n);
        prop_assert!((d.norm() - x.norm() * q.powi(n)).abs() <= 1e-12 * d.norm().max(1.0));
        prop_assert_eq!(d.dilate(-n), x);
    }

    #[test]
    fn pairing_is_a_character((a, x, y) in params().prop_flat_map(|p| (address(p, -4), element(p), element(p)))) {
        let lhs = a.pairing(&x.add(&y).unwrap()).unwrap();
        let rhs = a.pairing(&x).unwrap() * a.pairing(&y).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!((lhs.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_is_multiplicative_in_the_character((a, b, x) in params().prop_flat_map(|p| (address(p, -4), address(p, -4), element(p)))) {
        let ab = a.mul(&b).unwrap();
        let lhs = ab.pairing(&x).unwrap();
        let rhs = a.pairing(&x).unwrap() * b.pairing(&x).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
        prop_assert!(a.mul(&a.inverse()).unwrap().is_identity());
    }

    #[test]
    fn refinement_keeps_measure_and_order(a in params().prop_flat_map(|p| address(p, -2)), k in 1i32..3) {
        let fine = a.refine(-2 - k).unwrap();
        prop_assert_eq!(fine.len(), a.params().q().pow(k as u32));
        let total: f64 = fine.iter().map(CosetAddress::measure).sum();
        prop_assert!((total - a.measure()).abs() < 1e-12);
        prop_assert!(fine.windows(2).all(|w| w[0] < w[1]));
        for c in &fine {
            prop_assert_eq!(&c.coarsen(-2).unwrap(), &a);
        }
    }

    #[test]
    fn inner_products_survive_refinement((f, g) in params().prop_flat_map(|p| (spectrum(p, -2), spectrum(p, -1))), k in 0i32..2) {
        let base = f.inner_product(&g).unwrap();
        let fr = f.refine(-2 - k).unwrap();
        let gr = g.refine(-2 - k).unwrap();
        let refined = fr.inner_product(&gr).unwrap();
        prop_assert!((base - refined).norm() < 1e-12);
        let back = g.inner_product(&f).unwrap();
        prop_assert!((base - back.conj()).norm() < 1e-12);
    }

    #[test]
    fn dilation_scales_integrals(f in params().prop_flat_map(|p| spectrum(p, -2)), n in -2i32..3) {
        let q = f.params().q() as f64;
        let g = f.dilate(n);
        let want = f.integral() * q.powi(n);
        prop_assert!((g.integral() - want).norm() < 1e-12 * want.norm().max(1.0));
        prop_assert!(g.dilate(-n).max_abs_diff(&f).unwrap() == 0.0);
    }
}
