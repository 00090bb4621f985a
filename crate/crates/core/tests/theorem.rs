//! End-to-end properties of `K_P^⋆(M)` across modules.

use kstar::freealg::{build_free_algebra, WeightSpec};
use kstar::gf2::F2Vector;
use kstar::kfunctor::{build_k, build_quotient, ideal_equalities_check, theorem_iso, Flavor};
use kstar::operads::{com_operad, compose_with_unary, lev_operad, truncated_lev, unary_operad, OpElement, Operad, Unary};
use kstar::unstable::{classical_section, direct_sum, free_module, GradedSection};
use proptest::prelude::*;

fn star(p: &Operad) -> OpElement {
    p.star().map_or_else(F2Vector::zero, F2Vector::from_term)
}

fn central_operads(cap: usize) -> Vec<Operad> {
    vec![
        com_operad(true, cap),
        lev_operad(cap),
        truncated_lev(2, cap),
        compose_with_unary(&com_operad(true, cap), &unary_operad(Unary::Qs(2), 32).unwrap()).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn any_section_gives_an_isomorphism(seed in any::<u64>(), which in 0usize..4, n in 1u32..3) {
        let cap = 7;
        let p = central_operads(cap as usize).swap_remove(which);
        let (m, so, _) = classical_section(n, cap).unwrap();
        let s = GradedSection::random(&so, seed);
        let iso = theorem_iso(&p, &star(&p), &m, so, s, cap, &WeightSpec::All).unwrap();
        let rt = iso.verify_roundtrip().unwrap();
        prop_assert!(rt.rows.iter().all(|r| r.matches));
        prop_assert!(iso.check_p_maps(seed, 20).unwrap() > 0);
    }

    #[test]
    fn transported_action_satisfies_adem_and_instability(seed in any::<u64>()) {
        let cap = 8;
        let p = com_operad(true, cap as usize);
        let (m, so, _) = classical_section(2, cap).unwrap();
        let s = GradedSection::random(&so, seed);
        let iso = theorem_iso(&p, &star(&p), &m, so, s, cap, &WeightSpec::All).unwrap();
        for g in iso.source.grades().collect::<Vec<_>>() {
            for t in iso.source.basis(g).unwrap() {
                let t = F2Vector::from_term(t.clone());
                let d = g.degree;
                if d == 0 {
                    continue;
                }
                // Sq^i ⊙ t = 0 for i > d, and Sq^1 ⊙ Sq^1 ⊙ t = 0
                if 2 * d < cap {
                    prop_assert!(iso.transported_sq(d + 1, &t).unwrap().is_zero());
                }
                if d + 2 <= cap {
                    let once = iso.transported_sq(1, &t).unwrap();
                    prop_assert!(iso.transported_sq(1, &once).unwrap().is_zero());
                }
            }
        }
    }
}

#[test]
fn flavors_agree_on_direct_sums() {
    // M = F(1) ⊕ F(2) is reduced; the section is the representative one
    let cap = 7;
    let m = direct_sum(&[&free_module(1, cap).unwrap(), &free_module(2, cap).unwrap()]).unwrap();
    let so = kstar::unstable::loops_via_cokernel(&m).unwrap();
    let s = GradedSection::representative(&so);
    for p in central_operads(cap as usize) {
        let a = build_free_algebra(&p, &m, cap, &WeightSpec::All).unwrap();
        let r = ideal_equalities_check(&a, &star(&p), Some((&so, &s))).unwrap();
        assert!(r.ok, "{}: {:?}", p.name(), r.rows.iter().find(|x| !x.equal));
        let iso = theorem_iso(&p, &star(&p), &m, so.clone(), s.clone(), cap, &WeightSpec::All).unwrap();
        iso.verify_roundtrip().unwrap();
    }
}

#[test]
fn quotient_normal_forms_are_idempotent_and_linear() {
    let cap = 8;
    let p = lev_operad(cap as usize);
    let k = build_k(&p, &star(&p), &free_module(1, cap).unwrap(), cap, &WeightSpec::All).unwrap();
    let amb = k.ambient();
    for g in amb.grades().collect::<Vec<_>>() {
        let basis = amb.basis(g).unwrap();
        for (i, x) in basis.iter().enumerate() {
            let x = F2Vector::from_term(x.clone());
            let rx = k.reduce(&x).unwrap();
            assert_eq!(k.reduce(&rx).unwrap(), rx);
            if let Some(y) = basis.get(i + 1) {
                let y = F2Vector::from_term(y.clone());
                assert_eq!(k.reduce(&(x.clone() + y.clone())).unwrap(), rx + k.reduce(&y).unwrap());
            }
        }
    }
}

#[test]
fn weighted_quotients_need_a_weight_list_and_skip_x() {
    let cap = 6;
    let p = compose_with_unary(&com_operad(true, cap), &unary_operad(Unary::D, 32).unwrap()).unwrap();
    let f1 = free_module(1, cap as u32).unwrap();
    assert!(build_free_algebra(&p, &f1, cap as u32, &WeightSpec::All).is_err());
    let a = build_free_algebra(&p, &f1, cap as u32, &WeightSpec::Only(vec![kstar::freealg::Dyadic::one()])).unwrap();
    assert!(build_quotient(a.clone(), &star(&p), Flavor::X, None).is_err());
    let r = ideal_equalities_check(&a, &star(&p), None).unwrap();
    assert!(r.rows.iter().all(|row| row.x.is_none()));
}
