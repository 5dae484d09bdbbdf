//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture` to see the
//! lines for passing criteria too.
//!
//! Criteria 1 and 7 assert the specified target values verbatim. Two of
//! their assertions are known to be unreachable by the degree-truncated
//! presentation itself (the truncation provably stabilizes at a nonzero
//! group for products of multiplicative-type factors, because a symbol at
//! degree d is only killed through points of degree about 2d and beyond,
//! past any admissible cap); those asserts fail honestly rather than being
//! weakened. The classical fact they proxy (vanishing of Milnor K-theory
//! of finite fields) is verified exactly in criterion 1 by an independent
//! Steinberg-relation computation, which passes.

use num_bigint::BigUint;
use num_traits::One;

use mackey_core::chow::{genjac_order, relative_chow_stabilized, product_bound, Modulus};
use mackey_core::ffield::Field;
use mackey_core::groups::{value_group, Functor, GroupValue};
use mackey_core::mackey::{
    naive_structure, reduce_symbol, stabilization_scan, validate_certificate, FinitePoint,
    Presentation, Strategy, Symbol,
};
use mackey_core::poly::parse_poly;
use mackey_core::reciprocity::{
    find_conductor, reciprocity_sum, test_functions, OpenCurve, Section,
};
use mackey_core::report;
use mackey_core::zlinalg::{cokernel_structure, IntMatrix};

fn f(p: u64, d: u32) -> Field {
    Field::new(p, d).unwrap()
}

/// Exact order of the Milnor K-group of a finite field in weight n: the
/// n-th tensor power of the cyclic unit group modulo Steinberg instances,
/// computed through the cokernel machinery.
fn milnor_k_order(field: &Field, n: u32) -> BigUint {
    assert!(n >= 2);
    let q1 = field.order() - 1;
    if q1 == 1 {
        return BigUint::one();
    }
    let gamma = field.primitive_generator();
    // discrete logs of every unit
    let mut dlog = std::collections::HashMap::new();
    let mut acc = field.one();
    for i in 0..q1 {
        dlog.insert(acc.clone(), i as i64);
        acc = acc.mul(&gamma);
    }
    // the tensor power is cyclic of order q-1 generated by gamma (x) ... (x)
    // gamma; a Steinberg instance {a, 1-a, c_3, ..., c_n} contributes the
    // relation dlog(a) dlog(1-a) prod dlog(c_i); taking every slot value
    // spans the same lattice as taking c_i = gamma
    let mut rows: Vec<Vec<i64>> = vec![vec![q1 as i64]];
    for a in field.elements() {
        if a.is_zero() || a.is_one() {
            continue;
        }
        let one_minus = field.one().sub(&a);
        let coeff = (dlog[&a] * dlog[&one_minus]).rem_euclid(q1 as i64);
        rows.push(vec![coeff]);
    }
    let m = IntMatrix::from_rows(&rows);
    cokernel_structure(&m, 1).order().expect("finite")
}

#[test]
fn criterion_1_milnor_k_theory_vanishing() {
    // Part A: the classical fact itself, verified exactly: K_n of a finite
    // field vanishes for n >= 2 (Steinberg-relation computation).
    let mut milnor_ok = true;
    for (field, n) in [
        (f(2, 1), 2),
        (f(3, 1), 2),
        (f(5, 1), 2),
        (f(2, 1), 3),
        (f(3, 1), 3),
        (f(7, 1), 2),
    ] {
        let o = milnor_k_order(&field, n);
        if !o.is_one() {
            milnor_ok = false;
            println!(
                "criterion 1: Milnor K_{} over {} has order {} (expected 1)",
                n, field, o
            );
        }
    }
    assert!(milnor_ok, "exact Milnor K-groups must vanish");

    // Part B: the specified product-engine assertion, verbatim: the
    // truncated presentations stabilize to the trivial group by bound 3.
    let mut failures = Vec::new();
    let cases: Vec<(Field, Vec<Functor>)> = vec![
        (f(2, 1), vec![Functor::Gm, Functor::Gm]),
        (f(3, 1), vec![Functor::Gm, Functor::Gm]),
        (f(5, 1), vec![Functor::Gm, Functor::Gm]),
        (f(2, 1), vec![Functor::Gm, Functor::Gm, Functor::Gm]),
        (f(3, 1), vec![Functor::Gm, Functor::Gm, Functor::Gm]),
    ];
    for (base, functors) in &cases {
        let scan = stabilization_scan(functors, base, 1, 3).unwrap();
        let s = scan.final_structure();
        if !(scan.stabilized && s.is_trivial()) {
            failures.push(format!(
                "({}) over {}: order {:?}, stabilized {}",
                functors
                    .iter()
                    .map(|x| x.label())
                    .collect::<Vec<_>>()
                    .join(","),
                base,
                s.order(),
                scan.stabilized
            ));
        }
    }
    if failures.is_empty() {
        println!("criterion 1 (Milnor K-theory vanishing): PASS");
    } else {
        println!(
            "criterion 1 (Milnor K-theory vanishing): FAIL for the truncation proxy — {:?}; \
             the exact Milnor K computation above PASSES; the degree-truncated product \
             presentation provably stabilizes at a nonzero group here (a symbol of degree d \
             dies only through points of degree about 2d and beyond, past the field caps), \
             so this assert records the gap rather than hiding it",
            failures
        );
        panic!("criterion 1 truncation assertions failed: {:?}", failures);
    }
}

#[test]
fn criterion_2_unipotent_semiabelian_vanishing() {
    // stabilize to order 1 by bound 2
    let f5 = f(5, 1);
    let ell = Functor::Elliptic(f5.from_u64(1), f5.from_u64(1));
    let cases: Vec<(Field, Vec<Functor>)> = vec![
        (f(3, 1), vec![Functor::Ga, Functor::Gm]),
        (f(5, 1), vec![Functor::Ga, Functor::Gm]),
        (f(7, 1), vec![Functor::Ga, Functor::Gm]),
        (f5.clone(), vec![Functor::Ga, ell.clone()]),
    ];
    for (base, functors) in &cases {
        let scan = stabilization_scan(functors, base, 1, 2).unwrap();
        assert!(
            scan.stabilized && scan.final_structure().is_trivial(),
            "{:?} over {} did not vanish",
            functors,
            base
        );
    }
    // exhaustive zero-certificates over structure generators at degree <= 2
    let mut certs = 0usize;
    for (base, functors) in &cases {
        for k in 1..=2u32 {
            let y = Field::new(base.p(), base.degree() * k).unwrap();
            let ga = value_group(&functors[0], &y).unwrap();
            let semi = value_group(&functors[1], &y).unwrap();
            for a in &ga.generators {
                for b in &semi.generators {
                    let s = Symbol::new(
                        functors.clone(),
                        FinitePoint::new(base.clone(), y.clone()).unwrap(),
                        vec![a.clone(), b.clone()],
                    )
                    .unwrap();
                    let cert = reduce_symbol(&s, Strategy::Divisibility).unwrap();
                    assert!(cert.claims_zero(), "symbol {:?} not proved zero", s);
                    validate_certificate(&cert).unwrap();
                    certs += 1;
                }
            }
        }
    }
    assert!(certs > 0);
    println!(
        "criterion 2 (unipotent x semi-abelian vanishing): PASS ({} certificates re-validated)",
        certs
    );
}

#[test]
fn criterion_3_finiteness_of_unipotent_products() {
    let f3 = f(3, 1);
    let gj = Functor::GenJac(parse_poly(&f3, "t^2").unwrap());
    let cases: Vec<(Field, Vec<Functor>)> = vec![
        (f(2, 1), vec![Functor::Ga, Functor::Ga]),
        (f(3, 1), vec![Functor::Ga, Functor::Ga]),
        (f3.clone(), vec![gj.clone(), gj.clone()]),
    ];
    for (base, functors) in &cases {
        let scan = stabilization_scan(functors, base, 1, 3).unwrap();
        // finiteness: free rank 0 at every bound
        for (d, s) in &scan.per_degree {
            assert_eq!(s.free_rank, 0, "{:?} over {} at bound {}", functors, base, d);
        }
        // exact agreement with the naive elementary-tensor oracle at the
        // same bound
        let naive = naive_structure(functors, base, 3).unwrap();
        assert_eq!(
            scan.final_structure(),
            &naive,
            "{:?} over {}: structured {:?} vs naive {:?}",
            functors,
            base,
            scan.final_structure(),
            naive
        );
        println!(
            "criterion 3 detail: {:?} over {}: orders {:?}, consecutive-equal {}",
            functors.iter().map(|x| x.label()).collect::<Vec<_>>(),
            base,
            scan.per_degree
                .iter()
                .map(|(_, s)| s.order().unwrap().to_string())
                .collect::<Vec<_>>(),
            scan.stabilized
        );
    }
    println!(
        "criterion 3 (finiteness with free rank 0, naive-oracle agreement at the bound): PASS"
    );
}

#[test]
fn criterion_4_structured_vs_naive_oracle() {
    for p in [2u64, 3] {
        let base = f(p, 1);
        let gj = Functor::GenJac(parse_poly(&base, "t^2").unwrap());
        let pool = [Functor::Ga, Functor::Gm, gj];
        for i in 0..pool.len() {
            for j in i..pool.len() {
                let functors = vec![pool[i].clone(), pool[j].clone()];
                let structured = Presentation::build_cached(&functors, &base, 2).unwrap();
                let naive = naive_structure(&functors, &base, 2).unwrap();
                assert_eq!(
                    structured.structure(),
                    &naive,
                    "{:?} over {}",
                    functors,
                    base
                );
            }
        }
    }
    println!("criterion 4 (structured vs naive layer presentations): PASS");
}

#[test]
fn criterion_5_reciprocity_law() {
    for p in [3u64, 5] {
        let base = f(p, 1);
        // multiplicative section t on the torus
        let curve = OpenCurve::parse(&base, "P1-{0,inf}").unwrap();
        let section = Section::parse(&base, "GM:t").unwrap();
        let conductor = find_conductor(&section, &curve, 3, 120, 17).unwrap();
        assert_eq!(
            conductor,
            mackey_core::chow::Divisor::parse(&base, "(0)+(inf)").unwrap(),
            "GM conductor over {}",
            base
        );
        let fam = test_functions(&curve, &conductor, 120, 17).unwrap();
        assert!(fam.len() >= 100, "only {} instances over {}", fam.len(), base);
        for func in &fam {
            assert!(
                reciprocity_sum(&section, func, &curve).unwrap().is_identity(),
                "GM instance failed over {} for f = {}",
                base,
                func
            );
        }
        // additive section t on the affine line
        let curve = OpenCurve::parse(&base, "P1-{inf}").unwrap();
        let section = Section::parse(&base, "GA:t").unwrap();
        let conductor = find_conductor(&section, &curve, 3, 120, 17).unwrap();
        assert_eq!(
            conductor,
            mackey_core::chow::Divisor::parse(&base, "2*inf").unwrap(),
            "GA conductor over {}",
            base
        );
        let fam = test_functions(&curve, &conductor, 120, 17).unwrap();
        assert!(fam.len() >= 100);
        for func in &fam {
            assert!(
                reciprocity_sum(&section, func, &curve).unwrap().is_identity(),
                "GA instance failed over {} for f = {}",
                base,
                func
            );
        }
    }
    println!("criterion 5 (reciprocity law, conductors (0)+(inf) and 2*(inf)): PASS");
}

#[test]
fn criterion_6_relative_chow_vs_jacobian() {
    let start = std::time::Instant::now();
    let cases = [
        (2u64, "(t^2+t+1)"),
        (2, "2*inf"),
        (3, "2*inf"),
        (3, "3*0"),
        (3, "(0)+(inf)"),
        (5, "(0)+(inf)"),
        (5, "(t^2+2)"),
    ];
    let case_count = cases.len();
    assert!(case_count >= 6);
    for (p, spec) in cases {
        let base = f(p, 1);
        let m = Modulus::parse(&base, spec).unwrap();
        let t0 = std::time::Instant::now();
        let res = relative_chow_stabilized(&m).unwrap();
        assert!(res.stabilized, "{} over {} did not stabilize", spec, base);
        assert!(
            res.oracle_agrees,
            "{} over {}: CH^0 = {:?} vs Jacobian order {}",
            spec,
            base,
            res.last.degree_zero.order(),
            res.oracle_order
        );
        assert!(
            t0.elapsed().as_secs() < 300,
            "per-modulus runtime target exceeded"
        );
    }
    println!(
        "criterion 6 (relative Chow vs generalized Jacobian, {} moduli in {:?}): PASS",
        case_count,
        start.elapsed()
    );
}

#[test]
fn criterion_7_product_bound() {
    let f5 = f(5, 1);
    let m = Modulus::parse(&f5, "(0)+(inf)").unwrap();
    let b = product_bound(&m, &m, 3).unwrap();
    // the three factors, reproduced independently
    assert_eq!(b.j1_order, genjac_order(&m).unwrap());
    assert_eq!(b.j2_order, genjac_order(&m).unwrap());
    let (norm, _) = mackey_core::chow::normalize_modulus(&m).unwrap();
    let jac = value_group(&Functor::GenJac(norm.polynomial().unwrap()), &f5).unwrap();
    assert_eq!(BigUint::from(jac.size), b.j1_order);
    let scan = stabilization_scan(
        &[
            Functor::GenJac(norm.polynomial().unwrap()),
            Functor::GenJac(norm.polynomial().unwrap()),
        ],
        &f5,
        1,
        3,
    )
    .unwrap();
    assert_eq!(scan.final_structure().order(), b.mackey_factor);
    assert_eq!(b.j1_order, 4u32.into());
    assert_eq!(b.j2_order, 4u32.into());
    // the specified sharp values: Mackey factor 1 and bound 16. The
    // truncated product factor is a GM-torus square and stabilizes at
    // order 24 (see criterion 1's note), giving the valid-but-weaker
    // bound 384. Asserted as specified, honestly red.
    if b.mackey_factor == Some(BigUint::one()) && b.bound == Some(16u32.into()) {
        println!("criterion 7 (product finiteness bound 16, Mackey factor 1): PASS");
    } else {
        println!(
            "criterion 7 (product finiteness bound): FAIL as specified — computed factor {:?} \
             and bound {:?}; both Jacobian factors (4, 4) are reproduced independently and \
             the surjection certificate holds, so the computed bound is a valid finiteness \
             bound, but the sharp factor 1 is out of reach of the degree-truncated product",
            b.mackey_factor, b.bound
        );
        assert_eq!(b.mackey_factor, Some(BigUint::one()), "sharp Mackey factor");
    }
}

#[test]
fn criterion_8_engine_laws() {
    let mut checks = 0usize;
    // projection-formula soundness on element-level instances
    for (base, functors) in [
        (f(3, 1), vec![Functor::Ga, Functor::Ga]),
        (f(2, 1), vec![Functor::Gm, Functor::Gm]),
    ] {
        let pres = Presentation::build_cached(&functors, &base, 2).unwrap();
        let ext = Field::new(base.p(), base.degree() * 2).unwrap();
        let down0 = value_group(&functors[0], &base).unwrap();
        let up1 = value_group(&functors[1], &ext).unwrap();
        for a in &down0.elements {
            for b in &up1.elements {
                let lhs = Symbol::new(
                    functors.clone(),
                    FinitePoint::new(base.clone(), ext.clone()).unwrap(),
                    vec![a.pullback(&ext).unwrap(), b.clone()],
                )
                .unwrap();
                let rhs = Symbol::new(
                    functors.clone(),
                    FinitePoint::new(base.clone(), base.clone()).unwrap(),
                    vec![a.clone(), b.pushforward(&base).unwrap()],
                )
                .unwrap();
                let lv = pres.evaluate_symbol(&lhs).unwrap();
                let rv = pres.evaluate_symbol(&rhs).unwrap();
                let diff: Vec<_> = lv.iter().zip(&rv).map(|(x, y)| x - y).collect();
                assert!(
                    pres.relation_membership(&diff).is_contained(),
                    "projection instance escaped the lattice"
                );
                checks += 1;
            }
        }
    }
    // commutativity under permutation
    for p in [2u64, 3] {
        let base = f(p, 1);
        let gj = Functor::GenJac(parse_poly(&base, "t^2").unwrap());
        for pair in [
            vec![Functor::Ga, Functor::Gm],
            vec![Functor::Ga, gj.clone()],
            vec![Functor::Gm, gj.clone()],
            vec![Functor::Ga, Functor::Ga, Functor::Gm],
        ] {
            let fwd = Presentation::build_cached(&pair, &base, 2).unwrap();
            let mut rev = pair.clone();
            rev.reverse();
            let bwd = Presentation::build_cached(&rev, &base, 2).unwrap();
            assert_eq!(fwd.structure(), bwd.structure(), "{:?}", pair);
            checks += 1;
        }
    }
    // the constant functor is the unit
    for (base, functors) in [
        (f(2, 1), vec![Functor::Ga]),
        (f(3, 1), vec![Functor::Gm]),
        (f(2, 1), vec![Functor::Ga, Functor::Ga]),
        (f(3, 1), vec![Functor::Gm, Functor::Gm]),
    ] {
        let plain = Presentation::build_cached(&functors, &base, 2).unwrap();
        let mut with_unit = vec![Functor::ConstZ];
        with_unit.extend(functors.iter().cloned());
        let unital = Presentation::build_cached(&with_unit, &base, 2).unwrap();
        assert_eq!(plain.structure(), unital.structure(), "{:?}", functors);
        checks += 1;
    }
    // trace surjectivity across the small tower
    for (p, a, b) in [
        (2u64, 1u32, 2u32),
        (2, 1, 3),
        (2, 1, 4),
        (2, 2, 4),
        (3, 1, 2),
        (3, 1, 3),
        (5, 1, 2),
        (7, 1, 2),
    ] {
        let sub = f(p, a);
        let sup = f(p, b);
        let mut hit = std::collections::HashSet::new();
        for x in sup.elements() {
            hit.insert(x.trace(&sub).unwrap());
        }
        assert_eq!(hit.len() as u64, sub.order());
        checks += 1;
    }
    println!("criterion 8 (engine laws, {} checks, zero failures): PASS", checks);
}

#[test]
fn criterion_9_deterministic_reports() {
    let seed = 12345u64;
    let make_reports = || -> Vec<String> {
        let mut out = Vec::new();
        // product scan report
        let base = f(3, 1);
        let functors = vec![Functor::Ga, Functor::Gm];
        let scan = stabilization_scan(&functors, &base, 1, 2).unwrap();
        let pres = Presentation::build_cached(&functors, &base, 2).unwrap();
        let rep = report::mackey_report(
            &functors,
            &base,
            &scan,
            pres.generator_count(),
            pres.relation_count(),
            seed,
            0,
        );
        out.push(serde_json::to_string_pretty(&rep).unwrap());
        // chow report
        let m = Modulus::parse(&base, "2*inf").unwrap();
        let res = relative_chow_stabilized(&m).unwrap();
        out.push(
            serde_json::to_string_pretty(&report::chow_report("2*inf".into(), &res, seed, 0))
                .unwrap(),
        );
        // reciprocity instances under the fixed seed
        let curve = OpenCurve::parse(&base, "P1-{inf}").unwrap();
        let section = Section::parse(&base, "GA:t").unwrap();
        let d = find_conductor(&section, &curve, 3, 50, seed).unwrap();
        let fam = test_functions(&curve, &d, 50, seed).unwrap();
        let lines: Vec<String> = fam
            .iter()
            .map(|func| {
                format!(
                    "{} -> {}",
                    func,
                    report::group_value_text(
                        &reciprocity_sum(&section, func, &curve).unwrap()
                    )
                )
            })
            .collect();
        out.push(lines.join("\n"));
        // a certificate report
        let y = f(3, 2);
        let s = Symbol::new(
            vec![Functor::Ga, Functor::Gm],
            FinitePoint::new(base.clone(), y.clone()).unwrap(),
            vec![
                GroupValue::ga(&y, y.generator()).unwrap(),
                GroupValue::gm(&y, y.generator()).unwrap(),
            ],
        )
        .unwrap();
        let cert = reduce_symbol(&s, Strategy::Divisibility).unwrap();
        let ok = validate_certificate(&cert).is_ok();
        out.push(
            serde_json::to_string_pretty(&report::certificate_report(
                &cert,
                "DIVISIBILITY",
                ok,
                seed,
                0,
            ))
            .unwrap(),
        );
        out
    };
    let a = make_reports();
    let b = make_reports();
    assert_eq!(a, b, "reports must be byte-identical for a fixed seed");
    println!("criterion 9 (byte-identical reports under a fixed seed): PASS");
}
