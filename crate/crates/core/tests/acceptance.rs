use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lfi_core::balfi::{
    check_balfi, derived_property_failures, enumerate_balfis, interval_table_report,
    paraconsistency_certificates, BalfiAlgebra, BalfiClass, IntervalModel, IntervalSet,
};
use lfi_core::belief::{
    build_rank_entrenchment, check_postulates, contract, random_scenarios, Scenario,
};
use lfi_core::bmod::{countermodel_report, verify_welldef, PeriodicSet};
use lfi_core::formula::random_formula;
use lfi_core::hilbert::{
    bounded_prove, check_proof, distinct_atom_instance, LogicId, Outcome, SearchBudget,
};
use lfi_core::nmatrix::{equivalent, holds, is_theorem};
use lfi_core::{Formula, Nmatrix, TruthValue};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Checked = Result<String, String>;
type Criterion = (&'static str, fn() -> Checked);

fn f(s: &str) -> Formula {
    s.parse().unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn axiom_validity() -> Checked {
    let mut slowest = Duration::ZERO;
    let mut count = 0;
    for logic in [LogicId::Cbr, LogicId::Cie] {
        let m = logic.matrix();
        for &k in logic.axioms() {
            let inst = distinct_atom_instance(k).ok_or(format!("no instance of axiom {k}"))?;
            let t = Instant::now();
            let v = is_theorem(&m, &inst).map_err(|e| e.to_string())?;
            slowest = slowest.max(t.elapsed());
            ensure(v.is_valid(), || {
                format!("{logic}: axiom {k} `{inst}` invalid")
            })?;
            count += 1;
        }
    }
    ensure(count == 14 + 14, || format!("{count} axioms checked"))?;
    ensure(slowest < Duration::from_secs(1), || {
        format!("slowest query {slowest:?}")
    })?;
    Ok(format!("{count} instances valid, slowest {slowest:?}"))
}

fn separation() -> Checked {
    let goal = f("@@p");
    let v = is_theorem(&Nmatrix::cbr(), &goal).map_err(|e| e.to_string())?;
    let w = v.countermodel().ok_or("@@p valid in Cbr")?;
    let expected = [
        ("p", TruthValue::One),
        ("@p", TruthValue::Half),
        ("@@p", TruthValue::Zero),
    ];
    for (g, val) in expected {
        ensure(w.value(&f(g)) == Some(val), || {
            format!("witness gives {g} = {:?}", w.value(&f(g)))
        })?;
    }
    ensure(
        is_theorem(&Nmatrix::cie(), &goal)
            .map_err(|e| e.to_string())?
            .is_valid(),
        || "@@p invalid in Cie".into(),
    )?;
    Ok("Cbr witness p=1, @p=1/2, @@p=0; valid in Cie".into())
}

fn strong_equivalence_pairs(count: usize) -> Vec<(Formula, Formula)> {
    let m = Nmatrix::cbr();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut out: Vec<(Formula, Formula)> = Vec::new();
    while out.len() < count {
        let a = random_formula(&mut rng, &["p", "q"], 2);
        let b = random_formula(&mut rng, &["p", "q"], 2);
        let rewrites = [
            Formula::neg(Formula::neg(a.clone())),
            Formula::and(a.clone(), a.clone()),
            Formula::or(a.clone(), a.clone()),
            Formula::and(a.clone(), Formula::imp(b.clone(), b.clone())),
            Formula::neg(Formula::neg(Formula::neg(Formula::neg(a.clone())))),
            b,
        ];
        for r in rewrites {
            let eq = |x: &Formula, y: &Formula| equivalent(&m, x, y).unwrap().is_valid();
            let strong = eq(&a, &r) && eq(&Formula::neg(a.clone()), &Formula::neg(r.clone()));
            if a != r && strong && !out.contains(&(a.clone(), r.clone())) && out.len() < count {
                out.push((a.clone(), r));
            }
        }
    }
    out
}

fn circ_congruence() -> Checked {
    let m = Nmatrix::cbr();
    for g in ["@p <-> @!p", "p <-> !!p"] {
        ensure(is_theorem(&m, &f(g)).unwrap().is_valid(), || {
            format!("{g} invalid")
        })?;
    }
    let pairs = strong_equivalence_pairs(50);
    for (a, b) in &pairs {
        let v = equivalent(&m, &Formula::circ(a.clone()), &Formula::circ(b.clone())).unwrap();
        ensure(v.is_valid(), || format!("@({a}) and @({b}) differ"))?;
    }
    Ok(format!(
        "{} strongly equivalent pairs keep @ equivalent",
        pairs.len()
    ))
}

fn paraconsistency() -> Checked {
    let q = f("q");
    for m in [Nmatrix::cbr(), Nmatrix::cie()] {
        for premises in [["p", "!p"], ["p", "@p"], ["@p", "!p"]] {
            let premises: Vec<Formula> = premises.iter().map(|s| f(s)).collect();
            let v = holds(&m, &premises, &q).map_err(|e| e.to_string())?;
            let w = v
                .countermodel()
                .ok_or_else(|| format!("{premises:?} ⊢ q in {}", m.name()))?;
            for p in &premises {
                ensure(w.value(p).is_some_and(TruthValue::is_designated), || {
                    format!("witness does not designate {p}")
                })?;
            }
            ensure(w.value(&q) == Some(TruthValue::Zero), || {
                "witness designates q".into()
            })?;
        }
    }
    Ok("three non-consequences refuted in both matrices".into())
}

fn interval_model() -> Checked {
    let rows = interval_table_report(-3..=3);
    for n in -3..=3 {
        let point = IntervalSet::singleton(n);
        let off = point.complement();
        for (x, nx) in [
            (IntervalSet::down_to(n), IntervalSet::up_from(n)),
            (IntervalSet::up_from(n), IntervalSet::down_to(n)),
        ] {
            let row = rows.iter().find(|r| r.x == x).ok_or("row missing")?;
            let expected = (&nx, &point, &off, &x, &off, &point);
            let got = (
                &row.neg,
                &row.contradiction,
                &row.circ,
                &row.neg_neg,
                &row.circ_neg,
                &row.neg_circ,
            );
            ensure(expected == got, || format!("row for {x:?} differs"))?;
        }
    }
    for row in rows
        .iter()
        .filter(|r| r.x.as_down_to().is_none() && r.x.as_up_from().is_none())
    {
        let ok = row.neg == row.x.complement()
            && row.contradiction == IntervalSet::empty()
            && row.circ == IntervalSet::integers()
            && row.neg_neg == row.x
            && row.circ_neg == IntervalSet::integers()
            && row.neg_circ == IntervalSet::empty();
        ensure(ok, || format!("consistent row for {:?} differs", row.x))?;
    }
    let certs = paraconsistency_certificates();
    ensure(
        certs.len() == 3 && certs.iter().all(|c| c.value != IntervalSet::integers()),
        || "certificates missing".into(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = IntervalModel;
    for _ in 0..100 {
        let x = IntervalSet::random(&mut rng, 6, 10);
        for eq in BalfiClass::RCie.equations() {
            ensure(eq.holds_at(&model, &x), || format!("{eq:?} fails at {x:?}"))?;
        }
        ensure(model.neg(&model.neg(&x)) == x, || {
            format!("¬¬ fails at {x:?}")
        })?;
    }
    Ok(format!(
        "{} rows, 3 certificates, 100 random sets",
        rows.len()
    ))
}

fn finite_balfis() -> Checked {
    let mut total = 0;
    for atoms in 1..=4 {
        let mask = (1u16 << atoms) - 1;
        for b in enumerate_balfis(atoms, BalfiClass::RCbr).map_err(|e| e.to_string())? {
            for (x, &nx) in b.neg_table().iter().enumerate() {
                ensure(nx == !(x as u16) & mask, || {
                    format!("paraconsistent negation at size {}", b.size())
                })?;
            }
            ensure(check_balfi(&b).is_ok(), || "class equations fail".into())?;
            let bad = derived_property_failures(&b);
            ensure(bad.is_empty(), || {
                format!("derived properties fail: {bad:?}")
            })?;
            total += 1;
        }
    }
    Ok(format!(
        "{total} structures over sizes 2..16, all classical"
    ))
}

fn bmod_welldef() -> Checked {
    let t = Instant::now();
    let report = verify_welldef(6).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    let failed: Vec<_> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    ensure(report.passed && failed.is_empty(), || {
        format!("failing items: {failed:?}")
    })?;
    ensure(report.checks.len() == 6, || {
        format!("{} items", report.checks.len())
    })?;
    ensure(report.contradiction_in_family.passed, || {
        "no member meets its negation inside the family".into()
    })?;
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!(
        "{} members, 7 items, {took:?}",
        report.members.len()
    ))
}

fn bmod_countermodel() -> Checked {
    let r = countermodel_report();
    let c = PeriodicSet::class;
    let cc = PeriodicSet::class_complement;
    let circ = r
        .equalities
        .iter()
        .find(|e| e.name == "∘X")
        .ok_or("∘X missing")?;
    let circ_circ = r
        .equalities
        .iter()
        .find(|e| e.name == "∘∘X")
        .ok_or("∘∘X missing")?;
    ensure(
        circ.holds && circ.computed == c(0, 2).union(&cc(0, 3)),
        || format!("∘X = {}", circ.computed),
    )?;
    let expected = c(1, 2).intersection(&c(0, 3)).union(&cc(0, 5));
    ensure(circ_circ.holds && circ_circ.computed == expected, || {
        format!("∘∘X = {}", circ_circ.computed)
    })?;
    let ws: Vec<(u64, u64)> = r
        .witnesses
        .iter()
        .map(|w| (w.witness.residue, w.witness.modulus))
        .collect();
    ensure(
        ws == [(25, 30), (0, 10)] && r.witnesses.iter().all(|w| w.holds),
        || format!("witnesses {ws:?}"),
    )?;
    ensure(
        r.schemas.len() == 4 && r.schemas.iter().all(|s| s.refuted),
        || "a schema holds".into(),
    )?;
    ensure(r.passed, || "report failed".into())?;
    Ok("equalities, 25 mod 30, 0 mod 10, four schemas refuted".into())
}

fn hilbert_cross_check() -> Checked {
    let mut goals: Vec<(LogicId, Formula)> = [
        "p -> p",
        "p | !p",
        "p & q -> q & p",
        "p & q -> p",
        "p -> p | q",
        "(p -> q) -> ((q -> r) -> (p -> r))",
        "p -> !!p",
        "!!p -> p",
        "p -> (q -> p)",
    ]
    .iter()
    .flat_map(|g| [(LogicId::Cbr, f(g)), (LogicId::Cie, f(g))])
    .collect();
    goals.push((LogicId::Cbr, distinct_atom_instance(12).unwrap()));
    goals.push((LogicId::Cie, distinct_atom_instance(15).unwrap()));
    goals.push((LogicId::Cbr, distinct_atom_instance(14).unwrap()));
    let mut proved = 0;
    for (logic, goal) in &goals {
        let out =
            bounded_prove(*logic, goal, SearchBudget::default()).map_err(|e| e.to_string())?;
        let Outcome::Proved(proof) = out else {
            return Err(format!("{logic}: no proof of {goal}"));
        };
        check_proof(*logic, &[], &proof).map_err(|e| format!("{logic} {goal}: {e}"))?;
        ensure(proof.conclusion() == Some(goal), || {
            format!("proof of {goal} ends elsewhere")
        })?;
        ensure(
            is_theorem(&logic.matrix(), goal).unwrap().is_valid(),
            || format!("{goal} not valid"),
        )?;
        proved += 1;
    }
    ensure(proved >= 20, || format!("only {proved} theorems"))?;
    Ok(format!("{proved} proofs checked and valid"))
}

fn belief_suite() -> Checked {
    let mut checked = 0;
    for (seed, logic) in [(1, LogicId::Cbr), (2, LogicId::Cie)] {
        let generated = random_scenarios(seed, 120, logic).map_err(|e| e.to_string())?;
        ensure(generated.len() == 120, || {
            format!("only {} scenarios", generated.len())
        })?;
        for g in &generated {
            let s = &g.scenario;
            ensure(s.len() <= 40 && s.query().len() <= 6, || {
                "scenario too large".into()
            })?;
            let report = check_postulates(s, &g.order).map_err(|e| e.to_string())?;
            if let Some(p) = report.postulates.iter().find(|p| !p.passed) {
                return Err(format!(
                    "{} fails on {:?}: {:?}",
                    p.name, g.file, p.violations
                ));
            }
            checked += 1;
        }
    }
    ensure(checked >= 200, || format!("{checked} scenarios"))?;
    Ok(format!("{checked} scenarios, all eleven checks pass"))
}

fn unrevocability_narrative() -> Checked {
    let s = Scenario::new(
        LogicId::Cbr,
        &[f("q")],
        &[f("p"), f("@p")],
        &[f("p"), f("@p")],
    )
    .map_err(|e| e.to_string())?;
    let e = build_rank_entrenchment(&s, &BTreeMap::new())
        .map_err(|r| format!("{:?}", r.first_problem()))?;

    let blocked = contract(&s, &e, &f("p")).map_err(|e| e.to_string())?;
    ensure(
        blocked.failed && blocked.kept_mask() == s.knowledge_mask(),
        || "contracting p changed K".into(),
    )?;

    ensure(!s.is_unrevocable(&f("@p")).unwrap(), || {
        "@p unrevocable".into()
    })?;
    let c = contract(&s, &e, &f("@p")).map_err(|e| e.to_string())?;
    ensure(!c.failed && !c.contains(&s, &f("@p")).unwrap(), || {
        "@p survived".into()
    })?;

    let after = s.with_base(&c.kept(&s)).map_err(|e| e.to_string())?;
    ensure(
        after.entails(&f("p")).unwrap() && !after.is_unrevocable(&f("p")).unwrap(),
        || "p still unrevocable".into(),
    )?;
    Ok("p blocked, @p removed, p revocable afterwards".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 11] = [
        ("axiom validity", axiom_validity),
        ("separation", separation),
        ("consistency congruence", circ_congruence),
        ("paraconsistency", paraconsistency),
        ("interval model", interval_model),
        ("finite BALFI enumeration", finite_balfis),
        ("B_mod well-definedness", bmod_welldef),
        ("B_mod countermodel", bmod_countermodel),
        ("Hilbert cross-check", hilbert_cross_check),
        ("belief postulates", belief_suite),
        ("unrevocability narrative", unrevocability_narrative),
    ];
    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
                failures.push(i + 1);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
