use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use twopt_msonf::surgery::{layer_restrict, relativize, substitute_atoms, Definition};
use twopt_msonf::{
    check_equivalence, holds, satisfies, Formula, Limits, NameSupply, Pipeline, Side, Step, Structure, Vocabulary,
};

fn f(text: &str) -> Formula {
    Formula::parse(text).unwrap()
}

fn vocab() -> Vocabulary {
    Vocabulary::from_pairs(&[("E", 2), ("P", 1)]).unwrap()
}

#[test]
fn appended_false_filter_yields_a_counterexample() {
    let p = Pipeline::parse("input E/2 P/1\ninterpret E/2 (rel E x2 x1) P/1 (rel P x1)\n").unwrap();
    let mut q = p.clone();
    q.steps.push(Step::Filter(Formula::False));
    let report = check_equivalence(&p, &q, 100, 4, 0, Limits::default()).unwrap();
    let c = report.counterexample.expect("outputs differ on every structure");
    assert_eq!(report.trials, 1);
    assert_eq!((c.left_outputs, c.right_outputs), (1, 0));
    assert_eq!(c.witness.unwrap().0, Side::Left);
}

#[test]
fn a_pipeline_is_equivalent_to_itself() {
    let p = Pipeline::parse("input E/2\ncolor X\nfilter (forall x (forall y (or (not (rel E x y)) (not (rel X x)) (not (rel X y)))))\n").unwrap();
    assert!(check_equivalence(&p, &p, 100, 4, 7, Limits::default()).unwrap().equivalent());
}

#[test]
fn coloring_then_full_filter_has_one_output() {
    let p = Pipeline::parse("input\ncolor X\nfilter (forall x (rel X x))\n").unwrap();
    let a = Structure::empty(&Vocabulary::new(), 1);
    assert_eq!(p.evaluate(&a, Limits::default()).unwrap().len(), 1);
}

#[test]
fn substitution_matches_composed_interpretation() {
    let v = Vocabulary::from_pairs(&[("R", 1), ("S", 1)]).unwrap();
    let defs = BTreeMap::from([("R".to_string(), Definition::new(&["y"], f("(not (rel S y))")))]);
    let body = f("(exists x (rel R x))");
    let composed = substitute_atoms(&body, &defs, &mut NameSupply::new()).unwrap();
    let interp = Pipeline::parse("input R/1 S/1\ninterpret R/1 (not (rel S x1)) S/1 (rel S x1)\n").unwrap();
    for a in Structure::enumerate_up_to(&v, 3) {
        let outputs = interp.evaluate(&a, Limits::default()).unwrap();
        let image = outputs.values().next().unwrap();
        assert_eq!(holds(&composed, &a, Limits::default()).unwrap(), holds(&body, image, Limits::default()).unwrap());
    }
}

#[test]
fn substitution_checks_arity() {
    let defs = BTreeMap::from([("E".to_string(), Definition::new(&["y"], f("(rel P y)")))]);
    assert!(substitute_atoms(&f("(rel E x x)"), &defs, &mut NameSupply::new()).is_err());
}

#[test]
fn relativizing_to_true_changes_nothing() {
    let guard = Definition::new(&["z"], Formula::True);
    let sentences = [
        "(forall x (exists y (rel E x y)))",
        "(exists-set S (and (exists x (mem x S)) (forall x (or (not (mem x S)) (rel P x)))))",
        "(forall-set S (or (forall x (mem x S)) (exists x (and (not (mem x S)) (rel P x)))))",
    ];
    for text in sentences {
        let phi = f(text);
        let rel = relativize(&phi, &guard, &mut NameSupply::new());
        for a in Structure::enumerate_up_to(&vocab(), 3) {
            assert_eq!(holds(&phi, &a, Limits::default()).unwrap(), holds(&rel, &a, Limits::default()).unwrap());
        }
    }
}

#[test]
fn layer_restricted_sentences_read_the_first_copy() {
    let copy = Pipeline::parse("input E/2 P/1\ncopy 2\n").unwrap();
    let sentences = [
        "(forall x (exists y (rel E x y)))",
        "(exists x (and (rel P x) (forall y (or (eq x y) (not (rel E y x))))))",
        "(exists-set S (forall x (forall y (or (not (rel E x y)) (mem x S) (mem y S)))))",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut inputs = Structure::enumerate_up_to(&vocab(), 2);
    inputs.extend((0..40).map(|_| Structure::random(&vocab(), 4, 0.4, &mut rng)));
    for text in sentences {
        let phi = f(text);
        let restricted = layer_restrict(&phi, "layer_1", &mut NameSupply::new());
        for a in &inputs {
            let out = copy.evaluate(a, Limits::default()).unwrap();
            let doubled = out.values().next().unwrap();
            assert_eq!(holds(&restricted, doubled, Limits::default()).unwrap(), holds(&phi, a, Limits::default()).unwrap());
        }
    }
}

#[test]
fn free_variables_are_parameters() {
    let mut a = Structure::empty(&vocab(), 3);
    a.add_tuple("E", vec![0, 2]).unwrap();
    let phi = f("(exists y (rel E x1 y))");
    assert!(satisfies(&phi, &a, &["x1"], &[0], Limits::default()).unwrap());
    assert!(!satisfies(&phi, &a, &["x1"], &[1], Limits::default()).unwrap());
}
