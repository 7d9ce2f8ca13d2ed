use atlp::annotation::{enumerate, validate};
use atlp::lp::simplex::solve_dense;
use atlp::lp::{build_lp, find_feasible, solve};
use atlp::prover::best_exponent;
use atlp::rational::q;
use atlp::Rational;

#[test]
fn guided_and_tableau_agree_on_proof_programs() {
    let points = [q(1, 1), q(5, 4), q(3, 2), q(13, 8), q(7, 4), q(2, 1)];
    for length in 3..=8 {
        for a in enumerate(length).into_iter().filter(|a| a.speedups() > 0) {
            for c in &points {
                let p = build_lp(&a, c, &q(1, 1000)).unwrap().program;
                let fast = solve(&p).unwrap();
                let exact = solve_dense(&p).unwrap();
                assert_eq!(fast.is_feasible(), exact.is_feasible(), "{a} at {c}");
                assert_eq!(
                    fast.objective_value(),
                    exact.objective_value(),
                    "{a} at {c}"
                );
                assert_eq!(
                    find_feasible(&p).is_feasible(),
                    exact.is_feasible(),
                    "{a} at {c}"
                );
                if let Some(x) = fast.assignment() {
                    assert!(p.is_feasible_point(x));
                }
            }
        }
    }
}

#[test]
fn best_exponent_ignores_the_choice_of_eps() {
    let tol = Rational::pow10_neg(4);
    for text in ["DSD", "DSDSD", "DSSDDSD", "DSSDDSDSD"] {
        let a = validate(text).unwrap();
        let base = best_exponent(&a, &tol, &q(1, 1000)).unwrap();
        for eps in [q(1, 10), q(1, 1_000_000)] {
            let other = best_exponent(&a, &tol, &eps).unwrap();
            assert!(
                (&other.lower - &base.lower).abs() <= tol,
                "{text} with eps {eps}"
            );
        }
    }
}

#[test]
fn certificates_carry_the_searched_exponent() {
    let tol = Rational::pow10_neg(3);
    for a in (3..=8).flat_map(enumerate).filter(|a| a.speedups() > 0) {
        let best = best_exponent(&a, &tol, &q(1, 1000)).unwrap();
        assert_eq!(best.certificate.c, best.lower);
        assert_eq!(best.certificate.steps.len(), a.len());
        assert!(&best.upper - &best.lower <= tol);
        assert_eq!(atlp::verify(&best.certificate), Ok(()), "{a}");
    }
}
