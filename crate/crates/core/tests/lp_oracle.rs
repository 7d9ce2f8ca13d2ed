mod common;

use atlp::lp::simplex::solve_dense;
use atlp::lp::solve;
use atlp::{LpSolution, Rational};
use common::{random_program, vertex_oracle, OracleStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn status(result: Result<LpSolution, atlp::lp::LpError>) -> OracleStatus {
    match result {
        Ok(LpSolution::Infeasible) => OracleStatus::Infeasible,
        Ok(LpSolution::Feasible {
            objective_value, ..
        }) => OracleStatus::Optimal(objective_value),
        Err(_) => OracleStatus::Unbounded,
    }
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut seen = [0usize; 3];
    for _ in 0..300 {
        let lp = random_program(&mut rng);
        let expected = vertex_oracle(&lp);
        seen[match expected {
            OracleStatus::Infeasible => 0,
            OracleStatus::Unbounded => 1,
            OracleStatus::Optimal(_) => 2,
        }] += 1;
        assert_eq!(status(solve(&lp)), expected, "program:\n{lp}");
        assert_eq!(status(solve_dense(&lp)), expected, "program:\n{lp}");
        if let Ok(LpSolution::Feasible { assignment, .. }) = solve(&lp) {
            assert!(lp.is_feasible_point(&assignment));
        }
    }
    // The generator must exercise every outcome.
    assert!(seen.iter().all(|&k| k > 10), "{seen:?}");
}

#[test]
fn copy_heavy_programs_agree_with_and_without_presolve() {
    use atlp::rational::q;
    use atlp::Relation;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let mut lp = random_program(&mut rng);
        let n = lp.num_variables();
        let y = lp.add_variable("y").unwrap();
        let z = lp.add_variable("z").unwrap();
        lp.add_constraint(
            vec![(y, q(1, 1)), (0, q(-1, 1))],
            Relation::Eq,
            Rational::zero(),
        )
        .unwrap();
        lp.add_constraint(vec![(z, q(2, 1))], Relation::Eq, q(3, 1))
            .unwrap();
        lp.add_constraint(
            vec![(y, q(1, 1)), (z, q(1, 1))],
            Relation::Le,
            q(n as i64 + 4, 1),
        )
        .unwrap();
        assert_eq!(
            status(solve(&lp)),
            status(solve_dense(&lp)),
            "program:\n{lp}"
        );
        assert_eq!(status(solve(&lp)), vertex_oracle(&lp), "program:\n{lp}");
    }
}
