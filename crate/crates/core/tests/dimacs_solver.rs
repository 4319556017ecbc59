mod common;

use bnnv_core::cnf::{emit_dimacs, parse_dimacs, CnfError, CnfFormula, Lit, Var};
use bnnv_core::solver::{parse_solver_output, solve, Backend, Budget, SolveOutcome, SolveRequest};
use rand::Rng;

fn random_cnf<R: Rng>(rng: &mut R, vars: usize, clauses: usize) -> CnfFormula {
    let mut f = CnfFormula::new();
    f.set_num_vars(vars);
    for _ in 0..clauses {
        let c: Vec<i32> = (0..3)
            .map(|_| {
                let v = rng.gen_range(1..=vars as i32);
                if rng.gen_bool(0.5) { v } else { -v }
            })
            .collect();
        f.add_dimacs_clause(&c).unwrap();
    }
    f
}

fn brute_force_sat(f: &CnfFormula) -> bool {
    let n = f.num_vars();
    (0u32..1 << n).any(|m| {
        let model: Vec<bool> = (0..n).map(|i| m >> i & 1 == 1).collect();
        f.is_satisfied_by(&model)
    })
}

#[test]
fn dimacs_round_trips() {
    let mut rng = common::rng(500);
    for _ in 0..50 {
        let (n, m) = (rng.gen_range(1..=20), rng.gen_range(1..=60));
        let f = random_cnf(&mut rng, n, m);
        let text = emit_dimacs(&f);
        let g = parse_dimacs(&text).unwrap();
        assert_eq!(g.num_vars(), f.num_vars());
        assert_eq!(g.clauses().collect::<Vec<_>>(), f.clauses().collect::<Vec<_>>());
        assert_eq!(emit_dimacs(&g), text);
    }
}

#[test]
fn dimacs_errors_are_located() {
    assert!(matches!(parse_dimacs("p cnf 2 1\n1 3 0\n"), Err(CnfError::Dimacs { line: 2, .. })));
    assert!(matches!(parse_dimacs("1 2 0\n"), Err(CnfError::Dimacs { .. })));
    assert!(matches!(parse_dimacs("p cnf 2 1\n1 x 0\n"), Err(CnfError::Dimacs { line: 2, .. })));
    let f = parse_dimacs("c comment\np cnf 3 2\n1 -2\n 0 3 0\n").unwrap();
    assert_eq!(f.num_clauses(), 2);
}

#[test]
fn embedded_solver_matches_truth_table() {
    let mut rng = common::rng(501);
    let mut sat = 0;
    for _ in 0..300 {
        let n = rng.gen_range(3..=12);
        let m = (n as f64 * rng.gen_range(3.0..6.0)) as usize;
        let f = random_cnf(&mut rng, n, m);
        let req = SolveRequest {
            formula: &f,
            assumptions: &[],
            budget: Budget::unlimited(),
            seed: 0,
        };
        match solve(&Backend::Embedded, &req).unwrap() {
            SolveOutcome::Sat(model) => {
                sat += 1;
                assert!(f.is_satisfied_by(&model));
            }
            SolveOutcome::Unsat(_) => assert!(!brute_force_sat(&f)),
            SolveOutcome::Unknown => panic!("unlimited budget"),
        }
    }
    assert!(sat > 30 && sat < 270, "{sat}");
}

#[test]
fn cores_are_subsets_of_failing_assumptions() {
    let mut rng = common::rng(502);
    for _ in 0..100 {
        let n = rng.gen_range(4..=10);
        let f = random_cnf(&mut rng, n, 2 * n);
        let mut assumptions: Vec<Lit> = Vec::new();
        for i in 0..n {
            if rng.gen_bool(0.6) {
                let l = Var::new(i as u32).pos();
                assumptions.push(if rng.gen_bool(0.5) { l } else { !l });
            }
        }
        if let SolveOutcome::Unsat(core) = common::solve(&f, &assumptions) {
            assert!(core.iter().all(|l| assumptions.contains(l)));
            assert!(matches!(common::solve(&f, &core), SolveOutcome::Unsat(_)));
        }
    }
}

#[test]
fn solver_output_is_parsed() {
    let out = parse_solver_output("c hi\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3).unwrap();
    assert_eq!(out, SolveOutcome::Sat(vec![true, false, true]));
    assert!(matches!(parse_solver_output("s UNSATISFIABLE\n", 3).unwrap(), SolveOutcome::Unsat(_)));
    assert_eq!(parse_solver_output("s UNKNOWN\n", 3).unwrap(), SolveOutcome::Unknown);
    assert!(parse_solver_output("nothing\n", 3).is_err());
    assert!(parse_solver_output("s SATISFIABLE\nv 9 0\n", 3).is_err());
}

#[test]
fn conflict_budget_gives_unknown() {
    // pigeonhole 8 into 7 needs many conflicts
    let (p, h) = (8usize, 7usize);
    let var = |i: usize, j: usize| (i * h + j + 1) as i32;
    let mut f = CnfFormula::new();
    f.set_num_vars(p * h);
    for i in 0..p {
        f.add_dimacs_clause(&(0..h).map(|j| var(i, j)).collect::<Vec<_>>()).unwrap();
    }
    for j in 0..h {
        for a in 0..p {
            for b in a + 1..p {
                f.add_dimacs_clause(&[-var(a, j), -var(b, j)]).unwrap();
            }
        }
    }
    let req = SolveRequest {
        formula: &f,
        assumptions: &[],
        budget: Budget {
            deadline: None,
            conflicts: Some(10),
        },
        seed: 0,
    };
    assert_eq!(solve(&Backend::Embedded, &req).unwrap(), SolveOutcome::Unknown);
}
