use super::*;
use crate::lmi::{
    assemble_ctrl_gramian, assemble_obs_gramian, assemble_performance, assemble_stability, BlockTag, Constraint,
    ConstraintTag, GammaMode, VariableBlock, VariableStructure,
};
use crate::sysmodel::tests::scalar_system;
use crate::sysmodel::Slot;

fn exact() -> SolveOptions {
    SolveOptions { margin_inflation: 0.0, absolute_inflation: 0.0, ..SolveOptions::default() }
}

fn one_block(dim: usize, shape: BlockShape, scalars: Vec<ScalarVariable>) -> VariableStructure {
    VariableStructure::new(vec![VariableBlock { tag: BlockTag::new(Slot::Temporal(0), 0), dim, shape }], scalars).unwrap()
}

fn lower_bound(constant: Matrix, diagonal: bool) -> Constraint {
    let d = constant.nrows();
    Constraint {
        tag: ConstraintTag::Positivity(BlockTag::new(Slot::Temporal(0), 0)),
        constant: -constant,
        terms: vec![Term::Congruence { block: 0, factor: Matrix::identity(d, d), sign: 1.0 }],
        sense: Sense::PositiveDefinite,
        margin: 0.0,
        diagonal,
    }
}

#[test]
fn minimize_x_above_one() {
    let vars = one_block(1, BlockShape::Symmetric, vec![]);
    let p = LmiProblem {
        variables: vars,
        constraints: vec![lower_bound(Matrix::from_element(1, 1, 1.0), false)],
        beta: 0.0,
        objective: vec![1.0],
    };
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.assignment.blocks[0][(0, 0)] - 1.0).abs() < 1e-7);
}

#[test]
fn trace_above_diagonal_matrix() {
    let vars = one_block(2, BlockShape::Symmetric, vec![]);
    let p = LmiProblem {
        variables: vars,
        constraints: vec![lower_bound(Matrix::from_diagonal(&crate::Vector::from_vec(vec![2.0, 1.0])), false)],
        beta: 0.0,
        objective: vec![],
    };
    let p = objective_trace(&p);
    assert_eq!(p.objective, vec![1.0, 0.0, 1.0]);
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let x = &r.assignment.blocks[0];
    assert!((x[(0, 0)] - 2.0).abs() < 1e-6 && (x[(1, 1)] - 1.0).abs() < 1e-6 && x[(0, 1)].abs() < 1e-6);
    assert!((r.objective - 3.0).abs() < 1e-6);
}

#[test]
fn scalar_performance_gives_gamma_two() {
    let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
    let beta = crate::lmi::default_margin(&sys);
    let p = assemble_performance(&sys, GammaMode::Minimize, beta).unwrap();
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let g2 = r.assignment.scalars[0];
    assert!((g2 - 4.0).abs() < 1e-4, "gamma^2 = {g2}");
    assert!(r.residuals.all_satisfied());
}

#[test]
fn zero_operator_drives_gamma_to_zero() {
    let sys = scalar_system(0.5, 0.0, 0.0, 0.0);
    let p = assemble_performance(&sys, GammaMode::Minimize, 1e-6).unwrap();
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.assignment.scalars[0].abs() < 1e-4);
}

#[test]
fn scalar_gramians_reach_closed_form() {
    let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
    for p in [assemble_ctrl_gramian(&sys, 1e-9).unwrap(), assemble_obs_gramian(&sys, 1e-9).unwrap()] {
        let r = solve(&objective_trace(&p), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.assignment.blocks[0][(0, 0)] - 4.0 / 3.0).abs() < 1e-6);
    }
}

#[test]
fn unstable_scalar_is_infeasible() {
    let p = assemble_stability(&scalar_system(1.1, 1.0, 1.0, 0.0), 1e-3).unwrap();
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.clone().into_optimal("stability").is_err());
}

#[test]
fn unbounded_objective_is_reported() {
    let vars = one_block(1, BlockShape::Symmetric, vec![]);
    let p = LmiProblem {
        variables: vars,
        constraints: vec![lower_bound(Matrix::from_element(1, 1, 1.0), false)],
        beta: 0.0,
        objective: vec![-1.0],
    };
    assert_eq!(solve(&p, &SolveOptions::default()).unwrap().status, SolveStatus::Unbounded);
}

fn single_entry_stage(a1: f64, beta: f64) -> SolveResult {
    let vars = one_block(1, BlockShape::Diagonal, vec![ScalarVariable::Epsilon]);
    let tag = BlockTag::new(Slot::Temporal(0), 0);
    let constraints = vec![
        lower_bound(Matrix::from_element(1, 1, 2.0), true),
        Constraint {
            tag: ConstraintTag::Floor(tag),
            constant: Matrix::zeros(1, 1),
            terms: vec![
                Term::Congruence { block: 0, factor: Matrix::identity(1, 1), sign: 1.0 },
                Term::Scalar { scalar: 0, matrix: -Matrix::identity(1, 1) },
            ],
            sense: Sense::PositiveDefinite,
            margin: 0.0,
            diagonal: true,
        },
        Constraint {
            tag: ConstraintTag::ScalarBound(ScalarVariable::Epsilon),
            constant: Matrix::zeros(1, 1),
            terms: vec![Term::Scalar { scalar: 0, matrix: Matrix::identity(1, 1) }],
            sense: Sense::PositiveDefinite,
            margin: beta,
            diagonal: true,
        },
    ];
    let p = LmiProblem { variables: vars, constraints, beta, objective: vec![0.0, 0.0] };
    let p = objective_balanced_stage(&p, a1).unwrap();
    assert_eq!(p.objective, vec![1.0, a1 - 1.0]);
    solve(&p, &SolveOptions::default()).unwrap()
}

#[test]
fn balanced_stage_weight_switches_epsilon() {
    let beta = 1e-3;
    let r = single_entry_stage(0.5, beta);
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.assignment.scalars[0] - 2.0).abs() < 1e-6);
    let r = single_entry_stage(750.0, beta);
    assert_eq!(r.status, SolveStatus::Optimal);
    let eps = r.assignment.scalars[0];
    assert!(eps >= beta && eps < 1.1 * beta, "eps = {eps}");
    assert!((r.assignment.blocks[0][(0, 0)] - 2.0).abs() < 1e-6);
}

#[test]
fn scaling_data_and_margin_scales_solution() {
    // x >= beta-margin stability problem on a=0.5: minimize x, 0.75 x >= beta
    let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
    let p = assemble_stability(&sys, 0.3).unwrap();
    let mut p = p.clone();
    p.objective = vec![1.0];
    let base = solve(&p, &SolveOptions::default()).unwrap().assignment.blocks[0][(0, 0)];
    let mut q = p.clone();
    q.beta *= 5.0;
    for c in q.constraints.iter_mut() {
        c.margin *= 5.0;
        c.constant *= 5.0;
    }
    let scaled = solve(&q, &SolveOptions::default()).unwrap().assignment.blocks[0][(0, 0)];
    assert!((scaled - 5.0 * base).abs() < 1e-6 * scaled);
}

#[test]
fn sdpa_single_variable_file_has_five_lines() {
    let vars = one_block(1, BlockShape::Symmetric, vec![]);
    let p = LmiProblem {
        variables: vars,
        constraints: vec![lower_bound(Matrix::zeros(1, 1), false)],
        beta: 0.0,
        objective: vec![1.0],
    };
    let form = to_standard_form(&p, &exact());
    let text = write_sdpa(&form);
    assert_eq!(text.lines().count(), 5, "{text}");
    assert_eq!(parse_sdpa(&text).unwrap(), form);
}

#[test]
fn diagonal_block_size_is_negative() {
    let vars = one_block(3, BlockShape::Diagonal, vec![]);
    let p = LmiProblem {
        variables: vars,
        constraints: vec![lower_bound(Matrix::identity(3, 3), true)],
        beta: 0.0,
        objective: vec![1.0, 1.0, 1.0],
    };
    let form = to_standard_form(&p, &exact());
    let text = write_sdpa(&form);
    assert_eq!(text.lines().nth(2).unwrap(), "-3");
    assert_eq!(parse_sdpa(&text).unwrap(), form);
}

#[test]
fn sdpa_round_trip_is_exact_and_deterministic() {
    let sys = scalar_system(0.5, 1.0, 1.0, 0.0);
    let p = assemble_performance(&sys, GammaMode::Minimize, 1e-6).unwrap();
    let form = to_standard_form(&p, &SolveOptions::default());
    let a = write_sdpa(&form);
    assert_eq!(a, write_sdpa(&to_standard_form(&p, &SolveOptions::default())));
    assert_eq!(parse_sdpa(&a).unwrap(), form);
}

#[test]
fn sdpa_errors_carry_line_numbers() {
    let err = parse_sdpa("1\n1\n1\n1.0\n1 1 1 1 abc\n").unwrap_err();
    assert!(err.to_string().contains("line 5"), "{err}");
    let err = parse_sdpa("1\n1\n2\n1.0\n1 1 3 1 1.0\n").unwrap_err();
    assert!(err.to_string().contains("line 5"), "{err}");
}

#[test]
fn sdpa_accepts_comments_and_braces() {
    let text = "\"example\n2 =mdim\n2\n{2, -1}\n{1.0, 2.0}\n0 1 1 1 1.0\n1 1 1 2 1.0\n2 2 1 1 3.0\n";
    let form = parse_sdpa(text).unwrap();
    assert_eq!(form.blocks.len(), 2);
    assert!(form.blocks[1].diagonal);
    assert_eq!(form.blocks[0].coefficients, vec![(0, vec![(0, 1, 1.0)])]);
}

#[test]
fn imported_form_solves_without_certification() {
    // minimize x1 + x2 s.t. diag(x1, x2) >= diag(1, 2)
    let text = "2\n1\n-2\n1 1\n0 1 1 1 1\n0 1 2 2 2\n1 1 1 1 1\n2 1 2 2 1\n";
    let form = parse_sdpa(text).unwrap();
    let raw = EmbeddedSolver.solve_standard(&form, None, &SolveOptions::default()).unwrap();
    assert_eq!(raw.status, SolveStatus::Optimal);
    assert!((raw.y[0] - 1.0).abs() < 1e-7 && (raw.y[1] - 2.0).abs() < 1e-7);
}
