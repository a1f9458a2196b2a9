use rwbounds::bias_lp::{comparison_bound, solve_lp, BiasContext, BiasLpOptions, BoundReport, Side, StepSelection};
use rwbounds::families::{birth_death, tandem2, Instance, Tandem2};
use rwbounds::lp::mps::to_mps;
use rwbounds::lp::{DenseSimplex, LpStatus};
use rwbounds::model::{Degree, Step};
use rwbounds::oracle::{bias_trace, phi_recursion_gap, stationary_with_check, validate_bounds, TruncatedChain};

fn solve(ctx: &BiasContext<'_>, side: Side, degree: Degree) -> BoundReport {
    solve_lp(&ctx.assemble(side, degree).unwrap(), &DenseSimplex::default()).unwrap()
}

fn ctx(inst: &Instance, steps: StepSelection) -> BiasContext<'_> {
    BiasContext::new(inst, BiasLpOptions { steps, reach: 1 }).unwrap()
}

fn perturbed_mean(inst: &Instance) -> f64 {
    inst.stationary.expectation(&inst.perturbed, &inst.reward).unwrap()
}

#[test]
fn unperturbed_tandem_collapses_to_the_product_form_mean() {
    let inst = tandem2(&Tandem2::from_load(0.5, 1.0)).unwrap();
    let mean = perturbed_mean(&inst);
    assert!((mean - 1.0).abs() < 1e-12);
    let c = ctx(&inst, StepSelection::All);
    for degree in [Degree::Linear, Degree::Quadratic] {
        for side in [Side::Lower, Side::Upper] {
            let r = solve(&c, side, degree);
            assert_eq!(r.status, LpStatus::Optimal);
            assert!((r.bound.unwrap() - mean).abs() < 1e-7, "{side:?} {degree:?}: {:?}", r.bound);
        }
        for side in [Side::Lower, Side::Upper] {
            let r = comparison_bound(&c, side, degree).unwrap();
            assert!((r.bound.unwrap() - mean).abs() < 1e-9);
        }
    }
}

#[test]
fn birth_death_bounds_are_exact() {
    let inst = birth_death(0.2, 0.6).unwrap();
    let c = ctx(&inst, StepSelection::All);
    for side in [Side::Lower, Side::Upper] {
        let r = solve(&c, side, Degree::Quadratic);
        assert!((r.bound.unwrap() - 0.5).abs() < 1e-7);
    }
}

#[test]
fn half_load_quadratic_bracket_contains_the_oracle() {
    let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
    let c = ctx(&inst, StepSelection::All);
    let lower = solve(&c, Side::Lower, Degree::Quadratic);
    let upper = solve(&c, Side::Upper, Degree::Quadratic);
    let oracle = stationary_with_check(&inst.model, &inst.reward, 60).unwrap().require(1e-8).unwrap();
    assert!(lower.bound.unwrap() - 1e-6 <= oracle && oracle <= upper.bound.unwrap() + 1e-6);
    assert!(lower.diagnostics.max_violation <= 1e-9);
    assert!(upper.diagnostics.max_violation <= 1e-9);
    let chain = TruncatedChain::new(&inst.model, 40).unwrap();
    for r in [&lower, &upper] {
        let v = validate_bounds(r, &inst, &chain, 60, Some(oracle));
        assert!(v.passed(), "{}", v.to_csv());
    }
}

#[test]
fn quadratic_envelopes_never_lose_to_linear_ones() {
    for load in [0.3, 0.6, 0.8] {
        let inst = tandem2(&Tandem2::from_load(load, 2.0)).unwrap();
        for steps in [StepSelection::Symmetric, StepSelection::All] {
            let c = ctx(&inst, steps);
            let (l1, u1) = (solve(&c, Side::Lower, Degree::Linear), solve(&c, Side::Upper, Degree::Linear));
            let (l2, u2) = (solve(&c, Side::Lower, Degree::Quadratic), solve(&c, Side::Upper, Degree::Quadratic));
            if let (Some(a), Some(b)) = (l1.bound, l2.bound) {
                assert!(b >= a - 1e-7, "load {load}: {b} < {a}");
            }
            if let (Some(a), Some(b)) = (u1.bound, u2.bound) {
                assert!(b <= a + 1e-7, "load {load}: {b} > {a}");
            }
            if l1.is_optimal() {
                assert!(l2.is_optimal());
            }
        }
    }
}

#[test]
fn comparison_side_follows_the_boundary_speed() {
    let faster = tandem2(&Tandem2::from_load(0.5, 1.5)).unwrap();
    let c = ctx(&faster, StepSelection::All);
    let up = solve_lp(&c.assemble_comparison(Side::Upper, Degree::Quadratic, true).unwrap(), &DenseSimplex::default()).unwrap();
    assert!((up.bound.unwrap() - 1.0).abs() < 1e-9);
    let down = solve_lp(&c.assemble_comparison(Side::Lower, Degree::Quadratic, true).unwrap(), &DenseSimplex::default()).unwrap();
    assert!(!down.is_optimal());

    let slower = tandem2(&Tandem2::from_load(0.5, 0.9)).unwrap();
    let c = ctx(&slower, StepSelection::Symmetric);
    let low = solve_lp(&c.assemble_comparison(Side::Lower, Degree::Quadratic, true).unwrap(), &DenseSimplex::default()).unwrap();
    assert!((low.bound.unwrap() - 1.0).abs() < 1e-9);
    let oracle = stationary_with_check(&slower.model, &slower.reward, 60).unwrap().value();
    assert!(oracle >= 1.0);
}

#[test]
fn programs_export_as_mps() {
    let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
    let lp = ctx(&inst, StepSelection::Symmetric).assemble(Side::Upper, Degree::Quadratic).unwrap();
    let text = to_mps(&lp.spec);
    for section in ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
        assert!(text.lines().any(|l| l.starts_with(section)), "missing {section}");
    }
}

#[test]
fn halved_envelope_fails_the_oracle_check() {
    let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
    let c = ctx(&inst, StepSelection::All);
    let mut r = solve(&c, Side::Upper, Degree::Quadratic);
    let chain = TruncatedChain::new(&inst.model, 40).unwrap();
    assert!(validate_bounds(&r, &inst, &chain, 60, None).passed());
    let cert = r.certificate.as_mut().unwrap();
    for env in &mut cert.b {
        for piece in env.pieces.iter_mut().flatten() {
            piece.constant *= 0.5;
            piece.linear.iter_mut().for_each(|x| *x *= 0.5);
            piece.quadratic.iter_mut().for_each(|x| *x *= 0.5);
        }
    }
    let v = validate_bounds(&r, &inst, &chain, 60, None);
    assert!(!v.check("envelope").unwrap().passed);
}

#[test]
fn first_coordinate_bias_settles_below_its_envelope() {
    let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
    let c = ctx(&inst, StepSelection::All);
    let r = solve(&c, Side::Upper, Degree::Quadratic);
    let cert = r.certificate.unwrap();
    let u = Step::new(vec![1, 0]).unwrap();
    let env = cert.envelope_b(&u).unwrap();
    let chain = TruncatedChain::new(&inst.model, 240).unwrap();
    let n = [3, 2];
    let trace: Vec<f64> = bias_trace(&chain, &inst.reward, &n, &u, 200).into_iter().map(Option::unwrap).collect();
    let bound = env.value(&inst.model, &n).unwrap();
    assert!(trace[200] > trace[10]);
    assert!((trace[200] - trace[190]).abs() < 1e-4 * trace[200]);
    assert!(trace.iter().all(|&d| d <= bound + 1e-6));
}

#[test]
fn phi_recursion_reproduces_direct_differences() {
    let inst = tandem2(&Tandem2::from_load(0.5, 2.0)).unwrap();
    let c = ctx(&inst, StepSelection::All);
    let chain = TruncatedChain::new(&inst.model, 60).unwrap();
    let gap = phi_recursion_gap(&chain, &c.refinement, &c.phi, &inst.reward, 50);
    assert!(gap <= 1e-9, "gap {gap}");
}
