mod common;

use common::*;
use timecoef::forward::*;
use timecoef::heat_kernel::*;
use timecoef::inverse::ReconstructionConfig;
use timecoef::potentials::PotentialQuadrature;
use timecoef::stability::*;
use timecoef::*;

fn plan() -> ExperimentPlan {
    ExperimentPlan {
        family: "f1-heat".into(),
        seed: 2024,
        ..Default::default()
    }
}

#[test]
fn lipschitz_shadow_on_two_grids() {
    let reports = refinement_study(&plan(), &stability_problem(), None).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.pairs.len(), 60);
        assert!(r.skipped.is_empty());
        assert!(r.pass(), "slope {:?} max ratio {:?}", r.slope, r.max_ratio);
        // No blow-up as the amplitude shrinks.
        let per: Vec<f64> = plan().amplitudes.iter().map(|&a| r.max_ratio_at(a).unwrap()).collect();
        assert!(per[2] <= 1.1 * per[0], "{per:?}");
    }
    let spread = max_ratio_spread(&reports).unwrap();
    assert!(spread < 0.3, "{spread}");
}

#[test]
fn semilinear_sweep_has_unit_slope() {
    let g = grid(41, 40);
    let p = ExperimentPlan {
        pairs: 5,
        radius: 2.0,
        ..plan()
    };
    let r = lipschitz_sweep(&p, &semilinear_problem(), Some(&semilinear_rhs()), &g).unwrap();
    assert!(r.slope_in_range(), "{:?}", r.slope);
}

#[test]
fn swapping_the_pair_keeps_both_norms() {
    let data = stability_problem();
    let g = grid(21, 20);
    let s1 = CoefficientPath::from_fn(&g.times, |t| 0.2 * (std::f64::consts::PI * t).sin()).unwrap();
    let s2 = CoefficientPath::from_fn(&g.times, |t| -0.1 * (2.0 * std::f64::consts::PI * t).sin()).unwrap();
    let a = evaluate_pair(&data, None, &g, &s1, &s2).unwrap();
    let b = evaluate_pair(&data, None, &g, &s2, &s1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reports_are_bit_identical_for_a_seed() {
    let g = grid(21, 20);
    let p = ExperimentPlan { pairs: 6, ..plan() };
    let csv = |seed: u64| {
        let r = lipschitz_sweep(&ExperimentPlan { seed, ..p.clone() }, &stability_problem(), None, &g).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        r.write_summary(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(5), csv(5));
    assert_ne!(csv(5), csv(6));
}

#[test]
fn radius_too_small_for_offset_is_rejected() {
    let g = grid(21, 20);
    let p = ExperimentPlan { radius: 1.0, ..plan() };
    // σ(0) = 1 for the sinusoidal problem leaves no room in B(1).
    assert!(lipschitz_sweep(&p, &linear_problem(), None, &g).is_err());
}

#[test]
fn plots_follow_the_report() {
    let g = grid(21, 20);
    let p = ExperimentPlan { pairs: 1, ..plan() };
    let r = lipschitz_sweep(&p, &stability_problem(), None, &g).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_plots(&r, dir.path()).unwrap();
    assert_eq!(files.len(), 2);
    let rows = std::fs::read_to_string(&files[0]).unwrap().lines().count();
    assert_eq!(rows, 4);
    let svg = std::fs::read_to_string(&files[1]).unwrap();
    assert!(svg.contains(&format!("slope = {}", fmt_f64(r.slope.unwrap()))));
}

fn lemma_check(q: ZeroOrderCoefficient) -> LemmaReport {
    let ev = build_fundamental_solution(q, &interval(), &ParametrixConfig::default()).unwrap();
    lemma_bound_suite(&ev, &plan(), &PotentialQuadrature::default()).unwrap()
}

#[test]
fn lemma_suite_for_heat_kernel() {
    let r = lemma_check(ZeroOrderCoefficient::zero());
    assert_eq!(r.layer.len(), 4);
    assert!(r.pass(1e-3, 0.2), "{r:?}");
    assert!(r.volume.iter().all(|v| v.ratio.is_finite()));
}

#[test]
fn lemma_suite_for_constant_coefficient() {
    let r = lemma_check(ZeroOrderCoefficient::constant(-0.5));
    assert!(r.pass(1e-3, 0.2), "{r:?}");
}

#[test]
fn gronwall_constant_is_stable_under_refinement() {
    let data = stability_problem();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    let pairs: Vec<(TrigPath, TrigPath)> = (0..3)
        .map(|_| {
            let a = sample_in_ball(&mut rng, 0.0, 0.9, 1.0).unwrap();
            (a, a.plus(0.05, &sample_direction(&mut rng, 1.0)))
        })
        .collect();
    let fits: Vec<f64> = [(41, 40), (81, 80)]
        .iter()
        .map(|&(nx, nt)| {
            let g = grid(nx, nt);
            pairs
                .iter()
                .map(|(a, b)| {
                    let s1 = CoefficientPath::from_fn(&g.times, |t| a.eval(t)).unwrap();
                    let s2 = CoefficientPath::from_fn(&g.times, |t| b.eval(t)).unwrap();
                    certify_pair(&data, None, &g, &s1, &s2, &ReconstructionConfig::default(), 1.0)
                        .unwrap()
                        .c_fit
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(fits[0] > 0.0 && fits[0].is_finite());
    assert!((fits[1] / fits[0] - 1.0).abs() < 0.3, "{fits:?}");
}
