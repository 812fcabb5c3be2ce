use smk_core::limits::{
    run_fractional_diffusion_limit, run_fractional_poisson_limit, run_limit, AlphaProfile,
    LimitExperimentConfig, LimitKind,
};
use smk_core::samplers::RngStream;
use smk_core::{Execution, SmkError};

fn small(kind: LimitKind, alpha: AlphaProfile) -> LimitExperimentConfig {
    let mut cfg = LimitExperimentConfig::new(kind, alpha);
    cfg.n_paths = 5000;
    cfg
}

#[test]
fn laws_are_conserved() {
    let cfg = small(
        LimitKind::FractionalDiffusion,
        AlphaProfile::TwoRegion {
            left: 0.5,
            right: 0.8,
            boundary: 0.0,
        },
    );
    let rep = run_fractional_diffusion_limit(&cfg, &RngStream::new(1, 0)).unwrap();
    assert!(rep.reference_row_sum_defect < 1e-4);
    assert_eq!(rep.scales.len(), 3);
    for s in &rep.scales {
        assert!((s.empirical.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.tv_distance >= 0.0 && s.std_error >= 0.0);
    }
    assert!(rep.control.is_none());
}

#[test]
fn report_does_not_depend_on_execution() {
    let cfg = small(
        LimitKind::FractionalPoissonDrift,
        AlphaProfile::Constant { alpha: 0.7 },
    );
    let rng = RngStream::new(4, 2);
    let a = run_limit(&cfg, &rng, Execution::Sequential).unwrap();
    let b = run_limit(&cfg, &rng, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn narrow_lattice_is_reported() {
    let mut cfg = small(
        LimitKind::FractionalDiffusion,
        AlphaProfile::Constant { alpha: 0.7 },
    );
    cfg.lattice_halfwidth = Some(3);
    let err = run_fractional_diffusion_limit(&cfg, &RngStream::new(1, 0)).unwrap_err();
    assert!(matches!(err, SmkError::BoundaryMass { .. }), "{err:?}");
}

#[test]
fn kinds_go_to_the_right_runner() {
    let drift = small(
        LimitKind::FractionalPoissonDrift,
        AlphaProfile::Constant { alpha: 0.7 },
    );
    assert!(run_fractional_diffusion_limit(&drift, &RngStream::new(1, 0)).is_err());
    let diff = small(
        LimitKind::FractionalDiffusion,
        AlphaProfile::Constant { alpha: 0.7 },
    );
    assert!(run_fractional_poisson_limit(&diff, &RngStream::new(1, 0)).is_err());
}

#[test]
fn poisson_control_matches_reference() {
    let cfg = small(
        LimitKind::FractionalPoissonDrift,
        AlphaProfile::Constant { alpha: 1.0 },
    );
    let rep = run_fractional_poisson_limit(&cfg, &RngStream::new(12, 0)).unwrap();
    assert!(rep.control.unwrap().passed);
    assert!(rep.oracle_max_diff.unwrap() < 1e-3);
    assert!(rep.verdict);
}
