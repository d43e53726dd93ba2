//! Behaviour at the K = 1200 operating points used for the MSE curves.

use saep::experiments::{aggregate_mse, generate_instance, sweep, ExperimentConfig};
use saep::ensembles::SpectralProfile;
use saep::solvers::{run, Algorithm, Problem, SolverConfig};
use saep::stability::stability_report;

fn config(ensemble: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("K = 1200\nalpha = 1/3\nrho = 0.1\ntau = 1\nensemble = {ensemble}\nalgorithms = saep")).unwrap()
}

#[test]
fn saep_fixed_points_are_inside_the_at_line() {
    for (ensemble, profile) in [
        ("iid", SpectralProfile::marchenko_pastur(400.0 / 1200.0).unwrap()),
        ("dct", SpectralProfile::projection(400.0 / 1200.0).unwrap()),
    ] {
        let c = config(ensemble);
        let inst = generate_instance(&c, 1.0 / 3.0, 0).unwrap();
        let model = c.model(400).unwrap();
        let problem = Problem::new(&model, &inst.h, &inst.y).with_profile(&profile);
        let mut sc = SolverConfig::new(Algorithm::Saep);
        sc.max_iters = 500;
        let report = run(problem, sc).unwrap();
        assert!(report.converged, "{ensemble}: {:?}", report.warnings);
        let s = stability_report(&report, &profile).unwrap();
        assert!(s.margin_x > 0.0 && s.margin_z > 0.0, "{ensemble}: {s:?}");
        assert!(s.chi2_x.unwrap() > 0.0 && s.chi2_z.unwrap() > 0.0);
    }
}

#[test]
fn saep_mse_curve_decreases_then_plateaus() {
    let mut c = config("iid");
    c.trials = 20;
    c.max_iters = 500;
    let out = sweep(&c).unwrap();
    let agg = aggregate_mse(&out.records, Algorithm::Saep);
    assert_eq!(agg.included, 20);
    let curve: Vec<f64> = agg.points.iter().map(|p| p.mean_mse_db).collect();
    let plateau = *curve.last().unwrap();
    // strictly decreasing from iteration 2 until within 0.01 dB of the end
    let end = curve.iter().position(|v| (v - plateau).abs() < 0.01).unwrap();
    assert!(end > 2, "{curve:?}");
    for w in curve[1..=end].windows(2) {
        assert!(w[1] < w[0], "{curve:?}");
    }
    assert!(curve[end..].iter().all(|v| (v - plateau).abs() < 0.05));
}
