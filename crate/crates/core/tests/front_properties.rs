use cmde_core::biobjective::{
    adaptive_weighted_sum, asset_upper_bound, generate_pareto_front, BiObjectiveProblem, Optimizer,
};
use cmde_core::cmde::{DeConfig, ObjectiveError};
use cmde_core::dataio::{load_contracts, write_pareto_csv};
use cmde_core::valuation::{extract_price, ExtractionStrategy};
use cmde_core::{AwsConfig, ContractSpec};

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn light_de(seed: u64) -> DeConfig {
    DeConfig {
        population_size: 60,
        max_iterations: 150,
        ..DeConfig::standard(Vec::new(), seed)
    }
}

struct Toy;

impl BiObjectiveProblem for Toy {
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 3.0)]
    }
    fn evaluate(&self, x: &[f64]) -> Result<[f64; 2], ObjectiveError> {
        Ok([-x[0] * x[0], -(x[0] - 2.0).powi(2)])
    }
}

/// Distance from a point in normalized space to the closed-form front
/// `x in [0, 2]`, where both objectives are scaled by their range of 4.
fn toy_deviation(values: [f64; 2]) -> f64 {
    let n = [1.0 + values[0] / 4.0, 1.0 + values[1] / 4.0];
    (0..=20_000)
        .map(|i| {
            let x = 2.0 * i as f64 / 20_000.0;
            let a = [1.0 - x * x / 4.0, 1.0 - (x - 2.0) * (x - 2.0) / 4.0];
            (n[0] - a[0]).hypot(n[1] - a[1])
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn toy_front_matches_closed_form() {
    let out = adaptive_weighted_sum(&Toy, &DeConfig::standard(Vec::new(), 11), &AwsConfig::default(), Optimizer::Cmde).unwrap();
    assert!(out.points.len() >= 9);
    for p in &out.points {
        assert!(toy_deviation(p.values) <= 0.02, "{:?}", p.values);
    }
    let xs: Vec<f64> = out.points.iter().map(|p| p.x[0]).collect();
    assert!(xs.iter().any(|&x| x.abs() < 1e-2) && xs.iter().any(|&x| (x - 2.0).abs() < 1e-2));
}

#[test]
fn fixture_front_invariants() {
    let specs = load_contracts(fixture("spx161216c01925000.csv")).unwrap();
    let spec = &specs[1];
    let aws = AwsConfig::default();
    let front = generate_pareto_front(spec, &light_de(3), &aws).unwrap();
    assert!(front.points.len() >= 8, "{} points", front.points.len());
    assert_eq!(front.violations(1e-6), Vec::<String>::new());
    let upper = asset_upper_bound(spec);
    for p in &front.points {
        assert!((0.0..=upper).contains(&p.candidate.asset_value));
        assert_eq!(p.candidate.time, spec.maturity_years());
    }
    for w in front.round_sizes.windows(2) {
        assert!(w[1] >= w[0], "round sizes {:?}", front.round_sizes);
    }

    let again = generate_pareto_front(spec, &light_de(3), &aws).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_pareto_csv(&front.points, &mut a).unwrap();
    write_pareto_csv(&again.points, &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn american_fixture_front_invariants() {
    let specs = load_contracts(fixture("nflx210115c00150000.csv")).unwrap();
    let spec = &specs[0];
    let front = generate_pareto_front(spec, &light_de(5), &AwsConfig::default()).unwrap();
    assert!(front.points.len() >= 8, "{} points", front.points.len());
    assert_eq!(front.violations(1e-6), Vec::<String>::new());
    let t_min = 1.0 / f64::from(spec.days_per_year);
    for p in &front.points {
        assert!(p.candidate.time >= t_min && p.candidate.time <= spec.maturity_years());
    }
}

#[test]
fn deterministic_limit_price() {
    let spec = ContractSpec::new(100.0, 90.0, 252, 0.05, 1e-6);
    let front = generate_pareto_front(&spec, &light_de(1), &AwsConfig::default()).unwrap();
    let est = extract_price(&front.points, &spec, ExtractionStrategy::ExpectedDiscounted).unwrap();
    let limit = 100.0 - 90.0 * (-0.05f64).exp();
    assert!((est.value - limit).abs() / limit <= 1e-3, "{} vs {limit}", est.value);
}
