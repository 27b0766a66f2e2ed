use approx::assert_abs_diff_eq;
use frontspeed::eta::{compute_eta, harnack_report, EtaOptions};
use frontspeed::export::write_speed_curve;
use frontspeed::front::{measured_speed_analysis, simulate_front, transition_wave_check, FrontOptions, InitialData};
use frontspeed::parabolic::CellGrid;
use frontspeed::speed::{analyse_speeds, kappa_curve, oracle, EigenOptions, SpeedOptions};
use frontspeed::{make_builtin, CoefficientField, Family, ParamValue, Params};
use proptest::prelude::*;

fn small() -> SpeedOptions {
    SpeedOptions {
        n_x: 32,
        horizon: 60,
        ..SpeedOptions::default()
    }
}

#[test]
fn homogeneous_pipeline_at_low_resolution() {
    let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
    let (sc, star) = analyse_speeds(&cf, &small()).unwrap();
    assert_abs_diff_eq!(star.lambda_star, 1.0, epsilon = 0.02);
    assert_abs_diff_eq!(star.c_star, 2.0, epsilon = 0.01);
    assert!(star.c_star_warning.is_none());
    assert!(sc.check_invariants(&cf, &small()).unwrap().holds());

    let mut buf = Vec::new();
    write_speed_curve(&mut buf, &sc, None).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), sc.lambda_grid.len());
    // Below lambda_*, lm(c_lambda) = lambda + 1/lambda.
    let l: f64 = rows[5][0].parse().unwrap();
    let lm: f64 = rows[5][1].parse().unwrap();
    assert_abs_diff_eq!(lm, l + 1.0 / l, epsilon = 1e-4);
}

#[test]
fn expression_field_matches_the_builtin() {
    let built = make_builtin(Family::SpacePeriodic, &Params::new()).unwrap().0;
    let parsed = CoefficientField::from_strs("1", "0", "1 + 0.5*cos(2*pi*x)", 1.0, None).unwrap();
    let grid = CellGrid::auto(32, &built, 1.0, 1.0, 1.0).unwrap();
    let opts = EtaOptions::with_horizon(50);
    let a = compute_eta(&built, 1.0, &grid, &opts).unwrap();
    let b = compute_eta(&parsed, 1.0, &grid, &opts).unwrap();
    for (x, y) in a.c_samples.iter().zip(&b.c_samples) {
        assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
    }
    let report = harnack_report(&a, &built).unwrap();
    assert!(report.envelopes_hold() && report.speed_bounds_hold());
}

#[test]
fn single_precision_cell_solution() {
    let (cf, _) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
    let grid = CellGrid::<f32>::auto(32, &cf, 0.5, 1.0, 1.0).unwrap();
    let es = compute_eta(&cf, 0.5f32, &grid, &EtaOptions::with_horizon(50)).unwrap();
    for c in &es.c_samples {
        assert!((c - 2.5).abs() < 1e-3, "{c}");
    }
}

#[test]
fn eigenvalue_bound_and_front_speed_for_time_periodic_growth() {
    let mut p = Params::new();
    p.insert("time_period".into(), ParamValue::Number(2.0 * std::f64::consts::PI));
    let (cf, rt) = make_builtin(Family::TimeOnly, &p).unwrap();
    let o = oracle(Family::TimeOnly, &p).unwrap();
    let ec = kappa_curve(
        &cf,
        &[0.5, 0.8, 1.0, 1.25, 2.0],
        &EigenOptions {
            n_x: 32,
            ..EigenOptions::default()
        },
    )
    .unwrap();
    assert_abs_diff_eq!(ec.c_star_lower, o.c_star, epsilon = 1e-3);
    assert!(ec.phi1_holds());

    let opts = FrontOptions {
        t_sim: 80.0,
        ..FrontOptions::default()
    };
    let trace = simulate_front::<f64>(&cf, &rt, InitialData::Step, &opts).unwrap();
    assert!(!trace.no_front);
    assert!(trace.monotone_defect() <= 1.0);
    let ms = measured_speed_analysis(&trace, 20.0, Some(ec.c_star_lower)).unwrap();
    assert!(ms.estimate.value > 1.8 && ms.estimate.value < 2.05);
    let wave = transition_wave_check(&trace);
    assert!(wave.snapshots_used > 0);
    assert!(wave.behind.last().unwrap() < &0.05);
}

#[test]
fn zero_data_has_no_front() {
    let (cf, rt) = make_builtin(Family::Homogeneous, &Params::new()).unwrap();
    let opts = FrontOptions {
        t_sim: 5.0,
        ..FrontOptions::default()
    };
    let trace = simulate_front::<f64>(&cf, &rt, InitialData::Zero, &opts).unwrap();
    assert!(trace.no_front);
    assert!(measured_speed_analysis(&trace, 1.0, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// For constant coefficients, c_lambda = a lambda + q + mu / lambda.
    #[test]
    fn constant_coefficients_give_the_linear_speed(
        a in 0.5f64..2.0,
        q in -1.0f64..1.0,
        mu in 0.2f64..2.0,
        lambda in 0.3f64..2.0,
    ) {
        let cf = CoefficientField::from_strs(&a.to_string(), &q.to_string(), &mu.to_string(), 4.0, None).unwrap();
        let grid = CellGrid::auto(32, &cf, lambda, 1.0, 1.0).unwrap();
        let es = compute_eta(&cf, lambda, &grid, &EtaOptions::with_horizon(50)).unwrap();
        let exact = a * lambda + q + mu / lambda;
        for c in &es.c_samples {
            prop_assert!((c - exact).abs() < 1e-6, "{} vs {}", c, exact);
        }
    }
}
