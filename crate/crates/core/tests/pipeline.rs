//! End-to-end runs over synthetic data: CSV round trip, weekly aggregation,
//! Granger scan, VAR forecast and schedule independence.

use mobstat::betareg::published::{AGE_POST, AGE_PRE};
use mobstat::did::{did_test_with, DidConfig};
use mobstat::exec::Exec;
use mobstat::forecast::{rolling_backtest_with, var_fit};
use mobstat::granger::{granger_scan_with, Direction, ScanDirection};
use mobstat::ingest::{
    parse_demographics_csv, parse_fatalities_csv, parse_mobility_csv, synthesize_dataset,
    weekly_aggregate, write_demographics_csv, write_fatalities_csv, write_mobility_csv,
    SynthConfig,
};

fn config(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn csv_round_trip_preserves_weekly_series() {
    let data = synthesize_dataset(&config(21)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (m, f, d) = (
        dir.path().join("m.csv"),
        dir.path().join("f.csv"),
        dir.path().join("d.csv"),
    );
    write_mobility_csv(&m, &data.mobility).unwrap();
    write_fatalities_csv(&f, &data.fatalities).unwrap();
    write_demographics_csv(&d, &data.demographics).unwrap();
    assert_eq!(parse_mobility_csv(&m).unwrap(), data.mobility);
    assert_eq!(parse_fatalities_csv(&f).unwrap(), data.fatalities);
    assert_eq!(parse_demographics_csv(&d).unwrap(), data.demographics);

    let direct = weekly_aggregate(&data.mobility, &data.fatalities, None).unwrap();
    let reread = weekly_aggregate(
        &parse_mobility_csv(&m).unwrap(),
        &parse_fatalities_csv(&f).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(direct, reread);
    assert_eq!(direct.len(), 52);
}

#[test]
fn var_finds_negative_lag3_mobility_effect() {
    let seeds = 200;
    let hits = Exec::default()
        .map(seeds, |s| {
            let data = synthesize_dataset(&config(1000 + s as u64)).unwrap();
            let weekly = weekly_aggregate(&data.mobility, &data.fatalities, None).unwrap();
            let model = var_fit(&weekly).unwrap();
            model.mobility_coefficients[2] < 0.0 && model.mobility_p_values[2] < 0.05
        })
        .into_iter()
        .filter(|&hit| hit)
        .count();
    assert!(hits * 10 >= seeds * 9, "{hits}/{seeds} seeds");
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let data = synthesize_dataset(&config(5)).unwrap();
    let weekly = weekly_aggregate(&data.mobility, &data.fatalities, None).unwrap();

    let scan = |exec| granger_scan_with(&weekly, 6, ScanDirection::Both, exec).unwrap();
    let (seq, par) = (scan(Exec::Sequential), scan(Exec::Parallel));
    assert_eq!(seq, par);
    assert_eq!(seq[0].direction, Direction::Forward);
    assert!(seq[0].results[2].p_value < 0.01);

    let backtest = |exec| rolling_backtest_with(&weekly, 8, exec).unwrap();
    assert_eq!(backtest(Exec::Sequential), backtest(Exec::Parallel));

    let did = |exec| {
        let cfg = DidConfig {
            n_samples: 20_000,
            draws_per_cell: 32,
            seed: 9,
            exec,
        };
        did_test_with(&AGE_PRE, &AGE_POST, &[1.0], &[0.0], &cfg).unwrap()
    };
    assert_eq!(did(Exec::Sequential), did(Exec::Parallel));
}
