use std::fmt::Write as _;
use std::fs;

use chrono::{Days, NaiveDate, NaiveDateTime};
use enspost::hydro::ForecastArchive;
use enspost::pipeline::{
    ingest_forcing, ingest_forecasts, ingest_observations, ingest_precip_forecasts, write_forcing, write_forecasts,
    write_observations, write_precip_forecasts,
};
use enspost::synthetic::{generate, CatchmentConfig};
use enspost::{MAX_LEAD, MEMBERS};

fn small() -> CatchmentConfig {
    CatchmentConfig {
        years: 2,
        train_years: 1,
        seed: 77,
        ..CatchmentConfig::default()
    }
}

#[test]
fn synthetic_csvs_ingest_to_identical_structures() {
    let ds = generate(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    write_observations(p("obs.csv"), &ds.truth).unwrap();
    write_forecasts(p("fc.csv"), &ds.raw).unwrap();
    write_forcing(p("forcing.csv"), &ds.forcing).unwrap();
    write_precip_forecasts(p("pfc.csv"), &ds.precip_forecast).unwrap();

    let obs = ingest_observations(p("obs.csv")).unwrap();
    assert!(obs.gaps.is_empty());
    assert_eq!(obs.series, ds.truth);
    assert_eq!(ingest_forecasts(p("fc.csv"), false).unwrap(), ds.raw);
    assert_eq!(ingest_forcing(p("forcing.csv")).unwrap(), ds.forcing);
    assert_eq!(ingest_precip_forecasts(p("pfc.csv")).unwrap(), ds.precip_forecast);
}

#[test]
fn one_issue_daily_archive_has_77_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fc.csv");
    let mut text = String::from("issue_date,lead_days,member,flow_cms\n");
    for lead in 1..=MAX_LEAD {
        for m in 0..MEMBERS {
            let _ = writeln!(text, "2010-03-01,{lead},{m},{}", f64::from(lead) + m as f64 / 10.0);
        }
    }
    fs::write(&path, text).unwrap();
    let a = ingest_forecasts(&path, false).unwrap();
    assert_eq!(a.cell_count(), 77);
    assert!(a.is_complete());
    assert_eq!(a.get(NaiveDate::from_ymd_opt(2010, 3, 1).unwrap(), 7, 10), Some(8.0));
}

#[test]
fn six_hourly_rows_aggregate_to_daily_means() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub.csv");
    let issue = NaiveDate::from_ymd_opt(2010, 3, 1).unwrap();
    let issue_time: NaiveDateTime = issue.and_hms_opt(0, 0, 0).unwrap();
    let value = |lead: u32, m: usize, k: u32| f64::from(lead) * 1.5 + m as f64 * 0.25 + f64::from(k) * 0.1;
    let mut text = String::from("issue_datetime,valid_datetime,member,flow_cms\n");
    for m in 0..MEMBERS {
        for lead in 1..=MAX_LEAD {
            for k in 0..4 {
                let valid = (issue + Days::new(u64::from(lead))).and_hms_opt(6 * k, 0, 0).unwrap();
                let _ = writeln!(
                    text,
                    "{},{},{m},{}",
                    issue_time.format("%Y-%m-%dT%H:%M:%S"),
                    valid.format("%Y-%m-%dT%H:%M:%S"),
                    value(lead, m, k)
                );
            }
        }
    }
    fs::write(&path, text).unwrap();
    let a = ingest_forecasts(&path, true).unwrap();
    assert_eq!(a.cell_count(), 77);
    for lead in 1..=MAX_LEAD {
        for m in 0..MEMBERS {
            let oracle = (0..4).map(|k| value(lead, m, k)).sum::<f64>() / 4.0;
            let got = a.get(issue, lead, m).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle, "lead {lead} member {m}");
        }
    }
    assert_eq!(ForecastArchive::valid_date(issue, 1), NaiveDate::from_ymd_opt(2010, 3, 2).unwrap());
}

fn subdaily_text(short: (usize, u32)) -> String {
    let mut text = String::from("issue_datetime,valid_datetime,member,flow_cms\n");
    for m in 0..MEMBERS {
        for lead in 1..=MAX_LEAD {
            let per_day = if (m, lead) == short { 3 } else { 4 };
            for k in 0..per_day {
                let _ = writeln!(text, "2010-03-01T00:00:00,2010-03-{:02}T{:02}:00:00,{m},1.5", 1 + lead, 6 * k);
            }
        }
    }
    text
}

#[test]
fn a_short_final_subdaily_day_makes_the_archive_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub.csv");
    fs::write(&path, subdaily_text((3, 7))).unwrap();
    let err = ingest_forecasts(&path, true).unwrap_err().to_string();
    assert!(err.contains("incomplete") && err.contains("lead 7 member 3"), "{err}");
}

#[test]
fn a_gap_inside_a_subdaily_trajectory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub.csv");
    fs::write(&path, subdaily_text((3, 5))).unwrap();
    let err = ingest_forecasts(&path, true).unwrap_err().to_string();
    assert!(err.contains("member 3") && err.contains("6 hours apart"), "{err}");
}
