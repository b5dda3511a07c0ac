use chrono::NaiveDate;
use enspost::baselines::{build_climatology, climatology_prob_forecast, DayOfYearClimatology};
use enspost::hydro::{classify_season, DailySeries, DateRange, FlowCategory, FlowThresholds, ForecastArchive, Season};
use enspost::verify::{
    brier_score, common_cases, conditional_verify, exceedance_probability, nse, rmse, Metric, ProbForecastSet,
    System, SystemForecasts, VerifySettings,
};
use enspost::{MAX_LEAD, MEMBERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

struct Fixture {
    obs: DailySeries,
    archive: ForecastArchive,
    clim: DayOfYearClimatology,
    thresholds: FlowThresholds,
    range: DateRange,
}

fn fixture() -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = d(2003, 1, 1);
    let n = 3 * 365;
    let values: Vec<f64> = (0..n)
        .map(|t| 10.0 + 6.0 * (t as f64 * std::f64::consts::TAU / 365.0).sin() + rng.random::<f64>() * 4.0)
        .collect();
    let obs = DailySeries::from_values(start, values).unwrap();
    let train = DateRange::new(start, d(2004, 12, 31));
    let range = DateRange::new(d(2005, 1, 1), obs.end());
    let mut archive = ForecastArchive::daily(d(2004, 12, 20), obs.end() - chrono::Days::new(7));
    for issue in archive.issue_dates().to_vec() {
        for lead in 1..=MAX_LEAD {
            let truth = obs.get(ForecastArchive::valid_date(issue, lead)).unwrap();
            for m in 0..MEMBERS {
                let noise = (rng.random::<f64>() - 0.5) * f64::from(lead);
                archive.set(issue, lead, m, (truth + noise).max(0.0)).unwrap();
            }
        }
    }
    let train_obs = obs.subset(train);
    let clim = build_climatology(&train_obs, 15).unwrap();
    let thresholds = FlowThresholds::from_sample(&train_obs.present_values()).unwrap();
    Fixture { obs, archive, clim, thresholds, range }
}

fn settings(range: DateRange) -> VerifySettings {
    VerifySettings { leads: (1..=MAX_LEAD).collect(), range, bins: 10 }
}

#[test]
fn seasonal_subsets_partition_the_cases() {
    let f = fixture();
    let systems = [System { name: "raw", forecasts: SystemForecasts::Ensemble(&f.archive) }];
    let report = conditional_verify(&systems, &f.obs, &f.clim, &f.thresholds, &settings(f.range)).unwrap();
    for lead in 1..=MAX_LEAD {
        let n = |season: &str| report.get("raw", lead, season, "all", Metric::Nse).unwrap().n;
        assert_eq!(n("all"), n("cool") + n("warm"), "lead {lead}");
        assert_eq!(n("all"), common_cases(&systems, &f.obs, lead, f.range).len());
    }
}

#[test]
fn subset_scores_match_direct_computation() {
    let f = fixture();
    let systems = [System { name: "raw", forecasts: SystemForecasts::Ensemble(&f.archive) }];
    let report = conditional_verify(&systems, &f.obs, &f.clim, &f.thresholds, &settings(f.range)).unwrap();
    let lead = 3;
    let cases: Vec<_> = common_cases(&systems, &f.obs, lead, f.range)
        .into_iter()
        .filter(|c| classify_season(c.valid) == Season::Warm)
        .collect();
    let mean = |c: &enspost::verify::VerifiedCase| {
        let e = f.archive.ensemble(c.issue, lead).unwrap();
        e.iter().sum::<f64>() / MEMBERS as f64
    };
    let fc: Vec<f64> = cases.iter().map(mean).collect();
    let y: Vec<f64> = cases.iter().map(|c| c.obs).collect();
    assert_eq!(report.get("raw", lead, "warm", "all", Metric::Nse).unwrap().value, nse(&fc, &y).unwrap());
    assert_eq!(report.get("raw", lead, "warm", "all", Metric::Rmse).unwrap().value, rmse(&fc, &y).unwrap());

    let z = f.thresholds.get(FlowCategory::High);
    let set = ProbForecastSet::from_pairs(cases.iter().map(|c| {
        (exceedance_probability(&f.archive.ensemble(c.issue, lead).unwrap(), z), c.obs > z)
    }))
    .unwrap();
    let bs = report.get("raw", lead, "warm", FlowCategory::High.label(), Metric::Bs).unwrap().value;
    assert_eq!(bs, brier_score(&set).unwrap());
}

#[test]
fn climatology_has_zero_skill_against_itself() {
    let f = fixture();
    let systems = [
        System { name: "climatology", forecasts: SystemForecasts::Climatology(&f.clim) },
        System { name: "raw", forecasts: SystemForecasts::Ensemble(&f.archive) },
    ];
    let report = conditional_verify(&systems, &f.obs, &f.clim, &f.thresholds, &settings(f.range)).unwrap();
    for lead in 1..=MAX_LEAD {
        for cat in [FlowCategory::LowModerate, FlowCategory::High] {
            let row = report.get("climatology", lead, "all", cat.label(), Metric::Bss).unwrap();
            assert_eq!(row.value, 0.0);
        }
    }
    let p = climatology_prob_forecast(&f.clim, d(2005, 7, 1), f.thresholds.high);
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn reliability_counts_cover_every_case() {
    let f = fixture();
    let systems = [System { name: "raw", forecasts: SystemForecasts::Ensemble(&f.archive) }];
    let report = conditional_verify(&systems, &f.obs, &f.clim, &f.thresholds, &settings(f.range)).unwrap();
    assert_eq!(report.reliability.len(), 2 * MAX_LEAD as usize);
    for row in &report.reliability {
        let n = report.get("raw", row.lead, "all", row.category, Metric::Bs).unwrap().n;
        assert_eq!(row.curve.total(), n);
        assert_eq!(row.curve.bins.len(), 10);
    }
}

#[test]
fn common_cases_drop_issues_missing_in_any_system() {
    let f = fixture();
    let mut holed = f.archive.clone();
    let issue = d(2005, 3, 1);
    holed.clear(issue, 2, 4);
    let systems = [
        System { name: "a", forecasts: SystemForecasts::Ensemble(&f.archive) },
        System { name: "b", forecasts: SystemForecasts::Ensemble(&holed) },
    ];
    let full = common_cases(&systems[..1], &f.obs, 2, f.range);
    let both = common_cases(&systems, &f.obs, 2, f.range);
    assert_eq!(both.len() + 1, full.len());
    assert!(both.iter().all(|c| c.issue != issue));
    assert_eq!(
        common_cases(&systems, &f.obs, 3, f.range).len(),
        common_cases(&systems[..1], &f.obs, 3, f.range).len()
    );
}

#[test]
fn rejects_out_of_range_leads() {
    let f = fixture();
    let systems = [System { name: "raw", forecasts: SystemForecasts::Ensemble(&f.archive) }];
    let mut s = settings(f.range);
    s.leads = vec![0];
    assert!(conditional_verify(&systems, &f.obs, &f.clim, &f.thresholds, &s).is_err());
}
