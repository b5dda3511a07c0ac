use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::format::data;
use crate::hydro::{aggregate_to_daily, DailySeries, ForcingSeries, ForecastArchive};
use crate::{Error, Result, MAX_LEAD, MEMBERS};

pub const OBS_HEADER: [&str; 2] = ["date", "flow_cms"];
pub const FORCING_HEADER: [&str; 3] = ["date", "precip_mm", "temperature_c"];
pub const FORECAST_HEADER: [&str; 4] = ["issue_date", "lead_days", "member", "flow_cms"];
pub const PRECIP_FORECAST_HEADER: [&str; 4] = ["issue_date", "lead_days", "member", "precip_mm"];
pub const SUBDAILY_HEADER: [&str; 4] = ["issue_datetime", "valid_datetime", "member", "flow_cms"];

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(display(path), e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let got = reader
        .headers()
        .map_err(|e| Error::format(format!("{}:1: {e}", display(path))))?
        .clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::format(format!(
            "{}:1: expected header `{}`, found `{}`",
            display(path),
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(reader)
}

/// Rows with their 1-based line numbers.
fn rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut reader = open(path, header)?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(format!("{}:{line}: {e}", display(path)))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::format(format!(
                "{}:{line}: expected {} fields, found {}",
                display(path),
                header.len(),
                rec.len()
            )));
        }
        out.push((line, rec));
    }
    Ok(out)
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    rec: &'a csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::format(format!("{}:{}: {msg}", display(self.path), self.line))
    }

    fn field<T: std::str::FromStr>(&self, k: usize, what: &str) -> Result<T> {
        let s = &self.rec[k];
        s.parse().map_err(|_| self.err(format!("invalid {what} {s:?}")))
    }

    fn value(&self, k: usize, what: &str) -> Result<f64> {
        let v: f64 = self.field(k, what)?;
        if !v.is_finite() || v < 0.0 {
            return Err(self.err(format!("{what} must be finite and non-negative, got {v}")));
        }
        Ok(v)
    }

    fn datetime(&self, k: usize, what: &str) -> Result<NaiveDateTime> {
        let s = &self.rec[k];
        ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .ok_or_else(|| self.err(format!("invalid {what} {s:?}")))
    }
}

/// A daily series read from disk, with the dates it lacked.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestedSeries {
    pub series: DailySeries,
    pub gaps: Vec<NaiveDate>,
}

/// Reads `date,flow_cms` rows in increasing date order; skipped dates
/// become gaps.
pub fn ingest_observations(path: impl AsRef<Path>) -> Result<IngestedSeries> {
    let path = path.as_ref();
    let mut points: Vec<(NaiveDate, f64)> = Vec::new();
    for (line, rec) in rows(path, &OBS_HEADER)? {
        let row = Row { path, line, rec: &rec };
        let date: NaiveDate = row.field(0, "date")?;
        let flow = row.value(1, "flow")?;
        if let Some(&(prev, _)) = points.last() {
            if date <= prev {
                return Err(row.err(format!("date {date} does not follow {prev}")));
            }
        }
        points.push((date, flow));
    }
    let Some(&(start, _)) = points.first() else {
        return Err(Error::format(format!("{}: no observations", display(path))));
    };
    let end = points.last().unwrap().0;
    let mut values = vec![None; (end - start).num_days() as usize + 1];
    for (d, v) in points {
        values[(d - start).num_days() as usize] = Some(v);
    }
    let series = DailySeries::new(start, values)?;
    let gaps = series.missing_dates();
    if !gaps.is_empty() {
        log::warn!("{}: {} missing dates, first {}", display(path), gaps.len(), gaps[0]);
    }
    Ok(IngestedSeries { series, gaps })
}

pub fn write_observations(path: impl AsRef<Path>, series: &DailySeries) -> Result<()> {
    let path = path.as_ref();
    write_rows(path, &OBS_HEADER, series.iter().map(|(d, v)| vec![d.to_string(), data(v)]))
}

/// Reads `date,precip_mm,temperature_c` rows covering consecutive days.
pub fn ingest_forcing(path: impl AsRef<Path>) -> Result<ForcingSeries> {
    let path = path.as_ref();
    let mut start = None;
    let (mut precip, mut temperature) = (Vec::new(), Vec::new());
    for (line, rec) in rows(path, &FORCING_HEADER)? {
        let row = Row { path, line, rec: &rec };
        let date: NaiveDate = row.field(0, "date")?;
        let first = *start.get_or_insert(date);
        let expected = first + chrono::Days::new(precip.len() as u64);
        if date != expected {
            return Err(row.err(format!("expected {expected}, forcing must be contiguous")));
        }
        precip.push(row.value(1, "precipitation")?);
        let t: f64 = row.field(2, "temperature")?;
        if !t.is_finite() {
            return Err(row.err("temperature must be finite"));
        }
        temperature.push(t);
    }
    let start = start.ok_or_else(|| Error::format(format!("{}: no forcing rows", display(path))))?;
    ForcingSeries::new(start, precip, temperature)
}

pub fn write_forcing(path: impl AsRef<Path>, forcing: &ForcingSeries) -> Result<()> {
    let rows = (0..forcing.len()).map(|k| {
        vec![
            forcing.date_at(k).to_string(),
            data(forcing.precip()[k]),
            data(forcing.temperature()[k]),
        ]
    });
    write_rows(path.as_ref(), &FORCING_HEADER, rows)
}

fn check_complete(path: &Path, archive: &ForecastArchive) -> Result<()> {
    if archive.is_complete() {
        return Ok(());
    }
    for &issue in archive.issue_dates() {
        for lead in 1..=MAX_LEAD {
            for m in 0..MEMBERS {
                if archive.get(issue, lead, m).is_none() {
                    return Err(Error::format(format!(
                        "{}: archive incomplete ({} missing cells), first missing issue {issue} lead {lead} member {m}",
                        display(path),
                        archive.missing_count()
                    )));
                }
            }
        }
    }
    unreachable!("incomplete archive without a missing cell")
}

fn read_daily_archive(path: &Path, header: &[&str; 4], require_complete: bool) -> Result<ForecastArchive> {
    let mut cells = Vec::new();
    for (line, rec) in rows(path, header)? {
        let row = Row { path, line, rec: &rec };
        let issue: NaiveDate = row.field(0, "issue date")?;
        let lead: u32 = row.field(1, "lead")?;
        if !(1..=MAX_LEAD).contains(&lead) {
            return Err(row.err(format!("lead {lead} outside 1..={MAX_LEAD}")));
        }
        let member: usize = row.field(2, "member")?;
        if member >= MEMBERS {
            return Err(row.err(format!("member {member} outside 0..={}", MEMBERS - 1)));
        }
        cells.push((line, issue, lead, member, row.value(3, header[3])?));
    }
    let mut archive = ForecastArchive::empty(cells.iter().map(|c| c.1).collect());
    for (line, issue, lead, member, v) in cells {
        archive
            .insert(issue, lead, member, v)
            .map_err(|e| Error::format(format!("{}:{line}: {e}", display(path))))?;
    }
    if require_complete {
        check_complete(path, &archive)?;
    }
    Ok(archive)
}

fn read_subdaily_archive(path: &Path) -> Result<ForecastArchive> {
    let mut groups: BTreeMap<(NaiveDate, usize), Vec<(NaiveDateTime, f64)>> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for (line, rec) in rows(path, &SUBDAILY_HEADER)? {
        let row = Row { path, line, rec: &rec };
        let issue = row.datetime(0, "issue time")?;
        let valid = row.datetime(1, "valid time")?;
        let member: usize = row.field(2, "member")?;
        if member >= MEMBERS {
            return Err(row.err(format!("member {member} outside 0..={}", MEMBERS - 1)));
        }
        if !seen.insert((issue, valid, member)) {
            return Err(row.err(format!("duplicate value for issue {issue}, valid {valid}, member {member}")));
        }
        groups.entry((issue.date(), member)).or_default().push((valid, row.value(3, "flow")?));
    }
    let issues: Vec<NaiveDate> = groups.keys().map(|k| k.0).collect();
    let mut archive = ForecastArchive::empty(issues);
    for ((issue, member), mut points) in groups {
        points.sort_by_key(|p| p.0);
        let daily = aggregate_to_daily(&points)
            .map_err(|e| Error::format(format!("{}: issue {issue} member {member}: {e}", display(path))))?;
        if !daily.excluded.is_empty() {
            log::warn!(
                "{}: issue {issue} member {member}: {} day(s) without 4 sub-daily values excluded",
                display(path),
                daily.excluded.len()
            );
        }
        for (day, v) in daily.series.iter() {
            let lead = (day - issue).num_days();
            if !(1..=i64::from(MAX_LEAD)).contains(&lead) {
                return Err(Error::format(format!(
                    "{}: issue {issue} member {member}: valid day {day} is lead {lead}, outside 1..={MAX_LEAD}",
                    display(path)
                )));
            }
            archive.insert(issue, lead as u32, member, v)?;
        }
    }
    check_complete(path, &archive)?;
    Ok(archive)
}

/// Reads a complete streamflow forecast archive, daily or 6-hourly.
pub fn ingest_forecasts(path: impl AsRef<Path>, subdaily: bool) -> Result<ForecastArchive> {
    let path = path.as_ref();
    if subdaily {
        read_subdaily_archive(path)
    } else {
        read_daily_archive(path, &FORECAST_HEADER, true)
    }
}

/// Reads a streamflow archive that may lack cells, such as postprocessed
/// output.
pub fn read_partial_forecasts(path: impl AsRef<Path>) -> Result<ForecastArchive> {
    read_daily_archive(path.as_ref(), &FORECAST_HEADER, false)
}

pub fn ingest_precip_forecasts(path: impl AsRef<Path>) -> Result<ForecastArchive> {
    read_daily_archive(path.as_ref(), &PRECIP_FORECAST_HEADER, true)
}

fn archive_rows(archive: &ForecastArchive) -> impl Iterator<Item = Vec<String>> + '_ {
    archive
        .iter()
        .map(|(issue, lead, member, v)| vec![issue.to_string(), lead.to_string(), member.to_string(), data(v)])
}

pub fn write_forecasts(path: impl AsRef<Path>, archive: &ForecastArchive) -> Result<()> {
    write_rows(path.as_ref(), &FORECAST_HEADER, archive_rows(archive))
}

pub fn write_precip_forecasts(path: impl AsRef<Path>, archive: &ForecastArchive) -> Result<()> {
    write_rows(path.as_ref(), &PRECIP_FORECAST_HEADER, archive_rows(archive))
}

/// Writes a header line and comma-joined rows.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e| Error::io(display(path), e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn observations_with_gap() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        fs::write(&p, "date,flow_cms\n2010-01-01,1.5\n2010-01-02,2\n2010-01-05,3\n").unwrap();
        let got = ingest_observations(&p).unwrap();
        assert_eq!(got.series.len(), 5);
        assert_eq!(got.gaps, vec![d(2010, 1, 3), d(2010, 1, 4)]);
        fs::write(&p, "date,flow_cms\n2010-01-01,1.5\n2010-01-02,2\n2010-01-03,3\n").unwrap();
        let got = ingest_observations(&p).unwrap();
        assert_eq!(got.series.len(), 3);
        assert!(got.gaps.is_empty());
    }

    #[test]
    fn negative_flow_cites_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        fs::write(&p, "date,flow_cms\n2010-01-01,-3.0\n").unwrap();
        let err = ingest_observations(&p).unwrap_err().to_string();
        assert!(err.contains("obs.csv:2:"), "{err}");
        fs::write(&p, "date,flow_cms\n2010-01-01,1\n2010-01-02,abc\n").unwrap();
        assert!(ingest_observations(&p).unwrap_err().to_string().contains(":3:"));
        fs::write(&p, "day,flow\n2010-01-01,1\n").unwrap();
        assert!(ingest_observations(&p).unwrap_err().to_string().contains("expected header"));
    }

    #[test]
    fn daily_forecast_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fc.csv");
        fs::write(&p, "issue_date,lead_days,member,flow_cms\n2010-01-01,8,0,1\n").unwrap();
        assert!(ingest_forecasts(&p, false).unwrap_err().to_string().contains("lead 8"));
        fs::write(&p, "issue_date,lead_days,member,flow_cms\n2010-01-01,1,11,1\n").unwrap();
        assert!(ingest_forecasts(&p, false).unwrap_err().to_string().contains("member 11"));
        fs::write(&p, "issue_date,lead_days,member,flow_cms\n2010-01-01,1,0,1\n2010-01-01,1,0,2\n").unwrap();
        let err = ingest_forecasts(&p, false).unwrap_err().to_string();
        assert!(err.contains(":3:") && err.contains("2010-01-01") && err.contains("lead 1") && err.contains("member 0"), "{err}");
        fs::write(&p, "issue_date,lead_days,member,flow_cms\n2010-01-01,1,0,1\n").unwrap();
        assert!(ingest_forecasts(&p, false).unwrap_err().to_string().contains("incomplete"));
        assert_eq!(read_partial_forecasts(&p).unwrap().get(d(2010, 1, 1), 1, 0), Some(1.0));
    }

    #[test]
    fn forcing_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("forcing.csv");
        let f = ForcingSeries::new(d(2004, 2, 27), vec![0.0, 1.0 / 3.0, 7.25], vec![-4.1, 0.0, 1e-7]).unwrap();
        write_forcing(&p, &f).unwrap();
        assert_eq!(ingest_forcing(&p).unwrap(), f);
    }
}
