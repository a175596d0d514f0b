//! Daily rate ingestion, weekly averaging and spread construction.
//!
//! Input rows carry six 1-month rates in percent per annum. Weekly means are
//! taken over ISO weeks (Monday to Sunday) and each spread is a rate minus the
//! treasury-bond yield, in percentage points.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, IsoWeek, NaiveDate};

use crate::error::{Error, Result};

/// Number of spread series in a panel.
pub const N_SERIES: usize = 5;

pub const DAILY_HEADER: [&str; 7] = [
    "date", "shibor_1m", "ir_1m", "er_1m", "cp_1m", "pfb_1m", "tb_1m",
];

pub const PANEL_HEADER: [&str; 7] = [
    "week_end",
    "x1_shibor_tb",
    "x2_ir_tb",
    "x3_er_tb",
    "x4_cp_tb",
    "x5_pfb_tb",
    "b_tb_yield",
];

/// Short labels of the five spreads, in panel order.
pub const SPREAD_LABELS: [&str; N_SERIES] = ["Shibor-TB", "IR-TB", "ER-TB", "CP-TB", "PFB-TB"];

/// Index of the treasury yield within the six daily rates.
pub const TB: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRow {
    pub date: NaiveDate,
    /// Shibor, IR, ER, CP, PFB, TB. `None` marks an empty cell.
    pub rates: [Option<f64>; 6],
}

impl DailyRow {
    pub fn complete(date: NaiveDate, rates: [f64; 6]) -> Self {
        Self {
            date,
            rates: rates.map(Some),
        }
    }

    fn is_complete(&self) -> bool {
        self.rates.iter().all(Option::is_some)
    }
}

/// Validated daily rates, sorted by date without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyRateTable {
    rows: Vec<DailyRow>,
}

impl DailyRateTable {
    pub fn new(mut rows: Vec<DailyRow>) -> Result<Self> {
        for row in &rows {
            for v in row.rates.iter().flatten() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::Panel(format!(
                        "rate {v} on {} must be finite and non-negative",
                        row.date
                    )));
                }
            }
        }
        rows.sort_by_key(|r| r.date);
        if let Some(w) = rows.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Panel(format!("duplicate date {}", w[0].date)));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[DailyRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reads a daily rate CSV from disk.
pub fn load_daily(path: impl AsRef<Path>) -> Result<DailyRateTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_daily(file, path)
}

/// Reads a daily rate CSV. `origin` is used only in error messages.
pub fn read_daily<R: Read>(reader: R, origin: &Path) -> Result<DailyRateTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, &DAILY_HEADER, origin)?;

    let mut rows = Vec::new();
    let mut seen: HashMap<NaiveDate, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, origin))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let ingest = |message: String| Error::Ingest {
            path: origin.to_path_buf(),
            line,
            message,
        };
        if rec.len() != DAILY_HEADER.len() {
            return Err(ingest(format!(
                "expected {} fields, found {}",
                DAILY_HEADER.len(),
                rec.len()
            )));
        }
        let date = parse_date(&rec[0]).map_err(&ingest)?;
        let mut rates = [None; 6];
        for (k, slot) in rates.iter_mut().enumerate() {
            let cell = &rec[k + 1];
            if cell.is_empty() {
                continue;
            }
            let v = parse_finite(cell, DAILY_HEADER[k + 1]).map_err(&ingest)?;
            if v < 0.0 {
                return Err(ingest(format!("{} is negative ({v})", DAILY_HEADER[k + 1])));
            }
            *slot = Some(v);
        }
        if let Some(first) = seen.insert(date, line) {
            return Err(ingest(format!(
                "duplicate date {date} (first seen on line {first})"
            )));
        }
        rows.push(DailyRow { date, rates });
    }
    DailyRateTable::new(rows)
}

/// How days with only some of the six rates present enter the weekly means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingDayPolicy {
    /// Drop the whole day from all six means.
    #[default]
    DropIncomplete,
    /// Average each series over the days on which it is present.
    PerSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyRow {
    /// Last trading day present in the ISO week.
    pub week_end: NaiveDate,
    pub rates: [Option<f64>; 6],
    /// Number of daily rows that contributed.
    pub days: usize,
}

/// One row per ISO week that has at least one usable trading day.
pub fn weekly_average(table: &DailyRateTable) -> Vec<WeeklyRow> {
    weekly_average_with(table, MissingDayPolicy::DropIncomplete)
}

pub fn weekly_average_with(table: &DailyRateTable, policy: MissingDayPolicy) -> Vec<WeeklyRow> {
    let mut out = Vec::new();
    let rows = table.rows();
    let mut start = 0;
    while start < rows.len() {
        let week: IsoWeek = rows[start].date.iso_week();
        let mut end = start;
        while end < rows.len() && rows[end].date.iso_week() == week {
            end += 1;
        }
        let days: Vec<&DailyRow> = rows[start..end]
            .iter()
            .filter(|r| policy == MissingDayPolicy::PerSeries || r.is_complete())
            .collect();
        if !days.is_empty() {
            let mut rates = [None; 6];
            for (k, slot) in rates.iter_mut().enumerate() {
                let vals: Vec<f64> = days.iter().filter_map(|r| r.rates[k]).collect();
                if !vals.is_empty() {
                    *slot = Some(vals.iter().sum::<f64>() / vals.len() as f64);
                }
            }
            out.push(WeeklyRow {
                week_end: days.last().map(|r| r.date).unwrap_or(rows[end - 1].date),
                rates,
                days: days.len(),
            });
        }
        start = end;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadWeek {
    pub week_end: NaiveDate,
    /// Shibor-TB, IR-TB, ER-TB, CP-TB, PFB-TB in percentage points.
    pub x: [f64; N_SERIES],
    /// Weekly treasury-bond yield.
    pub b: f64,
}

/// Weekly five-variate spread panel plus the treasury-yield covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadPanel {
    weeks: Vec<SpreadWeek>,
}

impl SpreadPanel {
    pub fn new(weeks: Vec<SpreadWeek>) -> Result<Self> {
        for (i, w) in weeks.iter().enumerate() {
            if !w.b.is_finite() || w.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Panel(format!(
                    "non-finite value in week {} ({})",
                    i + 1,
                    w.week_end
                )));
            }
        }
        for pair in weeks.windows(2) {
            let (a, b) = (pair[0].week_end, pair[1].week_end);
            if b <= a || a.iso_week() == b.iso_week() {
                return Err(Error::Panel(format!(
                    "week_end dates must fall in strictly increasing calendar weeks ({a} then {b})"
                )));
            }
        }
        Ok(Self { weeks })
    }

    pub fn weeks(&self) -> &[SpreadWeek] {
        &self.weeks
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.weeks.iter().map(|w| w.week_end).collect()
    }

    /// Column `i` (0-based) of the spread matrix.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.weeks.iter().map(|w| w.x[i]).collect()
    }

    pub fn covariate(&self) -> Vec<f64> {
        self.weeks.iter().map(|w| w.b).collect()
    }

    /// Sub-panel of weeks `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            weeks: self.weeks[range].to_vec(),
        }
    }
}

/// Subtracts the weekly TB yield from each of the other five weekly rates.
pub fn build_spreads(weekly: &[WeeklyRow]) -> Result<SpreadPanel> {
    let mut weeks = Vec::with_capacity(weekly.len());
    for row in weekly {
        let mut full = [0.0; 6];
        for (k, v) in row.rates.iter().enumerate() {
            full[k] = v.ok_or_else(|| {
                Error::Panel(format!(
                    "series {} missing in week ending {}",
                    DAILY_HEADER[k + 1],
                    row.week_end
                ))
            })?;
        }
        let tb = full[TB];
        let mut x = [0.0; N_SERIES];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = full[i] - tb;
        }
        weeks.push(SpreadWeek {
            week_end: row.week_end,
            x,
            b: tb,
        });
    }
    SpreadPanel::new(weeks)
}

pub fn write_panel(panel: &SpreadPanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, panel_to_csv(panel)).map_err(|e| Error::io(path, e))
}

pub fn panel_to_csv(panel: &SpreadPanel) -> String {
    let mut s = PANEL_HEADER.join(",");
    s.push('\n');
    for w in panel.weeks() {
        let _ = write!(s, "{}", w.week_end.format("%Y-%m-%d"));
        for v in w.x {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{}", w.b);
    }
    s
}

pub fn load_panel(path: impl AsRef<Path>) -> Result<SpreadPanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_panel(file, path)
}

pub fn read_panel<R: Read>(reader: R, origin: &Path) -> Result<SpreadPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    check_header(&mut rdr, &PANEL_HEADER, origin)?;
    let mut weeks = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, origin))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let ingest = |message: String| Error::Ingest {
            path: origin.to_path_buf(),
            line,
            message,
        };
        if rec.len() != PANEL_HEADER.len() {
            return Err(ingest(format!(
                "expected {} fields, found {}",
                PANEL_HEADER.len(),
                rec.len()
            )));
        }
        let week_end = parse_date(&rec[0]).map_err(&ingest)?;
        let mut x = [0.0; N_SERIES];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = parse_finite(&rec[i + 1], PANEL_HEADER[i + 1]).map_err(&ingest)?;
        }
        let b = parse_finite(&rec[6], PANEL_HEADER[6]).map_err(&ingest)?;
        weeks.push(SpreadWeek { week_end, x, b });
    }
    SpreadPanel::new(weeks)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str], origin: &Path) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(e, origin))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::Schema {
            path: origin.to_path_buf(),
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn csv_error(e: csv::Error, origin: &Path) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Ingest {
        path: origin.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

fn parse_finite(s: &str, column: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|_| format!("{column}: cannot parse `{s}` as a number"))?;
    if !v.is_finite() {
        return Err(format!("{column}: non-finite value `{s}`"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn parse(text: &str) -> Result<DailyRateTable> {
        read_daily(text.as_bytes(), &PathBuf::from("mem.csv"))
    }

    const HEADER: &str = "date,shibor_1m,ir_1m,er_1m,cp_1m,pfb_1m,tb_1m\n";

    #[test]
    fn loads_well_formed_rows() {
        let text = format!(
            "{HEADER}2013-06-17,4.5,3.2,3.0,4.8,3.4,3.0\n2013-06-18,4.6,3.3,3.1,4.9,3.5,3.1\n2013-06-19,4.7,3.4,3.2,5.0,3.6,3.2\n"
        );
        let t = parse(&text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.rows()[0].rates[0], Some(4.5));
    }

    #[test]
    fn nan_cell_is_rejected_with_line() {
        let text = format!("{HEADER}2013-06-17,4.5,3.2,3.0,4.8,3.4,3.0\n2013-06-18,4.5,3.2,3.0,NaN,3.4,3.0\n");
        match parse(&text).unwrap_err() {
            Error::Ingest { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("cp_1m"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let text = format!("{HEADER}2013-06-20,4.5,3.2,3.0,4.8,3.4,3.0\n2013-06-20,4.5,3.2,3.0,4.8,3.4,3.0\n");
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, Error::Ingest { line: 3, .. }));
        assert!(err.to_string().contains("duplicate date 2013-06-20"));
    }

    #[test]
    fn wrong_header_is_schema_error() {
        let text = "date,shibor,ir,er,cp,pfb,tb\n2013-06-20,1,1,1,1,1,1\n";
        assert!(matches!(parse(text).unwrap_err(), Error::Schema { .. }));
    }

    #[test]
    fn malformed_and_negative_rows() {
        let bad_date = format!("{HEADER}2013-13-40,4.5,3.2,3.0,4.8,3.4,3.0\n");
        assert!(matches!(parse(&bad_date).unwrap_err(), Error::Ingest { line: 2, .. }));
        let short = format!("{HEADER}2013-06-20,4.5,3.2\n");
        assert!(parse(&short).is_err());
        let neg = format!("{HEADER}2013-06-20,4.5,3.2,3.0,-4.8,3.4,3.0\n");
        assert!(matches!(parse(&neg).unwrap_err(), Error::Ingest { line: 2, .. }));
    }

    fn week_of_tb(tbs: &[(&str, f64)]) -> DailyRateTable {
        DailyRateTable::new(
            tbs.iter()
                .map(|(day, tb)| DailyRow::complete(d(day), [3.0, 3.0, 3.0, 3.0, 3.0, *tb]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn weekly_mean_of_full_week() {
        let t = week_of_tb(&[
            ("2013-06-17", 2.0),
            ("2013-06-18", 2.5),
            ("2013-06-19", 3.0),
            ("2013-06-20", 3.5),
            ("2013-06-21", 4.0),
        ]);
        let w = weekly_average(&t);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].rates[TB], Some(3.0));
        assert_eq!(w[0].rates[0], Some(3.0));
        assert_eq!(w[0].week_end, d("2013-06-21"));
        assert_eq!(w[0].days, 5);
    }

    #[test]
    fn holiday_shortened_week() {
        let t = week_of_tb(&[("2013-06-17", 2.0), ("2013-06-18", 4.0)]);
        let w = weekly_average(&t);
        assert_eq!(w[0].rates[TB], Some(3.0));
        // Last trading day present, not the Friday.
        assert_eq!(w[0].week_end, d("2013-06-18"));
    }

    #[test]
    fn iso_weeks_split_on_monday_and_gaps_are_skipped() {
        let t = week_of_tb(&[
            ("2013-06-14", 1.0), // Friday
            ("2013-06-17", 2.0), // Monday
            ("2013-07-01", 5.0), // two weeks later
        ]);
        let w = weekly_average(&t);
        assert_eq!(w.len(), 3);
        assert_eq!(w.iter().map(|r| r.rates[TB].unwrap()).collect::<Vec<_>>(), vec![1.0, 2.0, 5.0]);
    }

    #[test]
    fn incomplete_day_dropped_from_all_means() {
        let mut rows = vec![
            DailyRow::complete(d("2013-06-17"), [4.0, 3.0, 3.0, 3.0, 3.0, 2.0]),
            DailyRow::complete(d("2013-06-18"), [6.0, 3.0, 3.0, 3.0, 3.0, 4.0]),
        ];
        rows[1].rates[2] = None;
        let t = DailyRateTable::new(rows).unwrap();
        let w = weekly_average(&t);
        assert_eq!(w[0].days, 1);
        assert_eq!(w[0].rates[0], Some(4.0));
        assert_eq!(w[0].rates[TB], Some(2.0));

        let w = weekly_average_with(&t, MissingDayPolicy::PerSeries);
        assert_eq!(w[0].rates[0], Some(5.0));
        assert_eq!(w[0].rates[2], Some(3.0));
    }

    #[test]
    fn week_with_only_incomplete_days_is_skipped() {
        let mut row = DailyRow::complete(d("2013-06-17"), [4.0, 3.0, 3.0, 3.0, 3.0, 2.0]);
        row.rates[4] = None;
        let t = DailyRateTable::new(vec![row]).unwrap();
        assert!(weekly_average(&t).is_empty());
        let w = weekly_average_with(&t, MissingDayPolicy::PerSeries);
        assert!(matches!(build_spreads(&w).unwrap_err(), Error::Panel(_)));
    }

    #[test]
    fn spreads_are_differences_to_tb() {
        let row = WeeklyRow {
            week_end: d("2013-06-21"),
            rates: [Some(4.5), Some(3.2), Some(3.0), Some(3.0), Some(3.4), Some(3.0)],
            days: 5,
        };
        let p = build_spreads(&[row]).unwrap();
        let w = p.weeks()[0];
        assert_eq!(w.x[0], 1.5);
        assert!((w.x[1] - 0.2).abs() < 1e-12);
        assert!((w.x[4] - 0.4).abs() < 1e-12);
        assert_eq!(w.b, 3.0);

        let flat = WeeklyRow {
            week_end: d("2013-06-28"),
            rates: [Some(2.7); 6],
            days: 5,
        };
        assert_eq!(build_spreads(&[flat]).unwrap().weeks()[0].x, [0.0; 5]);
    }

    #[test]
    fn panel_rejects_same_week_twice() {
        let w = |s| SpreadWeek {
            week_end: d(s),
            x: [0.0; 5],
            b: 3.0,
        };
        assert!(SpreadPanel::new(vec![w("2013-06-17"), w("2013-06-21")]).is_err());
        assert!(SpreadPanel::new(vec![w("2013-06-21"), w("2013-06-14")]).is_err());
        assert!(SpreadPanel::new(vec![w("2013-06-14"), w("2013-06-21")]).is_ok());
    }

    #[test]
    fn panel_csv_round_trip() {
        let weeks = vec![
            SpreadWeek {
                week_end: d("2013-06-21"),
                x: [1.5, 0.2, -0.1, 1.8, 0.4],
                b: 3.0,
            },
            SpreadWeek {
                week_end: d("2013-06-28"),
                x: [1.0 / 3.0, 0.25, 0.125, 2.0, 0.5],
                b: 2.9,
            },
        ];
        let p = SpreadPanel::new(weeks).unwrap();
        let text = panel_to_csv(&p);
        assert!(text.starts_with("week_end,x1_shibor_tb,x2_ir_tb,x3_er_tb,x4_cp_tb,x5_pfb_tb,b_tb_yield\n"));
        let back = read_panel(text.as_bytes(), &PathBuf::from("p.csv")).unwrap();
        assert_eq!(back, p);
    }
}
