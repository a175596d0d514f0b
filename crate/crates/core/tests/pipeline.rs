use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use comove::data::{
    build_spreads, load_panel, panel_to_csv, read_daily, read_panel, weekly_average, DailyRateTable, DailyRow, TB,
};
use comove::simulation::{fixture_calendar, fixture_csv};
use proptest::prelude::*;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn rows_from(values: &[[f64; 6]]) -> Vec<DailyRow> {
    let start = NaiveDate::from_ymd_opt(2013, 6, 3).unwrap();
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            // Weekdays only: five per week.
            let day = start + Days::new((7 * (k / 5) + k % 5) as u64);
            DailyRow::complete(day, *v)
        })
        .collect()
}

fn rate() -> impl Strategy<Value = f64> {
    (0u32..100_000).prop_map(|v| v as f64 / 10_000.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn row_order_does_not_matter(values in prop::collection::vec(prop::array::uniform6(rate()), 5..40), seed in any::<u64>()) {
        let rows = rows_from(&values);
        let mut shuffled = rows.clone();
        let len = shuffled.len();
        let mut s = seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = weekly_average(&DailyRateTable::new(rows).unwrap());
        let b = weekly_average(&DailyRateTable::new(shuffled).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn spreads_plus_treasury_rebuild_weekly_rates(values in prop::collection::vec(prop::array::uniform6(rate()), 5..40)) {
        let weekly = weekly_average(&DailyRateTable::new(rows_from(&values)).unwrap());
        let panel = build_spreads(&weekly).unwrap();
        prop_assert_eq!(panel.len(), weekly.len());
        for (w, s) in weekly.iter().zip(panel.weeks()) {
            let tb = w.rates[TB].unwrap();
            prop_assert_eq!(s.b, tb);
            for i in 0..5 {
                prop_assert!((s.x[i] + tb - w.rates[i].unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weekly_means_lie_within_daily_range(values in prop::collection::vec(prop::array::uniform6(rate()), 5..40)) {
        let weekly = weekly_average(&DailyRateTable::new(rows_from(&values)).unwrap());
        for (w, chunk) in weekly.iter().zip(values.chunks(5)) {
            for k in 0..6 {
                let lo = chunk.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = chunk.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                let m = w.rates[k].unwrap();
                prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
            }
        }
    }
}

#[test]
fn bundled_fixture_regenerates_byte_identically() {
    let (text, info) = fixture_csv().unwrap();
    let bundled = std::fs::read_to_string(data_dir().join("fixture_daily.csv")).unwrap();
    assert!(text == bundled, "regenerated fixture differs from data/fixture_daily.csv");
    assert_eq!(info.weeks, 252);
    assert_eq!(fixture_calendar().len(), 252);
}

#[test]
fn bundled_panel_matches_the_pipeline() {
    let daily = std::fs::read(data_dir().join("fixture_daily.csv")).unwrap();
    let table = read_daily(daily.as_slice(), Path::new("fixture_daily.csv")).unwrap();
    let panel = build_spreads(&weekly_average(&table)).unwrap();
    assert_eq!(panel.len(), 252);
    let bundled = load_panel(data_dir().join("fixture_panel.csv")).unwrap();
    assert_eq!(panel_to_csv(&panel), panel_to_csv(&bundled));
    let reread = read_panel(panel_to_csv(&panel).as_bytes(), Path::new("memory")).unwrap();
    assert_eq!(reread, panel);
}
