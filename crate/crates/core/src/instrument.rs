//! Weather-instrument and income-regressor construction.
//!
//! The instrument is the count of growing-season days whose county-mean
//! temperature strictly exceeds a threshold (default 83°F, Apr 1–Sep 30).
//! The income regressor is ln(corn yield × price) with a user-supplied
//! per-year price table. Missing daily records are never imputed; they are
//! counted and reported.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};
use crate::panel::Panel;

/// Daily county-mean temperatures (°F), dates strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyTemperatureSeries {
    pub county_id: String,
    readings: Vec<(NaiveDate, f64)>,
}

impl DailyTemperatureSeries {
    pub fn new(county_id: impl Into<String>, readings: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for w in readings.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Numeric(format!(
                    "temperature dates not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some((d, t)) = readings.iter().find(|(_, t)| !t.is_finite()) {
            return Err(Error::Numeric(format!("non-finite temperature {t} on {d}")));
        }
        Ok(DailyTemperatureSeries { county_id: county_id.into(), readings })
    }

    pub fn readings(&self) -> &[(NaiveDate, f64)] {
        &self.readings
    }
}

/// Inclusive month-day window within a calendar year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonWindow {
    start_month: u32,
    start_day: u32,
    end_month: u32,
    end_day: u32,
}

/// April 1 through September 30.
pub const GROWING_SEASON: SeasonWindow =
    SeasonWindow { start_month: 4, start_day: 1, end_month: 9, end_day: 30 };

impl SeasonWindow {
    pub fn new(start_month: u32, start_day: u32, end_month: u32, end_day: u32) -> Result<Self> {
        // Validate against a leap year so Feb 29 is allowed.
        for (m, d) in [(start_month, start_day), (end_month, end_day)] {
            if NaiveDate::from_ymd_opt(2000, m, d).is_none() {
                return Err(Error::Numeric(format!("invalid month-day {m:02}-{d:02}")));
            }
        }
        if (start_month, start_day) > (end_month, end_day) {
            return Err(Error::Numeric(format!(
                "window start {start_month:02}-{start_day:02} after end {end_month:02}-{end_day:02}"
            )));
        }
        Ok(SeasonWindow { start_month, start_day, end_month, end_day })
    }

    /// Parses "MM-DD:MM-DD".
    pub fn parse(s: &str) -> Result<Self> {
        let err = || Error::Numeric(format!("cannot parse season window `{s}` (want MM-DD:MM-DD)"));
        let (a, b) = s.split_once(':').ok_or_else(err)?;
        let md = |part: &str| -> Result<(u32, u32)> {
            let (m, d) = part.split_once('-').ok_or_else(err)?;
            Ok((m.parse().map_err(|_| err())?, d.parse().map_err(|_| err())?))
        };
        let (sm, sd) = md(a)?;
        let (em, ed) = md(b)?;
        SeasonWindow::new(sm, sd, em, ed)
    }

    /// Concrete date span in `year`; Feb 29 falls back to Feb 28 off leap
    /// years.
    pub fn bounds(&self, year: i32) -> (NaiveDate, NaiveDate) {
        let mk = |m: u32, d: u32| {
            NaiveDate::from_ymd_opt(year, m, d)
                .or_else(|| NaiveDate::from_ymd_opt(year, m, d - 1))
                .expect("valid month-day by construction")
        };
        (mk(self.start_month, self.start_day), mk(self.end_month, self.end_day))
    }

    pub fn calendar_days(&self, year: i32) -> u32 {
        let (start, end) = self.bounds(year);
        (end - start).num_days() as u32 + 1
    }
}

impl std::fmt::Display for SeasonWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:02}-{:02}:{:02}-{:02}",
            self.start_month, self.start_day, self.end_month, self.end_day
        )
    }
}

/// Count of qualifying days plus the coverage bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeatDayCount {
    /// In-window days with mean temperature strictly above the threshold.
    pub count: u32,
    /// Calendar days the window spans in this year.
    pub days_expected: u32,
    /// In-window days with a reading present.
    pub days_observed: u32,
}

impl HeatDayCount {
    pub fn days_missing(&self) -> u32 {
        self.days_expected.saturating_sub(self.days_observed)
    }

    /// Warning flag: nothing observed in the window at all.
    pub fn no_observations(&self) -> bool {
        self.days_observed == 0
    }
}

/// Counts in-window days of `year` with temperature strictly above
/// `threshold_f` (83.0°F exactly does not count). Missing days contribute 0.
pub fn count_high_heat_days(
    series: &DailyTemperatureSeries,
    year: i32,
    window: SeasonWindow,
    threshold_f: f64,
) -> HeatDayCount {
    let (start, end) = window.bounds(year);
    let mut count = 0;
    let mut observed = 0;
    for &(date, temp) in &series.readings {
        if date.year() == year && date >= start && date <= end {
            observed += 1;
            if temp > threshold_f {
                count += 1;
            }
        }
    }
    HeatDayCount { count, days_expected: window.calendar_days(year), days_observed: observed }
}

/// ln(yield × price); both inputs must be positive.
pub fn build_log_income(corn_yield: f64, price: f64) -> Result<f64> {
    if !(corn_yield > 0.0) || !(price > 0.0) {
        return Err(Error::NonPositiveIncome { corn_yield, price });
    }
    Ok((corn_yield * price).ln())
}

// ---------------------------------------------------------------------------
// CSV inputs
// ---------------------------------------------------------------------------

/// Loads `county_id,date,tavg_f` (ISO-8601 dates); rows may arrive unsorted
/// but duplicate county-dates are rejected.
pub fn load_temperatures(path: impl AsRef<Path>) -> Result<BTreeMap<String, DailyTemperatureSeries>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?
        .clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(["county_id", "date", "tavg_f"]) {
        *slot = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })?;
    }
    let mut grouped: BTreeMap<String, Vec<(NaiveDate, f64)>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
        let get = |j: usize| record.get(idx[j]).unwrap_or("").trim();
        let date = NaiveDate::parse_from_str(get(1), "%Y-%m-%d").map_err(|_| Error::BadField {
            row,
            column: "date".to_string(),
            value: get(1).to_string(),
            wanted: "ISO-8601 date",
        })?;
        let temp: f64 = get(2).parse().map_err(|_| Error::BadField {
            row,
            column: "tavg_f".to_string(),
            value: get(2).to_string(),
            wanted: "temperature °F",
        })?;
        grouped.entry(get(0).to_string()).or_default().push((date, temp));
    }
    let mut out = BTreeMap::new();
    for (county, mut readings) in grouped {
        readings.sort_by_key(|(d, _)| *d);
        out.insert(county.clone(), DailyTemperatureSeries::new(county, readings)?);
    }
    Ok(out)
}

/// Loads `year,price` (positive $/bu, one row per year).
pub fn load_prices(path: impl AsRef<Path>) -> Result<BTreeMap<i32, f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?
        .clone();
    let year_idx = headers.iter().position(|h| h == "year").ok_or_else(|| Error::MissingColumn {
        column: "year".to_string(),
        path: path.to_path_buf(),
    })?;
    let price_idx = headers.iter().position(|h| h == "price").ok_or_else(|| Error::MissingColumn {
        column: "price".to_string(),
        path: path.to_path_buf(),
    })?;
    let mut out = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
        let year: i32 = record.get(year_idx).unwrap_or("").trim().parse().map_err(|_| {
            Error::BadField {
                row,
                column: "year".to_string(),
                value: record.get(year_idx).unwrap_or("").to_string(),
                wanted: "year",
            }
        })?;
        let price: f64 = record.get(price_idx).unwrap_or("").trim().parse().map_err(|_| {
            Error::BadField {
                row,
                column: "price".to_string(),
                value: record.get(price_idx).unwrap_or("").to_string(),
                wanted: "positive price",
            }
        })?;
        if !(price > 0.0) {
            return Err(Error::BadField {
                row,
                column: "price".to_string(),
                value: price.to_string(),
                wanted: "positive price",
            });
        }
        if out.insert(year, price).is_some() {
            return Err(Error::BadField {
                row,
                column: "year".to_string(),
                value: year.to_string(),
                wanted: "unique year",
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Attachment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct AttachReport {
    pub matched: usize,
    /// (county_id, year, what was missing).
    pub unmatched: Vec<(String, i32, String)>,
    /// Per-row missing-day counts for matched heat lookups.
    pub missing_days: Vec<(String, i32, u32)>,
}

impl AttachReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "attached {} row(s); {} unmatched\n",
            self.matched,
            self.unmatched.len()
        );
        for (c, y, what) in &self.unmatched {
            s.push_str(&format!("unmatched ({c}, {y}): missing {what}\n"));
        }
        for (c, y, m) in &self.missing_days {
            s.push_str(&format!("({c}, {y}): {m} missing day(s) in window\n"));
        }
        s
    }
}

/// Fills `high_heat_days` and `log_income` on every panel row from the
/// keyed maps. Rows without a match are reported and left missing; if the
/// unmatched fraction exceeds `tolerance` the whole attachment fails.
pub fn attach_instrument(
    panel: &mut Panel,
    heat: &BTreeMap<(String, i32), HeatDayCount>,
    incomes: &BTreeMap<(String, i32), f64>,
    tolerance: f64,
) -> Result<AttachReport> {
    let mut report = AttachReport::default();
    let total = panel.len();
    for obs in panel.observations.iter_mut() {
        let key = (obs.county_id.clone(), obs.year);
        let h = heat.get(&key);
        let inc = incomes.get(&key);
        match (h, inc) {
            (Some(h), Some(inc)) => {
                obs.high_heat_days = Some(h.count);
                obs.log_income = Some(*inc);
                report.matched += 1;
                if h.days_missing() > 0 {
                    report.missing_days.push((key.0, key.1, h.days_missing()));
                }
            }
            (h, inc) => {
                let what = match (h.is_some(), inc.is_some()) {
                    (false, false) => "heat count and income",
                    (false, true) => "heat count",
                    (true, false) => "income",
                    (true, true) => unreachable!(),
                };
                if let Some(h) = h {
                    obs.high_heat_days = Some(h.count);
                }
                if let Some(inc) = inc {
                    obs.log_income = Some(*inc);
                }
                report.unmatched.push((key.0, key.1, what.to_string()));
            }
        }
    }
    if total > 0 {
        let frac = report.unmatched.len() as f64 / total as f64;
        if frac > tolerance {
            return Err(Error::UnmatchedKeys {
                unmatched: report.unmatched.len(),
                total,
                tolerance,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn series(readings: Vec<(NaiveDate, f64)>) -> DailyTemperatureSeries {
        DailyTemperatureSeries::new("17001", readings).unwrap()
    }

    #[test]
    fn no_days_above_threshold() {
        let s = series((1..=30).map(|d| (date(2018, 6, d), 80.0)).collect());
        let c = count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0);
        assert_eq!(c.count, 0);
        assert_eq!(c.days_observed, 30);
        assert_eq!(c.days_expected, 183);
    }

    #[test]
    fn counts_only_in_window_days() {
        // 5 in-window days at 84°F, 3 out-of-window days at 90°F.
        let mut readings: Vec<(NaiveDate, f64)> =
            (1..=5).map(|d| (date(2018, 7, d), 84.0)).collect();
        readings.extend((1..=3).map(|d| (date(2018, 11, d), 90.0)));
        let s = series(readings);
        assert_eq!(count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0).count, 5);
        // Threshold ladder variant: at 86°F nothing qualifies.
        assert_eq!(count_high_heat_days(&s, 2018, GROWING_SEASON, 86.0).count, 0);
    }

    #[test]
    fn strict_inequality_at_threshold() {
        let s = series(vec![(date(2018, 6, 1), 83.0), (date(2018, 6, 2), 83.0000001)]);
        assert_eq!(count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0).count, 1);
    }

    #[test]
    fn other_years_ignored_and_missing_reported() {
        let s = series(vec![(date(2017, 6, 1), 90.0), (date(2018, 6, 1), 90.0)]);
        let c = count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0);
        assert_eq!(c.count, 1);
        assert_eq!(c.days_observed, 1);
        assert_eq!(c.days_missing(), 182);
        let empty = count_high_heat_days(&s, 2020, GROWING_SEASON, 83.0);
        assert_eq!(empty.count, 0);
        assert!(empty.no_observations());
    }

    #[test]
    fn window_additivity() {
        let readings: Vec<(NaiveDate, f64)> = (0..183)
            .map(|i| {
                let d = date(2018, 4, 1) + chrono::Days::new(i);
                (d, if i % 5 == 0 { 90.0 } else { 70.0 })
            })
            .collect();
        let s = series(readings);
        let whole = count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0);
        let first = count_high_heat_days(&s, 2018, SeasonWindow::new(4, 1, 6, 30).unwrap(), 83.0);
        let second = count_high_heat_days(&s, 2018, SeasonWindow::new(7, 1, 9, 30).unwrap(), 83.0);
        assert_eq!(whole.count, first.count + second.count);
        assert_eq!(whole.days_expected, first.days_expected + second.days_expected);
    }

    #[test]
    fn threshold_monotonicity() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let readings: Vec<(NaiveDate, f64)> = (0..200)
                .map(|i| {
                    let d = date(2018, 3, 1) + chrono::Days::new(i);
                    (d, rng.random_range(60.0..100.0))
                })
                .collect();
            let s = series(readings);
            let c80 = count_high_heat_days(&s, 2018, GROWING_SEASON, 80.0).count;
            let c83 = count_high_heat_days(&s, 2018, GROWING_SEASON, 83.0).count;
            let c86 = count_high_heat_days(&s, 2018, GROWING_SEASON, 86.0).count;
            assert!(c80 >= c83 && c83 >= c86);
        }
    }

    #[test]
    fn log_income_values() {
        assert_eq!(build_log_income(1.0, 1.0).unwrap(), 0.0);
        // Consistent with a 175.29 bu/acre yield at $4.20/bu.
        let v = build_log_income(175.29, 4.20).unwrap();
        assert!((v - (736.218f64).ln()).abs() < 1e-12);
        assert!((v - 6.6015).abs() < 5e-4);
        let one = build_log_income(100.0, std::f64::consts::E / 100.0).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        assert!(build_log_income(0.0, 1.0).is_err());
        assert!(build_log_income(10.0, -0.5).is_err());
    }

    #[test]
    fn log_income_splits_into_log_sum() {
        for (y, p) in [(175.29, 4.2), (56.1, 7.3), (246.7, 3.01)] {
            let lhs = build_log_income(y, p).unwrap();
            assert!((lhs - (f64::ln(y) + f64::ln(p))).abs() < 1e-12);
        }
    }

    #[test]
    fn attach_full_and_partial() {
        use crate::panel::tests::obs;
        let mut panel = Panel::new(vec![obs("17001", 2018), obs("17003", 2018)]);
        let hc = HeatDayCount { count: 7, days_expected: 183, days_observed: 183 };
        let mut heat = BTreeMap::new();
        let mut incomes = BTreeMap::new();
        heat.insert(("17001".to_string(), 2018), hc);
        heat.insert(("17003".to_string(), 2018), hc);
        incomes.insert(("17001".to_string(), 2018), 6.5);
        incomes.insert(("17003".to_string(), 2018), 6.7);
        let report = attach_instrument(&mut panel, &heat, &incomes, 0.05).unwrap();
        assert_eq!(report.matched, 2);
        assert!(report.unmatched.is_empty());
        assert_eq!(panel.observations[0].high_heat_days, Some(7));
        assert_eq!(panel.observations[0].log_income, Some(6.5));

        // One missing key listed; above tolerance it is a hard error.
        incomes.remove(&("17003".to_string(), 2018));
        let mut panel2 = Panel::new(vec![obs("17001", 2018), obs("17003", 2018)]);
        let err = attach_instrument(&mut panel2, &heat, &incomes, 0.05);
        assert!(matches!(err, Err(Error::UnmatchedKeys { unmatched: 1, total: 2, .. })));
        let mut panel3 = Panel::new(vec![obs("17001", 2018), obs("17003", 2018)]);
        let report = attach_instrument(&mut panel3, &heat, &incomes, 0.5).unwrap();
        assert_eq!(report.unmatched.len(), 1);
        assert_eq!(report.unmatched[0].0, "17003");
        assert_eq!(report.unmatched[0].2, "income");
    }

    #[test]
    fn series_requires_increasing_dates() {
        assert!(DailyTemperatureSeries::new(
            "x",
            vec![(date(2018, 6, 2), 80.0), (date(2018, 6, 1), 80.0)]
        )
        .is_err());
        assert!(DailyTemperatureSeries::new(
            "x",
            vec![(date(2018, 6, 1), 80.0), (date(2018, 6, 1), 81.0)]
        )
        .is_err());
        assert!(DailyTemperatureSeries::new("x", vec![(date(2018, 6, 1), f64::NAN)]).is_err());
    }

    #[test]
    fn window_parse_and_validate() {
        let w = SeasonWindow::parse("04-01:09-30").unwrap();
        assert_eq!(w, GROWING_SEASON);
        assert!(SeasonWindow::new(10, 1, 4, 1).is_err());
        assert!(SeasonWindow::parse("garbage").is_err());
        assert_eq!(GROWING_SEASON.calendar_days(2018), 183);
    }
}
