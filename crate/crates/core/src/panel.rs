//! County-year panel data model, CSV ingestion, validation, and summaries.
//!
//! The canonical panel is a CSV with one row per (county, year). Column names
//! can be remapped through a [`ColumnSchema`] so externally assembled panels
//! load without renaming. Loading validates every row; a panel that loads is
//! guaranteed to pass [`validate_panel`] with an empty report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kvfile::KvFile;

/// The four land uses. Ordinal codes are fixed: 0 = Agriculture, 1 = Solar,
/// 2 = Wind, 3 = Residential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LandUse {
    Agriculture,
    Solar,
    Wind,
    Residential,
}

impl LandUse {
    pub const ALL: [LandUse; 4] = [
        LandUse::Agriculture,
        LandUse::Solar,
        LandUse::Wind,
        LandUse::Residential,
    ];

    pub fn code(self) -> usize {
        match self {
            LandUse::Agriculture => 0,
            LandUse::Solar => 1,
            LandUse::Wind => 2,
            LandUse::Residential => 3,
        }
    }

    pub fn from_code(code: usize) -> Option<LandUse> {
        LandUse::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LandUse::Agriculture => "agriculture",
            LandUse::Solar => "solar",
            LandUse::Wind => "wind",
            LandUse::Residential => "residential",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LandUse::Agriculture => "Agriculture",
            LandUse::Solar => "Solar",
            LandUse::Wind => "Wind",
            LandUse::Residential => "Residential",
        }
    }

    pub fn parse(s: &str) -> Option<LandUse> {
        match s.to_ascii_lowercase().as_str() {
            "agriculture" | "ag" => Some(LandUse::Agriculture),
            "solar" => Some(LandUse::Solar),
            "wind" => Some(LandUse::Wind),
            "residential" | "res" => Some(LandUse::Residential),
            _ => None,
        }
    }
}

impl fmt::Display for LandUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// County stance toward renewable development, coded 1 (no restriction)
/// through 5 (ban).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegulationLevel {
    None = 1,
    Impediments = 2,
    Moratorium = 3,
    DifficultToPermit = 4,
    Ban = 5,
}

impl RegulationLevel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: i64) -> Option<RegulationLevel> {
        match code {
            1 => Some(RegulationLevel::None),
            2 => Some(RegulationLevel::Impediments),
            3 => Some(RegulationLevel::Moratorium),
            4 => Some(RegulationLevel::DifficultToPermit),
            5 => Some(RegulationLevel::Ban),
            _ => None,
        }
    }

    pub fn is_ban(self) -> bool {
        self == RegulationLevel::Ban
    }
}

/// One county-year row.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelObservation {
    pub county_id: String,
    pub year: i32,
    /// Solar-adoption dummy (cumulative: 1 from the first year a facility is
    /// recorded onward).
    pub slr: u8,
    /// Wind-adoption dummy, same convention as `slr`.
    pub wnd: u8,
    /// Growing-season days with mean temperature above the chosen threshold.
    pub high_heat_days: Option<u32>,
    /// Bushels per harvested acre.
    pub corn_yield: Option<f64>,
    /// Natural log of corn revenue per acre.
    pub log_income: Option<f64>,
    pub log_gdp: Option<f64>,
    pub population: Option<f64>,
    pub median_age: Option<f64>,
    pub labor_force: Option<f64>,
    /// Percent, 0..=100.
    pub unemployment_rate: Option<f64>,
    /// 1 = metro (urban), 0 = non-metro (rural). The many-valued typology is
    /// collapsed to this binary flag upstream.
    pub metro: u8,
    pub solar_regulation: RegulationLevel,
    pub wind_regulation: RegulationLevel,
}

impl PanelObservation {
    pub fn key(&self) -> (&str, i32) {
        (&self.county_id, self.year)
    }
}

/// Canonical column names, in canonical write order.
pub const CANONICAL_COLUMNS: [&str; 15] = [
    "county_id",
    "year",
    "slr",
    "wnd",
    "days_above_t",
    "corn_yield",
    "log_income",
    "log_gdp",
    "population",
    "median_age",
    "labor_force",
    "unemployment_rate",
    "metro",
    "solar_reg",
    "wind_reg",
];

/// Canonical-name → CSV-header map. Unlisted names default to themselves.
#[derive(Debug, Clone, Default)]
pub struct ColumnSchema {
    map: BTreeMap<String, String>,
}

impl ColumnSchema {
    pub fn identity() -> Self {
        ColumnSchema::default()
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&CANONICAL_COLUMNS)?;
        let mut map = BTreeMap::new();
        for key in kv.keys() {
            map.insert(key.to_string(), kv.get(key).unwrap().to_string());
        }
        Ok(ColumnSchema { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }

    pub fn header_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.map.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

/// A validated panel: observations sorted by (county_id, year), plus any
/// extra numeric columns found in the source file (e.g. the `y` outcome
/// column of simulated panels), aligned row-for-row with the observations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Panel {
    pub observations: Vec<PanelObservation>,
    extras: BTreeMap<String, Vec<Option<f64>>>,
}

impl Panel {
    pub fn new(observations: Vec<PanelObservation>) -> Self {
        Panel { observations, extras: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn extra_names(&self) -> impl Iterator<Item = &str> {
        self.extras.keys().map(String::as_str)
    }

    pub fn add_extra(&mut self, name: &str, values: Vec<Option<f64>>) -> Result<()> {
        if CANONICAL_COLUMNS.contains(&name) || name == "year" {
            return Err(Error::Numeric(format!("extra column `{name}` shadows a canonical column")));
        }
        if values.len() != self.observations.len() {
            return Err(Error::Numeric(format!(
                "extra column `{name}` has {} values for {} rows",
                values.len(),
                self.observations.len()
            )));
        }
        self.extras.insert(name.to_string(), values);
        Ok(())
    }

    /// Numeric view of a variable by canonical or extra name.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        if let Some(vals) = self.extras.get(name) {
            return Ok(vals.clone());
        }
        let get = |f: fn(&PanelObservation) -> Option<f64>| {
            self.observations.iter().map(f).collect::<Vec<_>>()
        };
        Ok(match name {
            "year" => get(|o| Some(f64::from(o.year))),
            "slr" => get(|o| Some(f64::from(o.slr))),
            "wnd" => get(|o| Some(f64::from(o.wnd))),
            "days_above_t" => get(|o| o.high_heat_days.map(f64::from)),
            "corn_yield" => get(|o| o.corn_yield),
            "log_income" => get(|o| o.log_income),
            "log_gdp" => get(|o| o.log_gdp),
            "population" => get(|o| o.population),
            "median_age" => get(|o| o.median_age),
            "labor_force" => get(|o| o.labor_force),
            "unemployment_rate" => get(|o| o.unemployment_rate),
            "metro" => get(|o| Some(f64::from(o.metro))),
            "solar_reg" => get(|o| Some(f64::from(o.solar_regulation.code()))),
            "wind_reg" => get(|o| Some(f64::from(o.wind_regulation.code()))),
            _ => return Err(Error::UnknownVariable(name.to_string())),
        })
    }

    /// Row subset preserving extras; indices must be in-range.
    pub fn subset(&self, idx: &[usize]) -> Panel {
        Panel {
            observations: idx.iter().map(|&i| self.observations[i].clone()).collect(),
            extras: self
                .extras
                .iter()
                .map(|(k, v)| (k.clone(), idx.iter().map(|&i| v[i]).collect()))
                .collect(),
        }
    }

    fn sort_rows(&mut self) {
        let mut order: Vec<usize> = (0..self.observations.len()).collect();
        order.sort_by(|&a, &b| {
            let oa = &self.observations[a];
            let ob = &self.observations[b];
            oa.key().cmp(&ob.key())
        });
        self.observations = order.iter().map(|&i| self.observations[i].clone()).collect();
        for (_, v) in self.extras.iter_mut() {
            let old = std::mem::take(v);
            *v = order.iter().map(|&i| old[i]).collect();
        }
    }
}

/// One invariant violation found by [`validate_panel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// 0-based index into the panel's observation vector.
    pub row: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}: {}", self.row, self.field, self.message)
    }
}

/// Checks every data invariant; returns one entry per violation. An empty
/// report means the panel is valid. Violations are data, not failures.
pub fn validate_panel(panel: &Panel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |row: usize, field: &str, message: String| {
        out.push(Violation { row, field: field.to_string(), message });
    };
    let mut seen: BTreeMap<(&str, i32), usize> = BTreeMap::new();
    for (i, obs) in panel.observations.iter().enumerate() {
        if let Some(&first) = seen.get(&obs.key()) {
            push(
                i,
                "county_id,year",
                format!("duplicate key ({}, {}), first at row {first}", obs.county_id, obs.year),
            );
        } else {
            seen.insert(obs.key(), i);
        }
        if obs.slr > 1 {
            push(i, "slr", format!("value {} outside {{0,1}}", obs.slr));
        }
        if obs.wnd > 1 {
            push(i, "wnd", format!("value {} outside {{0,1}}", obs.wnd));
        }
        if obs.metro > 1 {
            push(i, "metro", format!("value {} outside {{0,1}}", obs.metro));
        }
        if let Some(u) = obs.unemployment_rate {
            if !(0.0..=100.0).contains(&u) {
                push(i, "unemployment_rate", format!("value {u} outside [0, 100]"));
            }
        }
        if let Some(cy) = obs.corn_yield {
            if cy <= 0.0 {
                push(i, "corn_yield", format!("non-positive value {cy}"));
            }
        }
        for (name, value) in [
            ("corn_yield", obs.corn_yield),
            ("log_income", obs.log_income),
            ("log_gdp", obs.log_gdp),
            ("population", obs.population),
            ("median_age", obs.median_age),
            ("labor_force", obs.labor_force),
            ("unemployment_rate", obs.unemployment_rate),
        ] {
            if let Some(v) = value {
                if !v.is_finite() {
                    push(i, name, format!("non-finite value {v}"));
                }
            }
        }
    }
    for (name, vals) in panel.extras.iter() {
        for (i, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                if !v.is_finite() {
                    push(i, name, format!("non-finite value {v}"));
                }
            }
        }
    }
    out.sort_by_key(|v| v.row);
    out
}

/// Renders a validation report as line-oriented text ("ok" when clean).
pub fn render_violations(violations: &[Violation]) -> String {
    if violations.is_empty() {
        return "ok: no violations\n".to_string();
    }
    let mut s = String::new();
    for v in violations {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s.push_str(&format!("{} violation(s)\n", violations.len()));
    s
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

struct ColumnIndex {
    canonical: Vec<(String, Option<usize>)>,
    extras: Vec<(String, usize)>,
}

fn index_columns(headers: &csv::StringRecord, schema: &ColumnSchema, path: &Path) -> Result<ColumnIndex> {
    let position = |header: &str| headers.iter().position(|h| h == header);
    let mut canonical = Vec::new();
    let mut used = vec![false; headers.len()];
    for name in CANONICAL_COLUMNS {
        let header = schema.header_for(name);
        let pos = position(header);
        if let Some(p) = pos {
            used[p] = true;
        }
        canonical.push((name.to_string(), pos));
    }
    // Structural columns must be present; value columns may be absent.
    for required in ["county_id", "year", "slr", "wnd", "metro", "solar_reg", "wind_reg"] {
        let (_, pos) = canonical.iter().find(|(n, _)| n == required).unwrap();
        if pos.is_none() {
            return Err(Error::MissingColumn {
                column: schema.header_for(required).to_string(),
                path: path.to_path_buf(),
            });
        }
    }
    let mut extras = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if !used[i] {
            if CANONICAL_COLUMNS.contains(&h) {
                return Err(Error::Config {
                    path: path.to_path_buf(),
                    message: format!(
                        "column `{h}` is canonical but the schema maps that name elsewhere"
                    ),
                });
            }
            extras.push((h.to_string(), i));
        }
    }
    Ok(ColumnIndex { canonical, extras })
}

fn field<'a>(record: &'a csv::StringRecord, idx: Option<usize>) -> &'a str {
    idx.and_then(|i| record.get(i)).unwrap_or("").trim()
}

fn parse_f64(row: usize, column: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>().map(Some).map_err(|_| Error::BadField {
        row,
        column: column.to_string(),
        value: raw.to_string(),
        wanted: "number",
    })
}

fn parse_int<T: std::str::FromStr>(row: usize, column: &str, raw: &str, wanted: &'static str) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::BadField {
        row,
        column: column.to_string(),
        value: raw.to_string(),
        wanted,
    })
}

fn parse_regulation(row: usize, column: &str, raw: &str) -> Result<RegulationLevel> {
    let code: i64 = parse_int(row, column, raw, "integer regulation code")?;
    RegulationLevel::from_code(code).ok_or(Error::BadRegulationCode {
        row,
        column: column.to_string(),
        code,
    })
}

/// Loads a panel CSV, returning the (sorted) panel together with its
/// validation report instead of failing on data-invariant violations.
/// Structural problems — missing columns, unparsable fields, regulation
/// codes outside 1..=5 — are still hard errors. Row numbers in errors are
/// 1-based data rows of the file.
pub fn load_panel_with_report(
    path: impl AsRef<Path>,
    schema: &ColumnSchema,
) -> Result<(Panel, Vec<Violation>)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?
        .clone();
    let index = index_columns(&headers, schema, path)?;

    let col = |name: &str| -> Option<usize> {
        index.canonical.iter().find(|(n, _)| n == name).and_then(|(_, p)| *p)
    };

    let mut panel = Panel::default();
    let mut extra_values: Vec<Vec<Option<f64>>> = vec![Vec::new(); index.extras.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
        let hhd_raw = field(&record, col("days_above_t"));
        let high_heat_days = if hhd_raw.is_empty() {
            None
        } else {
            Some(parse_int::<u32>(row, "days_above_t", hhd_raw, "nonnegative integer")?)
        };
        let obs = PanelObservation {
            county_id: field(&record, col("county_id")).to_string(),
            year: parse_int(row, "year", field(&record, col("year")), "year")?,
            slr: parse_int(row, "slr", field(&record, col("slr")), "0/1 indicator")?,
            wnd: parse_int(row, "wnd", field(&record, col("wnd")), "0/1 indicator")?,
            high_heat_days,
            corn_yield: parse_f64(row, "corn_yield", field(&record, col("corn_yield")))?,
            log_income: parse_f64(row, "log_income", field(&record, col("log_income")))?,
            log_gdp: parse_f64(row, "log_gdp", field(&record, col("log_gdp")))?,
            population: parse_f64(row, "population", field(&record, col("population")))?,
            median_age: parse_f64(row, "median_age", field(&record, col("median_age")))?,
            labor_force: parse_f64(row, "labor_force", field(&record, col("labor_force")))?,
            unemployment_rate: parse_f64(
                row,
                "unemployment_rate",
                field(&record, col("unemployment_rate")),
            )?,
            metro: parse_int(row, "metro", field(&record, col("metro")), "0/1 indicator")?,
            solar_regulation: parse_regulation(row, "solar_reg", field(&record, col("solar_reg")))?,
            wind_regulation: parse_regulation(row, "wind_reg", field(&record, col("wind_reg")))?,
        };
        if obs.county_id.is_empty() {
            return Err(Error::BadField {
                row,
                column: "county_id".to_string(),
                value: String::new(),
                wanted: "nonempty identifier",
            });
        }
        panel.observations.push(obs);
        for (slot, (name, pos)) in extra_values.iter_mut().zip(&index.extras) {
            slot.push(parse_f64(row, name, field(&record, Some(*pos)))?);
        }
    }

    for ((name, _), values) in index.extras.iter().zip(extra_values) {
        panel.extras.insert(name.clone(), values);
    }
    panel.sort_rows();
    let violations = validate_panel(&panel);
    Ok((panel, violations))
}

/// Loads and validates a panel CSV. Observations come back sorted by
/// (county_id, year); duplicate keys, malformed fields, and any data-invariant
/// violation are errors.
pub fn load_panel(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<Panel> {
    let (panel, violations) = load_panel_with_report(path, schema)?;
    if let Some(dup) = violations.iter().find(|v| v.field == "county_id,year") {
        let obs = &panel.observations[dup.row];
        return Err(Error::DuplicateKey { county_id: obs.county_id.clone(), year: obs.year });
    }
    if !violations.is_empty() {
        return Err(Error::InvalidPanel {
            count: violations.len(),
            report: render_violations(&violations),
        });
    }
    Ok(panel)
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    // `{}` on f64 is the shortest decimal that round-trips, which keeps
    // write → load → write byte-stable.
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Writes the canonical CSV: fixed column order, shortest round-trip float
/// formatting, extras appended in name order.
pub fn write_panel(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    let extra_names: Vec<&str> = panel.extra_names().collect();
    let mut header: Vec<&str> = CANONICAL_COLUMNS.to_vec();
    header.extend(&extra_names);
    w.write_record(&header)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    for (i, obs) in panel.observations.iter().enumerate() {
        let mut rec: Vec<String> = vec![
            obs.county_id.clone(),
            obs.year.to_string(),
            obs.slr.to_string(),
            obs.wnd.to_string(),
            obs.high_heat_days.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt_f64(obs.corn_yield),
            fmt_opt_f64(obs.log_income),
            fmt_opt_f64(obs.log_gdp),
            fmt_opt_f64(obs.population),
            fmt_opt_f64(obs.median_age),
            fmt_opt_f64(obs.labor_force),
            fmt_opt_f64(obs.unemployment_rate),
            obs.metro.to_string(),
            obs.solar_regulation.code().to_string(),
            obs.wind_regulation.code().to_string(),
        ];
        for name in &extra_names {
            rec.push(fmt_opt_f64(panel.extras[*name][i]));
        }
        w.write_record(&rec)
            .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

/// Columns covered by [`summarize`] (extras are appended at runtime).
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "slr",
    "wnd",
    "days_above_t",
    "corn_yield",
    "log_income",
    "log_gdp",
    "population",
    "median_age",
    "labor_force",
    "unemployment_rate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSummary {
    pub name: String,
    /// Non-missing observation count.
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator); 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSummary {
    pub n_obs: usize,
    pub variables: Vec<VariableSummary>,
}

fn summarize_column(name: &str, values: &[Option<f64>]) -> Option<VariableSummary> {
    // Sorting first makes the result exactly permutation-invariant; Welford
    // keeps the mean exact on constant input so sd is exactly zero there.
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return None;
    }
    sorted.sort_by(f64::total_cmp);
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (i, v) in sorted.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let count = sorted.len();
    let sd = if count > 1 { (m2 / (count - 1) as f64).sqrt() } else { 0.0 };
    Some(VariableSummary {
        name: name.to_string(),
        count,
        mean,
        sd,
        min: sorted[0],
        max: *sorted.last().unwrap(),
    })
}

/// Per-variable mean/sd/min/max over non-missing values.
pub fn summarize(panel: &Panel) -> Result<PanelSummary> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut variables = Vec::new();
    let mut names: Vec<String> = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    names.extend(panel.extra_names().map(String::from));
    for name in names {
        let col = panel.column(&name)?;
        if let Some(s) = summarize_column(&name, &col) {
            variables.push(s);
        }
    }
    Ok(PanelSummary { n_obs: panel.len(), variables })
}

impl fmt::Display for PanelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>10} {:>12} {:>12} {:>12} {:>12}",
            "Variable", "N", "Mean", "SD", "Min", "Max"
        )?;
        for v in &self.variables {
            writeln!(
                f,
                "{:<20} {:>10} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                v.name, v.count, v.mean, v.sd, v.min, v.max
            )?;
        }
        write!(f, "{} observation(s)", self.n_obs)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::io::Write as _;

    pub(crate) fn obs(county: &str, year: i32) -> PanelObservation {
        PanelObservation {
            county_id: county.to_string(),
            year,
            slr: 0,
            wnd: 0,
            high_heat_days: Some(3),
            corn_yield: Some(170.0),
            log_income: Some(6.5),
            log_gdp: Some(14.0),
            population: Some(50_000.0),
            median_age: Some(41.0),
            labor_force: Some(25_000.0),
            unemployment_rate: Some(4.5),
            metro: 0,
            solar_regulation: RegulationLevel::None,
            wind_regulation: RegulationLevel::Impediments,
        }
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    const HEADER: &str = "county_id,year,slr,wnd,days_above_t,corn_yield,log_income,log_gdp,population,median_age,labor_force,unemployment_rate,metro,solar_reg,wind_reg";

    #[test]
    fn load_three_rows_in_key_order() {
        let f = write_tmp(&format!(
            "{HEADER}\n\
             17003,2018,0,1,5,170.2,6.5,14.0,50000,41.0,25000,4.5,0,1,2\n\
             17001,2019,1,0,2,180.0,6.6,14.1,51000,41.2,25200,4.4,0,2,2\n\
             17001,2018,0,0,0,175.0,6.55,14.05,50500,41.1,25100,4.6,1,1,1\n"
        ));
        let panel = load_panel(f.path(), &ColumnSchema::identity()).unwrap();
        assert_eq!(panel.len(), 3);
        let keys: Vec<_> = panel.observations.iter().map(|o| (o.county_id.clone(), o.year)).collect();
        assert_eq!(
            keys,
            vec![
                ("17001".to_string(), 2018),
                ("17001".to_string(), 2019),
                ("17003".to_string(), 2018)
            ]
        );
        assert!(validate_panel(&panel).is_empty());
    }

    #[test]
    fn duplicate_key_rejected() {
        let f = write_tmp(&format!(
            "{HEADER}\n\
             17001,2018,0,0,3,170,6.5,14,50000,41,25000,4.5,0,1,1\n\
             17001,2018,1,0,4,171,6.6,14,50000,41,25000,4.5,0,1,1\n"
        ));
        match load_panel(f.path(), &ColumnSchema::identity()) {
            Err(Error::DuplicateKey { county_id, year }) => {
                assert_eq!(county_id, "17001");
                assert_eq!(year, 2018);
            }
            other => panic!("expected duplicate-key error, got {other:?}"),
        }
    }

    #[test]
    fn regulation_code_out_of_range_rejected() {
        // Oracle: the RegulationLevel domain itself.
        assert!(RegulationLevel::from_code(7).is_none());
        for code in 1..=5 {
            assert!(RegulationLevel::from_code(code).is_some());
        }
        let f = write_tmp(&format!(
            "{HEADER}\n17001,2018,0,0,3,170,6.5,14,50000,41,25000,4.5,0,7,1\n"
        ));
        match load_panel(f.path(), &ColumnSchema::identity()) {
            Err(Error::BadRegulationCode { code, column, .. }) => {
                assert_eq!(code, 7);
                assert_eq!(column, "solar_reg");
            }
            other => panic!("expected code-range error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_numeric_rejected() {
        let f = write_tmp("county_id,year\n17001,2018\n");
        assert!(matches!(
            load_panel(f.path(), &ColumnSchema::identity()),
            Err(Error::MissingColumn { .. })
        ));
        let f = write_tmp(&format!(
            "{HEADER}\n17001,2018,0,0,3,not-a-number,6.5,14,50000,41,25000,4.5,0,1,1\n"
        ));
        assert!(matches!(
            load_panel(f.path(), &ColumnSchema::identity()),
            Err(Error::BadField { .. })
        ));
    }

    #[test]
    fn schema_remaps_headers() {
        let kv = KvFile::parse_str("s", "county_id=fips\ndays_above_t=hhd83\n").unwrap();
        let schema = ColumnSchema::from_kv(&kv).unwrap();
        let f = write_tmp(
            "fips,year,slr,wnd,hhd83,corn_yield,log_income,log_gdp,population,median_age,labor_force,unemployment_rate,metro,solar_reg,wind_reg\n\
             17001,2018,0,0,9,170,6.5,14,50000,41,25000,4.5,0,1,1\n",
        );
        let panel = load_panel(f.path(), &schema).unwrap();
        assert_eq!(panel.observations[0].high_heat_days, Some(9));
    }

    #[test]
    fn extra_columns_carried_through() {
        let f = write_tmp(&format!(
            "{HEADER},y\n17001,2018,0,0,3,170,6.5,14,50000,41,25000,4.5,0,1,1,2.25\n"
        ));
        let panel = load_panel(f.path(), &ColumnSchema::identity()).unwrap();
        assert_eq!(panel.column("y").unwrap(), vec![Some(2.25)]);
    }

    #[test]
    fn validate_flags_domain_violations() {
        let mut panel = Panel::new(vec![obs("17001", 2018), obs("17001", 2019)]);
        assert!(validate_panel(&panel).is_empty());
        panel.observations[1].slr = 2;
        let report = validate_panel(&panel);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].row, 1);
        assert_eq!(report[0].field, "slr");

        let mut panel = Panel::new(vec![obs("17001", 2018)]);
        panel.observations[0].corn_yield = Some(-5.0);
        let report = validate_panel(&panel);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].field, "corn_yield");
    }

    #[test]
    fn summarize_identical_rows_zero_sd() {
        let panel = Panel::new(vec![obs("a", 1), obs("b", 1), obs("c", 1)]);
        let summary = summarize(&panel).unwrap();
        for v in &summary.variables {
            assert_eq!(v.sd, 0.0, "{} should have zero sd", v.name);
            assert!(v.min <= v.mean && v.mean <= v.max);
        }
    }

    #[test]
    fn summarize_hand_computed_sd() {
        // Values {0, 4}: mean 2, sample variance ((0−2)² + (4−2)²)/1 = 8.
        let mut a = obs("a", 1);
        a.high_heat_days = Some(0);
        let mut b = obs("b", 1);
        b.high_heat_days = Some(4);
        let summary = summarize(&Panel::new(vec![a, b])).unwrap();
        let hhd = summary.variables.iter().find(|v| v.name == "days_above_t").unwrap();
        assert_eq!(hhd.mean, 2.0);
        assert!((hhd.sd - 8.0f64.sqrt()).abs() < 1e-12);
        assert_eq!((hhd.min, hhd.max), (0.0, 4.0));
    }

    #[test]
    fn summarize_empty_panel_errors() {
        assert!(matches!(summarize(&Panel::default()), Err(Error::EmptyPanel)));
    }

    #[test]
    fn roundtrip_is_byte_stable() {
        let f = write_tmp(&format!(
            "{HEADER},y\n\
             17003,2018,0,1,5,170.25,6.5,14.0,50000,41.0,25000,4.5,0,1,2,1.5\n\
             17001,2019,1,0,,,6.6,,51000,,25200,4.4,0,2,2,\n"
        ));
        let panel = load_panel(f.path(), &ColumnSchema::identity()).unwrap();
        let out1 = tempfile::NamedTempFile::new().unwrap();
        write_panel(&panel, out1.path()).unwrap();
        let reloaded = load_panel(out1.path(), &ColumnSchema::identity()).unwrap();
        assert_eq!(reloaded, panel);
        let out2 = tempfile::NamedTempFile::new().unwrap();
        write_panel(&reloaded, out2.path()).unwrap();
        let bytes1 = std::fs::read(out1.path()).unwrap();
        let bytes2 = std::fs::read(out2.path()).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn summarize_permutation_invariant() {
        let rows = vec![obs("a", 1), obs("b", 2), obs("c", 3)];
        let mut shuffled = rows.clone();
        shuffled.reverse();
        let mut p1 = Panel::new(rows);
        p1.observations[0].high_heat_days = Some(10);
        let mut p2 = Panel::new(shuffled);
        p2.observations[2].high_heat_days = Some(10);
        assert_eq!(summarize(&p1).unwrap(), summarize(&p2).unwrap());
    }
}
