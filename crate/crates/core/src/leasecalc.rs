//! Annual lease-payoff arithmetic for crop, wind, and solar use of one
//! parcel. All money is integer cents; line items round once, at the line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kvfile::KvFile;

pub const RATE_KEYS: [&str; 6] = [
    "crop_per_acre",
    "wind_per_mw",
    "wind_per_turbine",
    "wind_blanket_per_acre",
    "per_linear_foot",
    "solar_per_acre",
];

/// Payment rates in cents per unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateCard {
    rates: BTreeMap<String, i64>,
}

impl RateCard {
    /// Midpoints of the representative 2024 Indiana payment ranges:
    /// crop $300/acre, wind $7,500/MW or $2,000/turbine plus $30/acre
    /// blanket, $1.50/linear foot, solar $1,250/acre.
    pub fn paper_2024_midpoint() -> Self {
        let mut rates = BTreeMap::new();
        rates.insert("crop_per_acre".to_string(), 30_000);
        rates.insert("wind_per_mw".to_string(), 750_000);
        rates.insert("wind_per_turbine".to_string(), 200_000);
        rates.insert("wind_blanket_per_acre".to_string(), 3_000);
        rates.insert("per_linear_foot".to_string(), 150);
        rates.insert("solar_per_acre".to_string(), 125_000);
        RateCard { rates }
    }

    pub fn get(&self, key: &str) -> Result<i64> {
        self.rates.get(key).copied().ok_or_else(|| Error::MissingRate(key.to_string()))
    }

    pub fn set(&mut self, key: &str, cents: i64) {
        self.rates.insert(key.to_string(), cents);
    }

    /// Loads a full card from `key=cents` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let kv = KvFile::load(path)?;
        Self::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&RATE_KEYS)?;
        let mut card = RateCard { rates: BTreeMap::new() };
        for key in kv.keys() {
            let cents: i64 = kv.parse(key)?.unwrap();
            card.rates.insert(key.to_string(), cents);
        }
        Ok(card)
    }

    /// Starts from the midpoint card and overrides the keys present in `kv`.
    pub fn midpoint_with_overrides(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&RATE_KEYS)?;
        let mut card = RateCard::paper_2024_midpoint();
        for key in kv.keys() {
            card.rates.insert(key.to_string(), kv.parse(key)?.unwrap());
        }
        Ok(card)
    }
}

/// Physical description of one parcel plus the rates that price it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParcelSpec {
    pub total_acres: f64,
    pub turbine_count: f64,
    pub megawatts_per_turbine: f64,
    pub access_road_feet: f64,
    pub transmission_feet: f64,
    /// Acres still croppable while turbines operate.
    pub farmable_acres_under_wind: f64,
    pub solar_acres: f64,
    /// Acres still cropped alongside the solar field.
    pub residual_crop_acres: f64,
    pub rates: RateCard,
}

impl ParcelSpec {
    /// The 80-acre representative parcel: one 5 MW turbine, 1,600 ft access
    /// road, 1,300 ft transmission, 77 farmable acres under wind, 61 solar
    /// acres with 19 residual crop acres.
    pub fn representative_80_acre(rates: RateCard) -> Self {
        ParcelSpec {
            total_acres: 80.0,
            turbine_count: 1.0,
            megawatts_per_turbine: 5.0,
            access_road_feet: 1_600.0,
            transmission_feet: 1_300.0,
            farmable_acres_under_wind: 77.0,
            solar_acres: 61.0,
            residual_crop_acres: 19.0,
            rates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("total_acres", self.total_acres),
            ("turbine_count", self.turbine_count),
            ("megawatts_per_turbine", self.megawatts_per_turbine),
            ("access_road_feet", self.access_road_feet),
            ("transmission_feet", self.transmission_feet),
            ("farmable_acres_under_wind", self.farmable_acres_under_wind),
            ("solar_acres", self.solar_acres),
            ("residual_crop_acres", self.residual_crop_acres),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Numeric(format!("parcel field {name} = {v} must be ≥ 0")));
            }
        }
        if self.solar_acres + self.residual_crop_acres > self.total_acres + 1e-9 {
            return Err(Error::Numeric(format!(
                "solar_acres + residual_crop_acres = {} exceeds total_acres = {}",
                self.solar_acres + self.residual_crop_acres,
                self.total_acres
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, rates: RateCard) -> Result<Self> {
        let kv = KvFile::load(path)?;
        kv.check_keys(&[
            "total_acres",
            "turbine_count",
            "megawatts_per_turbine",
            "access_road_feet",
            "transmission_feet",
            "farmable_acres_under_wind",
            "solar_acres",
            "residual_crop_acres",
        ])?;
        let spec = ParcelSpec {
            total_acres: kv.parse_or("total_acres", 0.0)?,
            turbine_count: kv.parse_or("turbine_count", 0.0)?,
            megawatts_per_turbine: kv.parse_or("megawatts_per_turbine", 0.0)?,
            access_road_feet: kv.parse_or("access_road_feet", 0.0)?,
            transmission_feet: kv.parse_or("transmission_feet", 0.0)?,
            farmable_acres_under_wind: kv.parse_or("farmable_acres_under_wind", 0.0)?,
            solar_acres: kv.parse_or("solar_acres", 0.0)?,
            residual_crop_acres: kv.parse_or("residual_crop_acres", 0.0)?,
            rates,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Wind payment schemes: per-megawatt on hosting parcels, or the flat
/// turbine payment plus a blanket per-acre payment on the whole parcel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindScheme {
    PerMegawatt,
    PerAcre,
}

impl WindScheme {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(WindScheme::PerMegawatt),
            2 => Some(WindScheme::PerAcre),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaseLine {
    pub label: String,
    pub quantity: f64,
    pub unit: &'static str,
    pub rate_cents: i64,
    pub subtotal_cents: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaseBreakdown {
    pub title: String,
    pub lines: Vec<LeaseLine>,
    pub total_cents: i64,
}

pub fn format_cents(cents: i64) -> String {
    let sign = if cents < 0 { "-" } else { "" };
    let cents = cents.unsigned_abs();
    let dollars = cents / 100;
    let rem = cents % 100;
    let mut s = dollars.to_string();
    let mut grouped = String::new();
    while s.len() > 3 {
        let tail = s.split_off(s.len() - 3);
        grouped = format!(",{tail}{grouped}");
    }
    let body = format!("{s}{grouped}");
    if rem == 0 {
        format!("{sign}${body}")
    } else {
        format!("{sign}${body}.{rem:02}")
    }
}

impl fmt::Display for LeaseBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        for line in &self.lines {
            writeln!(
                f,
                "  {:<34} {:>10} {:>12} {:>12}",
                format!("{} {}", trim_qty(line.quantity), line.label),
                line.unit,
                format_cents(line.rate_cents),
                format_cents(line.subtotal_cents)
            )?;
        }
        write!(f, "  {:<34} {:>10} {:>12} {:>12}", "Total", "", "", format_cents(self.total_cents))
    }
}

fn trim_qty(q: f64) -> String {
    if q == q.trunc() {
        format!("{}", q as i64)
    } else {
        format!("{q}")
    }
}

fn line(label: &str, quantity: f64, unit: &'static str, rate_cents: i64) -> LeaseLine {
    let subtotal_cents = (rate_cents as f64 * quantity).round() as i64;
    LeaseLine { label: label.to_string(), quantity, unit, rate_cents, subtotal_cents }
}

fn breakdown(title: &str, lines: Vec<LeaseLine>) -> LeaseBreakdown {
    let total_cents = lines.iter().map(|l| l.subtotal_cents).sum();
    LeaseBreakdown { title: title.to_string(), lines, total_cents }
}

/// Whole parcel leased for crop production.
pub fn crop_lease_total(spec: &ParcelSpec) -> Result<LeaseBreakdown> {
    spec.validate()?;
    let crop = spec.rates.get("crop_per_acre")?;
    Ok(breakdown(
        "Crop Production",
        vec![line("acres - crop production lease", spec.total_acres, "acre", crop)],
    ))
}

/// Wind operation-phase payout under the selected scheme, including the
/// residual crop lease on the still-farmable acres.
pub fn wind_total(spec: &ParcelSpec, scheme: WindScheme) -> Result<LeaseBreakdown> {
    spec.validate()?;
    let crop = spec.rates.get("crop_per_acre")?;
    let per_foot = spec.rates.get("per_linear_foot")?;
    let mut lines = Vec::new();
    match scheme {
        WindScheme::PerMegawatt => {
            let per_mw = spec.rates.get("wind_per_mw")?;
            lines.push(line(
                "MW - turbine generation",
                spec.turbine_count * spec.megawatts_per_turbine,
                "MW",
                per_mw,
            ));
        }
        WindScheme::PerAcre => {
            let per_turbine = spec.rates.get("wind_per_turbine")?;
            let blanket = spec.rates.get("wind_blanket_per_acre")?;
            lines.push(line("turbine(s) - flat payment", spec.turbine_count, "turbine", per_turbine));
            lines.push(line("acres - blanket payment", spec.total_acres, "acre", blanket));
        }
    }
    lines.insert(1, line("ft - access road", spec.access_road_feet, "foot", per_foot));
    lines.insert(2, line("ft - power transmission", spec.transmission_feet, "foot", per_foot));
    lines.push(line("acres - crop production lease", spec.farmable_acres_under_wind, "acre", crop));
    let title = match scheme {
        WindScheme::PerMegawatt => "Wind Power (scheme 1)",
        WindScheme::PerAcre => "Wind Power (scheme 2)",
    };
    Ok(breakdown(title, lines))
}

/// Solar operation-phase payout plus the residual crop lease.
pub fn solar_total(spec: &ParcelSpec) -> Result<LeaseBreakdown> {
    spec.validate()?;
    let crop = spec.rates.get("crop_per_acre")?;
    let solar = spec.rates.get("solar_per_acre")?;
    Ok(breakdown(
        "Solar Power",
        vec![
            line("acres - solar power generation", spec.solar_acres, "acre", solar),
            line("acres - crop production lease", spec.residual_crop_acres, "acre", crop),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parcel() -> ParcelSpec {
        ParcelSpec::representative_80_acre(RateCard::paper_2024_midpoint())
    }

    #[test]
    fn representative_totals_exact_cents() {
        let p = parcel();
        assert_eq!(crop_lease_total(&p).unwrap().total_cents, 2_400_000);
        assert_eq!(wind_total(&p, WindScheme::PerMegawatt).unwrap().total_cents, 6_495_000);
        assert_eq!(wind_total(&p, WindScheme::PerAcre).unwrap().total_cents, 3_185_000);
        assert_eq!(solar_total(&p).unwrap().total_cents, 8_195_000);
    }

    #[test]
    fn scheme1_line_items() {
        let b = wind_total(&parcel(), WindScheme::PerMegawatt).unwrap();
        let subtotals: Vec<i64> = b.lines.iter().map(|l| l.subtotal_cents).collect();
        assert_eq!(subtotals, vec![3_750_000, 240_000, 195_000, 2_310_000]);
    }

    #[test]
    fn zero_quantities() {
        let mut p = parcel();
        p.total_acres = 0.0;
        p.solar_acres = 0.0;
        p.residual_crop_acres = 0.0;
        assert_eq!(crop_lease_total(&p).unwrap().total_cents, 0);
        // Scheme 2 with no turbines and no feet: blanket + residual crop only.
        let mut p = parcel();
        p.turbine_count = 0.0;
        p.access_road_feet = 0.0;
        p.transmission_feet = 0.0;
        let b = wind_total(&p, WindScheme::PerAcre).unwrap();
        assert_eq!(b.total_cents, 240_000 + 2_310_000);
    }

    #[test]
    fn partial_crop_acreage() {
        let mut p = parcel();
        p.total_acres = 77.0;
        p.solar_acres = 0.0;
        p.residual_crop_acres = 0.0;
        assert_eq!(crop_lease_total(&p).unwrap().total_cents, 2_310_000);
    }

    #[test]
    fn all_solar_parcel() {
        let mut p = parcel();
        p.solar_acres = 80.0;
        p.residual_crop_acres = 0.0;
        assert_eq!(solar_total(&p).unwrap().total_cents, 10_000_000);
        // No solar at all degenerates to the crop lease on the cropped acres.
        let mut p = parcel();
        p.solar_acres = 0.0;
        p.residual_crop_acres = 80.0;
        assert_eq!(
            solar_total(&p).unwrap().total_cents,
            crop_lease_total(&p).unwrap().total_cents
        );
    }

    #[test]
    fn rate_override() {
        let mut p = parcel();
        p.rates.set("crop_per_acre", 40_000);
        assert_eq!(crop_lease_total(&p).unwrap().total_cents, 3_200_000);
    }

    #[test]
    fn missing_rate_named() {
        let kv = crate::kvfile::KvFile::parse_str("t", "crop_per_acre=30000").unwrap();
        let card = RateCard::from_kv(&kv).unwrap();
        let mut p = parcel();
        p.rates = card;
        match solar_total(&p) {
            Err(Error::MissingRate(k)) => assert_eq!(k, "solar_per_acre"),
            other => panic!("expected missing-rate error, got {other:?}"),
        }
    }

    #[test]
    fn linearity_in_quantities() {
        let p = parcel();
        let mut doubled = p.clone();
        doubled.total_acres *= 2.0;
        doubled.turbine_count *= 2.0;
        doubled.access_road_feet *= 2.0;
        doubled.transmission_feet *= 2.0;
        doubled.farmable_acres_under_wind *= 2.0;
        doubled.solar_acres *= 2.0;
        doubled.residual_crop_acres *= 2.0;
        assert_eq!(
            crop_lease_total(&doubled).unwrap().total_cents,
            2 * crop_lease_total(&p).unwrap().total_cents
        );
        assert_eq!(
            wind_total(&doubled, WindScheme::PerAcre).unwrap().total_cents,
            2 * wind_total(&p, WindScheme::PerAcre).unwrap().total_cents
        );
        assert_eq!(
            solar_total(&doubled).unwrap().total_cents,
            2 * solar_total(&p).unwrap().total_cents
        );
    }

    #[test]
    fn fractional_acres_cents_exact() {
        let mut p = parcel();
        p.solar_acres = 60.5;
        p.residual_crop_acres = 19.5;
        // 60.5 × $1,250 = $75,625; 19.5 × $300 = $5,850.
        assert_eq!(solar_total(&p).unwrap().total_cents, 7_562_500 + 585_000);
    }

    #[test]
    fn invalid_parcel_rejected() {
        let mut p = parcel();
        p.solar_acres = 70.0;
        p.residual_crop_acres = 19.0;
        assert!(p.validate().is_err());
        let mut p = parcel();
        p.turbine_count = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn cents_formatting() {
        assert_eq!(format_cents(2_400_000), "$24,000");
        assert_eq!(format_cents(6_495_000), "$64,950");
        assert_eq!(format_cents(150), "$1.50");
        assert_eq!(format_cents(-25), "-$0.25");
        assert_eq!(format_cents(100_000_000_00), "$100,000,000");
    }
}
