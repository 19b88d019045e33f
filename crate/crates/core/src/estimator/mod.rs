//! Two-way fixed-effects OLS and 2SLS.
//!
//! Fixed effects are absorbed by alternating-projection demeaning (equivalent
//! to the dummy-variable regression, including degrees of freedom), with
//! grand means added back so the reported constant follows the usual
//! absorbed-effects convention: ȳ − x̄'β̂. The just-identified 2SLS with a
//! single instrument reduces to the Wald ratio. Standard errors are
//! classical by default, with HC1-robust and county-clustered options; the
//! choice is a [`DesignSpec`] field because no single convention is implied
//! by the data.

mod design;
mod inference;
mod lstsq;
pub mod table;
mod within;

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kvfile::KvFile;
use crate::panel::{LandUse, Panel};
use crate::ranking::RankingSet;

use design::{assemble, Assembled};
pub use table::{render_table, table_csv, TableColumn};
pub use within::{WITHIN_MAX_SWEEPS, WITHIN_TOL};

/// First-stage F below this flags (but does not fail) the fit.
pub const WEAK_INSTRUMENT_F_FLOOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FixedEffects {
    pub county: bool,
    pub year: bool,
}

impl FixedEffects {
    pub const BOTH: FixedEffects = FixedEffects { county: true, year: true };
    pub const NONE: FixedEffects = FixedEffects { county: false, year: false };

    pub fn any(self) -> bool {
        self.county || self.year
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeType {
    #[default]
    Classical,
    Robust,
    ClusterByCounty,
}

impl SeType {
    pub fn parse(s: &str) -> Option<SeType> {
        match s {
            "classical" => Some(SeType::Classical),
            "robust" => Some(SeType::Robust),
            "cluster_by_county" => Some(SeType::ClusterByCounty),
            _ => None,
        }
    }
}

/// One regression to run: what to explain, with what, and how.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub dependent: String,
    pub endogenous: Option<String>,
    pub instrument: Option<String>,
    pub controls: Vec<String>,
    /// Dummy variables interacted with the endogenous regressor; each also
    /// enters as a main effect and its instrument interaction joins the
    /// instrument set.
    pub interactions: Vec<String>,
    pub fixed_effects: FixedEffects,
    /// Restrict to rows whose ranked next-best alternative equals this use.
    pub subsample: Option<LandUse>,
    pub se_type: SeType,
}

pub const DEFAULT_CONTROLS: [&str; 2] = ["median_age", "unemployment_rate"];

impl DesignSpec {
    pub fn new(dependent: impl Into<String>) -> Self {
        DesignSpec {
            dependent: dependent.into(),
            endogenous: None,
            instrument: None,
            controls: DEFAULT_CONTROLS.iter().map(|s| s.to_string()).collect(),
            interactions: Vec::new(),
            fixed_effects: FixedEffects::NONE,
            subsample: None,
            se_type: SeType::Classical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endogenous.is_some() != self.instrument.is_some() {
            return Err(Error::InvalidSpec(
                "instrument present iff endogenous present".to_string(),
            ));
        }
        if !self.interactions.is_empty() && self.endogenous.is_none() {
            return Err(Error::InvalidSpec(
                "interactions require an endogenous regressor".to_string(),
            ));
        }
        if self.dependent.is_empty() {
            return Err(Error::InvalidSpec("dependent variable required".to_string()));
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.check_keys(&[
            "dependent",
            "endogenous",
            "instrument",
            "controls",
            "interactions",
            "fixed_effects",
            "subsample",
            "se_type",
        ])?;
        let mut spec = DesignSpec::new(kv.require("dependent")?);
        spec.endogenous = kv.get("endogenous").map(String::from);
        spec.instrument = kv.get("instrument").map(String::from);
        if kv.get("controls").is_some() {
            spec.controls = kv.list("controls");
        }
        spec.interactions = kv.list("interactions");
        for fe in kv.list("fixed_effects") {
            match fe.as_str() {
                "county" => spec.fixed_effects.county = true,
                "year" => spec.fixed_effects.year = true,
                other => {
                    return Err(Error::InvalidSpec(format!("unknown fixed effect `{other}`")))
                }
            }
        }
        if let Some(s) = kv.get("subsample") {
            spec.subsample = Some(
                LandUse::parse(s)
                    .ok_or_else(|| Error::InvalidSpec(format!("unknown subsample `{s}`")))?,
            );
        }
        if let Some(s) = kv.get("se_type") {
            spec.se_type = SeType::parse(s)
                .ok_or_else(|| Error::InvalidSpec(format!("unknown se_type `{s}`")))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvFile::load(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

impl Coefficient {
    pub fn stars(&self) -> &'static str {
        inference::stars(self.p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub dependent: String,
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    pub n_dropped_missing: usize,
    pub df_resid: usize,
    /// 1 − SSR/SST against the untransformed dependent; None when negative
    /// (possible for 2SLS), rendered as ".".
    pub r_squared: Option<f64>,
    pub fixed_effects: FixedEffects,
    pub n_counties: usize,
    pub n_years: usize,
    pub se_type: SeType,
    /// Next-best filter applied before fitting, with the surviving row count.
    pub subsample: Option<(LandUse, usize)>,
    pub first_stage: Option<Box<FitResult>>,
    /// F statistic for the excluded instruments in the first stage.
    pub first_stage_f: Option<f64>,
    pub weak_instrument: bool,
    /// Structural residuals y − Xβ̂, aligned with `rows`.
    pub residuals: Vec<f64>,
    /// Panel row index of each estimation observation.
    pub rows: Vec<usize>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Public within-transform operation
// ---------------------------------------------------------------------------

/// Within-transformed columns: the projection residual after removing the
/// requested group means (orthogonal to every county and year indicator).
#[derive(Debug, Clone)]
pub struct TransformedMatrix {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub county_ids: Vec<String>,
    pub years: Vec<i32>,
    pub sweeps: usize,
}

/// Demeans the named variables by county and/or year. Rows missing any of
/// the variables are dropped first.
pub fn within_transform(
    panel: &Panel,
    variables: &[&str],
    fixed_effects: FixedEffects,
) -> Result<TransformedMatrix> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let raw: Vec<Vec<Option<f64>>> =
        variables.iter().map(|v| panel.column(v)).collect::<Result<_>>()?;
    let keep: Vec<usize> =
        (0..panel.len()).filter(|&i| raw.iter().all(|c| c[i].is_some())).collect();
    let mut columns: Vec<Vec<f64>> = raw
        .iter()
        .map(|c| keep.iter().map(|&i| c[i].unwrap()).collect())
        .collect();
    let county_ids: Vec<String> =
        keep.iter().map(|&i| panel.observations[i].county_id.clone()).collect();
    let years: Vec<i32> = keep.iter().map(|&i| panel.observations[i].year).collect();
    let mut county_index = std::collections::BTreeMap::new();
    let county: Vec<usize> = county_ids
        .iter()
        .map(|c| {
            let next = county_index.len();
            *county_index.entry(c.clone()).or_insert(next)
        })
        .collect();
    let mut year_index = std::collections::BTreeMap::new();
    let year: Vec<usize> = years
        .iter()
        .map(|y| {
            let next = year_index.len();
            *year_index.entry(*y).or_insert(next)
        })
        .collect();
    let sweeps = within::within_transform_columns(
        &mut columns,
        &county,
        &year,
        county_index.len(),
        year_index.len(),
        fixed_effects,
    )?;
    Ok(TransformedMatrix {
        names: variables.iter().map(|s| s.to_string()).collect(),
        columns,
        county_ids,
        years,
        sweeps,
    })
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct Prepared {
    a: Assembled,
    /// Sum of squares of the untransformed dependent about its mean.
    sst: f64,
    absorbed: usize,
}

fn prepare(spec: &DesignSpec, panel: &Panel) -> Result<Prepared> {
    let mut a = assemble(spec, panel)?;
    let n = a.y.len();
    let y_mean = a.y.mean();
    let sst = a.y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();

    let fe = spec.fixed_effects;
    let mut absorbed = 0;
    if fe.any() {
        // Demean everything but the constant, then restore grand means so the
        // regression keeps an interpretable intercept.
        let mut cols: Vec<Vec<f64>> = Vec::new();
        cols.push(a.y.iter().copied().collect());
        let x_take: Vec<usize> =
            (0..a.x.ncols()).filter(|&j| a.x_names[j] != "const").collect();
        for &j in &x_take {
            cols.push(a.x.column(j).iter().copied().collect());
        }
        let z_take: Vec<usize> =
            (0..a.z_names.len()).filter(|&j| a.z_names[j] != "const").collect();
        if let Some(z) = &a.z {
            for &j in &z_take {
                cols.push(z.column(j).iter().copied().collect());
            }
        }
        let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
        within::within_transform_columns(
            &mut cols,
            &a.county,
            &a.year,
            a.n_counties,
            a.n_years,
            fe,
        )?;
        for (col, m) in cols.iter_mut().zip(&means) {
            for v in col.iter_mut() {
                *v += m;
            }
        }
        let mut it = cols.into_iter();
        a.y = DVector::from_vec(it.next().unwrap());
        for &j in &x_take {
            a.x.set_column(j, &DVector::from_vec(it.next().unwrap()));
        }
        if let Some(z) = &mut a.z {
            for &j in &z_take {
                z.set_column(j, &DVector::from_vec(it.next().unwrap()));
            }
        }
        if fe.county {
            absorbed += a.n_counties - 1;
        }
        if fe.year {
            absorbed += a.n_years - 1;
        }
    }
    Ok(Prepared { a, sst, absorbed })
}

fn finish(
    spec: &DesignSpec,
    a: &Assembled,
    design: &DMatrix<f64>,
    beta: &DVector<f64>,
    xtx_inv: &DMatrix<f64>,
    sst: f64,
    absorbed: usize,
    first_stage: Option<Box<FitResult>>,
    first_stage_f: Option<f64>,
) -> Result<FitResult> {
    let n = a.y.len();
    let k = a.x.ncols();
    let residuals = &a.y - &a.x * beta;
    if n < k + absorbed {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k + absorbed });
    }
    let df_resid = n - k - absorbed;
    let ssr = residuals.dot(&residuals);
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };
    let cov = inference::covariance(
        design,
        xtx_inv,
        &residuals,
        Some(&a.county),
        spec.se_type,
        df_resid,
    );
    let coefficients = a
        .x_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = beta[j];
            let var = cov[(j, j)].max(0.0);
            let se = var.sqrt();
            let t = if se > 0.0 {
                estimate / se
            } else if estimate == 0.0 {
                0.0
            } else {
                f64::INFINITY * estimate.signum()
            };
            Coefficient { name: name.clone(), estimate, se, t, p: inference::p_value(t, df_resid) }
        })
        .collect();
    Ok(FitResult {
        dependent: spec.dependent.clone(),
        coefficients,
        n_obs: n,
        n_dropped_missing: a.n_dropped,
        df_resid,
        r_squared: if r2 >= 0.0 { Some(r2) } else { None },
        fixed_effects: spec.fixed_effects,
        n_counties: a.n_counties,
        n_years: a.n_years,
        se_type: spec.se_type,
        subsample: spec.subsample.map(|s| (s, n)),
        first_stage,
        first_stage_f,
        weak_instrument: first_stage_f.is_some_and(|f| f < WEAK_INSTRUMENT_F_FLOOR),
        residuals: residuals.iter().copied().collect(),
        rows: a.rows.clone(),
    })
}

/// Ordinary least squares (the spec must not name an endogenous regressor).
pub fn ols_fit(spec: &DesignSpec, panel: &Panel) -> Result<FitResult> {
    if spec.endogenous.is_some() {
        return Err(Error::InvalidSpec(
            "ols_fit cannot take an endogenous regressor; use tsls_fit".to_string(),
        ));
    }
    let prep = prepare(spec, panel)?;
    let a = &prep.a;
    let ls = lstsq::solve(&a.x, &a.y, &a.x_names)?;
    finish(spec, a, &a.x, &ls.beta, &ls.xtx_inv, prep.sst, prep.absorbed, None, None)
}

/// Two-stage least squares on the within-transformed data. The instrument
/// set is the named instrument plus its interactions; exogenous regressors
/// instrument themselves.
pub fn tsls_fit(spec: &DesignSpec, panel: &Panel) -> Result<FitResult> {
    if spec.endogenous.is_none() {
        return Err(Error::InvalidSpec("tsls_fit requires endogenous + instrument".to_string()));
    }
    let prep = prepare(spec, panel)?;
    let a = &prep.a;
    let z = a.z.as_ref().expect("instrument matrix present");

    // First stage: project each endogenous column on the full instrument set.
    let mut x_hat = a.x.clone();
    let mut first_stage = None;
    let mut first_stage_f = None;
    for j in 0..a.n_endog {
        let target = DVector::from_column_slice(a.x.column(j).as_slice());
        let ls = lstsq::solve(z, &target, &a.z_names)?;
        x_hat.set_column(j, &(z * &ls.beta));
        if j == 0 {
            let fs = first_stage_fit(spec, a, &target, &ls, prep.absorbed)?;
            first_stage_f = fs.first_stage_f;
            first_stage = Some(Box::new(fs));
        }
    }

    let ls = lstsq::solve(&x_hat, &a.y, &a.x_names)?;
    finish(
        spec,
        a,
        &x_hat,
        &ls.beta,
        &ls.xtx_inv,
        prep.sst,
        prep.absorbed,
        first_stage,
        first_stage_f,
    )
}

/// Builds the nested first-stage result (coefficients of the endogenous
/// variable on the instrument set) plus the excluded-instrument F.
fn first_stage_fit(
    spec: &DesignSpec,
    a: &Assembled,
    target: &DVector<f64>,
    ls: &lstsq::LeastSquares,
    absorbed: usize,
) -> Result<FitResult> {
    let z = a.z.as_ref().unwrap();
    let n = target.len();
    let k = z.ncols();
    if n < k + absorbed {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k + absorbed });
    }
    let df_resid = n - k - absorbed;
    let residuals = target - z * &ls.beta;
    let ssr_u = residuals.dot(&residuals);

    // Restricted regression without the excluded instruments.
    let n_excl = a.n_endog;
    let exog_idx: Vec<usize> = (n_excl..k).collect();
    let z_exog = DMatrix::from_columns(
        &exog_idx
            .iter()
            .map(|&j| DVector::from_column_slice(z.column(j).as_slice()))
            .collect::<Vec<_>>(),
    );
    let exog_names: Vec<String> = exog_idx.iter().map(|&j| a.z_names[j].clone()).collect();
    let ls_r = lstsq::solve(&z_exog, target, &exog_names)?;
    let resid_r = target - &z_exog * &ls_r.beta;
    let ssr_r = resid_r.dot(&resid_r);
    let f = if df_resid > 0 && ssr_u > 0.0 {
        ((ssr_r - ssr_u) / n_excl as f64) / (ssr_u / df_resid as f64)
    } else {
        f64::INFINITY
    };

    let mean = target.mean();
    let sst: f64 = target.iter().map(|v| (v - mean) * (v - mean)).sum();
    let cov = inference::covariance(
        z,
        &ls.xtx_inv,
        &residuals,
        Some(&a.county),
        spec.se_type,
        df_resid,
    );
    let coefficients = a
        .z_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let estimate = ls.beta[j];
            let se = cov[(j, j)].max(0.0).sqrt();
            let t = if se > 0.0 { estimate / se } else { 0.0 };
            Coefficient { name: name.clone(), estimate, se, t, p: inference::p_value(t, df_resid) }
        })
        .collect();
    let r2 = if sst > 0.0 { 1.0 - ssr_u / sst } else { 0.0 };
    Ok(FitResult {
        dependent: spec.endogenous.clone().unwrap(),
        coefficients,
        n_obs: n,
        n_dropped_missing: a.n_dropped,
        df_resid,
        r_squared: if r2 >= 0.0 { Some(r2) } else { None },
        fixed_effects: spec.fixed_effects,
        n_counties: a.n_counties,
        n_years: a.n_years,
        se_type: spec.se_type,
        subsample: spec.subsample.map(|s| (s, n)),
        first_stage: None,
        first_stage_f: Some(f),
        weak_instrument: f < WEAK_INSTRUMENT_F_FLOOR,
        residuals: residuals.iter().copied().collect(),
        rows: a.rows.clone(),
    })
}

/// Dispatches on the spec: 2SLS when an endogenous regressor is named,
/// otherwise OLS.
pub fn fit(spec: &DesignSpec, panel: &Panel) -> Result<FitResult> {
    if spec.endogenous.is_some() {
        tsls_fit(spec, panel)
    } else {
        ols_fit(spec, panel)
    }
}

/// Filters the panel to rows whose ranked next-best alternative equals
/// `next_best`, then fits. The rankings must cover every panel row.
pub fn margin_conditioned_fit(
    spec: &DesignSpec,
    panel: &Panel,
    rankings: &RankingSet,
    next_best: LandUse,
) -> Result<FitResult> {
    let mut keep = Vec::new();
    for (i, obs) in panel.observations.iter().enumerate() {
        let ranking = rankings.get(&obs.county_id, obs.year).ok_or_else(|| {
            Error::RankingNotCovering { county_id: obs.county_id.clone(), year: obs.year }
        })?;
        if ranking.next_best() == next_best {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptySubsample(next_best.name().to_string()));
    }
    let sub = panel.subset(&keep);
    let mut spec = spec.clone();
    spec.subsample = Some(next_best);
    fit(&spec, &sub)
}

/// One column of the five-column replication layout.
pub struct HarnessColumn {
    pub label: String,
    pub result: Result<FitResult>,
}

/// Runs the unconditional fit plus the four next-best-conditioned fits, in
/// the ALL / Agriculture / Residential / Solar / Wind column order.
pub fn five_column_harness(
    spec: &DesignSpec,
    panel: &Panel,
    rankings: &RankingSet,
) -> Vec<HarnessColumn> {
    let mut all_spec = spec.clone();
    all_spec.subsample = None;
    let mut columns = vec![HarnessColumn {
        label: "ALL".to_string(),
        result: fit(&all_spec, panel),
    }];
    for land_use in [LandUse::Agriculture, LandUse::Residential, LandUse::Solar, LandUse::Wind] {
        columns.push(HarnessColumn {
            label: land_use.label().to_string(),
            result: margin_conditioned_fit(&all_spec, panel, rankings, land_use),
        });
    }
    columns
}
