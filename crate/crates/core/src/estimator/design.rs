//! Design-matrix assembly: variable lookup, listwise deletion, interaction
//! expansion, and group indexing for fixed effects and clustering.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::panel::Panel;

use super::DesignSpec;

pub struct Assembled {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub x_names: Vec<String>,
    /// Instrument matrix for 2SLS; None for plain OLS.
    pub z: Option<DMatrix<f64>>,
    pub z_names: Vec<String>,
    /// Leading endogenous columns of `x` (and instrument columns of `z`).
    pub n_endog: usize,
    pub county: Vec<usize>,
    pub year: Vec<usize>,
    pub n_counties: usize,
    pub n_years: usize,
    pub n_dropped: usize,
    /// Panel row index of each kept (non-missing) observation.
    pub rows: Vec<usize>,
}

fn group_index<T: Ord + Clone>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut map: BTreeMap<T, usize> = BTreeMap::new();
    for l in labels {
        let next = map.len();
        map.entry(l.clone()).or_insert(next);
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

pub fn assemble(spec: &DesignSpec, panel: &Panel) -> Result<Assembled> {
    spec.validate()?;
    if panel.is_empty() {
        return Err(Error::EmptyPanel);
    }

    let mut needed: Vec<&str> = vec![spec.dependent.as_str()];
    needed.extend(spec.endogenous.as_deref());
    needed.extend(spec.instrument.as_deref());
    needed.extend(spec.interactions.iter().map(String::as_str));
    needed.extend(spec.controls.iter().map(String::as_str));

    let mut raw: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for name in &needed {
        raw.push((name.to_string(), panel.column(name)?));
    }

    // Listwise deletion: keep rows where every used variable is present.
    let n_total = panel.len();
    let keep: Vec<usize> = (0..n_total)
        .filter(|&i| raw.iter().all(|(_, col)| col[i].is_some()))
        .collect();
    let n = keep.len();
    let n_dropped = n_total - n;
    if n == 0 {
        return Err(Error::TooFewObservations { n_obs: 0, n_params: needed.len() });
    }

    let fetch = |name: &str| -> Vec<f64> {
        let col = &raw.iter().find(|(n, _)| n == name).unwrap().1;
        keep.iter().map(|&i| col[i].unwrap()).collect()
    };

    let dependent = fetch(&spec.dependent);
    let ones = vec![1.0; n];

    let mut x_cols: Vec<(String, Vec<f64>)> = Vec::new();
    let mut z_cols: Vec<(String, Vec<f64>)> = Vec::new();

    let n_endog = if let (Some(endog), Some(instr)) = (&spec.endogenous, &spec.instrument) {
        let e = fetch(endog);
        let zv = fetch(instr);
        x_cols.push((endog.clone(), e.clone()));
        z_cols.push((instr.clone(), zv.clone()));
        for dummy in &spec.interactions {
            let d = fetch(dummy);
            let ed: Vec<f64> = e.iter().zip(&d).map(|(a, b)| a * b).collect();
            let zd: Vec<f64> = zv.iter().zip(&d).map(|(a, b)| a * b).collect();
            x_cols.push((format!("{endog}_x_{dummy}"), ed));
            z_cols.push((format!("{instr}_x_{dummy}"), zd));
        }
        1 + spec.interactions.len()
    } else {
        0
    };

    // Interaction dummies enter as exogenous main effects on both sides.
    for dummy in &spec.interactions {
        let d = fetch(dummy);
        x_cols.push((dummy.clone(), d.clone()));
        z_cols.push((dummy.clone(), d));
    }
    for control in &spec.controls {
        let c = fetch(control);
        x_cols.push((control.clone(), c.clone()));
        z_cols.push((control.clone(), c));
    }
    x_cols.push(("const".to_string(), ones.clone()));
    z_cols.push(("const".to_string(), ones));

    let to_matrix = |cols: &[(String, Vec<f64>)]| {
        DMatrix::from_columns(
            &cols.iter().map(|(_, v)| DVector::from_column_slice(v)).collect::<Vec<_>>(),
        )
    };

    let county_labels: Vec<String> =
        keep.iter().map(|&i| panel.observations[i].county_id.clone()).collect();
    let year_labels: Vec<i32> = keep.iter().map(|&i| panel.observations[i].year).collect();
    let (county, n_counties) = group_index(&county_labels);
    let (year, n_years) = group_index(&year_labels);

    Ok(Assembled {
        y: DVector::from_column_slice(&dependent),
        x: to_matrix(&x_cols),
        x_names: x_cols.iter().map(|(n, _)| n.clone()).collect(),
        z: if n_endog > 0 { Some(to_matrix(&z_cols)) } else { None },
        z_names: if n_endog > 0 { z_cols.iter().map(|(n, _)| n.clone()).collect() } else { Vec::new() },
        n_endog,
        county,
        year,
        n_counties,
        n_years,
        n_dropped,
        rows: keep,
    })
}
