//! Bridge from simulated populations to the estimator's panel format.

use crate::panel::{Panel, PanelObservation, RegulationLevel};

use super::agent::AgentDraw;

/// Emits one panel row per agent in the canonical schema: each agent is its
/// own cross-sectional unit (the panel key must be unique, so agents get
/// sequential pseudo-county ids) in a single common year, with fixed effects
/// meant to stay off downstream. Mapping: slr = d¹, wnd = d², log_income =
/// Ic, days_above_t = z; the outcome y, the option-0 indicator d0, and the
/// margin state m ride along as extra columns.
pub fn realize_observables(pop: &[AgentDraw]) -> Panel {
    let observations = pop
        .iter()
        .enumerate()
        .map(|(i, a)| PanelObservation {
            county_id: format!("a{i:07}"),
            year: 2000,
            slr: a.d(1),
            wnd: a.d(2),
            high_heat_days: Some(u32::from(a.z)),
            corn_yield: None,
            log_income: Some(f64::from(a.ic())),
            log_gdp: None,
            population: None,
            median_age: None,
            labor_force: None,
            unemployment_rate: None,
            metro: 0,
            solar_regulation: RegulationLevel::None,
            wind_regulation: RegulationLevel::None,
        })
        .collect();
    let mut panel = Panel::new(observations);
    panel
        .add_extra("y", pop.iter().map(|a| Some(a.y())).collect())
        .expect("row counts match");
    panel
        .add_extra("d0", pop.iter().map(|a| Some(f64::from(a.d(0)))).collect())
        .expect("row counts match");
    panel
        .add_extra("m", pop.iter().map(|a| Some(f64::from(a.m_k(0)))).collect())
        .expect("row counts match");
    panel
}
