//! Potential-outcomes simulation laboratory.
//!
//! A scenario file pins down a data-generating process with fully observable
//! counterfactuals: compliance types give the potential incomes, outcome
//! potentials y^k_ic live on a (option × income) grid, and choices come from
//! latent utilities with margin-dependent income sensitivity. Because every
//! counterfactual is stored on the agent, the estimands the instrumental-
//! variable machinery is supposed to identify can be computed by direct
//! enumeration ([`oracle_estimands`]) and compared against what the
//! estimation pipeline actually produces on the realized observables
//! ([`verify_proposition`], [`run_replications`]).

mod agent;
mod draw;
mod observe;
mod oracle;
mod scenario;
mod verify;

pub use agent::{check_invariants, AgentDraw, ComplianceType};
pub use draw::draw_population;
pub use observe::realize_observables;
pub use oracle::{ols_bias_report, oracle_estimands, CellMean, OlsBiasReport, OracleEstimands};
pub use scenario::{Law, MarginLaw, ScenarioConfig};
pub use verify::{
    run_replications, verify_proposition, EstimandSummary, McReport, Proposition,
    VerificationReport, Verdict, VERDICT_ATOL,
};
