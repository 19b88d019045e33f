//! Estimands computed by direct averaging over stored counterfactuals.
//!
//! Nothing here estimates anything: every quantity is an exact finite-
//! population mean (or covariance ratio) over the drawn agents, which is
//! what the estimation engine is checked against.

use super::agent::AgentDraw;

/// Conditional mean over a possibly empty cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMean {
    pub value: Option<f64>,
    pub n: usize,
}

impl CellMean {
    fn over<I: IntoIterator<Item = f64>>(values: I) -> CellMean {
        // Running mean: exact on constant input (a constant law averages to
        // its constant with no float drift).
        let mut mean = 0.0;
        let mut n = 0usize;
        for v in values {
            n += 1;
            mean += (v - mean) / n as f64;
        }
        CellMean { value: (n > 0).then_some(mean), n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimands {
    pub n: usize,
    pub n_compliers: usize,
    pub pr_complier: f64,
    /// θ₀ = E[Δ⁰ | complier, d¹=d²=0]: the LATE on compliers choosing 0.
    pub late0: CellMean,
    /// θ₁ = E[(Δ⁰−θ₀) + Δ¹ | complier, d¹=1], θ₂ likewise for option 2.
    pub theta1: CellMean,
    pub theta2: CellMean,
    /// θ₁ = E[Δ¹ | complier, d¹=1] under the homogeneity hypotheses, θ₂
    /// likewise.
    pub theta1_homogeneous: CellMean,
    pub theta2_homogeneous: CellMean,
    /// E[Ω₀ᵏ | complier] per option.
    pub omega0_complier: [CellMean; 3],
    /// E[(Ω₁ᵏ−Ω₀ᵏ)·M | complier]: the margin-mixing term per option.
    pub margin_term: [CellMean; 3],
    /// E[Ω₀ᵏ + (Ω₁ᵏ−Ω₀ᵏ)·M | complier]: what the instrument identifies.
    pub rho1_estimand: [CellMean; 3],
    /// The literal closed-form display: the estimand divided once more by
    /// Pr(complier). Reported alongside the covariance ratio rather than
    /// adjudicated.
    pub rho1_paper_expression: [Option<f64>; 3],
    /// Population Wald ratio Cov(dᵏ, z) / Cov(Ic, z) over realized data.
    pub rho1_wald: [Option<f64>; 3],
    pub empty_cells: Vec<String>,
}

fn covariance(a: impl Iterator<Item = f64> + Clone, b: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = a.clone().count() as f64;
    let ma = a.clone().sum::<f64>() / n;
    let mb = b.clone().sum::<f64>() / n;
    a.zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
}

/// Exact conditional means over stored counterfactuals plus the realized-
/// data Wald ratios. Empty conditioning cells are reported, not fatal.
pub fn oracle_estimands(pop: &[AgentDraw]) -> OracleEstimands {
    let n = pop.len();
    let compliers: Vec<&AgentDraw> = pop.iter().filter(|a| a.compliance.is_complier()).collect();
    let n_compliers = compliers.len();
    let pr_complier = n_compliers as f64 / n as f64;
    let mut empty_cells = Vec::new();

    let late0 = CellMean::over(
        compliers.iter().filter(|a| a.d(1) == 0 && a.d(2) == 0).map(|a| a.delta0()),
    );
    if late0.value.is_none() {
        empty_cells.push("late0: no complier chose option 0".to_string());
    }

    let theta_for = |k: usize| -> (CellMean, CellMean) {
        let cell: Vec<&&AgentDraw> = compliers.iter().filter(|a| a.d(k) == 1).collect();
        let closed = match late0.value {
            Some(theta0) => CellMean::over(
                cell.iter().map(|a| (a.delta0() - theta0) + a.delta_shift(k)),
            ),
            None => CellMean { value: None, n: cell.len() },
        };
        let homogeneous = CellMean::over(cell.iter().map(|a| a.delta_shift(k)));
        (closed, homogeneous)
    };
    let (theta1, theta1_homogeneous) = theta_for(1);
    let (theta2, theta2_homogeneous) = theta_for(2);
    if theta1.value.is_none() {
        empty_cells.push("theta1: no complier chose option 1".to_string());
    }
    if theta2.value.is_none() {
        empty_cells.push("theta2: no complier chose option 2".to_string());
    }

    let mut omega0_complier = [CellMean { value: None, n: 0 }; 3];
    let mut margin_term = [CellMean { value: None, n: 0 }; 3];
    let mut rho1_estimand = [CellMean { value: None, n: 0 }; 3];
    let mut rho1_paper_expression = [None; 3];
    let mut rho1_wald = [None; 3];
    let cov_ic_z = covariance(
        pop.iter().map(|a| f64::from(a.ic())),
        pop.iter().map(|a| f64::from(u8::from(a.z))),
    );
    for k in 0..3 {
        omega0_complier[k] = CellMean::over(compliers.iter().map(|a| a.omega0(k)));
        margin_term[k] = CellMean::over(
            compliers.iter().map(|a| (a.omega1(k) - a.omega0(k)) * f64::from(a.m_k(k))),
        );
        rho1_estimand[k] = CellMean::over(
            compliers
                .iter()
                .map(|a| a.omega0(k) + (a.omega1(k) - a.omega0(k)) * f64::from(a.m_k(k))),
        );
        rho1_paper_expression[k] = rho1_estimand[k]
            .value
            .and_then(|v| (pr_complier > 0.0).then(|| v / pr_complier));
        if cov_ic_z.abs() > 1e-12 {
            let cov_dk_z = covariance(
                pop.iter().map(|a| f64::from(a.d(k))),
                pop.iter().map(|a| f64::from(u8::from(a.z))),
            );
            rho1_wald[k] = Some(cov_dk_z / cov_ic_z);
        }
    }
    if n_compliers == 0 {
        empty_cells.push("no compliers in population".to_string());
    }
    if cov_ic_z.abs() <= 1e-12 {
        empty_cells.push("Cov(Ic, z) = 0: Wald ratios undefined".to_string());
    }

    OracleEstimands {
        n,
        n_compliers,
        pr_complier,
        late0,
        theta1,
        theta2,
        theta1_homogeneous,
        theta2_homogeneous,
        omega0_complier,
        margin_term,
        rho1_estimand,
        rho1_paper_expression,
        rho1_wald,
        empty_cells,
    }
}

/// The naive (ordinary-least-squares) estimand for the outcome equation of
/// one option, decomposed into its causal and selection pieces, plus the
/// next-best mixture of the causal piece.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsBiasReport {
    pub target: usize,
    pub n_chose_target: usize,
    /// E(y | Ic=1, dᵏ=1) − E(y | Ic=0, dᵏ=1).
    pub ols_estimand: Option<f64>,
    /// E(y₀ | Ic=1, dᵏ=1) − E(y₀ | Ic=0, dᵏ=1).
    pub selection_term: Option<f64>,
    /// E(Δ | Ic=1, dᵏ=1) where Δ = y₁ − y₀ for the realized choice.
    pub delta_mean: Option<f64>,
    /// P[next-best = j | Ic=1, dᵏ=1] for the two remaining options, in
    /// ascending option order.
    pub weights: [Option<f64>; 2],
    /// E(Δ | Ic=1, dᵏ=1, next-best = j), same order as `weights`.
    pub conditionals: [Option<f64>; 2],
    /// Σⱼ weightⱼ × conditionalⱼ.
    pub mixture: Option<f64>,
    /// |delta_mean − mixture|: zero up to float noise, by construction.
    pub identity_gap: Option<f64>,
    /// |ols_estimand − (delta_mean + selection_term)|.
    pub decomposition_gap: Option<f64>,
    pub empty_cells: Vec<String>,
}

/// Enumerates the OLS decomposition for `target`'s outcome equation.
pub fn ols_bias_report(pop: &[AgentDraw], target: usize) -> OlsBiasReport {
    assert!(target < 3, "target option index");
    let mut empty_cells = Vec::new();
    let chose: Vec<&AgentDraw> = pop.iter().filter(|a| a.d(target) == 1).collect();
    let high: Vec<&&AgentDraw> = chose.iter().filter(|a| a.ic() == 1).collect();
    let low: Vec<&&AgentDraw> = chose.iter().filter(|a| a.ic() == 0).collect();

    let mean = |xs: &[&&AgentDraw], f: &dyn Fn(&AgentDraw) -> f64| -> Option<f64> {
        (!xs.is_empty()).then(|| xs.iter().map(|a| f(a)).sum::<f64>() / xs.len() as f64)
    };
    if high.is_empty() {
        empty_cells.push(format!("no agent with Ic=1 chose option {target}"));
    }
    if low.is_empty() {
        empty_cells.push(format!("no agent with Ic=0 chose option {target}"));
    }

    let y_high = mean(&high, &|a| a.y());
    let y_low = mean(&low, &|a| a.y());
    let ols_estimand = y_high.zip(y_low).map(|(a, b)| a - b);
    let y0_high = mean(&high, &|a| a.y_at_income(0));
    let y0_low = mean(&low, &|a| a.y_at_income(0));
    let selection_term = y0_high.zip(y0_low).map(|(a, b)| a - b);
    let delta = |a: &AgentDraw| a.y_at_income(1) - a.y_at_income(0);
    let delta_mean = mean(&high, &delta);

    let others: Vec<usize> = (0..3).filter(|&j| j != target).collect();
    let mut weights = [None; 2];
    let mut conditionals = [None; 2];
    for (slot, &j) in others.iter().enumerate() {
        let cell: Vec<&&&AgentDraw> =
            high.iter().filter(|a| a.next_best_excluding(target) == j).collect();
        weights[slot] = (!high.is_empty()).then(|| cell.len() as f64 / high.len() as f64);
        conditionals[slot] = (!cell.is_empty())
            .then(|| cell.iter().map(|a| delta(a)).sum::<f64>() / cell.len() as f64);
        if cell.is_empty() {
            empty_cells.push(format!("no Ic=1 chooser of {target} has next-best {j}"));
        }
    }
    // The mixture treats an empty next-best cell as weight zero.
    let mixture = (!high.is_empty()).then(|| {
        weights
            .iter()
            .zip(&conditionals)
            .map(|(w, c)| w.unwrap_or(0.0) * c.unwrap_or(0.0))
            .sum::<f64>()
    });
    let identity_gap = delta_mean.zip(mixture).map(|(d, m)| (d - m).abs());
    let decomposition_gap = ols_estimand
        .zip(delta_mean.zip(selection_term))
        .map(|(o, (d, s))| (o - (d + s)).abs());

    OlsBiasReport {
        target,
        n_chose_target: chose.len(),
        ols_estimand,
        selection_term,
        delta_mean,
        weights,
        conditionals,
        mixture,
        identity_gap,
        decomposition_gap,
        empty_cells,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::agent::ComplianceType;
    use crate::simlab::draw::draw_population;
    use crate::simlab::scenario::{Law, MarginLaw, ScenarioConfig};

    #[test]
    fn pure_compliers_all_option0() {
        let cfg = ScenarioConfig {
            share_never: 0.0,
            share_complier: 1.0,
            share_always: 0.0,
            delta0: Law::Constant(0.3),
            value: [5.0, 0.0, 0.0],
            taste: [Law::Constant(0.0); 3],
            population_size: 100,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        let oracle = oracle_estimands(&pop);
        assert_eq!(oracle.n_compliers, 100);
        assert_eq!(oracle.late0.value, Some(0.3));
        assert_eq!(oracle.late0.n, 100);
        assert!(oracle.theta1.value.is_none());
        assert!(!oracle.empty_cells.is_empty());
    }

    /// Planted homogeneous cross-return elasticity: option-0 taste uniform
    /// on (0,1), option 1 fixed at 0.7, income boosts option 0 by 0.5, so
    /// an income rise moves exactly the agents with taste in (0.2, 0.7) out
    /// of option 1: E[Ω₀¹] = −0.5, margin-independent.
    fn homogeneous_config(n: usize) -> ScenarioConfig {
        ScenarioConfig {
            population_size: n,
            taste: [
                Law::Uniform { lo: 0.0, hi: 1.0 },
                Law::Constant(0.7),
                Law::Constant(-10.0),
            ],
            gamma: [0.5, 0.0, 0.0],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn homogeneous_omega_oracle_and_wald_agree() {
        let pop = draw_population(&homogeneous_config(200_000)).unwrap();
        let oracle = oracle_estimands(&pop);
        let est = oracle.rho1_estimand[1].value.unwrap();
        let wald = oracle.rho1_wald[1].unwrap();
        assert!((est + 0.5).abs() < 0.01, "estimand {est}");
        assert!((wald + 0.5).abs() < 0.02, "wald {wald}");
        // Margin-independence makes the mixing term exactly zero.
        assert_eq!(oracle.margin_term[1].value, Some(0.0));
        // The literal closed-form display divides by Pr(complier) once more.
        let expr = oracle.rho1_paper_expression[1].unwrap();
        assert!((expr - est / oracle.pr_complier).abs() < 1e-12);
    }

    #[test]
    fn margin_mixing_identity_exact() {
        let cfg = ScenarioConfig {
            population_size: 50_000,
            taste: [
                Law::Uniform { lo: 0.0, hi: 1.0 },
                Law::Constant(0.7),
                Law::Constant(-10.0),
            ],
            gamma: [0.5, 0.0, 0.0],
            gamma_margin: [0.4, 0.0, 0.0],
            margin_law: MarginLaw::Bernoulli(0.5),
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        let oracle = oracle_estimands(&pop);
        let est = oracle.rho1_estimand[1].value.unwrap();
        let omega = oracle.omega0_complier[1].value.unwrap();
        let term = oracle.margin_term[1].value.unwrap();
        assert!((est - omega - term).abs() < 1e-12);
        assert!(term.abs() > 0.05, "margin term should bite, got {term}");
        // Wald lands on the mixed estimand, not on E[Ω₀|complier].
        let wald = oracle.rho1_wald[1].unwrap();
        assert!((wald - est).abs() < 0.02, "wald {wald} vs estimand {est}");
        assert!((wald - omega).abs() > 0.05);
    }

    fn manual_agent(
        ic: u8,
        choice: u8,
        delta: f64,
        base_utility: [f64; 3],
    ) -> crate::simlab::agent::AgentDraw {
        let compliance =
            if ic == 1 { ComplianceType::AlwaysTaker } else { ComplianceType::NeverTaker };
        crate::simlab::agent::AgentDraw {
            z: false,
            compliance,
            // Only the chosen option's potentials matter here.
            y_potential: [[0.0, delta], [0.0, delta], [0.0, delta]],
            base_utility,
            choice_at: [[choice; 2]; 2],
            margin: false,
        }
    }

    #[test]
    fn mixture_arithmetic_hand_set() {
        // Four Ic=1 choosers of option 1: one with next-best 0 and Δ = 0.2,
        // three with next-best 2 and Δ = 0.6. Weights 0.25/0.75 → 0.5.
        let mut pop = vec![manual_agent(1, 1, 0.2, [0.5, 9.0, 0.1])];
        for _ in 0..3 {
            pop.push(manual_agent(1, 1, 0.6, [0.1, 9.0, 0.5]));
        }
        let report = ols_bias_report(&pop, 1);
        assert_eq!(report.weights, [Some(0.25), Some(0.75)]);
        assert_eq!(report.conditionals, [Some(0.2), Some(0.6)]);
        assert!((report.mixture.unwrap() - 0.5).abs() < 1e-15);
        assert!(report.identity_gap.unwrap() < 1e-15);
    }

    #[test]
    fn degenerate_next_best_weights() {
        // Every chooser of option 1 has option 2 as next best: the mixture
        // collapses to the single conditional mean.
        let pop: Vec<_> = (0..5).map(|_| manual_agent(1, 1, 0.4, [-5.0, 9.0, 0.0])).collect();
        let report = ols_bias_report(&pop, 1);
        assert_eq!(report.weights, [Some(0.0), Some(1.0)]);
        assert_eq!(report.mixture, Some(0.4));
        assert!(report.identity_gap.unwrap() < 1e-15);
    }

    #[test]
    fn no_selection_scenario_small_terms() {
        let cfg = ScenarioConfig {
            population_size: 100_000,
            delta0: Law::Normal { mean: 0.3, sd: 0.2 },
            y_base: Law::Normal { mean: 1.0, sd: 0.5 },
            value: [0.2, 0.0, -0.1],
            selection_strength: 0.0,
            level_selection: 0.0,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        let report = ols_bias_report(&pop, 1);
        let bound = 3.0 / (pop.len() as f64).sqrt();
        assert!(report.selection_term.unwrap().abs() < bound * 0.5f64.max(1.0));
        assert!(report.identity_gap.unwrap() < 1e-12);
        assert!(report.decomposition_gap.unwrap() < 1e-12);
    }

    #[test]
    fn selection_scenario_nonzero_term() {
        let cfg = ScenarioConfig {
            population_size: 100_000,
            delta0: Law::Normal { mean: 0.3, sd: 0.2 },
            y_base: Law::Normal { mean: 1.0, sd: 0.5 },
            level_selection: 0.5,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        let report = ols_bias_report(&pop, 1);
        assert!(report.selection_term.unwrap() > 0.2);
        assert!(report.identity_gap.unwrap() < 1e-12);
        assert!(report.decomposition_gap.unwrap() < 1e-12);
    }
}
