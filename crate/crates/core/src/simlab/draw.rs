//! Population sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::agent::{AgentDraw, ComplianceType};
use super::scenario::{MarginLaw, ScenarioConfig};

/// Draws a full population. The instrument is drawn independently of every
/// potential outcome, so independence and exclusion hold by construction;
/// identical (config, seed) give bit-identical populations.
pub fn draw_population(config: &ScenarioConfig) -> Result<Vec<AgentDraw>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pop = Vec::with_capacity(config.population_size);
    // Expected ic0 + ic1, used to center the compliance-selection coupling.
    let compliance_center = config.share_complier + 2.0 * config.share_always;
    for _ in 0..config.population_size {
        pop.push(draw_agent(config, compliance_center, &mut rng));
    }
    Ok(pop)
}

fn draw_agent(config: &ScenarioConfig, compliance_center: f64, rng: &mut ChaCha8Rng) -> AgentDraw {
    // Draw order is fixed; changing it changes every seeded population.
    let z = rng.random_bool(config.instrument_probability);
    let u: f64 = rng.random_range(0.0..1.0);
    let compliance = if u < config.share_never {
        ComplianceType::NeverTaker
    } else if u < config.share_never + config.share_complier {
        ComplianceType::Complier
    } else {
        ComplianceType::AlwaysTaker
    };
    let delta0 = config.delta0.draw(rng);
    let delta1 = config.delta1.draw(rng);
    let delta2 = config.delta2.draw(rng);
    let rho1 = config.rho1.draw(rng);
    let rho2 = config.rho2.draw(rng);
    let (ic0, ic1) = compliance.incomes();
    let y00 = config.y_base.draw(rng) + config.level_selection * f64::from(ic0 + ic1);

    let y_potential = [
        [y00, y00 + delta0],
        [y00 + rho1, y00 + rho1 + delta0 + delta1],
        [y00 + rho2, y00 + rho2 + delta0 + delta2],
    ];

    let deltas = [delta0, delta1, delta2];
    let delta_means = [config.delta0.mean(), config.delta1.mean(), config.delta2.mean()];
    let mut base_utility = [0.0f64; 3];
    for k in 0..3 {
        base_utility[k] = config.value[k]
            + config.taste[k].draw(rng)
            + config.selection_strength * (deltas[k] - delta_means[k]);
    }
    base_utility[0] +=
        config.compliance_selection * (f64::from(ic0 + ic1) - compliance_center);

    let margin = if config.restrictive_preferences {
        false
    } else {
        match config.margin_law {
            MarginLaw::Bernoulli(q) => rng.random_bool(q),
            MarginLaw::Ranking => ranking_margin(&base_utility),
        }
    };

    let mut choice_at = [[0u8; 2]; 2];
    for (ic, row) in choice_at.iter_mut().enumerate() {
        for (m, slot) in row.iter_mut().enumerate() {
            *slot = argmax_choice(config, &base_utility, ic as u8, m as u8);
        }
    }

    AgentDraw { z, compliance, y_potential, base_utility, choice_at, margin }
}

/// Margin of the top-ranked option's comparison: 1 when its next-best
/// alternative is the lowest-indexed of its remaining options.
fn ranking_margin(base_utility: &[f64; 3]) -> bool {
    let top = argmax(base_utility, |_| 0.0);
    let second = (0..3)
        .filter(|&j| j != top)
        .max_by(|&a, &b| base_utility[a].total_cmp(&base_utility[b]))
        .unwrap();
    let lowest_remaining = (0..3).find(|&j| j != top).unwrap();
    second == lowest_remaining
}

fn argmax_choice(config: &ScenarioConfig, base: &[f64; 3], ic: u8, m: u8) -> u8 {
    argmax(base, |k| {
        config.margin_shift[k] * f64::from(m)
            + (config.gamma[k] + config.gamma_margin[k] * f64::from(m)) * f64::from(ic)
    }) as u8
}

/// Index of the maximal utility; ties break to the lowest option index.
fn argmax(base: &[f64; 3], extra: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_u = base[0] + extra(0);
    for k in 1..3 {
        let u = base[k] + extra(k);
        if u > best_u {
            best = k;
            best_u = u;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::agent::check_invariants;
    use crate::simlab::scenario::Law;

    #[test]
    fn pure_compliers_track_instrument() {
        let cfg = ScenarioConfig {
            share_never: 0.0,
            share_complier: 1.0,
            share_always: 0.0,
            population_size: 500,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        for a in &pop {
            assert_eq!(a.ic(), u8::from(a.z));
        }
    }

    #[test]
    fn constant_delta_mean_exact() {
        let cfg = ScenarioConfig {
            delta0: Law::Constant(0.3),
            population_size: 200,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        for a in &pop {
            assert_eq!(a.delta0(), 0.3);
        }
        let mut mean = 0.0;
        for (i, a) in pop.iter().enumerate() {
            mean += (a.delta0() - mean) / (i + 1) as f64;
        }
        assert_eq!(mean, 0.3);
    }

    #[test]
    fn seeded_draws_bit_identical() {
        let cfg = ScenarioConfig { population_size: 300, seed: 99, ..ScenarioConfig::default() };
        let a = draw_population(&cfg).unwrap();
        let b = draw_population(&cfg).unwrap();
        assert_eq!(a, b);
        let c = draw_population(&cfg.with_seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invariants_hold_across_scenarios() {
        for (gamma0, margin_law, restrictive) in [
            (0.0, MarginLaw::Ranking, false),
            (0.5, MarginLaw::Ranking, false),
            (0.5, MarginLaw::Bernoulli(0.5), false),
            (0.9, MarginLaw::Bernoulli(0.3), true),
        ] {
            let cfg = ScenarioConfig {
                population_size: 2000,
                gamma: [gamma0, 0.0, 0.0],
                gamma_margin: [0.4, 0.0, 0.0],
                margin_shift: [0.0, 0.2, 0.0],
                margin_law,
                restrictive_preferences: restrictive,
                delta0: Law::Normal { mean: 0.3, sd: 0.2 },
                selection_strength: 0.7,
                level_selection: 0.4,
                ..ScenarioConfig::default()
            };
            let pop = draw_population(&cfg).unwrap();
            let violations = check_invariants(&pop);
            assert!(violations.is_empty(), "{violations:?}");
            if restrictive {
                assert!(pop.iter().all(|a| !a.margin));
            }
        }
    }

    #[test]
    fn independence_of_instrument() {
        // Sample correlation between z and each potential outcome vanishes
        // at the 1/√N rate; bound 5/√N at N = 1e5.
        let cfg = ScenarioConfig {
            population_size: 100_000,
            delta0: Law::Normal { mean: 0.3, sd: 0.5 },
            y_base: Law::Normal { mean: 1.0, sd: 1.0 },
            gamma: [0.5, 0.0, 0.0],
            selection_strength: 0.5,
            ..ScenarioConfig::default()
        };
        let pop = draw_population(&cfg).unwrap();
        let n = pop.len() as f64;
        let bound = 5.0 / n.sqrt();
        let z: Vec<f64> = pop.iter().map(|a| f64::from(u8::from(a.z))).collect();
        let corr = |vals: &[f64]| -> f64 {
            let mz = z.iter().sum::<f64>() / n;
            let mv = vals.iter().sum::<f64>() / n;
            let cov: f64 =
                z.iter().zip(vals).map(|(a, b)| (a - mz) * (b - mv)).sum::<f64>() / n;
            let vz = z.iter().map(|a| (a - mz) * (a - mz)).sum::<f64>() / n;
            let vv = vals.iter().map(|b| (b - mv) * (b - mv)).sum::<f64>() / n;
            if vz == 0.0 || vv == 0.0 {
                0.0
            } else {
                cov / (vz * vv).sqrt()
            }
        };
        for k in 0..3 {
            for ic in 0..2 {
                let col: Vec<f64> = pop.iter().map(|a| a.y_potential[k][ic]).collect();
                assert!(corr(&col).abs() < bound, "y[{k}][{ic}] correlates with z");
            }
        }
        for (label, col) in [
            ("ic0", pop.iter().map(|a| f64::from(a.ic0())).collect::<Vec<_>>()),
            ("ic1", pop.iter().map(|a| f64::from(a.ic1())).collect::<Vec<_>>()),
            ("omega0", pop.iter().map(|a| a.omega0(1)).collect::<Vec<_>>()),
            ("margin", pop.iter().map(|a| f64::from(u8::from(a.margin))).collect::<Vec<_>>()),
        ] {
            assert!(corr(&col).abs() < bound, "{label} correlates with z");
        }
    }

    #[test]
    fn ranking_margin_cases() {
        // Top = 0, second = 1 → next-best is the lowest remaining {1,2} → 1.
        assert!(ranking_margin(&[2.0, 1.0, 0.0]));
        // Top = 0, second = 2 → lowest remaining is 1 → margin 0.
        assert!(!ranking_margin(&[2.0, 0.0, 1.0]));
        // Top = 1, second = 0 → lowest remaining {0,2} → 0 → margin 1.
        assert!(ranking_margin(&[1.0, 2.0, 0.0]));
        // Top = 2, second = 1 → lowest remaining {0,1} is 0 → margin 0.
        assert!(!ranking_margin(&[0.0, 1.0, 2.0]));
    }
}
