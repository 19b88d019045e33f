//! One simulated agent with its full counterfactual record.

/// Compliance type: the pair of potential incomes (Ic when z = 0, Ic when
/// z = 1). Monotonicity Ic₀ ≤ Ic₁ holds by construction for all three types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplianceType {
    NeverTaker,
    Complier,
    AlwaysTaker,
}

impl ComplianceType {
    pub fn incomes(self) -> (u8, u8) {
        match self {
            ComplianceType::NeverTaker => (0, 0),
            ComplianceType::Complier => (0, 1),
            ComplianceType::AlwaysTaker => (1, 1),
        }
    }

    pub fn is_complier(self) -> bool {
        self == ComplianceType::Complier
    }
}

/// Full potential-outcome record for one agent. Everything the estimand
/// algebra needs — potential outcomes over (option, income), potential
/// choices over (income, margin state), the margin state itself — is stored,
/// so oracle estimands are plain averages with no estimation involved.
///
/// The margin state is a single per-agent switch shared by every option:
/// that is the only construction in which the realized choice is one-hot
/// while each option's realized indicator equals its potential choice
/// evaluated at the agent's own margin, for all options at once. Mixed
/// margins therefore means variation across agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDraw {
    pub z: bool,
    pub compliance: ComplianceType,
    /// y_potential[k][ic]: general outcome under option k at income level ic.
    pub y_potential: [[f64; 2]; 3],
    /// Latent base utilities (value + taste + selection coupling), income
    /// and margin terms excluded; drives the preference ranking.
    pub base_utility: [f64; 3],
    /// choice_at[ic][m]: the option chosen at income ic under margin state m.
    pub choice_at: [[u8; 2]; 2],
    /// The agent's margin state M (true ⇔ the relevant comparison is against
    /// the lowest-indexed remaining option).
    pub margin: bool,
}

impl AgentDraw {
    pub fn ic0(&self) -> u8 {
        self.compliance.incomes().0
    }

    pub fn ic1(&self) -> u8 {
        self.compliance.incomes().1
    }

    /// Realized income level: Ic = Ic₀ + (Ic₁ − Ic₀)·z.
    pub fn ic(&self) -> u8 {
        if self.z {
            self.ic1()
        } else {
            self.ic0()
        }
    }

    /// Margin indicator m_k for option k (shared across options).
    pub fn m_k(&self, _k: usize) -> u8 {
        u8::from(self.margin)
    }

    /// Potential choice indicator d^k_ic(m).
    pub fn d_at(&self, ic: u8, m: u8, k: usize) -> u8 {
        u8::from(self.choice_at[ic as usize][m as usize] == k as u8)
    }

    pub fn realized_choice(&self) -> usize {
        self.choice_at[self.ic() as usize][usize::from(self.margin)] as usize
    }

    /// Realized choice indicator d^k = d^k_Ic(M).
    pub fn d(&self, k: usize) -> u8 {
        u8::from(self.realized_choice() == k)
    }

    /// Realized outcome y = y⁰ + (y¹−y⁰)d¹ + (y²−y⁰)d² at the realized
    /// income level.
    pub fn y(&self) -> f64 {
        self.y_potential[self.realized_choice()][self.ic() as usize]
    }

    /// Potential outcome at income level `ic` for the realized choice.
    pub fn y_at_income(&self, ic: u8) -> f64 {
        self.y_potential[self.realized_choice()][ic as usize]
    }

    /// Δ⁰ = y₁⁰ − y₀⁰: income elasticity of the outcome under option 0.
    pub fn delta0(&self) -> f64 {
        self.y_potential[0][1] - self.y_potential[0][0]
    }

    /// Δᵏ = (y₁ᵏ − y₀ᵏ) − (y₁⁰ − y₀⁰) for k = 1, 2.
    pub fn delta_shift(&self, k: usize) -> f64 {
        debug_assert!(k == 1 || k == 2);
        (self.y_potential[k][1] - self.y_potential[k][0]) - self.delta0()
    }

    /// ρₖ = y₀ᵏ − y₀⁰: return to option k versus option 0 at income 0.
    pub fn option_return(&self, k: usize) -> f64 {
        self.y_potential[k][0] - self.y_potential[0][0]
    }

    /// Ω₀ᵏ = d₁ᵏ(0) − d₀ᵏ(0): income effect on choosing k at margin 0.
    pub fn omega0(&self, k: usize) -> f64 {
        f64::from(self.d_at(1, 0, k)) - f64::from(self.d_at(0, 0, k))
    }

    /// Ω₁ᵏ = d₁ᵏ(1) − d₀ᵏ(1): income effect on choosing k at margin 1.
    pub fn omega1(&self, k: usize) -> f64 {
        f64::from(self.d_at(1, 1, k)) - f64::from(self.d_at(0, 1, k))
    }

    /// Γ₀ᵏ = d₀ᵏ(1) − d₀ᵏ(0): margin effect on choosing k at income 0.
    pub fn gamma0(&self, k: usize) -> f64 {
        f64::from(self.d_at(0, 1, k)) - f64::from(self.d_at(0, 0, k))
    }

    /// The option that would be chosen if `k` were removed: the remaining
    /// option with the highest base utility.
    pub fn next_best_excluding(&self, k: usize) -> usize {
        (0..3)
            .filter(|&j| j != k)
            .max_by(|&a, &b| self.base_utility[a].total_cmp(&self.base_utility[b]))
            .expect("two options remain")
    }
}

/// Checks every stored-counterfactual invariant; returns one message per
/// violation. Used by tests and by the verification harness before trusting
/// a drawn population.
pub fn check_invariants(pop: &[AgentDraw]) -> Vec<String> {
    let mut out = Vec::new();
    for (i, a) in pop.iter().enumerate() {
        if a.ic0() > a.ic1() {
            out.push(format!("agent {i}: monotonicity violated (ic0 > ic1)"));
        }
        for ic in 0..2u8 {
            for m in 0..2u8 {
                let total: u8 = (0..3).map(|k| a.d_at(ic, m, k)).sum();
                if total != 1 {
                    out.push(format!("agent {i}: {total} choices at (ic={ic}, m={m})"));
                }
            }
        }
        let d_total: u8 = (0..3).map(|k| a.d(k)).sum();
        if d_total != 1 {
            out.push(format!("agent {i}: realized choices sum to {d_total}"));
        }
        // y = y⁰ + (y¹−y⁰)d¹ + (y²−y⁰)d² at the realized income level.
        let ic = a.ic() as usize;
        let reconstructed = a.y_potential[0][ic]
            + (a.y_potential[1][ic] - a.y_potential[0][ic]) * f64::from(a.d(1))
            + (a.y_potential[2][ic] - a.y_potential[0][ic]) * f64::from(a.d(2));
        if (a.y() - reconstructed).abs() > 1e-12 {
            out.push(format!("agent {i}: realized outcome inconsistent with potentials"));
        }
        // The realized indicator equals the potential choice at the agent's
        // own (income, margin) for every option.
        for k in 0..3 {
            if a.d(k) != a.d_at(a.ic(), a.m_k(k), k) {
                out.push(format!("agent {i}: d^{k} differs from d^{k}_ic(m_k)"));
            }
        }
    }
    out
}
