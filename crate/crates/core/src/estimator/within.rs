//! Two-way fixed-effects demeaning by alternating projections.

use crate::error::{Error, Result};

use super::FixedEffects;

pub const WITHIN_TOL: f64 = 1e-10;
pub const WITHIN_MAX_SWEEPS: usize = 500;

/// Group means subtracted in place; returns the largest shift applied.
fn demean_by(columns: &mut [Vec<f64>], groups: &[usize], n_groups: usize) -> f64 {
    let mut max_shift = 0.0f64;
    let mut sums = vec![0.0f64; n_groups];
    let mut counts = vec![0usize; n_groups];
    for col in columns.iter_mut() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (v, &g) in col.iter().zip(groups) {
            sums[g] += *v;
            counts[g] += 1;
        }
        for (s, &c) in sums.iter_mut().zip(&counts) {
            if c > 0 {
                *s /= c as f64;
            }
        }
        for (v, &g) in col.iter_mut().zip(groups) {
            *v -= sums[g];
        }
        for &m in &sums {
            max_shift = max_shift.max(m.abs());
        }
    }
    max_shift
}

/// Removes county and/or year means from every column by alternating
/// projections until the largest cell change in a sweep falls below
/// `WITHIN_TOL`. Equals the least-squares projection on the corresponding
/// dummy set, so transformed columns are orthogonal to every county and year
/// indicator. Returns the number of sweeps.
pub fn within_transform_columns(
    columns: &mut [Vec<f64>],
    county: &[usize],
    year: &[usize],
    n_counties: usize,
    n_years: usize,
    fe: FixedEffects,
) -> Result<usize> {
    if !fe.county && !fe.year {
        return Ok(0);
    }
    if fe.county && fe.year && (n_counties < 2 || n_years < 2) {
        return Err(Error::Numeric(format!(
            "two-way fixed effects need ≥2 counties and ≥2 years, got {n_counties} and {n_years}"
        )));
    }
    for sweep in 1..=WITHIN_MAX_SWEEPS {
        let mut shift = 0.0f64;
        if fe.county {
            shift = shift.max(demean_by(columns, county, n_counties));
        }
        if fe.year {
            shift = shift.max(demean_by(columns, year, n_years));
        }
        if shift < WITHIN_TOL {
            return Ok(sweep);
        }
    }
    Err(Error::WithinNonConvergence(WITHIN_MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FE_BOTH: FixedEffects = FixedEffects { county: true, year: true };
    const FE_YEAR: FixedEffects = FixedEffects { county: false, year: true };

    #[test]
    fn single_group_year_fe_subtracts_year_means() {
        // One county, two years with two rows each.
        let county = vec![0, 0, 0, 0];
        let year = vec![0, 0, 1, 1];
        let mut cols = vec![vec![1.0, 3.0, 10.0, 14.0]];
        within_transform_columns(&mut cols, &county, &year, 1, 2, FE_YEAR).unwrap();
        assert_eq!(cols[0], vec![-1.0, 1.0, -2.0, 2.0]);
    }

    #[test]
    fn balanced_two_by_two_double_demeaning() {
        // x_ct minus county mean minus year mean plus grand mean:
        // x = [1, 2; 5, 9] over counties {0,1} × years {0,1}.
        // county means (1.5, 7), year means (3, 5.5), grand 4.25.
        let county = vec![0, 0, 1, 1];
        let year = vec![0, 1, 0, 1];
        let mut cols = vec![vec![1.0, 2.0, 5.0, 9.0]];
        within_transform_columns(&mut cols, &county, &year, 2, 2, FE_BOTH).unwrap();
        let expect = [
            1.0 - 1.5 - 3.0 + 4.25,
            2.0 - 1.5 - 5.5 + 4.25,
            5.0 - 7.0 - 3.0 + 4.25,
            9.0 - 7.0 - 5.5 + 4.25,
        ];
        for (got, want) in cols[0].iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn orthogonal_to_group_indicators() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n_counties = 7;
        let n_years = 5;
        let mut county = Vec::new();
        let mut year = Vec::new();
        for c in 0..n_counties {
            for t in 0..n_years {
                // Unbalanced: skip some cells.
                if (c + t) % 6 == 0 {
                    continue;
                }
                county.push(c);
                year.push(t);
            }
        }
        let n = county.len();
        let mut cols = vec![
            (0..n).map(|_| rng.random_range(-5.0..5.0)).collect::<Vec<f64>>(),
            (0..n).map(|_| rng.random_range(0.0..100.0)).collect::<Vec<f64>>(),
        ];
        within_transform_columns(&mut cols, &county, &year, n_counties, n_years, FE_BOTH).unwrap();
        for col in &cols {
            for g in 0..n_counties {
                let dot: f64 =
                    col.iter().zip(&county).filter(|(_, &c)| c == g).map(|(v, _)| v).sum();
                assert!(dot.abs() < 1e-8, "county dot {dot}");
            }
            for g in 0..n_years {
                let dot: f64 = col.iter().zip(&year).filter(|(_, &t)| t == g).map(|(v, _)| v).sum();
                assert!(dot.abs() < 1e-8, "year dot {dot}");
            }
        }
    }

    #[test]
    fn degenerate_two_way_rejected() {
        let mut cols = vec![vec![1.0, 2.0]];
        let r = within_transform_columns(&mut cols, &[0, 0], &[0, 1], 1, 2, FE_BOTH);
        assert!(r.is_err());
    }
}
