//! Land-use preference ranking.
//!
//! Each county-year gets a strict ranking of the four uses from its
//! urban/rural status and its solar and wind regulation codes. Rank 1 is
//! always Agriculture (rural) or Residential (urban); a banned renewable is
//! ranked fourth; unbanned renewables order by ascending restriction code;
//! positions the flowchart leaves open are filled by a seeded coin flip so
//! reranking is reproducible and a re-randomization is a base-seed change.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::panel::{LandUse, Panel, RegulationLevel};
use crate::seed::observation_seed;

/// A strict preference ranking: a bijection from the four uses onto ranks
/// 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreferenceRanking {
    /// Rank per use, indexed by `LandUse::code()`.
    ranks: [u8; 4],
    /// Whether any position was filled by a random tie-break.
    pub tie_broken: bool,
    /// Seed that drove the tie-break draws.
    pub seed_used: u64,
}

impl PreferenceRanking {
    pub fn rank(&self, land_use: LandUse) -> u8 {
        self.ranks[land_use.code()]
    }

    pub fn use_at_rank(&self, rank: u8) -> LandUse {
        debug_assert!((1..=4).contains(&rank));
        LandUse::ALL
            .into_iter()
            .find(|u| self.rank(*u) == rank)
            .expect("ranks form a bijection onto 1..=4")
    }

    /// The rank-2 use: the next-best alternative to the top choice.
    pub fn next_best(&self) -> LandUse {
        self.use_at_rank(2)
    }

    /// Highest-ranked use once `chosen` is excluded. When `chosen` holds
    /// rank 1 this is the rank-2 use; otherwise it is the rank-1 use.
    pub fn next_best_excluding(&self, chosen: LandUse) -> LandUse {
        LandUse::ALL
            .into_iter()
            .filter(|u| *u != chosen)
            .min_by_key(|u| self.rank(*u))
            .expect("three uses remain")
    }

    pub fn ranks(&self) -> [u8; 4] {
        self.ranks
    }

    fn from_ranks(ranks: [u8; 4], tie_broken: bool, seed_used: u64) -> Self {
        debug_assert!({
            let mut seen = [false; 4];
            ranks.iter().for_each(|&r| seen[(r - 1) as usize] = true);
            seen == [true; 4]
        });
        PreferenceRanking { ranks, tie_broken, seed_used }
    }
}

/// Ranks one county-year. `metro`: true = urban, false = rural. All
/// randomness comes from `seed`; identical inputs and seed give an identical
/// ranking.
pub fn rank_county(
    metro: bool,
    solar_reg: RegulationLevel,
    wind_reg: RegulationLevel,
    seed: u64,
) -> PreferenceRanking {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = [0u8; 4];
    let mut set = |u: LandUse, r: u8| ranks[u.code()] = r;

    // Rank 1 and the non-renewable filler swap roles across the two branches.
    let (first, filler) = if metro {
        (LandUse::Residential, LandUse::Agriculture)
    } else {
        (LandUse::Agriculture, LandUse::Residential)
    };
    set(first, 1);

    let mut tie_broken = false;
    // Fills `a` and `b` into ranks (lo, lo+1) in random order.
    let mut fill_random = |set: &mut dyn FnMut(LandUse, u8), a: LandUse, b: LandUse, lo: u8| {
        if rng.random_bool(0.5) {
            set(a, lo);
            set(b, lo + 1);
        } else {
            set(b, lo);
            set(a, lo + 1);
        }
    };

    match (solar_reg.is_ban(), wind_reg.is_ban()) {
        (true, true) => {
            set(filler, 2);
            fill_random(&mut set, LandUse::Solar, LandUse::Wind, 3);
            tie_broken = true;
        }
        (true, false) => {
            set(LandUse::Solar, 4);
            fill_random(&mut set, LandUse::Wind, filler, 2);
            tie_broken = true;
        }
        (false, true) => {
            set(LandUse::Wind, 4);
            fill_random(&mut set, LandUse::Solar, filler, 2);
            tie_broken = true;
        }
        (false, false) => {
            set(filler, 4);
            // Lower restriction code ranks higher; random only on exact ties.
            if solar_reg.code() < wind_reg.code() {
                set(LandUse::Solar, 2);
                set(LandUse::Wind, 3);
            } else if wind_reg.code() < solar_reg.code() {
                set(LandUse::Wind, 2);
                set(LandUse::Solar, 3);
            } else {
                fill_random(&mut set, LandUse::Solar, LandUse::Wind, 2);
                tie_broken = true;
            }
        }
    }

    PreferenceRanking::from_ranks(ranks, tie_broken, seed)
}

/// One ranked county-year, as written to the rankings CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedObservation {
    pub county_id: String,
    pub year: i32,
    pub ranking: PreferenceRanking,
}

/// Rankings for a panel, keyed by (county_id, year).
#[derive(Debug, Clone, Default)]
pub struct RankingSet {
    pub records: Vec<RankedObservation>,
    index: BTreeMap<(String, i32), usize>,
}

impl RankingSet {
    pub fn from_records(records: Vec<RankedObservation>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert((r.county_id.clone(), r.year), i).is_some() {
                return Err(Error::DuplicateKey { county_id: r.county_id.clone(), year: r.year });
            }
        }
        Ok(RankingSet { records, index })
    }

    pub fn get(&self, county_id: &str, year: i32) -> Option<&PreferenceRanking> {
        self.index
            .get(&(county_id.to_string(), year))
            .map(|&i| &self.records[i].ranking)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Ranks every observation of a panel. The per-observation seed is derived
/// from (base_seed, county_id, year), so each row reranks independently and
/// the whole set reranks by changing base_seed alone.
pub fn rank_panel(panel: &Panel, base_seed: u64) -> RankingSet {
    let records = panel
        .observations
        .iter()
        .map(|obs| {
            let seed = observation_seed(base_seed, &obs.county_id, obs.year);
            RankedObservation {
                county_id: obs.county_id.clone(),
                year: obs.year,
                ranking: rank_county(
                    obs.metro == 1,
                    obs.solar_regulation,
                    obs.wind_regulation,
                    seed,
                ),
            }
        })
        .collect();
    RankingSet::from_records(records).expect("panel keys are unique")
}

/// 4×4 count table: uses in row order Agriculture/Solar/Wind/Residential,
/// ranks 1..=4 in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RankTable {
    pub counts: [[u64; 4]; 4],
}

impl RankTable {
    pub fn count(&self, land_use: LandUse, rank: u8) -> u64 {
        self.counts[land_use.code()][(rank - 1) as usize]
    }

    pub fn row_sum(&self, land_use: LandUse) -> u64 {
        self.counts[land_use.code()].iter().sum()
    }

    pub fn column_sum(&self, rank: u8) -> u64 {
        self.counts.iter().map(|row| row[(rank - 1) as usize]).sum()
    }
}

impl std::fmt::Display for RankTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<14} {:>8} {:>8} {:>8} {:>8}", "Land Use", "1", "2", "3", "4")?;
        for land_use in LandUse::ALL {
            writeln!(
                f,
                "{:<14} {:>8} {:>8} {:>8} {:>8}",
                land_use.label(),
                self.count(land_use, 1),
                self.count(land_use, 2),
                self.count(land_use, 3),
                self.count(land_use, 4)
            )?;
        }
        Ok(())
    }
}

/// Counts (use, rank) cells; every row and column of the result sums to the
/// number of rankings.
pub fn tabulate_rankings<'a, I>(rankings: I) -> RankTable
where
    I: IntoIterator<Item = &'a PreferenceRanking>,
{
    let mut table = RankTable::default();
    for r in rankings {
        for land_use in LandUse::ALL {
            table.counts[land_use.code()][(r.rank(land_use) - 1) as usize] += 1;
        }
    }
    table
}

// ---------------------------------------------------------------------------
// Rankings CSV
// ---------------------------------------------------------------------------

const RANKING_HEADER: [&str; 8] = [
    "county_id",
    "year",
    "rank_agriculture",
    "rank_solar",
    "rank_wind",
    "rank_residential",
    "next_best",
    "seed",
];

pub fn write_rankings(set: &RankingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    w.write_record(RANKING_HEADER)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    for r in &set.records {
        w.write_record([
            r.county_id.as_str(),
            &r.year.to_string(),
            &r.ranking.rank(LandUse::Agriculture).to_string(),
            &r.ranking.rank(LandUse::Solar).to_string(),
            &r.ranking.rank(LandUse::Wind).to_string(),
            &r.ranking.rank(LandUse::Residential).to_string(),
            r.ranking.next_best().name(),
            &r.ranking.seed_used.to_string(),
        ])
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_rankings(path: impl AsRef<Path>) -> Result<RankingSet> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?
        .clone();
    let mut cols = Vec::with_capacity(RANKING_HEADER.len());
    for name in RANKING_HEADER {
        let pos = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            column: name.to_string(),
            path: path.to_path_buf(),
        })?;
        cols.push(pos);
    }
    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv { path: path.to_path_buf(), source: e })?;
        let get = |j: usize| record.get(cols[j]).unwrap_or("").trim();
        let parse_rank = |j: usize, name: &str| -> Result<u8> {
            let raw = get(j);
            let r: u8 = raw.parse().map_err(|_| Error::BadField {
                row,
                column: name.to_string(),
                value: raw.to_string(),
                wanted: "rank 1..=4",
            })?;
            if !(1..=4).contains(&r) {
                return Err(Error::BadField {
                    row,
                    column: name.to_string(),
                    value: raw.to_string(),
                    wanted: "rank 1..=4",
                });
            }
            Ok(r)
        };
        let ranks = [
            parse_rank(2, "rank_agriculture")?,
            parse_rank(3, "rank_solar")?,
            parse_rank(4, "rank_wind")?,
            parse_rank(5, "rank_residential")?,
        ];
        let mut seen = [false; 4];
        for &r in &ranks {
            seen[(r - 1) as usize] = true;
        }
        if seen != [true; 4] {
            return Err(Error::BadField {
                row,
                column: "ranks".to_string(),
                value: format!("{ranks:?}"),
                wanted: "bijection onto 1..=4",
            });
        }
        let seed: u64 = get(7).parse().map_err(|_| Error::BadField {
            row,
            column: "seed".to_string(),
            value: get(7).to_string(),
            wanted: "u64 seed",
        })?;
        let ranking = PreferenceRanking { ranks, tie_broken: false, seed_used: seed };
        let next_best = LandUse::parse(get(6)).ok_or_else(|| Error::BadField {
            row,
            column: "next_best".to_string(),
            value: get(6).to_string(),
            wanted: "land use name",
        })?;
        if ranking.next_best() != next_best {
            return Err(Error::BadField {
                row,
                column: "next_best".to_string(),
                value: get(6).to_string(),
                wanted: "the rank-2 use",
            });
        }
        let year: i32 = get(1).parse().map_err(|_| Error::BadField {
            row,
            column: "year".to_string(),
            value: get(1).to_string(),
            wanted: "year",
        })?;
        records.push(RankedObservation { county_id: get(0).to_string(), year, ranking });
    }
    RankingSet::from_records(records)
}
