//! Command-line pipeline runner.
//!
//! Exit codes: 0 success, 2 input/validation error, 3 scenario-hypothesis
//! refusal, 4 numeric or verification failure. All randomness flows from
//! `--seed`; every run writes a manifest into the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use landuse_iv::error::Error;
use landuse_iv::estimator::{self, DesignSpec, TableColumn};
use landuse_iv::instrument::{
    attach_instrument, build_log_income, count_high_heat_days, load_prices, load_temperatures,
    HeatDayCount, SeasonWindow, GROWING_SEASON,
};
use landuse_iv::leasecalc::{
    crop_lease_total, solar_total, wind_total, ParcelSpec, RateCard, WindScheme,
};
use landuse_iv::manifest::RunManifest;
use landuse_iv::panel::{
    load_panel, load_panel_with_report, render_violations, summarize, write_panel, ColumnSchema,
};
use landuse_iv::ranking::{rank_panel, tabulate_rankings, write_rankings};
use landuse_iv::simlab::{
    draw_population, ols_bias_report, run_replications, Proposition, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "landuse-iv",
    version,
    about = "County land-use panels: preference ranking, weather-instrument construction, \
             two-way fixed-effects 2SLS, lease payoffs, and a seeded simulation lab"
)]
struct Cli {
    /// Base seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Output directory (created if absent).
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Column-schema map for panel CSVs (key=column lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a panel and print its validation report and summary statistics.
    Validate { panel: PathBuf },

    /// Rank land-use preferences for every county-year.
    Rank { panel: PathBuf },

    /// Count high-heat days and build log income, merging both into the panel.
    Instrument {
        panel: PathBuf,
        /// Daily temperature CSV: county_id,date,tavg_f.
        #[arg(long)]
        temps: PathBuf,
        /// Price CSV: year,price ($/bu).
        #[arg(long)]
        prices: PathBuf,
        /// Threshold in °F; days strictly above it count.
        #[arg(long, default_value_t = 83.0)]
        threshold: f64,
        /// Season window, MM-DD:MM-DD.
        #[arg(long)]
        window: Option<String>,
        /// Maximum tolerated fraction of unmatched panel rows.
        #[arg(long, default_value_t = 0.05)]
        match_tolerance: f64,
    },

    /// Run a regression spec: the unconditional column plus, with rankings,
    /// the four next-best-conditioned columns.
    Estimate {
        panel: PathBuf,
        /// Design spec file (key=value).
        #[arg(long)]
        spec: PathBuf,
        /// Rankings CSV from `rank`; required for subsample columns.
        #[arg(long)]
        rankings: Option<PathBuf>,
        /// Table title.
        #[arg(long, default_value = "Estimates")]
        title: String,
    },

    /// Draw scenario replications and verify propositions against oracles.
    Montecarlo {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Worker threads for replications.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Override the scenario's `verify` list (comma-separated).
        #[arg(long)]
        propositions: Option<String>,
        /// Also write the naive-estimand decomposition for the target option.
        #[arg(long)]
        bias_report: bool,
    },

    /// Itemized annual lease payoffs for one parcel.
    Lease {
        /// Parcel file (key=value); defaults to the representative 80-acre
        /// parcel.
        #[arg(long)]
        parcel: Option<PathBuf>,
        /// Rate card (key=cents); overrides the midpoint card.
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Require every rate to come from --rates (no midpoint defaults).
        #[arg(long)]
        no_default_rates: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> ExitCode {
    match e {
        Error::HypothesisViolated { .. } => ExitCode::from(3),
        Error::Numeric(_)
        | Error::RankDeficient(_)
        | Error::WithinNonConvergence(_)
        | Error::TooFewObservations { .. } => ExitCode::from(4),
        _ => ExitCode::from(2),
    }
}

fn schema_for(cli_config: &Option<PathBuf>) -> Result<ColumnSchema, Error> {
    match cli_config {
        Some(path) => ColumnSchema::load(path),
        None => Ok(ColumnSchema::identity()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    let schema = schema_for(&cli.config)?;
    let out = |name: &str| cli.out_dir.join(name);

    match &cli.command {
        Command::Validate { panel } => {
            let (loaded, violations) = load_panel_with_report(panel, &schema)?;
            let report = render_violations(&violations);
            print!("{report}");
            write_text(&out("validation.txt"), &report)?;
            if violations.is_empty() && !loaded.is_empty() {
                let summary = summarize(&loaded)?;
                println!("{summary}");
                write_text(&out("summary.txt"), &format!("{summary}\n"))?;
            }
            let mut manifest = RunManifest::new("validate", cli.seed);
            manifest.add_input(panel)?;
            manifest.add_output(&out("validation.txt"))?;
            manifest.write(out("manifest-validate.txt"))?;
            Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }

        Command::Rank { panel } => {
            let loaded = load_panel(panel, &schema)?;
            let rankings = rank_panel(&loaded, cli.seed);
            write_rankings(&rankings, out("rankings.csv"))?;
            let table = tabulate_rankings(rankings.records.iter().map(|r| &r.ranking));
            let text = format!("{table}");
            print!("{text}");
            write_text(&out("rank_table.txt"), &text)?;
            let mut csv = String::from("land_use,rank1,rank2,rank3,rank4\n");
            for land_use in landuse_iv::LandUse::ALL {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    land_use.name(),
                    table.count(land_use, 1),
                    table.count(land_use, 2),
                    table.count(land_use, 3),
                    table.count(land_use, 4)
                ));
            }
            write_text(&out("rank_table.csv"), &csv)?;
            let mut manifest = RunManifest::new("rank", cli.seed);
            manifest.add_input(panel)?;
            for o in ["rankings.csv", "rank_table.txt", "rank_table.csv"] {
                manifest.add_output(&out(o))?;
            }
            manifest.write(out("manifest-rank.txt"))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Instrument { panel, temps, prices, threshold, window, match_tolerance } => {
            let mut loaded = load_panel(panel, &schema)?;
            let window = match window {
                Some(w) => SeasonWindow::parse(w)?,
                None => GROWING_SEASON,
            };
            let series = load_temperatures(temps)?;
            let price_table = load_prices(prices)?;
            let mut heat: BTreeMap<(String, i32), HeatDayCount> = BTreeMap::new();
            let mut incomes: BTreeMap<(String, i32), f64> = BTreeMap::new();
            for obs in &loaded.observations {
                let key = (obs.county_id.clone(), obs.year);
                if let Some(s) = series.get(&obs.county_id) {
                    heat.insert(key.clone(), count_high_heat_days(s, obs.year, window, *threshold));
                }
                if let (Some(cy), Some(price)) = (obs.corn_yield, price_table.get(&obs.year)) {
                    incomes.insert(key, build_log_income(cy, *price)?);
                }
            }
            let report = attach_instrument(&mut loaded, &heat, &incomes, *match_tolerance)?;
            write_panel(&loaded, out("panel_with_instrument.csv"))?;
            let text = format!(
                "threshold: {threshold} F  window: {window}\n{}",
                report.render()
            );
            print!("{text}");
            write_text(&out("attach_report.txt"), &text)?;
            let mut manifest = RunManifest::new("instrument", cli.seed);
            for i in [panel, temps, prices] {
                manifest.add_input(i)?;
            }
            manifest.add_output(&out("panel_with_instrument.csv"))?;
            manifest.write(out("manifest-instrument.txt"))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Estimate { panel, spec, rankings, title } => {
            let loaded = load_panel(panel, &schema)?;
            let design = DesignSpec::load(spec)?;
            let columns = match rankings {
                Some(rk_path) => {
                    let rk = landuse_iv::ranking::load_rankings(rk_path)?;
                    let mut cols = Vec::new();
                    for hc in estimator::five_column_harness(&design, &loaded, &rk) {
                        match hc.result {
                            Ok(fit) => cols.push(TableColumn::of(hc.label, fit)),
                            Err(Error::EmptySubsample(_)) => {
                                cols.push(TableColumn::empty(hc.label, "empty subsample"))
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    cols
                }
                None => {
                    if design.subsample.is_some() {
                        return Err(Error::InvalidSpec(
                            "spec requests a subsample but no --rankings file was given"
                                .to_string(),
                        ));
                    }
                    vec![TableColumn::of("ALL", estimator::fit(&design, &loaded)?)]
                }
            };
            let text = estimator::render_table(title, &columns);
            print!("{text}");
            write_text(&out("estimates.txt"), &text)?;
            write_text(&out("estimates.csv"), &estimator::table_csv(&columns))?;
            // Nested first stages, when the spec is instrumented.
            let first_stages: Vec<TableColumn> = columns
                .iter()
                .filter_map(|c| {
                    let r = c.result.as_ref()?;
                    let fs = r.first_stage.as_ref()?;
                    Some(TableColumn::of(c.label.clone(), (**fs).clone()))
                })
                .collect();
            if !first_stages.is_empty() {
                let fs_text =
                    estimator::render_table(&format!("{title} - first stage"), &first_stages);
                write_text(&out("first_stage.txt"), &fs_text)?;
            }
            let mut manifest = RunManifest::new("estimate", cli.seed);
            manifest.add_input(panel)?;
            manifest.add_config(spec)?;
            if let Some(r) = rankings {
                manifest.add_input(r)?;
            }
            manifest.add_output(&out("estimates.txt"))?;
            manifest.add_output(&out("estimates.csv"))?;
            manifest.write(out("manifest-estimate.txt"))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Montecarlo { scenario, reps, parallel, propositions, bias_report } => {
            let kv = landuse_iv::kvfile::KvFile::load(scenario)?;
            let mut config = ScenarioConfig::from_kv(&kv)?;
            if config.name == "scenario" {
                if let Some(stem) = scenario.file_stem().and_then(|s| s.to_str()) {
                    config.name = stem.to_string();
                }
            }
            // The scenario's own seed wins; otherwise the global flag seeds it.
            if kv.get("seed").is_none() {
                config.seed = cli.seed;
            }
            let prop_list = match propositions {
                Some(s) => s.split(',').map(str::trim).map(str::to_string).collect(),
                None => config.verify.clone(),
            };
            if prop_list.is_empty() {
                return Err(Error::InvalidScenario(
                    "scenario lists no `verify` propositions and none were passed".to_string(),
                ));
            }
            let props: Vec<Proposition> = prop_list
                .iter()
                .map(|s| {
                    Proposition::parse(s).ok_or_else(|| {
                        Error::InvalidScenario(format!("unknown proposition `{s}`"))
                    })
                })
                .collect::<Result<_, _>>()?;
            let report = run_replications(&config, &props, *reps, *parallel)?;
            let text = report.render();
            print!("{text}");
            write_text(&out("verdicts.txt"), &text)?;
            write_text(&out("verdicts.csv"), &report.to_csv())?;
            if *bias_report {
                let pop = draw_population(&config)?;
                let bias = ols_bias_report(&pop, config.target_option);
                let fmt = |v: Option<f64>| {
                    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| ".".to_string())
                };
                let mut s = format!(
                    "naive estimand decomposition, option {}\n",
                    config.target_option
                );
                s.push_str(&format!("ols_estimand={}\n", fmt(bias.ols_estimand)));
                s.push_str(&format!("selection_term={}\n", fmt(bias.selection_term)));
                s.push_str(&format!("delta_mean={}\n", fmt(bias.delta_mean)));
                s.push_str(&format!(
                    "weights={},{}\nconditionals={},{}\nmixture={}\n",
                    fmt(bias.weights[0]),
                    fmt(bias.weights[1]),
                    fmt(bias.conditionals[0]),
                    fmt(bias.conditionals[1]),
                    fmt(bias.mixture)
                ));
                s.push_str(&format!("identity_gap={}\n", fmt(bias.identity_gap)));
                write_text(&out("bias_report.txt"), &s)?;
            }
            let mut manifest = RunManifest::new("montecarlo", config.seed);
            manifest.add_config(scenario)?;
            manifest.add_output(&out("verdicts.txt"))?;
            manifest.add_output(&out("verdicts.csv"))?;
            manifest.write(out("manifest-montecarlo.txt"))?;
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(4) })
        }

        Command::Lease { parcel, rates, no_default_rates } => {
            let card = match (rates, no_default_rates) {
                (Some(path), true) => RateCard::load(path)?,
                (Some(path), false) => {
                    RateCard::midpoint_with_overrides(&landuse_iv::kvfile::KvFile::load(path)?)?
                }
                (None, _) => RateCard::paper_2024_midpoint(),
            };
            let spec = match parcel {
                Some(path) => ParcelSpec::load(path, card)?,
                None => ParcelSpec::representative_80_acre(card),
            };
            let breakdowns = [
                crop_lease_total(&spec)?,
                wind_total(&spec, WindScheme::PerMegawatt)?,
                wind_total(&spec, WindScheme::PerAcre)?,
                solar_total(&spec)?,
            ];
            let mut text = String::new();
            for b in &breakdowns {
                text.push_str(&format!("{b}\n\n"));
            }
            let mut csv = String::from("lease,total_cents\n");
            for (label, b) in ["crop", "wind_scheme1", "wind_scheme2", "solar"]
                .iter()
                .zip(&breakdowns)
            {
                csv.push_str(&format!("{label},{}\n", b.total_cents));
            }
            print!("{text}");
            write_text(&out("lease.txt"), &text)?;
            write_text(&out("lease.csv"), &csv)?;
            let mut manifest = RunManifest::new("lease", cli.seed);
            if let Some(p) = parcel {
                manifest.add_config(p)?;
            }
            if let Some(r) = rates {
                manifest.add_config(r)?;
            }
            manifest.add_output(&out("lease.txt"))?;
            manifest.add_output(&out("lease.csv"))?;
            manifest.write(out("manifest-lease.txt"))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
