//! File formats and run plumbing: input tables, run configuration,
//! manifests, draws and estimate files, plots, and on-disk synthetic
//! worlds with sealed truths.

pub mod config;
pub mod outputs;
pub mod plot;
pub mod tables;

use std::path::{Path, PathBuf};

use crate::accounts::GroupSizes;
use crate::error::Result;
use crate::geo::{GeoHierarchy, PeriodCalendar};
use crate::obs::ObservationSet;
use crate::synth::{self, SyntheticWorld, SyntheticWorldSpec};

pub use config::{CalendarConfig, InputPaths, ModelSettings, RunConfig, SamplerSettings};
pub use outputs::{
    load_draws, load_estimates, load_truth, sha256_file, write_draws, write_estimates,
    write_truth, Manifest,
};

pub const HIERARCHY_FILE: &str = "hierarchy.csv";
pub const GROUP_SIZES_FILE: &str = "group_sizes.csv";
pub const BIRTHS_FILE: &str = "births.csv";
pub const INTENTION_FILE: &str = "intention_obs.csv";
pub const ABORTION_FILE: &str = "abortion_obs.csv";
pub const MARRIED_SHARE_FILE: &str = "married_share_obs.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.txt";

impl InputPaths {
    /// The canonical six file names under one directory.
    pub fn under(dir: &Path) -> InputPaths {
        InputPaths {
            hierarchy: dir.join(HIERARCHY_FILE),
            group_sizes: dir.join(GROUP_SIZES_FILE),
            births: dir.join(BIRTHS_FILE),
            intention: dir.join(INTENTION_FILE),
            abortion: dir.join(ABORTION_FILE),
            married_share: dir.join(MARRIED_SHARE_FILE),
        }
    }
}

/// Fully validated model inputs, ready to build a prior and a joint model.
#[derive(Debug, Clone)]
pub struct InputBundle {
    pub geo: GeoHierarchy,
    pub cal: PeriodCalendar,
    pub sizes: GroupSizes,
    pub obs: ObservationSet,
}

/// Read and cross-validate every input table a config names.
pub fn load_inputs(cfg: &RunConfig) -> Result<InputBundle> {
    let cal = cfg.calendar.build()?;
    let geo = tables::read_hierarchy(&cfg.resolve(&cfg.inputs.hierarchy))?;
    let sizes = tables::read_group_sizes(&cfg.resolve(&cfg.inputs.group_sizes), &geo, &cal)?;
    let obs = ObservationSet {
        intention: tables::read_intention(&cfg.resolve(&cfg.inputs.intention), &geo, &cal)?,
        abortion: tables::read_abortion(&cfg.resolve(&cfg.inputs.abortion), &geo, &cal)?,
        married_share: tables::read_married_share(
            &cfg.resolve(&cfg.inputs.married_share),
            &geo,
            &cal,
        )?,
        births: tables::read_births(&cfg.resolve(&cfg.inputs.births), &geo, &cal)?,
    };
    obs.validate(geo.n_countries(), cal.n_years(), cal.n_periods())?;
    Ok(InputBundle {
        geo,
        cal,
        sizes,
        obs,
    })
}

/// Write the six input tables under one directory with their canonical
/// names.
pub fn write_inputs(
    dir: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    sizes: &GroupSizes,
    obs: &ObservationSet,
) -> Result<InputPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = InputPaths::under(dir);
    tables::write_hierarchy(&paths.hierarchy, geo)?;
    tables::write_group_sizes(&paths.group_sizes, geo, cal, sizes)?;
    tables::write_births(&paths.births, geo, cal, &obs.births)?;
    tables::write_intention(&paths.intention, geo, cal, &obs.intention)?;
    tables::write_abortion(&paths.abortion, geo, cal, &obs.abortion)?;
    tables::write_married_share(&paths.married_share, geo, cal, &obs.married_share)?;
    Ok(paths)
}

/// Floor adjustment for official counts that may include spontaneous
/// losses: nine tenths of the raw count less one fifth of concurrent live
/// births, never negative. Rows built from this value should be written
/// with the `spontaneous_adjusted` provenance column set.
pub fn prepare_minima_spontaneous_adjustment(raw: f64, births: f64) -> f64 {
    (0.9 * raw - 0.2 * births).max(0.0)
}

/// Generate a synthetic world on disk: `inputs/` with the six tables, a
/// ready-to-run `config.toml`, a manifest, and the generating parameters
/// sealed under `truth/` where no fit configuration may point.
pub fn generate_synthetic_world(
    spec: &SyntheticWorldSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<SyntheticWorld> {
    let world = synth::generate_world(spec, seed)?;
    let inputs_dir = out_dir.join("inputs");
    let truth_dir = out_dir.join("truth");
    std::fs::create_dir_all(&truth_dir)?;
    write_inputs(&inputs_dir, &world.geo, &world.cal, &world.sizes, &world.obs)?;

    let prior = world.prior()?;
    let truth_path = truth_dir.join(TRUTH_FILE);
    write_truth(&truth_path, prior.atlas.names(), &world.truth)?;

    let cfg = RunConfig {
        seed,
        output_dir: PathBuf::from("fit"),
        inputs: InputPaths::under(Path::new("inputs")),
        calendar: CalendarConfig {
            first_year: world.cal.first_year(),
            last_year: world.cal.last_year(),
            period_length: world.cal.period_length(),
            reference_start_year: world.cal.period_start_year(world.cal.reference_period())?,
        },
        sampler: SamplerSettings::default(),
        model: ModelSettings {
            high_income_super_region: spec
                .high_income_super
                .map(|q| world.geo.super_region_id(q)),
            constants: spec.constants.clone(),
        },
        base_dir: out_dir.to_path_buf(),
    };
    let cfg_path = out_dir.join(CONFIG_FILE);
    cfg.save(&cfg_path)?;

    let mut manifest = Manifest::new("synth");
    manifest.insert("seed", seed);
    manifest.insert("spec.super_regions", spec.super_regions);
    manifest.insert("spec.regions_per_super", spec.regions_per_super);
    manifest.insert("spec.countries_per_region", spec.countries_per_region);
    manifest.insert("spec.periods", spec.periods);
    manifest.insert("spec.first_year", spec.first_year);
    manifest.insert("spec.period_length", spec.period_length);
    manifest.insert("spec.reference_period", spec.reference_period);
    manifest.insert("spec.women_per_group", spec.women_per_group);
    manifest.insert(
        "spec.intention_points_per_country",
        spec.intention_points_per_country,
    );
    manifest.insert(
        "spec.intention_ranges_per_country",
        spec.intention_ranges_per_country,
    );
    manifest.insert(
        "spec.abortion_points_per_country",
        spec.abortion_points_per_country,
    );
    manifest.insert(
        "spec.abortion_bounds_per_country",
        spec.abortion_bounds_per_country,
    );
    manifest.insert("spec.indirect_per_country", spec.indirect_per_country);
    manifest.insert(
        "spec.share_observations_per_country",
        spec.share_observations_per_country,
    );
    manifest.insert(
        "spec.births_periods_per_country",
        spec.births_periods_per_country,
    );
    manifest.insert("spec.sparse_country_stride", spec.sparse_country_stride);
    manifest.insert(
        "spec.high_income_super",
        spec.high_income_super
            .map_or("none".to_string(), |q| q.to_string()),
    );
    manifest.insert_file_digest("digest.config", &cfg_path)?;
    manifest.insert_file_digest("digest.truth", &truth_path)?;
    for (key, path) in InputPaths::under(&inputs_dir).entries() {
        manifest.insert_file_digest(&format!("digest.{key}"), path)?;
    }
    manifest.write(&out_dir.join(MANIFEST_FILE))?;

    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounts::N_GROUPS;
    use crate::error::Error;

    fn tiny_world() -> SyntheticWorld {
        let spec = SyntheticWorldSpec {
            super_regions: 1,
            regions_per_super: 2,
            countries_per_region: 2,
            periods: 3,
            reference_period: 2,
            births_periods_per_country: 3,
            ..SyntheticWorldSpec::default()
        };
        synth::generate_world(&spec, 42).unwrap()
    }

    fn write_config(dir: &Path, world: &SyntheticWorld) -> RunConfig {
        let cfg = RunConfig {
            seed: 42,
            output_dir: PathBuf::from("fit"),
            inputs: InputPaths::under(Path::new("inputs")),
            calendar: CalendarConfig {
                first_year: world.cal.first_year(),
                last_year: world.cal.last_year(),
                period_length: world.cal.period_length(),
                reference_start_year: world
                    .cal
                    .period_start_year(world.cal.reference_period())
                    .unwrap(),
            },
            sampler: SamplerSettings::default(),
            model: ModelSettings::default(),
            base_dir: dir.to_path_buf(),
        };
        cfg.save(&dir.join(CONFIG_FILE)).unwrap();
        cfg
    }

    #[test]
    fn inputs_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let world = tiny_world();
        write_inputs(
            &dir.path().join("inputs"),
            &world.geo,
            &world.cal,
            &world.sizes,
            &world.obs,
        )
        .unwrap();
        write_config(dir.path(), &world);

        let cfg = RunConfig::load(&dir.path().join(CONFIG_FILE)).unwrap();
        let bundle = load_inputs(&cfg).unwrap();

        assert_eq!(bundle.obs, world.obs);
        assert_eq!(bundle.geo.n_countries(), world.geo.n_countries());
        for c in 0..world.geo.n_countries() {
            assert_eq!(bundle.geo.country_id(c), world.geo.country_id(c));
            assert_eq!(bundle.geo.country_name(c), world.geo.country_name(c));
            assert_eq!(
                bundle.geo.region_of_country(c),
                world.geo.region_of_country(c)
            );
            for t in 0..world.cal.n_years() {
                for f in 0..N_GROUPS {
                    assert_eq!(
                        bundle.sizes.w(c, t, f).to_bits(),
                        world.sizes.w(c, t, f).to_bits()
                    );
                }
            }
        }
        assert_eq!(bundle.cal.n_periods(), world.cal.n_periods());
        assert_eq!(
            bundle.cal.reference_period(),
            world.cal.reference_period()
        );
    }

    #[test]
    fn minima_preparation_follows_the_stated_rule() {
        assert_eq!(prepare_minima_spontaneous_adjustment(1000.0, 2000.0), 500.0);
        assert_eq!(prepare_minima_spontaneous_adjustment(100.0, 1000.0), 0.0);
        assert_eq!(prepare_minima_spontaneous_adjustment(70.0, 0.0), 63.0);
    }

    #[test]
    fn parse_errors_carry_path_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let world = tiny_world();
        let inputs = dir.path().join("inputs");
        write_inputs(&inputs, &world.geo, &world.cal, &world.sizes, &world.obs).unwrap();

        // corrupt one number on a known line of the group-size table
        let gs_path = inputs.join(GROUP_SIZES_FILE);
        let text = std::fs::read_to_string(&gs_path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let broken = lines[3].rsplit_once(',').unwrap().0.to_string() + ",not-a-number";
        lines[3] = &broken;
        std::fs::write(&gs_path, lines.join("\n") + "\n").unwrap();

        let cfg = write_config(dir.path(), &world);
        let err = load_inputs(&cfg).unwrap_err();
        match err {
            Error::Parse { path, line, msg } => {
                assert!(path.ends_with(GROUP_SIZES_FILE));
                assert_eq!(line, 4);
                assert!(msg.contains("not-a-number"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_labels_and_orphan_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let world = tiny_world();
        let inputs = dir.path().join("inputs");
        write_inputs(&inputs, &world.geo, &world.cal, &world.sizes, &world.obs).unwrap();
        let cfg = write_config(dir.path(), &world);

        // unknown treatment label
        let path = inputs.join(MARRIED_SHARE_FILE);
        let original = std::fs::read_to_string(&path).unwrap();
        std::fs::write(
            &path,
            original.replace(",point\n", ",pointy\n").replace(
                ",minimum\n",
                ",pointy\n",
            ),
        )
        .unwrap();
        let err = load_inputs(&cfg).unwrap_err();
        assert!(err.to_string().contains("pointy"), "{err}");
        std::fs::write(&path, &original).unwrap();

        // orphan country id
        let path = inputs.join(BIRTHS_FILE);
        let original = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = original.lines().map(str::to_string).collect();
        lines[1] = lines[1].replacen(char::is_numeric, "9", 1);
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = load_inputs(&cfg).unwrap_err();
        assert!(
            err.to_string().contains("unknown country id"),
            "{err}"
        );
        std::fs::write(&path, &original).unwrap();

        // a year outside the calendar
        let path = inputs.join(MARRIED_SHARE_FILE);
        let mut lines: Vec<String> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect();
        let cells: Vec<&str> = lines[1].split(',').collect();
        lines[1] = format!("{},2050,{},{}", cells[0], cells[2], cells[3]);
        std::fs::write(&path, lines.join("\n") + "\n").unwrap();
        let err = load_inputs(&cfg).unwrap_err();
        assert!(err.to_string().contains("2050"), "{err}");
    }

    #[test]
    fn group_totals_outside_tolerance_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let world = tiny_world();
        let inputs = dir.path().join("inputs");
        write_inputs(&inputs, &world.geo, &world.cal, &world.sizes, &world.obs).unwrap();
        let cfg = write_config(dir.path(), &world);

        let gs_path = inputs.join(GROUP_SIZES_FILE);
        let original = std::fs::read_to_string(&gs_path).unwrap();
        let id = world.geo.country_id(0);
        let year = world.cal.first_year();
        let sum: f64 = (0..N_GROUPS).map(|f| world.sizes.w(0, 0, f)).sum();

        // a stated total one percent off the group sum
        std::fs::write(
            &gs_path,
            format!("{original}{id},{year},all,{}\n", sum * 1.01),
        )
        .unwrap();
        let err = load_inputs(&cfg).unwrap_err();
        assert!(err.to_string().contains("sum to"), "{err}");
        assert!(err.to_string().contains(&id.to_string()), "{err}");

        // within tolerance passes
        std::fs::write(
            &gs_path,
            format!("{original}{id},{year},all,{}\n", sum * 1.002),
        )
        .unwrap();
        load_inputs(&cfg).unwrap();
    }

    #[test]
    fn truth_directory_is_sealed_from_fits() {
        let dir = tempfile::tempdir().unwrap();
        let world = tiny_world();
        write_inputs(
            &dir.path().join("inputs"),
            &world.geo,
            &world.cal,
            &world.sizes,
            &world.obs,
        )
        .unwrap();
        let mut cfg = write_config(dir.path(), &world);
        cfg.inputs.hierarchy = PathBuf::from("truth/hierarchy.csv");
        cfg.save(&dir.path().join(CONFIG_FILE)).unwrap();

        let err = RunConfig::load(&dir.path().join(CONFIG_FILE)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("truth"), "{err}");
    }

    #[test]
    fn synthetic_world_files_are_deterministic() {
        let spec = SyntheticWorldSpec {
            super_regions: 1,
            regions_per_super: 2,
            countries_per_region: 2,
            periods: 3,
            reference_period: 2,
            births_periods_per_country: 3,
            ..SyntheticWorldSpec::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let dir_c = tempfile::tempdir().unwrap();
        generate_synthetic_world(&spec, 7, dir_a.path()).unwrap();
        generate_synthetic_world(&spec, 7, dir_b.path()).unwrap();
        generate_synthetic_world(&spec, 8, dir_c.path()).unwrap();

        let digest_tree = |root: &Path| {
            let mut files = Vec::new();
            for entry in walk(root) {
                let rel = entry.strip_prefix(root).unwrap().to_path_buf();
                files.push((rel, sha256_file(&entry).unwrap()));
            }
            files.sort();
            files
        };
        let a = digest_tree(dir_a.path());
        let b = digest_tree(dir_b.path());
        let c = digest_tree(dir_c.path());
        assert!(!a.is_empty());
        assert_eq!(a, b);
        assert_ne!(a, c);

        // the generated config is immediately fittable
        let cfg = RunConfig::load(&dir_a.path().join(CONFIG_FILE)).unwrap();
        let bundle = load_inputs(&cfg).unwrap();
        assert_eq!(bundle.obs.len(), {
            let world = synth::generate_world(&spec, 7).unwrap();
            world.obs.len()
        });

        // and the sealed truth loads back exactly
        let world = synth::generate_world(&spec, 7).unwrap();
        let prior = world.prior().unwrap();
        let loaded = load_truth(
            &dir_a.path().join("truth").join(TRUTH_FILE),
            prior.atlas.names(),
        )
        .unwrap();
        assert_eq!(loaded, world.truth);
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push(p);
                }
            }
        }
        out
    }

    #[test]
    fn draws_round_trip_bitwise() {
        use crate::mcmc::{ChainDraws, PosteriorDraws};
        let names = vec!["alpha".to_string(), "omega[C1][m.nn][p1]".to_string()];
        let chain = |shift: f64| ChainDraws {
            values: vec![
                1.5e-17 + shift,
                -0.0,
                2.0_f64.powi(-40),
                12345.678901234567,
                f64::MIN_POSITIVE,
                -3.0,
            ],
            n_draws: 3,
            acceptance: vec![0.4, 0.5],
            step_sizes: vec![0.1, 0.2],
            seconds: 1.0,
        };
        let draws = PosteriorDraws::new(names.clone(), vec![chain(0.0), chain(1.0)]).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let paths = write_draws(dir.path(), &draws).unwrap();
        assert_eq!(paths.len(), 2);
        let loaded = load_draws(dir.path()).unwrap();
        assert_eq!(loaded.names(), draws.names());
        assert_eq!(loaded.n_chains(), 2);
        assert_eq!(loaded.n_draws(), 3);
        for c in 0..2 {
            for d in 0..3 {
                for p in 0..2 {
                    assert_eq!(
                        loaded.value(c, d, p).to_bits(),
                        draws.value(c, d, p).to_bits(),
                        "chain {c} draw {d} param {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn estimates_round_trip() {
        use crate::accounts::Indicator;
        use crate::report::{EstimateRow, EstimateTable, GeoScope};
        let world = tiny_world();
        let table = EstimateTable {
            rows: vec![
                EstimateRow {
                    scope: GeoScope::World,
                    period: 1,
                    indicator: Indicator::AbortionRate,
                    median: 31.25,
                    lower: 20.0,
                    upper: 44.5,
                },
                EstimateRow {
                    scope: GeoScope::Country(2),
                    period: 3,
                    indicator: Indicator::PctPregnanciesUnintended,
                    median: 55.5,
                    lower: 41.001,
                    upper: 69.5,
                },
                EstimateRow {
                    scope: GeoScope::Region(1),
                    period: 2,
                    indicator: Indicator::UnintendedPregnancyRate,
                    median: 80.0,
                    lower: 60.0,
                    upper: 110.0,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("estimates.csv");
        write_estimates(&path, &table, &world.geo, &world.cal).unwrap();
        let loaded = load_estimates(&path, &world.geo, &world.cal).unwrap();
        assert_eq!(loaded.rows, table.rows);
    }

    #[test]
    fn manifests_sort_and_round_trip() {
        let mut m = Manifest::new("fit");
        m.insert("seed", 99u64);
        m.insert("calendar.first_year", 1990);
        m.insert("beta", "2");
        let text = m.render();
        let keys: Vec<&str> = text
            .lines()
            .map(|l| l.split_once('=').unwrap().0)
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        assert!(text.contains("command=fit"));
        assert!(text.contains(concat!("version=", env!("CARGO_PKG_VERSION"))));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        m.write(&path).unwrap();
        assert_eq!(Manifest::load(&path).unwrap(), m);
    }

    #[test]
    fn plots_render_band_line_and_labels() {
        use crate::accounts::Indicator;
        use crate::report::{EstimateRow, EstimateTable, GeoScope};
        let world = tiny_world();
        let rows = (1..=3)
            .map(|p| EstimateRow {
                scope: GeoScope::Country(0),
                period: p,
                indicator: Indicator::AbortionRate,
                median: 30.0 + p as f64,
                lower: 20.0,
                upper: 45.0 + p as f64,
            })
            .collect();
        let table = EstimateTable { rows };
        let svg = plot::render_series(
            &table,
            &world.geo,
            &world.cal,
            GeoScope::Country(0),
            Indicator::AbortionRate,
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<polygon"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("abortion_rate"));
        assert!(svg.contains(&world.geo.country_name(0).to_string()));
        assert!(svg.contains(&world.cal.first_year().to_string()));

        let err = plot::render_series(
            &table,
            &world.geo,
            &world.cal,
            GeoScope::Country(1),
            Indicator::AbortionRate,
        )
        .unwrap_err();
        assert!(err.to_string().contains("no rows"));
    }
}
