use irsap_core::channel::norm_sqr;
use irsap_core::codebook::{build_single_user_codebook, smaecp};
use irsap_core::eval::{power_patterns, PatternGrid};
use irsap_core::persist::{load_codebook, save_codebook};
use irsap_core::*;

fn quick() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.trials = 3;
    cfg.ao.initial_candidates = 10;
    cfg.ao.randomizations = 100;
    cfg
}

#[test]
fn designed_codeword_beats_its_start_and_the_bare_array() {
    let cfg = quick();
    let geom = cfg.geometry().unwrap();
    let couplings = ReflectionCouplings::new(&geom);
    let (book, designs) = build_single_user_codebook(4, &couplings, &cfg.ao, &cfg.sdp.options(), 3).unwrap();
    assert_eq!(book.len(), 4);
    assert!(book.entries.iter().all(|e| e.pattern.len() == 40));
    for d in &designs {
        assert!(d.objective >= d.trace[0]);
        let direct_only = smaecp(&ReflectionPattern::unity([0; 4]), d.spec, &ReflectionCouplings::new(&geom.without_irs(&[0, 1, 2, 3])), cfg.ao.samples).unwrap();
        assert!(d.objective > direct_only, "sector {}", d.spec.index);
    }
}

#[test]
fn codebook_file_round_trip_feeds_experiments() {
    let cfg = quick();
    let dir = tempfile::tempdir().unwrap();
    let mut ctx = ExperimentContext::new(cfg.clone()).unwrap();
    ctx.ensure_codebook(2).unwrap();
    let path = dir.path().join("c2.json");
    save_codebook(&ctx.codebook(2).unwrap().codebook, &path).unwrap();
    let first = std::fs::read(&path).unwrap();

    // a fresh design with the same seed writes identical bytes
    let mut again = ExperimentContext::new(cfg.clone()).unwrap();
    again.ensure_codebook(2).unwrap();
    save_codebook(&again.codebook(2).unwrap().codebook, &path).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());

    let loaded = load_codebook(&path, Some(ctx.geometry_hash())).unwrap();
    let mut other = ExperimentContext::new(cfg).unwrap();
    other.add_codebook(loaded).unwrap();
    for (a, b) in other
        .codebook(2)
        .unwrap()
        .codebook
        .entries
        .iter()
        .zip(&ctx.codebook(2).unwrap().codebook.entries)
    {
        for (x, y) in a.pattern.coefficients().iter().zip(b.pattern.coefficients()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    let mut moved = ExperimentConfig::default();
    moved.radome.mount_height = 4.0;
    assert!(matches!(
        load_codebook(&path, Some(&moved.geometry().unwrap().content_hash())),
        Err(Error::HashMismatch { .. })
    ));
}

#[test]
fn coverage_experiment_has_the_five_schemes() {
    let mut cfg = quick();
    cfg.sweep.sectors = vec![1, 2];
    let r = run_experiment(&cfg, ExperimentKind::CoverageVsD).unwrap();
    let header = r.to_csv().lines().next().unwrap().to_string();
    assert_eq!(header, "D,proposed,random,dft,unity,no-irs");
    assert_eq!(r.axis, vec![1.0, 2.0]);
    // no-IRS does not depend on the sector count
    let n = r.series("no-irs").unwrap();
    assert!((n[0] - n[1]).abs() < 1e-12);
}

#[test]
fn rate_versus_kappa_has_one_row_per_value() {
    let mut cfg = quick();
    cfg.sweep.kappa_sectors = 2;
    let r = run_experiment(&cfg, ExperimentKind::RateVsKappa).unwrap();
    assert_eq!(r.to_csv().lines().count(), 6);
    assert!(r.series.iter().flat_map(|(_, v)| v).all(|x| *x >= 0.0));
}

#[test]
fn power_pattern_tables() {
    let cfg = ExperimentConfig::default();
    let geom = cfg.geometry().unwrap();
    let couplings = ReflectionCouplings::new(&geom);
    let pattern = ReflectionPattern::unity(geom.element_counts());
    let grid = PatternGrid { elevation_points: 9, azimuth_samples: 36 };
    let p = power_patterns(Some(&pattern), &couplings, &grid).unwrap();
    assert_eq!(p.elevation.len(), 9);
    assert_eq!(p.elevation[0].angle, 0.0);
    assert!((p.elevation[8].angle - cfg.radome.max_elevation).abs() < 1e-15);
    let d0 = p.azimuth[0].direct;
    assert!(p.azimuth.iter().all(|r| (r.direct - d0).abs() < 1e-15 * d0));

    // cross-term identity at every azimuth
    for row in &p.azimuth {
        let dir = Direction::new(cfg.radome.max_elevation, row.angle).unwrap();
        let h = Responder::with_pattern(&couplings, &pattern).unwrap().earv(&couplings, &dir);
        let hd = couplings.direct(&dir);
        let a1 = irsap_core::channel::los_coefficient(cfg.radome.max_elevation, &cfg.radome).unwrap().norm_sqr();
        let cross: f64 = hd.iter().zip(&h).map(|(d, x)| (d.conj() * (x - d)).re).sum();
        let expected = a1 * (norm_sqr(&hd) + 2.0 * cross) + row.reflection;
        assert!((row.effective - expected).abs() < 1e-12 * row.effective);
    }

    // with the surfaces removed the effective curve is the direct one
    let bare = ReflectionCouplings::new(&geom.without_irs(&[0, 1, 2, 3]));
    let none = power_patterns(None, &bare, &grid).unwrap();
    assert!(none.azimuth.iter().all(|r| (r.effective - r.direct).abs() < 1e-15 * r.direct));
}

#[test]
fn experiment_outputs_are_written_with_sidecars() {
    let mut cfg = quick();
    cfg.sweep.sectors = vec![1];
    let r = run_experiment(&cfg, ExperimentKind::RateVsD).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv, meta) = r.write(dir.path(), &cfg.content_hash()).unwrap();
    assert_eq!(std::fs::read_to_string(csv).unwrap(), r.to_csv());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(meta["seed"], cfg.seed);
    assert_eq!(meta["trials"], 3);
    assert_eq!(meta["config_hash"], cfg.content_hash());
}
