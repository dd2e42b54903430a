use std::path::Path;

use smoothnn::adversary::{Adversary, AdversaryKind};
use smoothnn::concept::Concept;
use smoothnn::harness::{
    azuma_check, emit_outputs, load_result, run_cover, run_dimension, run_experiment,
    run_worstcase, ExperimentConfig, Format,
};
use smoothnn::learner::{run_protocol, LearnerConfig};
use smoothnn::metric::{Region, Space};
use smoothnn::rng::split;

const SIGN: &str = r#"
name = "sign"
T = 50
[space]
shape = "interval"
lo = -1.0
hi = 1.0
[concept]
kind = "threshold"
theta = 0.0
[adversary]
kind = "sign_sequence"
"#;

const SMOOTH: &str = r#"
name = "smooth"
T = 2000
trials = 8
seed = 42
checkpoints = [10, 100, 500, 1000, 2000]
[space]
shape = "box"
lo = 0.0
hi = 1.0
dim = 2
[concept]
kind = "halfspace"
normal = [0.6, 0.8]
offset = 0.7
[adversary]
kind = "sigma_smooth_ball_boost"
sigma = 0.02
"#;

fn cfg(text: &str) -> ExperimentConfig {
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    c.validate().unwrap();
    c
}

#[test]
fn sign_sequence_average_loss() {
    let r = run_experiment(&cfg(SIGN)).unwrap();
    let last = r.curve.last().unwrap();
    assert_eq!(last.t, 50);
    assert_eq!(last.average_loss.mean, 49.0 / 50.0);
    assert_eq!(r.total_rounds, 50);
}

#[test]
fn iid_average_loss_decreases_after_a_thousand_rounds() {
    let text = r#"
        T = 100000
        trials = 8
        seed = 1
        checkpoints = [1024, 2048, 4096, 8192, 16384, 32768, 65536, 100000]
        [space]
        shape = "box"
        lo = 0.0
        hi = 1.0
        dim = 2
        [concept]
        kind = "halfspace"
        normal = [1.0, 0.0]
        offset = 0.5
        [adversary]
        kind = "iid_base"
    "#;
    let r = run_experiment(&cfg(text)).unwrap();
    for w in r.curve.windows(2) {
        assert!(
            w[1].average_loss.mean < w[0].average_loss.mean,
            "{} -> {}",
            w[0].t,
            w[1].t
        );
    }
}

#[test]
fn same_seed_same_result_regardless_of_workers() {
    let c = cfg(SMOOTH);
    let a = serde_json::to_string(&run_experiment(&c).unwrap()).unwrap();
    std::env::set_var("SMOOTHNN_WORKERS", "3");
    let b = serde_json::to_string(&run_experiment(&c).unwrap()).unwrap();
    std::env::remove_var("SMOOTHNN_WORKERS");
    assert_eq!(a, b);
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(
        a,
        serde_json::to_string(&run_experiment(&other).unwrap()).unwrap()
    );
}

#[test]
fn golden_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(SMOOTH);
    c.output = Some(dir.path().to_path_buf());
    c.analysis.formats = vec![Format::Csv];
    run_experiment(&c).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for name in ["average_loss.csv", "mistakes.csv", "trials.csv"] {
        let got = std::fs::read(dir.path().join(name)).unwrap();
        let want = std::fs::read(golden.join(name)).unwrap();
        assert!(got == want, "{name} differs from the frozen copy");
    }
}

#[test]
fn csv_only_output_and_overlay_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = cfg(SMOOTH);
    c.analysis.bound_overlay = true;
    let r = run_experiment(&c).unwrap();
    assert!(r.bound.is_none());
    assert!(r.warnings.iter().any(|w| w.contains("without overlay")));
    let files = emit_outputs(&r, dir.path(), &[Format::Csv]).unwrap();
    assert!(files.iter().all(|p| p.extension().unwrap() == "csv"));
    assert_eq!(files.len(), 3);
    let files = emit_outputs(&r, dir.path(), &[Format::Svg, Format::Json]).unwrap();
    assert_eq!(files.len(), 3);
    let svg = std::fs::read_to_string(dir.path().join("mistakes.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(load_result(dir.path()).unwrap(), r);
}

#[test]
fn bound_overlay_with_cover_grid() {
    let mut c = cfg(SMOOTH);
    c.analysis.bound_overlay = true;
    c.analysis.bound_radii = vec![0.2, 0.1, 0.05];
    c.analysis.d_est = Some(1.0);
    c.analysis.m_est = Some(2.5);
    let r = run_experiment(&c).unwrap();
    let b = r.bound.unwrap();
    assert_eq!(b.covers.len(), 3);
    assert_eq!(
        b.curve.empirical.as_ref().unwrap().len(),
        r.checkpoints.len()
    );
    assert_eq!(
        b.curve.closed_form.as_ref().unwrap().len(),
        r.checkpoints.len()
    );
    assert!(b.fraction_within.unwrap() >= 0.0);
}

#[test]
fn exponent_fit_is_reported() {
    let mut c = cfg(SMOOTH);
    c.analysis.exponent_fit = true;
    c.analysis.fit_window = Some([100, 2000]);
    c.analysis.bootstrap = 200;
    let f = run_experiment(&c).unwrap().exponent.unwrap();
    assert!(!f.undefined && f.ci_lo <= f.alpha && f.alpha <= f.ci_hi);
    assert!(f.alpha > 0.0 && f.alpha < 1.0);
}

#[test]
fn azuma_iid_left_half() {
    let text = r#"
        T = 1000
        trials = 200
        seed = 8
        [space]
        shape = "interval"
        lo = 0.0
        hi = 1.0
        [concept]
        kind = "threshold"
        theta = 0.5
        [adversary]
        kind = "iid_base"
        [analysis]
        azuma_check = true
        azuma_region = { kind = "cuboid", lo = [0.0], hi = [0.5] }
        p = 0.05
    "#;
    let a = run_experiment(&cfg(text)).unwrap().azuma.unwrap();
    let tol = 0.05 + 3.0 * (0.05f64 * 0.95 / 200.0).sqrt();
    assert_eq!(a.trials, 200);
    assert!((a.tolerance - tol).abs() < 1e-15);
    assert!(a.fraction <= tol);
}

#[test]
fn azuma_point_masses_inside_the_set_never_deviate() {
    let space = Space::unit_interval();
    let c = Concept::threshold(0.5);
    let region = Region::Cuboid {
        lo: vec![0.0],
        hi: vec![0.5],
    };
    let trs: Vec<_> = (0..5)
        .map(|i| {
            let mut adv = Adversary::new(AdversaryKind::Scripted {
                points: (0..300)
                    .map(|k| vec![0.5 * (k as f64 + 0.5) / 300.0])
                    .collect(),
            });
            run_protocol(
                &space,
                &c,
                &mut adv,
                &LearnerConfig::default(),
                300,
                &mut split(0, i),
            )
            .unwrap()
        })
        .collect();
    let cps: Vec<usize> = (1..=300).collect();
    let rep = azuma_check(&space, &trs, &region, 0.05, &cps, 0).unwrap();
    assert_eq!(rep.violations, 0);
    assert_eq!(rep.max_ratio, 0.0);
}

#[test]
fn azuma_fraction_grows_with_p() {
    let space = Space::unit_interval();
    let c = Concept::threshold(0.5);
    let region = Region::Cuboid {
        lo: vec![0.0],
        hi: vec![0.5],
    };
    let trs: Vec<_> = (0..100)
        .map(|i| {
            let mut adv = Adversary::new(AdversaryKind::IidBase);
            run_protocol(
                &space,
                &c,
                &mut adv,
                &LearnerConfig::default(),
                500,
                &mut split(4, i),
            )
            .unwrap()
        })
        .collect();
    let cps: Vec<usize> = (1..=500).collect();
    let frac = |p| {
        azuma_check(&space, &trs, &region, p, &cps, 0)
            .unwrap()
            .fraction
    };
    let (a, b, c1) = (frac(0.05), frac(0.5), frac(1.0));
    assert!(a <= b && b <= c1);
}

#[test]
fn azuma_needs_analytic_masses() {
    let text = format!(
        "{}\n[analysis]\nazuma_check = true\nazuma_region = {{ kind = \"cuboid\", lo = [0.0, 0.0], hi = [0.5, 1.0] }}\n",
        SMOOTH.replace(
            "kind = \"sigma_smooth_ball_boost\"\nsigma = 0.02",
            "kind = \"gaussian_perturb\"\nsigma_g = 0.05"
        )
    );
    let err = run_experiment(&cfg(&text)).unwrap_err();
    assert_eq!(err.kind(), "no_analytic_mass");
}

#[test]
fn config_file_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, SMOOTH.replace("sigma = 0.02", "sigma = -1.0")).unwrap();
    match ExperimentConfig::load(&p) {
        Err(smoothnn::Error::Config { path, .. }) => assert_eq!(path, "adversary"),
        other => panic!("{other:?}"),
    }
    std::fs::write(&p, SMOOTH.replace("dim = 2", "dim = \"two\"")).unwrap();
    match ExperimentConfig::load(&p) {
        Err(smoothnn::Error::Config { path, .. }) => assert!(path.starts_with("space"), "{path}"),
        other => panic!("{other:?}"),
    }
    let scripted = format!(
        "script = \"pts.csv\"\n{}",
        SIGN.split("[adversary]").next().unwrap()
    );
    std::fs::write(&p, &scripted).unwrap();
    match ExperimentConfig::load(&p) {
        Err(smoothnn::Error::Config { path, .. }) => assert_eq!(path, "script"),
        other => panic!("{other:?}"),
    }
    std::fs::write(dir.path().join("pts.csv"), "0.5\n-0.25\n0.125\n").unwrap();
    let c = ExperimentConfig::load(&p).unwrap();
    let mut adv = c.build_adversary().unwrap();
    let tr = run_protocol(
        &c.space,
        &c.concept,
        &mut adv,
        &c.learner,
        3,
        &mut split(0, 0),
    )
    .unwrap();
    assert_eq!(tr.records[2].x.to_vec(), vec![0.125]);
}

#[test]
fn geometry_tasks() {
    let text = r#"
        seed = 2
        [space]
        shape = "box"
        lo = 0.0
        hi = 1.0
        dim = 2
        [concept]
        kind = "halfspace"
        normal = [1.0, 0.0]
        offset = 0.5
        [cover]
        radii = [0.2, 0.1]
        [dimension]
        [worstcase]
        pairs = 40
    "#;
    let c = cfg(text);
    let cov = run_cover(&c).unwrap();
    assert_eq!(cov.reports.len(), 2);
    assert!(cov.reports[1].n_ml_upper > cov.reports[0].n_ml_upper);
    let d = run_dimension(&c).unwrap();
    assert!((d.dimension.dimension - 1.0).abs() < 0.15);
    assert!((d.minkowski.content - 2.0).abs() < 1e-9);
    let w = run_worstcase(&c).unwrap();
    assert_eq!(w.even_round_mistakes, 40);
    assert!(w.average_loss >= 0.5);
}

#[test]
fn dominated_adversaries_drive_the_average_loss_down() {
    for adversary in [
        "kind = \"iid_base\"",
        "kind = \"gaussian_perturb\"\nsigma_g = 0.05",
    ] {
        let text = format!(
            r#"
            T = 131072
            trials = 10
            seed = 12
            checkpoints = [256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536, 131072]
            [space]
            shape = "box"
            lo = 0.0
            hi = 1.0
            dim = 2
            [concept]
            kind = "disk"
            center = [0.5, 0.5]
            radius = 0.3
            [adversary]
            {adversary}
            "#
        );
        let r = run_experiment(&cfg(&text)).unwrap();
        for w in r.curve.windows(2) {
            assert!(
                w[1].average_loss.lo <= w[0].average_loss.hi,
                "{adversary}: rise at {}",
                w[1].t
            );
        }
        let (first, last) = (
            r.curve[0].average_loss.mean,
            r.curve.last().unwrap().average_loss.mean,
        );
        assert!(last < first / 4.0, "{adversary}: {first} -> {last}");
    }
}
