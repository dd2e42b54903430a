//! End-to-end acceptance run. One line per criterion; nonzero exit when any
//! criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use smoothnn::adversary::{Adversary, AdversaryKind, TargetPolicy};
use smoothnn::concept::Concept;
use smoothnn::geometry::{
    box_counting_dim, fit_line, greedy_ml_cover, minkowski_content, ml_ball, post_visit_mistakes,
    verify_pairs, CoverOptions, MLBall,
};
use smoothnn::harness::{
    dyadic_checkpoints, fit_exponent, median, run_experiment, ExperimentConfig, ExperimentResult,
};
use smoothnn::learner::{run_protocol, LearnerConfig};
use smoothnn::metric::{Metric, Point, Space};
use smoothnn::rng::{seeded, split};

type Outcome = (bool, String);

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    let mut cfg = ExperimentConfig::load(&path).unwrap();
    cfg.output = None;
    cfg
}

fn run(cfg: &ExperimentConfig) -> ExperimentResult {
    run_experiment(cfg).unwrap()
}

fn final_mistakes(r: &ExperimentResult) -> Vec<f64> {
    r.trial_summaries
        .iter()
        .map(|s| s.mistakes as f64)
        .collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (
        m,
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

/// One-sided Welch test of `mean(hi) > mean(lo)`; returns the p-value.
fn welch_greater(hi: &[f64], lo: &[f64]) -> f64 {
    let (m1, v1) = mean_var(hi);
    let (m2, v2) = mean_var(lo);
    let (a, b) = (v1 / hi.len() as f64, v2 / lo.len() as f64);
    let t = (m1 - m2) / (a + b).sqrt();
    let df = (a + b).powi(2) / (a * a / (hi.len() as f64 - 1.0) + b * b / (lo.len() as f64 - 1.0));
    1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t)
}

/// Length of `{n·x = b} ∩ [0,1]²`.
fn chord_length(n: [f64; 2], b: f64) -> f64 {
    let mut hits: Vec<[f64; 2]> = Vec::new();
    for fixed in [0.0, 1.0] {
        if n[1] != 0.0 {
            let y = (b - n[0] * fixed) / n[1];
            if (0.0..=1.0).contains(&y) {
                hits.push([fixed, y]);
            }
        }
        if n[0] != 0.0 {
            let x = (b - n[1] * fixed) / n[0];
            if (0.0..=1.0).contains(&x) {
                hits.push([x, fixed]);
            }
        }
    }
    let mut best: f64 = 0.0;
    for p in &hits {
        for q in &hits {
            best = best.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    best
}

fn sign_sequence() -> Outcome {
    let r = run(&config("sign_sequence.toml"));
    let m = r.trial_summaries[0].mistakes;
    let (space, c) = (Space::interval(-1.0, 1.0), Concept::threshold(0.0));
    let mut adv = Adversary::new(AdversaryKind::SignSequence);
    let tr = run_protocol(
        &space,
        &c,
        &mut adv,
        &LearnerConfig::default(),
        50,
        &mut seeded(0),
    )
    .unwrap();
    let every_round = tr.records.iter().skip(1).all(|rec| rec.is_mistake());
    (
        m == 49 && every_round,
        format!("{m} mistakes in 50 rounds, every round t >= 2: {every_round}"),
    )
}

fn dichotomy() -> Outcome {
    let sq = Space::unit_square();
    let c = Concept::halfspace(vec![0.6, 0.8], 0.7);
    let mut adv = Adversary::new(AdversaryKind::PairConstructor);
    let tr = run_protocol(
        &sq,
        &c,
        &mut adv,
        &LearnerConfig::default(),
        200,
        &mut seeded(0),
    )
    .unwrap();
    let pairs = tr.mistakes_at(200);
    let ok_a = pairs >= 100 && pairs as f64 / 200.0 >= 0.5;

    let base = config("clusters.toml");
    let cover = greedy_ml_cover(
        &base.concept,
        &base.space,
        0.1,
        &CoverOptions::default(),
        &mut seeded(1),
    )
    .unwrap();
    let budget = cover.n_ml_upper as u64;
    let kinds = [
        AdversaryKind::IidBase,
        AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.02,
            policy: TargetPolicy::NearestToLastMistake,
        },
        AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.02,
            policy: TargetPolicy::Sweep { period: 500 },
        },
        AdversaryKind::GaussianPerturb {
            sigma_g: 0.03,
            policy: TargetPolicy::NearestToLastMistake,
        },
    ];
    let mut worst = 0;
    for kind in kinds {
        let mut cfg = base.clone();
        cfg.adversary = Some(kind);
        let r = run(&cfg);
        worst = worst.max(r.trial_summaries.iter().map(|s| s.mistakes).max().unwrap());
    }
    let ok_b = worst <= budget && worst <= 10;
    (
        ok_a && ok_b,
        format!("(a) {pairs} mistakes by round 200; (b) worst trial {worst} mistakes, cover budget {budget}"),
    )
}

fn stock() -> Vec<(Space, Concept)> {
    let sq = Space::unit_square();
    vec![
        (Space::interval(-1.0, 1.0), Concept::threshold(0.0)),
        (sq.clone(), Concept::halfspace(vec![1.0, 0.0], 0.5)),
        (sq.clone(), Concept::halfspace(vec![0.6, 0.8], 0.7)),
        (sq, Concept::disk(vec![0.5, 0.5], 0.25)),
        (Space::unit_interval(), Concept::fat_cantor(3)),
        Concept::two_clusters(0.2, 0.15).unwrap(),
    ]
}

fn ml_sets() -> Outcome {
    let concepts = stock();
    let mut rng = seeded(31);
    let (mut dist_bad, mut label_bad) = (0, 0);
    for i in 0..1000 {
        let (space, c) = &concepts[i % concepts.len()];
        let x = space.sample_base(&mut rng);
        let ball = ml_ball(c, space, &x, &mut rng).unwrap();
        let check = verify_pairs(c, space, &ball, 10_000, &mut rng);
        dist_bad += check.distance_violations;
        label_bad += check.label_violations;
    }
    let mut post = 0;
    for e in 0..1000u64 {
        let (space, c) = &concepts[e as usize % concepts.len()];
        let mut rng = split(32, e);
        let balls: Vec<MLBall> = (0..20)
            .map(|_| ml_ball(c, space, &space.sample_base(&mut rng), &mut rng).unwrap())
            .collect();
        let kind = match e % 3 {
            0 => AdversaryKind::IidBase,
            1 => AdversaryKind::SigmaSmoothBallBoost {
                sigma: 0.02,
                policy: TargetPolicy::NearestToLastMistake,
            },
            _ => AdversaryKind::GaussianPerturb {
                sigma_g: 0.05,
                policy: TargetPolicy::Sweep { period: 97 },
            },
        };
        let mut adv = Adversary::new(kind);
        let tr =
            run_protocol(space, c, &mut adv, &LearnerConfig::default(), 500, &mut rng).unwrap();
        post += post_visit_mistakes(space.metric, &balls, &tr.records);
    }
    (
        dist_bad + label_bad + post == 0,
        format!(
            "pair violations: {dist_bad} distance, {label_bad} label; post-visit mistakes: {post}"
        ),
    )
}

fn margin_identity() -> Outcome {
    let sq = Space::unit_square();
    let concepts = [
        Concept::halfspace(vec![1.0, 0.0], 0.5),
        Concept::halfspace(vec![0.6, 0.8], 0.7),
        Concept::disk(vec![0.5, 0.5], 0.25),
    ];
    let mut rng = seeded(41);
    let (mut exact_err, mut sampled_err): (f64, f64) = (0.0, 0.0);
    for c in &concepts {
        let b = c.analytic_boundary(&sq).unwrap();
        for _ in 0..1000 {
            let x = sq.sample_base(&mut rng);
            let d = b.distance(Metric::Euclidean, &x);
            exact_err = exact_err.max((c.analytic_margin(&sq, &x).unwrap() - d).abs());
            sampled_err = sampled_err.max((c.sampled_margin(&sq, &x, 100_000, &mut rng) - d).abs());
        }
    }
    (
        exact_err <= 1e-9 && sampled_err <= 1e-2,
        format!("max error analytic {exact_err:.2e}, sampled {sampled_err:.2e}"),
    )
}

fn convergence_and_exponent() -> (Outcome, Outcome) {
    let mut cfg = config("halfspace_smooth.toml");
    cfg.analysis.bound_overlay = false;
    cfg.analysis.exponent_fit = false;
    let r = run(&cfg);
    let dyadic = dyadic_checkpoints(cfg.rounds);
    assert_eq!(r.checkpoints, dyadic);
    let rises: Vec<usize> = r
        .curve
        .windows(2)
        .filter(|w| w[1].average_loss.mean > w[0].average_loss.hi)
        .map(|w| w[1].t)
        .collect();
    let last = r.curve.last().unwrap().average_loss.mean;
    let c5 = (
        rises.is_empty() && last < 0.05,
        format!("final mean average loss {last:.4}, rises beyond CI at {rises:?}"),
    );

    let fit = fit_exponent(
        &r.checkpoints,
        &r.mistakes_by_trial,
        [1 << 12, 1 << 17],
        1000,
        0.95,
        61,
    )
    .unwrap();
    let alpha_ok = !fit.undefined && (0.35..=0.75).contains(&fit.alpha);
    let mut finals = vec![];
    for (k, sigma) in [0.04, 0.02, 0.01].into_iter().enumerate() {
        let mut c = cfg.clone();
        c.seed = 100 + k as u64;
        c.adversary = Some(AdversaryKind::SigmaSmoothBallBoost {
            sigma,
            policy: TargetPolicy::default(),
        });
        finals.push(final_mistakes(&run(&c)));
    }
    let p1 = welch_greater(&finals[1], &finals[0]);
    let p2 = welch_greater(&finals[2], &finals[1]);
    let means: Vec<f64> = finals.iter().map(|f| mean_var(f).0).collect();
    let c6 = (
        alpha_ok && p1 < 0.05 && p2 < 0.05,
        format!(
            "alpha {:.3} [{:.3}, {:.3}]; mean mistakes at sigma 0.04/0.02/0.01: {:.1}/{:.1}/{:.1} (p = {p1:.1e}, {p2:.1e})",
            fit.alpha, fit.ci_lo, fit.ci_hi, means[0], means[1], means[2]
        ),
    );
    (c5, c6)
}

fn scaling_laws() -> Outcome {
    let sq = Space::unit_square();
    let c = Concept::halfspace(vec![1.0, 0.0], 0.5);
    let radii = [0.2, 0.1, 0.05, 0.025];
    let counts: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..5)
                .map(|s| {
                    greedy_ml_cover(&c, &sq, r, &CoverOptions::default(), &mut seeded(70 + s))
                        .unwrap()
                        .n_ml_upper as f64
                })
                .sum::<f64>()
                / 5.0
        })
        .collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = counts.iter().map(|n| n.ln()).collect();
    let slope = fit_line(&lx, &ly).unwrap().slope;

    let cases = [
        (c.clone(), 2.0 * chord_length([1.0, 0.0], 0.5)),
        (
            Concept::halfspace(vec![0.6, 0.8], 0.7),
            2.0 * chord_length([0.6, 0.8], 0.7),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (c, oracle) in cases {
        let b = c.analytic_boundary(&sq).unwrap();
        let m = minkowski_content(&sq, &b, &[0.04, 0.02, 0.01], 0, &mut seeded(71)).unwrap();
        worst = worst.max((m.content - oracle).abs() / oracle);
    }
    (
        (slope + 1.0).abs() <= 0.2 && worst <= 0.1,
        format!("cover slope {slope:.3} (counts {counts:?}); content relative error {worst:.3}"),
    )
}

fn bound_soundness() -> Outcome {
    let r = run(&config("bound_check.toml"));
    let b = r.bound.as_ref().expect("bound overlay");
    let frac = b.fraction_within.unwrap();
    let emp = b.curve.empirical.as_ref().unwrap();
    (
        frac >= 0.95,
        format!(
            "{} of {} trials within the bound (bound at T = {}: {:.0})",
            b.trials_within.unwrap(),
            r.trials,
            r.rounds,
            emp.last().unwrap().bound
        ),
    )
}

fn azuma() -> Outcome {
    let r = run(&config("azuma_iid.toml"));
    let a = r.azuma.unwrap();
    (
        a.trials == 200 && a.within_tolerance,
        format!(
            "{} of {} trials violate (fraction {:.3}, tolerance {:.3})",
            a.violations, a.trials, a.fraction, a.tolerance
        ),
    )
}

fn fat_cantor() -> Outcome {
    let base = config("fat_cantor.toml");
    let mut medians = vec![];
    for depth in [2, 5, 8] {
        let mut cfg = base.clone();
        cfg.concept = Concept::fat_cantor(depth);
        cfg.adversary = Some(AdversaryKind::SigmaSmoothBallBoost {
            sigma: 0.01,
            policy: TargetPolicy::Sweep { period: 1000 },
        });
        medians.push(median(&final_mistakes(&run(&cfg))));
    }
    (
        medians.windows(2).all(|w| w[0] < w[1]),
        format!("median mistakes at depth 2/5/8: {medians:?}"),
    )
}

fn estimator_sanity() -> Outcome {
    let radii = [0.1, 0.05, 0.02, 0.01];
    let mut rng = seeded(111);
    let point: Vec<Point> = (0..1000).map(|_| vec![0.3, 0.7].into()).collect();
    let segment: Vec<Point> = (0..100_000)
        .map(|_| {
            let s: f64 = rng.random();
            vec![0.1 + 0.8 * s, 0.2 + 0.6 * s].into()
        })
        .collect();
    let square: Vec<Point> = (0..100_000)
        .map(|_| vec![rng.random(), rng.random()].into())
        .collect();
    let d = |pts: &[Point]| {
        box_counting_dim(pts, Metric::Euclidean, &radii)
            .unwrap()
            .dimension
    };
    let (d0, d1, d2) = (d(&point), d(&segment), d(&square));
    (
        d0.abs() <= 0.15 && (d1 - 1.0).abs() <= 0.15 && (d2 - 2.0).abs() <= 0.2,
        format!("point {d0:.3}, segment {d1:.3}, square {d2:.3}"),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: &str, name: &str, start: Instant, (ok, detail): Outcome| {
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} {name}: {detail} ({:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    };
    let s = Instant::now();
    report("1", "sign sequence", s, sign_sequence());
    let s = Instant::now();
    report("2", "worst case vs clusters", s, dichotomy());
    let s = Instant::now();
    report("3", "mutually-labeling balls", s, ml_sets());
    let s = Instant::now();
    report("4", "margin identity", s, margin_identity());
    let s = Instant::now();
    let (c5, c6) = convergence_and_exponent();
    report("5", "convergence", s, c5);
    report("6", "mistake exponent", s, c6);
    let s = Instant::now();
    report("7", "cover and content scaling", s, scaling_laws());
    let s = Instant::now();
    report("8", "bound soundness", s, bound_soundness());
    let s = Instant::now();
    report("9", "martingale deviation", s, azuma());
    let s = Instant::now();
    report("10", "fat Cantor depth", s, fat_cantor());
    let s = Instant::now();
    report("11", "box-counting dimension", s, estimator_sanity());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
