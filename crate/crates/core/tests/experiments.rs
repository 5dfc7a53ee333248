mod common;

use artivae::arvae::{train, TrainConfig};
use artivae::experiments::{
    emit_report, noisy_frames, prepare_frames, render_report, run_convergence, run_denoising,
    run_ordered, ConvergenceConfig, ConvergenceReport, DenoisingConfig, DenoisingReport, Report,
    RunSettings, Snr, THREADS_ENV,
};
use artivae::synthcorpus::{generate, Corpus, SynthConfig};

fn small_corpus(audio: bool) -> Corpus {
    generate(&SynthConfig {
        n_utterances: 6,
        frames_per_utterance: 200,
        seed: 4,
        audio,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn quick_run(epochs: usize) -> RunSettings {
    RunSettings {
        epochs,
        hidden: vec![32, 16],
        ..RunSettings::default()
    }
}

fn convergence_config() -> ConvergenceConfig {
    ConvergenceConfig {
        alphas: vec![0.0, 0.5],
        n_seeds: 2,
        base_seed: 3,
        compare_epoch: 2,
        run: quick_run(4),
    }
}

fn denoising_config() -> DenoisingConfig {
    DenoisingConfig {
        snrs: vec![Snr::Clean, Snr::Db(5.0)],
        alphas: vec![0.0, 1.0],
        n_seeds: 2,
        base_seed: 0,
        mix_seed: 1,
        run: quick_run(4),
    }
}

fn file<'a>(files: &'a [(String, Vec<u8>)], name: &str) -> &'a [u8] {
    &files.iter().find(|(n, _)| n == name).unwrap().1
}

#[test]
fn convergence_report_shape() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    let cfg = convergence_config();
    let r = run_convergence(&c, &frames, &cfg).unwrap();
    assert_eq!(r.runs.len(), 4);
    assert!(r.runs.iter().all(|x| x.curve.len() == 4));
    assert_eq!(r.corpus_hash, c.manifest_hash().unwrap());
    let sc = r.sign_counts.as_ref().unwrap();
    assert_eq!(sc.n_seeds, 2);
    assert!(sc.any_alpha_at_final_epoch <= 2);
    for s in &r.per_alpha {
        let finals: Vec<f64> = cfg
            .seeds()
            .iter()
            .map(|&seed| *r.curve(s.alpha, seed).unwrap().last().unwrap())
            .collect();
        assert!((s.final_mean - finals.iter().sum::<f64>() / 2.0).abs() < 1e-12);
        assert!(s.fit.rate >= 0.0);
    }
    let files = render_report(&Report::Convergence(r)).unwrap();
    let csv = std::str::from_utf8(file(&files, "curves.csv")).unwrap();
    // alphas · seeds · epochs rows plus the header
    assert_eq!(csv.lines().count(), 2 * 2 * 4 + 1);
    assert!(csv.starts_with("condition,alpha,model,seed,epoch,mse\n"));
    let fig2a = std::str::from_utf8(file(&files, "fig2a.csv")).unwrap();
    assert_eq!(fig2a.lines().count(), 5);
}

#[test]
fn single_alpha_single_seed_reduces_to_one_curve() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    let cfg = ConvergenceConfig {
        alphas: vec![0.0],
        n_seeds: 1,
        compare_epoch: 1,
        ..convergence_config()
    };
    let r = run_convergence(&c, &frames, &cfg).unwrap();
    assert_eq!(r.runs.len(), 1);
    assert_eq!(r.per_alpha.len(), 1);
    assert_eq!(r.per_alpha[0].mean_curve, r.runs[0].curve);
    assert_eq!(r.per_alpha[0].final_std, 0.0);
    assert!(r.per_alpha[0].fit.rate >= 0.0);
    assert!(r.best_regularized().is_none());
}

#[test]
fn summary_json_round_trips() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    let r = run_convergence(&c, &frames, &convergence_config()).unwrap();
    let files = render_report(&Report::Convergence(r.clone())).unwrap();
    let back: ConvergenceReport = serde_json::from_slice(file(&files, "summary.json")).unwrap();
    for (a, b) in r.per_alpha.iter().zip(&back.per_alpha) {
        assert!((a.final_mean - b.final_mean).abs() < 1e-12);
        assert!((a.final_std - b.final_std).abs() < 1e-12);
        assert!((a.fit.rate - b.fit.rate).abs() < 1e-12);
        for (x, y) in a.mean_curve.iter().zip(&b.mean_curve) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert_eq!(back, r);
}

#[test]
fn paired_runs_share_everything_but_alpha() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    let base = TrainConfig {
        epochs: 2,
        hidden: vec![32, 16],
        seed: 8,
        ..TrainConfig::default()
    };
    let a = train(
        &TrainConfig {
            alpha: 0.0,
            ..base.clone()
        },
        &frames,
    )
    .unwrap();
    let b = train(
        &TrainConfig {
            alpha: 1.0,
            ..base.clone()
        },
        &frames,
    )
    .unwrap();
    assert_eq!(a.train_indices, b.train_indices);
    assert_eq!(a.test_indices, b.test_indices);
    assert_eq!(a.input_scaler, b.input_scaler);
    assert_ne!(a.params, b.params);
    // a different seed redraws the split
    let c = train(&TrainConfig { seed: 9, ..base }, &frames).unwrap();
    assert_ne!(a.test_indices, c.test_indices);
}

#[test]
fn denoising_report_shape_and_clean_consistency() {
    let c = small_corpus(true);
    let frames = prepare_frames(&c).unwrap();
    let cfg = denoising_config();
    let r = run_denoising(&c, &frames, &cfg).unwrap();
    assert_eq!(r.runs.len(), 2 * 2 * 2);
    for run in &r.runs {
        assert_eq!(run.curve.len(), 4);
        assert_eq!(run.final_mse, *run.curve.last().unwrap());
    }
    assert_eq!(
        r.summary(Snr::Db(5.0), 1.0)
            .unwrap()
            .seeds_better_than_vae
            .map(|n| n <= 2),
        Some(true)
    );
    assert_eq!(
        r.summary(Snr::Clean, 0.0).unwrap().seeds_better_than_vae,
        None
    );

    // the clean condition is the convergence study on the same seeds
    let conv = run_convergence(
        &c,
        &frames,
        &ConvergenceConfig {
            alphas: cfg.alphas.clone(),
            n_seeds: cfg.n_seeds,
            base_seed: cfg.base_seed,
            compare_epoch: 1,
            run: cfg.run.clone(),
        },
    )
    .unwrap();
    for run in r.runs.iter().filter(|x| x.snr == Snr::Clean) {
        assert_eq!(
            conv.curve(run.alpha, run.seed).unwrap(),
            run.curve.as_slice()
        );
    }

    let files = render_report(&Report::Denoising(r.clone())).unwrap();
    let csv = std::str::from_utf8(file(&files, "curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8 * 4 + 1);
    assert!(csv.lines().nth(1).unwrap().starts_with("clean,"));
    let back: DenoisingReport = serde_json::from_slice(file(&files, "summary.json")).unwrap();
    assert_eq!(back, r);
    let fig3 = std::str::from_utf8(file(&files, "fig3.csv")).unwrap();
    assert_eq!(fig3.lines().count(), 5);
}

#[test]
fn noisy_inputs_are_harder_than_clean() {
    let c = small_corpus(true);
    let frames = prepare_frames(&c).unwrap();
    let clean = noisy_frames(&c, &frames, Snr::Clean, 0).unwrap();
    let noisy = noisy_frames(&c, &frames, Snr::Db(0.0), 0).unwrap();
    assert!(clean.iter().all(|f| f.x_noisy == Some(f.x)));
    let cfg = TrainConfig {
        epochs: 3,
        hidden: vec![32, 16],
        denoising: true,
        ..TrainConfig::default()
    };
    let mse =
        |fr: &[artivae::features::ParallelFrame]| *train(&cfg, fr).unwrap().curve.last().unwrap();
    assert!(mse(&noisy) > mse(&clean));
    assert_eq!(noisy_frames(&c, &frames, Snr::Db(0.0), 0).unwrap(), noisy);
    assert_ne!(noisy_frames(&c, &frames, Snr::Db(0.0), 1).unwrap(), noisy);
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let c = small_corpus(true);
    let frames = prepare_frames(&c).unwrap();
    let render = || {
        let conv = run_convergence(&c, &frames, &convergence_config()).unwrap();
        let den = run_denoising(&c, &frames, &denoising_config()).unwrap();
        (
            render_report(&Report::Convergence(conv)).unwrap(),
            render_report(&Report::Denoising(den)).unwrap(),
        )
    };
    std::env::set_var(THREADS_ENV, "1");
    let one = render();
    std::env::set_var(THREADS_ENV, "3");
    let three = render();
    std::env::remove_var(THREADS_ENV);
    assert_eq!(one, three);
}

#[test]
fn emitted_files_match_rendered_bytes() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    let r = Report::Convergence(run_convergence(&c, &frames, &convergence_config()).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&r, dir.path().join("out")).unwrap();
    let rendered = render_report(&r).unwrap();
    assert_eq!(written.len(), rendered.len());
    for (path, (name, bytes)) in written.iter().zip(&rendered) {
        assert!(path.ends_with(name));
        assert_eq!(&std::fs::read(path).unwrap(), bytes);
    }
}

#[test]
fn run_ordered_keeps_job_order() {
    let jobs: Vec<u64> = (0..37).collect();
    for threads in [1, 2, 5, 64] {
        let out = run_ordered(&jobs, threads, |j| j * j);
        assert_eq!(out, jobs.iter().map(|j| j * j).collect::<Vec<_>>());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let c = small_corpus(false);
    let frames = prepare_frames(&c).unwrap();
    for bad in [
        ConvergenceConfig {
            alphas: vec![],
            ..convergence_config()
        },
        ConvergenceConfig {
            alphas: vec![0.0, 0.0],
            ..convergence_config()
        },
        ConvergenceConfig {
            alphas: vec![-1.0],
            ..convergence_config()
        },
        ConvergenceConfig {
            compare_epoch: 9,
            ..convergence_config()
        },
        ConvergenceConfig {
            n_seeds: 0,
            ..convergence_config()
        },
        ConvergenceConfig {
            run: quick_run(3),
            compare_epoch: 1,
            ..convergence_config()
        },
    ] {
        assert!(run_convergence(&c, &frames, &bad).is_err(), "{bad:?}");
    }
    // denoising needs a corpus with audio
    assert!(run_denoising(&c, &frames, &denoising_config()).is_err());
}

#[test]
fn snr_parses_and_prints() {
    assert_eq!("clean".parse::<Snr>().unwrap(), Snr::Clean);
    assert_eq!("10dB".parse::<Snr>().unwrap(), Snr::Db(10.0));
    assert_eq!("-5".parse::<Snr>().unwrap(), Snr::Db(-5.0));
    assert!("loud".parse::<Snr>().is_err());
    assert_eq!(Snr::Db(0.0).to_string(), "0");
    assert_eq!(serde_json::to_string(&Snr::Clean).unwrap(), "\"clean\"");
}
