mod common;

use artivae::articulatory::{
    butterworth_lowpass4, downsample_ema, filtfilt, fit_guided_pca, read_ema_csv, write_ema_csv,
    ArticulatoryVector, CoilLayout, EmaFrame, GuidedPcaModel,
};
use artivae::numerics::correlation;
use artivae::synthcorpus::{generate, Corpus, SynthConfig};
use ndarray::Array2;

fn corpus(n_params: usize, coil_noise: f64, seed: u64) -> Corpus {
    generate(&SynthConfig {
        n_utterances: 10,
        frames_per_utterance: 200,
        n_params,
        coil_noise,
        seed,
        audio: false,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn min_abs_corr(fitted: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    (0..truth.ncols())
        .map(|j| correlation(fitted.column(j), truth.column(j)).abs())
        .fold(f64::INFINITY, f64::min)
}

fn fitted(c: &Corpus) -> (GuidedPcaModel, Array2<f64>) {
    let frames = c.all_ema();
    let model = fit_guided_pca(&frames, c.layout()).unwrap();
    let a = model.ema_to_artic_batch(&frames).unwrap();
    (model, a)
}

#[test]
fn noiseless_parameters_are_identified() {
    for n in [6, 7] {
        let c = corpus(n, 0.0, 3);
        let (_, a) = fitted(&c);
        let worst = min_abs_corr(&a, &c.all_artic_true());
        assert!(worst > 0.999, "N = {n}: min |corr| {worst}");
    }
}

#[test]
fn noisy_parameters_are_identified() {
    for n in [6, 7] {
        let c = corpus(n, 0.05, 4);
        let (_, a) = fitted(&c);
        let worst = min_abs_corr(&a, &c.all_artic_true());
        assert!(worst > 0.99, "N = {n}: min |corr| {worst}");
    }
}

#[test]
fn artic_round_trip_is_exact() {
    let c = corpus(7, 0.05, 5);
    let (model, a) = fitted(&c);
    for row in a.rows().into_iter().step_by(37) {
        let v = ArticulatoryVector::new(row.to_vec()).unwrap();
        let y = model.artic_to_ema(&v).unwrap();
        let back = model.ema_to_artic(&y).unwrap();
        for (x, z) in v.params().iter().zip(back.params()) {
            assert!((x - z).abs() < 1e-8);
        }
    }
}

#[test]
fn fitted_parameters_are_standardized() {
    let c = corpus(6, 0.05, 6);
    let (_, a) = fitted(&c);
    for col in a.columns() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((sd - 1.0).abs() < 1e-9);
    }
}

#[test]
fn stages_are_decorrelated_on_training_data() {
    // JH TB TD TT LP LH (VL)
    let pairs = [
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (0, 5),
        (1, 2),
        (1, 3),
        (2, 3),
        (4, 5),
    ];
    for n in [6, 7] {
        let c = corpus(n, 0.05, 7);
        let (_, a) = fitted(&c);
        for (i, j) in pairs {
            let r = correlation(a.column(i), a.column(j));
            assert!(r.abs() < 1e-6, "N = {n}: corr({i}, {j}) = {r}");
        }
    }
}

#[test]
fn model_save_load_round_trip() {
    let c = corpus(7, 0.05, 8);
    let (model, _) = fitted(&c);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    assert_eq!(GuidedPcaModel::load(&path).unwrap(), model);
}

#[test]
fn ema_csv_round_trip() {
    let c = corpus(7, 0.05, 9);
    let frames: Vec<EmaFrame> = c.utterances[0].ema.clone();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    write_ema_csv(&path, c.layout(), &frames).unwrap();
    let (layout, back) = read_ema_csv(&path).unwrap();
    assert_eq!(&layout, c.layout());
    assert_eq!(back, frames);
}

#[test]
fn too_few_frames_is_an_error() {
    let c = corpus(6, 0.05, 10);
    let frames = c.all_ema();
    assert!(fit_guided_pca(&frames[..50], c.layout()).is_err());
}

#[test]
fn wrong_frame_width_is_an_error() {
    let c = corpus(6, 0.05, 11);
    let (model, _) = fitted(&c);
    let bad = EmaFrame {
        time_s: 0.0,
        coords: vec![0.0; 3],
    };
    assert!(model.ema_to_artic(&bad).is_err());
    assert!(model
        .artic_to_ema(&ArticulatoryVector::new(vec![0.0; 7]).unwrap())
        .is_err());
}

#[test]
fn standard_layouts_have_expected_sizes() {
    assert_eq!(CoilLayout::standard(false).dims(), 12);
    assert_eq!(CoilLayout::standard(false).n_params(), 6);
    assert_eq!(CoilLayout::standard(true).dims(), 14);
    assert_eq!(CoilLayout::standard(true).n_params(), 7);
}

#[test]
fn lowpass_passes_dc_and_removes_high_frequencies() {
    let sections = butterworth_lowpass4(20.0, 200.0).unwrap();
    let dc: f64 = sections.iter().map(|s| s.dc_gain()).product();
    assert!((dc - 1.0).abs() < 1e-9);
    let x: Vec<f64> = (0..2000)
        .map(|i| 1.0 + (2.0 * std::f64::consts::PI * 80.0 * i as f64 / 200.0).sin())
        .collect();
    let y = filtfilt(&sections, &x);
    for v in &y[500..1500] {
        assert!((v - 1.0).abs() < 1e-3);
    }
}

#[test]
fn downsampling_yields_frames_at_hop_rate() {
    let layout = CoilLayout::standard(false);
    let frames: Vec<EmaFrame> = (0..2000)
        .map(|i| EmaFrame {
            time_s: i as f64 / 200.0,
            coords: vec![(i as f64 / 200.0).sin(); layout.dims()],
        })
        .collect();
    let out = downsample_ema(&frames, 200.0).unwrap();
    assert!((out.len() as i64 - 1000).abs() <= 1, "{} frames", out.len());
    for w in out.windows(2) {
        assert!((w[1].time_s - w[0].time_s - 0.01).abs() < 1e-9);
    }
}
