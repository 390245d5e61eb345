use pppl_core::data::{class_proportions, gen_rotated_gaussians, GaussianSpec, LabeledDataset};
use pppl_core::pppl::{adapt, pretrain_source, Ablation, AdaptConfig, SourceMix};
use pppl_core::training::TrainSettings;
use pppl_core::{ClassProportions, Error, Matrix, Model, ProportionKind};

struct Setup {
    model: Model,
    source: LabeledDataset,
    target: Matrix,
    cp: ClassProportions,
}

fn setup(theta: f64) -> Setup {
    let (source, target) = gen_rotated_gaussians(&GaussianSpec {
        per_class: 100,
        theta,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let mut model = Model::new(&[2, 16, 3], 3).unwrap();
    pretrain_source(&mut model, &source, &TrainSettings { epochs: 20, ..Default::default() }, 3).unwrap();
    let cp = class_proportions(target.hidden_labels().unwrap(), 3).unwrap();
    Setup {
        model,
        source,
        target: target.features().clone(),
        cp,
    }
}

fn config(ablation: Ablation) -> AdaptConfig {
    AdaptConfig {
        iterations: 45,
        source_mix: SourceMix::Fixed(50),
        learning_rate: 0.05,
        ablation,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn zero_iterations_return_the_model_unchanged() {
    let s = setup(35.0);
    let (m, report) = adapt(s.model.clone(), &s.source, &s.target, &s.cp, &AdaptConfig { iterations: 0, ..Default::default() }).unwrap();
    assert_eq!(m, s.model);
    assert!(report.records.is_empty());
}

#[test]
fn schedule_grows_to_everything() {
    let s = setup(35.0);
    let (_, report) = adapt(s.model, &s.source, &s.target, &s.cp, &config(Ablation::A4)).unwrap();
    let r = &report.records;
    assert_eq!(r.len(), 45);
    assert_eq!(r[0].percent, 12.0);
    assert_eq!(r[44].percent, 100.0);
    // first round admits ceil(12% of each pseudo-class)
    for (c, &pred) in r[0].predicted_per_class.iter().enumerate() {
        assert_eq!(r[0].included_per_class[c], (12 * pred).div_ceil(100).max(1).min(pred));
    }
    // without exclusion the last round trains on every target sample
    assert_eq!(r[44].included_per_class.iter().sum::<usize>(), 300);
    assert!(r.iter().all(|it| it.source_count == 50 && it.excluded_per_class.iter().all(|&e| e == 0)));
}

#[test]
fn balanced_proportions_cap_every_class() {
    let s = setup(35.0);
    let (_, report) = adapt(s.model, &s.source, &s.target, &s.cp, &config(Ablation::None)).unwrap();
    let last = report.records.last().unwrap();
    assert!(last.included_per_class.iter().all(|&n| n <= 100));
    for it in &report.records {
        for c in 0..3 {
            assert!(it.included_per_class[c] + it.excluded_per_class[c] <= it.predicted_per_class[c]);
        }
    }
}

#[test]
fn a2_admits_everything_from_round_one() {
    let s = setup(35.0);
    let (_, report) = adapt(s.model, &s.source, &s.target, &s.cp, &config(Ablation::A2)).unwrap();
    assert!(report.records.iter().all(|it| it.percent == 100.0));
}

#[test]
fn adaptation_is_deterministic() {
    let s = setup(35.0);
    let run = || adapt(s.model.clone(), &s.source, &s.target, &s.cp, &config(Ablation::None)).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn no_shift_leaves_accuracy_near_source_only() {
    let s = setup(0.0);
    let (source, target) = gen_rotated_gaussians(&GaussianSpec {
        per_class: 100,
        theta: 0.0,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let labels = target.hidden_labels().unwrap();
    let before = pppl_core::metrics::evaluate(&s.model, target.features(), labels, None).unwrap().accuracy;
    let (m, _) = adapt(s.model, &source, target.features(), &s.cp, &config(Ablation::None)).unwrap();
    let after = pppl_core::metrics::evaluate(&m, target.features(), labels, None).unwrap().accuracy;
    assert!((after - before).abs() < 0.05, "{before} -> {after}");
}

#[test]
fn empty_proportions_make_rounds_degenerate() {
    let s = setup(35.0);
    // with two target samples every class is capped at zero
    let cp = ClassProportions::new(vec![1.0 / 3.0; 3], ProportionKind::Guessed).unwrap();
    let tiny = s.target.select_rows(&[0, 1]);
    let err = adapt(s.model, &s.source, &tiny, &cp, &config(Ablation::None)).unwrap_err();
    assert!(matches!(err, Error::Degenerate { round: 1 }));
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = setup(35.0);
    let short = AdaptConfig {
        iterations: 10,
        ..Default::default()
    };
    assert!(matches!(adapt(s.model.clone(), &s.source, &s.target, &s.cp, &short), Err(Error::Config(_))));
    let two = ClassProportions::uniform(2).unwrap();
    assert!(adapt(s.model.clone(), &s.source, &s.target, &two, &config(Ablation::None)).is_err());
    let wide = Matrix::zeros(4, 3);
    assert!(matches!(adapt(s.model, &s.source, &wide, &s.cp, &config(Ablation::None)), Err(Error::Shape(_))));
}
