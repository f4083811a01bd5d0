mod common;

use akbr::experiment::{export_attention_heatmap, mean_and_std_error, run_akbr, sweep_csv, sweep_wl_iterations, ExperimentConfig};
use akbr::tudataset::{load_tudataset, LabelSource};

fn toy_config() -> ExperimentConfig {
    ExperimentConfig {
        dataset: "triangle_fixture".into(),
        epochs: 200,
        folds: 5,
        repeats: 1,
        ..ExperimentConfig::for_dataset("MUTAG")
    }
}

#[test]
fn toy_sweep_does_not_degrade() {
    let d = common::triangle_fixture();
    let reports = sweep_wl_iterations(&toy_config(), 1..=3, &d).unwrap();
    let means: Vec<f64> = reports.iter().map(|r| r.mean_accuracy).collect();
    assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    let csv = sweep_csv(&reports);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().nth(1).unwrap().starts_with("1,"));
}

#[test]
fn report_aggregates_are_recomputable() {
    let d = common::triangle_fixture();
    let cfg = ExperimentConfig {
        epochs: 30,
        repeats: 2,
        ..toy_config()
    };
    let r = run_akbr(&cfg, &d).unwrap();
    assert_eq!(r.fold_accuracies.len(), 2);
    assert!(r.fold_accuracies.iter().all(|f| f.len() == 5));
    let (m, se) = mean_and_std_error(&r.all_scores());
    assert_eq!(r.mean_accuracy, m);
    assert_eq!(r.std_error, se);
    assert!((r.mean_final_attention.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(r.artifacts.curves.len(), 10);
    assert_eq!(r.artifacts.attention_trace.len(), 30);
}

#[test]
fn mutag_heatmap_has_thirteen_rows_per_iteration() {
    let d = load_tudataset(common::mutag_dir(), "MUTAG", LabelSource::File).unwrap();
    let base = ExperimentConfig {
        epochs: 1,
        folds: 2,
        repeats: 1,
        ..ExperimentConfig::for_dataset("MUTAG")
    };
    let reports = sweep_wl_iterations(&base, 1..=6, &d).unwrap();
    let csv = export_attention_heatmap(&reports, 13, 6).unwrap();
    let rows: Vec<(usize, usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 78);
    for it in 1..=6 {
        let part: Vec<f64> = rows.iter().filter(|r| r.0 == it).map(|r| r.2).collect();
        assert_eq!(part.len(), 13);
        // a slice of a probability vector
        assert!(part.iter().all(|&s| s > 0.0 && s < 1.0));
        assert!(part.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}
