//! Shipped example manifests resolve, and fuzz corpus seeds replay cleanly.

use std::path::PathBuf;

use qnt_cli::config::{ConfigFile, Experiment, Overrides, SweepConfig};

fn dir(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn files(rel: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir(rel)).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    assert!(!out.is_empty(), "{rel} is empty");
    out
}

#[test]
fn examples_resolve() {
    let all = [Experiment::SingleLink, Experiment::Ratio, Experiment::Star, Experiment::Benchmark];
    for path in files("examples") {
        let file = ConfigFile::load(&path).unwrap();
        let resolved: Vec<_> = all
            .iter()
            .filter_map(|&e| SweepConfig::resolve(&file, e, &Overrides::default()).ok())
            .collect();
        assert_eq!(resolved.len(), 1, "{} should name exactly one experiment", path.display());
        assert!(resolved[0].output.is_some());
    }
}

#[test]
fn fuzz_seeds_replay() {
    let mut resolved = 0;
    for path in files("../../fuzz/corpus/parse_config").into_iter().chain(files("../../fuzz/corpus/custom_network")) {
        let text = std::fs::read_to_string(&path).unwrap();
        let Ok(file) = ConfigFile::parse(&text) else { continue };
        let _ = file.custom_plan();
        for e in [Experiment::SingleLink, Experiment::Ratio, Experiment::Star, Experiment::Benchmark] {
            resolved += SweepConfig::resolve(&file, e, &Overrides::default()).is_ok() as usize;
        }
    }
    assert!(resolved > 0);
    for path in files("../../fuzz/corpus/parse_names") {
        let word = std::fs::read_to_string(&path).unwrap();
        let _ = word.parse::<qnt_core::Scheme>();
        let _ = qnt_cli::config::parse_toggle(&word);
    }
}
