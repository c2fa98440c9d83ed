#![no_main]

use libfuzzer_sys::fuzz_target;
use qnt_cli::config::{ConfigFile, Experiment, Overrides, SweepConfig};

// Any manifest either resolves or is rejected with an error; a resolved grid
// stays inside the unit interval.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ConfigFile::parse(text) else { return };
    let overrides = Overrides::default();
    for experiment in [Experiment::SingleLink, Experiment::Ratio, Experiment::Star, Experiment::Benchmark] {
        if let Ok(config) = SweepConfig::resolve(&file, experiment, &overrides) {
            let points = config.grid.points();
            assert!(!points.is_empty());
            for w in [points[0], points[points.len() - 1]] {
                assert!((0.0..=1.0).contains(&w));
            }
        }
    }
});
