#![no_main]

use libfuzzer_sys::fuzz_target;
use qnt_cli::config::ConfigFile;
use qnt_core::fisher::{plan_qfim, FisherMode};
use qnt_core::network::channel_uses;

// Graphs and task lists from `[network]`/`[[tasks]]`: any accepted plan must
// yield a ledger and a Fisher matrix of matching size.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = ConfigFile::parse(text) else { return };
    let Ok(Some((graph, plan))) = file.custom_plan() else { return };
    let ledger = channel_uses(&plan);
    assert_eq!(ledger.per_link.len(), graph.link_count());
    let params = graph.params();
    if let Ok(f) = plan_qfim(&plan, &params, FisherMode::FirstPrinciples, true) {
        assert_eq!(f.dim(), params.len());
    }
});
