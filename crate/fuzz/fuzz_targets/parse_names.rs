#![no_main]

use libfuzzer_sys::fuzz_target;
use qnt_cli::config::parse_toggle;
use qnt_core::{FisherMode, PlanKind, Scheme};

// Names round-trip through their display form.
fuzz_target!(|data: &[u8]| {
    let Ok(word) = std::str::from_utf8(data) else { return };
    if let Ok(s) = word.parse::<Scheme>() {
        assert_eq!(s.to_string().parse::<Scheme>(), Ok(s));
    }
    if let Ok(p) = word.parse::<PlanKind>() {
        assert_eq!(p.to_string().parse::<PlanKind>().ok(), Some(p));
    }
    if let Ok(m) = word.parse::<FisherMode>() {
        assert_eq!(m.to_string().parse::<FisherMode>(), Ok(m));
    }
    let _ = parse_toggle(word);
});
