#![no_main]

use cmde_core::cmde::{BenchSuite, RepairPolicy, StrategyId};
use cmde_core::dataio::parse_methods;
use cmde_core::valuation::ExtractionStrategy;
use cmde_core::ExerciseStyle;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = s.parse::<ExtractionStrategy>() {
        assert_eq!(e.to_string().parse::<ExtractionStrategy>().ok(), Some(e));
    }
    if let Ok(m) = parse_methods(s) {
        assert!(!m.is_empty());
    }
    let _ = s.parse::<ExerciseStyle>();
    let _ = s.parse::<StrategyId>();
    let _ = s.parse::<RepairPolicy>();
    let _ = s.parse::<BenchSuite>();
});
