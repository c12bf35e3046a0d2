#![no_main]

use cmde_core::dataio::{parse_contracts, write_contracts};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(specs) = parse_contracts(data) else {
        return;
    };
    for spec in &specs {
        assert!(spec.validate().is_ok());
    }
    let mut buf = Vec::new();
    write_contracts(&specs, &mut buf).expect("writing to memory");
    let again = parse_contracts(buf.as_slice()).expect("re-parse of written contracts");
    assert_eq!(specs, again);
});
