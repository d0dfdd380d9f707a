#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::horizon::SampledField;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(field) = SampledField::from_json(text) {
        let again = SampledField::from_json(&field.to_json().expect("serialize")).expect("roundtrip");
        assert_eq!(field, again);
        let _ = field.integrate();
    }
});
