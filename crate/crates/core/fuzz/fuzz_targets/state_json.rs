#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::DensityMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rho) = DensityMatrix::from_json(text) {
        let again = DensityMatrix::from_json(&rho.to_json().expect("serialize")).expect("roundtrip");
        assert_eq!(rho, again);
    }
});
