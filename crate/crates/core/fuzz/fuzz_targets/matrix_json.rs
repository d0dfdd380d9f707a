#![no_main]

use libfuzzer_sys::fuzz_target;

use causentropy::qmatrix::{self, ComplexMatrix};

fuzz_target!(|data: &[u8]| {
    let Ok(m) = serde_json::from_slice::<ComplexMatrix>(data) else { return };
    if m.is_square() && m.rows() <= 16 {
        let _ = qmatrix::hermitian_eigenvalues(&m);
    }
});
