#![no_main]

use libfuzzer_sys::fuzz_target;
use massqcrb::wigner::PhaseSpaceGrid;

fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = PhaseSpaceGrid::read_csv(data) {
        let mut out = Vec::new();
        grid.write_csv(&mut out).expect("write to memory");
        let back = PhaseSpaceGrid::read_csv(out.as_slice()).expect("own output parses");
        assert_eq!(back.values.len(), grid.values.len());
    }
});
