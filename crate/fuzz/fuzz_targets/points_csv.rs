#![no_main]

use eqe::io::{read_points_csv, write_points_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(points) = read_points_csv(data) {
        assert!(points.nrows() > 0 && points.iter().all(|v| v.is_finite()));
        let mut out = Vec::new();
        write_points_csv(&mut out, &points).expect("write to memory");
        assert_eq!(read_points_csv(out.as_slice()).expect("reparse"), points);
    }
});
