#![no_main]

use eqe::io::ParamsFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    if let Ok(file) = ParamsFile::parse(s) {
        let again = ParamsFile::parse(&file.to_json()).expect("serialized params reparse");
        assert_eq!(again, file);
        let _ = file.elliptical().map(|p| eqe::radial::entropy_elliptical(&p));
    }
});
