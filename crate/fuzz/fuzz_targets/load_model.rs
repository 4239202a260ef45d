#![no_main]

use libfuzzer_sys::fuzz_target;
use nplan::model::ModelFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = ModelFile::from_json(text) else { return };
    let saved = model.to_json();
    let back = ModelFile::from_json(&saved).expect("saved model loads");
    assert_eq!(back.to_json(), saved);
});
