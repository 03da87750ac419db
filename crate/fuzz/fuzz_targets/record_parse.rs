#![no_main]

use eamac::io::Record;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = Record::parse(text) {
        let printed = rec.to_string();
        let back = Record::parse(&printed).expect("printed record parses");
        assert_eq!(back, rec);
        assert_eq!(back.to_string(), printed);
    }
});
