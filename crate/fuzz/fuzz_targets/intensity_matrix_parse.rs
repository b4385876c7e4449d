#![no_main]

use libfuzzer_sys::fuzz_target;
use twophoton::biphoton::IntensityMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = IntensityMatrix::parse(text) {
        let again = IntensityMatrix::parse(&m.to_text()).expect("re-emitted matrix parses");
        assert_eq!(again, m);
    }
});
