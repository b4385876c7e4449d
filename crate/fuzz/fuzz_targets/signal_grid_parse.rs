#![no_main]

use libfuzzer_sys::fuzz_target;
use twophoton::signal::SignalGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = SignalGrid::parse(text) {
        let again = SignalGrid::parse(&grid.to_text()).expect("re-emitted grid parses");
        assert_eq!(again, grid);
    }
});
