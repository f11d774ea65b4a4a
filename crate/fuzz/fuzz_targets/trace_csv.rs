#![no_main]

use libfuzzer_sys::fuzz_target;
use lift_ddmin::trace::{read_test_input, write_test_input};

// Whatever parses must survive a write/read round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(loaded) = read_test_input(data) else { return };
    let mut buf = Vec::new();
    write_test_input(&loaded.input, &mut buf).expect("writing a parsed trace");
    let again = read_test_input(buf.as_slice()).expect("re-reading a written trace");
    assert_eq!(loaded.input, again.input);
});
