#![no_main]
use libfuzzer_sys::fuzz_target;
use motic::profile;

fuzz_target!(|data: &[u8]| {
    let _ = profile::parse_profile(data);
});
