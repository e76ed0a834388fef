#![no_main]
use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use motic::power::Profile;
use motic::profile;
use motic::text;

fn k3() -> &'static Profile {
    static P: OnceLock<Profile> = OnceLock::new();
    P.get_or_init(|| profile::hypersurface(2, 3, &[4], Default::default()).unwrap())
}

fuzz_target!(|data: &[u8]| {
    let _ = text::parse_class(k3(), data, None);
});
