//! Fuzz the binary snapshot-cache decoder: arbitrary bytes must be rejected
//! cleanly (no panic, no unbounded allocation), and anything that decodes
//! must re-encode to an equivalent cache.

#![no_main]

use libfuzzer_sys::fuzz_target;
use unravel_core::guiding::GuidingTrajectory;

fuzz_target!(|data: &[u8]| {
    if let Ok(traj) = GuidingTrajectory::decode(data) {
        let bytes = traj.encode();
        let again = GuidingTrajectory::decode(&bytes).expect("re-encoded cache must decode");
        assert_eq!(again.dim(), traj.dim());
        assert_eq!(again.norms(), traj.norms());
    }
});
