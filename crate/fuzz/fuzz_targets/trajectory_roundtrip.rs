#![no_main]

use collapse_lab::io::{parse_trajectory, write_trajectory_to};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(traj) = parse_trajectory(data) else { return };
    let mut first = Vec::new();
    write_trajectory_to(&traj, &mut first).unwrap();
    let reparsed = parse_trajectory(&first[..]).expect("written trajectory must parse");
    let mut second = Vec::new();
    write_trajectory_to(&reparsed, &mut second).unwrap();
    assert_eq!(first, second);
    let _ = traj.to_record();
});
