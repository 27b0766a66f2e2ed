//! Runs every acceptance criterion at full resolution and prints one line
//! per criterion. Run with `--nocapture` to see the report.

use frontspeed::verification::{Profile, Suite};

#[test]
fn acceptance_criteria() {
    println!();
    let suite = Suite::new(Profile::Full, 20240601);
    let outcomes = suite.run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
