//! Regenerates the JSON scenario files under `fixtures/`.

use ccsc_core::fixtures;
use ccsc_core::model::json::scenario_to_json;

fn main() -> std::io::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;
    let files = [
        ("siso_three_user.json", fixtures::siso_three_user(40.0)),
        ("mimo_three_user_a.json", fixtures::mimo_three_user_a(40.0)),
        ("mimo_three_user_b.json", fixtures::mimo_three_user_b(0.0)),
        ("two_user_bpsk.json", fixtures::two_user_bpsk(10.0)),
    ];
    for (name, scenario) in files {
        std::fs::write(dir.join(name), scenario_to_json(&scenario) + "\n")?;
    }
    Ok(())
}
