//! Regenerate the bundled fixture CSVs under `crates/cli/fixtures`.

use std::path::Path;

use xtpanel_cli::sim::{paper_fixture_files, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let files = paper_fixture_files(FIXTURE_SEED).expect("fixture spec is valid");
    std::fs::write(dir.join("paper_shaped.csv"), files.full)?;
    std::fs::write(dir.join("paper_quarterly.csv"), files.quarterly)?;
    std::fs::write(dir.join("inst_annual.csv"), files.annual_inst)?;
    Ok(())
}
