// A suite runs several configurations under several seeds and collects
// every metric into one CSV. A failing run is reported and skipped.

use std::fs;

use temporal_embed::pipeline::{run_suite, Suite};
use temporal_embed::Error;

const RUN: &str = r#"
T = 6
deterministic = true

[synthetic]
n = 40
m = 240
T = 8
target = "linear"

[walk]
walks_per_node = 3
walk_length = 15

[skipgram]
dim = 4
window = 2
epochs = 1

[train]
epochs = 4
batch_size = 64
learning_rate = 0.01
"#;

const SUITE: &str = r#"
[[runs]]
id = "lstm"
seeds = [0, 1]
config_file = "run.toml"

[[runs]]
id = "too-dense"
seeds = [0]
config = { synthetic = { n = 5, m = 50, T = 2, target = "linear" } }
"#;

pub fn run_example() -> temporal_embed::Result<()> {
    let dir = std::env::temp_dir().join(format!("temporal-embed-suite-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    fs::write(dir.join("run.toml"), RUN).map_err(|e| Error::io(&dir, e))?;
    fs::write(dir.join("suite.toml"), SUITE).map_err(|e| Error::io(&dir, e))?;

    let suite = Suite::load(&dir.join("suite.toml"));
    let _ = fs::remove_dir_all(&dir);
    let outcome = run_suite(&suite?, None);
    print!("{}", outcome.to_csv());
    for f in &outcome.failures {
        println!("# {} seed {} failed: {}", f.config_id, f.seed, f.message);
    }
    Ok(())
}

fn main() -> temporal_embed::Result<()> {
    run_example()
}
