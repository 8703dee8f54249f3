//! Parses a config and dispatches it the way the binary does.

use wavelab::cli::dispatch;
use wavelab::config::parse_config;
use wavelab::error::Result;

const CONFIG: &str = r#"
command = "continuity"
eps = 0.05
T = 1.0
a = 1.0
lambda = 1.0
directions = 3
seed = 7
"#;

fn main() -> Result<()> {
    let cfg = parse_config(CONFIG)?;
    print!("{}", cfg.to_toml()?);
    let out = std::env::temp_dir().join("wavelab-run-config");
    for f in dispatch(&cfg, &out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
