//! Configuration, experiment harness, metrics emission and comparison for
//! the splitsim simulator. The binary in `main.rs` is a thin shell over
//! these modules.

pub mod config;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod runner;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SPLITSIM_OUT_DIR";

/// Output directory resolution: explicit flag, then the environment
/// variable, then the config file, then `./runs`.
pub fn resolve_out_dir(
    flag: Option<std::path::PathBuf>,
    config: Option<&std::path::Path>,
) -> std::path::PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return dir.into();
        }
    }
    if let Some(dir) = config {
        return dir.to_path_buf();
    }
    "runs".into()
}
