pub mod baseline;
pub mod detect;
pub mod evaluate;
pub mod ingest;
pub mod plotdata;

use std::path::{Path, PathBuf};

use ced_core::config::PipelineConfig;
use ced_core::EventCategory;

use crate::CmdError;

/// Shared command context: merged configuration plus global flag values.
pub struct Context {
    pub config: PipelineConfig,
    pub output_dir: Option<PathBuf>,
    pub seed_category: String,
}

impl Context {
    /// Output directory: flag, then config, then `./out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| self.config.paths.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn store_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .unwrap_or_else(|| self.output_dir().join("store"))
    }

    /// Categories selected by `--seed-category`.
    pub fn categories(&self) -> Result<Vec<EventCategory>, CmdError> {
        if self.seed_category.eq_ignore_ascii_case("all") {
            return Ok(EventCategory::ALL.to_vec());
        }
        EventCategory::parse_lenient(&self.seed_category)
            .map(|c| vec![c])
            .ok_or_else(|| {
                CmdError::Usage(format!(
                    "unknown seed category {:?} (expected all, data-breach, ddos, account-hijacking)",
                    self.seed_category
                ))
            })
    }
}

/// Resolve a required input path from flag or config.
pub fn require_path(
    flag: Option<&Path>,
    from_config: Option<&PathBuf>,
    what: &str,
) -> Result<PathBuf, CmdError> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| from_config.cloned())
        .ok_or_else(|| CmdError::Usage(format!("missing {what} (flag or [paths] config)")))?;
    if !path.exists() {
        return Err(CmdError::Input(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

pub fn store_error(e: ced_core::store::StoreError) -> CmdError {
    match e {
        ced_core::store::StoreError::NotAStore(p) => CmdError::Input(format!(
            "{} is not a corpus store (run `ced ingest` first)",
            p.display()
        )),
        other => CmdError::Internal(other.to_string()),
    }
}
