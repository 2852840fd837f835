use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use transim::{BackendError, Error};

use crate::backends::BackendInfo;
use crate::config::RunConfig;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_BACKEND: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

/// Exit code and short kind for a failed run.
pub fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::Config(_) => (EXIT_CONFIG, "config"),
            Error::Backend(_) => (EXIT_BACKEND, "backend"),
            Error::InvalidInput(_)
            | Error::DegenerateTranslation { .. }
            | Error::Row { .. }
            | Error::Data(_)
            | Error::DegenerateSplit(_)
            | Error::UndefinedSimilarity(_)
            | Error::UndefinedCorrelation(_)
            | Error::Io(_) => (EXIT_DATA, "data"),
        };
    }
    if err.downcast_ref::<BackendError>().is_some() {
        return (EXIT_BACKEND, "backend");
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return (EXIT_DATA, "data");
    }
    (EXIT_INTERNAL, "internal")
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

/// Provenance embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub tool_version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub backend: BackendInfo,
    pub signatures: BTreeMap<String, String>,
}

impl ReportHeader {
    pub fn new(config: &RunConfig, backend: &BackendInfo, signatures: BTreeMap<String, String>) -> Self {
        ReportHeader {
            tool_version: transim::TOOL_VERSION,
            config_hash: config.hash(),
            seed: config.seed,
            backend: backend.clone(),
            signatures,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: anyhow::Error| classify(&e).0;
        assert_eq!(code(Error::Config("x".into()).into()), EXIT_CONFIG);
        assert_eq!(code(Error::Data("x".into()).into()), EXIT_DATA);
        assert_eq!(
            code(Error::Backend(BackendError::Protocol("x".into())).into()),
            EXIT_BACKEND
        );
        assert_eq!(code(BackendError::Protocol("x".into()).into()), EXIT_BACKEND);
        assert_eq!(code(anyhow::anyhow!("boom")), EXIT_INTERNAL);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
