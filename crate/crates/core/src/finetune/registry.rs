//! Backend registry: maps checkpoint names to encoder instances.
//!
//! `stub` always works and needs no files. The known checkpoint names load
//! from `$TWEETOPIC_BACKEND_CACHE/<name>.stfb` when such a blob has been
//! installed; otherwise they fail with a backend error so callers can report
//! the missing checkpoint cleanly.

use std::path::PathBuf;

use super::{read_backend_blob, EncoderBackend, HashedEncoder};
use crate::error::{Error, Result};

/// Environment variable pointing at the backend cache directory.
pub const CACHE_ENV: &str = "TWEETOPIC_BACKEND_CACHE";

/// Checkpoint names the registry recognizes besides `stub`.
pub const KNOWN_CHECKPOINTS: [&str; 16] = [
    "electra-base-discriminator",
    "electra-base-generator",
    "distilbert-base-uncased",
    "distilroberta-base",
    "bert-base-uncased",
    "albert-base-v2",
    "roberta-base",
    "paraphrase-mpnet-base-v2-fuzzy-matcher",
    "paraphrase-mpnet-base-v2",
    "all-mpnet-base-v1",
    "all-mpnet-base-v2",
    "all-MiniLM-L12-v2",
    "paraphrase-albert-small-v2",
    "all-roberta-large-v1",
    "paraphrase-MiniLM-L3-v2",
    "all-distilroberta-v1",
];

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

/// Creates a backend by name. `dim` and `seed` apply to the stub; installed
/// checkpoint blobs carry their own dimension and weights.
pub fn create_backend(name: &str, dim: usize, seed: u64) -> Result<Box<dyn EncoderBackend>> {
    if name == "stub" {
        if dim < 8 {
            return Err(Error::invalid("dim", "stub dimension must be at least 8"));
        }
        return Ok(Box::new(HashedEncoder::stub(dim, seed)));
    }
    if !KNOWN_CHECKPOINTS.contains(&name) {
        return Err(Error::Backend {
            name: name.to_string(),
            message: format!(
                "unknown backend; expected \"stub\" or one of the registered checkpoints: {}",
                KNOWN_CHECKPOINTS.join(", ")
            ),
        });
    }
    let Some(dir) = cache_dir() else {
        return Err(Error::Backend {
            name: name.to_string(),
            message: format!(
                "checkpoint not installed; set {CACHE_ENV} to a directory containing {name}.stfb"
            ),
        });
    };
    let path = dir.join(format!("{name}.stfb"));
    if !path.exists() {
        return Err(Error::Backend {
            name: name.to_string(),
            message: format!("checkpoint not installed: {} does not exist", path.display()),
        });
    }
    let (encoder, _) = read_backend_blob(&path)?;
    Ok(Box::new(encoder))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_is_always_available() {
        let b = create_backend("stub", 16, 3).unwrap();
        assert_eq!(b.name(), "stub");
        assert_eq!(b.embedding_dim(), 16);
        assert!(b.trainable());
    }

    #[test]
    fn unknown_backend_is_an_error() {
        let err = create_backend("made-up-model", 16, 0).unwrap_err();
        assert!(matches!(err, Error::Backend { .. }));
    }

    #[test]
    fn known_checkpoint_without_blob_reports_not_installed() {
        // The test environment does not install checkpoints.
        let err = create_backend("all-roberta-large-v1", 16, 0).unwrap_err();
        match err {
            Error::Backend { name, message } => {
                assert_eq!(name, "all-roberta-large-v1");
                assert!(message.contains("not installed"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
