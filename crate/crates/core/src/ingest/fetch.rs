use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};

pub const PHYSIONET_EEGMMIDB_URL: &str = "https://physionet.org/files/eegmmidb/1.0.0";

/// `S001R07.edf` for subject 1, record 7.
pub fn physionet_file_name(subject: u32, record: u32) -> String {
    format!("S{subject:03}R{record:02}.edf")
}

fn relative_path(subject: u32, record: u32) -> PathBuf {
    Path::new(&format!("S{subject:03}")).join(physionet_file_name(subject, record))
}

#[derive(Debug, Clone)]
pub struct Fetcher {
    pub base_url: String,
    pub timeout: Duration,
}

impl Default for Fetcher {
    fn default() -> Self {
        Self {
            base_url: PHYSIONET_EEGMMIDB_URL.to_string(),
            timeout: Duration::from_secs(120),
        }
    }
}

impl Fetcher {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            ..Self::default()
        }
    }

    /// Returns the cached path for `(subject, record)`, downloading it first
    /// if absent. Partial downloads never appear at the final path.
    pub fn fetch(&self, subject: u32, record: u32, cache_dir: &Path) -> Result<PathBuf> {
        if !(1..=109).contains(&subject) {
            return Err(Error::validation(format!("subject {subject} outside 1..=109")));
        }
        if !(1..=14).contains(&record) {
            return Err(Error::validation(format!("record {record} outside 1..=14")));
        }
        let rel = relative_path(subject, record);
        let target = cache_dir.join(&rel);
        if target.is_file() {
            log::debug!("cache hit {}", target.display());
            return Ok(target);
        }
        let dir = target.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let url = format!(
            "{}/S{subject:03}/{}",
            self.base_url.trim_end_matches('/'),
            physionet_file_name(subject, record)
        );
        log::info!("downloading {url}");
        let body = self.download(&url)?;
        if body.len() < 8 || &body[..8] != b"0       " {
            return Err(Error::parse(
                1,
                None,
                format!("{url}: response ({} bytes) is not an EDF file", body.len()),
            ));
        }

        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(&body).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        Ok(target)
    }

    fn download(&self, url: &str) -> Result<Vec<u8>> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut response = agent
            .get(url)
            .call()
            .map_err(|e| Error::Network(format!("{url}: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Network(format!("{url}: HTTP status {}", status.as_u16())));
        }
        let mut body = Vec::new();
        response
            .body_mut()
            .as_reader()
            .read_to_end(&mut body)
            .map_err(|e| Error::Network(format!("{url}: {e}")))?;
        Ok(body)
    }
}

pub fn fetch_physionet(subject: u32, record: u32, cache_dir: &Path) -> Result<PathBuf> {
    Fetcher::default().fetch(subject, record, cache_dir)
}
