use std::time::Duration;

use prepub_core::redif::{FetchError, FileFetcher, ResourceFetcher};

/// Fetches archives over HTTP. The archive lists its `.rdf` files, one
/// relative path per line, in `index.txt` at the base URL.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        HttpFetcher {
            client: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("http client builds"),
        }
    }

    fn get(&self, url: &str) -> Result<Vec<u8>, String> {
        let res = self.client.get(url).send().map_err(|e| e.to_string())?;
        if !res.status().is_success() {
            return Err(format!("status {}", res.status()));
        }
        res.bytes().map(|b| b.to_vec()).map_err(|e| e.to_string())
    }
}

fn join(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}

impl ResourceFetcher for HttpFetcher {
    fn enumerate(&self, base_url: &str) -> Result<Vec<String>, FetchError> {
        let index = self
            .get(&join(base_url, "index.txt"))
            .map_err(|e| FetchError::UnreachableArchive(format!("{base_url}: {e}")))?;
        let mut paths: Vec<String> = String::from_utf8_lossy(&index)
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        paths.sort();
        paths.dedup();
        Ok(paths)
    }

    fn fetch(&self, base_url: &str, path: &str) -> Result<Vec<u8>, FetchError> {
        self.get(&join(base_url, path)).map_err(|reason| FetchError::Resource {
            path: path.to_string(),
            reason,
        })
    }
}

/// Picks HTTP or local file access from the URL scheme.
#[derive(Debug, Clone)]
pub struct AnyFetcher {
    http: HttpFetcher,
}

impl Default for AnyFetcher {
    fn default() -> Self {
        AnyFetcher {
            http: HttpFetcher::new(Duration::from_secs(30)),
        }
    }
}

fn is_http(url: &str) -> bool {
    url.starts_with("http://") || url.starts_with("https://")
}

impl ResourceFetcher for AnyFetcher {
    fn enumerate(&self, base_url: &str) -> Result<Vec<String>, FetchError> {
        if is_http(base_url) {
            self.http.enumerate(base_url)
        } else {
            FileFetcher.enumerate(base_url)
        }
    }

    fn fetch(&self, base_url: &str, path: &str) -> Result<Vec<u8>, FetchError> {
        if is_http(base_url) {
            self.http.fetch(base_url, path)
        } else {
            FileFetcher.fetch(base_url, path)
        }
    }
}
