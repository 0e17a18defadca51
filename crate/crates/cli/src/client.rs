use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder};
use reqwest::Method;
use serde_json::Value;

use crate::CliError;

pub struct Api {
    base: String,
    token: Option<String>,
    http: Client,
}

/// Percent-encodes one path segment.
pub fn segment(s: &str) -> String {
    let mut out = String::new();
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~:".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl Api {
    pub fn new(base: &str, token: Option<String>) -> Self {
        Api {
            base: base.trim_end_matches('/').to_string(),
            token,
            http: Client::builder()
                .timeout(Duration::from_secs(300))
                .build()
                .expect("http client builds"),
        }
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let req = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => req.bearer_auth(t),
            None => req,
        }
    }

    fn send(&self, req: RequestBuilder) -> Result<(String, bool), CliError> {
        let res = req.send().map_err(|e| CliError::Transport(e.to_string()))?;
        let status = res.status();
        let is_json = res
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.starts_with("application/json"));
        let text = res.text().map_err(|e| CliError::Transport(e.to_string()))?;
        if status.is_success() {
            return Ok((text, is_json));
        }
        let body: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
        Err(CliError::Api {
            status: status.as_u16(),
            code: body["error"].as_str().unwrap_or("HttpError").to_string(),
            detail: body["detail"].as_str().map_or(text.clone(), str::to_string),
        })
    }

    fn decode(text: String, is_json: bool) -> Value {
        if is_json {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        } else {
            Value::String(text)
        }
    }

    pub fn get(&self, path: &str) -> Result<Value, CliError> {
        let (text, json) = self.send(self.request(Method::GET, path))?;
        Ok(Self::decode(text, json))
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Value, CliError> {
        let req = self
            .request(Method::POST, path)
            .header("content-type", "application/json")
            .body(body.to_string());
        let (text, json) = self.send(req)?;
        Ok(Self::decode(text, json))
    }
}
