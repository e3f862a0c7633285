//! HTTP embedding client: `POST <endpoint>` with an `image/png` body,
//! answered by `{"dim": n, "values": [...]}`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use degbench_core::embed::Embedding;
use degbench_core::ImageBuf;
use serde::{Deserialize, Serialize};

use crate::imageio::encode_png;

/// Environment variable holding an optional bearer token.
pub const TOKEN_ENV: &str = "DEGBENCH_EMBED_TOKEN";

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("embedding service timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },
    #[error("embedding service unreachable after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("embedding service answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("embedding dimension mismatch: expected {expected}, service returned {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("malformed embedding response: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub backoff_ms: u64,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout_ms: 30_000,
            retries: 3,
            backoff_ms: 200,
        }
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    values: Vec<f64>,
}

pub struct RemoteClient {
    config: RemoteConfig,
    token: Option<String>,
    agent: ureq::Agent,
    /// 0 until the first response (or a store) fixes the dimension.
    dim: AtomicUsize,
}

impl RemoteClient {
    pub fn new(config: RemoteConfig, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            token,
            agent,
            dim: AtomicUsize::new(0),
        }
    }

    /// Reads the token from [`TOKEN_ENV`].
    pub fn from_env(config: RemoteConfig) -> Self {
        let token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Self::new(config, token)
    }

    /// Requires every later response to have dimension `dim`.
    pub fn expect_dim(&self, dim: usize) -> Result<(), RemoteError> {
        match self.dim.compare_exchange(0, dim, Ordering::SeqCst, Ordering::SeqCst) {
            Ok(_) => Ok(()),
            Err(d) if d == dim => Ok(()),
            Err(d) => Err(RemoteError::DimMismatch {
                expected: d,
                found: dim,
            }),
        }
    }

    pub fn embed(&self, img: &ImageBuf) -> Result<Embedding, RemoteError> {
        self.embed_png(&encode_png(img))
    }

    pub fn embed_png(&self, png: &[u8]) -> Result<Embedding, RemoteError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut req = self
                .agent
                .post(&self.config.endpoint)
                .header("Content-Type", "image/png")
                .header("Accept", "application/json");
            if let Some(t) = &self.token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            let err = match req.send(png) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if !(200..300).contains(&status) {
                        let body = resp.body_mut().read_to_string().unwrap_or_default();
                        return Err(RemoteError::Status {
                            status,
                            body: body.chars().take(200).collect(),
                        });
                    }
                    let parsed: EmbedResponse = resp
                        .body_mut()
                        .read_json()
                        .map_err(|e| RemoteError::Malformed(e.to_string()))?;
                    return self.accept(parsed);
                }
                Err(e) => e,
            };
            let timed_out = matches!(err, ureq::Error::Timeout(_));
            let transport = timed_out
                || matches!(
                    err,
                    ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound
                );
            if !transport {
                return Err(RemoteError::Transport {
                    attempts: attempt,
                    message: err.to_string(),
                });
            }
            if attempt > self.config.retries {
                return Err(if timed_out {
                    RemoteError::Timeout { attempts: attempt }
                } else {
                    RemoteError::Transport {
                        attempts: attempt,
                        message: err.to_string(),
                    }
                });
            }
            let backoff = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(10));
            thread::sleep(Duration::from_millis(backoff));
        }
    }

    fn accept(&self, r: EmbedResponse) -> Result<Embedding, RemoteError> {
        if r.values.len() != r.dim {
            return Err(RemoteError::Malformed(format!(
                "dim is {} but {} values were sent",
                r.dim,
                r.values.len()
            )));
        }
        self.expect_dim(r.dim)?;
        Embedding::from_raw(&r.values).map_err(|e| RemoteError::Malformed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Request head and body, per connection.
    type Seen = Arc<Mutex<Vec<(String, Vec<u8>)>>>;

    /// One canned reply per connection; `None` closes without answering.
    fn serve(replies: Vec<Option<(u16, String)>>) -> (String, Seen) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        thread::spawn(move || {
            for reply in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut head = String::new();
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    head.push_str(&line);
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                log.lock().unwrap().push((head, body));
                if let Some((status, json)) = reply {
                    write!(
                        stream,
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{json}",
                        json.len()
                    )
                    .unwrap();
                }
            }
        });
        (url, seen)
    }

    fn client(url: &str, retries: u32) -> RemoteClient {
        RemoteClient::new(
            RemoteConfig {
                endpoint: url.into(),
                timeout_ms: 2_000,
                retries,
                backoff_ms: 1,
            },
            Some("secret".into()),
        )
    }

    fn img() -> ImageBuf {
        ImageBuf::from_fn(4, 4, 3, |x, y, c| (x + y * 4 + c) as u8).unwrap()
    }

    #[test]
    fn normalizes_response_and_sends_identical_payloads() {
        let ok = || Some((200, r#"{"dim": 2, "values": [3.0, 4.0]}"#.to_string()));
        let (url, seen) = serve(vec![ok(), ok()]);
        let c = client(&url, 0);
        let a = c.embed(&img()).unwrap();
        let b = c.embed(&img()).unwrap();
        assert_eq!(a.values(), &[0.6, 0.8]);
        assert!((a.norm() - 1.0).abs() < 1e-5);
        assert_eq!(a, b);
        let seen = seen.lock().unwrap();
        assert_eq!(seen[0].1, seen[1].1);
        assert_eq!(seen[0].1, encode_png(&img()));
        let head = seen[0].0.to_ascii_lowercase();
        assert!(head.starts_with("post /embed "));
        assert!(head.contains("content-type: image/png"));
        assert!(head.contains("authorization: bearer secret"));
    }

    #[test]
    fn status_errors_are_not_retried() {
        let (url, seen) = serve(vec![Some((503, "busy".into()))]);
        match client(&url, 3).embed(&img()) {
            Err(RemoteError::Status { status: 503, body }) => assert_eq!(body, "busy"),
            other => panic!("{other:?}"),
        }
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn transport_errors_are_retried() {
        let (url, seen) = serve(vec![None, Some((200, r#"{"dim":1,"values":[-2]}"#.into()))]);
        let e = client(&url, 2).embed(&img()).unwrap();
        assert_eq!(e.values(), &[-1.0]);
        assert_eq!(seen.lock().unwrap().len(), 2);
    }

    #[test]
    fn unreachable_service_gives_up() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        match client(&format!("http://127.0.0.1:{port}/embed"), 1).embed(&img()) {
            Err(RemoteError::Transport { attempts: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slow_service_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let hold = thread::spawn(move || {
            let conns: Vec<_> = (0..2).map(|_| listener.accept().unwrap()).collect();
            thread::sleep(Duration::from_millis(800));
            drop(conns);
        });
        let c = RemoteClient::new(
            RemoteConfig {
                endpoint: url,
                timeout_ms: 150,
                retries: 1,
                backoff_ms: 1,
            },
            None,
        );
        match c.embed(&img()) {
            Err(RemoteError::Timeout { attempts: 2 }) => {}
            other => panic!("{other:?}"),
        }
        hold.join().unwrap();
    }

    #[test]
    fn dimension_changes_are_rejected() {
        let (url, _) = serve(vec![
            Some((200, r#"{"dim":2,"values":[1,0]}"#.into())),
            Some((200, r#"{"dim":3,"values":[1,0,0]}"#.into())),
            Some((200, r#"{"dim":3,"values":[1,0]}"#.into())),
        ]);
        let c = client(&url, 0);
        c.embed(&img()).unwrap();
        match c.embed(&img()) {
            Err(RemoteError::DimMismatch { expected: 2, found: 3 }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(c.embed(&img()), Err(RemoteError::Malformed(_))));
    }
}
