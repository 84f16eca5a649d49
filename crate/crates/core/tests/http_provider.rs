use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use reqmon_core::authoring::{
    author_candidates, AuthoringError, AuthoringRequest, HttpProvider, ProviderConfig, ProviderKind, VocabEntry,
};

struct Seen {
    head: String,
    body: String,
}

/// Serves one scripted reply per connection and reports each request.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            tx.send(Seen {
                head,
                body: String::from_utf8(buf).unwrap(),
            })
            .unwrap();
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn chat_reply(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

fn request() -> AuthoringRequest {
    AuthoringRequest::new(
        "The rover shall eventually encounter a cone.",
        vec![
            VocabEntry { name: "on_path".into(), gloss: "rover on the path".into() },
            VocabEntry { name: "cone_encounter".into(), gloss: "cone ahead".into() },
        ],
    )
}

fn config(url: String, env: &str, retries: u32) -> ProviderConfig {
    ProviderConfig {
        kind: ProviderKind::HttpChatCompletion,
        endpoint: url,
        model: "test-model".into(),
        credential_env: env.into(),
        timeout_secs: 5,
        retries,
    }
}

#[test]
fn retries_server_errors_and_sends_the_credential() {
    let reply = "1. globally, the rover shall eventually satisfy cone_encounter\n\
                 2. globally, the rover shall eventually satisfy cone_encounter\n\
                 3. nonsense line\n";
    let (url, rx) = serve(vec![
        (503, "{}".into()),
        (429, "{}".into()),
        (200, chat_reply(reply)),
    ]);
    std::env::set_var("REQMON_TEST_KEY_A", "sk-secret-123");
    let cfg = config(url, "REQMON_TEST_KEY_A", 2);
    let out = author_candidates(&request(), &HttpProvider::new(cfg.clone())).unwrap();
    assert_eq!(out.candidates.len(), 1);
    assert_eq!(out.candidates[0].formula.to_string(), "G F cone_encounter");
    assert_eq!(out.diagnostics.len(), 1);
    assert_eq!(out.diagnostics[0].line, 3);

    let seen: Vec<Seen> = rx.iter().take(3).collect();
    for s in &seen {
        assert!(s.head.starts_with("POST /v1/chat/completions"));
        assert!(s.head.contains("Bearer sk-secret-123"), "{}", s.head);
        let body: serde_json::Value = serde_json::from_str(&s.body).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["messages"][1]["role"], "user");
        assert!(body["messages"][0]["content"].as_str().unwrap().contains("cone_encounter"));
    }

    let stored = serde_json::to_string(&cfg).unwrap();
    assert!(!stored.contains("sk-secret"));
    assert!(stored.contains("REQMON_TEST_KEY_A"));
}

#[test]
fn gives_up_after_the_retry_budget() {
    let (url, _rx) = serve(vec![(500, "{}".into()), (502, "{}".into())]);
    let err = author_candidates(&request(), &HttpProvider::new(config(url, "REQMON_TEST_KEY_UNSET", 1))).unwrap_err();
    assert!(matches!(err, AuthoringError::Transport { attempts: 2, .. }), "{err}");
}

#[test]
fn client_errors_are_not_retried() {
    let (url, rx) = serve(vec![(400, "{}".into()), (200, chat_reply("x"))]);
    let err = author_candidates(&request(), &HttpProvider::new(config(url, "REQMON_TEST_KEY_UNSET", 3))).unwrap_err();
    assert!(matches!(err, AuthoringError::BadResponse(_)), "{err}");
    let seen: Vec<Seen> = rx.try_iter().collect();
    assert_eq!(seen.len(), 1);
    assert!(!seen[0].head.to_ascii_lowercase().contains("authorization"));
}

#[test]
fn malformed_reply_is_reported() {
    let (url, _rx) = serve(vec![(200, r#"{"choices": []}"#.into())]);
    let err = author_candidates(&request(), &HttpProvider::new(config(url, "REQMON_TEST_KEY_UNSET", 0))).unwrap_err();
    assert!(matches!(err, AuthoringError::BadResponse(_)), "{err}");
}
