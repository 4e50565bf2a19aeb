//! The HTTP clients against a one-thread mock server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;

use avpref::client::{HttpExtractor, HttpResponder};
use avpref::config::ClientSettings;
use avpref_core::evalharness::fixtures::shirt_item;
use avpref_core::evalharness::{circular_eval, extract, RetryPolicy, Verdict};

/// Answers each request with `{"text": <reply>}` and forwards the request
/// headers and body.
fn serve(replies: Vec<String>) -> (String, mpsc::Receiver<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/answer", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for reply in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut headers = String::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            tx.send((headers, String::from_utf8(body).unwrap())).unwrap();
            let payload = serde_json::json!({ "text": reply }).to_string();
            let mut w = stream;
            write!(
                w,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

#[test]
fn responder_and_extractor_round_trip() {
    let item = shirt_item();
    let n = item.choices.len();
    // Choices rotate between passes; answering with the text stays correct.
    let (url, rx) = serve(vec![item.correct_text().unwrap().to_string(); n]);
    std::env::set_var("AVPREF_RESPONDER_URL", &url);
    std::env::set_var("AVPREF_RESPONDER_TOKEN", "secret-token");
    let responder = HttpResponder::from_env(&ClientSettings {
        model: Some("stub".into()),
        ..ClientSettings::default()
    })
    .unwrap();
    let v = circular_eval(&item, &responder, None, RetryPolicy::default()).unwrap();
    assert!(v.solved, "{v:?}");
    assert_eq!(v.passes_attempted, n);
    let (headers, body) = rx.recv().unwrap();
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer secret-token"));
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["model"], "stub");
    assert_eq!(body["item_id"], item.id.as_str());
    assert!(body["prompt"].as_str().unwrap().contains(&item.question));

    let (url, rx) = serve(vec!["B".to_string()]);
    std::env::set_var("AVPREF_EXTRACTOR_URL", &url);
    std::env::remove_var("AVPREF_EXTRACTOR_TOKEN");
    let extractor = HttpExtractor::from_env(&ClientSettings::default()).unwrap();
    let r = extract("I'd go with the second one, probably", &item, Some(&extractor), RetryPolicy::default());
    assert_eq!(r.verdict, Verdict::Matched('B'));
    let (headers, body) = rx.recv().unwrap();
    assert!(!headers.to_ascii_lowercase().contains("authorization"));
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert!(body["prompt"].as_str().unwrap().contains("I'd go with the second one"));

    // Nothing listens here any more.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    std::env::set_var("AVPREF_EXTRACTOR_URL", &url);
    let extractor = HttpExtractor::from_env(&ClientSettings {
        timeout_secs: 2,
        ..ClientSettings::default()
    })
    .unwrap();
    let r = extract("hmm, hard to say", &shirt_item(), Some(&extractor), RetryPolicy { max_attempts: 2 });
    assert_eq!(r.verdict, Verdict::Error);
}
