//! Exercise the generation-service wire protocol against an in-process mock
//! that echoes the request's input text back as the generation.
//!
//!     cargo run --example remote_generation

use std::io::{Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use softbandit::projection::SoftPrompt;
use softbandit::reward::{avg_rouge_reward, remote_generate};

fn spawn_echo_service() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if let Some(header_end) = find_header_end(&buf) {
                    let headers = String::from_utf8_lossy(&buf[..header_end]);
                    let content_length: usize = headers
                        .lines()
                        .find_map(|l| l.to_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse().unwrap()))
                        .unwrap_or(0);
                    if buf.len() >= header_end + 4 + content_length {
                        break;
                    }
                }
            }
            let header_end = find_header_end(&buf).unwrap();
            let body: serde_json::Value = serde_json::from_slice(&buf[header_end + 4..]).unwrap();
            let reply = serde_json::json!({ "text": body["input"] }).to_string();
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                reply.len(),
                reply
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
    });
    format!("http://{addr}")
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn main() {
    let endpoint = spawn_echo_service();
    println!("mock service at {endpoint}");

    let prompt = SoftPrompt(vec![0.25; 8]); // 2 tokens x 4 dims
    let generated = remote_generate(
        &endpoint,
        &prompt,
        4,
        "Generate a personalized headline.",
        "teen internet safety week kicks off",
        Duration::from_secs(5),
    )
    .unwrap();
    println!("service returned: {generated:?}");

    let gold = "teen internet safety week starts";
    println!("reward vs gold {gold:?}: {:.3}", avg_rouge_reward(&generated, gold));
}
