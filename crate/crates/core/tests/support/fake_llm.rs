//! A local chat-completions endpoint with scripted, deterministic answers.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use netcurriculum::llm::{first_json_object, ChatRequest};
use serde_json::{json, Value};

type Responder = dyn Fn(&ChatRequest) -> (u16, String) + Send + Sync;

pub struct FakeLlm {
    addr: String,
    hits: Arc<AtomicUsize>,
    pub seen: Arc<Mutex<Vec<(String, Option<String>)>>>,
}

impl FakeLlm {
    /// Serves until the process exits. `respond` returns status and the
    /// assistant text (wrapped into a completion body for status 200).
    pub fn start(respond: impl Fn(&ChatRequest) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = format!("http://{}/v1", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let seen = Arc::new(Mutex::new(Vec::new()));
        let respond: Arc<Responder> = Arc::new(respond);
        let (h, s) = (hits.clone(), seen.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                h.fetch_add(1, Ordering::SeqCst);
                let (respond, s) = (respond.clone(), s.clone());
                thread::spawn(move || serve(stream, &*respond, &s));
            }
        });
        Self { addr, hits, seen }
    }

    pub fn url(&self) -> &str {
        &self.addr
    }

    /// Connections accepted so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, respond: &Responder, seen: &Mutex<Vec<(String, Option<String>)>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
        return;
    }
    let mut len = 0usize;
    let mut auth = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.to_ascii_lowercase().as_str() {
                "content-length" => len = v.trim().parse().unwrap(),
                "authorization" => auth = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();
    seen.lock().unwrap().push((request_line.trim().to_string(), auth));
    let (status, text) = match serde_json::from_slice::<ChatRequest>(&body) {
        Ok(req) => respond(&req),
        Err(e) => (400, e.to_string()),
    };
    let payload = if status == 200 {
        json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
            .to_string()
    } else {
        text
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}

fn stage(name: &str, ues: usize, bs: usize, vel: [f64; 2], len: usize, reward: &str, th: f64, budget: u64) -> Value {
    json!({
        "name": name,
        "env": {"num_ues": ues, "num_bs": bs, "ue_velocity_range": vel, "episode_len": len},
        "reward": reward,
        "threshold": th,
        "window": 20,
        "max_env_steps": budget,
    })
}

/// The curriculum the fake designer proposes for a 5 UE x 3 BS target.
pub fn designed_curriculum(final_threshold: f64) -> Value {
    json!({"stages": [
        stage("attach-two", 2, 1, [0.0, 0.0], 25, "sum_connected()", 1.8, 40_000),
        stage("keep-links", 3, 2, [0.5, 2.0], 50, "persistence() / 2 + mean_qoe()", 2.5, 60_000),
        stage("full-network", 5, 3, [1.0, 10.0], 100, "mean_qoe()", final_threshold, 200_000),
    ]})
}

/// Answers like a cooperative model: a fenced curriculum for design
/// requests; for reviews, relax the stuck stage by 10% once, then keep.
pub fn designer(final_threshold: f64) -> impl Fn(&ChatRequest) -> (u16, String) + Send + Sync {
    move |req| {
        let user = &req.messages.last().unwrap().content;
        if user.contains("Design a curriculum") {
            let body = serde_json::to_string_pretty(&designed_curriculum(final_threshold)).unwrap();
            return (200, format!("Here is a curriculum.\n```json\n{body}\n```"));
        }
        let Some(start) = user.find("Current curriculum") else {
            return (200, "I am not sure what you mean.".into());
        };
        let curriculum: Value =
            serde_json::from_str(first_json_object(&user[start..]).unwrap()).unwrap();
        let marker = "Training is at stage ";
        let at = user.find(marker).unwrap() + marker.len();
        let s: usize = user[at..].split(' ').next().unwrap().parse().unwrap();
        let mut tail: Vec<Value> = curriculum["stages"].as_array().unwrap()[s..].to_vec();
        let name = tail[0]["name"].as_str().unwrap().to_string();
        if name.ends_with("-relaxed") {
            return (200, r#"{"action": "keep"}"#.into());
        }
        let th = tail[0]["threshold"].as_f64().unwrap();
        tail[0]["name"] = json!(format!("{name}-relaxed"));
        tail[0]["threshold"] = json!(th - 0.1 * th.abs());
        (200, json!({"action": "adjust", "stages": tail}).to_string())
    }
}
