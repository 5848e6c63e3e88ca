//! Minimal HTTP archive stub: answers `GET ...?before=..&size=..` with the newest `size`
//! records older than `before`, logs every request, and fails requests on demand.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use serde_json::json;

#[derive(Debug, Clone)]
pub struct Request {
    pub at: Instant,
    pub before: i64,
    pub size: usize,
    pub subreddit: String,
    pub score: String,
}

#[derive(Default)]
struct State {
    log: Vec<Request>,
    /// 0-based request numbers answered with HTTP 500.
    failing: BTreeSet<usize>,
}

pub struct Stub {
    pub url: String,
    state: Arc<Mutex<State>>,
}

impl Stub {
    /// Serves records with the given (unique) timestamps.
    pub fn start(timestamps: Vec<i64>) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/submissions", listener.local_addr().unwrap());
        let state = Arc::new(Mutex::new(State::default()));
        let mut records = timestamps;
        records.sort_unstable_by(|a, b| b.cmp(a));
        let records = Arc::new(records);
        let st = state.clone();
        thread::spawn(move || {
            for conn in listener.incoming() {
                let Ok(conn) = conn else { continue };
                let st = st.clone();
                let records = records.clone();
                thread::spawn(move || serve(conn, &st, &records));
            }
        });
        Stub { url, state }
    }

    pub fn fail(&self, requests: impl IntoIterator<Item = usize>) {
        self.state.lock().unwrap().failing.extend(requests);
    }

    pub fn log(&self) -> Vec<Request> {
        self.state.lock().unwrap().log.clone()
    }
}

fn decode(v: &str) -> String {
    let mut out = Vec::new();
    let b = v.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'%' && i + 2 < b.len() {
            out.push(u8::from_str_radix(&v[i + 1..i + 3], 16).unwrap());
            i += 3;
        } else {
            out.push(if b[i] == b'+' { b' ' } else { b[i] });
            i += 1;
        }
    }
    String::from_utf8(out).unwrap()
}

fn serve(conn: TcpStream, state: &Mutex<State>, records: &[i64]) {
    let mut reader = BufReader::new(conn.try_clone().unwrap());
    let mut conn = conn;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let at = Instant::now();
        loop {
            let mut h = String::new();
            if reader.read_line(&mut h).unwrap_or(0) == 0 || h == "\r\n" {
                break;
            }
        }
        let target = line.split_whitespace().nth(1).unwrap_or("");
        let query = target.split_once('?').map(|(_, q)| q).unwrap_or("");
        let mut req = Request {
            at,
            before: i64::MAX,
            size: 100,
            subreddit: String::new(),
            score: String::new(),
        };
        for pair in query.split('&') {
            let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
            let v = decode(v);
            match k {
                "before" => req.before = v.parse().unwrap(),
                "size" => req.size = v.parse().unwrap(),
                "subreddit" => req.subreddit = v,
                "score" => req.score = v,
                _ => {}
            }
        }
        let n = {
            let mut s = state.lock().unwrap();
            s.log.push(req.clone());
            s.log.len() - 1
        };
        let fail = state.lock().unwrap().failing.contains(&n);
        let (status, body) = if fail {
            ("500 Internal Server Error", "{\"error\":\"injected\"}".to_string())
        } else {
            let page: Vec<_> = records
                .iter()
                .filter(|t| **t < req.before)
                .take(req.size)
                .map(|t| json!({"id": format!("r{t}"), "created_utc": t, "title": format!("post {t}"), "score": 1}))
                .collect();
            ("200 OK", json!({ "data": page }).to_string())
        };
        let resp = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        );
        if conn.write_all(resp.as_bytes()).is_err() {
            return;
        }
    }
}
