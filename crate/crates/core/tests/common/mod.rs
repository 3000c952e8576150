#![allow(dead_code)]

use std::path::Path;

use chrono::{TimeDelta, TimeZone, Utc};
use corpusdesk::admin::{ProjectConfig, UserId};
use corpusdesk::corpus::{LanguageCode, Tagset};
use corpusdesk::service::{route, ApiRequest, ApiResponse, Method};
use corpusdesk::store::{Bootstrap, Engine, SteppingClock};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::{json, Value};

pub const TAGS: [&str; 8] = ["N", "V", "PSP", "CC", "PRON", "JJ", "RB", "SYM"];

pub fn tagset() -> Tagset {
    Tagset::new("desk", TAGS).unwrap()
}

pub fn lang(s: &str) -> LanguageCode {
    s.parse().unwrap()
}

pub fn boot() -> Bootstrap {
    Bootstrap {
        config: ProjectConfig::new(tagset(), [lang("hin"), lang("eng")]),
        master: UserId::new("root"),
        master_name: "Root".into(),
        master_password: "pw".into(),
    }
}

/// A deterministic engine: seeded randomness, one-second clock steps.
pub fn engine(dir: &Path, seed: u64) -> Engine {
    let start = Utc.timestamp_opt(1_700_000_000, 0).unwrap();
    let clock = SteppingClock::new(start, TimeDelta::seconds(1));
    Engine::open_or_create(dir, &boot(), Box::new(StdRng::seed_from_u64(seed)), Box::new(clock)).unwrap()
}

pub fn req(method: Method, path: &str, token: Option<&str>) -> ApiRequest {
    ApiRequest::new(method, path).token(token)
}

pub fn call(e: &mut Engine, r: ApiRequest) -> ApiResponse {
    route(e, &r)
}

pub fn login(e: &mut Engine, user: &str, pw: &str) -> String {
    let r = call(e, req(Method::Post, "/api/login", None).json(&json!({"user_id": user, "password": pw})));
    assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
    r.value().unwrap()["token"].as_str().unwrap().to_string()
}

pub fn ok(e: &mut Engine, r: ApiRequest) -> Value {
    let resp = call(e, r);
    assert!(resp.is_success(), "{} {}", resp.status, String::from_utf8_lossy(&resp.body));
    resp.value().unwrap_or(Value::Null)
}

pub fn add_user(e: &mut Engine, root: &str, id: &str, kind: &str, language: Option<&str>) {
    let role = match language {
        Some(l) => json!({"kind": kind, "language": l}),
        None => json!({"kind": kind}),
    };
    ok(e, req(Method::Post, "/api/users", Some(root)).json(&json!({"user_id": id, "role": role, "password": "pw"})));
}

/// A raw-format file with `n` sentences in `domain`.
pub fn raw_file(language: &str, domain: &str, sentences: &[&str]) -> String {
    let mut s = format!("#LANG {language}\n#DOMAIN {domain}\n");
    for (i, text) in sentences.iter().enumerate() {
        s.push_str(&format!("{domain}-{:06}\t{text}\n", i + 1));
    }
    s
}

pub fn upload(e: &mut Engine, root: &str, text: &str) -> String {
    let v = ok(e, req(Method::Post, "/api/files", Some(root)).body(text.as_bytes().to_vec()));
    v["file_id"].as_str().unwrap().to_string()
}

/// Tags every token of every sentence of `file` with `tag`.
pub fn tag_all(e: &mut Engine, token: &str, file: &str, tag: &str) {
    let view = ok(e, req(Method::Get, &format!("/api/files/{file}"), Some(token)));
    for s in view["file"]["sentences"].as_array().unwrap() {
        let sid = s["id"].as_str().unwrap();
        for i in 0..s["tokens"].as_array().unwrap().len() {
            let path = format!("/api/files/{file}/sentences/{sid}/tokens/{i}/tag");
            ok(e, req(Method::Put, &path, Some(token)).json(&json!({"tag": tag})));
        }
    }
}
