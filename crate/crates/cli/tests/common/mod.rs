//! Synthetic evaluation corpus shared by the CLI and acceptance tests.
//!
//! References are random sentences of distinct words. Each system copies
//! the references and then replaces a fixed share of the tokens with words
//! that occur nowhere else, so its quality is known by construction.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bident_core::corpus::SegmentRecord;
use bident_core::HumanScore;
use rand::seq::{index, IndexedRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LANG_PAIRS: [&str; 2] = ["de-en", "ru-en"];
pub const SEGMENTS: usize = 50;
/// (system, share of tokens replaced, human score)
pub const SYSTEMS: [(&str, f64, f64); 4] =
    [("sys-clean", 0.0, 1.0), ("sys-20", 0.2, 0.8), ("sys-40", 0.4, 0.6), ("sys-60", 0.6, 0.4)];
const SEED: u64 = 0xB1D1;

const VOCAB: &[&str] = &[
    "the",
    "a",
    "man",
    "woman",
    "child",
    "dog",
    "cat",
    "house",
    "city",
    "river",
    "road",
    "car",
    "train",
    "boat",
    "market",
    "school",
    "teacher",
    "student",
    "book",
    "letter",
    "table",
    "chair",
    "window",
    "door",
    "garden",
    "tree",
    "flower",
    "bread",
    "water",
    "coffee",
    "morning",
    "evening",
    "night",
    "summer",
    "winter",
    "rain",
    "snow",
    "sun",
    "quickly",
    "slowly",
    "often",
    "never",
    "today",
    "yesterday",
    "tomorrow",
    "here",
    "there",
    "very",
    "quite",
    "almost",
    "runs",
    "walks",
    "reads",
    "writes",
    "sees",
    "hears",
    "opens",
    "closes",
    "buys",
    "sells",
    "finds",
    "loses",
    "gives",
    "takes",
    "builds",
    "paints",
    "red",
    "blue",
    "green",
    "old",
    "new",
    "small",
    "large",
    "quiet",
    "loud",
    "happy",
    "tired",
    "early",
    "late",
    "near",
    "far",
    "under",
    "over",
    "behind",
    "between",
    "with",
    "without",
    "for",
    "from",
    "into",
    "government",
    "report",
    "minister",
    "meeting",
    "company",
    "price",
    "week",
    "year",
    "people",
    "country",
];

fn reference(rng: &mut ChaCha8Rng) -> Vec<String> {
    let len = rng.random_range(8..=20);
    VOCAB.choose_multiple(rng, len).map(|w| w.to_string()).collect()
}

/// Dataset JSONL for one language pair.
pub fn dataset(lang_pair: &str) -> String {
    let lp_index = LANG_PAIRS.iter().position(|l| *l == lang_pair).expect("known language pair") as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + lp_index);
    let references: Vec<Vec<String>> = (0..SEGMENTS).map(|_| reference(&mut rng)).collect();
    let mut novel = 0usize;
    let mut out = String::new();
    for (system, share, _) in SYSTEMS {
        for (i, r) in references.iter().enumerate() {
            let mut candidate = r.clone();
            let k = (share * r.len() as f64).round() as usize;
            for pos in index::sample(&mut rng, r.len(), k) {
                novel += 1;
                candidate[pos] = format!("oov{novel}");
            }
            let record = SegmentRecord {
                system: system.to_string(),
                lang_pair: lang_pair.to_string(),
                segment_id: format!("seg-{}", i + 1),
                candidate: candidate.join(" "),
                references: vec![r.join(" ")],
            };
            out.push_str(&serde_json::to_string(&record).unwrap());
            out.push('\n');
        }
    }
    out
}

/// Human score sidecar: the uncorrupted share of each system.
pub fn human_scores() -> String {
    let mut out = String::new();
    for lp in LANG_PAIRS {
        for (system, _, human) in SYSTEMS {
            let record = HumanScore { system: system.to_string(), lang_pair: lp.to_string(), human_score: human };
            out.push_str(&serde_json::to_string(&record).unwrap());
            out.push('\n');
        }
    }
    out
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

pub fn dataset_path(lang_pair: &str) -> PathBuf {
    fixture_dir().join(format!("{lang_pair}.jsonl"))
}

pub fn human_path() -> PathBuf {
    fixture_dir().join("human.jsonl")
}

pub fn bident(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bident"))
        .args(args)
        .env_remove("BIDENT_NLI_ENDPOINT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn bident")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Relative path -> bytes for every file below `dir`, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("read output dir")
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Starts an in-process inference server that answers like the mock
/// backend under a different model id. Returns its base URL.
pub fn spawn_server(model_id: &'static str) -> String {
    use bident_core::nli::{mock_classify, ClassifyRequest, ClassifyResponse, WireResult};
    use tiny_http::{Header, Response, Server};

    let server = Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    std::thread::spawn(move || {
        let json = |body: String, status: u16| {
            Response::from_string(body)
                .with_status_code(status)
                .with_header(Header::from_bytes("Content-Type", "application/json").unwrap())
        };
        for mut request in server.incoming_requests() {
            if request.url() == "/v1/health" {
                let body = serde_json::json!({"status": "ok", "model_id": model_id}).to_string();
                let _ = request.respond(json(body, 200));
                continue;
            }
            let mut body = String::new();
            let _ = request.as_reader().read_to_string(&mut body);
            let Ok(parsed) = serde_json::from_str::<ClassifyRequest>(&body) else {
                let _ = request.respond(json(r#"{"error":"bad request"}"#.into(), 400));
                continue;
            };
            let results = parsed
                .pairs
                .iter()
                .map(|p| {
                    let d = mock_classify(&p.premise, &p.hypothesis).unwrap();
                    WireResult {
                        id: p.id.clone(),
                        contradiction: d.contradiction,
                        entailment: d.entailment,
                        neutral: d.neutral,
                    }
                })
                .collect();
            let response = ClassifyResponse { model_id: model_id.to_string(), results };
            let _ = request.respond(json(serde_json::to_string(&response).unwrap(), 200));
        }
    });
    format!("http://127.0.0.1:{port}")
}

/// A local port with nothing listening on it.
pub fn dead_endpoint() -> String {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    format!("http://127.0.0.1:{port}")
}
