//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command as Process, Stdio};
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeDelta, TimeZone, Utc};
use corpusdesk::admin::{AdminError, Command, FileId, Project, ProjectConfig, Role, UserId};
use corpusdesk::annotation::{auto_tag, ClosedClassLexicon, LexiconEdit};
use corpusdesk::cli::Backend;
use corpusdesk::corpus::{
    build_parallel_units, corpus_stats, parse_annotated_file, parse_raw_file, serialize_annotated_file,
    AnnotatedSentence, AnnotatedToken, CorpusFile, DomainLabel, LanguageCode, SentenceId, Token,
};
use corpusdesk::qa::{cohen_kappa, merge_gold, AnnotationVersion};
use corpusdesk::service::{ApiRequest, ApiResponse, Method};
use corpusdesk::store::{Engine, EventStore, SteppingClock};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: &[(&str, Check, Option<u64>)] = &[
        ("assignment-cap model check", cap_model_check, Some(30)),
        ("download gate", download_gate, None),
        ("format round-trip", format_round_trip, Some(20)),
        ("auto-tag properties and lexicon propagation", auto_tag_properties, None),
        ("kappa oracle", kappa_oracle, None),
        ("merge oracle", merge_oracle, None),
        ("corpus statistics at desk scale", corpus_statistics, Some(10)),
        ("crash durability", crash_durability, None),
        ("authorization matrix", authorization_matrix, None),
    ];
    let mut failed = 0;
    for &(name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(limit)) if secs >= limit as f64 => Err(format!("took {secs:.1}s, limit {limit}s")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.2}s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} ({secs:.2}s)");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- fixtures

fn uid(s: &str) -> UserId {
    UserId::new(s)
}

fn lang(s: &str) -> LanguageCode {
    common::lang(s)
}

fn sid(domain: &str, serial: u32) -> SentenceId {
    SentenceId::new(DomainLabel::new(domain).unwrap(), serial).unwrap()
}

/// An in-memory project driven with a fixed clock and seeded randomness.
#[derive(Clone)]
struct World {
    project: Project,
    rng: StdRng,
    tick: i64,
}

impl World {
    fn new(seed: u64) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let config = ProjectConfig::new(common::tagset(), [lang("hin"), lang("eng")]);
        let at = Utc.timestamp_opt(1_700_000_000, 0).unwrap();
        let genesis = Project::genesis(config, uid("root"), "Root", "pw", at, &mut rng).unwrap();
        Self { project: Project::from_genesis(&genesis).unwrap(), rng, tick: 0 }
    }

    fn at(&mut self) -> DateTime<Utc> {
        self.tick += 1;
        Utc.timestamp_opt(1_700_000_000 + self.tick, 0).unwrap()
    }

    fn run(&mut self, actor: &str, command: Command) -> Result<(), AdminError> {
        let at = self.at();
        self.project.execute(Some(&uid(actor)), command, at, &mut self.rng).map(|_| ())
    }

    fn user(&mut self, id: &str, role: Role) {
        let c = Command::CreateUser { user_id: uid(id), display_name: id.into(), role, password: "pw".into() };
        self.run("root", c).unwrap();
    }

    fn upload(&mut self, file: CorpusFile) -> FileId {
        self.run("root", Command::UploadFile { file }).unwrap();
        self.project.files().last_key().unwrap()
    }
}

trait LastKey {
    fn last_key(self) -> Option<FileId>;
}

impl<'a, I: Iterator<Item = &'a corpusdesk::admin::StoredFile>> LastKey for I {
    /// Upload ids are `F1, F2, ...`; the newest has the largest number.
    fn last_key(self) -> Option<FileId> {
        self.max_by_key(|f| f.file_id.as_str()[1..].parse::<u64>().unwrap()).map(|f| f.file_id.clone())
    }
}

const SCRIPTS: &[(u32, u32)] = &[
    (0x0915, 0x0939), // Devanagari consonants
    (0x0995, 0x09A8), // Bengali consonants
    (0x0061, 0x007A), // Latin
    (0x4E00, 0x4FFF), // CJK
    (0x0628, 0x063A), // Arabic letters
    (0x0C15, 0x0C28), // Telugu consonants
];

fn word(rng: &mut StdRng) -> String {
    if rng.random_ratio(1, 12) {
        return ["।", ",", "?", "!", "॥"].choose(rng).unwrap().to_string();
    }
    let (lo, hi) = *SCRIPTS.choose(rng).unwrap();
    let len = rng.random_range(1..=6);
    let mut w = String::new();
    for _ in 0..len {
        w.push(char::from_u32(rng.random_range(lo..=hi)).unwrap());
        if lo == 0x0915 && rng.random_ratio(1, 3) {
            w.push(char::from_u32(rng.random_range(0x093E..=0x094C)).unwrap());
        }
    }
    w
}

fn random_tag(rng: &mut StdRng, absent: u32) -> Option<String> {
    if rng.random_ratio(absent, 100) {
        None
    } else {
        Some(common::TAGS.choose(rng).unwrap().to_string())
    }
}

fn sentence(id: SentenceId, surfaces: &[String], tags: &[Option<String>]) -> AnnotatedSentence {
    let tokens = surfaces
        .iter()
        .zip(tags)
        .enumerate()
        .map(|(index, (s, t))| AnnotatedToken { token: Token { surface: s.clone(), index }, tag: t.clone() })
        .collect();
    AnnotatedSentence { id, tokens }
}

/// A random annotated file; `absent` is the percentage of untagged tokens.
fn random_file(rng: &mut StdRng, language: &str, domain: &str, sentences: usize, absent: u32) -> CorpusFile {
    let mut serial = 0;
    let out = (0..sentences)
        .map(|_| {
            serial += rng.random_range(1..=3);
            let n = rng.random_range(1..=12);
            let surfaces: Vec<String> = (0..n).map(|_| word(rng)).collect();
            let tags: Vec<Option<String>> = (0..n).map(|_| random_tag(rng, absent)).collect();
            sentence(sid(domain, serial), &surfaces, &tags)
        })
        .collect();
    CorpusFile::new(lang(language), DomainLabel::new(domain).unwrap(), out).unwrap()
}

fn tagged_copy(file: &CorpusFile, tags: &mut impl FnMut(usize, usize) -> Option<String>) -> CorpusFile {
    let mut out = file.clone();
    for (si, s) in out.sentences.iter_mut().enumerate() {
        for (ti, t) in s.tokens.iter_mut().enumerate() {
            t.tag = tags(si, ti);
        }
    }
    out
}

fn version(annotator: &str, file: CorpusFile) -> AnnotationVersion {
    AnnotationVersion { file_id: "F1".into(), annotator: uid(annotator), file }
}

// ------------------------------------------------------ assignment cap model

fn cap_model_check() -> Result<String, String> {
    const ANNOTATORS: usize = 5;
    const FILES: usize = 40;
    const SEQUENCES: usize = 10_000;
    let mut base = World::new(1);
    let mut gen = StdRng::seed_from_u64(11);
    base.user("adm", Role::Admin(lang("hin")));
    let names: Vec<String> = (0..ANNOTATORS).map(|i| format!("a{i}")).collect();
    for n in &names {
        base.user(n, Role::Annotator(lang("hin")));
    }
    // every fourth file is left incomplete, so completing it must fail
    let mut files = Vec::new();
    let mut complete = Vec::new();
    for i in 0..FILES {
        let absent = if i % 4 == 3 { 50 } else { 0 };
        let mut f = random_file(&mut gen, "hin", "cap", 2, absent);
        if absent > 0 {
            f.sentences[0].tokens[0].tag = None;
        }
        complete.push(absent == 0);
        files.push(base.upload(f));
    }
    let cap = base.project.config().max_active_assignments;

    let mut ops = 0usize;
    let mut accepted = 0usize;
    for seq in 0..SEQUENCES {
        let mut w = base.clone();
        // reference counters, kept independently of the project
        let mut holder: Vec<Option<usize>> = vec![None; FILES];
        let mut held = [0usize; ANNOTATORS];
        let len = gen.random_range(1..=40);
        for _ in 0..len {
            let f = gen.random_range(0..FILES);
            let u = gen.random_range(0..ANNOTATORS);
            let admin = if gen.random_bool(0.5) { "root" } else { "adm" };
            let op = gen.random_range(0..10);
            let (command, actor, expect): (Command, String, Result<(), &str>) = match op {
                0..=4 => {
                    let expect = if holder[f].is_some() {
                        Err("AlreadyAssigned")
                    } else if held[u] >= cap {
                        Err("CapExceeded")
                    } else {
                        Ok(())
                    };
                    (Command::AssignFile { file_id: files[f].clone(), assignee: uid(&names[u]) }, admin.into(), expect)
                }
                5..=6 => {
                    let expect = match holder[f] {
                        None => Err("NoActiveAssignment"),
                        Some(h) if h == u => Err("AlreadyAssigned"),
                        Some(_) if held[u] >= cap => Err("CapExceeded"),
                        Some(_) => Ok(()),
                    };
                    (
                        Command::ReassignFile { file_id: files[f].clone(), assignee: uid(&names[u]) },
                        admin.into(),
                        expect,
                    )
                }
                _ => {
                    // completion by an annotator (possibly not the holder) or an admin
                    let by_annotator = gen.random_bool(0.7);
                    let actor = if by_annotator { names[u].clone() } else { admin.to_string() };
                    let expect = if by_annotator && holder[f] != Some(u) {
                        Err("NotAuthorized")
                    } else if holder[f].is_none() {
                        Err("NoActiveAssignment")
                    } else if !complete[f] {
                        Err("IncompleteFile")
                    } else {
                        Ok(())
                    };
                    (Command::CompleteFile { file_id: files[f].clone() }, actor, expect)
                }
            };
            let got = w.run(&actor, command);
            ops += 1;
            match (&got, expect) {
                (Ok(()), Ok(())) => {
                    accepted += 1;
                    match op {
                        0..=4 => {
                            holder[f] = Some(u);
                            held[u] += 1;
                        }
                        5..=6 => {
                            held[holder[f].unwrap()] -= 1;
                            holder[f] = Some(u);
                            held[u] += 1;
                        }
                        _ => {
                            held[holder[f].unwrap()] -= 1;
                            holder[f] = None;
                        }
                    }
                }
                (Err(e), Err(code)) if e.code() == code => {}
                _ => return Err(format!("sequence {seq}: expected {expect:?}, got {got:?}")),
            }
            // invariants, counted straight from the assignment records
            let mut per_user: HashMap<&str, usize> = HashMap::new();
            let mut per_file: HashMap<&str, usize> = HashMap::new();
            for a in w.project.assignments().iter().filter(|a| a.state.is_active()) {
                *per_user.entry(a.assignee.as_str()).or_default() += 1;
                *per_file.entry(a.file_id.as_str()).or_default() += 1;
            }
            ensure!(per_user.values().all(|&n| n <= cap), "sequence {seq}: cap exceeded {per_user:?}");
            ensure!(per_file.values().all(|&n| n <= 1), "sequence {seq}: two active assignees {per_file:?}");
            for (i, n) in names.iter().enumerate() {
                ensure!(
                    per_user.get(n.as_str()).copied().unwrap_or(0) == held[i],
                    "sequence {seq}: counter drift for {n}"
                );
            }
            for (i, f) in files.iter().enumerate() {
                let active = w.project.active_assignment(f).map(|a| a.assignee.as_str().to_string());
                ensure!(active == holder[i].map(|u| names[u].clone()), "sequence {seq}: holder drift for {f}");
            }
        }
    }
    Ok(format!("{SEQUENCES} sequences, {ops} operations, {accepted} accepted, cap {cap} never exceeded"))
}

// ------------------------------------------------------------- download gate

fn download_gate() -> Result<String, String> {
    let mut base = World::new(2);
    base.user("adm", Role::Admin(lang("hin")));
    base.user("adme", Role::Admin(lang("eng")));
    base.user("ann", Role::Annotator(lang("hin")));
    base.user("ann2", Role::Annotator(lang("hin")));
    let mut gen = StdRng::seed_from_u64(22);
    let mut checked = 0;

    let check = |w: &mut World, file: &CorpusFile, untagged: &BTreeSet<(usize, usize)>| -> Result<(), String> {
        let id = w.upload(file.clone());
        w.run("adm", Command::AssignFile { file_id: id.clone(), assignee: uid("ann") }).unwrap();
        let remaining = untagged.iter().map(|(s, _)| s).collect::<BTreeSet<_>>().len();
        for admin in ["root", "adm"] {
            let got = w.project.download(&uid(admin), &id);
            if untagged.is_empty() {
                ensure!(got.as_deref() == Ok(&serialize_annotated_file(file)[..]), "{admin} denied a complete file");
            } else {
                match got {
                    Err(AdminError::IncompleteFile { remaining: r, .. }) if r == remaining => {}
                    other => return Err(format!("{admin} with {} untagged: {other:?}", untagged.len())),
                }
            }
        }
        for other in ["ann", "ann2", "adme"] {
            let got = w.project.download(&uid(other), &id);
            let denied = matches!(got, Err(AdminError::NotAuthorized(_) | AdminError::LanguageMismatch { .. }));
            ensure!(denied, "{other} was not denied: {got:?}");
        }
        Ok(())
    };

    for k in 0..=5usize {
        for _ in 0..40 {
            let full = random_file(&mut gen, "hin", "gate", 20, 0);
            let positions: Vec<(usize, usize)> =
                full.sentences.iter().enumerate().flat_map(|(s, x)| (0..x.tokens.len()).map(move |t| (s, t))).collect();
            let untagged: BTreeSet<_> = positions.choose_multiple(&mut gen, k).copied().collect();
            let file = tagged_copy(&full, &mut |s, t| {
                if untagged.contains(&(s, t)) {
                    None
                } else {
                    full.sentences[s].tokens[t].tag.clone()
                }
            });
            let mut w = base.clone();
            check(&mut w, &file, &untagged)?;
            checked += 1;
        }
    }
    // a single untagged token at every position of one file
    let full = random_file(&mut gen, "hin", "gate", 20, 0);
    for (s, x) in full.sentences.iter().enumerate() {
        for t in 0..x.tokens.len() {
            let mut w = base.clone();
            let file = tagged_copy(&full, &mut |a, b| {
                if (a, b) == (s, t) {
                    None
                } else {
                    full.sentences[a].tokens[b].tag.clone()
                }
            });
            check(&mut w, &file, &BTreeSet::from([(s, t)]))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} files with 0..=5 untagged tokens; annotators always denied"))
}

// ---------------------------------------------------------- format round-trip

fn format_round_trip() -> Result<String, String> {
    let mut gen = StdRng::seed_from_u64(33);
    let mut bytes_total = 0;
    for i in 0..1000 {
        let n = gen.random_range(1..=50);
        let absent = gen.random_range(0..=100);
        let language = ["hin", "ben", "tel", "eng", "urd", "zho"].choose(&mut gen).unwrap();
        let file = random_file(&mut gen, language, "rt", n, absent);
        let bytes = serialize_annotated_file(&file);
        let parsed = parse_annotated_file(&bytes, None).map_err(|e| format!("file {i}: {e}"))?;
        ensure!(parsed == file, "file {i}: parsed value differs");
        ensure!(serialize_annotated_file(&parsed) == bytes, "file {i}: bytes differ");
        bytes_total += bytes.len();
    }
    Ok(format!("1000 mixed-script files, {bytes_total} bytes, byte-identical"))
}

// ------------------------------------------------------------------ auto-tag

fn auto_tag_properties() -> Result<String, String> {
    let mut gen = StdRng::seed_from_u64(44);
    let vocab: Vec<String> = (0..14).map(|_| word(&mut gen)).collect();
    let tagset = common::tagset();
    for trial in 0..1000 {
        let n = gen.random_range(1..=25);
        let surfaces: Vec<String> = (0..n).map(|_| vocab.choose(&mut gen).unwrap().clone()).collect();
        let tags: Vec<Option<String>> = (0..n).map(|_| random_tag(&mut gen, 70)).collect();
        let s = sentence(sid("auto", 1), &surfaces, &tags);
        let mut lexicon = ClosedClassLexicon::new(lang("hin"));
        let mut table: Vec<(String, String)> = Vec::new();
        let k = gen.random_range(0..=vocab.len());
        for w in vocab.choose_multiple(&mut gen, k) {
            let tag = common::TAGS.choose(&mut gen).unwrap().to_string();
            lexicon.apply(LexiconEdit::Upsert { surface: w.clone(), tag: tag.clone() }, &tagset).unwrap();
            table.push((w.clone(), tag));
        }
        // linear-scan oracle
        let lookup = |w: &str| table.iter().find(|(s, _)| s == w).map(|(_, t)| t.clone());
        let expected: Vec<Option<String>> =
            surfaces.iter().zip(&tags).map(|(w, t)| t.clone().or_else(|| lookup(w))).collect();
        let filled = tags.iter().zip(&expected).filter(|(a, b)| a.is_none() && b.is_some()).count();

        let (out, applied) = auto_tag(&s, &lexicon);
        let got: Vec<Option<String>> = out.tokens.iter().map(|t| t.tag.clone()).collect();
        ensure!(got == expected && applied == filled, "trial {trial}: output differs from lookup oracle");
        ensure!(out.surfaces().eq(s.surfaces()), "trial {trial}: surfaces changed");
        ensure!(tags.iter().zip(&got).all(|(a, b)| a.is_none() || a == b), "trial {trial}: existing tag overwritten");
        ensure!(out.tagged_count() >= s.tagged_count(), "trial {trial}: tagged count fell");
        ensure!(auto_tag(&out, &lexicon) == (out.clone(), 0), "trial {trial}: not idempotent");
    }

    // propagation between two users of the same language
    let mut w = World::new(4);
    w.user("a", Role::Annotator(lang("hin")));
    w.user("b", Role::Annotator(lang("hin")));
    w.user("adm", Role::Admin(lang("hin")));
    let mut synced = 0u64;
    let mut added: Vec<String> = Vec::new();
    for trial in 0..1000 {
        let author = ["a", "adm", "root"][trial % 3];
        let (edit, surface, tag) = if trial % 5 == 4 {
            let s = added.remove(gen.random_range(0..added.len()));
            (LexiconEdit::Delete { surface: s.clone() }, s, None)
        } else {
            let s = format!("{}{trial}", word(&mut gen));
            let t = common::TAGS.choose(&mut gen).unwrap().to_string();
            added.push(s.clone());
            (LexiconEdit::Upsert { surface: s.clone(), tag: t.clone() }, s, Some(t))
        };
        w.run(author, Command::UpdateLexicon { language: lang("hin"), edit })
            .map_err(|e| format!("trial {trial}: {e}"))?;
        let delta =
            w.project.lexicon_sync(&uid("b"), &lang("hin"), synced).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure!(delta.version == synced + 1, "trial {trial}: version {} after {synced}", delta.version);
        ensure!(
            delta.changes.len() == 1
                && delta.changes[0].surface == surface
                && delta.changes[0].tag == tag
                && delta.changes[0].version == synced + 1,
            "trial {trial}: delta {:?}",
            delta.changes
        );
        synced = delta.version;
    }
    Ok("1000 sentence/lexicon pairs; 1000 propagation trials".into())
}

// --------------------------------------------------------------------- kappa

fn kappa_oracle() -> Result<String, String> {
    // worked example: A tags N N N N N V V V V V, B crosses one of each
    let surfaces: Vec<String> = (0..5).map(|i| format!("w{i}")).collect();
    let t = |s: &str| Some(s.to_string());
    let a_tags = [["N"; 5], ["V"; 5]];
    let b_tags = [["V", "N", "N", "N", "N"], ["N", "V", "V", "V", "V"]];
    let build = |tags: &[[&str; 5]; 2]| {
        let sentences = (0..2).map(|i| sentence(sid("k", i as u32 + 1), &surfaces, &tags[i].map(t))).collect();
        CorpusFile::new(lang("hin"), DomainLabel::new("k").unwrap(), sentences).unwrap()
    };
    let (a, b) = (version("a", build(&a_tags)), version("b", build(&b_tags)));

    // contingency table, rows A, columns B, order [N, V]
    let table = [[4.0, 1.0], [1.0, 4.0]];
    let n: f64 = table.iter().flatten().sum();
    let p_o = (table[0][0] + table[1][1]) / n;
    let row = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let p_e = (row[0] * col[0] + row[1] * col[1]) / (n * n);
    let oracle = (p_o - p_e) / (1.0 - p_e);
    ensure!((p_o - 0.8).abs() < 1e-12 && (p_e - 0.5).abs() < 1e-12, "hand table is off");

    let k = cohen_kappa(&a, &b).map_err(|e| e.to_string())?;
    ensure!(k.joint == 10, "joint {}", k.joint);
    ensure!((k.kappa - oracle).abs() < 1e-9 && (k.kappa - 0.6).abs() < 1e-9, "kappa {} vs {oracle}", k.kappa);

    let mut gen = StdRng::seed_from_u64(55);
    for i in 0..200 {
        let n = gen.random_range(1..=8);
        let base = random_file(&mut gen, "hin", "k", n, 10);
        if base.sentences.iter().all(|s| s.tokens.iter().all(|t| t.tag.is_none())) {
            continue;
        }
        let k = cohen_kappa(&version("a", base.clone()), &version("b", base)).map_err(|e| e.to_string())?;
        ensure!(k.kappa == 1.0, "identical versions {i}: kappa {}", k.kappa);
    }
    for i in 0..200 {
        let n = gen.random_range(1..=8);
        let base = random_file(&mut gen, "hin", "k", n, 0);
        let x = tagged_copy(&base, &mut |_, _| random_tag(&mut gen, 20));
        let y = tagged_copy(&base, &mut |_, _| random_tag(&mut gen, 20));
        let (x, y) = (version("a", x), version("b", y));
        match (cohen_kappa(&x, &y), cohen_kappa(&y, &x)) {
            (Ok(p), Ok(q)) => ensure!(p.kappa.to_bits() == q.kappa.to_bits(), "pair {i}: {} vs {}", p.kappa, q.kappa),
            (Err(p), Err(q)) => ensure!(p == q, "pair {i}: {p} vs {q}"),
            (p, q) => return Err(format!("pair {i}: {p:?} vs {q:?}")),
        }
    }
    Ok(format!("worked example kappa = {:.12}; identity 1.0; 200 symmetric pairs", k.kappa))
}

// --------------------------------------------------------------------- merge

fn merge_oracle() -> Result<String, String> {
    let mut gen = StdRng::seed_from_u64(66);
    let mut ties = 0;
    let mut positions = 0;
    for inst in 0..200 {
        let n = gen.random_range(1..=6);
        let base = random_file(&mut gen, "hin", "m", n, 0);
        let pool = [Some("N"), Some("V"), Some("JJ"), None];
        let versions: Vec<AnnotationVersion> = (0..3)
            .map(|k| {
                let f = tagged_copy(&base, &mut |_, _| pool.choose(&mut gen).unwrap().map(String::from));
                version(&format!("u{k}"), f)
            })
            .collect();
        let (gold, queue) = merge_gold(&versions).map_err(|e| format!("instance {inst}: {e}"))?;

        let mut expect_queue = Vec::new();
        for (si, s) in base.sentences.iter().enumerate() {
            for ti in 0..s.tokens.len() {
                positions += 1;
                let tags: Vec<Option<&str>> =
                    versions.iter().map(|v| v.file.sentences[si].tokens[ti].tag.as_deref()).collect();
                let mut best: Option<&str> = None;
                for cand in tags.iter().flatten() {
                    if tags.iter().filter(|t| **t == Some(*cand)).count() >= 2 {
                        best = Some(cand);
                    }
                }
                let got = gold.sentences[si].tokens[ti].tag.as_deref();
                ensure!(got == best, "instance {inst} at {}:{ti}: gold {got:?}, recount {best:?}", s.id);
                let unanimous = tags.iter().all(|t| *t == tags[0]);
                if best.is_none() && !unanimous {
                    expect_queue.push((s.id.clone(), ti, tags.iter().map(|t| t.map(String::from)).collect::<Vec<_>>()));
                }
                if best.is_none() && tags.iter().all(Option::is_some) && !unanimous {
                    ties += 1;
                }
            }
        }
        let got_queue: Vec<_> = queue
            .iter()
            .map(|d| (d.id.clone(), d.index, d.per_annotator.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>()))
            .collect();
        ensure!(got_queue == expect_queue, "instance {inst}: queue differs from recount");
    }
    Ok(format!("200 instances, {positions} positions, {ties} three-way ties all queued"))
}

// ----------------------------------------------------------- corpus statistics

fn corpus_statistics() -> Result<String, String> {
    let mut gen = StdRng::seed_from_u64(77);
    let (mut hin, mut eng) = (String::from("#LANG hin\n#DOMAIN synth\n"), String::from("#LANG eng\n#DOMAIN synth\n"));
    for i in 1..=1000u32 {
        for (out, lo, hi, stop) in [(&mut hin, 0x0915, 0x0939, "।"), (&mut eng, 0x61, 0x7A, ".")] {
            let len = gen.random_range(8..=24);
            let words: Vec<String> = (1..len)
                .map(|_| {
                    (0..gen.random_range(1..=5)).map(|_| char::from_u32(gen.random_range(lo..=hi)).unwrap()).collect()
                })
                .collect();
            out.push_str(&format!("synth-{i:06}\t{}{stop}\n", words.join(" ")));
        }
    }
    let files = [parse_raw_file(hin.as_bytes()), parse_raw_file(eng.as_bytes())];
    let files: Vec<CorpusFile> = files.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut means = Vec::new();
    for f in &files {
        let st = corpus_stats(f);
        ensure!(st.sentence_count == 1000, "{} sentences", st.sentence_count);
        ensure!((st.mean_tokens_per_sentence - 16.0).abs() <= 0.8, "mean {}", st.mean_tokens_per_sentence);
        means.push(st.mean_tokens_per_sentence);
    }
    let (units, gaps) = build_parallel_units(&files).map_err(|e| e.to_string())?;
    ensure!(units.len() == 1000, "{} units", units.len());
    ensure!(gaps.is_empty(), "{} gaps", gaps.len());
    Ok(format!("means {:.2} / {:.2}, 1000 units, no gaps", means[0], means[1]))
}

// ---------------------------------------------------------- crash durability

fn free_bind() -> String {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string()
}

fn spawn_service(store: &Path, tagset: &Path, bind: &str) -> Child {
    Process::new(env!("CARGO_BIN_EXE_corpusdesk"))
        .arg("serve")
        .env("CORPUSDESK_BIND", bind)
        .env("CORPUSDESK_STORE", store)
        .env("CORPUSDESK_TAGSET_FILE", tagset)
        .env("CORPUSDESK_LANGUAGES", "hin,eng")
        .env("CORPUSDESK_MASTER", "root")
        .env("CORPUSDESK_MASTER_PASSWORD", "pw")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .expect("service binary starts")
}

/// Kills the service when dropped, so an early failure leaves no process behind.
struct Running(Child);

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

/// What the acknowledged operations imply, tracked without the project code.
#[derive(Default)]
struct Shadow {
    users: BTreeMap<String, (Value, String)>,
    files: BTreeMap<String, CorpusFile>,
    /// file → (assignee, state) of the latest assignment
    latest: BTreeMap<String, (String, &'static str)>,
    lexicon: BTreeMap<String, BTreeMap<String, String>>,
    lexicon_version: BTreeMap<String, u64>,
    notices: Vec<String>,
    sessions: usize,
    open_sessions: usize,
}

impl Shadow {
    fn start(&mut self, file: &str) {
        if let Some((_, state)) = self.latest.get_mut(file) {
            if *state == "Assigned" {
                *state = "InProgress";
            }
        }
    }

    fn active(&self) -> Vec<(String, String)> {
        self.latest
            .iter()
            .filter(|(_, (_, s))| matches!(*s, "Assigned" | "InProgress"))
            .map(|(f, (u, _))| (f.clone(), u.clone()))
            .collect()
    }
}

struct Client {
    backend: Backend,
    tokens: BTreeMap<String, String>,
    acked: usize,
}

impl Client {
    fn send(&mut self, req: ApiRequest) -> ApiResponse {
        let resp = self.backend.call(&req).expect("service reachable");
        if req.method != Method::Get && resp.is_success() {
            self.acked += 1;
        }
        resp
    }

    fn as_user(&mut self, user: &str, req: ApiRequest) -> ApiResponse {
        let token = self.tokens.get(user).cloned();
        self.send(req.token(token.as_deref()))
    }

    fn login(&mut self, user: &str, shadow: &mut Shadow) {
        let r =
            self.send(ApiRequest::new(Method::Post, "/api/login").json(&json!({"user_id": user, "password": "pw"})));
        assert!(r.is_success(), "login {user}");
        self.tokens.insert(user.into(), r.value().unwrap()["token"].as_str().unwrap().into());
        shadow.sessions += 1;
        shadow.open_sessions += 1;
    }
}

fn crash_durability() -> Result<String, String> {
    const TARGET: usize = 500;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = dir.path().join("store");
    let tagset = dir.path().join("tagset.txt");
    std::fs::write(&tagset, format!("#TAGSET desk\n{}\n", common::TAGS.join("\n"))).unwrap();
    let bind = free_bind();
    let base = format!("http://{bind}");
    let child = Running(spawn_service(&store, &tagset, &bind));
    let deadline = Instant::now() + Duration::from_secs(30);
    let mut backend = Backend::http(&base);
    while backend.call(&ApiRequest::new(Method::Get, "/api/progress")).is_err() {
        ensure!(Instant::now() < deadline, "service did not start");
        std::thread::sleep(Duration::from_millis(50));
    }

    let mut gen = StdRng::seed_from_u64(88);
    let mut c = Client { backend, tokens: BTreeMap::new(), acked: 0 };
    let mut sh = Shadow::default();
    sh.users.insert("root".into(), (json!({"kind": "MasterAdmin"}), "Master administrator".into()));
    c.login("root", &mut sh);
    let hin_annotators = ["ann1", "ann2", "ann3", "ann4"];
    let mut users: Vec<(&str, Value)> = vec![("adm", json!({"kind": "Admin", "language": "hin"}))];
    users.extend(hin_annotators.iter().map(|u| (*u, json!({"kind": "Annotator", "language": "hin"}))));
    users.push(("anne", json!({"kind": "Annotator", "language": "eng"})));
    for (u, role) in users {
        let r = c.as_user(
            "root",
            ApiRequest::new(Method::Post, "/api/users").json(&json!({"user_id": u, "role": role, "password": "pw"})),
        );
        ensure!(r.status == 201 || r.is_success(), "create {u}: {}", r.status);
        sh.users.insert(u.into(), (role, String::new()));
        c.login(u, &mut sh);
    }
    let vocab: Vec<String> = (0..20).map(|_| word(&mut gen)).collect();
    let mut uploads = 0;
    let mut upload = |c: &mut Client, sh: &mut Shadow, gen: &mut StdRng| {
        uploads += 1;
        let language = if uploads % 3 == 0 { "eng" } else { "hin" };
        let domain = format!("d{uploads}");
        let mut text = format!("#LANG {language}\n#DOMAIN {domain}\n");
        for i in 1..=3 {
            let n = gen.random_range(2..=6);
            let ws: Vec<&str> = (0..n).map(|_| vocab.choose(gen).unwrap().as_str()).collect();
            text.push_str(&format!("{domain}-{i:06}\t{}\n", ws.join(" ")));
        }
        let r = c.as_user("root", ApiRequest::new(Method::Post, "/api/files").body(text.clone().into_bytes()));
        if r.is_success() {
            let id = r.value().unwrap()["file_id"].as_str().unwrap().to_string();
            sh.files.insert(id, parse_raw_file(text.as_bytes()).unwrap());
        }
    };
    for _ in 0..9 {
        upload(&mut c, &mut sh, &mut gen);
    }

    while c.acked < TARGET {
        let roll = gen.random_range(0..100);
        let file_ids: Vec<String> = sh.files.keys().cloned().collect();
        let active = sh.active();
        let annotator = *["ann1", "ann2", "ann3", "ann4", "anne"].choose(&mut gen).unwrap();
        match roll {
            0..=14 => {
                let f = file_ids.choose(&mut gen).unwrap().clone();
                let admin = if gen.random_bool(0.5) { "root" } else { "adm" };
                let body = json!({"file_id": f, "assignee": annotator});
                if c.as_user(admin, ApiRequest::new(Method::Post, "/api/assignments").json(&body)).is_success() {
                    sh.latest.insert(f, (annotator.into(), "Assigned"));
                }
            }
            15..=19 => {
                let f = file_ids.choose(&mut gen).unwrap().clone();
                let path = format!("/api/assignments/{f}/reassign");
                if c.as_user("root", ApiRequest::new(Method::Post, path).json(&json!({"assignee": annotator})))
                    .is_success()
                {
                    sh.latest.insert(f, (annotator.into(), "Assigned"));
                }
            }
            20..=64 if !active.is_empty() => {
                let (f, who) = active.choose(&mut gen).unwrap().clone();
                let file = &sh.files[&f];
                let s = file.sentences.choose(&mut gen).unwrap();
                let (sentence, ti) = (s.id.clone(), gen.random_range(0..s.tokens.len()));
                let tag = if gen.random_ratio(1, 20) { "BOGUS" } else { *common::TAGS.choose(&mut gen).unwrap() };
                let path = format!("/api/files/{f}/sentences/{sentence}/tokens/{ti}/tag");
                if c.as_user(&who, ApiRequest::new(Method::Put, path).json(&json!({"tag": tag}))).is_success() {
                    let f2 = sh.files.get_mut(&f).unwrap();
                    f2.sentence_mut(&sentence).unwrap().tokens[ti].tag = Some(tag.into());
                    sh.start(&f);
                }
            }
            65..=69 if !active.is_empty() => {
                let (f, who) = active.choose(&mut gen).unwrap().clone();
                if c.as_user(&who, ApiRequest::new(Method::Post, format!("/api/assignments/{f}/complete"))).is_success()
                {
                    sh.latest.get_mut(&f).unwrap().1 = "Completed";
                }
            }
            70..=74 if !active.is_empty() => {
                let (f, who) = active.choose(&mut gen).unwrap().clone();
                if c.as_user(&who, ApiRequest::new(Method::Post, format!("/api/files/{f}/auto-tag"))).is_success() {
                    let file = sh.files.get_mut(&f).unwrap();
                    let lex = sh.lexicon.get(file.language.as_str()).cloned().unwrap_or_default();
                    let mut applied = 0;
                    for t in file.sentences.iter_mut().flat_map(|s| s.tokens.iter_mut()) {
                        if t.tag.is_none() {
                            if let Some(tag) = lex.get(&t.token.surface) {
                                t.tag = Some(tag.clone());
                                applied += 1;
                            }
                        }
                    }
                    if applied > 0 {
                        sh.start(&f);
                    }
                }
            }
            75..=84 => {
                let editor = *["root", "adm", "ann1", "ann2"].choose(&mut gen).unwrap();
                let surface = vocab.choose(&mut gen).unwrap().clone();
                let edit = if gen.random_ratio(1, 4) {
                    json!({"op": "delete", "surface": surface})
                } else {
                    json!({"op": "upsert", "surface": surface, "tag": common::TAGS.choose(&mut gen).unwrap()})
                };
                if c.as_user(editor, ApiRequest::new(Method::Put, "/api/lexicon/hin").json(&edit)).is_success() {
                    let lex = sh.lexicon.entry("hin".into()).or_default();
                    match edit["tag"].as_str() {
                        Some(tag) => lex.insert(surface, tag.into()),
                        None => lex.remove(&surface),
                    };
                    *sh.lexicon_version.entry("hin".into()).or_default() += 1;
                }
            }
            85..=87 => {
                let body = format!("notice {}", c.acked);
                let audience = if gen.random_bool(0.5) { json!("all") } else { json!({"language": "hin"}) };
                let req =
                    ApiRequest::new(Method::Post, "/api/notices").json(&json!({"audience": audience, "body": body}));
                if c.as_user("root", req).is_success() {
                    sh.notices.push(body);
                }
            }
            88..=90 => {
                if c.as_user(annotator, ApiRequest::new(Method::Post, "/api/logout")).is_success() {
                    sh.open_sessions -= 1;
                }
                c.login(annotator, &mut sh);
            }
            91..=94 => upload(&mut c, &mut sh, &mut gen),
            _ => {
                let name = format!("{annotator} v{}", c.acked);
                let path = format!("/api/users/{annotator}");
                if c.as_user("root", ApiRequest::new(Method::Patch, path).json(&json!({"display_name": name})))
                    .is_success()
                {
                    sh.users.get_mut(annotator).unwrap().1 = name;
                }
            }
        }
    }
    let acked = c.acked;
    drop(child);

    let (_store, p) = EventStore::open(&store).map_err(|e| format!("reopen: {e}"))?;
    for (id, (role, name)) in &sh.users {
        let u = p.user(&uid(id)).ok_or_else(|| format!("user {id} lost"))?;
        ensure!(&serde_json::to_value(&u.role).unwrap() == role, "role of {id}");
        ensure!(name.is_empty() || &u.display_name == name, "display name of {id}");
    }
    ensure!(p.users().count() == sh.users.len(), "user count");
    ensure!(p.files().count() == sh.files.len(), "file count {} vs {}", p.files().count(), sh.files.len());
    for (id, f) in &sh.files {
        let stored = p.file(&FileId::new(id.clone())).ok_or_else(|| format!("file {id} lost"))?;
        ensure!(&stored.file == f, "file {id} content differs");
    }
    for (id, (who, state)) in &sh.latest {
        let a = p.latest_assignment(&FileId::new(id.clone())).ok_or_else(|| format!("assignment of {id} lost"))?;
        ensure!(a.assignee.as_str() == who && format!("{:?}", a.state) == *state, "assignment of {id}: {a:?}");
    }
    let lex = p.lexicon(&lang("hin")).unwrap();
    ensure!(lex.entries == sh.lexicon.get("hin").cloned().unwrap_or_default(), "lexicon entries");
    ensure!(lex.version == sh.lexicon_version.get("hin").copied().unwrap_or(0), "lexicon version");
    let notices: Vec<String> = p.list_notices(&uid("root")).unwrap().into_iter().rev().map(|n| n.body).collect();
    ensure!(notices == sh.notices, "notices");
    ensure!(p.sessions().len() == sh.sessions, "sessions {} vs {}", p.sessions().len(), sh.sessions);
    let open = p.sessions().iter().filter(|s| s.logout_at.is_none()).count();
    ensure!(open == sh.open_sessions, "open sessions {open} vs {}", sh.open_sessions);
    Ok(format!("{acked} acknowledged mutations survived kill -9 (log seq {})", p.seq()))
}

// ------------------------------------------------------- authorization matrix

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Who {
    Master,
    AdminHin,
    AdminEng,
    Assignee,
    AnnotatorHin,
    AnnotatorEng,
    Anonymous,
}

const WHO: [(Who, &str); 7] = [
    (Who::Master, "root"),
    (Who::AdminHin, "adm"),
    (Who::AdminEng, "adme"),
    (Who::Assignee, "ann"),
    (Who::AnnotatorHin, "ann2"),
    (Who::AnnotatorEng, "anne"),
    (Who::Anonymous, ""),
];

fn authorization_matrix() -> Result<String, String> {
    use Who::*;
    const ALL: &[Who] = &[Master, AdminHin, AdminEng, Assignee, AnnotatorHin, AnnotatorEng];
    const MASTER: &[Who] = &[Master];
    const ADMINS_HIN: &[Who] = &[Master, AdminHin];
    const ADMINS: &[Who] = &[Master, AdminHin, AdminEng];
    const HIN: &[Who] = &[Master, AdminHin, Assignee, AnnotatorHin];
    const ASSIGNEE: &[Who] = &[Assignee];
    const COMPLETERS: &[Who] = &[Master, AdminHin, Assignee];

    let mapping = "#FROM foreign\nNN\tN\nVB\tV\n";
    let foreign = "#LANG hin\n#DOMAIN web\n#SID web-000001\nक\tNN\n\n";
    let table: Vec<(ApiRequest, &[Who])> = vec![
        (
            ApiRequest::new(Method::Post, "/api/users")
                .json(&json!({"user_id": "new", "role": {"kind": "Annotator", "language": "hin"}, "password": "pw"})),
            MASTER,
        ),
        (ApiRequest::new(Method::Get, "/api/users"), ADMINS),
        (ApiRequest::new(Method::Patch, "/api/users/victim").json(&json!({"display_name": "V"})), MASTER),
        (ApiRequest::new(Method::Delete, "/api/users/victim"), MASTER),
        (
            ApiRequest::new(Method::Post, "/api/files").body(common::raw_file("hin", "up", &["क ख"]).into_bytes()),
            MASTER,
        ),
        (ApiRequest::new(Method::Get, "/api/files"), ALL),
        (ApiRequest::new(Method::Get, "/api/files/F1"), HIN),
        (ApiRequest::new(Method::Get, "/api/files/F1/download"), ADMINS_HIN),
        (ApiRequest::new(Method::Post, "/api/files/F1/auto-tag"), ASSIGNEE),
        (
            ApiRequest::new(Method::Post, "/api/files/F1/sentences/d-000001/edit").json(&json!({"text": "क ख ग"})),
            ASSIGNEE,
        ),
        (
            ApiRequest::new(Method::Put, "/api/files/F1/sentences/d-000001/tokens/0/tag").json(&json!({"tag": "V"})),
            ASSIGNEE,
        ),
        (
            ApiRequest::new(Method::Post, "/api/assignments").json(&json!({"file_id": "F2", "assignee": "ann2"})),
            ADMINS_HIN,
        ),
        (ApiRequest::new(Method::Post, "/api/assignments/F1/reassign").json(&json!({"assignee": "ann2"})), ADMINS_HIN),
        (ApiRequest::new(Method::Post, "/api/assignments/F1/complete"), COMPLETERS),
        (ApiRequest::new(Method::Get, "/api/lexicon/hin"), HIN),
        (
            ApiRequest::new(Method::Put, "/api/lexicon/hin").json(&json!({"op": "upsert", "surface": "क", "tag": "N"})),
            HIN,
        ),
        (ApiRequest::new(Method::Get, "/api/progress").query("scope", "project"), ALL),
        (ApiRequest::new(Method::Get, "/api/progress").query("scope", "language"), ALL),
        (ApiRequest::new(Method::Get, "/api/progress").query("scope", "user"), MASTER),
        (ApiRequest::new(Method::Get, "/api/progress").query("scope", "timelog"), MASTER),
        (ApiRequest::new(Method::Get, "/api/notices"), ALL),
        (ApiRequest::new(Method::Post, "/api/notices").json(&json!({"audience": "all", "body": "hi"})), MASTER),
        (ApiRequest::new(Method::Get, "/api/iaa").query("fileA", "F1").query("fileB", "F2"), ADMINS_HIN),
        (
            ApiRequest::new(Method::Post, "/api/adapt")
                .query("kind", "text")
                .query("language", "hin")
                .query("domain", "web")
                .body("क ख।".as_bytes().to_vec()),
            ADMINS,
        ),
        (
            ApiRequest::new(Method::Post, "/api/adapt")
                .query("kind", "retag")
                .json(&json!({"mapping": mapping, "file": foreign})),
            ADMINS,
        ),
        (ApiRequest::new(Method::Post, "/api/dictionaries").body("#PAIR hin eng\nक\tka\n".as_bytes().to_vec()), MASTER),
        (ApiRequest::new(Method::Get, "/api/translate/F1").query("pair", "hin-eng"), HIN),
        (ApiRequest::new(Method::Get, "/api/export"), MASTER),
        (ApiRequest::new(Method::Post, "/api/logout"), ALL),
    ];

    // fixture: F1 (hin) assigned to ann and fully tagged, F2 (hin) unassigned, F3 (eng)
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut e = common::engine(&dir.path().join("fixture"), 9);
    let root = common::login(&mut e, "root", "pw");
    for (id, kind, l) in [
        ("adm", "Admin", "hin"),
        ("adme", "Admin", "eng"),
        ("ann", "Annotator", "hin"),
        ("ann2", "Annotator", "hin"),
        ("anne", "Annotator", "eng"),
        ("victim", "Annotator", "hin"),
    ] {
        common::add_user(&mut e, &root, id, kind, Some(l));
    }
    common::upload(&mut e, &root, &common::raw_file("hin", "d", &["क ख"]));
    common::upload(&mut e, &root, &common::raw_file("hin", "d", &["क ख"]));
    common::upload(&mut e, &root, &common::raw_file("eng", "d", &["a b"]));
    common::ok(
        &mut e,
        common::req(Method::Post, "/api/assignments", Some(&root)).json(&json!({"file_id": "F1", "assignee": "ann"})),
    );
    common::ok(
        &mut e,
        common::req(Method::Post, "/api/dictionaries", Some(&root)).body("#PAIR hin eng\nख\tkha\n".as_bytes().to_vec()),
    );
    let mut tokens: BTreeMap<&str, String> = BTreeMap::new();
    for (_, name) in WHO.iter().filter(|(w, _)| *w != Anonymous) {
        tokens.insert(name, common::login(&mut e, name, "pw"));
    }
    common::tag_all(&mut e, &tokens["ann"], "F1", "N");
    let fixture = e.project().clone();
    drop(e);

    let mut cells = 0;
    let mut denied = 0;
    for (i, (request, allow)) in table.iter().enumerate() {
        for (who, name) in WHO {
            let cell = dir.path().join(format!("c{i}-{name}"));
            let clock = SteppingClock::new(Utc.timestamp_opt(1_800_000_000, 0).unwrap(), TimeDelta::seconds(1));
            let mut e =
                Engine::import(&cell, fixture.clone(), Box::new(StdRng::seed_from_u64(i as u64)), Box::new(clock))
                    .map_err(|e| e.to_string())?;
            let token = tokens.get(name).cloned();
            let r = corpusdesk::service::route(&mut e, &request.clone().token(token.as_deref()));
            let what = format!("{} {} as {who:?}", request.method.as_str(), request.path);
            cells += 1;
            if who == Anonymous {
                // without a token only self-registration gets past authentication, and it is closed
                let expect = if request.method == Method::Post && request.path == "/api/users" { 403 } else { 401 };
                ensure!(r.status == expect, "{what}: {} {:?}", r.status, r.error_code());
                denied += 1;
            } else if allow.contains(&who) {
                ensure!(r.is_success(), "{what} should be allowed: {} {:?}", r.status, r.error_message());
            } else {
                ensure!(r.status == 403, "{what} should be denied: {} {:?}", r.status, r.error_code());
                denied += 1;
            }
            drop(e);
            std::fs::remove_dir_all(&cell).ok();
        }
    }
    Ok(format!("{} endpoints x {} callers = {cells} cells, {denied} denied", table.len(), WHO.len()))
}
