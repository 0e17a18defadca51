//! Runners for the headline properties. Each returns a [`Verdict`] so the
//! core tests can assert on reduced sizes and the acceptance harness can
//! report full-size runs line by line.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::Rng;

use prepub_core::anchoring::{
    create_anchor_with, resolve_anchor_with, AnchorConfig, MatchStage, Resolution, TextSource,
};
use prepub_core::journal::Record;
use prepub_core::redif::{
    items_from_text, parse_redif, serialize_redif, template_region_count, ArchiveDescriptor,
    FileFetcher, IngestReport,
};
use prepub_core::store::{Store, JOURNAL_FILE};
use prepub_core::testkit::{self, WorldSpec};
use prepub_core::{Command, Engine, PersonId, State, Timestamp};

use super::{
    brute_fuzzy, brute_neighbors, expected_events, expected_pairs, expected_usage_resolutions,
    BruteOutcome, Edit,
};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    fn new(passed: bool, detail: String, started: Instant) -> Self {
        Verdict {
            passed,
            detail,
            elapsed: started.elapsed(),
        }
    }
}

fn run_script(script: &[(Command, Timestamp)]) -> Engine {
    let mut e = Engine::new();
    for (cmd, at) in script {
        e.execute(cmd, *at).expect("generated scripts replay");
    }
    e
}

// ---------------------------------------------------------------------------
// ReDIF

/// Garbles well-formed archive text in one of several ways.
fn mutate(rng: &mut impl Rng, text: &str) -> String {
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    const GARBAGE: &[&str] = &[
        "Handle:",
        "Handle: RePEc::x:1",
        "Handle: RePEc:a b:c:d",
        "Handle: Foo:a:b:c",
        "  indented continuation",
        "no colon here",
        "Template-Type:",
        "template-type: ReDIF-Paper 1.0",
        ": empty name",
        "Author-Email: orphan@example.org",
        "\u{0}\u{7f}\u{feff}",
        "# comment",
        "Title: \u{1F600} ünïcödé",
        "Handle: RePEc:tst:wpaper:1",
    ];
    for _ in 0..rng.random_range(1..6) {
        if lines.is_empty() {
            lines.push(String::new());
        }
        let i = rng.random_range(0..lines.len());
        match rng.random_range(0..7) {
            0 => {
                lines.remove(i);
            }
            1 => {
                let l = lines[i].clone();
                lines.insert(i, l);
            }
            2 => lines.insert(i, GARBAGE.choose(rng).unwrap().to_string()),
            3 => {
                let cut = rng.random_range(0..=lines[i].len());
                let cut = (0..=cut).rev().find(|&c| lines[i].is_char_boundary(c)).unwrap();
                lines[i].truncate(cut);
            }
            4 => lines[i].insert(0, ' '),
            5 => {
                let mut chars: Vec<char> = lines[i].chars().collect();
                if !chars.is_empty() {
                    let j = rng.random_range(0..chars.len());
                    chars[j] = char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?');
                }
                lines[i] = chars.into_iter().collect();
            }
            _ => lines[i] = lines[i].to_uppercase(),
        }
    }
    let mut out = lines.join(if rng.random_bool(0.2) { "\r\n" } else { "\n" });
    if rng.random_bool(0.1) {
        out.truncate((0..=out.len() / 2).rev().find(|&c| out.is_char_boundary(c)).unwrap());
    }
    out
}

fn random_bytes_text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..400);
    let bytes: Vec<u8> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => b'\n',
            1 => b':',
            2 => *b"Template-Type Handle RePEc".choose(rng).unwrap(),
            _ => rng.random(),
        })
        .collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

/// Fuzzed inputs never panic and always conserve the template count;
/// generated archives round-trip through serialize and parse.
pub fn parser_totality(fuzz_cases: usize, roundtrip_cases: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let mut rng = testkit::rng(seed);
    let mut crashes = 0;
    let mut conservation_failures = 0;
    for i in 0..fuzz_cases {
        let text = if i % 4 == 0 {
            random_bytes_text(&mut rng)
        } else {
            let n = rng.random_range(1..6);
            let archive = testkit::random_archive(&mut rng, "fz", n);
            mutate(&mut rng, &serialize_redif(&archive))
        };
        let result = catch_unwind(AssertUnwindSafe(|| {
            let _ = parse_redif(&text);
            let mut report = IngestReport::default();
            items_from_text("fuzz.rdf", &text, &mut report);
            report.templates_parsed + report.templates_rejected == template_region_count(&text)
        }));
        match result {
            Err(_) => crashes += 1,
            Ok(false) => conservation_failures += 1,
            Ok(true) => {}
        }
    }
    let mut roundtrip_ok = 0;
    for _ in 0..roundtrip_cases {
        let n = rng.random_range(1..12);
        let archive = testkit::random_archive(&mut rng, "rt", n);
        let (parsed, diags) = parse_redif(&serialize_redif(&archive));
        if parsed == archive && diags.is_empty() {
            roundtrip_ok += 1;
        }
    }
    let elapsed = started.elapsed();
    Verdict::new(
        crashes == 0
            && conservation_failures == 0
            && roundtrip_ok == roundtrip_cases
            && elapsed < Duration::from_secs(60),
        format!(
            "{fuzz_cases} fuzzed: {crashes} crashes, {conservation_failures} count mismatches; \
             round-trip {roundtrip_ok}/{roundtrip_cases}"
        ),
        started,
    )
}

/// Writes `templates` generated templates over several files, harvests
/// twice into one store and checks the second pass changes nothing.
pub fn harvest_idempotence(templates: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = testkit::rng(seed);
    let archive = testkit::random_archive(&mut rng, "syn", templates);
    for (i, chunk) in archive.chunks(500).enumerate() {
        let sub = dir.path().join(format!("series{}", i % 3));
        std::fs::create_dir_all(&sub).unwrap();
        std::fs::write(sub.join(format!("part{i:04}.rdf")), serialize_redif(chunk)).unwrap();
    }
    let desc = ArchiveDescriptor::new("syn", dir.path().to_string_lossy()).unwrap();
    let mut store = Store::in_memory();
    let t0 = Instant::now();
    let first = store.harvest(&desc, &FileFetcher, testkit::tick(1)).unwrap();
    let first_elapsed = t0.elapsed();
    let before = store.state().to_canonical_json();
    let records = store.records().len();
    let second = store.harvest(&desc, &FileFetcher, testkit::tick(2)).unwrap();
    let after = store.state().to_canonical_json();
    let ok = first.items_created == templates
        && second.items_created == 0
        && second.items_updated == 0
        && second.items_unchanged == templates
        && before == after
        && store.records().len() == records
        && first_elapsed < Duration::from_secs(60);
    Verdict::new(
        ok,
        format!(
            "first pass created {} in {:.2}s; second pass created {}, updated {}, unchanged {}; state {}",
            first.items_created,
            first_elapsed.as_secs_f64(),
            second.items_created,
            second.items_updated,
            second.items_unchanged,
            if before == after { "identical" } else { "CHANGED" }
        ),
        started,
    )
}

// ---------------------------------------------------------------------------
// Anchoring

fn random_doc(rng: &mut impl Rng, min_chars: usize, max_chars: usize) -> String {
    let target = rng.random_range(min_chars..=max_chars);
    let mut s = String::new();
    while s.chars().count() < target {
        if !s.is_empty() {
            s.push(if rng.random_bool(0.1) { '.' } else { ' ' });
            if s.ends_with('.') {
                s.push(' ');
            }
        }
        s.push_str(&testkit::words(rng, 1));
        if rng.random_bool(0.03) {
            s.push_str(" é∂ß");
        }
    }
    s.chars().take(target).collect()
}

pub fn anchoring_roundtrip(cases: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let cfg = AnchorConfig::default();
    let mut rng = testkit::rng(seed);
    let target = testkit::handle("anc", "wpaper", 1);
    let mut ok = 0;
    for _ in 0..cases {
        let doc = random_doc(&mut rng, 1, 3000);
        let n = doc.chars().count();
        let start = rng.random_range(0..n);
        let end = rng.random_range(start + 1..=n);
        let anchor = create_anchor_with(&cfg, &doc, start, end, target.clone(), TextSource::Abstract).unwrap();
        if resolve_anchor_with(&cfg, &doc, &anchor).span().map(|s| (s.start, s.end)) == Some((start, end)) {
            ok += 1;
        }
    }
    Verdict::new(ok == cases, format!("{ok}/{cases} resolved to the original span"), started)
}

fn filler(rng: &mut impl Rng, len: usize) -> String {
    let mut t = String::new();
    while t.chars().count() < len {
        t.push_str(&testkit::words(rng, 1));
        t.push(' ');
    }
    t.chars().take(len).collect()
}

fn random_edit(rng: &mut impl Rng, n: usize, start: usize, end: usize) -> Option<Edit> {
    let max = (n / 10).max(1);
    let len = rng.random_range(1..=max);
    // Positions are chosen outside the fragment: before it or after it.
    let before = rng.random_bool(0.5);
    match rng.random_range(0..3) {
        0 => {
            let at = if before { rng.random_range(0..=start) } else { rng.random_range(end..=n) };
            Some(Edit::Insert { at, text: filler(rng, len) })
        }
        kind => {
            let (lo, hi) = if before { (0, start) } else { (end, n) };
            if hi - lo < len {
                return None;
            }
            let at = rng.random_range(lo..=hi - len);
            if kind == 1 {
                Some(Edit::Delete { at, len })
            } else {
                let new_len = rng.random_range(1..=max);
                Some(Edit::Replace { at, len, text: filler(rng, new_len) })
            }
        }
    }
}

/// Applies one random edit away from the fragment and checks resolution
/// against where the fragment actually moved.
pub fn anchoring_edits(cases: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let cfg = AnchorConfig::default();
    let mut rng = testkit::rng(seed);
    let target = testkit::handle("anc", "wpaper", 1);
    let (mut correct, mut wrong, mut undecided, mut done) = (0, 0, 0, 0);
    while done < cases {
        let doc = random_doc(&mut rng, 200, 2000);
        let chars: Vec<char> = doc.chars().collect();
        let n = chars.len();
        let flen = rng.random_range(10..=60.min(n / 4));
        let start = rng.random_range(0..=n - flen);
        let end = start + flen;
        let Some(edit) = random_edit(&mut rng, n, start, end) else {
            continue;
        };
        done += 1;
        let anchor = create_anchor_with(&cfg, &doc, start, end, target.clone(), TextSource::Abstract).unwrap();
        let edited: String = edit.apply(&chars).into_iter().collect();
        let expected = edit.shift(start, end);
        match resolve_anchor_with(&cfg, &edited, &anchor) {
            Resolution::Found { span, .. } if (span.start, span.end) == expected => correct += 1,
            Resolution::Found { .. } => wrong += 1,
            _ => undecided += 1,
        }
    }
    let rate = correct as f64 / cases as f64;
    Verdict::new(
        rate >= 0.95 && wrong == 0,
        format!(
            "{correct}/{cases} correct ({:.1}%), {wrong} wrong, {undecided} ambiguous or not found",
            rate * 100.0
        ),
        started,
    )
}

/// Corrupts the quote so exact search fails and compares the fuzzy stage
/// with the brute-force window scan.
pub fn anchoring_fuzzy_oracle(cases: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let cfg = AnchorConfig::default();
    let mut rng = testkit::rng(seed);
    let target = testkit::handle("anc", "wpaper", 1);
    let (mut agree, mut fuzzy_found, mut done) = (0, 0, 0);
    let mut first_mismatch = None;
    while done < cases {
        let max_doc = if done % 10 == 0 { 2000 } else { 400 };
        let doc = random_doc(&mut rng, 20, max_doc);
        let chars: Vec<char> = doc.chars().collect();
        let n = chars.len();
        let flen = rng.random_range(4..=40.min(n));
        let start = rng.random_range(0..=n - flen);
        let mut anchor =
            create_anchor_with(&cfg, &doc, start, start + flen, target.clone(), TextSource::Abstract).unwrap();
        let mut q: Vec<char> = anchor.exact.chars().collect();
        for _ in 0..rng.random_range(1..=3) {
            let i = rng.random_range(0..q.len());
            match rng.random_range(0..3) {
                0 => q[i] = 'x',
                1 if q.len() > 2 => {
                    q.remove(i);
                }
                _ => q.insert(i, 'z'),
            }
        }
        anchor.exact = q.iter().collect();
        if doc.contains(&anchor.exact) {
            continue;
        }
        if rng.random_bool(0.3) {
            anchor.start_hint = rng.random_range(0..n);
        }
        done += 1;
        let got = match resolve_anchor_with(&cfg, &doc, &anchor) {
            Resolution::Found { span, stage } => {
                assert_eq!(stage, MatchStage::Fuzzy);
                fuzzy_found += 1;
                BruteOutcome::Found(span.start, span.end)
            }
            Resolution::AmbiguousMatch => BruteOutcome::Ambiguous,
            Resolution::NotFound => BruteOutcome::NotFound,
        };
        let want = brute_fuzzy(&cfg, &doc, &anchor);
        if got == want {
            agree += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some(format!("got {got:?}, oracle {want:?} for {:?}", anchor.exact));
        }
    }
    Verdict::new(
        agree == cases,
        format!(
            "{agree}/{cases} agree with brute force ({fuzzy_found} found by fuzzy stage){}",
            first_mismatch.map(|m| format!("; first mismatch: {m}")).unwrap_or_default()
        ),
        started,
    )
}

// ---------------------------------------------------------------------------
// Notifications, neighbors, portraits

fn notification_world(rng: &mut impl Rng) -> WorldSpec {
    WorldSpec {
        persons: rng.random_range(2..=10),
        items: rng.random_range(1..=6),
        outputs: rng.random_range(1..=40),
        private_share: rng.random_range(0.0..0.6),
        conversations: true,
    }
}

pub fn notification_exactly_once(trials: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let mut rng = testkit::rng(seed);
    let (mut matched, mut self_notes, mut replay_dupes) = (0, 0, 0);
    let (mut total, mut offers) = (0, 0);
    let mut first_mismatch = None;
    for trial in 0..trials {
        let spec = notification_world(&mut rng);
        let script = testkit::random_script(seed ^ (trial as u64 + 1), &spec);
        let engine = run_script(&script);
        let comms = engine.state().comms();
        let lookup = |id: &str| comms.notification(&id.into()).expect("notification exists").event_id;
        let events = expected_events(&script, lookup);
        let want = expected_pairs(&events);
        let got: Vec<_> = comms.notifications().map(|n| (n.event_id, n.recipient.clone())).collect();
        let got_set: BTreeSet<_> = got.iter().cloned().collect();
        total += got.len();
        offers += comms.offers().len();
        if got_set == want && got.len() == got_set.len() {
            matched += 1;
        } else if first_mismatch.is_none() {
            first_mismatch = Some(format!("trial {trial}: {} expected, {} produced", want.len(), got.len()));
        }
        self_notes += comms
            .notifications()
            .filter(|n| comms.event(n.event_id).is_some_and(|e| e.actor == n.recipient))
            .count();

        // Replaying the log through a snapshot-plus-journal recovery must
        // not mint a second notification for any (event, recipient).
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = Store::open(dir.path()).unwrap();
            let cut = script.len() / 2;
            for (i, (cmd, at)) in script.iter().enumerate() {
                store.commit(cmd.clone(), *at).unwrap();
                if i == cut {
                    store.snapshot().unwrap();
                }
            }
        }
        let recovered = Store::open(dir.path()).unwrap();
        let rc = recovered.state().comms();
        if rc.notifications().count() != got.len() {
            replay_dupes += 1;
        }
    }
    Verdict::new(
        matched == trials && self_notes == 0 && replay_dupes == 0,
        format!(
            "{matched}/{trials} match the oracle ({total} notifications, {offers} from offers); \
             {self_notes} self-notifications; {replay_dupes} replays with extra notifications{}",
            first_mismatch.map(|m| format!("; {m}")).unwrap_or_default()
        ),
        started,
    )
}

pub fn graph_oracle(graphs: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let mut rng = testkit::rng(seed);
    let (mut matched, mut symmetric) = (0, 0);
    for g in 0..graphs {
        let spec = WorldSpec {
            persons: rng.random_range(1..=50),
            items: rng.random_range(1..=30),
            outputs: rng.random_range(0..=200),
            private_share: rng.random_range(0.0..0.5),
            conversations: false,
        };
        let engine = run_script(&testkit::random_script(seed.wrapping_add(g as u64 * 7919), &spec));
        let persons: Vec<PersonId> = engine.state().registry().persons().map(|p| p.person_id.clone()).collect();
        let mut ok = true;
        let mut reports = BTreeMap::new();
        for p in &persons {
            let r = engine.neighbors_of(p, usize::MAX).unwrap();
            let (up, down) = brute_neighbors(engine.state(), p);
            let as_map = |v: &[prepub_core::graph::NeighborCount]| -> BTreeMap<PersonId, u64> {
                v.iter().map(|c| (c.person_id.clone(), c.usage_count)).collect()
            };
            let ranked_ok = |v: &[prepub_core::graph::NeighborCount]| {
                v.windows(2).all(|w| {
                    (std::cmp::Reverse(w[0].usage_count), &w[0].person_id)
                        < (std::cmp::Reverse(w[1].usage_count), &w[1].person_id)
                })
            };
            ok &= as_map(&r.upstream) == up && as_map(&r.downstream) == down;
            ok &= ranked_ok(&r.upstream) && ranked_ok(&r.downstream);
            ok &= r.upstream.iter().chain(&r.downstream).all(|c| c.usage_count >= 1 && &c.person_id != p);
            let capped = engine.neighbors_of(p, 3).unwrap();
            ok &= capped.upstream.as_slice() == &r.upstream[..r.upstream.len().min(3)];
            reports.insert(p.clone(), (as_map(&r.upstream), as_map(&r.downstream)));
        }
        if ok {
            matched += 1;
        }
        let sym = reports.iter().all(|(a, (up, down))| {
            down.iter().all(|(b, c)| reports[b].0.get(a) == Some(c))
                && up.iter().all(|(b, c)| reports[b].1.get(a) == Some(c))
        });
        if sym {
            symmetric += 1;
        }
    }
    Verdict::new(
        matched == graphs && symmetric == graphs,
        format!("{matched}/{graphs} match brute force; symmetry holds in {symmetric}/{graphs}"),
        started,
    )
}

fn portraits_json(engine: &Engine) -> String {
    let portraits: Vec<_> = engine
        .state()
        .registry()
        .persons()
        .map(|p| engine.compute_portrait(&p.person_id).unwrap())
        .collect();
    let comms = engine.state().comms();
    serde_json::to_string(&(
        portraits,
        comms.notifications().collect::<Vec<_>>(),
        comms.threads().collect::<Vec<_>>(),
    ))
    .unwrap()
}

pub fn portrait_determinism(logs: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let mut rng = testkit::rng(seed);
    let (mut identical, mut conserved) = (0, 0);
    for i in 0..logs {
        let spec = notification_world(&mut rng);
        let script = testkit::random_script(seed.wrapping_mul(31).wrapping_add(i as u64), &spec);
        let live = run_script(&script);
        let records: Vec<Record> = script
            .iter()
            .enumerate()
            .map(|(k, (cmd, at))| Record { seq: k as u64 + 1, at: *at, command: cmd.clone() })
            .collect();
        let rebuilt = Store::replay(State::default(), &records).unwrap();
        if portraits_json(&live) == portraits_json(&rebuilt)
            && live.state().to_canonical_json() == rebuilt.state().to_canonical_json()
        {
            identical += 1;
        }
        let comms = live.state().comms();
        let lookup = |id: &str| comms.notification(&id.into()).unwrap().event_id;
        let expected = expected_usage_resolutions(&expected_events(&script, lookup));
        let total: u64 = live
            .state()
            .registry()
            .persons()
            .map(|p| live.compute_portrait(&p.person_id).unwrap().received_usage_count)
            .sum();
        if total == expected {
            conserved += 1;
        }
    }
    Verdict::new(
        identical == logs && conserved == logs,
        format!("rebuild byte-identical {identical}/{logs}; conservation {conserved}/{logs}"),
        started,
    )
}

// ---------------------------------------------------------------------------
// Persistence

/// Writes a random prefix of a script into a file store, "kills" it by
/// dropping the store and tearing or garbling the journal tail, recovers,
/// and compares against replaying the surviving records from scratch. Each
/// cycle then continues writing on the recovered store.
pub fn crash_recovery(cycles: usize, seed: u64) -> Verdict {
    let started = Instant::now();
    let mut rng = testkit::rng(seed);
    let dir = tempfile::tempdir().unwrap();
    let script = testkit::random_script(seed, &WorldSpec { outputs: 400, ..WorldSpec::default() });
    let mut next = 0usize;
    let mut acknowledged: Vec<(Command, Timestamp)> = Vec::new();
    let mut ok = 0;
    let mut first_failure = None;
    for cycle in 0..cycles {
        let mut store = Store::open(dir.path()).unwrap();
        let writes = rng.random_range(1..=(script.len() / cycles).max(2));
        for _ in 0..writes {
            if next >= script.len() {
                break;
            }
            let (cmd, at) = &script[next];
            store.commit(cmd.clone(), *at).unwrap();
            acknowledged.push(script[next].clone());
            next += 1;
            if rng.random_bool(0.05) {
                store.snapshot().unwrap();
            }
        }
        drop(store);

        // The kill lands mid-write of the next record: a torn frame or a
        // frame whose bytes were garbled on the way to disk.
        if next < script.len() && rng.random_bool(0.7) {
            let (cmd, at) = &script[next];
            let mut frame = Record { seq: acknowledged.len() as u64 + 1, at: *at, command: cmd.clone() }.encode();
            if rng.random_bool(0.5) {
                frame.truncate(rng.random_range(0..frame.len()));
            } else {
                let i = rng.random_range(8..frame.len());
                frame[i] ^= 0x5a;
            }
            use std::io::Write;
            let mut f = std::fs::OpenOptions::new().append(true).open(dir.path().join(JOURNAL_FILE)).unwrap();
            f.write_all(&frame).unwrap();
        }

        let recovered = Store::open(dir.path()).unwrap();
        let reference = run_script(&acknowledged);
        if recovered.state().to_canonical_json() == reference.state().to_canonical_json() {
            ok += 1;
        } else if first_failure.is_none() {
            first_failure = Some(format!("cycle {cycle} diverged after {} records", acknowledged.len()));
        }
    }
    Verdict::new(
        ok == cycles,
        format!(
            "{ok}/{cycles} recoveries equal the reference replay ({} records written){}",
            acknowledged.len(),
            first_failure.map(|f| format!("; {f}")).unwrap_or_default()
        ),
        started,
    )
}
