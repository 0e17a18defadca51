use prepub_core::anchoring::{self, AnchorConfig, FragmentAnchor, Resolution, TextSource};
use prepub_core::redif::{self, validate_handle, IngestReport};
use prepub_core::testkit::{self, WorldSpec};
use prepub_core::Engine;
use serde_json::{json, Value};

pub fn create_anchor(doc: &str, start: usize, end: usize, handle: &str) -> Result<String, String> {
    let handle = validate_handle(handle).map_err(|e| e.to_string())?;
    let anchor = anchoring::create_anchor(doc, start, end, handle, TextSource::Abstract).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&anchor).expect("anchor serializes"))
}

pub fn resolve_anchor(doc: &str, anchor_json: &str) -> Result<String, String> {
    let anchor: FragmentAnchor = serde_json::from_str(anchor_json).map_err(|e| format!("bad anchor: {e}"))?;
    let v = match anchoring::resolve_anchor(doc, &anchor) {
        Resolution::Found { span, stage } => {
            let text: String = doc.chars().skip(span.start).take(span.end - span.start).collect();
            json!({ "status": "found", "start": span.start, "end": span.end, "stage": stage, "text": text })
        }
        Resolution::AmbiguousMatch => json!({ "status": "ambiguous" }),
        Resolution::NotFound => json!({ "status": "not_found" }),
    };
    Ok(v.to_string())
}

pub fn similarity_profile(doc: &str, exact: &str) -> Vec<f64> {
    anchoring::similarity_profile(&AnchorConfig::default(), doc, exact)
}

pub fn parse_redif(text: &str) -> String {
    let mut report = IngestReport::default();
    let items = redif::items_from_text("input", text, &mut report);
    json!({
        "templates": report.templates_parsed + report.templates_rejected,
        "items": items,
        "rejected": report.templates_rejected,
        "diagnostics": report.diagnostics,
    })
    .to_string()
}

pub fn random_world(seed: u64, persons: usize, outputs: usize) -> String {
    let spec = WorldSpec {
        persons: persons.clamp(1, 50),
        outputs: outputs.min(400),
        conversations: false,
        ..WorldSpec::default()
    };
    let mut engine = Engine::new();
    for (cmd, at) in testkit::random_script(seed, &spec) {
        engine.execute(&cmd, at).expect("generated scripts are valid");
    }
    let state = engine.state();
    let people: Vec<Value> = state
        .registry()
        .persons()
        .map(|p| {
            let report = engine.neighbors_of(&p.person_id, usize::MAX).expect("registered person");
            json!({
                "person_id": p.person_id,
                "name": p.display_name,
                "claimed": p.claimed.len(),
                "downstream": report.downstream,
            })
        })
        .collect();
    json!({
        "persons": people,
        "items": state.registry().item_count(),
        "outputs": state.outputs().len(),
        "notifications": state.comms().notifications().count(),
    })
    .to_string()
}
