use serde_json::Value;

const MAX_CELL: usize = 60;

fn cell(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let s = s.replace('\n', " ");
    if s.chars().count() > MAX_CELL {
        let cut: String = s.chars().take(MAX_CELL - 1).collect();
        format!("{cut}…")
    } else {
        s
    }
}

fn rows(items: &[Value]) -> String {
    let Some(Value::Object(first)) = items.first() else {
        return items.iter().map(cell).collect::<Vec<_>>().join("\n");
    };
    let cols: Vec<&String> = first.keys().collect();
    let table: Vec<Vec<String>> = items
        .iter()
        .map(|row| cols.iter().map(|c| cell(&row[c.as_str()])).collect())
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| {
            table
                .iter()
                .map(|r| r[i].chars().count())
                .chain([c.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![line(cols.iter().map(|c| c.to_uppercase()).collect())];
    out.extend(table.into_iter().map(line));
    out.join("\n")
}

/// Human-readable rendering of a response.
pub fn table(v: &Value) -> String {
    match v {
        Value::Array(items) if items.is_empty() => "(none)".to_string(),
        Value::Array(items) => rows(items),
        Value::Object(map) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            map.iter()
                .map(|(k, v)| match v {
                    Value::Array(items) if items.first().is_some_and(Value::is_object) => {
                        format!("{k}:\n{}", indent(&rows(items)))
                    }
                    Value::Object(_) => format!("{k}:\n{}", indent(&table(v))),
                    _ => format!("{k:<width$}  {}", cell(v)),
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

/// One flat row per inbox entry.
pub fn inbox_rows(v: &Value) -> Value {
    let Some(entries) = v.as_array() else {
        return v.clone();
    };
    Value::Array(
        entries
            .iter()
            .map(|e| {
                let n = &e["notification"];
                let ev = &e["event"];
                serde_json::json!({
                    "id": n["notification_id"],
                    "state": n["state"],
                    "actor": ev["actor"],
                    "action": ev["action_kind"],
                    "output": ev["output_id"],
                    "at": ev["at"],
                })
            })
            .collect(),
    )
}
