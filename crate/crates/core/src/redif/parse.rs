use serde::{Deserialize, Serialize};

use super::handle::{validate_handle, Handle};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    /// Lowercase field name.
    pub name: String,
    pub value: String,
}

impl Field {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Field {
            name: name.into().to_lowercase(),
            value: value.into(),
        }
    }
}

/// An `Author-Name` line plus every `Author-*` field that followed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorCluster {
    pub fields: Vec<Field>,
}

impl AuthorCluster {
    fn get(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.value.as_str())
    }

    pub fn name(&self) -> &str {
        self.get("author-name").unwrap_or_default()
    }

    pub fn email(&self) -> Option<&str> {
        self.get("author-email")
    }

    pub fn workplace(&self) -> Option<&str> {
        self.get("author-workplace-name")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedifTemplate {
    pub template_type: String,
    pub handle: Handle,
    /// Non-author fields in source order; duplicates allowed.
    pub fields: Vec<Field>,
    pub author_clusters: Vec<AuthorCluster>,
}

impl RedifTemplate {
    pub fn first(&self, name: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.value.as_str())
    }

    pub fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fields
            .iter()
            .filter(move |f| f.name == name)
            .map(|f| f.value.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn at_line(line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            location: format!("line {line}"),
            message: message.into(),
        }
    }
}

struct Line<'a> {
    number: usize,
    text: &'a str,
}

fn split_field(text: &str) -> Option<(&str, &str)> {
    let (name, value) = text.split_once(':')?;
    let name = name.trim_end();
    let valid = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    valid.then(|| (name, value.trim()))
}

pub(super) fn is_template_start(text: &str) -> bool {
    if text.starts_with([' ', '\t']) {
        return false;
    }
    matches!(split_field(text), Some((name, _)) if name.eq_ignore_ascii_case("template-type"))
}

fn is_comment(text: &str) -> bool {
    text.starts_with('#')
}

/// Parses ReDIF text into templates. Never fails: every malformed template
/// region becomes exactly one diagnostic instead.
pub fn parse_redif(text: &str) -> (Vec<RedifTemplate>, Vec<Diagnostic>) {
    let lines: Vec<Line<'_>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line {
            number: i + 1,
            text: l.strip_suffix('\r').unwrap_or(l),
        })
        .collect();

    let starts: Vec<usize> = lines
        .iter()
        .enumerate()
        .filter(|(_, l)| is_template_start(l.text))
        .map(|(i, _)| i)
        .collect();

    let mut templates = Vec::new();
    let mut diagnostics = Vec::new();

    let preamble_end = starts.first().copied().unwrap_or(lines.len());
    if lines[..preamble_end]
        .iter()
        .any(|l| !l.text.trim().is_empty() && !is_comment(l.text))
    {
        diagnostics.push(Diagnostic::at_line(1, "preamble ignored"));
    }

    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(lines.len());
        match parse_region(&lines[start..end]) {
            Ok(t) => templates.push(t),
            Err(d) => diagnostics.push(d),
        }
    }
    (templates, diagnostics)
}

fn parse_region(region: &[Line<'_>]) -> Result<RedifTemplate, Diagnostic> {
    let head = &region[0];
    let (_, template_type) = split_field(head.text).expect("region starts at a field line");
    if template_type.is_empty() {
        return Err(Diagnostic::at_line(head.number, "empty Template-Type"));
    }

    // (line number, field) in source order, continuations already folded.
    let mut raw: Vec<(usize, Field)> = Vec::new();
    for line in &region[1..] {
        let text = line.text;
        if text.trim().is_empty() || is_comment(text) {
            continue;
        }
        if text.starts_with([' ', '\t']) {
            let Some((_, last)) = raw.last_mut() else {
                return Err(Diagnostic::at_line(
                    line.number,
                    "continuation line without a preceding field",
                ));
            };
            let more = text.trim();
            if last.value.is_empty() {
                last.value = more.to_string();
            } else {
                last.value.push(' ');
                last.value.push_str(more);
            }
            continue;
        }
        match split_field(text) {
            Some((name, value)) => raw.push((line.number, Field::new(name, value))),
            None => {
                return Err(Diagnostic::at_line(
                    line.number,
                    "expected `Name: value`",
                ))
            }
        }
    }

    let mut handle = None;
    let mut fields = Vec::new();
    let mut clusters: Vec<AuthorCluster> = Vec::new();
    for (number, field) in raw {
        if field.name == "handle" {
            if handle.is_some() {
                return Err(Diagnostic::at_line(number, "duplicate Handle"));
            }
            let h = validate_handle(&field.value).map_err(|e| {
                Diagnostic::at_line(number, format!("malformed Handle: {}", e.rule))
            })?;
            handle = Some(h);
        } else if field.name == "author-name" {
            clusters.push(AuthorCluster {
                fields: vec![field],
            });
        } else if field.name.starts_with("author-") && !clusters.is_empty() {
            clusters.last_mut().unwrap().fields.push(field);
        } else {
            fields.push(field);
        }
    }
    let handle = handle.ok_or_else(|| Diagnostic::at_line(head.number, "missing Handle"))?;

    Ok(RedifTemplate {
        template_type: template_type.to_string(),
        handle,
        fields,
        author_clusters: clusters,
    })
}

fn display_name(name: &str) -> String {
    name.split('-')
        .map(|seg| {
            let mut cs = seg.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().chain(cs).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join("-")
}

fn write_field(out: &mut String, name: &str, value: &str) {
    out.push_str(&display_name(name));
    out.push(':');
    if !value.is_empty() {
        out.push(' ');
        out.push_str(value);
    }
    out.push('\n');
}

/// Writes templates back as `Name: value` lines, one blank line between
/// templates. Author clusters follow the plain fields, the handle comes last.
pub fn serialize_redif(templates: &[RedifTemplate]) -> String {
    let mut out = String::new();
    for (i, t) in templates.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write_field(&mut out, "template-type", &t.template_type);
        for f in &t.fields {
            write_field(&mut out, &f.name, &f.value);
        }
        for c in &t.author_clusters {
            for f in &c.fields {
                write_field(&mut out, &f.name, &f.value);
            }
        }
        write_field(&mut out, "handle", t.handle.as_str());
    }
    out
}
