//! `prepub`: command-line client for a prepub server, and the server itself.

mod client;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prepub_core::anchoring::{create_anchor, FragmentAnchor, TextSource};
use prepub_core::micro::{Draft, MicroOutput, OutputRef, RefKind, Triple};
use prepub_core::redif::{items_from_text, validate_handle, Handle, IngestReport};
use serde_json::{json, Value};
use thiserror::Error;

use client::{segment, Api};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{code} ({status}): {detail}")]
    Api {
        status: u16,
        code: String,
        detail: String,
    },
    #[error("cannot reach server: {0}")]
    Transport(String),
    #[error("{0}")]
    Server(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Parser)]
#[command(name = "prepub", version, about = "Pre-publication scholarly communication")]
struct Cli {
    /// Server base URL.
    #[arg(long, global = true, env = "PREPUB_API_URL")]
    api_url: Option<String>,
    /// Bearer token.
    #[arg(long, global = true, env = "PREPUB_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// Config file; defaults to the per-user prepub/config.toml.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the HTTP server.
    Serve(ServeArgs),
    /// Harvest a ReDIF archive (directory, file:// or http:// URL). Admin only.
    Harvest {
        #[arg(long)]
        archive: String,
        #[arg(long)]
        url: String,
    },
    /// Parse a local ReDIF file and upsert its items. Admin only.
    ImportRedif { file: PathBuf },
    /// Harvested items.
    #[command(subcommand)]
    Item(ItemCmd),
    /// Persons and claims.
    #[command(subcommand)]
    Person(PersonCmd),
    /// Issue an API token for a person. Admin only.
    Token {
        person: String,
        /// Use this token instead of a random one.
        #[arg(long)]
        value: Option<String>,
    },
    /// Create, revise or publish micro outputs.
    #[command(subcommand)]
    Annotate(AnnotateCmd),
    /// Relate two outputs (`item:<handle>` or `micro:<id>`).
    Relate {
        from: String,
        to: String,
        #[arg(long)]
        relation: String,
        #[arg(long)]
        comment: Option<String>,
        #[arg(long)]
        private: bool,
    },
    /// List notifications, or mark one read.
    Inbox {
        #[arg(long, value_parser = ["pending", "delivered", "read"])]
        state: Option<String>,
        /// Mark this notification read instead of listing.
        #[arg(long)]
        read: Option<String>,
    },
    /// Conversation threads.
    #[command(subcommand)]
    Thread(ThreadCmd),
    /// Offer a competing output on a public thread.
    Offer {
        thread: String,
        offered: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    /// A person's reputation portrait.
    Portrait { person: String },
    /// Upstream and downstream neighbors of a person.
    Neighbors {
        person: String,
        #[arg(long, default_value_t = 10)]
        max: usize,
    },
    /// Aggregations of outputs.
    #[command(subcommand)]
    Aggregate(AggregateCmd),
    /// Structural consistency report.
    Integrity,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    /// Journal and snapshot directory; in-memory when omitted.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, env = "PREPUB_ADMIN_TOKEN", hide_env_values = true)]
    admin_token: Option<String>,
    #[arg(long)]
    webhook_url: Option<String>,
    #[arg(long)]
    snapshot_every: Option<u64>,
}

#[derive(Subcommand)]
enum ItemCmd {
    List {
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long, default_value_t = 50)]
        limit: usize,
    },
    Show { handle: String },
    /// Outputs anchored to or relating an item.
    Outputs { handle: String },
}

#[derive(Subcommand)]
enum PersonCmd {
    List,
    /// Register a person. Admin only.
    Add {
        name: String,
        #[arg(long)]
        contact: Option<String>,
        #[arg(long)]
        affiliation: Option<String>,
    },
    /// Claim authorship of an item as `person` (must be yourself).
    Claim { person: String, handle: String },
}

#[derive(Args)]
struct Selection {
    /// Target item handle.
    handle: String,
    /// First selected character (0-based, in Unicode scalar values).
    #[arg(long, requires = "end", conflicts_with = "find")]
    start: Option<usize>,
    /// One past the last selected character.
    #[arg(long, requires = "start")]
    end: Option<usize>,
    /// Select the first occurrence of this text instead of giving offsets.
    #[arg(long)]
    find: Option<String>,
    /// Fail unless the selection reads exactly this.
    #[arg(long)]
    expect: Option<String>,
    #[arg(long, value_enum, default_value = "abstract")]
    source: Source,
    #[arg(long)]
    private: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    Abstract,
    Fulltext,
}

#[derive(Subcommand)]
enum AnnotateCmd {
    Comment {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        body: String,
    },
    Assert {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        subject: String,
        #[arg(long)]
        predicate: String,
        #[arg(long)]
        object: String,
    },
    Quote {
        #[command(flatten)]
        sel: Selection,
        #[arg(long, default_value = "")]
        comment: String,
    },
    Micropaper {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        title: String,
        #[arg(long)]
        body: String,
    },
    /// Revise your latest version of an output, keeping what you don't change.
    Revise {
        output: String,
        /// New comment body, quotation comment, micro paper body or relationship comment.
        #[arg(long)]
        body: Option<String>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long)]
        predicate: Option<String>,
        #[arg(long)]
        object: Option<String>,
    },
    /// Make a private output public.
    Publish { output: String },
    /// Show an output and its version chain.
    Show { output: String },
}

#[derive(Subcommand)]
enum ThreadCmd {
    /// Open a thread from one of your notifications.
    Open {
        notification: String,
        #[arg(long)]
        message: String,
        #[arg(long)]
        private: bool,
    },
    Show { thread: String },
    Post {
        thread: String,
        #[arg(long)]
        message: String,
        /// Attach an output (`item:<handle>` or `micro:<id>`).
        #[arg(long)]
        attach: Option<String>,
    },
}

#[derive(Subcommand)]
enum AggregateCmd {
    Create {
        #[arg(long)]
        title: String,
        /// Member reference; repeat for each member.
        #[arg(long = "member", required = true)]
        members: Vec<String>,
    },
    Show { id: String },
    Export {
        id: String,
        #[arg(long, value_parser = ["json", "text"], default_value = "json")]
        as_format: String,
    },
}

fn parse_ref(raw: &str) -> Result<OutputRef, CliError> {
    let (kind, id) = match raw.split_once(':') {
        Some(("item", rest)) => (RefKind::Item, rest),
        Some(("micro", rest)) => (RefKind::Micro, rest),
        _ if raw.starts_with("mo-") => (RefKind::Micro, raw),
        _ => (RefKind::Item, raw),
    };
    Ok(OutputRef {
        kind,
        id: id.to_string(),
        sub_anchor: None,
    })
}

fn visibility(private: bool) -> &'static str {
    if private {
        "private"
    } else {
        "public"
    }
}

fn parse_handle(raw: &str) -> Result<Handle, CliError> {
    validate_handle(raw).map_err(|e| CliError::Usage(e.to_string()))
}

/// Fetches the item text and builds an anchor for the selection locally.
fn anchor_for(api: &Api, sel: &Selection) -> Result<FragmentAnchor, CliError> {
    let handle = parse_handle(&sel.handle)?;
    let item = api.get(&format!("/items/{}", segment(handle.as_str())))?;
    let (field, source) = match sel.source {
        Source::Abstract => ("abstract", TextSource::Abstract),
        Source::Fulltext => ("fulltext", TextSource::Fulltext),
    };
    let doc = item["item"][field]
        .as_str()
        .ok_or_else(|| CliError::Usage(format!("{handle} has no {field} text to anchor to")))?;
    let (start, end) = match (&sel.find, sel.start, sel.end) {
        (Some(needle), _, _) => {
            let byte = doc
                .find(needle.as_str())
                .ok_or_else(|| CliError::Usage(format!("{needle:?} not found in the {field}")))?;
            let start = doc[..byte].chars().count();
            (start, start + needle.chars().count())
        }
        (None, Some(s), Some(e)) => (s, e),
        _ => return Err(CliError::Usage("give --start/--end or --find".into())),
    };
    if let Some(expect) = &sel.expect {
        let got: String = doc.chars().skip(start).take(end.saturating_sub(start)).collect();
        if &got != expect {
            return Err(CliError::Usage(format!("selection reads {got:?}, expected {expect:?}")));
        }
    }
    create_anchor(doc, start, end, handle, source).map_err(|e| CliError::Usage(e.to_string()))
}

fn create(api: &Api, draft: Value, private: bool) -> Result<Value, CliError> {
    let mut body = draft;
    body["visibility"] = json!(visibility(private));
    api.post("/outputs", &body)
}

fn annotate(api: &Api, cmd: AnnotateCmd) -> Result<Value, CliError> {
    match cmd {
        AnnotateCmd::Comment { sel, body } => {
            let anchor = anchor_for(api, &sel)?;
            create(api, json!({ "kind": "comment", "anchor": anchor, "body": body }), sel.private)
        }
        AnnotateCmd::Assert {
            sel,
            subject,
            predicate,
            object,
        } => {
            let anchor = anchor_for(api, &sel)?;
            let statement = Triple::new(subject, predicate, object);
            create(
                api,
                json!({ "kind": "assertion", "anchor": anchor, "statement": statement}),
                sel.private,
            )
        }
        AnnotateCmd::Quote { sel, comment } => {
            let anchor = anchor_for(api, &sel)?;
            create(api, json!({ "kind": "quotation", "anchor": anchor, "comment": comment }), sel.private)
        }
        AnnotateCmd::Micropaper { sel, title, body } => {
            let anchor = anchor_for(api, &sel)?;
            create(
                api,
                json!({ "kind": "micropaper", "base_anchor": anchor, "title": title, "body": body }),
                sel.private,
            )
        }
        AnnotateCmd::Revise {
            output,
            body,
            title,
            subject,
            predicate,
            object,
        } => {
            let current = api.get(&format!("/outputs/{}", segment(&output)))?;
            let out: MicroOutput = serde_json::from_value(current["output"].clone())
                .map_err(|e| CliError::Server(format!("unexpected output shape: {e}")))?;
            let mut draft = Draft::from_body(&out.body);
            match &mut draft {
                Draft::Comment { body: b, .. } | Draft::Micropaper { body: b, .. } => {
                    if let Some(new) = body {
                        *b = new;
                    }
                }
                Draft::Quotation { comment, .. } => {
                    if let Some(new) = body {
                        *comment = new;
                    }
                }
                Draft::Relationship { comment, .. } => {
                    if body.is_some() {
                        *comment = body;
                    }
                }
                Draft::Assertion { statement, .. } => {
                    if let Some(s) = subject {
                        statement.subject = s;
                    }
                    if let Some(p) = predicate {
                        statement.predicate = p;
                    }
                    if let Some(o) = object {
                        statement.object = o;
                    }
                }
            }
            if let (Draft::Micropaper { title: t, .. }, Some(new)) = (&mut draft, title) {
                *t = new;
            }
            let payload = serde_json::to_value(&draft).expect("draft serializes");
            api.post(&format!("/outputs/{}/revise", segment(&output)), &payload)
        }
        AnnotateCmd::Publish { output } => api.post(&format!("/outputs/{}/publish", segment(&output)), &json!({})),
        AnnotateCmd::Show { output } => api.get(&format!("/outputs/{}", segment(&output))),
    }
}

fn import_redif(api: &Api, file: &PathBuf) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", file.display())))?;
    let mut report = IngestReport::default();
    let items = items_from_text(&file.to_string_lossy(), &text, &mut report);
    for d in &report.diagnostics {
        eprintln!("warning: {d:?}");
    }
    let res = api.post("/items", &json!({ "items": items }))?;
    Ok(json!({
        "templates_parsed": report.templates_parsed,
        "templates_rejected": report.templates_rejected,
        "outcomes": res["outcomes"],
    }))
}

fn serve(args: ServeArgs, file: config::FileConfig) -> Result<Value, CliError> {
    let mut cfg = file.server;
    if let Some(b) = args.bind {
        cfg.bind = b;
    }
    if args.data_dir.is_some() {
        cfg.data_dir = args.data_dir;
    }
    if args.admin_token.is_some() {
        cfg.admin_token = args.admin_token;
    }
    if let Some(url) = args.webhook_url {
        cfg.webhook.get_or_insert_with(Default::default).url = url;
    }
    if let Some(n) = args.snapshot_every {
        cfg.snapshot_every = n;
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))?;
    rt.block_on(prepub_service::serve(
        cfg,
        |addr| {
            use std::io::Write;
            println!("listening on http://{addr}");
            let _ = std::io::stdout().flush();
        },
        prepub_service::shutdown_signal(),
    ))
    .map_err(|e| CliError::Server(e.to_string()))?;
    Ok(Value::Null)
}

fn run(cli: Cli) -> Result<Value, CliError> {
    let file = config::load(cli.config.as_deref())?;
    if let Cmd::Serve(args) = cli.command {
        return serve(args, file);
    }
    let base = cli
        .api_url
        .or(file.api_url)
        .unwrap_or_else(|| "http://127.0.0.1:8080".to_string());
    let api = Api::new(&base, cli.token.or(file.token));
    match cli.command {
        Cmd::Serve(_) => unreachable!("handled above"),
        Cmd::Harvest { archive, url } => {
            // Local paths are resolved here so the server sees an absolute path.
            let url = if url.contains("://") {
                url
            } else {
                std::fs::canonicalize(&url)
                    .map_err(|e| CliError::Usage(format!("{url}: {e}")))?
                    .to_string_lossy()
                    .into_owned()
            };
            api.post("/harvest", &json!({ "archive_code": archive, "base_url": url }))
        }
        Cmd::ImportRedif { file } => import_redif(&api, &file),
        Cmd::Item(ItemCmd::List { offset, limit }) => api.get(&format!("/items?offset={offset}&limit={limit}")),
        Cmd::Item(ItemCmd::Show { handle }) => api.get(&format!("/items/{}", segment(&handle))),
        Cmd::Item(ItemCmd::Outputs { handle }) => api.get(&format!("/items/{}/outputs", segment(&handle))),
        Cmd::Person(PersonCmd::List) => api.get("/persons"),
        Cmd::Person(PersonCmd::Add {
            name,
            contact,
            affiliation,
        }) => api.post(
            "/persons",
            &json!({ "name": name, "contact": contact, "affiliation": affiliation }),
        ),
        Cmd::Person(PersonCmd::Claim { person, handle }) => api.post(
            &format!("/persons/{}/claims", segment(&person)),
            &json!({ "handle": handle }),
        ),
        Cmd::Token { person, value } => api.post("/tokens", &json!({ "person": person, "token": value })),
        Cmd::Annotate(cmd) => annotate(&api, cmd),
        Cmd::Relate {
            from,
            to,
            relation,
            comment,
            private,
        } => create(
            &api,
            json!({
                "kind": "relationship",
                "from_ref": parse_ref(&from)?,
                "to_ref": parse_ref(&to)?,
                "relation": relation,
                "comment": comment,
            }),
            private,
        ),
        Cmd::Inbox { read: Some(id), .. } => api.post(&format!("/notifications/{}/read", segment(&id)), &json!({})),
        Cmd::Inbox { state, read: None } => match state {
            Some(s) => api.get(&format!("/notifications?state={s}")),
            None => api.get("/notifications"),
        },
        Cmd::Thread(ThreadCmd::Open {
            notification,
            message,
            private,
        }) => api.post(
            "/threads",
            &json!({ "notification_id": notification, "first_message": message, "visibility": visibility(private) }),
        ),
        Cmd::Thread(ThreadCmd::Show { thread }) => api.get(&format!("/threads/{}", segment(&thread))),
        Cmd::Thread(ThreadCmd::Post { thread, message, attach }) => {
            let attached = attach.as_deref().map(parse_ref).transpose()?;
            api.post(
                &format!("/threads/{}/messages", segment(&thread)),
                &json!({ "body": message, "attached_output": attached }),
            )
        }
        Cmd::Offer { thread, offered, note } => api.post(
            &format!("/threads/{}/offers", segment(&thread)),
            &json!({ "offered": parse_ref(&offered)?, "note": note }),
        ),
        Cmd::Portrait { person } => api.get(&format!("/persons/{}/portrait", segment(&person))),
        Cmd::Neighbors { person, max } => api.get(&format!("/persons/{}/neighbors?max={max}", segment(&person))),
        Cmd::Aggregate(AggregateCmd::Create { title, members }) => {
            let members = members.iter().map(|m| parse_ref(m)).collect::<Result<Vec<_>, _>>()?;
            api.post("/aggregations", &json!({ "title": title, "members": members }))
        }
        Cmd::Aggregate(AggregateCmd::Show { id }) => api.get(&format!("/aggregations/{}", segment(&id))),
        Cmd::Aggregate(AggregateCmd::Export { id, as_format }) => {
            let v = api.get(&format!("/aggregations/{}/export?format={as_format}", segment(&id)))?;
            // Exports print verbatim in either output mode.
            Ok(Value::String(match v {
                Value::String(s) => s,
                other => serde_json::to_string_pretty(&other).expect("json"),
            }))
        }
        Cmd::Integrity => api.get("/integrity"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Cmd::Serve(_)) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level)).init();
    let format = cli.format;
    let inbox_listing = matches!(cli.command, Cmd::Inbox { read: None, .. });
    match run(cli) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(Value::String(s)) => {
            println!("{s}");
            ExitCode::SUCCESS
        }
        Ok(v) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&v).expect("json")),
                Format::Table if inbox_listing => println!("{}", render::table(&render::inbox_rows(&v))),
                Format::Table => println!("{}", render::table(&v)),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
