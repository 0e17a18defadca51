//! ReDIF metadata templates and archive harvesting.
//!
//! The grammar is line oriented: `Name: value` lines, indented lines continue
//! the previous value, and each `Template-Type:` line opens a new template.

mod handle;
mod harvest;
mod parse;

pub use handle::{validate_handle, Handle, HandleRule, MalformedHandle, HANDLE_PREFIX};
pub use harvest::{
    collect_archive, item_from_template, items_from_text, ArchiveDescriptor, FetchError,
    FileFetcher, IngestReport, ResourceFetcher,
};
pub use parse::{parse_redif, serialize_redif, AuthorCluster, Diagnostic, Field, RedifTemplate};

/// Number of `Template-Type:` region starts in `text`; every one of them
/// yields either a template or a diagnostic from [`parse_redif`].
pub fn template_region_count(text: &str) -> usize {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| parse::is_template_start(l))
        .count()
}
