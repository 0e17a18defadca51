//! Scholarly items, person profiles and the claims linking the two.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{PersonId, Timestamp};
use crate::redif::Handle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Paper,
    Article,
    Book,
    Chapter,
    Software,
}

impl ItemKind {
    /// Maps a ReDIF template type such as `ReDIF-Paper 1.0`.
    pub fn from_template_type(template_type: &str) -> Option<ItemKind> {
        let family = template_type
            .split_whitespace()
            .next()?
            .to_ascii_lowercase();
        Some(match family.as_str() {
            "redif-paper" => ItemKind::Paper,
            "redif-article" => ItemKind::Article,
            "redif-book" => ItemKind::Book,
            "redif-chapter" => ItemKind::Chapter,
            "redif-software" => ItemKind::Software,
            _ => return None,
        })
    }
}

/// A harvested traditional research output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScholarlyItem {
    pub handle: Handle,
    pub title: String,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
    /// Plain-text full text, when supplied at ingest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext: Option<String>,
    /// Where the full text lives (ReDIF `File-URL`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulltext_url: Option<String>,
    #[serde(default)]
    pub author_names: Vec<String>,
    pub archive_code: String,
    pub kind: ItemKind,
}

impl ScholarlyItem {
    pub fn validate(&self) -> Result<()> {
        if self.title.trim().is_empty() {
            return Err(Error::InvalidItem("title must not be empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpsertOutcome {
    Created,
    Updated,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonProfile {
    pub person_id: PersonId,
    pub display_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
    pub claimed: BTreeSet<Handle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub person_id: PersonId,
    pub handle: Handle,
    pub claimed_at: Timestamp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    items: BTreeMap<Handle, ScholarlyItem>,
    persons: BTreeMap<PersonId, PersonProfile>,
    claims: Vec<Claim>,
    authors: BTreeMap<Handle, BTreeSet<PersonId>>,
    next_person: u64,
}

impl Registry {
    pub fn upsert_item(&mut self, item: ScholarlyItem) -> Result<UpsertOutcome> {
        item.validate()?;
        Ok(match self.items.get_mut(&item.handle) {
            None => {
                self.items.insert(item.handle.clone(), item);
                UpsertOutcome::Created
            }
            Some(existing) if *existing == item => UpsertOutcome::Unchanged,
            Some(existing) => {
                *existing = item;
                UpsertOutcome::Updated
            }
        })
    }

    /// What [`Registry::upsert_item`] would report, without applying it.
    pub fn upsert_preview(&self, item: &ScholarlyItem) -> UpsertOutcome {
        match self.items.get(&item.handle) {
            None => UpsertOutcome::Created,
            Some(existing) if existing == item => UpsertOutcome::Unchanged,
            Some(_) => UpsertOutcome::Updated,
        }
    }

    pub fn get_item(&self, handle: &Handle) -> Option<&ScholarlyItem> {
        self.items.get(handle)
    }

    pub fn items(&self) -> impl Iterator<Item = &ScholarlyItem> {
        self.items.values()
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn register_person(
        &mut self,
        name: &str,
        contact: Option<String>,
        affiliation: Option<String>,
    ) -> Result<PersonProfile> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::EmptyName);
        }
        self.next_person += 1;
        let profile = PersonProfile {
            person_id: PersonId::from_seq(self.next_person),
            display_name: name.to_string(),
            contact,
            affiliation,
            claimed: BTreeSet::new(),
        };
        self.persons
            .insert(profile.person_id.clone(), profile.clone());
        Ok(profile)
    }

    pub fn person(&self, id: &PersonId) -> Option<&PersonProfile> {
        self.persons.get(id)
    }

    pub fn persons(&self) -> impl Iterator<Item = &PersonProfile> {
        self.persons.values()
    }

    pub fn require_person(&self, id: &PersonId) -> Result<&PersonProfile> {
        self.persons
            .get(id)
            .ok_or_else(|| Error::UnknownPerson(id.to_string()))
    }

    pub fn check_claim(&self, person: &PersonId, handle: &Handle) -> Result<()> {
        let profile = self.require_person(person)?;
        if !self.items.contains_key(handle) {
            return Err(Error::UnknownItem(handle.to_string()));
        }
        if profile.claimed.contains(handle) {
            return Err(Error::DuplicateClaim {
                person: person.to_string(),
                handle: handle.to_string(),
            });
        }
        Ok(())
    }

    pub fn claim_work(&mut self, person: &PersonId, handle: &Handle, at: Timestamp) -> Result<Claim> {
        self.check_claim(person, handle)?;
        let claim = Claim {
            person_id: person.clone(),
            handle: handle.clone(),
            claimed_at: at,
        };
        self.persons
            .get_mut(person)
            .expect("checked")
            .claimed
            .insert(handle.clone());
        self.authors
            .entry(handle.clone())
            .or_default()
            .insert(person.clone());
        self.claims.push(claim.clone());
        Ok(claim)
    }

    /// Persons holding a claim on `handle`. Unknown or unclaimed handles give
    /// an empty set.
    pub fn resolve_authors(&self, handle: &Handle) -> BTreeSet<PersonId> {
        self.authors.get(handle).cloned().unwrap_or_default()
    }

    pub fn is_author(&self, person: &PersonId, handle: &Handle) -> bool {
        self.authors
            .get(handle)
            .is_some_and(|set| set.contains(person))
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    /// Referential integrity problems, if any.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.claims {
            if !self.items.contains_key(&c.handle) {
                out.push(format!("claim {} -> {} has no item", c.person_id, c.handle));
            }
            match self.persons.get(&c.person_id) {
                Some(p) if p.claimed.contains(&c.handle) => {}
                _ => out.push(format!(
                    "claim {} -> {} missing from profile",
                    c.person_id, c.handle
                )),
            }
        }
        for p in self.persons.values() {
            for h in &p.claimed {
                if !self
                    .claims
                    .iter()
                    .any(|c| c.person_id == p.person_id && &c.handle == h)
                {
                    out.push(format!("profile {} lists {h} without a claim", p.person_id));
                }
            }
        }
        out
    }
}
