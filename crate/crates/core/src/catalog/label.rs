use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{is_banned_category, AssetRecord, Catalog, CatalogFile};
use crate::diag::Diagnostic;
use crate::json::{extract_keyed, ExtractError};
use crate::pipeline::{category_prompt, labeling_prompt, prompts, Provider, ProviderError};
use crate::scene::Vector3;

/// The labeler's answer for one thumbnail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub name: String,
    pub description: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("thumbnail is empty")]
    EmptyThumbnail,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("label schema error: {0}")]
    Schema(String),
    #[error("category {0:?} is not allowed")]
    BannedCategory(String),
    #[error("category {0:?} is not in the catalog's category list")]
    CategoryNotInList(String),
    #[error("the catalog has no categories")]
    NoCategories,
}

impl LabelError {
    pub fn kind(&self) -> &'static str {
        match self {
            LabelError::EmptyThumbnail => "empty_thumbnail",
            LabelError::Provider(e) => e.kind(),
            LabelError::Extract(e) => e.kind(),
            LabelError::Schema(_) => "label_schema_error",
            LabelError::BannedCategory(_) => "banned_category",
            LabelError::CategoryNotInList(_) => "category_not_in_list",
            LabelError::NoCategories => "no_categories",
        }
    }
}

/// Keeps at most `max` sentences (split after `.`, `!` or `?` followed by
/// whitespace or the end), trimmed.
pub fn trim_sentences(text: &str, max: usize) -> String {
    let text = text.trim();
    let mut count = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = match chars.peek() {
                None => true,
                Some((_, n)) => n.is_whitespace(),
            };
            if boundary {
                count += 1;
                if count == max {
                    return text[..i + c.len_utf8()].to_string();
                }
            }
        }
    }
    text.to_string()
}

fn string_field(map: &serde_json::Map<String, Value>, key: &str) -> Result<String, LabelError> {
    map.get(key)
        .and_then(Value::as_str)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| LabelError::Schema(format!("missing string field {key:?}")))
}

/// Asks the provider to label one thumbnail. A banned category gets one retry
/// with a corrective note; the description is cut to three sentences. The
/// returned record has no embedding yet and uses `object_name` as asset id.
pub fn annotate_asset(
    object_name: &str,
    thumbnail: &[u8],
    provider: &dyn Provider,
) -> Result<AssetRecord, LabelError> {
    if thumbnail.is_empty() {
        return Err(LabelError::EmptyThumbnail);
    }
    let mut request = labeling_prompt(object_name, thumbnail);
    for attempt in 0..2 {
        let reply = provider.complete(&request)?;
        let map = extract_keyed(&reply, "category")?;
        let label = Label {
            name: string_field(&map, "name")?,
            description: string_field(&map, "description")?,
            category: string_field(&map, "category")?,
        };
        if label.category.is_empty() {
            return Err(LabelError::Schema("empty category".to_string()));
        }
        if is_banned_category(&label.category) {
            if attempt == 0 {
                request.user_text = format!(
                    "{}\n\n{}",
                    request.user_text,
                    prompts::LABELING_RETRY_SUFFIX
                );
                continue;
            }
            return Err(LabelError::BannedCategory(label.category));
        }
        let name = if label.name.is_empty() {
            object_name.to_string()
        } else {
            label.name
        };
        return Ok(AssetRecord {
            asset_id: object_name.to_string(),
            name,
            description: trim_sentences(&label.description, 3),
            category: label.category,
            embedding: None,
            thumbnail_ref: None,
            default_scale: Vector3::ONE,
        });
    }
    unreachable!("loop returns on its second pass")
}

/// Category and description the provider picked for an object to add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryChoice {
    pub category: String,
    pub description: String,
    pub diagnostics: Vec<Diagnostic>,
}

/// Asks the provider which catalog category fits `object_name` and how the
/// object should look. The category must be one of the catalog's (matched
/// case-insensitively); an unlisted answer gets one corrective retry. With a
/// single category the choice is forced and only the description is used.
pub fn choose_category_and_description(
    object_name: &str,
    catalog: &Catalog,
    provider: &dyn Provider,
) -> Result<CategoryChoice, LabelError> {
    let categories = catalog.categories();
    if categories.is_empty() {
        return Err(LabelError::NoCategories);
    }
    let mut request = category_prompt(object_name, &categories);
    let mut diagnostics = Vec::new();
    for attempt in 0..2 {
        let reply = provider.complete(&request)?;
        let parsed = extract_keyed(&reply, "Category1")
            .map_err(LabelError::from)
            .and_then(|map| {
                Ok((
                    string_field(&map, "Category1")?,
                    string_field(&map, "Description")?,
                ))
            });
        let (category, description) = match parsed {
            Ok(pair) => pair,
            Err(e) if categories.len() == 1 => {
                diagnostics.push(Diagnostic::new(e.kind(), e.to_string()).with_raw(reply));
                (categories[0].clone(), String::new())
            }
            Err(e) => return Err(e),
        };
        let description = if description.is_empty() {
            object_name.replace('_', " ")
        } else {
            trim_sentences(&description, 3)
        };
        let listed = categories
            .iter()
            .find(|c| c.eq_ignore_ascii_case(category.trim()));
        match listed {
            Some(c) => {
                return Ok(CategoryChoice {
                    category: c.clone(),
                    description,
                    diagnostics,
                })
            }
            None if categories.len() == 1 => {
                diagnostics.push(Diagnostic::new(
                    "category_forced",
                    format!(
                        "{category:?} replaced by the only category {:?}",
                        categories[0]
                    ),
                ));
                return Ok(CategoryChoice {
                    category: categories[0].clone(),
                    description,
                    diagnostics,
                });
            }
            None if attempt == 0 => {
                diagnostics.push(Diagnostic::new(
                    "category_not_in_list",
                    format!("{category:?} is not a catalog category; retrying"),
                ));
                request.user_text = format!(
                    "{}\n\n{}",
                    request.user_text,
                    prompts::CATEGORY_RETRY_SUFFIX
                );
            }
            None => return Err(LabelError::CategoryNotInList(category)),
        }
    }
    unreachable!("loop returns on its second pass")
}

/// A problem found by [`lint`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintIssue {
    pub asset_id: String,
    pub kind: String,
    pub message: String,
}

/// Review pass over a catalog file: empty or overlong descriptions, missing
/// or banned categories, duplicate ids, names and descriptions.
pub fn lint(file: &CatalogFile) -> Vec<LintIssue> {
    let mut issues = Vec::new();
    let mut push = |r: &AssetRecord, kind: &str, message: String| {
        issues.push(LintIssue {
            asset_id: r.asset_id.clone(),
            kind: kind.to_string(),
            message,
        })
    };
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut names: BTreeMap<String, &str> = BTreeMap::new();
    let mut descriptions: BTreeMap<String, &str> = BTreeMap::new();
    for r in &file.records {
        if r.description.trim().is_empty() {
            push(r, "empty_description", "description is empty".to_string());
        } else if trim_sentences(&r.description, 3).len() < r.description.trim().len() {
            push(
                r,
                "long_description",
                "description has more than three sentences".to_string(),
            );
        }
        if r.category.trim().is_empty() {
            push(r, "empty_category", "category is empty".to_string());
        } else if is_banned_category(&r.category) {
            push(
                r,
                "banned_category",
                format!("category {:?} is not allowed", r.category),
            );
        }
        let seen = ids.entry(r.asset_id.as_str()).or_insert(0);
        *seen += 1;
        if *seen == 2 {
            push(
                r,
                "duplicate_asset_id",
                format!("asset_id {:?} appears more than once", r.asset_id),
            );
        }
        let key = r.name.trim().to_lowercase();
        if let Some(first) = names.get(&key) {
            push(
                r,
                "duplicate_name",
                format!("name {:?} already used by {first:?}", r.name),
            );
        } else {
            names.insert(key, r.asset_id.as_str());
        }
        let key = r.description.trim().to_lowercase();
        if key.is_empty() {
            continue;
        }
        if let Some(first) = descriptions.get(&key) {
            push(
                r,
                "duplicate_description",
                format!("description identical to {first:?}"),
            );
        } else {
            descriptions.insert(key, r.asset_id.as_str());
        }
    }
    issues
}
