//! Labeled asset catalog and description-similarity retrieval.

mod embed;
mod label;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::scene::Vector3;

pub use embed::{cosine, EmbedError, Embedder, HashNgramEmbedder, HASH_NGRAM_DIM, HASH_NGRAM_ID};
pub use label::{
    annotate_asset, choose_category_and_description, lint, trim_sentences, CategoryChoice, Label,
    LabelError, LintIssue,
};

/// Categories the labeler must never produce (compared case-insensitively).
pub const BANNED_CATEGORIES: [&str; 2] = ["3D model", "3D shape"];

pub fn is_banned_category(category: &str) -> bool {
    let c = category.trim();
    BANNED_CATEGORIES.iter().any(|b| b.eq_ignore_ascii_case(c))
}

const NORM_TOLERANCE: f64 = 1e-6;

fn default_scale() -> Vector3 {
    Vector3::ONE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetRecord {
    pub asset_id: String,
    pub name: String,
    pub description: String,
    pub category: String,
    /// Unit vector from the catalog's embedder; absent until embedded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail_ref: Option<String>,
    #[serde(default = "default_scale")]
    pub default_scale: Vector3,
}

impl AssetRecord {
    pub fn new(
        asset_id: impl Into<String>,
        name: impl Into<String>,
        category: impl Into<String>,
        description: impl Into<String>,
    ) -> Self {
        Self {
            asset_id: asset_id.into(),
            name: name.into(),
            description: description.into(),
            category: category.into(),
            embedding: None,
            thumbnail_ref: None,
            default_scale: Vector3::ONE,
        }
    }
}

/// On-disk catalog shape; also what `lint` inspects before validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedder_id: Option<String>,
    pub records: Vec<AssetRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("no asset with id {0:?}")]
    UnknownAsset(String),
    #[error(
        "catalog embeddings come from {catalog:?} but the configured embedder is {configured:?}"
    )]
    EmbedderMismatch { catalog: String, configured: String },
    #[error("catalog schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

impl CatalogError {
    pub fn kind(&self) -> &'static str {
        match self {
            CatalogError::EmptyCatalog => "empty_catalog",
            CatalogError::UnknownCategory(_) => "unknown_category",
            CatalogError::UnknownAsset(_) => "unknown_asset",
            CatalogError::EmbedderMismatch { .. } => "embedder_mismatch",
            CatalogError::Schema(_) => "schema_error",
            CatalogError::Embed(_) => "embed_error",
        }
    }
}

/// One ranked search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub asset_id: String,
    pub score: f64,
}

/// Validated, indexed catalog. Immutable apart from [`Catalog::embed_missing`].
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    records: Vec<AssetRecord>,
    category_index: BTreeMap<String, Vec<usize>>,
    embedder_id: Option<String>,
}

impl Catalog {
    pub fn new(
        records: Vec<AssetRecord>,
        embedder_id: Option<String>,
    ) -> Result<Self, CatalogError> {
        let mut ids = BTreeSet::new();
        let mut dim = None;
        for r in &records {
            if !ids.insert(r.asset_id.as_str()) {
                return Err(CatalogError::Schema(format!(
                    "duplicate asset_id {:?}",
                    r.asset_id
                )));
            }
            if r.asset_id.trim().is_empty() {
                return Err(CatalogError::Schema("empty asset_id".to_string()));
            }
            if r.category.trim().is_empty() || is_banned_category(&r.category) {
                return Err(CatalogError::Schema(format!(
                    "asset {:?} has invalid category {:?}",
                    r.asset_id, r.category
                )));
            }
            if !r.default_scale.is_finite()
                || [r.default_scale.x, r.default_scale.y, r.default_scale.z]
                    .iter()
                    .any(|&c| c < crate::scene::MIN_EXTENT)
            {
                return Err(CatalogError::Schema(format!(
                    "asset {:?} has invalid default_scale",
                    r.asset_id
                )));
            }
            if let Some(e) = &r.embedding {
                if *dim.get_or_insert(e.len()) != e.len() {
                    return Err(CatalogError::Schema(format!(
                        "asset {:?} embedding has dimension {}",
                        r.asset_id,
                        e.len()
                    )));
                }
                let norm = libm::sqrt(e.iter().map(|x| x * x).sum::<f64>());
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    return Err(CatalogError::Schema(format!(
                        "asset {:?} embedding is not unit length",
                        r.asset_id
                    )));
                }
            }
        }
        if dim.is_some() && embedder_id.is_none() {
            return Err(CatalogError::Schema(
                "stored embeddings require an embedder_id".to_string(),
            ));
        }
        let mut category_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            category_index
                .entry(r.category.clone())
                .or_default()
                .push(i);
        }
        Ok(Self {
            records,
            category_index,
            embedder_id,
        })
    }

    pub fn from_file(file: CatalogFile) -> Result<Self, CatalogError> {
        Self::new(file.records, file.embedder_id)
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| CatalogError::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn to_file(&self) -> CatalogFile {
        CatalogFile {
            embedder_id: self.embedder_id.clone(),
            records: self.records.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("catalog serializes")
    }

    pub fn records(&self) -> &[AssetRecord] {
        &self.records
    }

    pub fn embedder_id(&self) -> Option<&str> {
        self.embedder_id.as_deref()
    }

    pub fn get(&self, asset_id: &str) -> Option<&AssetRecord> {
        self.records.iter().find(|r| r.asset_id == asset_id)
    }

    /// Case-insensitive lookup by asset id, then by record name.
    pub fn find(&self, key: &str) -> Option<&AssetRecord> {
        self.get(key).or_else(|| {
            self.records
                .iter()
                .find(|r| r.name.eq_ignore_ascii_case(key) || r.asset_id.eq_ignore_ascii_case(key))
        })
    }

    /// Categories in sorted order.
    pub fn categories(&self) -> Vec<String> {
        self.category_index.keys().cloned().collect()
    }

    pub fn category_members(&self, category: &str) -> Option<impl Iterator<Item = &AssetRecord>> {
        self.category_index
            .get(category)
            .map(|idx| idx.iter().map(|&i| &self.records[i]))
    }

    fn check_embedder(&self, embedder: &dyn Embedder) -> Result<(), CatalogError> {
        match &self.embedder_id {
            Some(id) if id != embedder.id() => Err(CatalogError::EmbedderMismatch {
                catalog: id.clone(),
                configured: embedder.id().to_string(),
            }),
            _ => Ok(()),
        }
    }

    /// Stores embeddings for every record lacking one.
    pub fn embed_missing(&mut self, embedder: &dyn Embedder) -> Result<usize, CatalogError> {
        self.check_embedder(embedder)?;
        let mut added = 0;
        for r in &mut self.records {
            if r.embedding.is_none() {
                r.embedding = Some(embedder.embed(&r.description)?);
                added += 1;
            }
        }
        self.embedder_id = Some(embedder.id().to_string());
        Ok(added)
    }

    /// Ranks the candidates (one category, or all records) by cosine between
    /// `description` and each record's description embedding, best first.
    /// Scores are compared at 1e-9 and ties go by ascending asset id. Records
    /// without a stored embedding are embedded on the fly.
    pub fn search(
        &self,
        embedder: &dyn Embedder,
        category: Option<&str>,
        description: &str,
    ) -> Result<Vec<SearchHit>, CatalogError> {
        if self.records.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        self.check_embedder(embedder)?;
        let candidates: Vec<&AssetRecord> = match category {
            Some(c) => self
                .category_members(c)
                .ok_or_else(|| CatalogError::UnknownCategory(c.to_string()))?
                .collect(),
            None => self.records.iter().collect(),
        };
        let query = embedder.embed(description)?;
        let mut hits = Vec::with_capacity(candidates.len());
        for r in candidates {
            let score = match &r.embedding {
                Some(e) => cosine(&query, e),
                None => cosine(&query, &embedder.embed(&r.description)?),
            };
            hits.push(SearchHit {
                asset_id: r.asset_id.clone(),
                score,
            });
        }
        // Scores equal up to rounding noise count as ties.
        let key = |s: f64| libm::round(s * 1e9) as i64;
        hits.sort_by(|a, b| {
            key(b.score)
                .cmp(&key(a.score))
                .then_with(|| a.asset_id.cmp(&b.asset_id))
        });
        Ok(hits)
    }
}
