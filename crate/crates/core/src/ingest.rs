//! Document ingestion: layout-block JSON, plaintext, and reading order.
//!
//! A [`LayoutBlock`] is the raw unit handed to us by whatever layout
//! detector produced the document; this module validates blocks and
//! linearizes them into the order a human would read.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::element::BBox;
use crate::error::{Error, Result, SCHEMA_VERSION};
use crate::table::TableGrid;

/// Gap between sorted x0 values (in page widths) that starts a new column.
/// Chosen so two-column layouts split while paragraph indents do not.
pub const COLUMN_GAP: f64 = 0.15;

/// Image bytes plus any text already extracted from the image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImagePayload {
    pub media_type: String,
    #[serde(rename = "data_base64", with = "base64_bytes")]
    pub data: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_text: Option<String>,
}

mod base64_bytes {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(data: &[u8], ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&BASE64.encode(data))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Vec<u8>, D::Error> {
        let raw = String::deserialize(de)?;
        BASE64
            .decode(raw.as_bytes())
            .map_err(|e| serde::de::Error::custom(format!("invalid base64 image data: {e}")))
    }
}

/// Optional hint from the upstream detector about a block's payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindHint {
    Text,
    Table,
    Image,
}

/// One raw layout unit: geometry, typography, and exactly the payloads it
/// carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutBlock {
    pub page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind_hint: Option<KindHint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImagePayload>,
}

impl LayoutBlock {
    pub fn text(page: u32, text: impl Into<String>) -> Self {
        LayoutBlock {
            page,
            bbox: None,
            font_size: None,
            kind_hint: None,
            text: Some(text.into()),
            table: None,
            image: None,
        }
    }

    pub fn is_text(&self) -> bool {
        self.table.is_none() && self.image.is_none() && self.text.is_some()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.page == 0 {
            return Err("page must be a positive integer".into());
        }
        if self.text.is_none() && self.table.is_none() && self.image.is_none() {
            return Err("block carries neither text nor table nor image".into());
        }
        if self.table.is_some() && !matches!(self.kind_hint, None | Some(KindHint::Table)) {
            return Err("table payload conflicts with kind_hint".into());
        }
        if self.image.is_some() && !matches!(self.kind_hint, None | Some(KindHint::Image)) {
            return Err("image payload conflicts with kind_hint".into());
        }
        if let Some(bbox) = &self.bbox {
            bbox.validate()?;
        }
        if let Some(size) = self.font_size {
            if !(size > 0.0) {
                return Err(format!("font_size must be positive, got {size}"));
            }
        }
        if let Some(image) = &self.image {
            if image.data.is_empty() {
                return Err("image data must be non-empty".into());
            }
        }
        if let Some(grid) = &self.table {
            grid.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct BlockDocumentDto {
    schema_version: u64,
    #[serde(default)]
    #[allow(dead_code)]
    source: Option<String>,
    blocks: Vec<LayoutBlock>,
}

/// Parse and validate a layout-block JSON document. Blocks come back in
/// file order.
pub fn ingest_blocks(raw: &[u8]) -> Result<Vec<LayoutBlock>> {
    #[derive(Deserialize)]
    struct VersionProbe {
        schema_version: u64,
    }

    let probe: VersionProbe =
        serde_json::from_slice(raw).map_err(|e| Error::from_json(&e, raw))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(Error::UnsupportedVersion {
            found: probe.schema_version,
        });
    }
    let doc: BlockDocumentDto =
        serde_json::from_slice(raw).map_err(|e| Error::from_json(&e, raw))?;
    for (index, block) in doc.blocks.iter().enumerate() {
        block
            .validate()
            .map_err(|message| Error::InvalidBlock { index, message })?;
    }
    Ok(doc.blocks)
}

/// Split plaintext into text blocks on blank lines. Form feeds advance the
/// page counter; blocks carry no geometry or typography.
pub fn ingest_plaintext(raw: &[u8]) -> Result<Vec<LayoutBlock>> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Encoding {
        message: e.to_string(),
    })?;
    let mut blocks = Vec::new();
    for (i, page_text) in text.split('\u{000C}').enumerate() {
        let page = (i + 1) as u32;
        for segment in split_blank_lines(page_text) {
            if !segment.trim().is_empty() {
                blocks.push(LayoutBlock::text(page, segment));
            }
        }
    }
    Ok(blocks)
}

fn split_blank_lines(text: &str) -> Vec<&str> {
    use std::sync::LazyLock;
    static BLANK_LINES: LazyLock<regex::Regex> =
        LazyLock::new(|| regex::Regex::new(r"\n[ \t]*(?:\n[ \t]*)+").unwrap());
    BLANK_LINES.split(text).collect()
}

/// Linearize blocks into reading order: page ascending, then column left to
/// right, then top to bottom, then x0. Columns are found per page by
/// clustering x0 values; a gap of at least [`COLUMN_GAP`] between sorted x0
/// values starts a new column. Blocks without a bbox sort after positioned
/// blocks on their page, keeping their input order.
pub fn reading_order(blocks: Vec<LayoutBlock>) -> Vec<LayoutBlock> {
    #[derive(PartialEq, PartialOrd)]
    struct SortKey {
        page: u32,
        column: usize,
        y0: f64,
        x0: f64,
    }

    let mut pages: Vec<u32> = blocks.iter().map(|b| b.page).collect();
    pages.sort_unstable();
    pages.dedup();

    // Column band start positions per page, from positioned blocks only.
    let mut bands: std::collections::HashMap<u32, Vec<f64>> = std::collections::HashMap::new();
    for page in pages {
        let mut xs: Vec<f64> = blocks
            .iter()
            .filter(|b| b.page == page)
            .filter_map(|b| b.bbox.as_ref().map(|bb| bb.x0))
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("validated coordinates"));
        xs.dedup();
        let mut starts = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            if i == 0 || x - xs[i - 1] >= COLUMN_GAP {
                starts.push(*x);
            }
        }
        bands.insert(page, starts);
    }

    let column_of = |block: &LayoutBlock| -> usize {
        let Some(bbox) = &block.bbox else {
            return usize::MAX;
        };
        let starts = &bands[&block.page];
        starts
            .iter()
            .rposition(|s| *s <= bbox.x0)
            .unwrap_or(0)
    };

    let mut indexed: Vec<(SortKey, LayoutBlock)> = blocks
        .into_iter()
        .map(|b| {
            let key = SortKey {
                page: b.page,
                column: column_of(&b),
                y0: b.bbox.as_ref().map_or(0.0, |bb| bb.y0),
                x0: b.bbox.as_ref().map_or(0.0, |bb| bb.x0),
            };
            (key, b)
        })
        .collect();
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("validated coordinates"));
    indexed.into_iter().map(|(_, b)| b).collect()
}
