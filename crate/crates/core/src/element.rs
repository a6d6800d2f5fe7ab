//! Typed document elements and the chunking configuration.
//!
//! Every pipeline stage consumes and produces [`Element`] values. The
//! canonical JSON interchange format for a partitioned document is
//! `{"schema_version":1,"elements":[...]}` with one flat object per element,
//! absent optionals omitted, and a fixed key order so output is diffable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SCHEMA_VERSION};
use crate::ingest::ImagePayload;
use crate::table::TableGrid;

/// Closed vocabulary of element kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Title,
    NarrativeText,
    ListItem,
    Table,
    Image,
    Header,
    Footer,
    PageBreak,
    UncategorizedText,
}

impl ElementKind {
    pub const ALL: [ElementKind; 9] = [
        ElementKind::Title,
        ElementKind::NarrativeText,
        ElementKind::ListItem,
        ElementKind::Table,
        ElementKind::Image,
        ElementKind::Header,
        ElementKind::Footer,
        ElementKind::PageBreak,
        ElementKind::UncategorizedText,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ElementKind::Title => "Title",
            ElementKind::NarrativeText => "NarrativeText",
            ElementKind::ListItem => "ListItem",
            ElementKind::Table => "Table",
            ElementKind::Image => "Image",
            ElementKind::Header => "Header",
            ElementKind::Footer => "Footer",
            ElementKind::PageBreak => "PageBreak",
            ElementKind::UncategorizedText => "UncategorizedText",
        }
    }

    /// True for the four kinds whose text participates in cleaning and
    /// section building.
    pub fn is_body_text(&self) -> bool {
        matches!(
            self,
            ElementKind::Title
                | ElementKind::NarrativeText
                | ElementKind::ListItem
                | ElementKind::UncategorizedText
        )
    }
}

/// Page-normalized bounding box, origin top-left, coordinates in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let coords = [self.x0, self.y0, self.x1, self.y1];
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(format!("bbox coordinates must lie in [0, 1]: {coords:?}"));
        }
        if self.x0 > self.x1 || self.y0 > self.y1 {
            return Err(format!(
                "bbox must satisfy x0 <= x1 and y0 <= y1: {coords:?}"
            ));
        }
        Ok(())
    }
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

/// Per-element metadata carried through every stage unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMetadata {
    pub page: u32,
    pub bbox: Option<BBox>,
    pub font_size: Option<f64>,
    pub element_id: String,
    /// Canonical HTML rendering; present exactly for Table elements.
    pub text_as_html: Option<String>,
}

impl ElementMetadata {
    pub fn new(page: u32, element_id: impl Into<String>) -> Self {
        ElementMetadata {
            page,
            bbox: None,
            font_size: None,
            element_id: element_id.into(),
            text_as_html: None,
        }
    }
}

/// A typed document unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub kind: ElementKind,
    pub text: String,
    pub metadata: ElementMetadata,
    /// Present iff kind is Table.
    pub table: Option<TableGrid>,
    /// Present iff kind is Image.
    pub image: Option<ImagePayload>,
}

impl Element {
    pub fn new(kind: ElementKind, text: impl Into<String>, metadata: ElementMetadata) -> Self {
        Element {
            kind,
            text: text.into(),
            metadata,
            table: None,
            image: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.metadata.element_id
    }

    pub fn page(&self) -> u32 {
        self.metadata.page
    }
}

/// Deterministic element ids: `e` followed by a zero-padded 6-digit ordinal
/// in document order.
pub fn element_id(ordinal: usize) -> String {
    format!("e{ordinal:06}")
}

/// Parameters of the chunk-by-title pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingConfig {
    /// Allow sections to span page breaks.
    pub multipage_sections: bool,
    /// Merge a chunk shorter than this with its successor; 0 disables merging.
    pub combine_text_under_n_chars: usize,
    /// Soft limit that closes a section early; absent means the hard limit.
    pub new_after_n_chars: Option<usize>,
    /// Hard upper bound on chunk text length, in characters.
    pub max_characters: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        ChunkingConfig {
            multipage_sections: true,
            combine_text_under_n_chars: 0,
            new_after_n_chars: None,
            max_characters: 4096,
        }
    }
}

impl ChunkingConfig {
    /// The soft section limit: `new_after_n_chars` when present, else
    /// `max_characters`.
    pub fn effective_soft_limit(&self) -> usize {
        self.new_after_n_chars.unwrap_or(self.max_characters)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_characters == 0 {
            return Err(Error::Config {
                message: "max_characters must be positive".into(),
            });
        }
        if self.combine_text_under_n_chars > self.max_characters {
            return Err(Error::Config {
                message: format!(
                    "combine_text_under_n_chars {} exceeds max_characters {}",
                    self.combine_text_under_n_chars, self.max_characters
                ),
            });
        }
        if let Some(soft) = self.new_after_n_chars {
            if soft > self.max_characters {
                return Err(Error::Config {
                    message: format!(
                        "new_after_n_chars {} exceeds max_characters {}",
                        soft, self.max_characters
                    ),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Canonical element JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ElementDto {
    id: String,
    kind: ElementKind,
    page: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    bbox: Option<BBox>,
    #[serde(skip_serializing_if = "Option::is_none")]
    font_size: Option<f64>,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    text_as_html: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<TableGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image: Option<ImagePayload>,
}

#[derive(Serialize, Deserialize)]
struct DocumentDto {
    schema_version: u64,
    elements: Vec<ElementDto>,
}

impl From<&Element> for ElementDto {
    fn from(el: &Element) -> Self {
        ElementDto {
            id: el.metadata.element_id.clone(),
            kind: el.kind,
            page: el.metadata.page,
            bbox: el.metadata.bbox,
            font_size: el.metadata.font_size,
            text: el.text.clone(),
            text_as_html: el.metadata.text_as_html.clone(),
            table: el.table.clone(),
            image: el.image.clone(),
        }
    }
}

impl From<ElementDto> for Element {
    fn from(dto: ElementDto) -> Self {
        Element {
            kind: dto.kind,
            text: dto.text,
            metadata: ElementMetadata {
                page: dto.page,
                bbox: dto.bbox,
                font_size: dto.font_size,
                element_id: dto.id,
                text_as_html: dto.text_as_html,
            },
            table: dto.table,
            image: dto.image,
        }
    }
}

/// Serialize elements to canonical JSON: compact, fixed key order, trailing
/// newline, UTF-8 with LF endings.
pub fn elements_to_json(elements: &[Element]) -> String {
    let doc = DocumentDto {
        schema_version: SCHEMA_VERSION,
        elements: elements.iter().map(ElementDto::from).collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("element serialization cannot fail");
    out.push('\n');
    out
}

/// Parse canonical element JSON, validating schema version and per-element
/// invariants.
pub fn elements_from_json(raw: &[u8]) -> Result<Vec<Element>> {
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
    let doc: DocumentDto = serde_json::from_slice(raw).map_err(|e| Error::from_json(&e, raw))?;
    let elements: Vec<Element> = doc.elements.into_iter().map(Element::from).collect();
    validate_elements(&elements)?;
    Ok(elements)
}

fn validate_elements(elements: &[Element]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for (index, el) in elements.iter().enumerate() {
        let fail = |message: String| Error::InvalidElement { index, message };
        if el.metadata.page == 0 {
            return Err(fail("page must be a positive integer".into()));
        }
        if !seen.insert(el.metadata.element_id.clone()) {
            return Err(fail(format!(
                "duplicate element_id {:?}",
                el.metadata.element_id
            )));
        }
        if let Some(bbox) = &el.metadata.bbox {
            bbox.validate().map_err(&fail)?;
        }
        if (el.kind == ElementKind::Table) != el.table.is_some() {
            return Err(fail("table payload present iff kind is Table".into()));
        }
        if (el.kind == ElementKind::Table) != el.metadata.text_as_html.is_some() {
            return Err(fail("text_as_html present iff kind is Table".into()));
        }
        if (el.kind == ElementKind::Image) != el.image.is_some() {
            return Err(fail("image payload present iff kind is Image".into()));
        }
        if let Some(grid) = &el.table {
            grid.validate()
                .map_err(|e| fail(e.to_string()))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_limit_defaults_to_max_characters() {
        let cfg = ChunkingConfig::default();
        assert_eq!(cfg.effective_soft_limit(), 4096);
    }

    #[test]
    fn soft_limit_passes_explicit_value_through() {
        let cfg = ChunkingConfig {
            new_after_n_chars: Some(500),
            ..ChunkingConfig::default()
        };
        assert_eq!(cfg.effective_soft_limit(), 500);
    }

    #[test]
    fn soft_limit_boundary_equality() {
        let cfg = ChunkingConfig {
            new_after_n_chars: Some(4096),
            ..ChunkingConfig::default()
        };
        assert_eq!(cfg.effective_soft_limit(), 4096);
        cfg.validate().unwrap();
    }

    #[test]
    fn chunking_config_rejects_soft_above_max() {
        let cfg = ChunkingConfig {
            new_after_n_chars: Some(5000),
            ..ChunkingConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kind_round_trips_through_name() {
        for kind in ElementKind::ALL {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
            let back: ElementKind = serde_json::from_str(&json).unwrap();
            assert_eq!(back, kind);
        }
    }

    #[test]
    fn element_json_round_trips_byte_identically() {
        let mut meta = ElementMetadata::new(2, element_id(7));
        meta.bbox = Some(BBox::new(0.1, 0.2, 0.9, 0.3));
        meta.font_size = Some(12.0);
        let el = Element::new(ElementKind::Title, "Overview", meta);
        let json = elements_to_json(&[el]);
        let parsed = elements_from_json(json.as_bytes()).unwrap();
        assert_eq!(elements_to_json(&parsed), json);
    }

    #[test]
    fn element_json_rejects_unknown_version() {
        let raw = br#"{"schema_version":2,"elements":[]}"#;
        match elements_from_json(raw) {
            Err(Error::UnsupportedVersion { found: 2 }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let a = Element::new(
            ElementKind::NarrativeText,
            "x",
            ElementMetadata::new(1, "e000000"),
        );
        let json = elements_to_json(&[a.clone(), a]);
        let err = elements_from_json(json.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "unexpected error: {err}");
        assert!(err.contains("index 1"), "unexpected error: {err}");
    }
}
