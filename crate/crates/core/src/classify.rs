//! Rule-based block classification and header/footer filtering.
//!
//! Replaces a learned layout model with geometry and typography heuristics:
//! running headers and footers are found by repetition of digit-masked text
//! inside narrow page bands, titles by shape (short, mostly alphabetic, no
//! terminal punctuation) and font size relative to the document body font.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::element::{element_id, Element, ElementKind, ElementMetadata};
use crate::error::{Error, Result};
use crate::ingest::LayoutBlock;

/// Bullet glyphs that mark a block as a list item. Narrower than the
/// cleaning glyph set on purpose.
const LIST_GLYPHS: [char; 7] = ['•', '●', '◦', '▪', '–', '-', '*'];

/// Thresholds steering header/footer detection and title classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierThresholds {
    /// Fraction of the page height treated as the header band.
    pub header_band: f64,
    /// Fraction of the page height treated as the footer band.
    pub footer_band: f64,
    pub title_max_words: usize,
    pub title_min_alpha_ratio: f64,
    /// A title's font must be at least this multiple of the body font.
    pub title_font_ratio: f64,
    /// Band text must repeat on at least this many other pages.
    pub repeat_min_pages: usize,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds {
            header_band: 0.08,
            footer_band: 0.08,
            title_max_words: 20,
            title_min_alpha_ratio: 0.5,
            title_font_ratio: 1.1,
            repeat_min_pages: 2,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("header_band", self.header_band), ("footer_band", self.footer_band)] {
            if !(0.0 < v && v < 0.5) {
                return Err(Error::Config {
                    message: format!("{name} must lie in (0, 0.5), got {v}"),
                });
            }
        }
        if self.header_band + self.footer_band >= 1.0 {
            return Err(Error::Config {
                message: "header_band + footer_band must be below 1".into(),
            });
        }
        if self.title_max_words == 0 || self.repeat_min_pages == 0 {
            return Err(Error::Config {
                message: "title_max_words and repeat_min_pages must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Band classification for a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandMark {
    Header,
    Footer,
    Body,
}

static PAGE_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:page\s+)?\d+(?:\s+of\s+\d+)?\s*$").unwrap());

/// Replace every run of decimal digits with `#`, so page numbers embedded in
/// running headers do not defeat repetition matching.
fn mask_digits(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_digits = false;
    for ch in text.trim().chars() {
        if ch.is_ascii_digit() {
            if !in_digits {
                out.push('#');
                in_digits = true;
            }
        } else {
            out.push(ch);
            in_digits = false;
        }
    }
    out
}

#[derive(PartialEq, Eq, Hash, Clone, Copy)]
enum Band {
    Top,
    Bottom,
}

/// Mark each block as header, footer, or body. A text block is a header iff
/// its bbox lies entirely in the top band and either its digit-masked text
/// recurs in that band on enough other pages or it matches a page-number
/// pattern; footers mirror this in the bottom band. Blocks without a bbox
/// are never marked.
pub fn detect_headers_footers(
    blocks: &[LayoutBlock],
    thresholds: &ClassifierThresholds,
) -> Vec<BandMark> {
    let band_of = |block: &LayoutBlock| -> Option<Band> {
        if !block.is_text() {
            return None;
        }
        let bbox = block.bbox.as_ref()?;
        if bbox.y1 <= thresholds.header_band {
            Some(Band::Top)
        } else if bbox.y0 >= 1.0 - thresholds.footer_band {
            Some(Band::Bottom)
        } else {
            None
        }
    };

    // Pages on which each (band, masked text) pair occurs.
    let mut occurrences: HashMap<(Band, String), Vec<u32>> = HashMap::new();
    for block in blocks {
        if let (Some(band), Some(text)) = (band_of(block), block.text.as_deref()) {
            let pages = occurrences.entry((band, mask_digits(text))).or_default();
            if !pages.contains(&block.page) {
                pages.push(block.page);
            }
        }
    }

    blocks
        .iter()
        .map(|block| {
            let Some(band) = band_of(block) else {
                return BandMark::Body;
            };
            let text = block.text.as_deref().unwrap_or_default();
            let repeated = occurrences
                .get(&(band, mask_digits(text)))
                .map(|pages| pages.iter().filter(|p| **p != block.page).count())
                .unwrap_or(0)
                >= thresholds.repeat_min_pages;
            if repeated || PAGE_NUMBER.is_match(text) {
                match band {
                    Band::Top => BandMark::Header,
                    Band::Bottom => BandMark::Footer,
                }
            } else {
                BandMark::Body
            }
        })
        .collect()
}

/// Median font size across text blocks, when any carries one.
pub fn median_font_size(blocks: &[LayoutBlock]) -> Option<f64> {
    let mut sizes: Vec<f64> = blocks
        .iter()
        .filter(|b| b.is_text())
        .filter_map(|b| b.font_size)
        .collect();
    if sizes.is_empty() {
        return None;
    }
    sizes.sort_by(|a, b| a.partial_cmp(b).expect("validated font sizes"));
    let mid = sizes.len() / 2;
    Some(if sizes.len() % 2 == 1 {
        sizes[mid]
    } else {
        (sizes[mid - 1] + sizes[mid]) / 2.0
    })
}

fn starts_with_list_marker(text: &str) -> bool {
    static ENUMERATOR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+\. ").unwrap());
    let trimmed = text.trim_start();
    trimmed
        .chars()
        .next()
        .is_some_and(|c| LIST_GLYPHS.contains(&c))
        || ENUMERATOR.is_match(trimmed)
}

fn alpha_ratio(text: &str) -> f64 {
    let mut alpha = 0usize;
    let mut total = 0usize;
    for ch in text.chars() {
        if ch.is_whitespace() {
            continue;
        }
        total += 1;
        if ch.is_alphabetic() {
            alpha += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        alpha as f64 / total as f64
    }
}

const SENTENCE_PUNCT: [char; 6] = ['.', ',', ';', ':', '!', '?'];

fn ends_with_sentence_punct(text: &str) -> bool {
    text.trim_end()
        .chars()
        .last()
        .is_some_and(|c| SENTENCE_PUNCT.contains(&c))
}

/// Classify one body block into an element. Precedence: table, image, list
/// marker, title shape, prose, uncategorized. `body_font` is the document's
/// median text font size when typography is available.
///
/// The only error path is a table grid that slipped past ingestion
/// validation.
pub fn classify(
    block: &LayoutBlock,
    body_font: Option<f64>,
    thresholds: &ClassifierThresholds,
) -> Result<Element> {
    let mut metadata = ElementMetadata::new(block.page, "");
    metadata.bbox = block.bbox;
    metadata.font_size = block.font_size;

    if let Some(grid) = &block.table {
        metadata.text_as_html = Some(grid.to_html()?);
        let mut el = Element::new(ElementKind::Table, grid.to_raw_text()?, metadata);
        el.table = Some(grid.clone());
        return Ok(el);
    }
    if let Some(image) = &block.image {
        let mut el = Element::new(ElementKind::Image, "", metadata);
        el.image = Some(image.clone());
        return Ok(el);
    }

    let text = block.text.as_deref().unwrap_or_default();
    if starts_with_list_marker(text) {
        return Ok(Element::new(ElementKind::ListItem, text, metadata));
    }

    let word_count = text.split_whitespace().count();
    let title_shaped = !text.trim().is_empty()
        && word_count <= thresholds.title_max_words
        && alpha_ratio(text) >= thresholds.title_min_alpha_ratio
        && !ends_with_sentence_punct(text);
    // The font clause applies only when typography is available, so
    // plaintext documents still yield titles.
    let font_allows = match (block.font_size, body_font) {
        (Some(size), Some(body)) => size >= thresholds.title_font_ratio * body,
        _ => true,
    };

    let kind = if title_shaped && font_allows {
        ElementKind::Title
    } else if ends_with_sentence_punct(text)
        || word_count > thresholds.title_max_words
        || (title_shaped && !font_allows)
    {
        // A line that is title-shaped but set at body size reads as prose.
        ElementKind::NarrativeText
    } else {
        ElementKind::UncategorizedText
    };
    Ok(Element::new(kind, text, metadata))
}

/// Full partitioning pass: order blocks, mark and optionally drop headers
/// and footers, classify the rest, assign document-order element ids, and
/// synthesize a PageBreak element at every page transition.
pub fn partition_blocks(
    blocks: Vec<LayoutBlock>,
    thresholds: &ClassifierThresholds,
    keep_headers: bool,
) -> Result<Vec<Element>> {
    let ordered = reading_ordered(blocks);
    let marks = detect_headers_footers(&ordered, thresholds);
    let body_font = median_font_size(&ordered);

    let mut elements = Vec::new();
    let mut ordinal = 0usize;
    let mut prev_page: Option<u32> = None;
    for (block, mark) in ordered.iter().zip(marks.iter()) {
        if let Some(prev) = prev_page {
            if block.page > prev {
                let mut meta = ElementMetadata::new(prev, element_id(ordinal));
                ordinal += 1;
                meta.bbox = None;
                elements.push(Element::new(ElementKind::PageBreak, "", meta));
            }
        }
        prev_page = Some(block.page);

        let mut element = match mark {
            BandMark::Header | BandMark::Footer => {
                let kind = if *mark == BandMark::Header {
                    ElementKind::Header
                } else {
                    ElementKind::Footer
                };
                let mut meta = ElementMetadata::new(block.page, "");
                meta.bbox = block.bbox;
                meta.font_size = block.font_size;
                Element::new(kind, block.text.clone().unwrap_or_default(), meta)
            }
            BandMark::Body => classify(block, body_font, thresholds)?,
        };
        element.metadata.element_id = element_id(ordinal);
        ordinal += 1;
        elements.push(element);
    }

    if !keep_headers {
        elements.retain(|el| !matches!(el.kind, ElementKind::Header | ElementKind::Footer));
    }
    Ok(elements)
}

fn reading_ordered(blocks: Vec<LayoutBlock>) -> Vec<LayoutBlock> {
    crate::ingest::reading_order(blocks)
}
