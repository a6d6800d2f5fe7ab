//! Text cleaning applied to body-text elements before chunking.
//!
//! Four operations run in a fixed order: paragraph grouping (with optional
//! de-hyphenation), bullet excision, leading-dash excision, and whitespace
//! normalization. Every operation is idempotent, and so is the composition
//! under any combination of policy flags; the test suite relies on that.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::element::Element;

/// Bullet glyphs excised at paragraph starts.
const BULLET_GLYPHS: &str = "•●◦▪·*–—-";
/// Dash glyphs handled by the independent leading-dash flag.
const DASH_GLYPHS: &str = "–—-";

/// Flags selecting which cleaning operations run. All flags false is the
/// identity transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningPolicy {
    pub group_broken_paragraphs: bool,
    pub clean_bullets: bool,
    pub clean_leading_dashes: bool,
    pub clean_extra_whitespace: bool,
    pub dehyphenate_linebreaks: bool,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        CleaningPolicy {
            group_broken_paragraphs: true,
            clean_bullets: true,
            clean_leading_dashes: true,
            clean_extra_whitespace: true,
            dehyphenate_linebreaks: true,
        }
    }
}

impl CleaningPolicy {
    pub fn none() -> Self {
        CleaningPolicy {
            group_broken_paragraphs: false,
            clean_bullets: false,
            clean_leading_dashes: false,
            clean_extra_whitespace: false,
            dehyphenate_linebreaks: false,
        }
    }
}

static PARAGRAPH_BREAK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\n[ \t]*(?:\n[ \t]*)+").unwrap());
static DEHYPHENATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(\p{L})-\n(\p{Ll})").unwrap());
static SPACE_RUNS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[ \t]+").unwrap());
static SPACE_AT_NEWLINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[ \t]*\n[ \t]*").unwrap());
static LEADING_BULLETS: LazyLock<Regex> = LazyLock::new(|| leading_glyph_pattern(BULLET_GLYPHS));
static LEADING_DASHES: LazyLock<Regex> = LazyLock::new(|| leading_glyph_pattern(DASH_GLYPHS));

/// Matches a run of glyphs (with interleaved spaces/tabs) anchored at the
/// start of the text or right after a blank-line paragraph break. The first
/// capture group is the anchor to keep; the glyph run after it is dropped.
fn leading_glyph_pattern(glyphs: &str) -> Regex {
    let class: String = glyphs.chars().map(|c| regex::escape(&c.to_string())).collect();
    Regex::new(&format!(
        r"(\A\s*|\n[ \t]*\n)((?:[ \t]*[{class}])+[ \t]*)"
    ))
    .unwrap()
}

/// Consolidate paragraphs: runs of two or more newlines (possibly with
/// interleaved spaces/tabs) become exactly `\n\n`, remaining single newlines
/// become one space, and with `dehyphenate` a word broken as `-\n` before a
/// lowercase letter is rejoined without the hyphen.
pub fn group_broken_paragraphs(text: &str, dehyphenate: bool) -> String {
    let text = PARAGRAPH_BREAK.replace_all(text, "\n\n");
    let text = if dehyphenate {
        DEHYPHENATE.replace_all(&text, "$1$2")
    } else {
        text
    };
    // Remaining newline runs are either exactly "\n\n" (kept) or single
    // newlines (soft wraps, turned into spaces).
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' {
            if chars.peek() == Some(&'\n') {
                chars.next();
                out.push_str("\n\n");
            } else {
                out.push(' ');
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Remove bullet glyphs (and surrounding spaces/tabs) at the start of the
/// text and at the start of each paragraph. Interior glyphs are untouched.
pub fn clean_bullets(text: &str) -> String {
    LEADING_BULLETS.replace_all(text, "$1").into_owned()
}

/// Remove leading dash runs with trailing whitespace; subsumed by
/// [`clean_bullets`] but kept behind its own policy flag.
pub fn clean_leading_dashes(text: &str) -> String {
    LEADING_DASHES.replace_all(text, "$1").into_owned()
}

/// Collapse space/tab runs to one space, drop spaces adjacent to newlines,
/// and trim the whole string. `\n\n` paragraph breaks survive.
pub fn clean_extra_whitespace(text: &str) -> String {
    let text = SPACE_RUNS.replace_all(text, " ");
    let text = SPACE_AT_NEWLINE.replace_all(&text, "\n");
    text.trim().to_string()
}

/// Apply the enabled operations in their fixed order.
pub fn clean_text(text: &str, policy: &CleaningPolicy) -> String {
    let mut text = text.to_string();
    if policy.group_broken_paragraphs {
        text = group_broken_paragraphs(&text, policy.dehyphenate_linebreaks);
    }
    if policy.clean_bullets {
        text = clean_bullets(&text);
    }
    if policy.clean_leading_dashes {
        text = clean_leading_dashes(&text);
    }
    if policy.clean_extra_whitespace {
        text = clean_extra_whitespace(&text);
    }
    text
}

/// Clean a body-text element; Table, Image, PageBreak, Header, and Footer
/// elements pass through untouched. Kind and metadata never change.
pub fn clean_element(el: &Element, policy: &CleaningPolicy) -> Element {
    if !el.kind.is_body_text() {
        return el.clone();
    }
    let mut cleaned = el.clone();
    cleaned.text = clean_text(&el.text, policy);
    cleaned
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{ElementKind, ElementMetadata};
    use proptest::prelude::*;

    #[test]
    fn single_newline_is_soft_wrap() {
        assert_eq!(
            group_broken_paragraphs("line one\nline two", true),
            "line one line two"
        );
    }

    #[test]
    fn paragraph_break_preserved() {
        assert_eq!(
            group_broken_paragraphs("para one\n\npara two", true),
            "para one\n\npara two"
        );
    }

    #[test]
    fn dehyphenation_joins_lowercase_continuation() {
        // Applying the rule by hand: 'n' is a letter, 'a' is lowercase, so
        // the hyphen and break vanish.
        assert_eq!(
            group_broken_paragraphs("sustain-\nability report", true),
            "sustainability report"
        );
    }

    #[test]
    fn dehyphenation_skips_uppercase_continuation() {
        assert_eq!(
            group_broken_paragraphs("Wal-\nMart stores", true),
            "Wal- Mart stores"
        );
    }

    #[test]
    fn dehyphenation_disabled_keeps_hyphen() {
        assert_eq!(
            group_broken_paragraphs("sustain-\nability", false),
            "sustain- ability"
        );
    }

    #[test]
    fn bullet_removed_at_start() {
        assert_eq!(
            clean_bullets("● Implement globally unified initiatives…"),
            "Implement globally unified initiatives…"
        );
    }

    #[test]
    fn no_bullet_is_identity() {
        assert_eq!(clean_bullets("no bullet here"), "no bullet here");
    }

    #[test]
    fn interior_dash_retained() {
        assert_eq!(
            clean_bullets("– Toyota ESD Project – Environmental education"),
            "Toyota ESD Project – Environmental education"
        );
    }

    #[test]
    fn bullets_removed_at_paragraph_starts() {
        assert_eq!(clean_bullets("• one\n\n• two"), "one\n\ntwo");
    }

    #[test]
    fn whitespace_runs_collapse() {
        assert_eq!(clean_extra_whitespace("a   b\t c"), "a b c");
    }

    #[test]
    fn whitespace_trimmed() {
        assert_eq!(clean_extra_whitespace("  x  "), "x");
    }

    #[test]
    fn spaces_adjacent_to_newlines_removed() {
        // By the stated rules: adjacency removal first leaves "a\n\nb", and
        // trimming changes nothing.
        assert_eq!(clean_extra_whitespace("a \n\n b"), "a\n\nb");
    }

    #[test]
    fn walmart_bullet_item_keeps_superscript() {
        let policy = CleaningPolicy::default();
        assert_eq!(
            clean_text(
                "• Assessed ~13,100 third-party responsible sourcing facility audit reports³³",
                &policy
            ),
            "Assessed ~13,100 third-party responsible sourcing facility audit reports³³"
        );
    }

    #[test]
    fn all_false_policy_is_identity() {
        let el = Element::new(
            ElementKind::NarrativeText,
            "  • raw \n text ",
            ElementMetadata::new(1, "e000000"),
        );
        assert_eq!(clean_element(&el, &CleaningPolicy::none()), el);
    }

    #[test]
    fn table_elements_pass_through() {
        let mut el = Element::new(
            ElementKind::Table,
            "• raw   table",
            ElementMetadata::new(1, "e000001"),
        );
        el.metadata.text_as_html = Some("<table border=\"1\"></table>".into());
        el.table = Some(crate::table::TableGrid {
            n_rows: 1,
            n_cols: 1,
            header_rows: 0,
            cells: vec![crate::table::Cell::new(0, 0, "x")],
        });
        assert_eq!(clean_element(&el, &CleaningPolicy::default()), el);
    }

    #[test]
    fn kind_and_id_survive_cleaning() {
        let el = Element::new(
            ElementKind::ListItem,
            "• item",
            ElementMetadata::new(3, "e000009"),
        );
        let cleaned = clean_element(&el, &CleaningPolicy::default());
        assert_eq!(cleaned.kind, ElementKind::ListItem);
        assert_eq!(cleaned.metadata, el.metadata);
        assert_eq!(cleaned.text, "item");
    }

    fn arb_policy() -> impl Strategy<Value = CleaningPolicy> {
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()).prop_map(
            |(g, b, d, w, h)| CleaningPolicy {
                group_broken_paragraphs: g,
                clean_bullets: b,
                clean_leading_dashes: d,
                clean_extra_whitespace: w,
                dehyphenate_linebreaks: h,
            },
        )
    }

    fn arb_messy_text() -> impl Strategy<Value = String> {
        // Biased toward the characters cleaning cares about.
        let piece = prop_oneof![
            Just(" ".to_string()),
            Just("\t".to_string()),
            Just("\n".to_string()),
            Just("\n\n".to_string()),
            Just("•".to_string()),
            Just("●".to_string()),
            Just("-".to_string()),
            Just("–".to_string()),
            Just("*".to_string()),
            Just("-\n".to_string()),
            "[a-zA-Z0-9]{1,8}",
            Just("word".to_string()),
        ];
        prop::collection::vec(piece, 0..24).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(text in arb_messy_text(), policy in arb_policy()) {
            let once = clean_text(&text, &policy);
            let twice = clean_text(&once, &policy);
            prop_assert_eq!(&once, &twice);
        }

        #[test]
        fn cleaning_preserves_plain_characters(text in arb_messy_text()) {
            // Characters that are neither whitespace nor excisable glyphs
            // survive in order.
            let keep = |s: &str| -> Vec<char> {
                s.chars()
                    .filter(|c| !c.is_whitespace() && !BULLET_GLYPHS.contains(*c))
                    .collect()
            };
            let cleaned = clean_text(&text, &CleaningPolicy::default());
            prop_assert_eq!(keep(&cleaned), keep(&text));
        }

        #[test]
        fn whitespace_cleanup_leaves_no_double_spaces(text in arb_messy_text()) {
            let out = clean_extra_whitespace(&text);
            prop_assert!(!out.contains("  "));
            prop_assert!(!out.contains(" \n"));
            prop_assert!(!out.contains("\n "));
        }
    }
}
