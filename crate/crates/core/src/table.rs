//! Table grid model and its canonical renderings.
//!
//! A [`TableGrid`] is a rectangular cell matrix with row/column spans that
//! must tile the grid perfectly. Two deterministic renderings are derived
//! from it: a single-line HTML string stored in element metadata, and a
//! plain-text rendering stored in the element text.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One table cell anchored at `(row, col)`, covering `row_span x col_span`
/// grid positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    #[serde(default = "one")]
    pub row_span: usize,
    #[serde(default = "one")]
    pub col_span: usize,
    pub text: String,
}

fn one() -> usize {
    1
}

impl Cell {
    pub fn new(row: usize, col: usize, text: impl Into<String>) -> Self {
        Cell {
            row,
            col,
            row_span: 1,
            col_span: 1,
            text: text.into(),
        }
    }

    pub fn spanned(
        row: usize,
        col: usize,
        row_span: usize,
        col_span: usize,
        text: impl Into<String>,
    ) -> Self {
        Cell {
            row,
            col,
            row_span,
            col_span,
            text: text.into(),
        }
    }
}

/// Rectangular cell matrix. `header_rows` leading rows render inside
/// `<thead>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableGrid {
    pub n_rows: usize,
    pub n_cols: usize,
    pub header_rows: usize,
    pub cells: Vec<Cell>,
}

impl<'de> Deserialize<'de> for TableGrid {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GridDe {
            n_rows: usize,
            n_cols: usize,
            header_rows: Option<usize>,
            cells: Vec<Cell>,
        }

        let de = GridDe::deserialize(deserializer)?;
        // Input may omit header_rows; default to 1 when every cell of the
        // first row is non-numeric, else 0.
        let header_rows = de
            .header_rows
            .unwrap_or_else(|| infer_header_rows(&de.cells));
        Ok(TableGrid {
            n_rows: de.n_rows,
            n_cols: de.n_cols,
            header_rows,
            cells: de.cells,
        })
    }
}

/// Header inference used when the ingested grid does not say: 1 when the
/// first row's anchor cells are all non-numeric, else 0.
pub fn infer_header_rows(cells: &[Cell]) -> usize {
    let mut saw_first_row_cell = false;
    for cell in cells.iter().filter(|c| c.row == 0) {
        saw_first_row_cell = true;
        if is_numeric(&cell.text) {
            return 0;
        }
    }
    usize::from(saw_first_row_cell)
}

fn is_numeric(text: &str) -> bool {
    let stripped: String = text.trim().replace(',', "");
    !stripped.is_empty() && stripped.parse::<f64>().is_ok()
}

impl TableGrid {
    /// Check the perfect-tiling invariant: every grid position covered by
    /// exactly one cell span, all spans in bounds, header_rows <= n_rows.
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidGrid {
                message: "grid must have at least one row and one column".into(),
            });
        }
        if self.header_rows > self.n_rows {
            return Err(Error::InvalidGrid {
                message: format!(
                    "header_rows {} exceeds n_rows {}",
                    self.header_rows, self.n_rows
                ),
            });
        }
        let mut covered = vec![false; self.n_rows * self.n_cols];
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.row_span == 0 || cell.col_span == 0 {
                return Err(Error::InvalidGrid {
                    message: format!("cell {i} has a zero span"),
                });
            }
            if cell.row + cell.row_span > self.n_rows || cell.col + cell.col_span > self.n_cols {
                return Err(Error::InvalidGrid {
                    message: format!(
                        "cell {i} at ({}, {}) spans outside the {}x{} grid",
                        cell.row, cell.col, self.n_rows, self.n_cols
                    ),
                });
            }
            for r in cell.row..cell.row + cell.row_span {
                for c in cell.col..cell.col + cell.col_span {
                    let slot = &mut covered[r * self.n_cols + c];
                    if *slot {
                        return Err(Error::InvalidGrid {
                            message: format!("position ({r}, {c}) is covered twice"),
                        });
                    }
                    *slot = true;
                }
            }
        }
        if let Some(idx) = covered.iter().position(|c| !c) {
            let (r, c) = (idx / self.n_cols, idx % self.n_cols);
            return Err(Error::InvalidGrid {
                message: format!("position ({r}, {c}) is uncovered"),
            });
        }
        Ok(())
    }

    /// Anchor cells of row `r`, left to right.
    fn row_cells(&self, r: usize) -> Vec<&Cell> {
        let mut cells: Vec<&Cell> = self.cells.iter().filter(|c| c.row == r).collect();
        cells.sort_by_key(|c| c.col);
        cells
    }

    /// Render the grid as single-line HTML: `<table border="1">`, header rows
    /// as `<th>` inside `<thead>`, the rest as `<td>` inside `<tbody>`.
    /// Span attributes appear only when greater than 1.
    pub fn to_html(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::from("<table border=\"1\">");
        if self.header_rows > 0 {
            out.push_str("<thead>");
            for r in 0..self.header_rows {
                self.render_row(&mut out, r, "th");
            }
            out.push_str("</thead>");
        }
        out.push_str("<tbody>");
        for r in self.header_rows..self.n_rows {
            self.render_row(&mut out, r, "td");
        }
        out.push_str("</tbody></table>");
        Ok(out)
    }

    fn render_row(&self, out: &mut String, r: usize, tag: &str) {
        out.push_str("<tr>");
        for cell in self.row_cells(r) {
            out.push('<');
            out.push_str(tag);
            if cell.col_span > 1 {
                out.push_str(&format!(" colspan=\"{}\"", cell.col_span));
            }
            if cell.row_span > 1 {
                out.push_str(&format!(" rowspan=\"{}\"", cell.row_span));
            }
            out.push('>');
            out.push_str(&escape_html(&cell.text));
            out.push_str("</");
            out.push_str(tag);
            out.push('>');
        }
        out.push_str("</tr>");
    }

    /// Render the grid as plain text: rows joined by `\n`, anchor-cell texts
    /// within a row joined by single spaces, empty cells contributing
    /// nothing.
    pub fn to_raw_text(&self) -> Result<String> {
        self.validate()?;
        let rows: Vec<String> = (0..self.n_rows)
            .map(|r| {
                self.row_cells(r)
                    .iter()
                    .map(|c| c.text.as_str())
                    .filter(|t| !t.is_empty())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        Ok(rows.join("\n"))
    }
}

/// Escape text for use inside an HTML element: `& < > "`.
pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}
