//! Sequence-diagram output for EETs and traces, as SVG or monospaced text.
//!
//! Both back ends draw from the same row model: one row per message node,
//! plus rows that open, split and close frames (choice, par, guards,
//! references) and rows that start and end the repetition bars drawn to
//! the right of the diagram. All geometry is integral, so output is
//! byte-stable.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::dsl::display_param;
use crate::model::{Document, EetExpr, MessageNode, Predicate, Term, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("component `{0}` is not a diagram column")]
    UnknownComponent(String),
    #[error("column `{0}` is listed twice")]
    DuplicateColumn(String),
    #[error("rows must be at least 8 pixels high")]
    RowTooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Svg,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderOptions {
    pub format: Format,
    /// Column order; the declaration order of the document when `None`.
    pub column_order: Option<Vec<String>>,
    /// Print message arguments; otherwise only message names.
    pub show_params: bool,
    pub px_per_row: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            format: Format::Svg,
            column_order: None,
            show_params: true,
            px_per_row: 40,
        }
    }
}

impl RenderOptions {
    pub fn text() -> Self {
        RenderOptions {
            format: Format::Text,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Row {
    Arrow { from: usize, to: usize, label: String },
    Open { depth: usize, label: String },
    Sep { depth: usize, label: &'static str },
    Close { depth: usize },
    LoopOpen { level: usize, label: String },
    LoopClose { level: usize },
}

#[derive(Debug)]
struct Layout {
    columns: Vec<String>,
    rows: Vec<Row>,
    frame_depth: usize,
    loop_depth: usize,
}

struct Builder<'a> {
    index: HashMap<&'a str, usize>,
    show_params: bool,
    rows: Vec<Row>,
    depth: usize,
    level: usize,
    max_depth: usize,
    max_level: usize,
}

impl Builder<'_> {
    fn column(&self, name: &str) -> Result<usize, RenderError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| RenderError::UnknownComponent(name.to_string()))
    }

    fn arrow(&mut self, m: &MessageNode) -> Result<(), RenderError> {
        let from = self.column(&m.sender)?;
        let to = self.column(&m.receiver)?;
        let label = if m.args.is_empty() {
            format!("{}()", m.message)
        } else if self.show_params {
            let args: Vec<&str> = m.args.iter().map(term_label).collect();
            format!("{}({})", m.message, args.join(", "))
        } else {
            format!("{}(..)", m.message)
        };
        self.rows.push(Row::Arrow { from, to, label });
        Ok(())
    }

    fn framed(
        &mut self,
        label: String,
        parts: &[&EetExpr],
        sep: &'static str,
    ) -> Result<(), RenderError> {
        let depth = self.depth;
        self.depth += 1;
        self.max_depth = self.max_depth.max(self.depth);
        self.rows.push(Row::Open { depth, label });
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                self.rows.push(Row::Sep { depth, label: sep });
            }
            self.expr(p)?;
        }
        self.rows.push(Row::Close { depth });
        self.depth -= 1;
        Ok(())
    }

    fn expr(&mut self, e: &EetExpr) -> Result<(), RenderError> {
        match e {
            EetExpr::Empty => Ok(()),
            EetExpr::Message(m) => self.arrow(m),
            EetExpr::Seq(a, b) => {
                self.expr(a)?;
                self.expr(b)
            }
            EetExpr::Choice(alts) if alts.is_empty() => self.framed("dead".into(), &[], "or"),
            EetExpr::Choice(alts) => {
                let parts: Vec<&EetExpr> = alts.iter().collect();
                self.framed("choice".into(), &parts, "or")
            }
            EetExpr::Dead => self.framed("dead".into(), &[], "or"),
            EetExpr::Interleave(..) => {
                let mut parts = Vec::new();
                flatten_par(e, &mut parts);
                self.framed("par".into(), &parts, "and")
            }
            EetExpr::Guarded(body, pred) => {
                self.framed(format!("where {}", predicate_label(pred)), &[body], "")
            }
            EetExpr::Ref(name) => self.framed(format!("ref {name}"), &[], ""),
            EetExpr::Loop { body, min, max } => {
                let level = self.level;
                self.level += 1;
                self.max_level = self.max_level.max(self.level);
                let max = max.map_or("*".to_string(), |m| m.to_string());
                self.rows.push(Row::LoopOpen {
                    level,
                    label: format!("{min}..{max}"),
                });
                self.expr(body)?;
                self.rows.push(Row::LoopClose { level });
                self.level -= 1;
                Ok(())
            }
        }
    }
}

fn flatten_par<'e>(e: &'e EetExpr, out: &mut Vec<&'e EetExpr>) {
    match e {
        EetExpr::Interleave(a, b) => {
            flatten_par(a, out);
            flatten_par(b, out);
        }
        other => out.push(other),
    }
}

fn term_label(t: &Term) -> &str {
    match t {
        Term::Const(v) => v,
        Term::Param(p) => display_param(p),
    }
}

fn predicate_label(p: &Predicate) -> String {
    p.atoms
        .iter()
        .map(|a| {
            let op = match a.op {
                crate::model::CmpOp::Eq => "==",
                crate::model::CmpOp::Ne => "!=",
            };
            format!("{} {op} {}", term_label(&a.lhs), term_label(&a.rhs))
        })
        .collect::<Vec<_>>()
        .join(" && ")
}

fn columns(doc: &Document, opts: &RenderOptions) -> Result<Vec<String>, RenderError> {
    let Some(order) = &opts.column_order else {
        return Ok(doc.components.clone());
    };
    let mut seen = Vec::new();
    for c in order {
        if !doc.has_component(c) {
            return Err(RenderError::UnknownComponent(c.clone()));
        }
        if seen.contains(&c) {
            return Err(RenderError::DuplicateColumn(c.clone()));
        }
        seen.push(c);
    }
    Ok(order.clone())
}

fn layout(e: &EetExpr, doc: &Document, opts: &RenderOptions) -> Result<Layout, RenderError> {
    let columns = columns(doc, opts)?;
    let mut b = Builder {
        index: columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect(),
        show_params: opts.show_params,
        rows: Vec::new(),
        depth: 0,
        level: 0,
        max_depth: 0,
        max_level: 0,
    };
    b.expr(e)?;
    Ok(Layout {
        rows: b.rows,
        frame_depth: b.max_depth,
        loop_depth: b.max_level,
        columns,
    })
}

/// Draws an EET. References stay boxes labeled with the referenced name.
pub fn render_eet(e: &EetExpr, doc: &Document, opts: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    let l = layout(e, doc, opts)?;
    emit(&l, opts)
}

/// Draws a trace as a plain sequence of arrows.
pub fn render_trace(t: &Trace, doc: &Document, opts: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    let l = layout(&EetExpr::from_trace(t), doc, opts)?;
    emit(&l, opts)
}

fn emit(l: &Layout, opts: &RenderOptions) -> Result<Vec<u8>, RenderError> {
    Ok(match opts.format {
        Format::Text => text(l).into_bytes(),
        Format::Svg => {
            if opts.px_per_row < 8 {
                return Err(RenderError::RowTooSmall);
            }
            svg(l, opts.px_per_row as usize).into_bytes()
        }
    })
}

/// Longest self-message label on the last column; it hangs past the axes.
fn overhang(l: &Layout) -> usize {
    let last = l.columns.len().saturating_sub(1);
    l.rows
        .iter()
        .filter_map(|r| match r {
            Row::Arrow { from, to, label } if from == to && *from == last => Some(label.len()),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

struct Canvas {
    lines: Vec<Vec<u8>>,
}

impl Canvas {
    fn put(&mut self, x: usize, y: usize, s: &str) {
        let line = &mut self.lines[y];
        if line.len() < x + s.len() {
            line.resize(x + s.len(), b' ');
        }
        line[x..x + s.len()].copy_from_slice(s.as_bytes());
    }

    fn row(&mut self) -> usize {
        self.lines.push(Vec::new());
        self.lines.len() - 1
    }
}

fn ascii(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii() { c } else { '?' }).collect()
}

fn text(l: &Layout) -> String {
    let widest_label = l
        .rows
        .iter()
        .filter_map(|r| match r {
            Row::Arrow { from, to, label } if from != to => {
                Some((label.len() + 4).div_ceil(from.abs_diff(*to)))
            }
            Row::Arrow { label, .. } => Some(label.len() + 7),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let widest_name = l.columns.iter().map(String::len).max().unwrap_or(0);
    let spacing = widest_label.max(widest_name + 2).max(12);
    let left = (2 * l.frame_depth + 2).max(widest_name / 2 + 1);
    let xs: Vec<usize> = (0..l.columns.len()).map(|i| left + i * spacing).collect();
    let last = xs.last().copied().unwrap_or(left);
    let right_pad = left.max(overhang(l) + 7);
    let left_edge = |d: usize| 2 * d;
    let right_edge = |d: usize| last + right_pad - 2 * d;
    let bar = |k: usize| right_edge(0) + 3 + 3 * k;

    let mut c = Canvas { lines: Vec::new() };
    let mut frames: Vec<usize> = Vec::new();
    let mut loops: Vec<usize> = Vec::new();
    let base = |c: &mut Canvas, frames: &[usize], loops: &[usize]| {
        let y = c.row();
        for &x in &xs {
            c.put(x, y, "|");
        }
        for &d in frames {
            c.put(left_edge(d), y, "|");
            c.put(right_edge(d), y, "|");
        }
        for &k in loops {
            c.put(bar(k), y, "|");
        }
        y
    };
    let rule = |c: &mut Canvas, y: usize, d: usize, dashed: bool, label: &str| {
        let (a, b) = (left_edge(d), right_edge(d));
        let fill: String = (a + 1..b)
            .map(|x| if dashed && (x - a) % 2 == 0 { ' ' } else { '-' })
            .collect();
        c.put(a + 1, y, &fill);
        c.put(a, y, "+");
        c.put(b, y, "+");
        if !label.is_empty() {
            c.put(a + 3, y, &format!(" {} ", ascii(label)));
        }
    };

    let y = c.row();
    for (name, &x) in l.columns.iter().zip(&xs) {
        c.put(x - name.len() / 2, y, &ascii(name));
    }
    base(&mut c, &frames, &loops);
    for row in &l.rows {
        match row {
            Row::Arrow { from, to, label } if from == to => {
                let x = xs[*from];
                let y = base(&mut c, &frames, &loops);
                c.put(x + 1, y, "--+ ");
                c.put(x + 5, y, &ascii(label));
                let y = base(&mut c, &frames, &loops);
                c.put(x + 1, y, "<-+");
            }
            Row::Arrow { from, to, label } => {
                let (a, b) = (xs[*from].min(xs[*to]), xs[*from].max(xs[*to]));
                let label = ascii(label);
                let y = base(&mut c, &frames, &loops);
                let start = ((a + b) / 2).saturating_sub(label.len() / 2).max(a + 2);
                c.put(start, y, &label);
                let y = base(&mut c, &frames, &loops);
                c.put(a + 1, y, &"-".repeat(b - a - 1));
                if to > from {
                    c.put(b - 1, y, ">");
                } else {
                    c.put(a + 1, y, "<");
                }
            }
            Row::Open { depth, label } => {
                let y = base(&mut c, &frames, &loops);
                rule(&mut c, y, *depth, false, label);
                frames.push(*depth);
            }
            Row::Sep { depth, label } => {
                let y = base(&mut c, &frames, &loops);
                rule(&mut c, y, *depth, true, label);
            }
            Row::Close { depth } => {
                frames.pop();
                let y = base(&mut c, &frames, &loops);
                rule(&mut c, y, *depth, false, "");
            }
            Row::LoopOpen { level, label } => {
                let y = base(&mut c, &frames, &loops);
                c.put(bar(*level), y, &format!("+ {label}"));
                loops.push(*level);
            }
            Row::LoopClose { level } => {
                loops.pop();
                let y = base(&mut c, &frames, &loops);
                c.put(bar(*level), y, "+");
            }
        }
    }
    base(&mut c, &frames, &loops);

    let mut out = String::new();
    for line in c.lines {
        let s = String::from_utf8(line).expect("canvas holds ascii");
        out.push_str(s.trim_end());
        out.push('\n');
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const CHAR_PX: usize = 7;
const INSET: usize = 10;
const HEADER: usize = 30;

fn svg(l: &Layout, px: usize) -> String {
    let widest = l
        .rows
        .iter()
        .filter_map(|r| match r {
            Row::Arrow { from, to, label } if from != to => {
                Some((label.len() * CHAR_PX + 30).div_ceil(from.abs_diff(*to)))
            }
            Row::Arrow { label, .. } => Some(label.len() * CHAR_PX + 50),
            _ => None,
        })
        .chain(l.columns.iter().map(|c| c.len() * CHAR_PX + 20))
        .max()
        .unwrap_or(0);
    let spacing = widest.max(120);
    let name_half = l.columns.iter().map(|c| c.len() * CHAR_PX / 2 + 10).max().unwrap_or(0);
    let left = (INSET * (l.frame_depth + 1) + 20).max(name_half + INSET);
    let xs: Vec<usize> = (0..l.columns.len()).map(|i| left + i * spacing).collect();
    let last = xs.last().copied().unwrap_or(left);
    let right_pad = left.max(overhang(l) * CHAR_PX + 50);
    let left_edge = |d: usize| INSET * (d + 1);
    let right_edge = |d: usize| last + right_pad - INSET * d;
    let bar = |k: usize| right_edge(0) + 20 + 20 * k;
    let height_of = |r: &Row| match r {
        Row::Arrow { .. } => px,
        Row::Open { .. } | Row::Sep { .. } => px / 2,
        Row::Close { .. } | Row::LoopOpen { .. } | Row::LoopClose { .. } => px / 4,
    };
    let body: usize = l.rows.iter().map(height_of).sum();
    let bottom = HEADER + 10 + body + px / 2;
    let width = bar(l.loop_depth) + 40 + if l.loop_depth > 0 { 40 } else { 0 };
    let height = bottom + 10;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    for (name, &x) in l.columns.iter().zip(&xs) {
        let w = name.len() * CHAR_PX + 16;
        let _ = writeln!(
            out,
            r#"<g class="component"><rect x="{}" y="4" width="{w}" height="{}" fill="none" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text><line x1="{x}" y1="{}" x2="{x}" y2="{bottom}" stroke="black"/></g>"#,
            x - w / 2,
            HEADER - 8,
            HEADER - 10,
            escape(name),
            HEADER - 4,
        );
    }

    let mut y = HEADER + 10;
    let mut open_frames: Vec<(usize, usize, String)> = Vec::new();
    let mut open_loops: Vec<(usize, String)> = Vec::new();
    let mut shapes = String::new();
    for row in &l.rows {
        let h = height_of(row);
        match row {
            Row::Arrow { from, to, label } if from == to => {
                let x = xs[*from];
                let (y1, y2) = (y + h / 3, y + 2 * h / 3);
                let _ = writeln!(
                    shapes,
                    r#"<g class="arrow"><polyline points="{x},{y1} {},{y1} {},{y2} {x},{y2}" fill="none" stroke="black"/><polygon points="{x},{y2} {},{} {},{}" fill="black"/><text x="{}" y="{}">{}</text></g>"#,
                    x + 30,
                    x + 30,
                    x + 8,
                    y2 - 4,
                    x + 8,
                    y2 + 4,
                    x + 36,
                    y1 + 4,
                    escape(label)
                );
            }
            Row::Arrow { from, to, label } => {
                let (x1, x2) = (xs[*from], xs[*to]);
                let ya = y + 2 * h / 3;
                let back = if x2 > x1 { x2 - 8 } else { x2 + 8 };
                let _ = writeln!(
                    shapes,
                    r#"<g class="arrow"><line x1="{x1}" y1="{ya}" x2="{x2}" y2="{ya}" stroke="black"/><polygon points="{x2},{ya} {back},{} {back},{}" fill="black"/><text x="{}" y="{}" text-anchor="middle">{}</text></g>"#,
                    ya - 4,
                    ya + 4,
                    (x1 + x2) / 2,
                    ya - 6,
                    escape(label)
                );
            }
            Row::Open { depth, label } => {
                open_frames.push((*depth, y + h / 2, label.clone()));
            }
            Row::Sep { depth, label } => {
                let ys = y + h / 2;
                let _ = writeln!(
                    shapes,
                    r#"<g class="separator"><line x1="{}" y1="{ys}" x2="{}" y2="{ys}" stroke="black" stroke-dasharray="6,4"/><text x="{}" y="{}">{label}</text></g>"#,
                    left_edge(*depth),
                    right_edge(*depth),
                    left_edge(*depth) + 6,
                    ys + 14,
                );
            }
            Row::Close { .. } => {
                let (depth, top, label) = open_frames.pop().expect("balanced frames");
                let (x1, x2) = (left_edge(depth), right_edge(depth));
                let yb = y + h / 2;
                let tag = label.len() * CHAR_PX + 12;
                let _ = writeln!(
                    shapes,
                    r#"<g class="frame"><rect x="{x1}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/><polygon points="{x1},{top} {},{top} {},{} {x1},{}" fill="white" stroke="black"/><text x="{}" y="{}">{}</text></g>"#,
                    x2 - x1,
                    yb - top,
                    x1 + tag,
                    x1 + tag,
                    top + 12,
                    top + 16,
                    x1 + 5,
                    top + 12,
                    escape(&label)
                );
            }
            Row::LoopOpen { label, .. } => {
                open_loops.push((y + h / 2, label.clone()));
            }
            Row::LoopClose { level } => {
                let (top, label) = open_loops.pop().expect("balanced loops");
                let (x, yb) = (bar(*level), y + h / 2);
                let _ = writeln!(
                    shapes,
                    r#"<g class="loop"><polyline points="{},{top} {x},{top} {x},{yb} {},{yb}" fill="none" stroke="black"/><text x="{}" y="{}">{}</text></g>"#,
                    x - 6,
                    x - 6,
                    x + 4,
                    top + 12,
                    escape(&label)
                );
            }
        }
        y += h;
    }
    out.push_str(&shapes);
    out.push_str("</svg>\n");
    out
}
