//! Wireframe graph model: junctions, undirected line index pairs and the
//! visibility partition of both.
//!
//! A line is hidden when at least one of its endpoints is occluded. An
//! observable junction touching at least one hidden line is *fleeting*; the
//! remaining observable junctions are *visible*.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;

/// Lines shorter than this (in length units) are rejected.
pub const MIN_LINE_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JunctionClass {
    Visible,
    Fleeting,
    Hidden,
}

impl JunctionClass {
    pub const ALL: [JunctionClass; 3] = [JunctionClass::Visible, JunctionClass::Fleeting, JunctionClass::Hidden];

    pub fn as_str(self) -> &'static str {
        match self {
            JunctionClass::Visible => "visible",
            JunctionClass::Fleeting => "fleeting",
            JunctionClass::Hidden => "hidden",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineVisibility {
    Visible,
    Hidden,
}

impl LineVisibility {
    pub const ALL: [LineVisibility; 2] = [LineVisibility::Visible, LineVisibility::Hidden];

    pub fn as_str(self) -> &'static str {
        match self {
            LineVisibility::Visible => "visible",
            LineVisibility::Hidden => "hidden",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireframeError {
    #[error("line {line} references junction {index} but only {count} junctions exist")]
    IndexOutOfRange { line: usize, index: usize, count: usize },
    #[error("expected {expected} labels, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("line {line} is labeled hidden but both endpoints are observable")]
    InconsistentLineLabel { line: usize },
    #[error("graph failed validation: {0:?}")]
    Invalid(Vec<Violation>),
}

/// A single broken invariant reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    IndexOutOfRange { line: usize, index: usize },
    SelfLoop { line: usize, junction: usize },
    DuplicateEdge { first: usize, second: usize },
    ZeroLength { line: usize },
    NonFiniteJunction { junction: usize },
    IsolatedJunction { junction: usize },
    LabelCount { field: &'static str, expected: usize, actual: usize },
    JunctionClassMismatch { junction: usize },
    LineLabelMismatch { line: usize },
    Projection2dCount { expected: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { line, index } => write!(f, "line {line}: index {index} out of range"),
            Violation::SelfLoop { line, junction } => write!(f, "line {line}: self-loop on junction {junction}"),
            Violation::DuplicateEdge { first, second } => write!(f, "lines {first} and {second} are duplicates"),
            Violation::ZeroLength { line } => write!(f, "line {line}: zero length"),
            Violation::NonFiniteJunction { junction } => write!(f, "junction {junction}: non-finite coordinate"),
            Violation::IsolatedJunction { junction } => write!(f, "junction {junction}: degree 0"),
            Violation::LabelCount { field, expected, actual } => {
                write!(f, "{field}: expected {expected} entries, got {actual}")
            }
            Violation::JunctionClassMismatch { junction } => {
                write!(f, "junction {junction}: class disagrees with visibility rule")
            }
            Violation::LineLabelMismatch { line } => write!(f, "line {line}: label disagrees with endpoint visibility"),
            Violation::Projection2dCount { expected, actual } => {
                write!(f, "junctions2d: expected {expected} entries, got {actual}")
            }
        }
    }
}

/// Labeled wireframe. Lines are stored canonically with the lower index first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireframeGraph {
    pub junctions3d: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junctions2d: Option<Vec<[f64; 2]>>,
    pub lines: Vec<(usize, usize)>,
    pub junction_visibility: Vec<bool>,
    pub junction_class: Vec<JunctionClass>,
    pub line_visibility: Vec<LineVisibility>,
}

impl WireframeGraph {
    /// Builds a fully visible graph. Line pairs are canonicalized (`m < n`).
    pub fn new(junctions3d: Vec<Vec3>, lines: Vec<(usize, usize)>) -> Self {
        let n = junctions3d.len();
        let lines: Vec<_> = lines.into_iter().map(|(a, b)| canonical_pair(a, b)).collect();
        let m = lines.len();
        Self {
            junctions3d,
            junctions2d: None,
            lines,
            junction_visibility: vec![true; n],
            junction_class: vec![JunctionClass::Visible; n],
            line_visibility: vec![LineVisibility::Visible; m],
        }
    }

    pub fn junction_count(&self) -> usize {
        self.junctions3d.len()
    }

    /// Replaces the visibility flags and recomputes line labels and junction classes.
    pub fn relabel(&mut self, junction_visibility: Vec<bool>) -> Result<(), WireframeError> {
        if junction_visibility.len() != self.junctions3d.len() {
            return Err(WireframeError::LengthMismatch {
                expected: self.junctions3d.len(),
                actual: junction_visibility.len(),
            });
        }
        let line_vis = classify_line_visibility(&self.lines, &junction_visibility)?;
        let classes = classify_junctions(&junction_visibility, &line_vis, &self.lines)?;
        self.junction_visibility = junction_visibility;
        self.line_visibility = line_vis;
        self.junction_class = classes;
        Ok(())
    }

    pub fn count_class(&self, class: JunctionClass) -> usize {
        self.junction_class.iter().filter(|&&c| c == class).count()
    }

    pub fn count_lines(&self, vis: LineVisibility) -> usize {
        self.line_visibility.iter().filter(|&&v| v == vis).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.junctions3d.len()];
        for &(a, b) in &self.lines {
            if a < deg.len() {
                deg[a] += 1;
            }
            if b < deg.len() {
                deg[b] += 1;
            }
        }
        deg
    }
}

pub fn canonical_pair(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Labels a line hidden iff at least one endpoint is occluded.
pub fn classify_line_visibility(
    lines: &[(usize, usize)],
    junction_visibility: &[bool],
) -> Result<Vec<LineVisibility>, WireframeError> {
    let count = junction_visibility.len();
    lines
        .iter()
        .enumerate()
        .map(|(line, &(a, b))| {
            for index in [a, b] {
                if index >= count {
                    return Err(WireframeError::IndexOutOfRange { line, index, count });
                }
            }
            Ok(if junction_visibility[a] && junction_visibility[b] {
                LineVisibility::Visible
            } else {
                LineVisibility::Hidden
            })
        })
        .collect()
}

pub fn classify_junctions(
    junction_visibility: &[bool],
    line_visibility: &[LineVisibility],
    lines: &[(usize, usize)],
) -> Result<Vec<JunctionClass>, WireframeError> {
    if line_visibility.len() != lines.len() {
        return Err(WireframeError::LengthMismatch {
            expected: lines.len(),
            actual: line_visibility.len(),
        });
    }
    let count = junction_visibility.len();
    let mut touches_hidden = vec![false; count];
    for (line, (&(a, b), &vis)) in lines.iter().zip(line_visibility).enumerate() {
        for index in [a, b] {
            if index >= count {
                return Err(WireframeError::IndexOutOfRange { line, index, count });
            }
        }
        if vis == LineVisibility::Hidden {
            if junction_visibility[a] && junction_visibility[b] {
                return Err(WireframeError::InconsistentLineLabel { line });
            }
            touches_hidden[a] = true;
            touches_hidden[b] = true;
        }
    }
    Ok(junction_visibility
        .iter()
        .zip(&touches_hidden)
        .map(|(&v, &t)| match (v, t) {
            (false, _) => JunctionClass::Hidden,
            (true, true) => JunctionClass::Fleeting,
            (true, false) => JunctionClass::Visible,
        })
        .collect())
}

/// Symmetric binary adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl AdjacencyMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e != 0).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn adjacency_matrix(graph: &WireframeGraph) -> AdjacencyMatrix {
    let n = graph.junction_count();
    let mut entries = vec![0u8; n * n];
    for &(a, b) in &graph.lines {
        if a < n && b < n && a != b {
            entries[a * n + b] = 1;
            entries[b * n + a] = 1;
        }
    }
    AdjacencyMatrix { n, entries }
}

/// Checks every structural and labeling invariant, reporting all violations.
pub fn validate(graph: &WireframeGraph) -> Result<(), Vec<Violation>> {
    let n = graph.junction_count();
    let mut out = Vec::new();

    for (junction, p) in graph.junctions3d.iter().enumerate() {
        if !p.is_finite() {
            out.push(Violation::NonFiniteJunction { junction });
        }
    }
    if let Some(j2) = &graph.junctions2d {
        if j2.len() != n {
            out.push(Violation::Projection2dCount { expected: n, actual: j2.len() });
        }
    }

    let mut seen = std::collections::BTreeMap::new();
    let mut degree = vec![0usize; n];
    let mut lines_ok = true;
    for (line, &(a, b)) in graph.lines.iter().enumerate() {
        let mut in_range = true;
        for index in [a, b] {
            if index >= n {
                out.push(Violation::IndexOutOfRange { line, index });
                in_range = false;
            }
        }
        if !in_range {
            lines_ok = false;
            continue;
        }
        if a == b {
            out.push(Violation::SelfLoop { line, junction: a });
            continue;
        }
        degree[a] += 1;
        degree[b] += 1;
        if let Some(first) = seen.insert(canonical_pair(a, b), line) {
            out.push(Violation::DuplicateEdge { first, second: line });
        }
        if graph.junctions3d[a].distance(graph.junctions3d[b]) < MIN_LINE_LENGTH {
            out.push(Violation::ZeroLength { line });
        }
    }
    for (junction, &d) in degree.iter().enumerate() {
        if d == 0 {
            out.push(Violation::IsolatedJunction { junction });
        }
    }

    let mut labels_ok = true;
    for (field, actual, expected) in [
        ("junction_visibility", graph.junction_visibility.len(), n),
        ("junction_class", graph.junction_class.len(), n),
        ("line_visibility", graph.line_visibility.len(), graph.lines.len()),
    ] {
        if actual != expected {
            out.push(Violation::LabelCount { field, expected, actual });
            labels_ok = false;
        }
    }

    if labels_ok && lines_ok {
        // Labels must be exactly what the rules derive from the visibility flags.
        let line_vis = classify_line_visibility(&graph.lines, &graph.junction_visibility)
            .expect("indices checked above");
        for (line, (stored, derived)) in graph.line_visibility.iter().zip(&line_vis).enumerate() {
            if stored != derived {
                out.push(Violation::LineLabelMismatch { line });
            }
        }
        let classes = classify_junctions(&graph.junction_visibility, &line_vis, &graph.lines)
            .expect("derived labels are consistent");
        for (junction, (stored, derived)) in graph.junction_class.iter().zip(&classes).enumerate() {
            if stored != derived {
                out.push(Violation::JunctionClassMismatch { junction });
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Sorted, deduplicated copy of the line set (useful when comparing graphs).
pub fn line_set(lines: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    lines.iter().map(|&(a, b)| canonical_pair(a, b)).collect()
}
