//! Findings derivation and report rendering.
//!
//! Findings are conditions under which resolution precedence could be
//! gained — never verdicts. Each one is anchored to a node path so the
//! reader can tell surface introduced by the root binary apart from surface
//! introduced transitively by a dependency.
//!
//! Two output forms exist: a human-readable annotated tree whose bytes are
//! stable for a fixed report (the sysroot prefix is abbreviated to
//! `<sysroot>` so goldens stay machine-independent), and a versioned JSON
//! document (`so-surface/1`, schema shipped in `schema/`) that carries full
//! host paths and reconstructs the report structures exactly on parse.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use so_surface_core::bytestr::ByteString;
use so_surface_core::lexpath;
use so_surface_core::search_paths::{unsupported_token, PathSource};
use so_surface_core::sysroot::SysrootConfig;

use crate::closure::{AnalysisReport, DependencyNode, ReportWarning, UnresolvedRecord};
use crate::resolver::{Mechanism, ProbeOutcome, Resolution, ResolutionStatus};

pub const SCHEMA_VERSION: &str = "so-surface/1";

/// Hijack-surface condition kinds, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FindingKind {
    OriginRelativeSearchPath,
    NonSystemEmbeddedPath,
    CwdRelativeSearchPath,
    UnresolvedDependency,
    NonElfCandidateSkipped,
    PathLiteralDependency,
    UnsupportedToken,
    DuplicateSegment,
    ParseFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntroducedBy {
    Root,
    Transitive,
}

/// Kind-specific structured payload; unused fields stay absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingDetail {
    /// The embedded path segment exactly as found in the binary.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub raw_segment: Option<ByteString>,
    /// Which tag the segment came from.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<PathSource>,
    /// Host path related to the finding (expanded directory, skipped
    /// candidate, unparseable file).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<ByteString>,
    /// Dependency name the finding is about.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub name: Option<ByteString>,
    /// Unsupported loader token that was detected.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub token: Option<String>,
    /// Duplicated segment label.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub segment: Option<ByteString>,
    /// Number of candidate locations probed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tried: Option<usize>,
    /// Free-form diagnostic (parse failure message).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

/// One reported condition, anchored at a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Names from the root to the anchoring node, root included.
    pub node_path: Vec<ByteString>,
    pub introduced_by: IntroducedBy,
    pub detail: FindingDetail,
}

impl Finding {
    fn new(kind: FindingKind, node_path: &[ByteString], detail: FindingDetail) -> Self {
        let introduced_by =
            if node_path.len() == 1 { IntroducedBy::Root } else { IntroducedBy::Transitive };
        Finding { kind, node_path: node_path.to_vec(), introduced_by, detail }
    }
}

/// Derives the ordered findings list from an analysis report.
///
/// Ordering is deterministic: nodes in preorder, then kind order, then the
/// order the underlying data appears in the node.
pub fn derive_findings(report: &AnalysisReport) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (node, path) in report.walk() {
        let mut here: Vec<Finding> = Vec::new();
        embedded_path_findings(node, &path, report, &mut here);
        resolution_findings(node, &path, &mut here);
        summary_findings(node, &path, &mut here);
        parse_failed_findings(&path, report, &mut here);
        here.sort_by_key(|f| f.kind);
        findings.extend(here);
    }
    findings
}

fn embedded_path_findings(
    node: &DependencyNode,
    path: &[ByteString],
    report: &AnalysisReport,
    out: &mut Vec<Finding>,
) {
    for expanded in &node.embedded_paths {
        let entry = &expanded.entry;
        let base = FindingDetail {
            raw_segment: Some(entry.raw.clone()),
            source: Some(entry.source),
            ..FindingDetail::default()
        };
        if entry.origin_relative {
            out.push(Finding::new(
                FindingKind::OriginRelativeSearchPath,
                path,
                FindingDetail { path: expanded.host_path.clone(), ..base },
            ));
            continue;
        }
        if entry.empty {
            out.push(Finding::new(FindingKind::CwdRelativeSearchPath, path, base));
            continue;
        }
        if let Some(token) = unsupported_token(&entry.raw) {
            out.push(Finding::new(
                FindingKind::UnsupportedToken,
                path,
                FindingDetail { token: Some(token.to_string()), ..base },
            ));
            continue;
        }
        if !lexpath::is_absolute(entry.raw.as_bytes()) {
            // Relative segment without $ORIGIN: searched relative to the
            // runtime working directory, same exposure as an empty segment.
            out.push(Finding::new(FindingKind::CwdRelativeSearchPath, path, base));
            continue;
        }
        if !is_standard_location(entry.raw.as_bytes(), &report.sysroot) {
            out.push(Finding::new(
                FindingKind::NonSystemEmbeddedPath,
                path,
                FindingDetail { path: expanded.host_path.clone(), ..base },
            ));
        }
    }
}

/// True when the target-view directory equals a standard library directory
/// or lies underneath one.
fn is_standard_location(target_dir: &[u8], sysroot: &SysrootConfig) -> bool {
    let normalized = lexpath::normalize(target_dir);
    sysroot
        .standard_dirs
        .iter()
        .any(|std_dir| lexpath::is_within(normalized.as_bytes(), std_dir.as_bytes()))
}

/// Findings carried by the resolutions this node declared (its children's
/// `Resolution` values): anchored at the declaring node.
fn resolution_findings(node: &DependencyNode, path: &[ByteString], out: &mut Vec<Finding>) {
    for child in &node.children {
        let Some(resolution) = &child.resolution else { continue };
        if resolution.name.as_bytes().contains(&b'/') {
            out.push(Finding::new(
                FindingKind::PathLiteralDependency,
                path,
                FindingDetail { name: Some(resolution.name.clone()), ..FindingDetail::default() },
            ));
        }
        if !resolution.resolved() {
            out.push(Finding::new(
                FindingKind::UnresolvedDependency,
                path,
                FindingDetail {
                    name: Some(resolution.name.clone()),
                    tried: Some(resolution.tried.len()),
                    ..FindingDetail::default()
                },
            ));
        }
        for candidate in &resolution.tried {
            if candidate.outcome == ProbeOutcome::NotElf {
                out.push(Finding::new(
                    FindingKind::NonElfCandidateSkipped,
                    path,
                    FindingDetail {
                        name: Some(resolution.name.clone()),
                        path: Some(candidate.path.clone()),
                        ..FindingDetail::default()
                    },
                ));
            }
        }
    }
}

fn summary_findings(node: &DependencyNode, path: &[ByteString], out: &mut Vec<Finding>) {
    let Some(summary) = &node.summary else { return };
    for warning in &summary.warnings {
        if let so_surface_core::elf::SummaryWarning::DuplicateSegment { segment } = warning {
            out.push(Finding::new(
                FindingKind::DuplicateSegment,
                path,
                FindingDetail { segment: Some(segment.clone()), ..FindingDetail::default() },
            ));
        }
    }
}

fn parse_failed_findings(path: &[ByteString], report: &AnalysisReport, out: &mut Vec<Finding>) {
    for warning in &report.warnings {
        if let ReportWarning::ParseFailed { node_path, path: file, detail } = warning {
            if node_path == path {
                out.push(Finding::new(
                    FindingKind::ParseFailed,
                    path,
                    FindingDetail {
                        path: Some(file.clone()),
                        note: Some(detail.clone()),
                        ..FindingDetail::default()
                    },
                ));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Text rendering

/// Renders the annotated dependency tree as stable human-readable text.
pub fn render_text(report: &AnalysisReport, findings: &[Finding]) -> String {
    let mut out = String::new();
    render_node(&mut out, report, &report.root, 0, true);

    out.push('\n');
    if findings.is_empty() {
        out.push_str("findings: none\n");
    } else {
        let _ = writeln!(out, "findings ({}):", findings.len());
        for f in findings {
            let tag = match f.introduced_by {
                IntroducedBy::Root => "root",
                IntroducedBy::Transitive => "transitive",
            };
            let _ = writeln!(
                out,
                "  [{tag}] {}: {} — {}",
                kind_label(f.kind),
                finding_detail_text(f, report),
                join_path(&f.node_path)
            );
        }
    }

    if !report.warnings.is_empty() {
        out.push('\n');
        let _ = writeln!(out, "warnings ({}):", report.warnings.len());
        for w in &report.warnings {
            let _ = writeln!(out, "  {}", warning_line(w, report));
        }
    }
    out
}

fn render_node(
    out: &mut String,
    report: &AnalysisReport,
    node: &DependencyNode,
    depth: usize,
    is_root: bool,
) {
    let indent = "    ".repeat(depth);
    let mut line = String::new();
    if is_root {
        let shown = node
            .summary
            .as_ref()
            .map(|_| abbrev_root_path(report))
            .unwrap_or_default();
        let _ = write!(line, "{}{} — {}", indent, node.name, shown);
    } else {
        match node.resolution.as_ref().map(|r| &r.status) {
            Some(ResolutionStatus::Resolved { host_path, mechanism, .. }) => {
                let _ = write!(
                    line,
                    "{}- {} → {} ({})",
                    indent,
                    node.name,
                    abbrev(host_path, &report.sysroot),
                    mechanism_text(mechanism)
                );
            }
            _ => {
                let tried =
                    node.resolution.as_ref().map(|r| r.tried.len()).unwrap_or_default();
                let _ = write!(
                    line,
                    "{}- {} → UNRESOLVED (tried {} locations)",
                    indent, node.name, tried
                );
            }
        }
        if node.visited {
            line.push_str(" [already analyzed]");
        }
    }
    out.push_str(&line);
    out.push('\n');

    if let Some(summary) = &node.summary {
        let meta = format!("{indent}    ");
        if is_root {
            if let Some(interp) = &summary.interp {
                let _ = writeln!(out, "{meta}interpreter: {interp}");
            }
        }
        let runpath_present = !summary.runpath.is_empty();
        for raw in &summary.rpath {
            let mut markers = String::new();
            if raw.contains_seq(b"$ORIGIN") || raw.contains_seq(b"${ORIGIN}") {
                markers.push_str(" [ORIGIN]");
            }
            if runpath_present {
                markers.push_str(" [suppressed by runpath]");
            }
            let _ = writeln!(out, "{meta}rpath: {raw}{markers}");
        }
        for raw in &summary.runpath {
            let origin = raw.contains_seq(b"$ORIGIN") || raw.contains_seq(b"${ORIGIN}");
            let marker = if origin { " [ORIGIN]" } else { "" };
            let _ = writeln!(out, "{meta}runpath: {raw}{marker}");
        }
        if !node.expanded && !node.visited && !summary.needed.is_empty() {
            let _ = writeln!(out, "{meta}(children not expanded)");
        }
    }
    for child in &node.children {
        render_node(out, report, child, depth + 1, false);
    }
}

fn mechanism_text(mechanism: &Mechanism) -> String {
    match mechanism {
        Mechanism::EmbeddedPath(i) => format!("embedded path #{i}"),
        Mechanism::StandardDir(dir) => format!("standard dir {dir}"),
        Mechanism::LiteralPath => "literal path".to_string(),
    }
}

fn kind_label(kind: FindingKind) -> &'static str {
    match kind {
        FindingKind::OriginRelativeSearchPath => "origin-relative search path",
        FindingKind::NonSystemEmbeddedPath => "non-system embedded path",
        FindingKind::CwdRelativeSearchPath => "cwd-relative search path",
        FindingKind::UnresolvedDependency => "unresolved dependency",
        FindingKind::NonElfCandidateSkipped => "non-elf candidate skipped",
        FindingKind::PathLiteralDependency => "path-literal dependency",
        FindingKind::UnsupportedToken => "unsupported loader token",
        FindingKind::DuplicateSegment => "duplicate segment",
        FindingKind::ParseFailed => "parse failed",
    }
}

fn finding_detail_text(f: &Finding, report: &AnalysisReport) -> String {
    let d = &f.detail;
    let source = |s: &Option<PathSource>| match s {
        Some(PathSource::Rpath) => " (rpath)",
        Some(PathSource::Runpath) => " (runpath)",
        None => "",
    };
    match f.kind {
        FindingKind::OriginRelativeSearchPath
        | FindingKind::NonSystemEmbeddedPath
        | FindingKind::CwdRelativeSearchPath => {
            let raw = d.raw_segment.clone().unwrap_or_default();
            format!("\"{raw}\"{}", source(&d.source))
        }
        FindingKind::UnresolvedDependency => format!(
            "{} (tried {} locations)",
            d.name.clone().unwrap_or_default(),
            d.tried.unwrap_or_default()
        ),
        FindingKind::NonElfCandidateSkipped => format!(
            "{} at {}",
            d.name.clone().unwrap_or_default(),
            d.path.as_ref().map(|p| abbrev(p, &report.sysroot)).unwrap_or_default()
        ),
        FindingKind::PathLiteralDependency => {
            format!("\"{}\"", d.name.clone().unwrap_or_default())
        }
        FindingKind::UnsupportedToken => format!(
            "\"{}\" contains {}",
            d.raw_segment.clone().unwrap_or_default(),
            d.token.clone().unwrap_or_default()
        ),
        FindingKind::DuplicateSegment => d.segment.clone().unwrap_or_default().to_escaped(),
        FindingKind::ParseFailed => format!(
            "{}: {}",
            d.path.as_ref().map(|p| abbrev(p, &report.sysroot)).unwrap_or_default(),
            d.note.clone().unwrap_or_default()
        ),
    }
}

/// One-line description of a report warning, for diagnostics mirroring.
pub fn warning_line(warning: &ReportWarning, report: &AnalysisReport) -> String {
    use so_surface_core::elf::SummaryWarning;
    match warning {
        ReportWarning::Node { node_path, warning } => {
            let what = match warning {
                SummaryWarning::DuplicateSegment { segment } => {
                    format!("duplicate segment {segment}")
                }
                SummaryWarning::MissingTerminator => {
                    "dynamic array missing DT_NULL terminator".to_string()
                }
                SummaryWarning::OutOfRangeString { tag, offset } => {
                    format!("string offset {offset} out of range for tag {tag}")
                }
                SummaryWarning::MissingStringTable => "no DT_STRTAB present".to_string(),
            };
            format!("[{}] {}", join_path(node_path), what)
        }
        ReportWarning::ParseFailed { node_path, path, detail } => format!(
            "[{}] resolved file {} failed to parse: {}",
            join_path(node_path),
            abbrev(path, &report.sysroot),
            detail
        ),
    }
}

fn join_path(path: &[ByteString]) -> String {
    path.iter().map(|p| p.to_escaped()).collect::<Vec<_>>().join(" > ")
}

/// Replaces the sysroot prefix with `<sysroot>` for machine-independent
/// output.
fn abbrev(path: &ByteString, sysroot: &SysrootConfig) -> String {
    let root = sysroot.root.as_bytes();
    let bytes = path.as_bytes();
    if lexpath::is_within(bytes, root) {
        let rest = &bytes[root.len()..];
        let mut shown = Vec::with_capacity(rest.len() + 9);
        shown.extend_from_slice(b"<sysroot>");
        shown.extend_from_slice(rest);
        ByteString::new(shown).to_escaped()
    } else {
        path.to_escaped()
    }
}

fn abbrev_root_path(report: &AnalysisReport) -> String {
    abbrev(&report.root_path, &report.sysroot)
}

// ---------------------------------------------------------------------------
// JSON rendering

/// The complete versioned JSON document: analysis plus findings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub sysroot: SysrootConfig,
    pub max_depth: u32,
    pub visited_count: usize,
    pub root_path: ByteString,
    pub root: DependencyNode,
    pub unresolved: Vec<UnresolvedRecord>,
    pub warnings: Vec<ReportWarning>,
    pub findings: Vec<Finding>,
}

impl ReportDocument {
    pub fn new(report: &AnalysisReport, findings: &[Finding]) -> Self {
        ReportDocument {
            schema: SCHEMA_VERSION.to_string(),
            sysroot: report.sysroot.clone(),
            max_depth: report.max_depth,
            visited_count: report.visited_count,
            root_path: report.root_path.clone(),
            root: report.root.clone(),
            unresolved: report.unresolved.clone(),
            warnings: report.warnings.clone(),
            findings: findings.to_vec(),
        }
    }

    /// Splits the document back into the analysis report and findings.
    pub fn into_parts(self) -> (AnalysisReport, Vec<Finding>) {
        (
            AnalysisReport {
                root: self.root,
                root_path: self.root_path,
                sysroot: self.sysroot,
                max_depth: self.max_depth,
                unresolved: self.unresolved,
                warnings: self.warnings,
                visited_count: self.visited_count,
            },
            self.findings,
        )
    }
}

/// Serializes the report and findings as the versioned UTF-8 JSON document.
pub fn render_json(report: &AnalysisReport, findings: &[Finding]) -> Vec<u8> {
    let doc = ReportDocument::new(report, findings);
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("report serialization is infallible");
    bytes.push(b'\n');
    bytes
}

/// Parses a document produced by [`render_json`].
pub fn parse_json(bytes: &[u8]) -> Result<ReportDocument, serde_json::Error> {
    serde_json::from_slice(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::analyze;
    use crate::fixtures::{build_sysroot, FixtureSpec, SysrootSpec};
    use crate::resolver::standard_dirs_for;
    use tempfile::TempDir;

    fn illustrative() -> SysrootSpec {
        SysrootSpec::new()
            .elf(
                "opt/app/bin/app",
                FixtureSpec::new()
                    .with_interp("/lib64/ld-linux-x86-64.so.2")
                    .needing(["libhello.so", "libc.so.6"])
                    .with_runpath("$ORIGIN/lib"),
            )
            .elf("opt/app/bin/lib/libhello.so", FixtureSpec::new().shared_object())
            .elf("usr/lib/libc.so.6", FixtureSpec::new().shared_object())
    }

    fn analyzed(spec: &SysrootSpec, root_rel: &str, depth: u32) -> (AnalysisReport, Vec<Finding>) {
        let dir = TempDir::new().unwrap();
        build_sysroot(spec, dir.path()).unwrap();
        let config = standard_dirs_for(62, dir.path()).unwrap();
        let report = analyze(&dir.path().join(root_rel), &config, depth).unwrap();
        let findings = derive_findings(&report);
        (report, findings)
    }

    #[test]
    fn illustrative_yields_one_root_origin_finding() {
        let (_, findings) = analyzed(&illustrative(), "opt/app/bin/app", 2);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, FindingKind::OriginRelativeSearchPath);
        assert_eq!(findings[0].introduced_by, IntroducedBy::Root);
        assert_eq!(findings[0].node_path.len(), 1);
        assert_eq!(findings[0].detail.raw_segment, Some(ByteString::from("$ORIGIN/lib")));
        assert!(!findings.iter().any(|f| f.introduced_by == IntroducedBy::Transitive));
    }

    #[test]
    fn transitive_runpath_is_flagged_non_system() {
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libplug.so"]))
            .elf(
                "usr/lib/libplug.so",
                FixtureSpec::new().shared_object().with_runpath("/data/plugins"),
            );
        let (_, findings) = analyzed(&spec, "app", 2);
        let f = findings
            .iter()
            .find(|f| f.kind == FindingKind::NonSystemEmbeddedPath)
            .expect("non-system finding");
        assert_eq!(f.introduced_by, IntroducedBy::Transitive);
        assert_eq!(f.node_path.len(), 2);
        assert_eq!(f.detail.raw_segment, Some(ByteString::from("/data/plugins")));
    }

    #[test]
    fn fully_static_root_has_no_findings() {
        let spec = SysrootSpec::new().elf("static_app", FixtureSpec::new());
        let (_, findings) = analyzed(&spec, "static_app", 2);
        assert!(findings.is_empty());
    }

    #[test]
    fn embedded_standard_dir_is_not_flagged() {
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().with_rpath("/usr/lib:/usr/lib/plugins"));
        let (_, findings) = analyzed(&spec, "app", 2);
        // Both segments live inside a standard dir; nothing to report.
        assert!(findings.is_empty(), "{findings:?}");
    }

    #[test]
    fn empty_segment_and_token_and_literal_findings() {
        let spec = SysrootSpec::new().elf(
            "app",
            FixtureSpec::new()
                .needing(["plugins/libp.so"])
                .with_runpath("$LIB/x::relative"),
        );
        let (_, findings) = analyzed(&spec, "app", 2);
        let kinds: Vec<FindingKind> = findings.iter().map(|f| f.kind).collect();
        assert!(kinds.contains(&FindingKind::UnsupportedToken));
        assert!(kinds.contains(&FindingKind::CwdRelativeSearchPath));
        assert!(kinds.contains(&FindingKind::PathLiteralDependency));
        assert!(kinds.contains(&FindingKind::UnresolvedDependency));
        // Per-node ordering follows kind order.
        let mut sorted = kinds.clone();
        sorted.sort();
        assert_eq!(kinds, sorted);
    }

    #[test]
    fn unresolved_dependency_of_root_is_root_introduced() {
        let spec = SysrootSpec::new().elf("app", FixtureSpec::new().needing(["libgone.so"]));
        let (_, findings) = analyzed(&spec, "app", 2);
        let f = findings
            .iter()
            .find(|f| f.kind == FindingKind::UnresolvedDependency)
            .expect("unresolved finding");
        assert_eq!(f.introduced_by, IntroducedBy::Root);
        assert_eq!(f.detail.name, Some(ByteString::from("libgone.so")));
    }

    #[test]
    fn non_elf_candidate_skip_is_a_finding() {
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libx.so"]).with_rpath("/decoy"))
            .raw("decoy/libx.so", b"plain text".to_vec())
            .elf("usr/lib/libx.so", FixtureSpec::new().shared_object());
        let (_, findings) = analyzed(&spec, "app", 2);
        let f = findings
            .iter()
            .find(|f| f.kind == FindingKind::NonElfCandidateSkipped)
            .expect("skip finding");
        assert!(f.detail.path.as_ref().unwrap().to_escaped().ends_with("/decoy/libx.so"));
    }

    #[test]
    fn text_shows_unresolved_and_mechanisms() {
        let spec = SysrootSpec::new()
            .elf(
                "app",
                FixtureSpec::new().needing(["libok.so", "libmissing.so"]).with_rpath("/lib"),
            )
            .elf("lib/libok.so", FixtureSpec::new().shared_object());
        let (report, findings) = analyzed(&spec, "app", 2);
        let text = render_text(&report, &findings);
        assert!(text.contains("libok.so → <sysroot>/lib/libok.so (embedded path #0)"), "{text}");
        assert!(text.contains("libmissing.so → UNRESOLVED (tried"), "{text}");
        assert!(text.contains("rpath: /lib"), "{text}");
    }

    #[test]
    fn text_marks_unexpanded_children_at_depth_zero() {
        let (report, findings) = analyzed(&illustrative(), "opt/app/bin/app", 0);
        let text = render_text(&report, &findings);
        assert!(text.contains("(children not expanded)"), "{text}");
        assert!(!text.contains("libhello.so →"), "{text}");
    }

    #[test]
    fn text_is_pure_function_of_report() {
        let (report, findings) = analyzed(&illustrative(), "opt/app/bin/app", 2);
        assert_eq!(render_text(&report, &findings), render_text(&report, &findings));
    }

    #[test]
    fn suppressed_rpath_stays_visible() {
        let spec =
            SysrootSpec::new().elf("app", FixtureSpec::new().with_rpath("/a").with_runpath("/b"));
        let (report, findings) = analyzed(&spec, "app", 2);
        let text = render_text(&report, &findings);
        assert!(text.contains("rpath: /a [suppressed by runpath]"), "{text}");
        assert!(text.contains("runpath: /b"), "{text}");
    }

    #[test]
    fn json_roundtrip_reconstructs_report() {
        let (report, findings) = analyzed(&illustrative(), "opt/app/bin/app", 2);
        let bytes = render_json(&report, &findings);
        let doc = parse_json(&bytes).unwrap();
        assert_eq!(doc.schema, SCHEMA_VERSION);
        let (back_report, back_findings) = doc.into_parts();
        assert_eq!(back_report, report);
        assert_eq!(back_findings, findings);
    }

    #[test]
    fn json_for_illustrative_has_three_nodes_one_finding() {
        let (report, findings) = analyzed(&illustrative(), "opt/app/bin/app", 2);
        let bytes = render_json(&report, &findings);
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(value["findings"].as_array().unwrap().len(), 1);
        let root = &value["root"];
        assert_eq!(root["children"].as_array().unwrap().len(), 2);
        assert_eq!(value["visited_count"], 3);
    }

    #[test]
    fn hostile_name_bytes_stay_escaped_and_utf8() {
        let name = ByteString::new(b"lib\xff\xfe.so".to_vec());
        let spec = SysrootSpec::new().elf("app", FixtureSpec::new().needing([name.clone()]));
        let (report, findings) = analyzed(&spec, "app", 2);
        let bytes = render_json(&report, &findings);
        assert!(std::str::from_utf8(&bytes).is_ok());
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(value["root"]["children"][0]["name"], "lib\\xff\\xfe.so");
        let (back, _) = parse_json(&bytes).unwrap().into_parts();
        assert_eq!(back.root.children[0].name, name);

        let text = render_text(&report, &findings);
        assert!(text.contains("lib\\xff\\xfe.so"), "{text}");
    }
}
