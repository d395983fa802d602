//! Bounded transitive dependency analysis.
//!
//! Starting from one root ELF object the analyzer resolves its `DT_NEEDED`
//! entries, applies the same extraction to each resolved dependency, and
//! repeats for one more level by default: root at depth 0, direct
//! dependencies at depth 1, their dependencies at depth 2. Traversal is
//! breadth-first so depth is unambiguous; children keep `DT_NEEDED` order.
//! A visited set keyed by canonical host path cuts cycles and repeated
//! work while still recording every edge in the tree.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use so_surface_core::bytestr::ByteString;
use so_surface_core::elf::{summarize, ElfError, ElfSummary, SummaryWarning, MAX_FILE_LEN};
use so_surface_core::search_paths::{effective_embedded_paths, ExpandedPath};
use so_surface_core::sysroot::SysrootConfig;

use crate::resolver::{resolve_needed, Resolution, ResolutionStatus};

/// One node of the annotated dependency tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyNode {
    /// Dependency name; for the root node, the root file's name.
    pub name: ByteString,
    pub depth: u32,
    /// Absent for the root, which is given directly rather than resolved.
    pub resolution: Option<Resolution>,
    /// Present when the node's file was read and parsed.
    pub summary: Option<ElfSummary>,
    /// The node's own effective embedded search paths, expanded.
    pub embedded_paths: Vec<ExpandedPath>,
    pub children: Vec<DependencyNode>,
    /// False when the depth limit or the visited set cut expansion.
    pub expanded: bool,
    /// True when this node's canonical file was already analyzed elsewhere
    /// in the tree; the edge is recorded, the subtree is not repeated.
    pub visited: bool,
}

/// Where an unresolved name was declared: path of the declaring node from
/// the root, plus the dependency name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedRecord {
    pub node_path: Vec<ByteString>,
    pub name: ByteString,
}

/// Analysis-level warnings, each tied to the node it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ReportWarning {
    /// A parse-level warning attached to one node's summary.
    Node { node_path: Vec<ByteString>, warning: SummaryWarning },
    /// A dependency resolved to a file that failed to parse as ELF.
    ParseFailed { node_path: Vec<ByteString>, path: ByteString, detail: String },
}

/// The bounded annotated dependency tree plus everything derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub root: DependencyNode,
    /// Canonical host path of the analyzed root object.
    pub root_path: ByteString,
    pub sysroot: SysrootConfig,
    pub max_depth: u32,
    pub unresolved: Vec<UnresolvedRecord>,
    pub warnings: Vec<ReportWarning>,
    /// Number of distinct canonical file paths taken up for analysis.
    pub visited_count: usize,
}

/// Counters exposed for instrumentation in tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnalysisStats {
    /// Number of files actually parsed; each canonical path is parsed at
    /// most once per analysis.
    pub parse_count: usize,
}

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("root {path:?} is not analyzable ELF: {source}")]
    RootNotElf { path: PathBuf, source: ElfError },
    #[error("sysroot is missing: {0}")]
    SysrootMissing(#[from] crate::resolver::ResolverError),
    #[error("io error on {path:?}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub const DEFAULT_MAX_DEPTH: u32 = 2;

/// Analyzes `root_path` under `config`, expanding dependencies breadth-first
/// down to `max_depth`.
pub fn analyze(
    root_path: &Path,
    config: &SysrootConfig,
    max_depth: u32,
) -> Result<AnalysisReport, AnalyzeError> {
    analyze_with_stats(root_path, config, max_depth).map(|(report, _)| report)
}

/// [`analyze`] plus instrumentation counters.
pub fn analyze_with_stats(
    root_path: &Path,
    config: &SysrootConfig,
    max_depth: u32,
) -> Result<(AnalysisReport, AnalysisStats), AnalyzeError> {
    let mut stats = AnalysisStats::default();

    let canonical_root = fs::canonicalize(root_path)
        .map_err(|source| AnalyzeError::Io { path: root_path.to_path_buf(), source })?;
    let root_bytes = read_capped(&canonical_root)
        .map_err(|source| AnalyzeError::Io { path: root_path.to_path_buf(), source })?;
    stats.parse_count += 1;
    let root_summary = summarize(&root_bytes)
        .map_err(|source| AnalyzeError::RootNotElf { path: root_path.to_path_buf(), source })?;

    let root_name = ByteString::from_path(Path::new(
        canonical_root.file_name().unwrap_or(canonical_root.as_os_str()),
    ));
    let root_host = ByteString::from_path(&canonical_root);

    let mut visited: HashSet<ByteString> = HashSet::new();
    visited.insert(root_host.clone());

    // Arena-backed BFS; children always appear after their parent, so the
    // tree is reassembled with one reverse pass at the end.
    struct Slot {
        node: DependencyNode,
        parent: Option<usize>,
        node_path: Vec<ByteString>,
        /// Canonical location used as `$ORIGIN` base when expanding this
        /// node's own embedded paths.
        host_path: Option<ByteString>,
    }

    let mut warnings: Vec<ReportWarning> = Vec::new();
    let mut unresolved: Vec<UnresolvedRecord> = Vec::new();

    let mut arena: Vec<Slot> = vec![Slot {
        node: DependencyNode {
            name: root_name.clone(),
            depth: 0,
            resolution: None,
            summary: Some(root_summary.clone()),
            embedded_paths: effective_embedded_paths(&root_summary, &root_host, config),
            children: Vec::new(),
            expanded: false,
            visited: false,
        },
        parent: None,
        node_path: vec![root_name],
        host_path: Some(root_host),
    }];
    push_summary_warnings(&mut warnings, &arena[0].node_path, &root_summary);

    let mut queue: usize = 0;
    while queue < arena.len() {
        let idx = queue;
        queue += 1;

        let depth = arena[idx].node.depth;
        if depth >= max_depth || arena[idx].node.visited {
            continue;
        }
        let (Some(summary), Some(owner_host)) =
            (arena[idx].node.summary.clone(), arena[idx].host_path.clone())
        else {
            continue;
        };
        arena[idx].node.expanded = true;

        for name in &summary.needed {
            let resolution = resolve_needed(name, &summary, &owner_host, config);
            let child_path: Vec<ByteString> = {
                let mut p = arena[idx].node_path.clone();
                p.push(name.clone());
                p
            };

            let mut child = DependencyNode {
                name: name.clone(),
                depth: depth + 1,
                resolution: None,
                summary: None,
                embedded_paths: Vec::new(),
                children: Vec::new(),
                expanded: false,
                visited: false,
            };
            let mut child_host = None;

            match &resolution.status {
                ResolutionStatus::Resolved { canonical_path, .. } => {
                    if visited.contains(canonical_path) {
                        child.visited = true;
                    } else {
                        visited.insert(canonical_path.clone());
                        match read_capped(canonical_path.as_path()) {
                            Ok(bytes) => {
                                stats.parse_count += 1;
                                match summarize(&bytes) {
                                    Ok(s) => {
                                        child.embedded_paths =
                                            effective_embedded_paths(&s, canonical_path, config);
                                        push_summary_warnings(&mut warnings, &child_path, &s);
                                        child.summary = Some(s);
                                        child_host = Some(canonical_path.clone());
                                    }
                                    Err(e) => warnings.push(ReportWarning::ParseFailed {
                                        node_path: child_path.clone(),
                                        path: canonical_path.clone(),
                                        detail: e.to_string(),
                                    }),
                                }
                            }
                            Err(e) => warnings.push(ReportWarning::ParseFailed {
                                node_path: child_path.clone(),
                                path: canonical_path.clone(),
                                detail: e.to_string(),
                            }),
                        }
                    }
                }
                ResolutionStatus::Unresolved => {
                    unresolved.push(UnresolvedRecord {
                        node_path: arena[idx].node_path.clone(),
                        name: name.clone(),
                    });
                }
            }
            child.resolution = Some(resolution);

            arena.push(Slot {
                node: child,
                parent: Some(idx),
                node_path: child_path,
                host_path: child_host,
            });
        }
    }

    // Reassemble: children of a slot always have larger indices.
    let mut children_of: Vec<Vec<usize>> = vec![Vec::new(); arena.len()];
    for (i, slot) in arena.iter().enumerate() {
        if let Some(p) = slot.parent {
            children_of[p].push(i);
        }
    }
    let mut nodes: Vec<Option<DependencyNode>> =
        arena.into_iter().map(|s| Some(s.node)).collect();
    for i in (0..nodes.len()).rev() {
        let kids: Vec<DependencyNode> =
            children_of[i].iter().map(|&c| nodes[c].take().expect("child taken once")).collect();
        nodes[i].as_mut().expect("node present").children = kids;
    }
    let root = nodes[0].take().expect("root present");

    let report = AnalysisReport {
        root,
        root_path: ByteString::from_path(&canonical_root),
        sysroot: config.clone(),
        max_depth,
        unresolved,
        warnings,
        visited_count: visited.len(),
    };
    Ok((report, stats))
}

fn push_summary_warnings(
    warnings: &mut Vec<ReportWarning>,
    node_path: &[ByteString],
    summary: &ElfSummary,
) {
    for w in &summary.warnings {
        warnings.push(ReportWarning::Node { node_path: node_path.to_vec(), warning: w.clone() });
    }
}

fn read_capped(path: &Path) -> Result<Vec<u8>, std::io::Error> {
    let meta = fs::metadata(path)?;
    if meta.len() > MAX_FILE_LEN {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{} bytes exceeds the {MAX_FILE_LEN}-byte cap", meta.len()),
        ));
    }
    fs::read(path)
}

impl AnalysisReport {
    /// Preorder traversal of the tree with each node's name path.
    pub fn walk(&self) -> Vec<(&DependencyNode, Vec<ByteString>)> {
        let mut out = Vec::new();
        fn rec<'a>(
            node: &'a DependencyNode,
            path: &mut Vec<ByteString>,
            out: &mut Vec<(&'a DependencyNode, Vec<ByteString>)>,
        ) {
            path.push(node.name.clone());
            out.push((node, path.clone()));
            for child in &node.children {
                rec(child, path, out);
            }
            path.pop();
        }
        let mut path = Vec::new();
        rec(&self.root, &mut path, &mut out);
        out
    }
}
