//! Embedded search-path decoding: path-list splitting, `$ORIGIN` handling,
//! and computation of the effective embedded path order.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bytestr::{find_seq, ByteString};
use crate::elf::ElfSummary;
use crate::lexpath;
use crate::sysroot::{map_to_sysroot, SysrootConfig};

const ORIGIN_PLAIN: &[u8] = b"$ORIGIN";
const ORIGIN_BRACED: &[u8] = b"${ORIGIN}";

/// Loader tokens other than `$ORIGIN` that can appear in embedded paths.
/// They are detected and flagged but never expanded.
const UNSUPPORTED_TOKENS: [&str; 4] = ["${LIB}", "${PLATFORM}", "$LIB", "$PLATFORM"];

/// Which dynamic tag a path segment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathSource {
    Rpath,
    Runpath,
}

/// One colon-separated segment of an embedded path list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPathEntry {
    /// The segment exactly as embedded, unexpanded.
    pub raw: ByteString,
    pub source: PathSource,
    /// True iff the segment contains `$ORIGIN` or `${ORIGIN}`.
    pub origin_relative: bool,
    /// True iff the segment is the empty string. Empty segments mean the
    /// process working directory at runtime and are kept as findings, never
    /// used for resolution.
    pub empty: bool,
}

/// A search-path segment after `$ORIGIN` expansion and sysroot mapping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedPath {
    pub entry: SearchPathEntry,
    /// Absolute host directory to probe; unset when the segment cannot be
    /// used (empty, escaped, relative, or carrying an unsupported token).
    pub host_path: Option<ByteString>,
    pub resolvable: bool,
}

/// Splits a raw path-list string on `:` into entries, preserving order.
/// Empty segments are kept, flagged rather than dropped.
pub fn split_path_list(raw: &ByteString, source: PathSource) -> Vec<SearchPathEntry> {
    raw.as_bytes()
        .split(|&b| b == b':')
        .map(|segment| SearchPathEntry {
            raw: ByteString::from(segment),
            source,
            origin_relative: contains_origin(segment),
            empty: segment.is_empty(),
        })
        .collect()
}

fn contains_origin(segment: &[u8]) -> bool {
    find_seq(segment, ORIGIN_PLAIN).is_some() || find_seq(segment, ORIGIN_BRACED).is_some()
}

/// Returns the first unsupported loader token present in the segment.
pub fn unsupported_token(raw: &ByteString) -> Option<&'static str> {
    UNSUPPORTED_TOKENS.iter().copied().find(|t| raw.contains_seq(t.as_bytes()))
}

/// Replaces every `${ORIGIN}` and `$ORIGIN` occurrence with `origin_dir`
/// and lexically normalizes the result. Purely textual; nothing on the
/// filesystem is consulted.
pub fn expand_origin(entry: &SearchPathEntry, origin_dir: &ByteString) -> ByteString {
    debug_assert!(!entry.empty);
    let replaced = replace_all(entry.raw.as_bytes(), ORIGIN_BRACED, origin_dir.as_bytes());
    let replaced = replace_all(&replaced, ORIGIN_PLAIN, origin_dir.as_bytes());
    lexpath::normalize(&replaced)
}

fn replace_all(haystack: &[u8], needle: &[u8], replacement: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(haystack.len());
    let mut rest = haystack;
    while let Some(idx) = find_seq(rest, needle) {
        out.extend_from_slice(&rest[..idx]);
        out.extend_from_slice(replacement);
        rest = &rest[idx + needle.len()..];
    }
    out.extend_from_slice(rest);
    out
}

/// Computes the embedded search paths that take part in resolution for one
/// object, in effective order.
///
/// When any `DT_RUNPATH` exists the runpath entries alone are effective and
/// every `DT_RPATH` is suppressed (it stays visible in the summary for
/// reporting). Origin-relative segments expand against the owning file's
/// real host directory and are not re-rooted; absolute segments are
/// re-rooted under the sysroot; everything else (empty, relative,
/// unsupported-token, escaped) is carried along as unresolvable.
pub fn effective_embedded_paths(
    summary: &ElfSummary,
    owner_host_path: &ByteString,
    config: &SysrootConfig,
) -> Vec<ExpandedPath> {
    let (lists, source) = if !summary.runpath.is_empty() {
        (&summary.runpath, PathSource::Runpath)
    } else {
        (&summary.rpath, PathSource::Rpath)
    };
    let origin_dir = lexpath::parent(owner_host_path.as_bytes());

    let mut out = Vec::new();
    for raw_list in lists {
        for entry in split_path_list(raw_list, source) {
            out.push(expand_entry(entry, &origin_dir, config));
        }
    }
    out
}

fn expand_entry(
    entry: SearchPathEntry,
    origin_dir: &ByteString,
    config: &SysrootConfig,
) -> ExpandedPath {
    if entry.empty || unsupported_token(&entry.raw).is_some() {
        return ExpandedPath { entry, host_path: None, resolvable: false };
    }
    if entry.origin_relative {
        let expanded = expand_origin(&entry, origin_dir);
        if lexpath::is_absolute(expanded.as_bytes()) {
            return ExpandedPath { entry, host_path: Some(expanded), resolvable: true };
        }
        // A token buried behind a relative prefix still depends on the
        // runtime working directory; nothing to probe statically.
        return ExpandedPath { entry, host_path: None, resolvable: false };
    }
    if lexpath::is_absolute(entry.raw.as_bytes()) {
        let mapping = map_to_sysroot(entry.raw.as_bytes(), config);
        if mapping.escaped {
            return ExpandedPath { entry, host_path: None, resolvable: false };
        }
        return ExpandedPath { entry, host_path: Some(mapping.host_path), resolvable: true };
    }
    // Relative segment without $ORIGIN: resolved against the runtime
    // working directory by real loaders, unknowable here.
    ExpandedPath { entry, host_path: None, resolvable: false }
}
