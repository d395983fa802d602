//! Resolution of one `DT_NEEDED` name to a concrete file under the sysroot.
//!
//! Candidates are probed in loader precedence order: effective embedded
//! paths first (`DT_RUNPATH`, or `DT_RPATH` when no runpath exists, with
//! `$ORIGIN` expanded), then the standard library directories under the
//! sysroot. The first candidate that exists, is a regular file after a
//! bounded and sysroot-confined symlink walk, and begins with ELF magic
//! wins. Every probe is recorded so reports can show the full precedence
//! sequence, including skipped non-ELF decoys.

use std::ffi::OsStr;
use std::fs;
use std::io::Read;
use std::os::unix::ffi::OsStrExt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use so_surface_core::bytestr::ByteString;
use so_surface_core::elf::ElfSummary;
use so_surface_core::lexpath;
use so_surface_core::search_paths::effective_embedded_paths;
use so_surface_core::sysroot::{map_to_sysroot, SysrootConfig};

/// Symlink hops allowed while walking one candidate path.
const MAX_SYMLINK_HOPS: u32 = 16;

#[derive(Debug, Error)]
pub enum ResolverError {
    #[error("sysroot {path:?} is missing or not a directory")]
    SysrootMissing { path: PathBuf },
}

/// Which step of the search sequence produced a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    /// Index into the owner's effective embedded path list.
    EmbeddedPath(usize),
    /// Sysroot-relative standard directory.
    StandardDir(ByteString),
    /// The dependency name contained `/` and was taken as a literal path.
    LiteralPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeOutcome {
    /// No directory entry with the exact name, or a dangling link.
    Missing,
    /// Exists but is not a regular file.
    NotRegularFile,
    /// A regular file without ELF magic; skipped, probing continued.
    NotElf,
    /// A symlink hop left the sysroot.
    SymlinkEscape,
    /// More than the allowed number of symlink hops.
    SymlinkLoop,
    Won,
}

/// One probed candidate, in probe order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbedCandidate {
    pub path: ByteString,
    pub mechanism: Mechanism,
    pub outcome: ProbeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolutionStatus {
    Resolved {
        /// The candidate path that won, as probed.
        host_path: ByteString,
        /// The same file with every symlink resolved, still confined to the
        /// sysroot; this is the identity used by the visited set.
        canonical_path: ByteString,
        mechanism: Mechanism,
    },
    Unresolved,
}

/// Outcome of resolving one dependency name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub name: ByteString,
    /// Every candidate probed; on success the winner is the last entry.
    pub tried: Vec<ProbedCandidate>,
    pub status: ResolutionStatus,
}

impl Resolution {
    pub fn resolved(&self) -> bool {
        matches!(self.status, ResolutionStatus::Resolved { .. })
    }
}

/// Builds the sysroot configuration for a root directory and machine code,
/// verifying the directory exists. The root is canonicalized so that later
/// confinement checks have a stable boundary.
pub fn standard_dirs_for(machine: u16, sysroot_root: &Path) -> Result<SysrootConfig, ResolverError> {
    let canonical = fs::canonicalize(sysroot_root)
        .map_err(|_| ResolverError::SysrootMissing { path: sysroot_root.to_path_buf() })?;
    if !canonical.is_dir() {
        return Err(ResolverError::SysrootMissing { path: sysroot_root.to_path_buf() });
    }
    Ok(SysrootConfig::new(ByteString::from_path(&canonical), machine))
}

/// Resolves `name` for the object described by `owner_summary`, located at
/// `owner_host_path` on the analysis host.
///
/// Names containing `/` are loader-literal paths: they skip the search
/// sequence entirely (absolute ones re-rooted under the sysroot, relative
/// ones unresolvable because they depend on the runtime working directory).
pub fn resolve_needed(
    name: &ByteString,
    owner_summary: &ElfSummary,
    owner_host_path: &ByteString,
    config: &SysrootConfig,
) -> Resolution {
    if name.is_empty() {
        return Resolution { name: name.clone(), tried: Vec::new(), status: ResolutionStatus::Unresolved };
    }
    if name.as_bytes().contains(&b'/') {
        return resolve_literal(name, config);
    }

    let mut tried = Vec::new();
    let embedded = effective_embedded_paths(owner_summary, owner_host_path, config);
    let candidates = embedded
        .iter()
        .enumerate()
        .filter_map(|(idx, p)| {
            p.host_path.as_ref().map(|dir| (dir.clone(), Mechanism::EmbeddedPath(idx)))
        })
        .chain(config.standard_dirs.iter().map(|dir| {
            (map_to_sysroot(dir.as_bytes(), config).host_path, Mechanism::StandardDir(dir.clone()))
        }));

    for (dir, mechanism) in candidates {
        let candidate = lexpath::join(dir.as_bytes(), name.as_bytes());
        let (outcome, canonical) = probe(&candidate, config);
        tried.push(ProbedCandidate { path: candidate.clone(), mechanism: mechanism.clone(), outcome });
        if outcome == ProbeOutcome::Won {
            return Resolution {
                name: name.clone(),
                tried,
                status: ResolutionStatus::Resolved {
                    host_path: candidate,
                    canonical_path: canonical.expect("winning probe yields a canonical path"),
                    mechanism,
                },
            };
        }
    }
    Resolution { name: name.clone(), tried, status: ResolutionStatus::Unresolved }
}

fn resolve_literal(name: &ByteString, config: &SysrootConfig) -> Resolution {
    if !lexpath::is_absolute(name.as_bytes()) {
        // Relative literal: resolved against the runtime working directory
        // by real loaders; nothing can be probed statically.
        return Resolution { name: name.clone(), tried: Vec::new(), status: ResolutionStatus::Unresolved };
    }
    let mapping = map_to_sysroot(name.as_bytes(), config);
    if mapping.escaped {
        return Resolution { name: name.clone(), tried: Vec::new(), status: ResolutionStatus::Unresolved };
    }
    let candidate = mapping.host_path;
    let (outcome, canonical) = probe(&candidate, config);
    let tried = vec![ProbedCandidate {
        path: candidate.clone(),
        mechanism: Mechanism::LiteralPath,
        outcome,
    }];
    let status = match outcome {
        ProbeOutcome::Won => ResolutionStatus::Resolved {
            host_path: candidate,
            canonical_path: canonical.expect("winning probe yields a canonical path"),
            mechanism: Mechanism::LiteralPath,
        },
        _ => ResolutionStatus::Unresolved,
    };
    Resolution { name: name.clone(), tried, status }
}

/// Checks one candidate path: byte-exact directory-listing lookup of the
/// final name, confined symlink walk, regular-file check, ELF magic sniff.
fn probe(candidate: &ByteString, config: &SysrootConfig) -> (ProbeOutcome, Option<ByteString>) {
    let root_bytes = config.root.as_bytes();
    if !lexpath::is_within(candidate.as_bytes(), root_bytes) {
        // Origin-relative directories can lie outside the sysroot when the
        // root binary itself does; they are probed with host semantics and
        // the sysroot confinement rules do not apply to them.
        return probe_outside(candidate.as_path());
    }
    let root: &Path = Path::new(OsStr::from_bytes(root_bytes));
    let rel = &candidate.as_bytes()[root_bytes.len().min(candidate.len())..];
    if rel.split(|&b| b == b'/').all(|c| c.is_empty()) {
        return (ProbeOutcome::NotRegularFile, None);
    }

    let parent_rel = lexpath::parent(rel);
    let leaf = rel.split(|&b| b == b'/').next_back().unwrap_or_default();

    let walked_parent = match walk_confined(root, parent_rel.as_bytes()) {
        Ok(p) => p,
        Err(e) => return (walk_outcome(e), None),
    };
    if !dir_contains_exact(&walked_parent, leaf) {
        return (ProbeOutcome::Missing, None);
    }

    // Walk just the leaf from the already resolved parent; its own symlink
    // chain stays confined and bounded.
    let parent_rel_bytes = walked_parent.as_os_str().as_bytes()[root_bytes.len()..].to_vec();
    let mut leaf_rel = parent_rel_bytes;
    leaf_rel.push(b'/');
    leaf_rel.extend_from_slice(leaf);
    let resolved = match walk_confined(root, &leaf_rel) {
        Ok(p) => p,
        Err(e) => return (walk_outcome(e), None),
    };

    let Ok(meta) = fs::symlink_metadata(&resolved) else { return (ProbeOutcome::Missing, None) };
    if !meta.is_file() {
        return (ProbeOutcome::NotRegularFile, None);
    }
    match has_elf_magic(&resolved) {
        Some(true) => (ProbeOutcome::Won, Some(ByteString::from_path(&resolved))),
        Some(false) => (ProbeOutcome::NotElf, None),
        None => (ProbeOutcome::Missing, None),
    }
}

fn walk_outcome(e: WalkError) -> ProbeOutcome {
    match e {
        WalkError::Escape => ProbeOutcome::SymlinkEscape,
        WalkError::Loop => ProbeOutcome::SymlinkLoop,
        WalkError::Missing => ProbeOutcome::Missing,
    }
}

/// Byte-wise comparison against the directory listing instead of a host
/// `open`: keeps name matching case-sensitive even on case-folding hosts.
fn dir_contains_exact(dir: &Path, name: &[u8]) -> bool {
    let Ok(entries) = fs::read_dir(dir) else { return false };
    for entry in entries.flatten() {
        if entry.file_name().as_bytes() == name {
            return true;
        }
    }
    false
}

fn probe_outside(candidate: &Path) -> (ProbeOutcome, Option<ByteString>) {
    let Some(parent) = candidate.parent() else { return (ProbeOutcome::Missing, None) };
    let Some(leaf) = candidate.file_name() else { return (ProbeOutcome::Missing, None) };
    if !dir_contains_exact(parent, leaf.as_bytes()) {
        return (ProbeOutcome::Missing, None);
    }
    let Ok(meta) = fs::metadata(candidate) else { return (ProbeOutcome::Missing, None) };
    if !meta.is_file() {
        return (ProbeOutcome::NotRegularFile, None);
    }
    let canonical = match fs::canonicalize(candidate) {
        Ok(c) => c,
        Err(_) => return (ProbeOutcome::Missing, None),
    };
    match has_elf_magic(&canonical) {
        Some(true) => (ProbeOutcome::Won, Some(ByteString::from_path(&canonical))),
        Some(false) => (ProbeOutcome::NotElf, None),
        None => (ProbeOutcome::Missing, None),
    }
}

fn has_elf_magic(path: &Path) -> Option<bool> {
    let mut file = fs::File::open(path).ok()?;
    let mut magic = [0u8; 4];
    match file.read_exact(&mut magic) {
        Ok(()) => Some(magic == [0x7f, b'E', b'L', b'F']),
        Err(_) => Some(false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WalkError {
    Escape,
    Loop,
    Missing,
}

/// Resolves `rel` under `root` component by component, expanding symlinks
/// with sysroot semantics: absolute targets are re-rooted under the sysroot
/// (the extracted-filesystem view), relative targets are joined to the
/// link's directory, and any `..` that would climb above the root is an
/// escape. At most [`MAX_SYMLINK_HOPS`] links are followed.
fn walk_confined(root: &Path, rel: &[u8]) -> Result<PathBuf, WalkError> {
    let mut parts: Vec<Vec<u8>> = Vec::new();
    let mut work: Vec<Vec<u8>> = rel
        .split(|&b| b == b'/')
        .filter(|c| !c.is_empty())
        .map(|c| c.to_vec())
        .collect();
    work.reverse(); // treat as a stack, next component last
    let mut hops = 0u32;

    while let Some(comp) = work.pop() {
        match comp.as_slice() {
            b"." => continue,
            b".." => {
                if parts.pop().is_none() {
                    return Err(WalkError::Escape);
                }
            }
            _ => {
                parts.push(comp);
                let current = assemble(root, &parts);
                let meta = match fs::symlink_metadata(&current) {
                    Ok(m) => m,
                    Err(_) => {
                        // Missing intermediate or leaf: either way the
                        // candidate cannot resolve.
                        return Err(WalkError::Missing);
                    }
                };
                if meta.file_type().is_symlink() {
                    hops += 1;
                    if hops > MAX_SYMLINK_HOPS {
                        return Err(WalkError::Loop);
                    }
                    let target = fs::read_link(&current).map_err(|_| WalkError::Missing)?;
                    let target_bytes = target.as_os_str().as_bytes().to_vec();
                    parts.pop();
                    if target_bytes.first() == Some(&b'/') {
                        // Target is absolute in the target filesystem's own
                        // view; reinterpret it under the sysroot.
                        parts.clear();
                    }
                    for c in target_bytes.split(|&b| b == b'/').rev() {
                        if !c.is_empty() {
                            work.push(c.to_vec());
                        }
                    }
                }
            }
        }
    }
    Ok(assemble(root, &parts))
}

fn assemble(root: &Path, parts: &[Vec<u8>]) -> PathBuf {
    let mut path = root.to_path_buf();
    for p in parts {
        path.push(OsStr::from_bytes(p));
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{build_sysroot, FixtureSpec, SysrootSpec};
    use so_surface_core::elf::summarize;
    use tempfile::TempDir;

    fn config_for(root: &Path) -> SysrootConfig {
        standard_dirs_for(62, root).unwrap()
    }

    fn summary_at(path: &Path) -> ElfSummary {
        summarize(&std::fs::read(path).unwrap()).unwrap()
    }

    fn resolve_in(root: &Path, owner_rel: &str, name: &str) -> Resolution {
        let owner = fs::canonicalize(root.join(owner_rel)).unwrap();
        let summary = summary_at(&owner);
        resolve_needed(
            &ByteString::from(name),
            &summary,
            &ByteString::from_path(&owner),
            &config_for(root),
        )
    }

    #[test]
    fn embedded_origin_path_wins() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf(
                "opt/app/bin/app",
                FixtureSpec::new().needing(["libhello.so"]).with_runpath("$ORIGIN/../lib"),
            )
            .elf("opt/app/lib/libhello.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "opt/app/bin/app", "libhello.so");
        match &resolution.status {
            ResolutionStatus::Resolved { host_path, mechanism, .. } => {
                assert!(host_path.to_escaped().ends_with("/opt/app/lib/libhello.so"));
                assert_eq!(*mechanism, Mechanism::EmbeddedPath(0));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
    }

    #[test]
    fn standard_dir_used_when_embedded_misses() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf(
                "opt/app/bin/app",
                FixtureSpec::new().needing(["libc.so.6"]).with_runpath("$ORIGIN/lib"),
            )
            .elf("usr/lib/libc.so.6", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "opt/app/bin/app", "libc.so.6");
        match &resolution.status {
            ResolutionStatus::Resolved { mechanism, .. } => {
                assert_eq!(*mechanism, Mechanism::StandardDir(ByteString::from("/usr/lib")));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
        // Embedded candidate was probed (and missed) before the standard dirs.
        assert_eq!(resolution.tried[0].outcome, ProbeOutcome::Missing);
        assert!(matches!(resolution.tried[0].mechanism, Mechanism::EmbeddedPath(0)));
    }

    #[test]
    fn exhaustion_lists_all_candidates_in_order() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new().elf(
            "app",
            FixtureSpec::new().needing(["libmissing.so"]).with_runpath("$ORIGIN/lib:/vendor"),
        );
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libmissing.so");
        assert!(!resolution.resolved());
        let config = config_for(dir.path());
        // Two embedded candidates then every standard dir.
        assert_eq!(resolution.tried.len(), 2 + config.standard_dirs.len());
        assert!(matches!(resolution.tried[0].mechanism, Mechanism::EmbeddedPath(0)));
        assert!(matches!(resolution.tried[1].mechanism, Mechanism::EmbeddedPath(1)));
        assert!(resolution.tried[2..]
            .iter()
            .all(|c| matches!(c.mechanism, Mechanism::StandardDir(_))));
    }

    #[test]
    fn embedded_beats_standard_when_both_exist() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libdual.so"]).with_rpath("/vendor"))
            .elf("vendor/libdual.so", FixtureSpec::new().shared_object())
            .elf("usr/lib/libdual.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libdual.so");
        match &resolution.status {
            ResolutionStatus::Resolved { mechanism, .. } => {
                assert_eq!(*mechanism, Mechanism::EmbeddedPath(0));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
    }

    #[test]
    fn non_elf_match_skipped_and_recorded() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libx.so"]).with_rpath("/decoy"))
            .raw("decoy/libx.so", b"definitely not elf".to_vec())
            .elf("usr/lib/libx.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libx.so");
        assert_eq!(resolution.tried[0].outcome, ProbeOutcome::NotElf);
        match &resolution.status {
            ResolutionStatus::Resolved { mechanism, .. } => {
                assert_eq!(*mechanism, Mechanism::StandardDir(ByteString::from("/usr/lib")));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
    }

    #[test]
    fn escaping_symlink_never_resolves() {
        let outside = TempDir::new().unwrap();
        std::fs::write(outside.path().join("payload.so"), b"\x7fELFoutside").unwrap();

        let dir = TempDir::new().unwrap();
        let target = format!("../../{}/payload.so", outside.path().file_name().unwrap().to_str().unwrap());
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libevil.so"]).with_rpath("/lib"))
            .symlink("lib/libevil.so", target);
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libevil.so");
        assert!(!resolution.resolved());
        assert_eq!(resolution.tried[0].outcome, ProbeOutcome::SymlinkEscape);
    }

    #[test]
    fn absolute_symlink_target_is_rerooted() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libso.so"]).with_rpath("/lib"))
            .symlink("lib/libso.so", "/real/libso.so")
            .elf("real/libso.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libso.so");
        match &resolution.status {
            ResolutionStatus::Resolved { canonical_path, .. } => {
                assert!(canonical_path.to_escaped().ends_with("/real/libso.so"));
                assert!(lexpath::is_within(
                    canonical_path.as_bytes(),
                    config_for(dir.path()).root.as_bytes()
                ));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
    }

    #[test]
    fn symlink_loop_is_bounded() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["liba.so"]).with_rpath("/lib"))
            .symlink("lib/liba.so", "libb.so")
            .symlink("lib/libb.so", "liba.so");
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "liba.so");
        assert!(!resolution.resolved());
        assert_eq!(resolution.tried[0].outcome, ProbeOutcome::SymlinkLoop);
    }

    #[test]
    fn directory_with_matching_name_is_not_a_file() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libdir.so"]).with_rpath("/lib"))
            .dir("lib/libdir.so");
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libdir.so");
        assert_eq!(resolution.tried[0].outcome, ProbeOutcome::NotRegularFile);
    }

    #[test]
    fn absolute_literal_name_maps_under_sysroot() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["/opt/vendor/libv.so"]))
            .elf("opt/vendor/libv.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "/opt/vendor/libv.so");
        match &resolution.status {
            ResolutionStatus::Resolved { mechanism, host_path, .. } => {
                assert_eq!(*mechanism, Mechanism::LiteralPath);
                assert!(host_path.to_escaped().ends_with("/opt/vendor/libv.so"));
            }
            other => panic!("expected resolved, got {other:?}"),
        }
    }

    #[test]
    fn relative_literal_name_is_unresolvable() {
        let dir = TempDir::new().unwrap();
        build_sysroot(
            &SysrootSpec::new().elf("app", FixtureSpec::new().needing(["plugins/libp.so"])),
            dir.path(),
        )
        .unwrap();
        let resolution = resolve_in(dir.path(), "app", "plugins/libp.so");
        assert!(!resolution.resolved());
        assert!(resolution.tried.is_empty());
    }

    #[test]
    fn sysroot_must_exist_and_be_a_directory() {
        let dir = TempDir::new().unwrap();
        let file = dir.path().join("regular");
        std::fs::write(&file, b"x").unwrap();
        assert!(matches!(
            standard_dirs_for(62, &file),
            Err(ResolverError::SysrootMissing { .. })
        ));
        assert!(matches!(
            standard_dirs_for(62, &dir.path().join("absent")),
            Err(ResolverError::SysrootMissing { .. })
        ));
    }

    #[test]
    fn name_comparison_is_byte_exact() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("app", FixtureSpec::new().needing(["libCase.so"]).with_rpath("/lib"))
            .elf("lib/libcase.so", FixtureSpec::new().shared_object());
        build_sysroot(&spec, dir.path()).unwrap();

        let resolution = resolve_in(dir.path(), "app", "libCase.so");
        assert!(!resolution.resolved(), "lowercase decoy must not satisfy libCase.so");
    }
}
