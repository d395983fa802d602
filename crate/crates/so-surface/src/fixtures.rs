//! Synthetic ELF files and sysroot trees for hermetic testing.
//!
//! [`build_elf`] emits a minimal but valid ELF image straight from a
//! declarative [`FixtureSpec`]: identification, a program header table with
//! one `PT_LOAD` covering the dynamic data and string table, `PT_INTERP`
//! when an interpreter is declared, and a `PT_DYNAMIC` segment carrying the
//! declared `DT_NEEDED`/`DT_RPATH`/`DT_RUNPATH` entries. The generator is
//! written independently of the parser — no shared layout code — so
//! summarize-after-build roundtrips genuinely cross-check both sides.
//!
//! The images contain no machine code and no section headers and are not
//! runnable; the analyzer never needs to run them.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use so_surface_core::bytestr::ByteString;
use so_surface_core::elf::{
    ElfClass, ElfEndian, ObjectKind, DT_NEEDED, DT_NULL, DT_RPATH, DT_RUNPATH, DT_STRSZ, DT_STRTAB,
    PT_DYNAMIC, PT_INTERP, PT_LOAD,
};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture spec: {reason}")]
    SpecInvalid { reason: String },
    #[error("destination {dest:?} is not an empty directory")]
    DestNotEmpty { dest: PathBuf },
    #[error("io failure: {0}")]
    IoFailure(#[from] io::Error),
}

/// Intentional defects a fixture can carry, one per variant and nothing
/// else: the surrounding image stays valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Malformation {
    /// Omit the `DT_NULL` terminator from the dynamic array.
    MissingDtNull,
    /// Claim more program headers than the file holds.
    TruncatedPhTable,
    /// Add a `DT_NEEDED` entry whose string offset lies past `DT_STRSZ`.
    OutOfRangeStrOffset,
    /// Emit a second, identical `PT_INTERP` segment.
    DuplicateInterp,
}

/// Declarative description of one synthetic ELF image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub class: ElfClass,
    pub endianness: ElfEndian,
    pub machine: u16,
    pub object_kind: ObjectKind,
    pub interp: Option<ByteString>,
    pub needed: Vec<ByteString>,
    pub rpath: Option<ByteString>,
    pub runpath: Option<ByteString>,
    /// Added to every file offset to form virtual addresses, so tests can
    /// force vaddr ≠ offset.
    pub strtab_vaddr_bias: u64,
    pub malformations: BTreeSet<Malformation>,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            class: ElfClass::Elf64,
            endianness: ElfEndian::Little,
            machine: 62,
            object_kind: ObjectKind::Executable,
            interp: None,
            needed: Vec::new(),
            rpath: None,
            runpath: None,
            strtab_vaddr_bias: 0,
            malformations: BTreeSet::new(),
        }
    }
}

impl FixtureSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn shared_object(mut self) -> Self {
        self.object_kind = ObjectKind::SharedObject;
        self
    }

    pub fn with_class(mut self, class: ElfClass, endianness: ElfEndian) -> Self {
        self.class = class;
        self.endianness = endianness;
        self
    }

    pub fn with_machine(mut self, machine: u16) -> Self {
        self.machine = machine;
        self
    }

    pub fn with_interp(mut self, interp: impl Into<ByteString>) -> Self {
        self.interp = Some(interp.into());
        self
    }

    pub fn needing<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ByteString>,
    {
        self.needed = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_rpath(mut self, rpath: impl Into<ByteString>) -> Self {
        self.rpath = Some(rpath.into());
        self
    }

    pub fn with_runpath(mut self, runpath: impl Into<ByteString>) -> Self {
        self.runpath = Some(runpath.into());
        self
    }

    pub fn with_bias(mut self, bias: u64) -> Self {
        self.strtab_vaddr_bias = bias;
        self
    }

    pub fn with_malformation(mut self, m: Malformation) -> Self {
        self.malformations.insert(m);
        self
    }
}

/// Endianness- and class-aware append-only writer.
struct ImageWriter {
    buf: Vec<u8>,
    class: ElfClass,
    big: bool,
}

impl ImageWriter {
    fn u16(&mut self, v: u16) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.buf.extend_from_slice(&b);
    }

    fn u32(&mut self, v: u32) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.buf.extend_from_slice(&b);
    }

    fn u64(&mut self, v: u64) {
        let b = if self.big { v.to_be_bytes() } else { v.to_le_bytes() };
        self.buf.extend_from_slice(&b);
    }

    /// Class-sized address/offset/size field.
    fn word(&mut self, v: u64) {
        match self.class {
            ElfClass::Elf64 => self.u64(v),
            ElfClass::Elf32 => self.u32(v as u32),
        }
    }
}

struct Layout {
    ehsize: u64,
    phentsize: u64,
    phnum: u16,
    interp_off: u64,
    dyn_off: u64,
    file_len: u64,
}

/// Emits a parseable ELF image for the spec.
///
/// Malformations inject exactly their named defect; with none declared the
/// image satisfies every invariant the loader-view parser checks.
pub fn build_elf(spec: &FixtureSpec) -> Result<Vec<u8>, FixtureError> {
    validate(spec)?;

    let (ehsize, phentsize, dyn_entsize) = match spec.class {
        ElfClass::Elf64 => (64u64, 56u64, 16u64),
        ElfClass::Elf32 => (52u64, 32u64, 8u64),
    };

    // String table: index 0 is the conventional empty string.
    let mut strtab: Vec<u8> = vec![0];
    let mut offset_of = |s: &ByteString| -> u64 {
        let off = strtab.len() as u64;
        strtab.extend_from_slice(s.as_bytes());
        strtab.push(0);
        off
    };
    let needed_offs: Vec<u64> = spec.needed.iter().map(&mut offset_of).collect();
    let rpath_off = spec.rpath.as_ref().map(&mut offset_of);
    let runpath_off = spec.runpath.as_ref().map(&mut offset_of);
    let strsz = strtab.len() as u64;

    let mut dynamic: Vec<(i64, DynSlot)> =
        needed_offs.iter().map(|&o| (DT_NEEDED, DynSlot::Value(o))).collect();
    if spec.malformations.contains(&Malformation::OutOfRangeStrOffset) {
        dynamic.push((DT_NEEDED, DynSlot::Value(strsz + 7)));
    }
    if let Some(o) = rpath_off {
        dynamic.push((DT_RPATH, DynSlot::Value(o)));
    }
    if let Some(o) = runpath_off {
        dynamic.push((DT_RUNPATH, DynSlot::Value(o)));
    }
    let has_dynamic =
        !dynamic.is_empty() || spec.malformations.contains(&Malformation::MissingDtNull);
    if has_dynamic {
        dynamic.push((DT_STRTAB, DynSlot::StrtabVaddr));
        dynamic.push((DT_STRSZ, DynSlot::Value(strsz)));
        if !spec.malformations.contains(&Malformation::MissingDtNull) {
            dynamic.push((DT_NULL, DynSlot::Value(0)));
        }
    }

    let interp_copies = spec.interp.iter().len()
        + spec.malformations.contains(&Malformation::DuplicateInterp) as usize;
    let phnum = (1 + interp_copies + has_dynamic as usize) as u16;

    let interp_off = ehsize + u64::from(phnum) * phentsize;
    let interp_len = spec.interp.as_ref().map_or(0, |s| s.len() as u64 + 1);
    let dyn_off = (interp_off + interp_len + 7) & !7;
    let dyn_len = dynamic.len() as u64 * dyn_entsize;
    let strtab_off = dyn_off + dyn_len;
    let file_len = strtab_off + strsz;

    if spec.class == ElfClass::Elf32 && file_len + spec.strtab_vaddr_bias > u64::from(u32::MAX) {
        return Err(FixtureError::SpecInvalid {
            reason: "image does not fit 32-bit address fields".into(),
        });
    }

    let layout = Layout { ehsize, phentsize, phnum, interp_off, dyn_off, file_len };

    let mut w = ImageWriter {
        buf: Vec::with_capacity(file_len as usize),
        class: spec.class,
        big: spec.endianness == ElfEndian::Big,
    };
    write_ehdr(&mut w, spec, &layout);
    write_phdrs(&mut w, spec, &layout, interp_len, dyn_len);

    if let Some(interp) = &spec.interp {
        w.buf.extend_from_slice(interp.as_bytes());
        w.buf.push(0);
    }
    while (w.buf.len() as u64) < dyn_off {
        w.buf.push(0);
    }
    for (tag, slot) in &dynamic {
        let value = match slot {
            DynSlot::Value(v) => *v,
            DynSlot::StrtabVaddr => strtab_off + spec.strtab_vaddr_bias,
        };
        w.word(*tag as u64);
        w.word(value);
    }
    w.buf.extend_from_slice(&strtab);
    debug_assert_eq!(w.buf.len() as u64, file_len);

    if spec.malformations.contains(&Malformation::TruncatedPhTable) {
        let phnum_field = match spec.class {
            ElfClass::Elf64 => 0x38,
            ElfClass::Elf32 => 0x2c,
        };
        let bogus = phnum + 64;
        let bytes = if spec.endianness == ElfEndian::Big {
            bogus.to_be_bytes()
        } else {
            bogus.to_le_bytes()
        };
        w.buf[phnum_field..phnum_field + 2].copy_from_slice(&bytes);
    }
    Ok(w.buf)
}

enum DynSlot {
    Value(u64),
    StrtabVaddr,
}

fn validate(spec: &FixtureSpec) -> Result<(), FixtureError> {
    let invalid = |reason: &str| FixtureError::SpecInvalid { reason: reason.into() };
    let strings = spec
        .needed
        .iter()
        .chain(spec.interp.iter())
        .chain(spec.rpath.iter())
        .chain(spec.runpath.iter());
    for s in strings {
        if s.as_bytes().contains(&0) {
            return Err(invalid("declared string contains a NUL byte"));
        }
    }
    if spec.malformations.contains(&Malformation::DuplicateInterp) && spec.interp.is_none() {
        return Err(invalid("DuplicateInterp requires an interpreter"));
    }
    Ok(())
}

fn write_ehdr(w: &mut ImageWriter, spec: &FixtureSpec, layout: &Layout) {
    w.buf.extend_from_slice(&[0x7f, b'E', b'L', b'F']);
    w.buf.push(match spec.class {
        ElfClass::Elf32 => 1,
        ElfClass::Elf64 => 2,
    });
    w.buf.push(match spec.endianness {
        ElfEndian::Little => 1,
        ElfEndian::Big => 2,
    });
    w.buf.push(1); // EI_VERSION
    w.buf.extend_from_slice(&[0; 9]); // OS ABI, ABI version, padding
    w.u16(match spec.object_kind {
        ObjectKind::Executable => 2,
        ObjectKind::SharedObject => 3,
        ObjectKind::Other(code) => code,
    });
    w.u16(spec.machine);
    w.u32(1); // e_version
    w.word(0); // e_entry
    w.word(layout.ehsize); // e_phoff: table follows the header
    w.word(0); // e_shoff: no section headers
    w.u32(0); // e_flags
    w.u16(layout.ehsize as u16);
    w.u16(layout.phentsize as u16);
    w.u16(layout.phnum);
    w.u16(0); // e_shentsize
    w.u16(0); // e_shnum
    w.u16(0); // e_shstrndx
}

fn write_phdrs(
    w: &mut ImageWriter,
    spec: &FixtureSpec,
    layout: &Layout,
    interp_len: u64,
    dyn_len: u64,
) {
    let bias = spec.strtab_vaddr_bias;
    let phdr = |w: &mut ImageWriter, p_type: u32, off: u64, filesz: u64| {
        w.u32(p_type);
        if spec.class == ElfClass::Elf64 {
            w.u32(4); // p_flags (R)
        }
        w.word(off);
        w.word(off + bias); // p_vaddr
        w.word(off + bias); // p_paddr
        w.word(filesz);
        w.word(filesz); // p_memsz
        if spec.class == ElfClass::Elf32 {
            w.u32(4); // p_flags
        }
        w.word(1); // p_align
    };
    phdr(w, PT_LOAD, 0, layout.file_len);
    if spec.interp.is_some() {
        phdr(w, PT_INTERP, layout.interp_off, interp_len);
        if spec.malformations.contains(&Malformation::DuplicateInterp) {
            phdr(w, PT_INTERP, layout.interp_off, interp_len);
        }
    }
    if dyn_len > 0 || spec.malformations.contains(&Malformation::MissingDtNull) {
        phdr(w, PT_DYNAMIC, layout.dyn_off, dyn_len);
    }
}

/// What to place at one path inside a synthetic sysroot.
#[derive(Debug, Clone)]
pub enum EntryContent {
    ElfFile(FixtureSpec),
    RawBytes(Vec<u8>),
    Symlink(ByteString),
    Dir,
}

#[derive(Debug, Clone)]
pub struct SysrootEntry {
    /// Sysroot-relative path; no leading `/`, no `..` components.
    pub path: ByteString,
    pub content: EntryContent,
}

/// Declarative description of a sysroot directory tree.
#[derive(Debug, Clone, Default)]
pub struct SysrootSpec {
    pub entries: Vec<SysrootEntry>,
}

impl SysrootSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, path: impl Into<ByteString>, content: EntryContent) -> Self {
        self.entries.push(SysrootEntry { path: path.into(), content });
        self
    }

    pub fn elf(self, path: impl Into<ByteString>, spec: FixtureSpec) -> Self {
        self.with(path, EntryContent::ElfFile(spec))
    }

    pub fn raw(self, path: impl Into<ByteString>, bytes: impl Into<Vec<u8>>) -> Self {
        self.with(path, EntryContent::RawBytes(bytes.into()))
    }

    pub fn symlink(self, path: impl Into<ByteString>, target: impl Into<ByteString>) -> Self {
        self.with(path, EntryContent::Symlink(target.into()))
    }

    pub fn dir(self, path: impl Into<ByteString>) -> Self {
        self.with(path, EntryContent::Dir)
    }
}

/// Materializes the tree under `dest`, which must be an empty directory.
/// Returns every created path (including intermediate directories) in
/// creation order.
pub fn build_sysroot(spec: &SysrootSpec, dest: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    if !dest.is_dir() || fs::read_dir(dest)?.next().is_some() {
        return Err(FixtureError::DestNotEmpty { dest: dest.to_path_buf() });
    }

    let mut manifest = Vec::new();
    for entry in &spec.entries {
        validate_rel_path(&entry.path)?;
        let full = dest.join(entry.path.as_path());
        if let Some(parent) = full.parent() {
            create_dirs_recording(dest, parent, &mut manifest)?;
        }
        match &entry.content {
            EntryContent::ElfFile(fixture) => fs::write(&full, build_elf(fixture)?)?,
            EntryContent::RawBytes(bytes) => fs::write(&full, bytes)?,
            EntryContent::Symlink(target) => std::os::unix::fs::symlink(target.as_path(), &full)?,
            EntryContent::Dir => {
                if !full.is_dir() {
                    fs::create_dir(&full)?;
                } else {
                    continue;
                }
            }
        }
        manifest.push(full);
    }
    Ok(manifest)
}

fn validate_rel_path(path: &ByteString) -> Result<(), FixtureError> {
    let bytes = path.as_bytes();
    let bad = bytes.is_empty()
        || bytes[0] == b'/'
        || bytes.contains(&0)
        || bytes.split(|&b| b == b'/').any(|c| c == b"..");
    if bad {
        return Err(FixtureError::SpecInvalid { reason: format!("bad sysroot-relative path {path}") });
    }
    Ok(())
}

fn create_dirs_recording(
    root: &Path,
    dir: &Path,
    manifest: &mut Vec<PathBuf>,
) -> Result<(), FixtureError> {
    if dir == root || dir.is_dir() {
        return Ok(());
    }
    if let Some(parent) = dir.parent() {
        create_dirs_recording(root, parent, manifest)?;
    }
    fs::create_dir(dir)?;
    manifest.push(dir.to_path_buf());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use so_surface_core::elf::{summarize, ElfError, SummaryWarning};
    use tempfile::TempDir;

    #[test]
    fn roundtrip_of_illustrative_configuration() {
        let spec = FixtureSpec::new()
            .with_interp("/lib64/ld-linux-x86-64.so.2")
            .needing(["libhello.so", "libc.so.6"])
            .with_runpath("$ORIGIN/lib");
        let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
        assert_eq!(summary.interp, spec.interp);
        assert_eq!(summary.needed, spec.needed);
        assert_eq!(summary.runpath, vec![ByteString::from("$ORIGIN/lib")]);
        assert!(summary.rpath.is_empty());
        assert_eq!(summary.machine, 62);
        assert!(summary.warnings.is_empty());
    }

    #[test]
    fn empty_spec_has_empty_lists_and_no_dynamic() {
        let summary = summarize(&build_elf(&FixtureSpec::new()).unwrap()).unwrap();
        assert!(summary.needed.is_empty());
        assert!(summary.rpath.is_empty() && summary.runpath.is_empty());
        assert!(!summary.has_dynamic);
        assert!(summary.interp.is_none());
    }

    #[test]
    fn vaddr_bias_still_parses() {
        let spec = FixtureSpec::new().needing(["libx.so"]).with_bias(0x10000);
        let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
        assert_eq!(summary.needed, vec![ByteString::from("libx.so")]);
    }

    #[test]
    fn all_class_endianness_combinations_agree() {
        let combos = [
            (ElfClass::Elf64, ElfEndian::Little),
            (ElfClass::Elf64, ElfEndian::Big),
            (ElfClass::Elf32, ElfEndian::Little),
            (ElfClass::Elf32, ElfEndian::Big),
        ];
        for (class, endian) in combos {
            let spec = FixtureSpec::new()
                .with_class(class, endian)
                .with_machine(40)
                .with_interp("/lib/ld.so.1")
                .needing(["liba.so", "libb.so"])
                .with_rpath("/vendor/lib:$ORIGIN");
            let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
            assert_eq!(summary.ident.class, class);
            assert_eq!(summary.ident.endianness, endian);
            assert_eq!(summary.machine, 40);
            assert_eq!(summary.needed, spec.needed);
            assert_eq!(summary.rpath, vec![ByteString::from("/vendor/lib:$ORIGIN")]);
            assert_eq!(summary.interp, spec.interp);
        }
    }

    #[test]
    fn missing_dt_null_warns() {
        let spec =
            FixtureSpec::new().needing(["liba.so"]).with_malformation(Malformation::MissingDtNull);
        let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
        assert_eq!(summary.needed, vec![ByteString::from("liba.so")]);
        assert!(summary.warnings.contains(&SummaryWarning::MissingTerminator));
    }

    #[test]
    fn truncated_ph_table_fails_parse() {
        let spec = FixtureSpec::new().with_malformation(Malformation::TruncatedPhTable);
        assert!(matches!(summarize(&build_elf(&spec).unwrap()), Err(ElfError::Truncated { .. })));
    }

    #[test]
    fn out_of_range_offset_warns_and_keeps_good_entries() {
        let spec = FixtureSpec::new()
            .needing(["liba.so"])
            .with_malformation(Malformation::OutOfRangeStrOffset);
        let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
        assert_eq!(summary.needed, vec![ByteString::from("liba.so")]);
        assert!(summary
            .warnings
            .iter()
            .any(|w| matches!(w, SummaryWarning::OutOfRangeString { .. })));
    }

    #[test]
    fn duplicate_interp_warns_first_wins() {
        let spec = FixtureSpec::new()
            .with_interp("/lib/ld.so")
            .with_malformation(Malformation::DuplicateInterp);
        let summary = summarize(&build_elf(&spec).unwrap()).unwrap();
        assert_eq!(summary.interp, Some(ByteString::from("/lib/ld.so")));
        assert!(summary
            .warnings
            .iter()
            .any(|w| matches!(w, SummaryWarning::DuplicateSegment { .. })));
    }

    #[test]
    fn duplicate_interp_without_interp_is_invalid() {
        let spec = FixtureSpec::new().with_malformation(Malformation::DuplicateInterp);
        assert!(matches!(build_elf(&spec), Err(FixtureError::SpecInvalid { .. })));
    }

    #[test]
    fn nul_in_string_is_invalid() {
        let spec = FixtureSpec::new().needing([ByteString::new(b"lib\0a.so".to_vec())]);
        assert!(matches!(build_elf(&spec), Err(FixtureError::SpecInvalid { .. })));
    }

    #[test]
    fn sysroot_tree_materializes_in_order() {
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new()
            .elf("opt/app/bin/app", FixtureSpec::new().needing(["libhello.so"]))
            .raw("opt/app/README", b"hi".to_vec())
            .symlink("lib/link.so", "../opt/app/bin/app");
        let manifest = build_sysroot(&spec, dir.path()).unwrap();
        assert!(manifest.iter().any(|p| p.ends_with("opt/app/bin/app")));
        assert!(dir.path().join("opt/app/bin/app").is_file());
        assert!(dir.path().join("lib/link.so").is_symlink());
        // Parents recorded before the files inside them.
        let bin_pos = manifest.iter().position(|p| p.ends_with("opt/app/bin")).unwrap();
        let app_pos = manifest.iter().position(|p| p.ends_with("opt/app/bin/app")).unwrap();
        assert!(bin_pos < app_pos);
    }

    #[test]
    fn sysroot_rejects_nonempty_dest() {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("existing"), b"x").unwrap();
        let err = build_sysroot(&SysrootSpec::new(), dir.path()).unwrap_err();
        assert!(matches!(err, FixtureError::DestNotEmpty { .. }));
    }

    #[test]
    fn empty_sysroot_spec_is_empty_manifest() {
        let dir = TempDir::new().unwrap();
        assert!(build_sysroot(&SysrootSpec::new(), dir.path()).unwrap().is_empty());
    }

    #[test]
    fn sysroot_rejects_escaping_entry_paths() {
        for bad in ["/abs", "../up", "a/../../b", ""] {
            let spec = SysrootSpec::new().dir(bad);
            let dir = TempDir::new().unwrap();
            assert!(
                matches!(build_sysroot(&spec, dir.path()), Err(FixtureError::SpecInvalid { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn symlink_targets_may_escape() {
        // The resolver must treat these as adversarial input, so the
        // builder has to be able to create them.
        let dir = TempDir::new().unwrap();
        let spec = SysrootSpec::new().symlink("lib/evil.so", "../../../../etc/passwd");
        build_sysroot(&spec, dir.path()).unwrap();
        assert!(dir.path().join("lib/evil.so").is_symlink());
    }
}
