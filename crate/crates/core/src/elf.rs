//! Loader-view ELF parsing from raw file bytes.
//!
//! Only the structures the dynamic loader itself consults are parsed: the
//! identification bytes, the ELF header's program-header-table fields, the
//! program headers, `PT_INTERP`, and the dynamic array with its string
//! table. Section headers are ignored entirely, so stripped and
//! section-header-less binaries parse the same as pristine ones. All reads
//! are bounds-checked against the input buffer and honor the file's declared
//! endianness; malformed input produces a typed error, never a panic.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::bytestr::ByteString;

/// Hard cap on analyzable input size, in bytes (1 GiB).
pub const MAX_FILE_LEN: u64 = 1 << 30;

pub const DT_NULL: i64 = 0;
pub const DT_NEEDED: i64 = 1;
pub const DT_STRTAB: i64 = 5;
pub const DT_STRSZ: i64 = 10;
pub const DT_RPATH: i64 = 15;
pub const DT_RUNPATH: i64 = 29;

pub const PT_LOAD: u32 = 1;
pub const PT_DYNAMIC: u32 = 2;
pub const PT_INTERP: u32 = 3;
pub const PT_NOTE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElfClass {
    Elf32,
    Elf64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElfEndian {
    Little,
    Big,
}

/// Decoded identification bytes: file class and byte order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElfIdent {
    pub class: ElfClass,
    pub endianness: ElfEndian,
}

/// Object kind from `e_type`. Both executables and shared objects are
/// accepted as analysis roots; the kind is reported, never gated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectKind {
    Executable,
    SharedObject,
    Other(u16),
}

impl ObjectKind {
    fn from_code(code: u16) -> Self {
        match code {
            2 => ObjectKind::Executable,
            3 => ObjectKind::SharedObject,
            other => ObjectKind::Other(other),
        }
    }
}

/// The ELF header fields needed to locate the program header table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElfHeader {
    pub ident: ElfIdent,
    pub object_kind: ObjectKind,
    pub machine: u16,
    pub phoff: u64,
    pub phentsize: u16,
    pub phnum: u16,
}

/// Program header kind, decoded from `p_type`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Load,
    Dynamic,
    Interp,
    Note,
    Other(u32),
}

impl SegmentKind {
    fn from_code(code: u32) -> Self {
        match code {
            PT_LOAD => SegmentKind::Load,
            PT_DYNAMIC => SegmentKind::Dynamic,
            PT_INTERP => SegmentKind::Interp,
            PT_NOTE => SegmentKind::Note,
            other => SegmentKind::Other(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgramHeader {
    pub kind: SegmentKind,
    pub offset: u64,
    pub vaddr: u64,
    pub filesz: u64,
    pub memsz: u64,
}

/// One entry of the dynamic array. The meaning of `value` depends on `tag`:
/// for string-bearing tags it is an offset into the dynamic string table,
/// for `DT_STRTAB` it is a virtual address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DynamicEntry {
    pub tag: i64,
    pub value: u64,
}

/// The dynamic array up to (excluding) its `DT_NULL` terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicArray {
    pub entries: Vec<DynamicEntry>,
    /// False when the segment ended before any `DT_NULL` was seen.
    pub terminated: bool,
}

/// Non-fatal oddities observed while summarizing a file. These stay attached
/// to the summary so reports can surface them per node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SummaryWarning {
    /// More than one segment of the named kind; the first one was used.
    DuplicateSegment { segment: ByteString },
    /// The dynamic array ran to the end of its segment without a `DT_NULL`.
    MissingTerminator,
    /// A string offset did not name a NUL-terminated string inside the
    /// `DT_STRSZ` bound; the entry was skipped.
    OutOfRangeString { tag: i64, offset: u64 },
    /// String-bearing dynamic entries exist but no `DT_STRTAB` does.
    MissingStringTable,
}

/// All loader-relevant metadata extracted from one ELF object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElfSummary {
    pub ident: ElfIdent,
    pub object_kind: ObjectKind,
    pub machine: u16,
    /// `PT_INTERP` contents up to the first NUL, when the segment exists.
    pub interp: Option<ByteString>,
    /// `DT_NEEDED` names in dynamic-array order.
    pub needed: Vec<ByteString>,
    /// Raw `DT_RPATH` path-list strings, one per entry, in order.
    pub rpath: Vec<ByteString>,
    /// Raw `DT_RUNPATH` path-list strings, one per entry, in order.
    pub runpath: Vec<ByteString>,
    pub has_dynamic: bool,
    pub warnings: Vec<SummaryWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElfError {
    /// The magic bytes are not `0x7f 'E' 'L' 'F'`.
    NotElf,
    UnsupportedClass(u8),
    UnsupportedEndianness(u8),
    /// A required structure extends past the end of the input.
    Truncated { context: &'static str },
    /// `e_phentsize` does not match the file class.
    BadPhentsize { expected: u16, actual: u16 },
    /// No `PT_LOAD` segment maps the virtual address.
    UnmappedAddress { vaddr: u64 },
    NoDynamicSegment,
    /// `DT_STRTAB` names a virtual address outside every `PT_LOAD`.
    StrtabUnmapped { vaddr: u64 },
    FileTooLarge { len: u64 },
}

impl fmt::Display for ElfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElfError::NotElf => write!(f, "not an ELF file (bad magic)"),
            ElfError::UnsupportedClass(v) => write!(f, "unsupported ELF class byte {v:#04x}"),
            ElfError::UnsupportedEndianness(v) => {
                write!(f, "unsupported ELF endianness byte {v:#04x}")
            }
            ElfError::Truncated { context } => write!(f, "truncated input while reading {context}"),
            ElfError::BadPhentsize { expected, actual } => write!(
                f,
                "program header entry size {actual} does not match class (expected {expected})"
            ),
            ElfError::UnmappedAddress { vaddr } => {
                write!(f, "virtual address {vaddr:#x} is not mapped by any PT_LOAD")
            }
            ElfError::NoDynamicSegment => write!(f, "no PT_DYNAMIC segment"),
            ElfError::StrtabUnmapped { vaddr } => {
                write!(f, "DT_STRTAB address {vaddr:#x} is not mapped by any PT_LOAD")
            }
            ElfError::FileTooLarge { len } => {
                write!(f, "input of {len} bytes exceeds the {MAX_FILE_LEN}-byte cap")
            }
        }
    }
}

impl core::error::Error for ElfError {}

type Result<T> = core::result::Result<T, ElfError>;

/// Bounds-checked reads with a fixed endianness.
struct Reader<'a> {
    data: &'a [u8],
    endian: ElfEndian,
}

impl<'a> Reader<'a> {
    fn bytes(&self, off: u64, len: u64, context: &'static str) -> Result<&'a [u8]> {
        let end = off.checked_add(len).ok_or(ElfError::Truncated { context })?;
        if end > self.data.len() as u64 {
            return Err(ElfError::Truncated { context });
        }
        Ok(&self.data[off as usize..end as usize])
    }

    fn u16(&self, off: u64, context: &'static str) -> Result<u16> {
        let b = self.bytes(off, 2, context)?;
        Ok(match self.endian {
            ElfEndian::Little => u16::from_le_bytes([b[0], b[1]]),
            ElfEndian::Big => u16::from_be_bytes([b[0], b[1]]),
        })
    }

    fn u32(&self, off: u64, context: &'static str) -> Result<u32> {
        let b = self.bytes(off, 4, context)?;
        let arr = [b[0], b[1], b[2], b[3]];
        Ok(match self.endian {
            ElfEndian::Little => u32::from_le_bytes(arr),
            ElfEndian::Big => u32::from_be_bytes(arr),
        })
    }

    fn u64(&self, off: u64, context: &'static str) -> Result<u64> {
        let b = self.bytes(off, 8, context)?;
        let arr = [b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]];
        Ok(match self.endian {
            ElfEndian::Little => u64::from_le_bytes(arr),
            ElfEndian::Big => u64::from_be_bytes(arr),
        })
    }
}

/// Decodes the identification bytes at the start of `bytes`.
pub fn parse_ident(bytes: &[u8]) -> Result<ElfIdent> {
    if bytes.len() < 16 {
        return Err(ElfError::Truncated { context: "identification bytes" });
    }
    if bytes[0..4] != [0x7f, b'E', b'L', b'F'] {
        return Err(ElfError::NotElf);
    }
    let class = match bytes[4] {
        1 => ElfClass::Elf32,
        2 => ElfClass::Elf64,
        other => return Err(ElfError::UnsupportedClass(other)),
    };
    let endianness = match bytes[5] {
        1 => ElfEndian::Little,
        2 => ElfEndian::Big,
        other => return Err(ElfError::UnsupportedEndianness(other)),
    };
    Ok(ElfIdent { class, endianness })
}

/// Parses the ELF header fields that locate the program header table.
///
/// Verifies that `e_phentsize` matches the file class and that the whole
/// program header table lies within the input before anything reads it.
pub fn parse_header(bytes: &[u8]) -> Result<ElfHeader> {
    let ident = parse_ident(bytes)?;
    let r = Reader { data: bytes, endian: ident.endianness };

    let object_kind = ObjectKind::from_code(r.u16(0x10, "elf header")?);
    let machine = r.u16(0x12, "elf header")?;

    let (phoff, phentsize_off, phnum_off, expected_entsize) = match ident.class {
        ElfClass::Elf64 => (r.u64(0x20, "elf header")?, 0x36, 0x38, 56),
        ElfClass::Elf32 => (u64::from(r.u32(0x1c, "elf header")?), 0x2a, 0x2c, 32),
    };
    let phentsize = r.u16(phentsize_off, "elf header")?;
    let phnum = r.u16(phnum_off, "elf header")?;

    if phnum > 0 && phentsize != expected_entsize {
        return Err(ElfError::BadPhentsize { expected: expected_entsize, actual: phentsize });
    }

    let table_len = u64::from(phnum) * u64::from(phentsize);
    let table_end = phoff
        .checked_add(table_len)
        .ok_or(ElfError::Truncated { context: "program header table" })?;
    if table_end > bytes.len() as u64 {
        return Err(ElfError::Truncated { context: "program header table" });
    }

    Ok(ElfHeader { ident, object_kind, machine, phoff, phentsize, phnum })
}

/// Reads the program header table; exactly `header.phnum` entries, in table
/// order. Unknown `p_type` values decode to [`SegmentKind::Other`].
pub fn parse_program_headers(bytes: &[u8], header: &ElfHeader) -> Result<Vec<ProgramHeader>> {
    let r = Reader { data: bytes, endian: header.ident.endianness };
    let mut out = Vec::with_capacity(header.phnum as usize);
    for i in 0..u64::from(header.phnum) {
        let base = header
            .phoff
            .checked_add(i * u64::from(header.phentsize))
            .ok_or(ElfError::Truncated { context: "program header table" })?;
        let ctx = "program header table";
        let entry = match header.ident.class {
            ElfClass::Elf64 => ProgramHeader {
                kind: SegmentKind::from_code(r.u32(base, ctx)?),
                offset: r.u64(base + 8, ctx)?,
                vaddr: r.u64(base + 16, ctx)?,
                filesz: r.u64(base + 32, ctx)?,
                memsz: r.u64(base + 40, ctx)?,
            },
            ElfClass::Elf32 => ProgramHeader {
                kind: SegmentKind::from_code(r.u32(base, ctx)?),
                offset: u64::from(r.u32(base + 4, ctx)?),
                vaddr: u64::from(r.u32(base + 8, ctx)?),
                filesz: u64::from(r.u32(base + 16, ctx)?),
                memsz: u64::from(r.u32(base + 20, ctx)?),
            },
        };
        out.push(entry);
    }
    Ok(out)
}

/// Returns the `PT_INTERP` contents up to the first NUL, if such a segment
/// exists. With several `PT_INTERP` segments the first in table order wins.
pub fn extract_interp(bytes: &[u8], phdrs: &[ProgramHeader]) -> Result<Option<ByteString>> {
    let Some(ph) = phdrs.iter().find(|p| p.kind == SegmentKind::Interp) else {
        return Ok(None);
    };
    let r = Reader { data: bytes, endian: ElfEndian::Little };
    let seg = r.bytes(ph.offset, ph.filesz, "interp segment")?;
    let content = match seg.iter().position(|&b| b == 0) {
        Some(nul) => &seg[..nul],
        None => seg,
    };
    Ok(Some(ByteString::from(content)))
}

/// Maps a virtual address to a file offset through the first `PT_LOAD`
/// segment (in table order) whose file-backed range contains it.
pub fn vaddr_to_offset(phdrs: &[ProgramHeader], vaddr: u64) -> Result<u64> {
    for ph in phdrs {
        if ph.kind == SegmentKind::Load && vaddr >= ph.vaddr && vaddr - ph.vaddr < ph.filesz {
            return Ok(vaddr - ph.vaddr + ph.offset);
        }
    }
    Err(ElfError::UnmappedAddress { vaddr })
}

/// Reads the dynamic array out of the first `PT_DYNAMIC` segment.
///
/// Iteration stops at the first `DT_NULL` (excluded from the result) or at
/// the end of the segment, whichever comes first; a missing terminator is
/// reported through [`DynamicArray::terminated`].
pub fn parse_dynamic(
    bytes: &[u8],
    ident: ElfIdent,
    phdrs: &[ProgramHeader],
) -> Result<DynamicArray> {
    let Some(ph) = phdrs.iter().find(|p| p.kind == SegmentKind::Dynamic) else {
        return Err(ElfError::NoDynamicSegment);
    };
    let r = Reader { data: bytes, endian: ident.endianness };
    r.bytes(ph.offset, ph.filesz, "dynamic segment")?;

    let entsize: u64 = match ident.class {
        ElfClass::Elf64 => 16,
        ElfClass::Elf32 => 8,
    };
    let count = ph.filesz / entsize;

    let mut entries = Vec::new();
    let mut terminated = false;
    for i in 0..count {
        let base = ph.offset + i * entsize;
        let (tag, value) = match ident.class {
            ElfClass::Elf64 => (
                r.u64(base, "dynamic segment")? as i64,
                r.u64(base + 8, "dynamic segment")?,
            ),
            ElfClass::Elf32 => (
                i64::from(r.u32(base, "dynamic segment")? as i32),
                u64::from(r.u32(base + 4, "dynamic segment")?),
            ),
        };
        if tag == DT_NULL {
            terminated = true;
            break;
        }
        entries.push(DynamicEntry { tag, value });
    }
    Ok(DynamicArray { entries, terminated })
}

/// Extracts every loader-relevant field from one ELF image.
///
/// Pure function of `bytes`: identical input yields an identical summary.
/// String values are resolved through `DT_STRTAB` (a virtual address,
/// mapped to a file offset via the `PT_LOAD` table) and bounded by
/// `DT_STRSZ`; an entry whose string cannot be read within those bounds is
/// skipped with a per-entry warning rather than failing the summary.
pub fn summarize(bytes: &[u8]) -> Result<ElfSummary> {
    if bytes.len() as u64 > MAX_FILE_LEN {
        return Err(ElfError::FileTooLarge { len: bytes.len() as u64 });
    }
    let header = parse_header(bytes)?;
    let phdrs = parse_program_headers(bytes, &header)?;
    let mut warnings = Vec::new();

    if phdrs.iter().filter(|p| p.kind == SegmentKind::Interp).count() > 1 {
        warnings.push(SummaryWarning::DuplicateSegment { segment: ByteString::from("PT_INTERP") });
    }
    let interp = extract_interp(bytes, &phdrs)?;

    let dynamic_count = phdrs.iter().filter(|p| p.kind == SegmentKind::Dynamic).count();
    if dynamic_count > 1 {
        warnings
            .push(SummaryWarning::DuplicateSegment { segment: ByteString::from("PT_DYNAMIC") });
    }

    let mut summary = ElfSummary {
        ident: header.ident,
        object_kind: header.object_kind,
        machine: header.machine,
        interp,
        needed: Vec::new(),
        rpath: Vec::new(),
        runpath: Vec::new(),
        has_dynamic: dynamic_count > 0,
        warnings,
    };
    if dynamic_count == 0 {
        return Ok(summary);
    }

    let dynamic = parse_dynamic(bytes, header.ident, &phdrs)?;
    if !dynamic.terminated {
        summary.warnings.push(SummaryWarning::MissingTerminator);
    }

    let strtab = dynamic.entries.iter().find(|e| e.tag == DT_STRTAB).map(|e| e.value);
    let strsz = dynamic.entries.iter().find(|e| e.tag == DT_STRSZ).map_or(0, |e| e.value);

    let string_entries: Vec<&DynamicEntry> = dynamic
        .entries
        .iter()
        .filter(|e| matches!(e.tag, DT_NEEDED | DT_RPATH | DT_RUNPATH))
        .collect();
    if string_entries.is_empty() {
        return Ok(summary);
    }

    let Some(strtab_vaddr) = strtab else {
        summary.warnings.push(SummaryWarning::MissingStringTable);
        return Ok(summary);
    };
    let strtab_off = vaddr_to_offset(&phdrs, strtab_vaddr)
        .map_err(|_| ElfError::StrtabUnmapped { vaddr: strtab_vaddr })?;

    // The declared table may extend past the end of the file; reads are
    // clamped to what is actually present.
    let avail = (bytes.len() as u64).saturating_sub(strtab_off);
    let effective = strsz.min(avail);
    let table = &bytes[strtab_off as usize..(strtab_off + effective) as usize];

    for entry in string_entries {
        match read_strtab_string(table, strsz, entry.value) {
            Some(s) => match entry.tag {
                DT_NEEDED => summary.needed.push(s),
                DT_RPATH => summary.rpath.push(s),
                DT_RUNPATH => summary.runpath.push(s),
                _ => unreachable!(),
            },
            None => summary
                .warnings
                .push(SummaryWarning::OutOfRangeString { tag: entry.tag, offset: entry.value }),
        }
    }
    Ok(summary)
}

/// Reads the NUL-terminated string at `offset`, requiring both the offset
/// and the terminator to fall inside the `DT_STRSZ` bound and the file.
fn read_strtab_string(table: &[u8], strsz: u64, offset: u64) -> Option<ByteString> {
    if offset >= strsz || offset >= table.len() as u64 {
        return None;
    }
    let tail = &table[offset as usize..];
    let nul = tail.iter().position(|&b| b == 0)?;
    Some(ByteString::from(&tail[..nul]))
}
