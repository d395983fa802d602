//! Static shared-object hijack surface analysis.
//!
//! Given an ELF binary and a sysroot, this crate resolves every `DT_NEEDED`
//! dependency the way the dynamic loader's embedded-path precedence would —
//! `DT_RPATH`/`DT_RUNPATH` (with `$ORIGIN` expansion) before standard
//! library directories — walks a bounded two-level dependency closure, and
//! reports the annotated tree with explicit findings about where resolution
//! precedence could be gained. Nothing is ever executed or loaded: the
//! analysis reads bytes and directory listings only.

pub mod cli;
pub mod closure;
pub mod fixtures;
pub mod report;
pub mod resolver;

pub use so_surface_core::{
    bytestr::ByteString,
    elf::{self, ElfError, ElfSummary},
    lexpath,
    search_paths::{self, ExpandedPath, PathSource, SearchPathEntry},
    sysroot::{self, SysrootConfig},
};
