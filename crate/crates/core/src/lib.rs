//! Loader-view ELF metadata extraction and embedded search-path decoding.
//!
//! This crate contains the pure, allocation-only core of the analyzer: it
//! parses loader-relevant ELF metadata (identification, program headers,
//! `PT_INTERP`, the dynamic segment and its string table) directly from raw
//! file bytes, and decodes embedded `DT_RPATH`/`DT_RUNPATH` search paths
//! including `$ORIGIN` expansion and sysroot mapping. No filesystem access,
//! no process execution, no host state: every function here is a pure
//! function of its inputs.
//!
//! Filesystem-facing resolution, the bounded dependency closure, report
//! rendering and the CLI live in the companion `so-surface` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bytestr;
pub mod elf;
pub mod lexpath;
pub mod search_paths;
pub mod sysroot;

pub use bytestr::ByteString;
pub use elf::{ElfError, ElfSummary};
pub use search_paths::{ExpandedPath, PathSource, SearchPathEntry};
pub use sysroot::SysrootConfig;
