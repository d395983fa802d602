//! Sysroot configuration and lexical mapping of embedded paths under it.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bytestr::ByteString;
use crate::lexpath;

/// Base library directories consulted after embedded paths, in fixed order.
pub const BASE_STANDARD_DIRS: [&str; 4] = ["/lib", "/usr/lib", "/lib64", "/usr/lib64"];

pub const EM_386: u16 = 3;
pub const EM_ARM: u16 = 40;
pub const EM_X86_64: u16 = 62;
pub const EM_AARCH64: u16 = 183;

/// The filesystem context dependencies are resolved against: a host
/// directory treated as `/`, plus the ordered standard library directories
/// (sysroot-relative) derived from the root object's machine code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SysrootConfig {
    /// Absolute host directory standing in for the target's `/`.
    pub root: ByteString,
    /// Sysroot-relative directories probed after embedded paths, in order.
    pub standard_dirs: Vec<ByteString>,
    /// Multiarch triplet for machine codes with a conventional one.
    pub arch_triplet: Option<String>,
}

impl SysrootConfig {
    /// Builds the configuration for a root directory and an ELF machine
    /// code. Purely computational; the companion crate validates that the
    /// root actually exists before analysis starts.
    pub fn new(root: ByteString, machine: u16) -> Self {
        let root = lexpath::normalize(root.as_bytes());
        let arch_triplet = arch_triplet_for(machine).map(String::from);
        let mut standard_dirs: Vec<ByteString> =
            BASE_STANDARD_DIRS.iter().map(|d| ByteString::from(*d)).collect();
        if let Some(triplet) = &arch_triplet {
            let mut lib = String::from("/lib/");
            lib.push_str(triplet);
            let mut usr_lib = String::from("/usr/lib/");
            usr_lib.push_str(triplet);
            standard_dirs.push(ByteString::from(lib));
            standard_dirs.push(ByteString::from(usr_lib));
        }
        SysrootConfig { root, standard_dirs, arch_triplet }
    }
}

/// Conventional Debian-style multiarch triplet for an ELF machine code.
pub fn arch_triplet_for(machine: u16) -> Option<&'static str> {
    match machine {
        EM_X86_64 => Some("x86_64-linux-gnu"),
        EM_AARCH64 => Some("aarch64-linux-gnu"),
        EM_ARM => Some("arm-linux-gnueabihf"),
        EM_386 => Some("i386-linux-gnu"),
        _ => None,
    }
}

/// Result of re-rooting an absolute target path under the sysroot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SysrootMapping {
    /// The lexically joined and normalized host path.
    pub host_path: ByteString,
    /// True when `..` components escaped the root; escaped mappings are
    /// reported but never probed.
    pub escaped: bool,
}

/// Lexically re-roots an absolute (target-view) path under the sysroot.
///
/// The join is textual: `/usr/lib` under root `/sr` becomes `/sr/usr/lib`.
/// After normalization the result must still lie within the root; anything
/// else is marked escaped rather than treated as an error.
pub fn map_to_sysroot(abs_path: &[u8], config: &SysrootConfig) -> SysrootMapping {
    debug_assert!(lexpath::is_absolute(abs_path));
    let host_path = lexpath::join(config.root.as_bytes(), abs_path);
    let escaped = !lexpath::is_within(host_path.as_bytes(), config.root.as_bytes());
    SysrootMapping { host_path, escaped }
}
