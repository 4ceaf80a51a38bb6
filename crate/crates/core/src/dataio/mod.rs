//! File formats for every core type, patch tiling and stitching, and the
//! co-training dataset split.
//!
//! | type          | format                                              |
//! |---------------|-----------------------------------------------------|
//! | `PointSet`    | text, one `x,y` pair per line, optional `x,y` header |
//! | `ProbMap`     | `PFG1` raw little-endian float32 (see [`probmap`])   |
//! | `TriLabelMap` | 8-bit grayscale PNG, codes `{0, 1, 2}`              |
//! | `InstanceMap` | 16-bit grayscale PNG                                |
//! | `RgbImage`    | 8-bit RGB PNG, samples scaled by 1/255              |
//! | `StainModel`  | text, 6 matrix entries column-major then `h_column` |
//!
//! Every writer goes through [`write_atomic`]: the bytes land in a temporary
//! file next to the target and are renamed into place only on success.

mod points;
pub mod probmap;
mod raster;
mod split;
mod stain_file;
mod tiling;

use std::io::Write;
use std::path::Path;

pub use points::{parse_points, read_points, write_points};
pub use probmap::{decode_probmap, encode_probmap, read_probmap, write_probmap};
pub use raster::{
    read_gray, read_instances, read_rgb, read_trilabel, write_gray, write_instances, write_rgb,
    write_trilabel,
};
pub use split::{split_dataset, SplitSpec};
pub use stain_file::{parse_stain_model, read_stain_model, write_stain_model};
pub use tiling::{crop, crop_rgb, stitch, tile, PatchGrid};

use crate::error::Result;

/// Writes `bytes` to `path` through a same-directory temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    // temp files start out owner-only
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
