use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{write_atomic, write_gray_image, write_mask};
use crate::phantom::{generate_suite, Jitter, PhantomSpec};

pub fn frame_name(k: usize) -> String {
    format!("phantom_{k:03}")
}

/// Writes `n` phantoms as `phantom_NNN.pgm`, `phantom_NNN_mask.pgm` and the
/// member spec `phantom_NNN.json`. Returns the image paths.
pub fn cmd_phantom(base: &PhantomSpec, n: usize, jitter: &Jitter, outdir: &Path) -> Result<Vec<PathBuf>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let suite = generate_suite(n, base, jitter)?;
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut images = Vec::with_capacity(n);
    for (k, p) in suite.iter().enumerate() {
        let name = frame_name(k);
        let image = outdir.join(format!("{name}.pgm"));
        write_gray_image(&p.image, &image)?;
        write_mask(&p.mask, outdir.join(format!("{name}_mask.pgm")))?;
        let spec = serde_json::to_string_pretty(&p.spec)?;
        write_atomic(&outdir.join(format!("{name}.json")), format!("{spec}\n").as_bytes())?;
        images.push(image);
    }
    Ok(images)
}
