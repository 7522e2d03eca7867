//! On-disk kernel cache keyed on (alpha, h, T, tol, n_samples).

use std::path::{Path, PathBuf};

use soefrac::kernel::{build_kernel, RationalKernel};

use crate::Failure;

pub struct KernelCache {
    dir: Option<PathBuf>,
}

impl KernelCache {
    /// `--cache-dir`, else `$SOEFRAC_CACHE_DIR`, else a directory under the
    /// system temp dir; `None` when caching is disabled.
    pub fn new(dir: Option<PathBuf>, disabled: bool) -> Self {
        if disabled {
            return Self { dir: None };
        }
        let dir = dir
            .or_else(|| std::env::var_os("SOEFRAC_CACHE_DIR").map(PathBuf::from))
            .unwrap_or_else(|| std::env::temp_dir().join("soefrac-kernels"));
        Self { dir: Some(dir) }
    }

    /// Exact bit patterns, so distinct parameters never share a file.
    pub fn file_name(alpha: f64, h: f64, t_end: f64, tol: f64, n_samples: usize) -> String {
        format!(
            "kernel-a{:016x}-h{:016x}-T{:016x}-tol{:016x}-n{n_samples}.json",
            alpha.to_bits(),
            h.to_bits(),
            t_end.to_bits(),
            tol.to_bits()
        )
    }

    /// Cached kernel if a valid matching file exists, else a fresh build
    /// that is stored for next time. Cache I/O problems only cost a rebuild.
    pub fn get(
        &self,
        alpha: f64,
        h: f64,
        t_end: f64,
        tol: f64,
        n_samples: usize,
    ) -> Result<RationalKernel, Failure> {
        let Some(dir) = &self.dir else {
            return Ok(build_kernel(alpha, h, t_end, tol, n_samples)?);
        };
        let path = dir.join(Self::file_name(alpha, h, t_end, tol, n_samples));
        if let Some(k) = load_matching(&path, alpha, h, t_end, tol) {
            return Ok(k);
        }
        let k = build_kernel(alpha, h, t_end, tol, n_samples)?;
        if let Err(e) = std::fs::create_dir_all(dir)
            .map_err(soefrac::Error::from)
            .and_then(|_| k.save(&path))
        {
            eprintln!(
                "warning: kernel cache not written to {}: {e}",
                path.display()
            );
        }
        Ok(k)
    }
}

fn load_matching(path: &Path, alpha: f64, h: f64, t_end: f64, tol: f64) -> Option<RationalKernel> {
    let k = RationalKernel::load(path).ok()?;
    let same = k.alpha == alpha && k.h == h && k.t_end == t_end && k.tol == tol;
    same.then_some(k)
}
