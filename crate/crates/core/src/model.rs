//! Analytic GPU execution model: grid decomposition, occupancy, shared
//! memory fit, global-memory load counts and device-memory footprint.
//!
//! Everything here is integer arithmetic over a [`DeviceSpec`] limit sheet.
//! Byte quantities are reported in bytes and binary mebibytes (`MiB`).

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::matrix::Precision;

pub const MIB: u64 = 1024 * 1024;
pub const GIB: u64 = 1024 * MIB;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown device preset `{0}`")]
    UnknownPreset(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing device field `{0}`")]
    MissingField(&'static str),
    #[error("invalid device spec: {0}")]
    Invalid(String),
    #[error("cannot read device spec {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Hardware limits of a modeled GPU.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub name: String,
    pub sm_count: u64,
    pub cores_per_sm: u64,
    pub warp_size: u64,
    pub max_threads_per_block: u64,
    pub max_threads_per_sm: u64,
    pub max_blocks_per_sm: u64,
    pub global_mem_bytes: u64,
    pub shared_mem_bytes_per_sm: u64,
    pub peak_gflops_single: f64,
    pub peak_gflops_double: f64,
}

const FIELDS: [&str; 10] = [
    "sm_count",
    "cores_per_sm",
    "warp_size",
    "max_threads_per_block",
    "max_threads_per_sm",
    "max_blocks_per_sm",
    "global_mem_bytes",
    "shared_mem_bytes_per_sm",
    "peak_gflops_single",
    "peak_gflops_double",
];

impl DeviceSpec {
    /// GeForce 940M: 3 SMs with 128 cores each, warps of 32, at most 1024
    /// threads per block, 2048 threads and 32 blocks per SM, 2 GiB global
    /// memory, 49 KiB shared memory, 790.3 / 24.7 GFLOPS peak.
    ///
    /// The shared-memory figure is quoted as "49 KB" for this part; it is
    /// stored as `49 * 1024` bytes.
    pub fn geforce_940m() -> Self {
        DeviceSpec {
            name: "geforce-940m".to_string(),
            sm_count: 3,
            cores_per_sm: 128,
            warp_size: 32,
            max_threads_per_block: 1024,
            max_threads_per_sm: 2048,
            max_blocks_per_sm: 32,
            global_mem_bytes: 2 * GIB,
            shared_mem_bytes_per_sm: 49 * 1024,
            peak_gflops_single: 790.3,
            peak_gflops_double: 24.7,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ModelError> {
        match name.to_ascii_lowercase().as_str() {
            "geforce-940m" | "940m" => Ok(Self::geforce_940m()),
            _ => Err(ModelError::UnknownPreset(name.to_string())),
        }
    }

    /// A preset name, or else a path to a key=value spec file.
    pub fn resolve(name_or_path: &str) -> Result<Self, ModelError> {
        match Self::preset(name_or_path) {
            Ok(spec) => Ok(spec),
            Err(unknown) => {
                if Path::new(name_or_path).is_file() {
                    Self::load(name_or_path)
                } else {
                    Err(unknown)
                }
            }
        }
    }

    pub fn total_cores(&self) -> u64 {
        self.sm_count * self.cores_per_sm
    }

    pub fn peak_gflops(&self, precision: Precision) -> f64 {
        match precision {
            Precision::Single => self.peak_gflops_single,
            Precision::Double => self.peak_gflops_double,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut spec = Self::parse(&text)?;
        if spec.name.is_empty() {
            spec.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(spec)
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments
    /// are skipped; keys are the field names; `name` is optional.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut ints = [None::<u64>; 8];
        let mut peaks = [None::<f64>; 2];
        let mut name = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ModelError::Parse {
                line,
                message: format!("expected key=value, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "name" {
                name = value.to_string();
                continue;
            }
            let slot = FIELDS.iter().position(|f| *f == key).ok_or_else(|| ModelError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            })?;
            let bad = |e: &dyn std::fmt::Display| ModelError::Parse {
                line,
                message: format!("bad value for `{key}`: {e}"),
            };
            if slot < 8 {
                ints[slot] = Some(value.parse().map_err(|e| bad(&e))?);
            } else {
                peaks[slot - 8] = Some(value.parse().map_err(|e| bad(&e))?);
            }
        }
        let int = |i: usize| ints[i].ok_or(ModelError::MissingField(FIELDS[i]));
        let peak = |i: usize| peaks[i].ok_or(ModelError::MissingField(FIELDS[8 + i]));
        let spec = DeviceSpec {
            name,
            sm_count: int(0)?,
            cores_per_sm: int(1)?,
            warp_size: int(2)?,
            max_threads_per_block: int(3)?,
            max_threads_per_sm: int(4)?,
            max_blocks_per_sm: int(5)?,
            global_mem_bytes: int(6)?,
            shared_mem_bytes_per_sm: int(7)?,
            peak_gflops_single: peak(0)?,
            peak_gflops_double: peak(1)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Serializes to the format accepted by [`DeviceSpec::parse`].
    pub fn to_kv(&self) -> String {
        format!(
            "name = {}\nsm_count = {}\ncores_per_sm = {}\nwarp_size = {}\nmax_threads_per_block = {}\n\
             max_threads_per_sm = {}\nmax_blocks_per_sm = {}\nglobal_mem_bytes = {}\n\
             shared_mem_bytes_per_sm = {}\npeak_gflops_single = {}\npeak_gflops_double = {}\n",
            self.name,
            self.sm_count,
            self.cores_per_sm,
            self.warp_size,
            self.max_threads_per_block,
            self.max_threads_per_sm,
            self.max_blocks_per_sm,
            self.global_mem_bytes,
            self.shared_mem_bytes_per_sm,
            self.peak_gflops_single,
            self.peak_gflops_double
        )
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ints = [
            self.sm_count,
            self.cores_per_sm,
            self.warp_size,
            self.max_threads_per_block,
            self.max_threads_per_sm,
            self.max_blocks_per_sm,
            self.global_mem_bytes,
            self.shared_mem_bytes_per_sm,
        ];
        if let Some(i) = ints.iter().position(|&v| v == 0) {
            return Err(ModelError::Invalid(format!("{} must be positive", FIELDS[i])));
        }
        if !(self.peak_gflops_single > 0.0 && self.peak_gflops_double > 0.0) {
            return Err(ModelError::Invalid("peak GFLOPS must be positive".into()));
        }
        if self.max_threads_per_sm < self.max_threads_per_block {
            return Err(ModelError::Invalid(
                "max_threads_per_sm must be at least max_threads_per_block".into(),
            ));
        }
        Ok(())
    }
}

/// Lattice of thread blocks covering an output matrix, one block per tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPlan {
    pub grid_x: u64,
    pub grid_y: u64,
    pub block_threads: u64,
    pub exact_fit: bool,
}

impl GridPlan {
    pub fn blocks(&self) -> u64 {
        self.grid_x * self.grid_y
    }
}

/// Panics if any argument is zero.
pub fn plan_grid(rows: u64, cols: u64, tile: u64) -> GridPlan {
    assert!(rows >= 1 && cols >= 1 && tile >= 1, "plan_grid arguments must be positive");
    GridPlan {
        grid_x: cols.div_ceil(tile),
        grid_y: rows.div_ceil(tile),
        block_threads: tile * tile,
        exact_fit: rows.is_multiple_of(tile) && cols.is_multiple_of(tile),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occupancy {
    pub warps_per_block: u64,
    pub blocks_per_sm: u64,
    pub threads_per_sm: u64,
    /// False when the block exceeds the per-block thread limit.
    pub valid: bool,
}

pub fn occupancy(spec: &DeviceSpec, block_threads: u64) -> Occupancy {
    assert!(block_threads >= 1, "block_threads must be positive");
    let blocks_per_sm = spec
        .max_blocks_per_sm
        .min(spec.max_threads_per_sm / block_threads);
    Occupancy {
        warps_per_block: block_threads.div_ceil(spec.warp_size),
        blocks_per_sm,
        threads_per_sm: blocks_per_sm * block_threads,
        valid: block_threads <= spec.max_threads_per_block,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedMemFit {
    pub bytes_needed: u64,
    pub fits: bool,
}

/// One A tile plus one B tile resident in shared memory.
pub fn shared_mem_fit(spec: &DeviceSpec, tile: u64, precision: Precision) -> SharedMemFit {
    let bytes_needed = 2 * tile * tile * precision.element_bytes() as u64;
    SharedMemFit {
        bytes_needed,
        fits: bytes_needed <= spec.shared_mem_bytes_per_sm,
    }
}

/// Element loads from global memory for an `(m x n) * (n x w)` product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalLoads {
    pub loads_a: u64,
    pub loads_b: u64,
    pub total_loads: u64,
}

/// Without tiling every output element streams a full row of A and column
/// of B, so A is read `w` times and B `m` times. With tiling each element
/// enters shared memory once per opposing tile stripe.
pub fn global_load_model(m: u64, n: u64, w: u64, tile: Option<u64>) -> GlobalLoads {
    let (loads_a, loads_b) = match tile {
        None => (m * n * w, n * w * m),
        Some(t) => {
            assert!(t >= 1, "tile must be positive");
            (m * n * w.div_ceil(t), n * w * m.div_ceil(t))
        }
    };
    GlobalLoads {
        loads_a,
        loads_b,
        total_loads: loads_a + loads_b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub bytes_total: u64,
    pub fits_global: bool,
}

impl Footprint {
    pub fn mib(&self) -> f64 {
        self.bytes_total as f64 / MIB as f64
    }
}

/// Device memory for A, B and C together.
pub fn footprint(spec: &DeviceSpec, m: u64, n: u64, w: u64, precision: Precision) -> Footprint {
    let bytes_total = (m * n + n * w + m * w) * precision.element_bytes() as u64;
    Footprint {
        bytes_total,
        fits_global: bytes_total <= spec.global_mem_bytes,
    }
}

/// Full model report for a square problem, as ordered `key=value` pairs.
pub fn report(spec: &DeviceSpec, size: u64, tile: u64, precision: Precision) -> Vec<(String, String)> {
    let grid = plan_grid(size, size, tile);
    let occ = occupancy(spec, grid.block_threads);
    let shared = shared_mem_fit(spec, tile, precision);
    let fp = footprint(spec, size, size, size, precision);
    let naive = global_load_model(size, size, size, None);
    let tiled = global_load_model(size, size, size, Some(tile));
    let mut out: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| out.push((k.to_string(), v));
    put("device", spec.name.clone());
    put("size", size.to_string());
    put("tile", tile.to_string());
    put("precision", precision.to_string());
    put("grid_x", grid.grid_x.to_string());
    put("grid_y", grid.grid_y.to_string());
    put("blocks", grid.blocks().to_string());
    put("block_threads", grid.block_threads.to_string());
    put("exact_fit", grid.exact_fit.to_string());
    put("warps_per_block", occ.warps_per_block.to_string());
    put("blocks_per_sm", occ.blocks_per_sm.to_string());
    put("threads_per_sm", occ.threads_per_sm.to_string());
    put("block_valid", occ.valid.to_string());
    put("shared_bytes_needed", shared.bytes_needed.to_string());
    put("shared_bytes_available", spec.shared_mem_bytes_per_sm.to_string());
    put("shared_fits", shared.fits.to_string());
    put("footprint_bytes", fp.bytes_total.to_string());
    put("footprint_mib", format!("{}", fp.mib()));
    put("footprint_fits_global", fp.fits_global.to_string());
    put("loads_naive_a", naive.loads_a.to_string());
    put("loads_naive_b", naive.loads_b.to_string());
    put("loads_naive_total", naive.total_loads.to_string());
    put("loads_tiled_a", tiled.loads_a.to_string());
    put("loads_tiled_b", tiled.loads_b.to_string());
    put("loads_tiled_total", tiled.total_loads.to_string());
    put("peak_gflops", format!("{}", spec.peak_gflops(precision)));
    out
}
