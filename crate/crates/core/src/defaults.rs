//! Statistical defaults shared by the library and the CLI.
//!
//! | setting               | default            |
//! |-----------------------|--------------------|
//! | log base / offset     | 2 / 0              |
//! | quantile method       | linear (type 7)    |
//! | whisker coefficient   | 1.5 × IQR          |
//! | SVD rank tolerance    | 1e-12 × σ₁         |
//! | additive removal      | per-sample mean    |
//! | render size           | 900 × 420 px       |
//! | box width fraction    | 0.6                |

pub const LOG_BASE: f64 = 2.0;
pub const LOG_OFFSET: f64 = 0.0;
pub const WHISKER_COEF: f64 = 1.5;
pub const RANK_TOL: f64 = 1e-12;

pub const RENDER_WIDTH: u32 = 900;
pub const RENDER_HEIGHT: u32 = 420;
pub const BOX_WIDTH_FRACTION: f64 = 0.6;
/// Headroom applied to the data range when y limits are derived automatically.
pub const Y_PADDING: f64 = 1.05;

/// Ten-colour palette assigned to groups in first-appearance order.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

/// Environment variable naming the default output directory for `rle pipeline`.
pub const OUT_DIR_ENV: &str = "RLE_OUT_DIR";
