//! dB-scale heatmaps as ASCII portable graymaps (PGM, `P2`).
//!
//! Rows are RX beams (index 0 at the top), columns TX beams. Gray level is
//! linear in dB over `[peak - range_db, peak]`; anything at or below the
//! bottom of the window, including zero power, is black.

use std::fmt::Write as _;

use crate::channelsynth::PowerMap;

pub const MAX_GRAY: u32 = 255;

/// Gray level for one linear power value.
pub fn gray_level(value: f64, peak: f64, range_db: f64) -> u32 {
    if !(value > 0.0) || !(peak > 0.0) {
        return 0;
    }
    let rel_db = 10.0 * (value / peak).log10();
    let t = ((rel_db + range_db) / range_db).clamp(0.0, 1.0);
    (t * MAX_GRAY as f64).round() as u32
}

pub fn to_pgm(map: &PowerMap, range_db: f64) -> String {
    let peak = map.max_value();
    let mut out = format!("P2\n{} {}\n{MAX_GRAY}\n", map.p(), map.q());
    for rx in 0..map.q() {
        let row: Vec<String> = (0..map.p())
            .map(|tx| gray_level(map.get(rx, tx), peak, range_db).to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
