//! Waterfall snapshot → PNG. The raster is drawn by hand (heatmap blit, tick
//! marks, an 8×8 bitmap font) so the same snapshot always yields the same
//! bytes. The image carries only the heatmap, the frequency axis, a colorbar
//! and the title.

pub mod colormap;
mod font;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{Calibration, WaterfallBuffer};
use crate::error::{ensure, ConfigError};
use crate::format_mhz;

pub const DEFAULT_TITLE: &str = "Waterfall \u{2014} Fc: {fc} MHz, SR: {SR} MHz";

const MARGIN_LEFT: usize = 70;
const MARGIN_RIGHT: usize = 110;
const MARGIN_TOP: usize = 44;
const MARGIN_BOTTOM: usize = 56;
const BAR_GAP: usize = 20;
const BAR_WIDTH: usize = 20;
const TICKS: usize = 5;

const WHITE: [u8; 3] = [255, 255, 255];
const BLACK: [u8; 3] = [0, 0, 0];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("waterfall buffer is empty")]
    EmptyBuffer,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("png encoding: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    #[default]
    ViridisLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub width_px: usize,
    pub height_px: usize,
    #[serde(default)]
    pub colormap: Colormap,
    pub db_min: f64,
    pub db_max: f64,
    pub title_template: String,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width_px: 1000,
            height_px: 600,
            colormap: Colormap::ViridisLike,
            db_min: -120.0,
            db_max: -20.0,
            title_template: DEFAULT_TITLE.to_string(),
        }
    }
}

impl RenderSpec {
    /// Default geometry with the color scale fitted by [`auto_scale`].
    pub fn auto(buf: &WaterfallBuffer) -> Result<Self, RenderError> {
        let (db_min, db_max) = auto_scale(buf)?;
        Ok(Self {
            db_min,
            db_max,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.db_min.is_finite() && self.db_max.is_finite() && self.db_min < self.db_max, || {
            format!("db_min ({}) must be below db_max ({})", self.db_min, self.db_max)
        })?;
        ensure(
            self.width_px >= MARGIN_LEFT + MARGIN_RIGHT + 64 && self.height_px >= MARGIN_TOP + MARGIN_BOTTOM + 32,
            || format!("image {}x{} is too small", self.width_px, self.height_px),
        )
    }

    pub fn title(&self, cal: &Calibration) -> String {
        self.title_template
            .replace("{fc}", &format_mhz(cal.center_freq_hz()))
            .replace("{SR}", &format_mhz(cal.span_hz()))
    }

    pub fn layout(&self) -> Layout {
        Layout {
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP,
            width: self.width_px - MARGIN_LEFT - MARGIN_RIGHT,
            height: self.height_px - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }
}

/// Heatmap rectangle inside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Layout {
    /// Bins shown in heatmap column `c` (half-open). When there are more bins
    /// than columns the column shows the strongest of them.
    pub fn column_bins(&self, c: usize, bins: usize) -> (usize, usize) {
        if bins >= self.width {
            (c * bins / self.width, (c + 1) * bins / self.width)
        } else {
            let k = ((2 * c + 1) * bins) / (2 * self.width);
            (k, k + 1)
        }
    }

    /// Frequency at the center of heatmap column `c`. The axis runs from half a
    /// bin below the first bin center to half a bin above the last.
    pub fn column_freq(&self, c: usize, cal: &Calibration) -> f64 {
        let lo = cal.freq_start_hz - cal.freq_step_hz / 2.0;
        lo + (c as f64 + 0.5) / self.width as f64 * cal.span_hz()
    }

    pub fn freq_to_x(&self, f: f64, cal: &Calibration) -> f64 {
        let lo = cal.freq_start_hz - cal.freq_step_hz / 2.0;
        self.x0 as f64 + (f - lo) / cal.span_hz() * self.width as f64
    }

    /// Waterfall row drawn at heatmap pixel row `y`; rows are oldest first so
    /// the newest lands at the bottom.
    pub fn row_for(&self, y: usize, rows: usize) -> usize {
        ((2 * y + 1) * rows) / (2 * self.height)
    }
}

/// Axis tick frequencies: `fc − SR/2` to `fc + SR/2` in quarter steps.
pub fn tick_freqs(cal: &Calibration) -> Vec<f64> {
    let lo = cal.center_freq_hz() - cal.span_hz() / 2.0;
    (0..TICKS)
        .map(|i| lo + i as f64 * cal.span_hz() / (TICKS - 1) as f64)
        .collect()
}

pub struct Canvas {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB.
    pub pixels: Vec<u8>,
}

impl Canvas {
    fn new(width: usize, height: usize, bg: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: bg.repeat(width * height),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let i = (y as usize * self.width + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    fn fill(&mut self, x: usize, y: usize, w: usize, h: usize, c: [u8; 3]) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.put(xx as i64, yy as i64, c);
            }
        }
    }

    pub fn to_png(&self, title: &str) -> Result<Vec<u8>, RenderError> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.add_itxt_chunk("Title".into(), title.into())
            .map_err(|e| RenderError::Encode(e.to_string()))?;
        let mut w = enc.write_header().map_err(|e| RenderError::Encode(e.to_string()))?;
        w.write_image_data(&self.pixels)
            .map_err(|e| RenderError::Encode(e.to_string()))?;
        w.finish().map_err(|e| RenderError::Encode(e.to_string()))?;
        Ok(out)
    }
}

pub fn render_waterfall(buf: &WaterfallBuffer, spec: &RenderSpec) -> Result<Vec<u8>, RenderError> {
    let canvas = rasterize(buf, spec)?;
    let title = spec.title(&buf.calibration().ok_or(RenderError::EmptyBuffer)?);
    canvas.to_png(&title)
}

pub fn rasterize(buf: &WaterfallBuffer, spec: &RenderSpec) -> Result<Canvas, RenderError> {
    let cal = buf.calibration().ok_or(RenderError::EmptyBuffer)?;
    spec.validate()?;
    let lay = spec.layout();
    let table = colormap::table();
    let mut cv = Canvas::new(spec.width_px, spec.height_px, WHITE);
    let range = spec.db_max - spec.db_min;

    let rows: Vec<_> = buf.rows().collect();
    let cols: Vec<(usize, usize)> = (0..lay.width).map(|c| lay.column_bins(c, cal.bins)).collect();
    for y in 0..lay.height {
        let row = &rows[lay.row_for(y, rows.len())].power_db;
        for (c, &(lo, hi)) in cols.iter().enumerate() {
            let db = row[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let color = table[colormap::index_of((db - spec.db_min) / range)];
            cv.put((lay.x0 + c) as i64, (lay.y0 + y) as i64, color);
        }
    }

    // frame
    cv.fill(lay.x0 - 1, lay.y0 - 1, lay.width + 2, 1, BLACK);
    cv.fill(lay.x0 - 1, lay.y0 + lay.height, lay.width + 2, 1, BLACK);
    cv.fill(lay.x0 - 1, lay.y0 - 1, 1, lay.height + 2, BLACK);
    cv.fill(lay.x0 + lay.width, lay.y0 - 1, 1, lay.height + 2, BLACK);

    let axis_y = lay.y0 + lay.height + 1;
    for f in tick_freqs(&cal) {
        let x = (lay.freq_to_x(f, &cal).round() as usize).clamp(lay.x0, lay.x0 + lay.width - 1);
        cv.fill(x, axis_y, 1, 5, BLACK);
        let label = format_mhz(f);
        let lx = x as i64 - font::text_width(&label, 1) as i64 / 2;
        font::draw_text(&mut cv, lx, (axis_y + 8) as i64, &label, 1, BLACK);
    }
    let unit = "Frequency (MHz)";
    let ux = lay.x0 + lay.width / 2 - font::text_width(unit, 1) / 2;
    font::draw_text(&mut cv, ux as i64, (axis_y + 26) as i64, unit, 1, BLACK);

    // colorbar, high power on top
    let bx = lay.x0 + lay.width + BAR_GAP;
    for y in 0..lay.height {
        let t = 1.0 - y as f64 / (lay.height - 1) as f64;
        cv.fill(bx, lay.y0 + y, BAR_WIDTH, 1, table[colormap::index_of(t)]);
    }
    let lx = (bx + BAR_WIDTH + 4) as i64;
    font::draw_text(&mut cv, lx, lay.y0 as i64, &format!("{:.0} dB", spec.db_max), 1, BLACK);
    font::draw_text(
        &mut cv,
        lx,
        (lay.y0 + lay.height - font::GLYPH) as i64,
        &format!("{:.0} dB", spec.db_min),
        1,
        BLACK,
    );

    let title = spec.title(&cal);
    let tx = spec.width_px as i64 / 2 - font::text_width(&title, 2) as i64 / 2;
    font::draw_text(&mut cv, tx, 14, &title, 2, BLACK);
    Ok(cv)
}

/// `(p5, p99.5)` of every value in the buffer, pushed apart symmetrically to
/// at least 10 dB.
pub fn auto_scale(buf: &WaterfallBuffer) -> Result<(f64, f64), RenderError> {
    let mut v: Vec<f64> = buf.rows().flat_map(|r| r.power_db.iter().copied()).collect();
    if v.is_empty() {
        return Err(RenderError::EmptyBuffer);
    }
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (percentile(&v, 5.0), percentile(&v, 99.5));
    if hi - lo >= 10.0 {
        Ok((lo, hi))
    } else {
        let mid = (lo + hi) / 2.0;
        Ok((mid - 5.0, mid + 5.0))
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(&next) => sorted[i] + (next - sorted[i]) * frac,
        None => sorted[i],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SpectrumFrame;

    fn buf(rows: usize, bins: usize, db: f64) -> WaterfallBuffer {
        WaterfallBuffer::from_frames((0..rows).map(|i| SpectrumFrame {
            power_db: vec![db; bins],
            freq_start_hz: 796e6,
            freq_step_hz: 20e6 / bins as f64,
            block_index: i as u64,
        }))
        .unwrap()
    }

    #[test]
    fn title_substitution() {
        let b = buf(1, 64, -80.0);
        let t = RenderSpec::default().title(&b.calibration().unwrap());
        assert_eq!(t, "Waterfall \u{2014} Fc: 806 MHz, SR: 20 MHz");
    }

    #[test]
    fn ticks_span_capture() {
        let b = buf(1, 2048, -80.0);
        let t = tick_freqs(&b.calibration().unwrap());
        assert_eq!(t.iter().map(|&f| format_mhz(f)).collect::<Vec<_>>(), ["796", "801", "806", "811", "816"]);
    }

    #[test]
    fn uniform_at_db_min_is_low_color() {
        let spec = RenderSpec {
            db_min: -80.0,
            db_max: -40.0,
            ..Default::default()
        };
        let cv = rasterize(&buf(10, 2048, -80.0), &spec).unwrap();
        let lay = spec.layout();
        for y in lay.y0..lay.y0 + lay.height {
            for x in lay.x0..lay.x0 + lay.width {
                assert_eq!(cv.get(x, y), colormap::table()[0]);
            }
        }
    }

    #[test]
    fn column_bins_cover_every_bin_once() {
        let lay = RenderSpec::default().layout();
        let mut next = 0;
        for c in 0..lay.width {
            let (lo, hi) = lay.column_bins(c, 2048);
            assert_eq!(lo, next);
            assert!(hi > lo);
            next = hi;
        }
        assert_eq!(next, 2048);
        assert_eq!(lay.column_bins(0, 64), (0, 1));
        assert_eq!(lay.column_bins(lay.width - 1, 64), (63, 64));
    }

    #[test]
    fn auto_scale_oracles() {
        assert_eq!(auto_scale(&buf(3, 100, -80.0)).unwrap(), (-85.0, -75.0));
        assert!(matches!(auto_scale(&WaterfallBuffer::new()), Err(RenderError::EmptyBuffer)));
        let mut rows = Vec::new();
        for i in 0..10 {
            let mut v = vec![-100.0; 1000];
            for k in 0..10 {
                v[k * 97] = -40.0;
            }
            rows.push(SpectrumFrame {
                power_db: v,
                freq_start_hz: 0.0,
                freq_step_hz: 1.0,
                block_index: i,
            });
        }
        let (lo, hi) = auto_scale(&WaterfallBuffer::from_frames(rows).unwrap()).unwrap();
        assert_eq!(lo, -100.0);
        assert!((hi + 40.0).abs() <= 2.0);
    }

    #[test]
    fn bad_scale_rejected() {
        let spec = RenderSpec {
            db_min: -10.0,
            db_max: -10.0,
            ..Default::default()
        };
        assert!(matches!(rasterize(&buf(1, 64, 0.0), &spec), Err(RenderError::Config(_))));
    }
}
