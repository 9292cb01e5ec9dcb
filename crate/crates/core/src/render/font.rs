use font8x8::legacy::BASIC_LEGACY;

pub const GLYPH: usize = 8;

fn glyph(ch: char) -> [u8; 8] {
    match ch {
        // long dash, not in the ASCII table
        '\u{2014}' => [0, 0, 0, 0xff, 0, 0, 0, 0],
        c if (c as u32) < 128 => BASIC_LEGACY[c as usize],
        _ => BASIC_LEGACY[b'?' as usize],
    }
}

pub fn text_width(text: &str, scale: usize) -> usize {
    text.chars().count() * GLYPH * scale
}

/// Draws `text` with its top-left corner at `(x, y)`; pixels outside the
/// canvas are dropped.
pub fn draw_text(canvas: &mut super::Canvas, x: i64, y: i64, text: &str, scale: usize, color: [u8; 3]) {
    for (i, ch) in text.chars().enumerate() {
        let g = glyph(ch);
        let gx = x + (i * GLYPH * scale) as i64;
        for (row, bits) in g.iter().enumerate() {
            for col in 0..GLYPH {
                if bits & (1 << col) == 0 {
                    continue;
                }
                for dy in 0..scale {
                    for dx in 0..scale {
                        canvas.put(
                            gx + (col * scale + dx) as i64,
                            y + (row * scale + dy) as i64,
                            color,
                        );
                    }
                }
            }
        }
    }
}
