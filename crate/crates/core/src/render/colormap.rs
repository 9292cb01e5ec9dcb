use std::sync::OnceLock;

pub const STOPS: usize = 64;

// dark blue → teal → green → yellow
const ANCHORS: [[u8; 3]; 11] = [
    [0x44, 0x01, 0x54],
    [0x48, 0x24, 0x75],
    [0x41, 0x44, 0x87],
    [0x35, 0x5f, 0x8d],
    [0x2a, 0x78, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x22, 0xa8, 0x84],
    [0x44, 0xbf, 0x70],
    [0x7a, 0xd1, 0x51],
    [0xbd, 0xdf, 0x26],
    [0xfd, 0xe7, 0x25],
];

/// The fixed 64-stop table, low power first.
pub fn table() -> &'static [[u8; 3]; STOPS] {
    static TABLE: OnceLock<[[u8; 3]; STOPS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0u8; 3]; STOPS];
        let segs = (ANCHORS.len() - 1) as f64;
        for (i, stop) in t.iter_mut().enumerate() {
            let pos = i as f64 / (STOPS - 1) as f64 * segs;
            let j = (pos.floor() as usize).min(ANCHORS.len() - 2);
            let frac = pos - j as f64;
            for c in 0..3 {
                let a = ANCHORS[j][c] as f64;
                let b = ANCHORS[j + 1][c] as f64;
                stop[c] = (a + (b - a) * frac).round() as u8;
            }
        }
        t
    })
}

pub fn luma(rgb: [u8; 3]) -> f64 {
    0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64
}

/// Stop index for `t` in `[0, 1]` (clamped).
pub fn index_of(t: f64) -> usize {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    (t * (STOPS - 1) as f64).round() as usize
}

/// Inverse lookup; `None` for colors outside the table.
pub fn decode(rgb: [u8; 3]) -> Option<usize> {
    table().iter().position(|&c| c == rgb)
}
