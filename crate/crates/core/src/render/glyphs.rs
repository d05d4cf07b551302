// SPDX-License-Identifier: MIT OR Apache-2.0

//! Built-in stroke font for node identifiers. Each letter is a set of
//! polylines in a unit box, `y` pointing down. Drawing identifiers as paths
//! keeps rasterization independent of installed fonts.

type Stroke = &'static [(f32, f32)];

const O: Stroke = &[(0.2, 0.0), (0.8, 0.0), (1.0, 0.2), (1.0, 0.8), (0.8, 1.0), (0.2, 1.0), (0.0, 0.8), (0.0, 0.2), (0.2, 0.0)];
const P: Stroke = &[(0.0, 1.0), (0.0, 0.0), (0.75, 0.0), (1.0, 0.15), (1.0, 0.4), (0.75, 0.55), (0.0, 0.55)];

pub(crate) fn strokes(letter: char) -> &'static [Stroke] {
    match letter {
        'A' => &[&[(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)], &[(0.2, 0.62), (0.8, 0.62)]],
        'B' => &[
            &[(0.0, 0.0), (0.0, 1.0), (0.7, 1.0), (0.95, 0.85), (0.95, 0.65), (0.7, 0.5), (0.0, 0.5)],
            &[(0.0, 0.0), (0.65, 0.0), (0.9, 0.12), (0.9, 0.38), (0.65, 0.5)],
        ],
        'C' => &[&[(1.0, 0.1), (0.8, 0.0), (0.2, 0.0), (0.0, 0.2), (0.0, 0.8), (0.2, 1.0), (0.8, 1.0), (1.0, 0.9)]],
        'D' => &[&[(0.0, 0.0), (0.0, 1.0), (0.6, 1.0), (1.0, 0.7), (1.0, 0.3), (0.6, 0.0), (0.0, 0.0)]],
        'E' => &[&[(1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (1.0, 1.0)], &[(0.0, 0.5), (0.75, 0.5)]],
        'F' => &[&[(1.0, 0.0), (0.0, 0.0), (0.0, 1.0)], &[(0.0, 0.5), (0.75, 0.5)]],
        'G' => &[&[
            (1.0, 0.1), (0.8, 0.0), (0.2, 0.0), (0.0, 0.2), (0.0, 0.8), (0.2, 1.0), (0.8, 1.0), (1.0, 0.8), (1.0, 0.55), (0.55, 0.55),
        ]],
        'H' => &[&[(0.0, 0.0), (0.0, 1.0)], &[(1.0, 0.0), (1.0, 1.0)], &[(0.0, 0.5), (1.0, 0.5)]],
        'I' => &[&[(0.2, 0.0), (0.8, 0.0)], &[(0.5, 0.0), (0.5, 1.0)], &[(0.2, 1.0), (0.8, 1.0)]],
        'J' => &[&[(0.3, 0.0), (1.0, 0.0)], &[(0.8, 0.0), (0.8, 0.8), (0.6, 1.0), (0.2, 1.0), (0.0, 0.8)]],
        'K' => &[&[(0.0, 0.0), (0.0, 1.0)], &[(1.0, 0.0), (0.0, 0.55)], &[(0.3, 0.4), (1.0, 1.0)]],
        'L' => &[&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]],
        'M' => &[&[(0.0, 1.0), (0.0, 0.0), (0.5, 0.6), (1.0, 0.0), (1.0, 1.0)]],
        'N' => &[&[(0.0, 1.0), (0.0, 0.0), (1.0, 1.0), (1.0, 0.0)]],
        'O' => &[O],
        'P' => &[P],
        'Q' => &[O, &[(0.6, 0.7), (1.0, 1.05)]],
        'R' => &[P, &[(0.45, 0.55), (1.0, 1.0)]],
        'S' => &[&[
            (1.0, 0.1), (0.8, 0.0), (0.2, 0.0), (0.0, 0.15), (0.0, 0.35), (0.2, 0.5), (0.8, 0.5), (1.0, 0.65), (1.0, 0.85), (0.8, 1.0), (0.2, 1.0), (0.0, 0.9),
        ]],
        'T' => &[&[(0.0, 0.0), (1.0, 0.0)], &[(0.5, 0.0), (0.5, 1.0)]],
        'U' => &[&[(0.0, 0.0), (0.0, 0.8), (0.2, 1.0), (0.8, 1.0), (1.0, 0.8), (1.0, 0.0)]],
        'V' => &[&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]],
        'W' => &[&[(0.0, 0.0), (0.25, 1.0), (0.5, 0.4), (0.75, 1.0), (1.0, 0.0)]],
        'X' => &[&[(0.0, 0.0), (1.0, 1.0)], &[(1.0, 0.0), (0.0, 1.0)]],
        'Y' => &[&[(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)], &[(0.5, 0.5), (0.5, 1.0)]],
        'Z' => &[&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]],
        _ => &[],
    }
}

/// SVG path data for `letter` centered at `(cx, cy)` with the given height.
pub(crate) fn path_data(letter: char, cx: f64, cy: f64, height: f64) -> String {
    let width = 0.62 * height;
    let x0 = cx - width / 2.0;
    let y0 = cy - height / 2.0;
    let mut d = String::new();
    for stroke in strokes(letter) {
        for (i, &(x, y)) in stroke.iter().enumerate() {
            if !d.is_empty() {
                d.push(' ');
            }
            d.push(if i == 0 { 'M' } else { 'L' });
            d.push_str(&format!("{:.2} {:.2}", x0 + x as f64 * width, y0 + y as f64 * height));
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_uppercase_letter_has_strokes() {
        for c in 'A'..='Z' {
            let s = strokes(c);
            assert!(!s.is_empty(), "{c}");
            assert!(s.iter().all(|p| p.len() >= 2));
        }
        assert!(strokes('a').is_empty());
    }

    #[test]
    fn path_is_centered() {
        assert_eq!(path_data('T', 10.0, 10.0, 10.0), "M6.90 5.00 L13.10 5.00 M10.00 5.00 L10.00 15.00");
    }
}
