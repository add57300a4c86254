//! Minimal SVG renderings of the report tables, one file per panel.
//!
//! The CSV tables are the source of truth; these plots exist so a run can be
//! eyeballed without external tooling. Output is plain SVG assembled from
//! fixed-precision coordinates, so identical tables render byte-identical
//! files.

use crate::report::{BondRow, SpectrumRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    /// Data ranges padded by 5%; degenerate ranges widened to a unit box so
    /// single-valued data still lands mid-plot.
    fn new(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        for x in xs.filter(|v| v.is_finite()) {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for y in ys.filter(|v| v.is_finite()) {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() || x_min == x_max {
            x_min -= 0.5;
            x_max += 0.5;
        }
        if !y_min.is_finite() || y_min == y_max {
            y_min -= 0.5;
            y_max += 0.5;
        }
        let x_pad = 0.05 * (x_max - x_min);
        let y_pad = 0.05 * (y_max - y_min);
        Frame {
            x_min: x_min - x_pad,
            x_max: x_max + x_pad,
            y_min: y_min - y_pad,
            y_max: y_max + y_pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min)
            * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min)
                * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, title: &str, x_label: &str, y_label: &str, frame: &Frame) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" \
         text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    out.push_str(&format!(
        "<polyline points=\"{x0:.2},{y1:.2} {x0:.2},{y0:.2} {x1:.2},{y0:.2}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    for (v, anchor) in [(frame.x_min, x0), (frame.x_max, x1)] {
        out.push_str(&format!(
            "<text x=\"{anchor:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"10\" \
             text-anchor=\"middle\">{v:.3}</text>\n",
            y0 + 16.0
        ));
    }
    for (v, anchor) in [(frame.y_min, y0), (frame.y_max, y1)] {
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{anchor:.2}\" font-family=\"monospace\" font-size=\"10\" \
             text-anchor=\"end\">{v:.3}</text>\n",
            x0 - 6.0
        ));
    }
}

/// True couplings as a line, estimates as circles, against bond index.
pub fn bonds_svg(title: &str, rows: &[BondRow]) -> String {
    let frame = Frame::new(
        rows.iter().map(|r| r.i as f64),
        rows.iter().flat_map(|r| [r.j_true, r.j_est]),
    );
    let mut out = String::new();
    open_svg(&mut out, title, "bond index i", "coupling J", &frame);
    let mut line = String::from("<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"");
    for row in rows {
        line.push_str(&format!("{:.2},{:.2} ", frame.x(row.i as f64), frame.y(row.j_true)));
    }
    line.push_str("\"/>\n");
    out.push_str(&line);
    for row in rows {
        if row.j_est.is_finite() {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"none\" stroke=\"crimson\"/>\n",
                frame.x(row.i as f64),
                frame.y(row.j_est)
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Weights as stems against eigenvalue; truncated modes drawn dashed.
pub fn spectrum_svg(title: &str, rows: &[SpectrumRow]) -> String {
    let frame = Frame::new(
        rows.iter().map(|r| r.lambda),
        rows.iter().map(|r| r.c1).chain(std::iter::once(0.0)),
    );
    let mut out = String::new();
    open_svg(&mut out, title, "eigenvalue lambda", "weight C1", &frame);
    let base = frame.y(0.0);
    for row in rows {
        let x = frame.x(row.lambda);
        let style = if row.truncated {
            "stroke=\"gray\" stroke-dasharray=\"3 2\""
        } else {
            "stroke=\"steelblue\""
        };
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{base:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" {style} \
             stroke-width=\"1.5\"/>\n",
            frame.y(row.c1)
        ));
    }
    out.push_str("</svg>\n");
    out
}
