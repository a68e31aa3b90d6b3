//! Minimal deterministic SVG emitters for the report artifacts.

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         fill=\"white\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Observed-vs-predicted scatter with the identity line.
pub fn scatter_svg(title: &str, observed: &[f64], predicted: &[f64]) -> String {
    let mut svg = header(title);
    let all: Vec<f64> = observed.iter().chain(predicted).copied().collect();
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (max - min).max(1e-12);
    let lo = min - 0.05 * span;
    let hi = max + 0.05 * span;
    let to_x = |v: f64| MARGIN + (v - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN);
    let to_y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#888\" \
         stroke-dasharray=\"5,4\"/>\n",
        to_x(lo),
        to_y(lo),
        to_x(hi),
        to_y(hi)
    ));
    for (o, p) in observed.iter().zip(predicted) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"#1f6fb2\" fill-opacity=\"0.75\"/>\n",
            to_x(*o),
            to_y(*p)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">observed</text>\n",
        WIDTH / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 16 {})\">predicted</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bar chart of labeled magnitudes (importances, RMSE values).
pub fn bar_chart_svg(title: &str, labels: &[String], values: &[f64]) -> String {
    let mut svg = header(title);
    let max = values.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-12);
    let usable = HEIGHT - MARGIN - 40.0;
    let slot = usable / labels.len().max(1) as f64;
    let bar = (slot * 0.62).min(26.0);
    for (i, (label, value)) in labels.iter().zip(values).enumerate() {
        let y = 40.0 + i as f64 * slot;
        let w = value.abs() / max * (WIDTH - 2.0 * MARGIN - 120.0);
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\n",
            MARGIN + 120.0,
            y,
            w,
            bar,
            if *value >= 0.0 { "#1f6fb2" } else { "#b23a1f" }
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{}</text>\n",
            MARGIN + 112.0,
            y + bar * 0.75,
            escape(label)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             fill=\"#333\">{:.4}</text>\n",
            MARGIN + 124.0 + w,
            y + bar * 0.75,
            value
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emitters_are_deterministic_and_well_formed() {
        let labels = vec!["solvent".to_string(), "time".to_string()];
        let a = bar_chart_svg("importances", &labels, &[0.5, -0.1]);
        let b = bar_chart_svg("importances", &labels, &[0.5, -0.1]);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        let s = scatter_svg("fit", &[0.0, 0.5, 1.0], &[0.1, 0.45, 0.95]);
        assert_eq!(s.matches("<circle").count(), 3);
    }

    #[test]
    fn labels_are_escaped() {
        let labels = vec!["a<b".to_string()];
        let svg = bar_chart_svg("t&t", &labels, &[1.0]);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("t&amp;t"));
    }
}
