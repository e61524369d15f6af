//! Explicit number formatting for stdout reports.

/// Six significant digits, in positional notation for moderate magnitudes
/// and scientific otherwise: `0.00831777`, `1.23457e-7`.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, v)
    } else {
        sci
    }
}

pub fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| sig6(x)).collect();
    format!("({})", parts.join(", "))
}

pub fn order(o: Option<f64>) -> String {
    o.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// CSV text as a gnuplot data block: header turned into a comment,
/// commas into spaces.
pub fn csv_to_gnuplot(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len() + 2);
    for (i, line) in csv.lines().enumerate() {
        if i == 0 {
            out.push_str("# ");
        }
        out.push_str(&line.replace(',', " "));
        out.push('\n');
    }
    out
}
