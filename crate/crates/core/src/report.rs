//! Text and CSV rendering shared by the engine reports and the CLI.

use std::fmt::Write as _;

use crate::bayesnet::{clamp_for_report, PathDistribution};

/// Shortest round-trip decimal; exponent form for very small or large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Column names x0,…,xN.
pub fn path_columns(n_times: usize) -> Vec<String> {
    (0..n_times).map(|t| format!("x{t}")).collect()
}

/// `# key = value` header lines.
pub fn header_block(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

/// CSV of one distribution: x0..xN,probability. Negative round-off is
/// clamped to zero.
pub fn distribution_csv(dist: &PathDistribution, header: &[(String, String)]) -> String {
    let mut out = header_block(header);
    let mut cols = path_columns(dist.n_times());
    cols.push("probability".into());
    let _ = writeln!(out, "{}", cols.join(","));
    for (path, p) in dist.iter() {
        let mut fields: Vec<String> = path.0.iter().map(|x| x.to_string()).collect();
        fields.push(fmt_f64(clamp_for_report(p)));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Largest entrywise deviation over all pairs of distributions.
pub fn max_pairwise_deviation(dists: &[&PathDistribution]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in dists.iter().enumerate() {
        for b in &dists[i + 1..] {
            worst = worst.max(a.max_abs_diff(b));
        }
    }
    worst
}

/// Side-by-side CSV of several distributions of the same scenario, with the
/// maximum pairwise deviation in the header.
pub fn comparison_csv(dists: &[&PathDistribution], header: &[(String, String)]) -> String {
    let mut header = header.to_vec();
    header.push((
        "max_pairwise_deviation".into(),
        fmt_f64(max_pairwise_deviation(dists)),
    ));
    let mut out = header_block(&header);
    let Some(first) = dists.first() else {
        return out;
    };
    let mut cols = path_columns(first.n_times());
    cols.extend(dists.iter().map(|d| d.method.as_str().to_string()));
    let _ = writeln!(out, "{}", cols.join(","));
    for (k, (path, _)) in first.iter().enumerate() {
        let mut fields: Vec<String> = path.0.iter().map(|x| x.to_string()).collect();
        fields.extend(
            dists
                .iter()
                .map(|d| fmt_f64(clamp_for_report(d.probabilities()[k]))),
        );
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// A named block of `key = value` lines ending with a pass flag.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValueReport {
    pub name: String,
    pub entries: Vec<(String, String)>,
    pub pass: bool,
}

impl KeyValueReport {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            entries: Vec::new(),
            pass,
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn with_f64(self, key: impl Into<String>, value: f64) -> Self {
        self.with(key, fmt_f64(value))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("[{}]\n", self.name);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "pass = {}", self.pass);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, 0.5, 1.0, 1e-20, 0.1192029220221176, 3.5e17, -2.5e-9] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }

    #[test]
    fn key_value_block() {
        let r = KeyValueReport::new("check", true).with_f64("defect", 1e-12).with("n", 4);
        assert_eq!(r.to_text(), "[check]\ndefect = 1e-12\nn = 4\npass = true\n");
    }
}
