//! Plot scripts for norm tables.

use crate::artifacts::NormRow;

/// Gnuplot script drawing every series of `rows` (read from `data`) on
/// log–log axes.
pub fn gnuplot_script(data: &str, rows: &[NormRow]) -> String {
    let mut kinds: Vec<&str> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.kind.as_str()) {
            kinds.push(&r.kind);
        }
    }
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set logscale xy\n");
    s.push_str("set format y \"%.0e\"\n");
    s.push_str("set xlabel \"t\"\n");
    s.push_str("set ylabel \"weighted norm\"\n");
    s.push_str("set key outside right\n");
    s.push_str("set grid\n");
    let data = data.replace('\'', "''");
    let lines: Vec<String> = kinds
        .iter()
        .map(|k| {
            format!(
                "'{data}' every ::1 using 1:(($1 > 0 && strcol(5) eq \"{k}\") ? $2 : NaN) with linespoints title \"{k}\""
            )
        })
        .collect();
    if lines.is_empty() {
        s.push_str("# no series\n");
    } else {
        s.push_str("plot ");
        s.push_str(&lines.join(", \\\n     "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_plot_clause_per_kind() {
        let row = |k: &str| NormRow {
            t: 1.0,
            norm: 2.0,
            weight_s1: 0.5,
            weight_s2: 0.5,
            kind: k.into(),
        };
        let s = gnuplot_script("cmp.csv", &[row("wave-u"), row("heat-u"), row("wave-u")]);
        assert_eq!(s.matches("linespoints").count(), 2);
        assert!(s.contains("set logscale xy"));
    }
}
