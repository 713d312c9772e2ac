//! Fixed-format CSV and plot-data writers.

use std::fmt::Write as _;

use aes_core::simulator::{Protocol, SimReport, Stat, SummaryRow};

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn num(x: f64) -> String {
    fmt_sig(x, 6)
}

pub const RUNS_HEADER: &str = "run_id,seed,protocol,total_energy_j,mean_node_energy_j,packets_generated,packets_delivered,active_s,passive_s,sleep_s,lifetime_s";

/// Per-run CSV. `base_seed` turns seeds back into run indices.
pub fn runs_csv(reports: &[SimReport], base_seed: u64) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.seed.wrapping_sub(base_seed),
            r.seed,
            r.protocol.name(),
            num(r.total_energy_j),
            num(r.mean_node_energy_j()),
            r.packets_generated,
            r.packets_delivered,
            num(r.active_s),
            num(r.passive_s),
            num(r.sleep_s),
            num(r.lifetime_s),
        )
        .expect("writing to a string");
    }
    out
}

const SUMMARY_METRICS: [&str; 9] = [
    "total_energy_j",
    "mean_node_energy_j",
    "packets_generated",
    "packets_delivered",
    "active_s",
    "passive_s",
    "sleep_s",
    "lifetime_s",
    "savings_pct",
];

pub fn summary_header() -> String {
    let mut cols = vec!["protocol".to_string(), "runs".to_string()];
    for m in &SUMMARY_METRICS[..8] {
        cols.push(format!("{m}_mean"));
        cols.push(format!("{m}_std"));
    }
    cols.push(SUMMARY_METRICS[8].to_string());
    cols.join(",")
}

/// Campaign summary; `savings_pct` is empty when there is nothing to compare.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = summary_header();
    out.push('\n');
    for row in rows {
        let stats: [Stat; 8] = [
            row.total_energy_j,
            row.mean_node_energy_j,
            row.packets_generated,
            row.packets_delivered,
            row.active_s,
            row.passive_s,
            row.sleep_s,
            row.lifetime_s,
        ];
        let mut cols = vec![row.protocol.name().to_string(), row.runs.to_string()];
        for s in stats {
            cols.push(num(s.mean));
            cols.push(num(s.std));
        }
        cols.push(row.savings_pct.map(num).unwrap_or_default());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Two-column plot data, one block per series, blocks separated by a blank
/// line and introduced by a `# NAME` comment.
pub fn plot_blocks(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let mut out = format!("# {title}\n# columns: {x_label} {y_label}\n");
    for (i, (name, points)) in series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "# {name}").expect("writing to a string");
        for &(x, y) in points {
            writeln!(out, "{} {}", num(x), num(y)).expect("writing to a string");
        }
    }
    out
}

/// Lifetime per protocol, x = 1-based position with a legend in comments.
pub fn lifetime_plot(rows: &[(Protocol, f64)]) -> String {
    let mut out =
        String::from("# mean lifetime per protocol\n# columns: protocol_index lifetime_s\n");
    for (i, (p, _)) in rows.iter().enumerate() {
        writeln!(out, "# {} {}", i + 1, p.name()).expect("writing to a string");
    }
    for (i, (_, y)) in rows.iter().enumerate() {
        writeln!(out, "{} {}", i + 1, num(*y)).expect("writing to a string");
    }
    out
}
