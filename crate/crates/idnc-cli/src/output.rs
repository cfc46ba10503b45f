//! CSV assembly.
//!
//! All output is built in memory and written in one call, so a failing run
//! never leaves a partial file behind.  Floats are printed with six decimal
//! places and rows are emitted in a fixed order, which makes the files
//! byte-identical across reruns of the same seed and config.

use std::fs;
use std::path::Path;

use idnc_core::sim::AggregateMetrics;

/// Column order of the per-experiment summary CSV.
pub const RUN_HEADER: &str = "policy,n_packets,m_receivers,channel,mean_oct,se_oct,mean_delay,se_delay,delay_var,se_var,n_blocks,seed";

/// Fixed-precision float, or NA where a scheme has no decoding-delay notion.
fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.6}"),
        None => "NA".to_string(),
    }
}

/// One summary row matching [`RUN_HEADER`].
pub fn summary_row(
    policy: &str,
    n_packets: usize,
    m_receivers: usize,
    channel: &str,
    agg: &AggregateMetrics,
    seed: u64,
) -> String {
    format!(
        "{policy},{n_packets},{m_receivers},{channel},{:.6},{:.6},{},{},{},{},{},{seed}",
        agg.mean_oct,
        agg.se_oct,
        fmt_opt(agg.mean_delay),
        fmt_opt(agg.se_delay),
        fmt_opt(agg.mean_delay_variance),
        fmt_opt(agg.se_delay_variance),
        agg.n_blocks,
    )
}

/// One point of a completion-time versus decoding-delay tradeoff curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub policy: String,
    pub axis_value: String,
    pub mean_oct: f64,
    pub mean_delay: Option<f64>,
}

/// Plot-ready tradeoff CSV: one (mean OCT, mean delay) pair per policy per
/// axis value.  An empty sweep still gets the header.
pub fn tradeoff_csv(axis_column: &str, points: &[TradeoffPoint]) -> String {
    let mut out = format!("policy,{axis_column},mean_oct,mean_delay\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{:.6},{}\n",
            p.policy,
            p.axis_value,
            p.mean_oct,
            fmt_opt(p.mean_delay)
        ));
    }
    out
}

/// Writes the tradeoff CSV next to the sweep output, surfacing the path on
/// I/O failure.
pub fn write_plotdata(
    path: &Path,
    axis_column: &str,
    points: &[TradeoffPoint],
) -> Result<(), String> {
    fs::write(path, tradeoff_csv(axis_column, points))
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}
