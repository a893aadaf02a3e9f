//! Run artifacts: the per-round metrics table, a human-readable summary,
//! and standalone SVG charts.
//!
//! Everything here renders to strings; callers decide where the bytes
//! land. Float columns use the shortest decimal form that parses back to
//! the identical value, so rewriting a run with the same seed yields a
//! byte-identical table.

use crate::config::SimulationConfig;
use crate::driver::{RoundMetrics, SimulationOutput};

/// Column order of [`metrics_csv`], one metrics field per column.
pub const METRICS_COLUMNS: [&str; 19] = [
    "round",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "mean_local_loss",
    "uplink_bytes",
    "downlink_bytes",
    "ledger_bytes",
    "gas",
    "update_cost",
    "transmitted",
    "accepted",
    "rejected",
    "approvals",
    "validators",
    "committed",
    "mean_divergence",
    "max_divergence",
];

/// Renders the per-round table, header first, one row per round.
pub fn metrics_csv(rounds: &[RoundMetrics]) -> String {
    let mut out = METRICS_COLUMNS.join(",");
    out.push('\n');
    for m in rounds {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            m.round,
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            m.mean_local_loss,
            m.uplink_bytes,
            m.downlink_bytes,
            m.ledger_bytes,
            m.gas,
            m.update_cost,
            m.transmitted,
            m.accepted,
            m.rejected,
            m.approvals,
            m.validators,
            m.committed,
            m.mean_divergence,
            m.max_divergence,
        ));
    }
    out
}

fn format_bytes(bytes: f64) -> String {
    if bytes >= 1e9 {
        format!("{:.2} GB", bytes / 1e9)
    } else if bytes >= 1e6 {
        format!("{:.2} MB", bytes / 1e6)
    } else if bytes >= 1e3 {
        format!("{:.2} kB", bytes / 1e3)
    } else {
        format!("{bytes:.0} B")
    }
}

/// Plain-text digest of a finished run.
pub fn summary_text(cfg: &SimulationConfig, out: &SimulationOutput) -> String {
    let mut s = String::new();
    let push = |s: &mut String, line: String| {
        s.push_str(&line);
        s.push('\n');
    };

    push(&mut s, "federated intrusion-detection simulation".into());
    push(&mut s, format!(
        "nodes {} | rounds {} | seed {} | validators {} | aggregation {:?}",
        cfg.nodes, cfg.rounds, cfg.seed, cfg.validators, cfg.aggregation_mode
    ));
    push(&mut s, format!(
        "learning rate {} | epochs {} | batch {} | clip {} | noise scale {}",
        cfg.train.learning_rate,
        cfg.train.local_epochs,
        cfg.train.batch_size,
        cfg.dp.clip_norm(),
        cfg.dp.noise_scale()
    ));
    push(&mut s, format!(
        "validation {} | max divergence {} | max anomaly {} | sparsity {} | transmit every {} round(s)",
        if cfg.contract_enabled { "on" } else { "off" },
        cfg.contract.max_divergence(),
        cfg.contract.max_anomaly(),
        cfg.sparsity_rho,
        cfg.update_every
    ));
    push(&mut s, String::new());

    push(&mut s, format!(
        "test split: {} rows, {:.1}% positive",
        out.test_rows,
        out.test_positive_fraction * 100.0
    ));
    let train_total: usize = out.node_sizes.iter().map(|(_, t, _)| t).sum();
    let holdout_total: usize = out.node_sizes.iter().map(|(_, _, h)| h).sum();
    push(&mut s, format!(
        "node shares: {} training rows, {} holdout rows across {} nodes",
        train_total,
        holdout_total,
        out.node_sizes.len()
    ));
    push(&mut s, String::new());

    push(&mut s, format!(
        "initial model: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        out.initial_metrics.accuracy,
        out.initial_metrics.precision,
        out.initial_metrics.recall,
        out.initial_metrics.f1
    ));
    if let Some(last) = out.rounds.last() {
        push(&mut s, format!(
            "final model:   accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
            last.accuracy, last.precision, last.recall, last.f1
        ));
    } else {
        push(&mut s, "final model:   no rounds ran".into());
    }
    match out.rounds_to_target {
        Some(r) => push(&mut s, format!(
            "target accuracy {} sustained from round {r}",
            cfg.target_accuracy
        )),
        None => push(&mut s, format!(
            "target accuracy {} was not sustained for three consecutive rounds",
            cfg.target_accuracy
        )),
    }
    push(&mut s, String::new());

    let sum = |f: fn(&RoundMetrics) -> u64| out.rounds.iter().map(f).sum::<u64>();
    let uplink = sum(|m| m.uplink_bytes);
    let downlink = sum(|m| m.downlink_bytes);
    let ledger = sum(|m| m.ledger_bytes);
    let gas: f64 = out.rounds.iter().map(|m| m.gas).sum();
    let cost: f64 = out.rounds.iter().map(|m| m.update_cost).sum();
    let committed = out.rounds.iter().filter(|m| m.committed).count();
    push(&mut s, format!(
        "traffic: uplink {} | downlink {} | ledger {}",
        format_bytes(uplink as f64),
        format_bytes(downlink as f64),
        format_bytes(ledger as f64)
    ));
    push(&mut s, format!(
        "gas {gas} | update cost {cost} | blocks committed {committed} of {} rounds | chain height {}",
        out.rounds.len(),
        out.chain.tip().height()
    ));
    let accepted: u32 = out.rounds.iter().map(|m| m.accepted).sum();
    let rejected: u32 = out.rounds.iter().map(|m| m.rejected).sum();
    push(&mut s, format!("updates: {accepted} accepted, {rejected} rejected"));
    push(&mut s, String::new());

    push(&mut s, "node reputation / trust".into());
    for (id, rep) in &out.reputations {
        let share = out
            .trust
            .iter()
            .find(|(n, _)| n == id)
            .map(|(_, t)| *t)
            .unwrap_or(0.0);
        push(&mut s, format!("  node {id}: reputation {rep} trust {share:.4}"));
    }

    if !out.events.is_empty() {
        push(&mut s, String::new());
        push(&mut s, "events".into());
        for e in &out.events {
            push(&mut s, format!("  {e}"));
        }
    }
    s
}

const PLOT_W: f64 = 760.0;
const PLOT_H: f64 = 440.0;
const MARGIN_L: f64 = 84.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

struct Series {
    label: &'static str,
    color: &'static str,
    values: Vec<f64>,
}

/// Shared line-chart scaffold: one x step per round, labeled y ticks,
/// one polyline per series, legend in the top margin.
fn line_chart(title: &str, y_label: &str, series: &[Series], y_tick: impl Fn(f64) -> String) -> String {
    let rounds = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let y_max = series
        .iter()
        .flat_map(|s| s.values.iter())
        .cloned()
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let x_of = |round: usize| {
        if rounds <= 1 {
            MARGIN_L + (PLOT_W - MARGIN_L - MARGIN_R) / 2.0
        } else {
            MARGIN_L + (round as f64) / (rounds as f64 - 1.0) * (PLOT_W - MARGIN_L - MARGIN_R)
        }
    };
    let y_of = |v: f64| PLOT_H - MARGIN_B - (v / y_max) * (PLOT_H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\" \
         font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"20\" font-size=\"14\">{title}</text>\n"
    ));

    // Horizontal grid with y tick labels.
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\"/>\n",
            PLOT_W - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            y_tick(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">{y_label}</text>\n",
        (MARGIN_T + PLOT_H - MARGIN_B) / 2.0,
        (MARGIN_T + PLOT_H - MARGIN_B) / 2.0
    ));

    // X axis: round numbers at a handful of ticks.
    let axis_y = PLOT_H - MARGIN_B;
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\" stroke=\"black\"/>\n",
        PLOT_W - MARGIN_R
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{axis_y:.2}\" stroke=\"black\"/>\n"
    ));
    if rounds > 0 {
        let ticks = rounds.min(10);
        for t in 0..ticks {
            let round = if ticks == 1 { 0 } else { t * (rounds - 1) / (ticks - 1) };
            let x = x_of(round);
            svg.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
                axis_y + 18.0,
                round + 1
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">round</text>\n",
        (MARGIN_L + PLOT_W - MARGIN_R) / 2.0,
        PLOT_H - 16.0
    ));

    for (i, s) in series.iter().enumerate() {
        if !s.values.is_empty() {
            let points: Vec<String> = s
                .values
                .iter()
                .enumerate()
                .map(|(r, v)| format!("{:.2},{:.2}", x_of(r), y_of(*v)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                s.color,
                points.join(" ")
            ));
        }
        let legend_x = MARGIN_L + 150.0 * i as f64 + 160.0;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"16\" x2=\"{:.2}\" y2=\"16\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            legend_x,
            legend_x + 18.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"20\">{}</text>\n",
            legend_x + 24.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Accuracy and F1 per round, y axis pinned to [0, 1].
pub fn accuracy_chart(out: &SimulationOutput) -> String {
    let series = [
        Series {
            label: "accuracy",
            color: "#1f6fb2",
            values: out.rounds.iter().map(|m| m.accuracy).collect(),
        },
        Series {
            label: "f1",
            color: "#c05020",
            values: out.rounds.iter().map(|m| m.f1).collect(),
        },
        Series {
            label: "target",
            color: "#999999",
            values: vec![1.0; out.rounds.len().max(2)],
        },
    ];
    // The constant 1.0 series pins the scale so accuracy reads as a
    // fraction of the whole axis.
    line_chart("classification quality per round", "score", &series, |v| {
        format!("{v:.2}")
    })
}

/// Cumulative uplink, downlink, and ledger bytes per round.
pub fn traffic_chart(out: &SimulationOutput) -> String {
    let cumulative = |f: fn(&RoundMetrics) -> u64| {
        let mut total = 0.0;
        out.rounds
            .iter()
            .map(|m| {
                total += f(m) as f64;
                total
            })
            .collect::<Vec<f64>>()
    };
    let series = [
        Series {
            label: "uplink",
            color: "#1f6fb2",
            values: cumulative(|m| m.uplink_bytes),
        },
        Series {
            label: "downlink",
            color: "#c05020",
            values: cumulative(|m| m.downlink_bytes),
        },
        Series {
            label: "ledger",
            color: "#2d8a4e",
            values: cumulative(|m| m.ledger_bytes),
        },
    ];
    line_chart("cumulative traffic", "bytes", &series, format_bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SyntheticSpec;
    use crate::driver::run_simulation;
    use crate::model::{DpConfig, TrainConfig};

    fn sample_output() -> (SimulationConfig, SimulationOutput) {
        let mut cfg = SimulationConfig::default();
        cfg.nodes = 3;
        cfg.validators = 3;
        cfg.rounds = 4;
        cfg.synthetic = SyntheticSpec::new(300, 6, 0.5, 0.5, 0.0).unwrap();
        cfg.train = TrainConfig::new(0.5, 1, 32).unwrap();
        cfg.dp = DpConfig::new(5.0, 0.0).unwrap();
        cfg.seed = 3;
        let out = run_simulation(&cfg).unwrap();
        (cfg, out)
    }

    #[test]
    fn csv_has_the_documented_header_and_one_row_per_round() {
        let (_, out) = sample_output();
        let csv = metrics_csv(&out.rounds);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), METRICS_COLUMNS.join(","));
        assert_eq!(lines.count(), 4);
        for line in csv.lines().skip(1) {
            assert_eq!(line.split(',').count(), METRICS_COLUMNS.len());
        }
    }

    #[test]
    fn csv_float_columns_parse_back_to_identical_values() {
        let (_, out) = sample_output();
        let csv = metrics_csv(&out.rounds);
        for (row, m) in csv.lines().skip(1).zip(&out.rounds) {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields[0].parse::<u32>().unwrap(), m.round);
            assert_eq!(fields[1].parse::<f64>().unwrap(), m.accuracy);
            assert_eq!(fields[5].parse::<f64>().unwrap(), m.mean_local_loss);
            assert_eq!(fields[9].parse::<f64>().unwrap(), m.gas);
            assert_eq!(fields[16].parse::<bool>().unwrap(), m.committed);
            assert_eq!(fields[18].parse::<f64>().unwrap(), m.max_divergence);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let (cfg, out) = sample_output();
        assert_eq!(metrics_csv(&out.rounds), metrics_csv(&out.rounds));
        assert_eq!(summary_text(&cfg, &out), summary_text(&cfg, &out));
        assert_eq!(accuracy_chart(&out), accuracy_chart(&out));
    }

    #[test]
    fn summary_mentions_the_headline_numbers() {
        let (cfg, out) = sample_output();
        let text = summary_text(&cfg, &out);
        assert!(text.contains("nodes 3 | rounds 4"));
        assert!(text.contains("initial model"));
        assert!(text.contains("final model"));
        assert!(text.contains("node 0"));
        assert!(text.contains("uplink"));
        let last = out.rounds.last().unwrap();
        assert!(text.contains(&format!("{:.4}", last.accuracy)));
    }

    #[test]
    fn charts_are_self_contained_svg_documents() {
        let (_, out) = sample_output();
        for svg in [accuracy_chart(&out), traffic_chart(&out)] {
            assert!(svg.starts_with("<svg xmlns"));
            assert!(svg.trim_end().ends_with("</svg>"));
            assert!(svg.matches("<polyline").count() >= 2);
            // One x coordinate per round on the first data polyline.
            let points = svg.split("points=\"").nth(1).unwrap();
            let points = &points[..points.find('"').unwrap()];
            assert_eq!(points.split(' ').count(), out.rounds.len());
        }
    }

    #[test]
    fn empty_runs_render_without_data_rows() {
        let (mut cfg, _) = sample_output();
        cfg.rounds = 0;
        let out = run_simulation(&cfg).unwrap();
        let csv = metrics_csv(&out.rounds);
        assert_eq!(csv.lines().count(), 1, "header only");
        let svg = accuracy_chart(&out);
        assert!(svg.starts_with("<svg"));
        let text = summary_text(&cfg, &out);
        assert!(text.contains("no rounds ran"));
    }

    #[test]
    fn byte_quantities_humanize_by_magnitude() {
        assert_eq!(format_bytes(512.0), "512 B");
        assert_eq!(format_bytes(2048.0), "2.05 kB");
        assert_eq!(format_bytes(3_500_000.0), "3.50 MB");
        assert_eq!(format_bytes(7_250_000_000.0), "7.25 GB");
    }
}
