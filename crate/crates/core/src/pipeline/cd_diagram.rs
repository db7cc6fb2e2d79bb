//! Critical-difference diagram: methods on an average-rank axis with a bar
//! of length CD starting at the control method.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{PipelineError, Result};
use crate::stat_tests::RankMatrix;

const LEFT: f64 = 60.0;
const UNIT: f64 = 120.0;
const AXIS_Y: f64 = 60.0;
const LABEL_STEP: f64 = 18.0;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// x coordinate of an average rank; one rank unit is `UNIT` pixels.
fn x_of(rank: f64) -> f64 {
    LEFT + (rank - 1.0) * UNIT
}

/// Renders the diagram as a standalone SVG document.
pub fn render_cd_diagram(ranks: &RankMatrix, cd: f64, control: &str) -> Result<String> {
    let m = ranks.methods.len();
    if m == 0 {
        return Err(PipelineError::Config("rank matrix has no methods".into()));
    }
    if !cd.is_finite() || cd < 0.0 {
        return Err(PipelineError::Config(format!(
            "critical difference must be finite and non-negative, got {cd}"
        )));
    }
    let c = ranks
        .methods
        .iter()
        .position(|name| name == control)
        .ok_or_else(|| {
            PipelineError::Config(format!("control method {control:?} is not ranked"))
        })?;
    let control_rank = ranks.avg_rank[c];
    let right_rank = (m as f64).max(control_rank + cd);
    let width = x_of(right_rank) + LEFT;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        ranks.avg_rank[a]
            .total_cmp(&ranks.avg_rank[b])
            .then(a.cmp(&b))
    });
    let height = AXIS_Y + 40.0 + LABEL_STEP * m as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"  <line class="axis" x1="{:.3}" y1="{AXIS_Y}" x2="{:.3}" y2="{AXIS_Y}" stroke="black"/>"#,
        x_of(1.0),
        x_of(m as f64)
    );
    for r in 1..=m {
        let x = x_of(r as f64);
        let _ = writeln!(
            svg,
            r#"  <line class="axis-tick" x1="{x:.3}" y1="{}" x2="{x:.3}" y2="{AXIS_Y}" stroke="black"/>"#,
            AXIS_Y - 5.0
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{x:.3}" y="{}" text-anchor="middle">{r}</text>"#,
            AXIS_Y - 9.0
        );
    }
    let bar_y = AXIS_Y - 30.0;
    let _ = writeln!(
        svg,
        r#"  <line class="cd-bar" data-length="{cd}" x1="{:.3}" y1="{bar_y}" x2="{:.3}" y2="{bar_y}" stroke="black" stroke-width="3"/>"#,
        x_of(control_rank),
        x_of(control_rank + cd)
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.3}" y="{}" text-anchor="middle">CD = {cd:.3}</text>"#,
        x_of(control_rank + cd / 2.0),
        bar_y - 6.0
    );
    for (slot, &j) in order.iter().enumerate() {
        let rank = ranks.avg_rank[j];
        let x = x_of(rank);
        let label_y = AXIS_Y + 24.0 + LABEL_STEP * slot as f64;
        let name = escape(&ranks.methods[j]);
        let _ = writeln!(
            svg,
            r#"  <line class="tick" data-method="{name}" data-rank="{rank}" x1="{x:.3}" y1="{AXIS_Y}" x2="{x:.3}" y2="{:.1}" stroke="gray"/>"#,
            label_y - 4.0
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{:.3}" y="{label_y:.1}">{name} ({rank:.2})</text>"#,
            x + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_cd_diagram(ranks: &RankMatrix, cd: f64, control: &str, path: &Path) -> Result<()> {
    let svg = render_cd_diagram(ranks, cd, control)?;
    fs::write(path, svg).map_err(|source| PipelineError::File {
        path: path.to_path_buf(),
        source,
    })
}
