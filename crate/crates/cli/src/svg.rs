//! Fidelity heatmap with the plotted values embedded as CSV in `<metadata>`.

use std::fmt::Write;

use dmsim::fpo::FidelityProfile;

const STEPS: usize = 256;
const PLOT: f64 = 400.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const BAR_X: f64 = LEFT + PLOT + 30.0;
const BAR_W: f64 = 20.0;

fn color(v: f64, lo: f64) -> String {
    let x = if lo < 1.0 {
        ((v - lo) / (1.0 - lo)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let step = ((x * (STEPS - 1) as f64).round() as usize).min(STEPS - 1);
    format!("#{:x}", colorous::VIRIDIS.eval_rational(step, STEPS))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// γ runs left to right, τ bottom to top. Colors are linear in fidelity on
/// [clip_min, 1]; lower values share the bottom color.
pub fn heatmap(p: &FidelityProfile, clip_min: f64, title: &str) -> String {
    let (ng, nt) = (p.gamma_axis.len(), p.tau_axis.len());
    let (cw, ch) = (PLOT / ng as f64, PLOT / nt as f64);
    let mut s = String::new();
    let w = BAR_X + BAR_W + 90.0;
    let h = TOP + PLOT + 60.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    s.push_str("<metadata><![CDATA[\ngamma,tau,fidelity\n");
    for (g, t, f) in p.rows() {
        let _ = writeln!(s, "{g},{t},{f}");
    }
    s.push_str("]]></metadata>\n");
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="{}">{} (min {:.6})</text>"#,
        TOP - 15.0,
        escape(title),
        p.min
    );

    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (i, row) in p.values.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            let x = LEFT + i as f64 * cw;
            let y = TOP + PLOT - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#,
                color(f, clip_min)
            );
        }
    }
    let bar_step = PLOT / STEPS as f64;
    for k in 0..STEPS {
        let y = TOP + PLOT - (k + 1) as f64 * bar_step;
        let _ = writeln!(
            s,
            r##"<rect x="{BAR_X}" y="{y:.3}" width="{BAR_W}" height="{bar_step:.3}" fill="#{:x}"/>"##,
            colorous::VIRIDIS.eval_rational(k, STEPS)
        );
    }
    s.push_str("</g>\n");

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let axis_y = TOP + PLOT + 18.0;
    let first = |v: &[f64]| v.first().copied().unwrap_or(0.0);
    let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="{axis_y}">{}</text>"#,
        first(&p.gamma_axis)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{axis_y}" text-anchor="end">{}</text>"#,
        LEFT + PLOT,
        last(&p.gamma_axis)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">γ</text>"#,
        LEFT + PLOT / 2.0,
        axis_y + 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        LEFT - 6.0,
        TOP + PLOT,
        first(&p.tau_axis)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        LEFT - 6.0,
        TOP + 12.0,
        last(&p.tau_axis)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">τ</text>"#,
        LEFT - 30.0,
        TOP + PLOT / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">1</text>"#,
        BAR_X + BAR_W + 6.0,
        TOP + 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{clip_min}</text>"#,
        BAR_X + BAR_W + 6.0,
        TOP + PLOT
    );
    s.push_str("</svg>\n");
    s
}
