//! Builds step, Bode, root-locus and pole-zero payloads for one plant and
//! writes each as JSON data and as an SVG drawing.
//!
//! ```text
//! cargo run -p agentctl --example plot_export -- [out_dir]
//! ```

use agentctl::plot::{render_svg, PlotPayload};
use agentctl_control::*;

fn main() -> Result<()> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("agentctl-plots"));
    std::fs::create_dir_all(&dir).expect("output directory");
    let sys: LinearSystem = make_tf(&[1.0, 3.0], &[1.0, 4.16, 3.16])?.into();

    let payloads = [
        (
            "step",
            PlotPayload::time(&time_response(&sys, TimeResponseKind::Step, &TimeGrid::default())?, "Step response"),
        ),
        ("bode", PlotPayload::frequency(&frequency_response(&sys, FrequencyResponseKind::Bode, None)?, "Bode diagram")),
        (
            "nyquist",
            PlotPayload::frequency(&frequency_response(&sys, FrequencyResponseKind::Nyquist, None)?, "Nyquist diagram"),
        ),
        ("root_locus", PlotPayload::root_locus(&root_locus_data(&sys, None)?, "Root locus")),
        ("pzmap", PlotPayload::pole_zero(&poles(&sys)?, &zeros(&sys)?, "Pole-zero map")),
    ];
    for (name, p) in &payloads {
        let json = dir.join(format!("{name}.json"));
        let svg = dir.join(format!("{name}.svg"));
        std::fs::write(&json, serde_json::to_string_pretty(p).unwrap()).expect("write json");
        std::fs::write(&svg, render_svg(p)).expect("write svg");
        println!("{:<10} {} series -> {}", name, p.series.len(), svg.display());
    }
    Ok(())
}
