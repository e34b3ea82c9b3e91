//! Static SVG phase-plane plot for the limit-cycle comparison.

use std::path::Path;

use plotters::prelude::*;

/// Polar state `(radius, angle)` as a point of the plane.
fn to_plane(theta: &[f64]) -> (f64, f64) {
    (theta[0] * theta[1].cos(), theta[0] * theta[1].sin())
}

/// Draw both trajectories with `(θ₁, θ₂)` read as radius and angle, plus
/// the unit circle.
pub fn phase_plane_svg(path: &Path, flow: &[Vec<f64>], gd: &[Vec<f64>]) -> Result<(), String> {
    let flow_xy: Vec<(f64, f64)> = flow
        .iter()
        .map(|t| to_plane(t))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let gd_xy: Vec<(f64, f64)> = gd
        .iter()
        .map(|t| to_plane(t))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let extent = flow_xy
        .iter()
        .chain(&gd_xy)
        .fold(1.2f64, |m, (x, y)| m.max(x.abs()).max(y.abs()))
        * 1.05;

    let root = SVGBackend::new(path, (720, 720)).into_drawing_area();
    let err = |e: &dyn std::fmt::Display| e.to_string();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .caption(
            "limit-cycle phase plane (radius = theta_0, angle = theta_1)",
            ("sans-serif", 18),
        )
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(-extent..extent, -extent..extent)
        .map_err(|e| err(&e))?;
    chart.configure_mesh().draw().map_err(|e| err(&e))?;

    let circle = (0..=360).map(|i| {
        let a = (i as f64).to_radians();
        (a.cos(), a.sin())
    });
    chart
        .draw_series(LineSeries::new(circle, BLACK.mix(0.4)))
        .map_err(|e| err(&e))?
        .label("unit circle")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK.mix(0.4)));
    chart
        .draw_series(LineSeries::new(flow_xy, &BLUE))
        .map_err(|e| err(&e))?
        .label("gradient flow")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE));
    chart
        .draw_series(LineSeries::new(gd_xy, &RED))
        .map_err(|e| err(&e))?
        .label("gradient descent")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], RED));
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))
}
