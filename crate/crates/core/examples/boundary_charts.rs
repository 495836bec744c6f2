//! Graph charts of a paraboloid: second-order bound and normal-component estimate.
use qclab::charts::{c2_diagnostic, chart_pairs, chart_product_bound, GraphChart, Isometry};

fn main() -> qclab::Result<()> {
    for a in [0.5, 1.0, 2.0] {
        let chart = GraphChart::paraboloid(Isometry::identity(3), a, 0.75)?;
        let measured = c2_diagnostic(&chart, 5000, 11)?;
        let mut worst = 0.0f64;
        for (z, w) in chart_pairs(&chart, 5000, 12) {
            let (l, r) = chart_product_bound(&chart, &z, &w)?;
            if r > 0.0 {
                worst = worst.max(l / r);
            }
        }
        println!("a={a}: C2 = {:.4}, measured {:.4}, worst product ratio {:.4}", chart.c2(), measured, worst);
    }
    Ok(())
}
