use cookiesync::longitudinal::ols_fit;
use proptest::prelude::*;

fn series() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(-50.0f64..50.0, 3..30).prop_map(|ys| {
        ys.into_iter()
            .enumerate()
            .map(|(i, y)| (i as f64 + 1.0, y + 0.7 * i as f64))
            .collect()
    })
}

proptest! {
    #[test]
    fn scaling_y_scales_slope(points in series(), c in prop::sample::select(vec![-3.0, 0.5, 2.0, 10.0])) {
        let base = ols_fit(&points).unwrap();
        let scaled: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, c * y)).collect();
        let fit = ols_fit(&scaled).unwrap();
        prop_assert!((fit.slope - c * base.slope).abs() < 1e-9 * (1.0 + base.slope.abs() * c.abs()));
        prop_assert!((fit.p_value - base.p_value).abs() < 1e-9);
    }

    #[test]
    fn residuals_orthogonal_to_x(points in series()) {
        let fit = ols_fit(&points).unwrap();
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
        let dot: f64 = points.iter().map(|&(x, y)| (y - fit.intercept - fit.slope * x) * (x - mean_x)).sum();
        prop_assert!(dot.abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&fit.p_value));
    }
}
