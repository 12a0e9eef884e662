/// Benjamini-Hochberg step-up adjustment. Output is in input order.
pub fn bh_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &i) in order.iter().enumerate().rev() {
        let q = (p_values[i] * m as f64 / (pos + 1) as f64).min(1.0);
        running = running.min(q);
        adjusted[i] = running;
    }
    adjusted
}
