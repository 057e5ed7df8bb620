//! Metric-learning losses over embedding distances.

/// `y·d² + (1−y)·max(m−d, 0)²` with `y ∈ {0, 1}`.
pub fn contrastive_loss(distance: f64, similar: bool, margin: f64) -> f64 {
    if similar {
        distance * distance
    } else {
        let gap = (margin - distance).max(0.0);
        gap * gap
    }
}

/// `∂/∂d` of [`contrastive_loss`].
pub fn contrastive_grad(distance: f64, similar: bool, margin: f64) -> f64 {
    if similar {
        2.0 * distance
    } else {
        -2.0 * (margin - distance).max(0.0)
    }
}

/// `max(d_pos − d_neg + m, 0)`.
pub fn triplet_loss(d_pos: f64, d_neg: f64, margin: f64) -> f64 {
    (d_pos - d_neg + margin).max(0.0)
}

/// `(∂/∂d_pos, ∂/∂d_neg)` of [`triplet_loss`]; zero on the flat side of the hinge.
pub fn triplet_grad(d_pos: f64, d_neg: f64, margin: f64) -> (f64, f64) {
    if d_pos - d_neg + margin > 0.0 {
        (1.0, -1.0)
    } else {
        (0.0, 0.0)
    }
}

/// `∂‖a−b‖/∂a`; the subgradient at `a = b` is taken as zero.
pub fn distance_grad(a: &[f64], b: &[f64], distance: f64) -> Vec<f64> {
    if distance < 1e-12 {
        return vec![0.0; a.len()];
    }
    a.iter().zip(b).map(|(x, y)| (x - y) / distance).collect()
}
