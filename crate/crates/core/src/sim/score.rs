use crate::sim::SimError;

/// Which state components hold planar position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreLayout {
    pub position: Option<(usize, usize)>,
    pub yaw: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    /// Mean squared error per state component.
    pub mse: Vec<f64>,
    /// Mean Euclidean position error (m).
    pub euclidean: Option<f64>,
    /// Mean absolute wrapped heading error (degrees).
    pub yaw_deg: Option<f64>,
}

/// Wraps an angle in degrees to (-180, 180].
pub fn wrap_degrees(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn score(truth: &[Vec<f64>], estimates: &[Vec<f64>], layout: ScoreLayout) -> Result<ScoreReport, SimError> {
    if truth.len() != estimates.len() {
        return Err(SimError::LengthMismatch { what: "estimates".into(), expected: truth.len(), found: estimates.len() });
    }
    if truth.is_empty() {
        return Err(SimError::InvalidTrace("nothing to score".into()));
    }
    let n = truth[0].len();
    if let Some((k, e)) = truth.iter().zip(estimates).enumerate().find(|(_, (t, e))| t.len() != n || e.len() != n) {
        return Err(SimError::LengthMismatch { what: format!("state at step {k}"), expected: n, found: e.1.len() });
    }
    let count = truth.len() as f64;
    let mse = (0..n)
        .map(|i| truth.iter().zip(estimates).map(|(t, e)| (e[i] - t[i]).powi(2)).sum::<f64>() / count)
        .collect();
    let euclidean = layout.position.map(|(ix, iy)| {
        truth.iter().zip(estimates).map(|(t, e)| (e[ix] - t[ix]).hypot(e[iy] - t[iy])).sum::<f64>() / count
    });
    let yaw_deg = layout.yaw.map(|i| {
        truth.iter().zip(estimates).map(|(t, e)| wrap_degrees((e[i] - t[i]).to_degrees()).abs()).sum::<f64>() / count
    });
    Ok(ScoreReport { mse, euclidean, yaw_deg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_estimates() {
        let t = vec![vec![1.0, 2.0, 3.0]; 4];
        let r = score(&t, &t, ScoreLayout { position: Some((0, 1)), yaw: Some(2) }).unwrap();
        assert_eq!(r, ScoreReport { mse: vec![0.0; 3], euclidean: Some(0.0), yaw_deg: Some(0.0) });
    }

    #[test]
    fn constant_offset() {
        let t = vec![vec![0.5, 1.0]; 10];
        let e: Vec<Vec<f64>> = t.iter().map(|s| vec![s[0] + 0.1, s[1]]).collect();
        let r = score(&t, &e, ScoreLayout::default()).unwrap();
        assert!((r.mse[0] - 0.01).abs() < 1e-15);
        assert_eq!(r.mse[1], 0.0);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(350.0), -10.0);
        assert_eq!(wrap_degrees(-370.0), -10.0);
        let t = vec![vec![0.0, 0.0, 359f64.to_radians()]];
        let e = vec![vec![0.0, 0.0, 1f64.to_radians()]];
        let r = score(&t, &e, ScoreLayout { position: None, yaw: Some(2) }).unwrap();
        assert!((r.yaw_deg.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn length_mismatch() {
        assert!(score(&[vec![0.0]], &[], ScoreLayout::default()).is_err());
    }
}
