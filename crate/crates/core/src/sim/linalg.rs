use nalgebra::DMatrix;

/// Pivots smaller than this are treated as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Gauss–Jordan inversion with partial pivoting; `None` when a pivot falls
/// below [`SINGULAR_PIVOT`] in magnitude.
pub fn gauss_jordan_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    assert!(a.is_square());
    let n = a.nrows();
    let mut m = a.clone();
    let mut inv = DMatrix::identity(n, n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))?;
        if !(m[(pivot, col)].abs() >= SINGULAR_PIVOT) {
            return None;
        }
        m.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let d = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[(i, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(i, j)] -= f * m[(col, j)];
                inv[(i, j)] -= f * inv[(col, j)];
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_inverse() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 7.0, 2.0, 6.0]);
        let inv = gauss_jordan_inverse(&a).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.6, -0.7, -0.2, 0.4]);
        assert!((inv - expect).abs().max() < 1e-12);
    }

    #[test]
    fn singular() {
        assert!(gauss_jordan_inverse(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])).is_none());
        assert!(gauss_jordan_inverse(&DMatrix::from_element(1, 1, f64::NAN)).is_none());
    }

    #[test]
    fn identity() {
        assert_eq!(gauss_jordan_inverse(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
    }
}
