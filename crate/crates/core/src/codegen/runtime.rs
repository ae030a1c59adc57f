//! The matrix runtime ABI that generated filters link against.

/// Default include name for the runtime header.
pub const DEFAULT_RUNTIME_HEADER: &str = "kf_matrix.h";

/// Runtime status codes.
pub const KF_OK: i32 = 0;
pub const KF_ERR_SHAPE: i32 = 1;
pub const KF_ERR_SINGULAR: i32 = 2;

/// Prototype-only header for the runtime. Any implementation honouring these
/// signatures and status codes can be linked in.
pub const RUNTIME_HEADER: &str = r#"#ifndef KF_MATRIX_H
#define KF_MATRIX_H

#ifdef KF_SINGLE_PRECISION
typedef float kf_real;
#else
typedef double kf_real;
#endif

/* Row-major view over caller-owned storage. */
typedef struct {
    int rows;
    int cols;
    kf_real *data;
} kf_mat;

enum { KF_OK = 0, KF_ERR_SHAPE = 1, KF_ERR_SINGULAR = 2 };

#define KF_SINGULAR_PIVOT 1e-12

/* out = a * b; out must not alias a or b. */
int kf_mat_mul(const kf_mat *a, const kf_mat *b, kf_mat *out);
/* out = a + b; elementwise, aliasing allowed. */
int kf_mat_add(const kf_mat *a, const kf_mat *b, kf_mat *out);
/* out = a - b; elementwise, aliasing allowed. */
int kf_mat_sub(const kf_mat *a, const kf_mat *b, kf_mat *out);
/* out = transpose(a); out must not alias a. */
int kf_mat_transpose(const kf_mat *a, kf_mat *out);
/* out[rows] = a * x[cols]; out must not alias x. */
int kf_mat_vec_mul(const kf_mat *a, const kf_real *x, kf_real *out);
/* out = inverse(a) by Gauss-Jordan with partial pivoting; work is a
   scratch matrix of the same shape. KF_ERR_SINGULAR when a pivot is
   smaller than KF_SINGULAR_PIVOT in magnitude. */
int kf_mat_invert(const kf_mat *a, kf_mat *work, kf_mat *out);

#endif
"#;

/// Portable C99 implementation of [`RUNTIME_HEADER`].
pub const RUNTIME_SOURCE: &str = include_str!("kf_matrix.c");
