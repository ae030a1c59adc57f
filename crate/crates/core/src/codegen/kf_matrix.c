/* Reference implementation of the kf_matrix runtime. */
#include <math.h>
#include "kf_matrix.h"

#define AT(m, i, j) ((m)->data[(i) * (m)->cols + (j)])

int kf_mat_mul(const kf_mat *a, const kf_mat *b, kf_mat *out)
{
    if (a->cols != b->rows || out->rows != a->rows || out->cols != b->cols) {
        return KF_ERR_SHAPE;
    }
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < b->cols; ++j) {
            kf_real acc = 0;
            for (int k = 0; k < a->cols; ++k) {
                acc += AT(a, i, k) * AT(b, k, j);
            }
            AT(out, i, j) = acc;
        }
    }
    return KF_OK;
}

static int same_shape(const kf_mat *a, const kf_mat *b, const kf_mat *out)
{
    return a->rows == b->rows && a->cols == b->cols && out->rows == a->rows && out->cols == a->cols;
}

int kf_mat_add(const kf_mat *a, const kf_mat *b, kf_mat *out)
{
    if (!same_shape(a, b, out)) {
        return KF_ERR_SHAPE;
    }
    for (int i = 0; i < a->rows * a->cols; ++i) {
        out->data[i] = a->data[i] + b->data[i];
    }
    return KF_OK;
}

int kf_mat_sub(const kf_mat *a, const kf_mat *b, kf_mat *out)
{
    if (!same_shape(a, b, out)) {
        return KF_ERR_SHAPE;
    }
    for (int i = 0; i < a->rows * a->cols; ++i) {
        out->data[i] = a->data[i] - b->data[i];
    }
    return KF_OK;
}

int kf_mat_transpose(const kf_mat *a, kf_mat *out)
{
    if (out->rows != a->cols || out->cols != a->rows) {
        return KF_ERR_SHAPE;
    }
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) {
            AT(out, j, i) = AT(a, i, j);
        }
    }
    return KF_OK;
}

int kf_mat_vec_mul(const kf_mat *a, const kf_real *x, kf_real *out)
{
    for (int i = 0; i < a->rows; ++i) {
        kf_real acc = 0;
        for (int k = 0; k < a->cols; ++k) {
            acc += AT(a, i, k) * x[k];
        }
        out[i] = acc;
    }
    return KF_OK;
}

int kf_mat_invert(const kf_mat *a, kf_mat *work, kf_mat *out)
{
    int n = a->rows;
    if (a->cols != n || work->rows != n || work->cols != n || out->rows != n || out->cols != n) {
        return KF_ERR_SHAPE;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            AT(work, i, j) = AT(a, i, j);
            AT(out, i, j) = i == j ? 1 : 0;
        }
    }
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int i = col + 1; i < n; ++i) {
            if (fabs((double)AT(work, i, col)) >= fabs((double)AT(work, pivot, col))) {
                pivot = i;
            }
        }
        if (!(fabs((double)AT(work, pivot, col)) >= KF_SINGULAR_PIVOT)) {
            return KF_ERR_SINGULAR;
        }
        if (pivot != col) {
            for (int j = 0; j < n; ++j) {
                kf_real t = AT(work, col, j);
                AT(work, col, j) = AT(work, pivot, j);
                AT(work, pivot, j) = t;
                t = AT(out, col, j);
                AT(out, col, j) = AT(out, pivot, j);
                AT(out, pivot, j) = t;
            }
        }
        kf_real d = AT(work, col, col);
        for (int j = 0; j < n; ++j) {
            AT(work, col, j) /= d;
            AT(out, col, j) /= d;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col) {
                continue;
            }
            kf_real f = AT(work, i, col);
            if (f == 0) {
                continue;
            }
            for (int j = 0; j < n; ++j) {
                AT(work, i, j) -= f * AT(work, col, j);
                AT(out, i, j) -= f * AT(out, col, j);
            }
        }
    }
    return KF_OK;
}
