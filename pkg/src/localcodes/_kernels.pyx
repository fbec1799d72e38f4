# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training-step kernel.

One fused full pass per call: forward, loss, backward, in-place parameter
update.  Matrix products go through BLAS; everything elementwise is fused
into single passes over each buffer.  The contract matches
``_kernels_py.fused_train_step``.
"""

import numpy as np

from libc.math cimport exp, expf, log1p, sqrt, sqrtf

from scipy.linalg.cython_blas cimport dgemm, sgemm

NAME = "compiled"

ctypedef fused real:
    float
    double


cdef inline real _sigmoid(real x) noexcept nogil:
    if real is float:
        return <float>(1.0) / (<float>(1.0) + expf(-x))
    else:
        return 1.0 / (1.0 + exp(-x))


cdef inline double _softplus(double x) noexcept nogil:
    # log(1 + e^x) without overflow
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline real _rsqrt(real x) noexcept nogil:
    if real is float:
        return sqrtf(x)
    else:
        return sqrt(x)


cdef void _gemm_rm(char ta, char tb, int m, int n, int k,
                   real* a, int lda, real* b, int ldb,
                   real beta, real* c, int ldc) noexcept nogil:
    """Row-major C[m,n] = op(A)[m,k] @ op(B)[k,n] (+ beta*C).

    BLAS is column-major, so the call is issued on the transposed problem
    with the operand order swapped.  lda/ldb are the row lengths (column
    counts) of the row-major arrays.
    """
    cdef real alpha = <real>1.0
    if real is float:
        sgemm(&tb, &ta, &n, &m, &k, <float*>&alpha, <float*>b, &ldb,
              <float*>a, &lda, <float*>&beta, <float*>c, &ldc)
    else:
        dgemm(&tb, &ta, &n, &m, &k, <double*>&alpha, <double*>b, &ldb,
              <double*>a, &lda, <double*>&beta, <double*>c, &ldc)


cdef void _adam_update(real* p, real* g, real* m, real* v, Py_ssize_t size,
                       real lr, real beta1, real beta2, real eps,
                       real bc1, real bc2) noexcept nogil:
    cdef Py_ssize_t i
    cdef real one = <real>1.0
    for i in range(size):
        m[i] = beta1 * m[i] + (one - beta1) * g[i]
        v[i] = beta2 * v[i] + (one - beta2) * g[i] * g[i]
        p[i] = p[i] - lr * (m[i] / bc1) / (_rsqrt(v[i] / bc2) + eps)


cdef void _sgd_update(real* p, real* g, Py_ssize_t size, real lr) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(size):
        p[i] = p[i] - lr * g[i]


def fused_train_step(real[:, ::1] X, real[:, ::1] T,
                     real[:, ::1] W1, real[::1] b1,
                     real[:, ::1] W2, real[::1] b2,
                     real[:, ::1] mW1, real[:, ::1] vW1,
                     real[::1] mb1, real[::1] vb1,
                     real[:, ::1] mW2, real[:, ::1] vW2,
                     real[::1] mb2, real[::1] vb2,
                     mask, bint act_relu, bint loss_mse, bint use_adam,
                     double lr, double beta1, double beta2, double eps,
                     double bc1, double bc2):
    cdef int n = <int>X.shape[0]
    cdef int d = <int>X.shape[1]
    cdef int h = <int>W1.shape[1]
    cdef int o = <int>W2.shape[1]
    cdef bint use_mask = mask is not None
    cdef real[::1] mask_mv = mask if use_mask else None

    dtype = np.float32 if real is float else np.float64
    a1_np = np.empty((n, h), dtype=dtype)
    hh_np = np.empty((n, h), dtype=dtype)
    z2_np = np.empty((n, o), dtype=dtype)
    dh_np = np.empty((n, h), dtype=dtype)
    gw1_np = np.empty((d, h), dtype=dtype)
    gw2_np = np.empty((h, o), dtype=dtype)
    gb1_np = np.zeros(h, dtype=dtype)
    gb2_np = np.zeros(o, dtype=dtype)
    cdef real[:, ::1] a1 = a1_np
    cdef real[:, ::1] hh = hh_np
    cdef real[:, ::1] z2 = z2_np
    cdef real[:, ::1] dh = dh_np
    cdef real[:, ::1] gw1 = gw1_np
    cdef real[:, ::1] gw2 = gw2_np
    cdef real[::1] gb1 = gb1_np
    cdef real[::1] gb2 = gb2_np

    cdef double loss = 0.0
    cdef double inv_n_out = 1.0 / (<double>n * <double>o)
    cdef double zd, yd
    cdef real val, y, deriv
    cdef real inv = <real>inv_n_out
    cdef real two = <real>2.0
    cdef real one = <real>1.0
    cdef real zero = <real>0.0
    cdef Py_ssize_t i, j

    with nogil:
        # hidden pre-activation into a1, then activation + dropout
        _gemm_rm(c'N', c'N', n, h, d, &X[0, 0], d, &W1[0, 0], h, zero, &a1[0, 0], h)
        for i in range(n):
            for j in range(h):
                val = a1[i, j] + b1[j]
                if act_relu:
                    val = val if val > zero else zero
                else:
                    val = _sigmoid(val)
                a1[i, j] = val
                hh[i, j] = val * mask_mv[j] if use_mask else val

        # output layer: z2 holds logits, then y, then dLoss/dz2
        _gemm_rm(c'N', c'N', n, o, h, &hh[0, 0], h, &W2[0, 0], o, zero, &z2[0, 0], o)
        for i in range(n):
            for j in range(o):
                zd = <double>z2[i, j] + <double>b2[j]
                y = _sigmoid(<real>zd)
                yd = <double>y
                if loss_mse:
                    loss += (yd - <double>T[i, j]) * (yd - <double>T[i, j])
                    z2[i, j] = two * inv * (y - T[i, j]) * y * (one - y)
                else:
                    loss += _softplus(zd) - <double>T[i, j] * zd
                    z2[i, j] = inv * (y - T[i, j])
                gb2[j] += z2[i, j]
        loss *= inv_n_out

        _gemm_rm(c'T', c'N', h, o, n, &hh[0, 0], h, &z2[0, 0], o, zero, &gw2[0, 0], o)
        _gemm_rm(c'N', c'T', n, h, o, &z2[0, 0], o, &W2[0, 0], o, zero, &dh[0, 0], h)

        for i in range(n):
            for j in range(h):
                val = dh[i, j]
                if use_mask:
                    val = val * mask_mv[j]
                if act_relu:
                    deriv = one if a1[i, j] > zero else zero
                else:
                    deriv = a1[i, j] * (one - a1[i, j])
                val = val * deriv
                dh[i, j] = val
                gb1[j] += val

        _gemm_rm(c'T', c'N', d, h, n, &X[0, 0], d, &dh[0, 0], h, zero, &gw1[0, 0], h)

        if use_adam:
            _adam_update(&W1[0, 0], &gw1[0, 0], &mW1[0, 0], &vW1[0, 0],
                         <Py_ssize_t>d * h, <real>lr, <real>beta1, <real>beta2,
                         <real>eps, <real>bc1, <real>bc2)
            _adam_update(&b1[0], &gb1[0], &mb1[0], &vb1[0], h,
                         <real>lr, <real>beta1, <real>beta2, <real>eps,
                         <real>bc1, <real>bc2)
            _adam_update(&W2[0, 0], &gw2[0, 0], &mW2[0, 0], &vW2[0, 0],
                         <Py_ssize_t>h * o, <real>lr, <real>beta1, <real>beta2,
                         <real>eps, <real>bc1, <real>bc2)
            _adam_update(&b2[0], &gb2[0], &mb2[0], &vb2[0], o,
                         <real>lr, <real>beta1, <real>beta2, <real>eps,
                         <real>bc1, <real>bc2)
        else:
            _sgd_update(&W1[0, 0], &gw1[0, 0], <Py_ssize_t>d * h, <real>lr)
            _sgd_update(&b1[0], &gb1[0], h, <real>lr)
            _sgd_update(&W2[0, 0], &gw2[0, 0], <Py_ssize_t>h * o, <real>lr)
            _sgd_update(&b2[0], &gb2[0], o, <real>lr)

    return loss
