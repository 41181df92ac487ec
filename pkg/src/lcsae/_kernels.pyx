# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot-path kernels: forward pass, fused momentum-SGD step, and
population-level matching/reinforcement loops.

Semantics match ``_kernels_py`` exactly; arrays must be float64 (masks
uint8) and C-contiguous, which is how the rest of the package builds them.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1

cnp.import_array()

cdef double SELU_LAMBDA = 1.0507009873554805
cdef double SELU_ALPHA = 1.6732632423543772
cdef double SELU_LA = SELU_LAMBDA * SELU_ALPHA


cdef inline double _selu(double z) noexcept nogil:
    if z > 0.0:
        return SELU_LAMBDA * z
    return SELU_LA * expm1(z)


cdef inline double _logistic(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline double* _data(object a):
    return <double*> cnp.PyArray_DATA(<cnp.ndarray> a)


cdef inline unsigned char* _udata(object a):
    return <unsigned char*> cnp.PyArray_DATA(<cnp.ndarray> a)


cdef void _forward2(double* w1, double* b1, Py_ssize_t h, Py_ssize_t n_in,
                    double* w2, double* b2, Py_ssize_t n_out,
                    double* x, double* a1, double* y) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double z
    for j in range(h):
        z = b1[j]
        for i in range(n_in):
            z += w1[j * n_in + i] * x[i]
        a1[j] = _selu(z)
    for i in range(n_out):
        z = b2[i]
        for j in range(h):
            z += w2[i * h + j] * a1[j]
        y[i] = _logistic(z)


cdef void _fused_sgd2(double* w1, double* b1, unsigned char* mask1,
                      double* mw1, double* mb1, double eta1,
                      double* w2, double* b2, unsigned char* mask2,
                      double* mw2, double* mb2, double eta2,
                      double omega, double* x, double* target,
                      Py_ssize_t h, Py_ssize_t n_in, Py_ssize_t n_out,
                      double* a1, double* e1, double* y) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double g, d, dw, ap

    _forward2(w1, b1, h, n_in, w2, b2, n_out, x, a1, y)

    # masked weights are exactly zero, so the mask factor makes the updates
    # branchless (and vectorisable) without changing any value
    for j in range(h):
        e1[j] = 0.0
    for i in range(n_out):
        g = (2.0 / n_out) * (y[i] - target[i]) * y[i] * (1.0 - y[i])
        for j in range(h):
            e1[j] += g * w2[i * h + j]
            dw = (-eta2 * g * a1[j] + omega * mw2[i * h + j]) * <double> mask2[i * h + j]
            w2[i * h + j] += dw
            mw2[i * h + j] = dw
        dw = -eta2 * g + omega * mb2[i]
        b2[i] += dw
        mb2[i] = dw
    for j in range(h):
        if a1[j] > 0.0:
            ap = SELU_LAMBDA
        else:
            ap = a1[j] + SELU_LA
        d = e1[j] * ap
        for i in range(n_in):
            dw = (-eta1 * d * x[i] + omega * mw1[j * n_in + i]) * <double> mask1[j * n_in + i]
            w1[j * n_in + i] += dw
            mw1[j * n_in + i] = dw
        dw = -eta1 * d + omega * mb1[j]
        b1[j] += dw
        mb1[j] = dw


def forward2(w1, b1, w2, b2, x):
    """Hidden SELU + logistic output forward pass.

    Returns (hidden activations, outputs).
    """
    cdef Py_ssize_t h = w1.shape[0]
    cdef Py_ssize_t n_in = w1.shape[1]
    cdef Py_ssize_t n_out = w2.shape[0]
    a1 = np.empty(h)
    y = np.empty(n_out)
    _forward2(_data(w1), _data(b1), h, n_in, _data(w2), _data(b2), n_out,
              _data(x), _data(a1), _data(y))
    return a1, y


def fused_sgd2(w1, b1, mask1, mw1, mb1, double eta1,
               w2, b2, mask2, mw2, mb2, double eta2,
               double omega, x, target, y_out):
    """One forward pass plus one momentum-SGD step on the MSE loss.

    The pre-update outputs are written into ``y_out``.  Masked weights are
    excluded: their value, gradient, and momentum stay exactly zero.
    """
    cdef Py_ssize_t h = w1.shape[0]
    cdef Py_ssize_t n_in = w1.shape[1]
    cdef Py_ssize_t n_out = w2.shape[0]
    a1 = np.empty(h)
    e1 = np.empty(h)
    _fused_sgd2(_data(w1), _data(b1), _udata(mask1), _data(mw1), _data(mb1), eta1,
                _data(w2), _data(b2), _udata(mask2), _data(mw2), _data(mb2), eta2,
                omega, _data(x), _data(target), h, n_in, n_out,
                _data(a1), _data(e1), _data(y_out))


def match_batch(list conds, x, double threshold, out):
    """Evaluate many condition networks on one input.

    ``conds`` holds (w1, b1, w2, b2) tuples; ``out`` is a uint8 array that
    receives 1 where the first output exceeds ``threshold``.
    """
    cdef Py_ssize_t m = len(conds)
    cdef Py_ssize_t i
    cdef Py_ssize_t h, n_in, n_out
    cdef tuple t
    cdef cnp.ndarray w1, w2
    cdef double* xp = _data(x)
    cdef unsigned char* outp = _udata(out)
    cdef double y
    scratch = np.empty(64)
    yscratch = np.empty(64)
    cdef double* a1 = _data(scratch)
    cdef double* yp = _data(yscratch)
    for i in range(m):
        t = <tuple> conds[i]
        w1 = <cnp.ndarray> t[0]
        w2 = <cnp.ndarray> t[2]
        h = cnp.PyArray_DIM(w1, 0)
        n_in = cnp.PyArray_DIM(w1, 1)
        n_out = cnp.PyArray_DIM(w2, 0)
        if h > scratch.shape[0]:
            scratch = np.empty(h)
            a1 = _data(scratch)
        if n_out > yscratch.shape[0]:
            yscratch = np.empty(n_out)
            yp = _data(yscratch)
        _forward2(<double*> cnp.PyArray_DATA(w1), _data(t[1]), h, n_in,
                  <double*> cnp.PyArray_DATA(w2), _data(t[3]), n_out,
                  xp, a1, yp)
        outp[i] = 1 if yp[0] > threshold else 0


def reinforce_batch(list preds, x, double omega, ys_out):
    """Run ``fused_sgd2`` with target ``x`` over a whole match set.

    ``preds`` holds (w1, b1, mask1, mw1, mb1, eta1, w2, b2, mask2, mw2,
    mb2, eta2) tuples; row i of ``ys_out`` receives classifier i's
    pre-update reconstruction.
    """
    cdef Py_ssize_t m = len(preds)
    cdef Py_ssize_t i
    cdef Py_ssize_t h, n_in, n_out
    cdef Py_ssize_t stride = ys_out.shape[1]
    cdef tuple t
    cdef cnp.ndarray w1, w2
    cdef double* xp = _data(x)
    cdef double* ys = _data(ys_out)
    cdef double eta1, eta2
    scratch_a = np.empty(64)
    scratch_e = np.empty(64)
    cdef double* a1 = _data(scratch_a)
    cdef double* e1 = _data(scratch_e)
    for i in range(m):
        t = <tuple> preds[i]
        w1 = <cnp.ndarray> t[0]
        w2 = <cnp.ndarray> t[6]
        h = cnp.PyArray_DIM(w1, 0)
        n_in = cnp.PyArray_DIM(w1, 1)
        n_out = cnp.PyArray_DIM(w2, 0)
        if h > scratch_a.shape[0]:
            scratch_a = np.empty(h)
            scratch_e = np.empty(h)
            a1 = _data(scratch_a)
            e1 = _data(scratch_e)
        eta1 = t[5]
        eta2 = t[11]
        _fused_sgd2(<double*> cnp.PyArray_DATA(w1), _data(t[1]), _udata(t[2]),
                    _data(t[3]), _data(t[4]), eta1,
                    <double*> cnp.PyArray_DATA(w2), _data(t[7]), _udata(t[8]),
                    _data(t[9]), _data(t[10]), eta2,
                    omega, xp, xp, h, n_in, n_out, a1, e1, ys + i * stride)
