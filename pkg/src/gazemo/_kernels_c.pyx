# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the 3-tap temporal convolution and layer norm.

Same contracts as gazemo._kernels_np; selected at import by gazemo.backend.
"""

import numpy as np

cimport cython


ctypedef fused real:
    float
    double


def conv1d_k3_forward(real[:, :, ::1] x, real[:, :, ::1] w, real[::1] b):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Co = w.shape[0]
    if real is float:
        y_arr = np.empty((B, Co, L), dtype=np.float32)
    else:
        y_arr = np.empty((B, Co, L), dtype=np.float64)
    cdef real[:, :, ::1] y = y_arr
    cdef Py_ssize_t bb, o, c, i
    cdef real w0, w1, w2, acc
    for bb in range(B):
        for o in range(Co):
            for i in range(L):
                y[bb, o, i] = b[o]
            for c in range(Ci):
                w0 = w[o, c, 0]
                w1 = w[o, c, 1]
                w2 = w[o, c, 2]
                if L == 1:
                    y[bb, o, 0] += w1 * x[bb, c, 0]
                    continue
                y[bb, o, 0] += w1 * x[bb, c, 0] + w2 * x[bb, c, 1]
                for i in range(1, L - 1):
                    y[bb, o, i] += (
                        w0 * x[bb, c, i - 1] + w1 * x[bb, c, i] + w2 * x[bb, c, i + 1]
                    )
                y[bb, o, L - 1] += w0 * x[bb, c, L - 2] + w1 * x[bb, c, L - 1]
    return y_arr


def conv1d_k3_backward(real[:, :, ::1] x, real[:, :, ::1] w, real[:, :, ::1] gy):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Co = w.shape[0]
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gx_arr = np.zeros((B, Ci, L), dtype=dtype)
    gw_arr = np.zeros((Co, Ci, 3), dtype=dtype)
    gb_arr = np.zeros((Co,), dtype=dtype)
    cdef real[:, :, ::1] gx = gx_arr
    cdef real[:, :, ::1] gw = gw_arr
    cdef real[::1] gb = gb_arr
    cdef Py_ssize_t bb, o, c, i, k, j
    cdef real g, w0, w1, w2
    for bb in range(B):
        for o in range(Co):
            for i in range(L):
                gb[o] += gy[bb, o, i]
            for c in range(Ci):
                w0 = w[o, c, 0]
                w1 = w[o, c, 1]
                w2 = w[o, c, 2]
                for i in range(L):
                    g = gy[bb, o, i]
                    if i > 0:
                        gw[o, c, 0] += g * x[bb, c, i - 1]
                        gx[bb, c, i - 1] += g * w0
                    gw[o, c, 1] += g * x[bb, c, i]
                    gx[bb, c, i] += g * w1
                    if i < L - 1:
                        gw[o, c, 2] += g * x[bb, c, i + 1]
                        gx[bb, c, i + 1] += g * w2
    return gx_arr, gw_arr, gb_arr


def layer_norm_forward(real[:, ::1] x, real[::1] gain, real[::1] bias, double eps):
    cdef Py_ssize_t R = x.shape[0], K = x.shape[1]
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    y_arr = np.empty((R, K), dtype=dtype)
    mean_arr = np.empty((R,), dtype=dtype)
    istd_arr = np.empty((R,), dtype=dtype)
    cdef real[:, ::1] y = y_arr
    cdef real[::1] mean = mean_arr
    cdef real[::1] istd = istd_arr
    cdef Py_ssize_t r, k
    cdef real mu, var, d, s
    for r in range(R):
        mu = 0
        for k in range(K):
            mu += x[r, k]
        mu /= K
        var = 0
        for k in range(K):
            d = x[r, k] - mu
            var += d * d
        var /= K
        s = <real> (1.0 / (var + eps) ** 0.5)
        mean[r] = mu
        istd[r] = s
        for k in range(K):
            y[r, k] = (x[r, k] - mu) * s * gain[k] + bias[k]
    return y_arr, mean_arr, istd_arr


def layer_norm_backward(
    real[:, ::1] x,
    real[::1] mean,
    real[::1] istd,
    real[::1] gain,
    real[:, ::1] gy,
):
    cdef Py_ssize_t R = x.shape[0], K = x.shape[1]
    if real is float:
        dtype = np.float32
    else:
        dtype = np.float64
    gx_arr = np.empty((R, K), dtype=dtype)
    ggain_arr = np.zeros((K,), dtype=dtype)
    gbias_arr = np.zeros((K,), dtype=dtype)
    cdef real[:, ::1] gx = gx_arr
    cdef real[::1] ggain = ggain_arr
    cdef real[::1] gbias = gbias_arr
    cdef Py_ssize_t r, k
    cdef real s1, s2, xh, dxh, s
    for r in range(R):
        s = istd[r]
        s1 = 0
        s2 = 0
        for k in range(K):
            xh = (x[r, k] - mean[r]) * s
            dxh = gy[r, k] * gain[k]
            s1 += dxh
            s2 += dxh * xh
            ggain[k] += gy[r, k] * xh
            gbias[k] += gy[r, k]
        s1 /= K
        s2 /= K
        for k in range(K):
            xh = (x[r, k] - mean[r]) * s
            dxh = gy[r, k] * gain[k]
            gx[r, k] = s * (dxh - s1 - xh * s2)
    return gx_arr, ggain_arr, gbias_arr
