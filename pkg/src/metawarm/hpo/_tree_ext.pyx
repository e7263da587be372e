# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split search and tree traversal; mirrors ``_tree_py`` exactly."""
import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort

cnp.import_array()

ctypedef cnp.npy_intp intp_t


def best_split(const double[:, :] X, const double[:] g, const double[:] h,
               const intp_t[:] rows, const intp_t[:] features,
               double G, double H, double min_child_weight, double reg_lambda):
    cdef Py_ssize_t m = rows.shape[0]
    cdef Py_ssize_t nf = features.shape[0]
    cdef Py_ssize_t fi, k
    cdef intp_t f, r
    cdef double parent, GL, HL, GR, HR, gain
    cdef double best_gain = 0.0, best_thr = 0.0
    cdef intp_t best_f = -1
    cdef vector[pair[double, intp_t]] buf
    if m < 2:
        return best_f, best_thr, best_gain
    parent = G * G / (H + reg_lambda)
    buf.resize(m)
    for fi in range(nf):
        f = features[fi]
        for k in range(m):
            r = rows[k]
            buf[k].first = X[r, f]
            buf[k].second = r
        sort(buf.begin(), buf.end())
        GL = 0.0
        HL = 0.0
        for k in range(m - 1):
            r = buf[k].second
            GL = GL + g[r]
            HL = HL + h[r]
            if buf[k].first == buf[k + 1].first:
                continue
            GR = G - GL
            HR = H - HL
            if HL < min_child_weight or HR < min_child_weight:
                continue
            gain = GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_thr = 0.5 * (buf[k].first + buf[k + 1].first)
    return best_f, best_thr, best_gain


def predict_tree(const double[:, :] X, const intp_t[:] feature, const double[:] threshold,
                 const intp_t[:] left, const intp_t[:] right, const double[:] value):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t i
    cdef intp_t node, f
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    for i in range(n):
        node = 0
        f = feature[node]
        while f >= 0:
            if X[i, f] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
            f = feature[node]
        o[i] = value[node]
    return out
