# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops; signature-compatible with _pyloops."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, pow, sqrt

cnp.import_array()

BACKEND = "compiled"


cdef inline double _alpha_at(int kind, double a, double b, long t) nogil:
    if kind == 0:
        return a
    if kind == 1:
        return a / t
    if kind == 2:
        return a / (b + t)
    return pow(t + 1.0, -b)


cdef inline void _project(double[::1] xi, double radius) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0, scale
    for i in range(xi.shape[0]):
        acc += xi[i] * xi[i]
    acc = sqrt(acc)
    if acc > radius:
        scale = radius / acc
        for i in range(xi.shape[0]):
            xi[i] *= scale


cdef inline double _dot(double[::1] a, const double* b, Py_ssize_t n) nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def critic_chunk(int method, double[::1] xi, double[::1] z, double[::1] y,
                 long t0, long[::1] pair_idx, long[::1] next_pair_idx,
                 double[:, ::1] phi, double[::1] r_pair,
                 double gamma, double radius,
                 int alpha_kind, double alpha_a, double alpha_b,
                 double beta_exp, double reg,
                 long[::1] checkpoints, double[::1] xi_star,
                 double[::1] err_out):
    """See _pyloops.critic_chunk."""
    cdef Py_ssize_t n = pair_idx.shape[0]
    cdef Py_ssize_t m = checkpoints.shape[0]
    cdef Py_ssize_t dim = xi.shape[0]
    cdef Py_ssize_t i, j, cursor = 0
    cdef long t = t0
    cdef long p, q
    cdef double alpha, beta, delta, coef, r, inv_b, zdot, acc, d
    cdef double[::1] xi_new = np.empty(dim)
    cdef const double* phi_p
    cdef const double* phi_q

    for i in range(n):
        t += 1
        alpha = _alpha_at(alpha_kind, alpha_a, alpha_b, t)
        p = pair_idx[i]
        q = next_pair_idx[i]
        phi_p = &phi[p, 0]
        phi_q = &phi[q, 0]
        r = r_pair[p]
        if method == 0:
            delta = r + gamma * _dot(xi, phi_q, dim) - _dot(xi, phi_p, dim)
            for j in range(dim):
                xi[j] += alpha * delta * phi_p[j]
        elif method == 1:
            beta = pow(<double> t, -beta_exp)
            delta = r + gamma * _dot(xi, phi_q, dim) - _dot(xi, phi_p, dim)
            z[0] = (1.0 - beta) * z[0] + beta * delta
            coef = 2.0 * alpha * z[0]
            if reg != 0.0:
                for j in range(dim):
                    xi[j] *= 1.0 - reg * alpha
            for j in range(dim):
                xi[j] = xi[j] - coef * gamma * phi_q[j] + coef * phi_p[j]
        else:
            beta = pow(<double> t, -beta_exp)
            coef = 2.0 * alpha * y[0]
            for j in range(dim):
                xi_new[j] = xi[j] - coef * gamma * phi_q[j] + coef * phi_p[j]
            inv_b = 1.0 / beta
            for j in range(dim):
                z[j] = inv_b * xi_new[j] - (inv_b - 1.0) * xi[j]
            zdot = gamma * _dot(z, phi_q, dim) - _dot(z, phi_p, dim)
            y[0] = (1.0 - beta) * y[0] + beta * (r + zdot)
            for j in range(dim):
                xi[j] = xi_new[j]
        _project(xi, radius)
        if cursor < m and t == checkpoints[cursor]:
            acc = 0.0
            for j in range(dim):
                d = xi[j] - xi_star[j]
                acc += d * d
            err_out[cursor] = sqrt(acc)
            cursor += 1
    return t


cdef inline void _rbf_into(double sx, double sy, double[:, ::1] centers,
                           double inv2s2, double* out) nogil:
    cdef Py_ssize_t i
    cdef Py_ssize_t p = centers.shape[0]
    cdef double dx, dy, v, acc = 0.0
    for i in range(p):
        dx = sx - centers[i, 0]
        dy = sy - centers[i, 1]
        v = exp(-(dx * dx + dy * dy) * inv2s2)
        out[i] = v
        acc += v * v
    acc = sqrt(acc)
    # far outside the grid every kernel underflows; keep the zero vector
    if acc > 0.0:
        for i in range(p):
            out[i] /= acc


cdef inline double _nav_move(double* sx, double* sy, double ax, double ay,
                             double inner_r, double outer_r, double step_len,
                             double tgt_x, double tgt_y, double tgt_tol,
                             double r_out, double r_goal,
                             double r_step) nogil:
    cdef double norm = sqrt(ax * ax + ay * ay)
    cdef double n2, dx, dy
    if norm == 0.0:
        sx[0] += step_len
    else:
        sx[0] += (step_len / norm) * ax
        sy[0] += (step_len / norm) * ay
    n2 = sqrt(sx[0] * sx[0] + sy[0] * sy[0])
    if n2 < inner_r or n2 > outer_r:
        return r_out
    dx = sx[0] - tgt_x
    dy = sy[0] - tgt_y
    if sqrt(dx * dx + dy * dy) < tgt_tol:
        return r_goal
    return r_step


def nav_iteration(int method, double[:, ::1] theta, double[::1] xi,
                  long t0, bint frozen, double[:, ::1] centers, double inv2s2,
                  double start_x, double start_y, double tgt_x, double tgt_y,
                  double inner_r, double outer_r, double step_len,
                  double tgt_tol, double r_out, double r_goal, double r_step,
                  double gamma, double cov, double eta, double freeze_thr,
                  double radius, int alpha_kind, double alpha_a,
                  double alpha_b, double beta_exp, double reg,
                  double[:, :, ::1] critic_noise, double[:, ::1] actor_noise):
    """See _pyloops.nav_iteration."""
    cdef Py_ssize_t n_roll = critic_noise.shape[0]
    cdef Py_ssize_t L = critic_noise.shape[1] - 1
    cdef Py_ssize_t p = xi.shape[0]
    cdef double sq_cov = sqrt(cov)
    cdef long t = t0
    cdef Py_ssize_t j, step, i
    cdef double sx, sy, m0, m1, a0, a1, r, alpha, beta, delta, coef
    cdef double inv_b, zdot, qhat, acc, scale
    cdef double eta_scale = eta / ((1.0 - gamma) * cov)
    cdef double[::1] z = np.zeros(p if method == 2 else 1)
    cdef double y = 0.0
    cdef double[::1] xi_new = np.empty(p)
    cdef double[:, ::1] feats = np.empty((L + 2, p))
    cdef double[::1] rewards = np.empty(L)
    cdef double* phi_p
    cdef double* phi_q
    cdef double* phi_s
    cdef double* phi_n

    with nogil:
        for j in range(n_roll):
            sx = start_x
            sy = start_y
            _rbf_into(sx, sy, centers, inv2s2, &feats[0, 0])
            for step in range(L + 1):
                phi_s = &feats[step, 0]
                m0 = 0.0
                m1 = 0.0
                for i in range(p):
                    m0 += theta[i, 0] * phi_s[i]
                    m1 += theta[i, 1] * phi_s[i]
                a0 = m0 + sq_cov * critic_noise[j, step, 0]
                a1 = m1 + sq_cov * critic_noise[j, step, 1]
                r = _nav_move(&sx, &sy, a0, a1, inner_r, outer_r, step_len,
                              tgt_x, tgt_y, tgt_tol, r_out, r_goal, r_step)
                if step < L:
                    rewards[step] = r
                _rbf_into(sx, sy, centers, inv2s2, &feats[step + 1, 0])
            for step in range(L):
                t += 1
                alpha = _alpha_at(alpha_kind, alpha_a, alpha_b, t)
                phi_p = &feats[step + 1, 0]
                phi_q = &feats[step + 2, 0]
                r = rewards[step]
                if method == 0:
                    delta = (r + gamma * _dot(xi, phi_q, p)
                             - _dot(xi, phi_p, p))
                    for i in range(p):
                        xi[i] += alpha * delta * phi_p[i]
                elif method == 1:
                    beta = pow(<double> t, -beta_exp)
                    delta = (r + gamma * _dot(xi, phi_q, p)
                             - _dot(xi, phi_p, p))
                    z[0] = (1.0 - beta) * z[0] + beta * delta
                    coef = 2.0 * alpha * z[0]
                    if reg != 0.0:
                        for i in range(p):
                            xi[i] *= 1.0 - reg * alpha
                    for i in range(p):
                        xi[i] = xi[i] - coef * gamma * phi_q[i] + coef * phi_p[i]
                else:
                    beta = pow(<double> t, -beta_exp)
                    coef = 2.0 * alpha * y
                    for i in range(p):
                        xi_new[i] = xi[i] - coef * gamma * phi_q[i] + coef * phi_p[i]
                    inv_b = 1.0 / beta
                    for i in range(p):
                        z[i] = inv_b * xi_new[i] - (inv_b - 1.0) * xi[i]
                    zdot = gamma * _dot(z, phi_q, p) - _dot(z, phi_p, p)
                    y = (1.0 - beta) * y + beta * (r + zdot)
                    for i in range(p):
                        xi[i] = xi_new[i]
                _project(xi, radius)

        sx = start_x
        sy = start_y
        _rbf_into(sx, sy, centers, inv2s2, &feats[0, 0])
        for step in range(L):
            phi_s = &feats[0, 0]
            phi_n = &feats[1, 0]
            m0 = 0.0
            m1 = 0.0
            for i in range(p):
                m0 += theta[i, 0] * phi_s[i]
                m1 += theta[i, 1] * phi_s[i]
            a0 = m0 + sq_cov * actor_noise[step, 0]
            a1 = m1 + sq_cov * actor_noise[step, 1]
            _nav_move(&sx, &sy, a0, a1, inner_r, outer_r, step_len,
                      tgt_x, tgt_y, tgt_tol, r_out, r_goal, r_step)
            _rbf_into(sx, sy, centers, inv2s2, phi_n)
            if not frozen:
                acc = 0.0
                for i in range(p):
                    acc += theta[i, 0] * theta[i, 0] + theta[i, 1] * theta[i, 1]
                if sqrt(acc) >= freeze_thr:
                    frozen = True
                else:
                    qhat = _dot(xi, phi_n, p)
                    scale = eta_scale * qhat
                    for i in range(p):
                        theta[i, 0] += scale * phi_s[i] * (a0 - m0)
                        theta[i, 1] += scale * phi_s[i] * (a1 - m1)
            for i in range(p):
                feats[0, i] = feats[1, i]
    return t, bool(frozen)


def nav_eval(double[:, ::1] theta, double[:, ::1] centers, double inv2s2,
             double start_x, double start_y, double tgt_x, double tgt_y,
             double inner_r, double outer_r, double step_len, double tgt_tol,
             double r_out, double r_goal, double r_step, double cov,
             double[:, :, ::1] noise):
    """See _pyloops.nav_eval."""
    cdef Py_ssize_t n_traj = noise.shape[0]
    cdef Py_ssize_t L = noise.shape[1]
    cdef Py_ssize_t p = centers.shape[0]
    cdef double sq_cov = sqrt(cov)
    cdef Py_ssize_t j, step, i
    cdef double sx, sy, m0, m1, a0, a1, na, nm, r
    cdef double ah0, ah1, mh0, mh1, d0, d1
    cdef double total_ret = 0.0, total_gap = 0.0, total_score = 0.0
    cdef double[::1] phi_s = np.empty(p)

    with nogil:
        for j in range(n_traj):
            sx = start_x
            sy = start_y
            for step in range(L):
                _rbf_into(sx, sy, centers, inv2s2, &phi_s[0])
                m0 = 0.0
                m1 = 0.0
                for i in range(p):
                    m0 += theta[i, 0] * phi_s[i]
                    m1 += theta[i, 1] * phi_s[i]
                a0 = m0 + sq_cov * noise[j, step, 0]
                a1 = m1 + sq_cov * noise[j, step, 1]
                na = sqrt(a0 * a0 + a1 * a1)
                nm = sqrt(m0 * m0 + m1 * m1)
                if na > 0.0:
                    ah0 = a0 / na
                    ah1 = a1 / na
                else:
                    ah0 = 1.0
                    ah1 = 0.0
                if nm > 0.0:
                    mh0 = m0 / nm
                    mh1 = m1 / nm
                else:
                    mh0 = 1.0
                    mh1 = 0.0
                d0 = ah0 - mh0
                d1 = ah1 - mh1
                total_gap += sqrt(d0 * d0 + d1 * d1)
                d0 = a0 - m0
                d1 = a1 - m1
                total_score += sqrt(d0 * d0 + d1 * d1) / cov
                r = _nav_move(&sx, &sy, a0, a1, inner_r, outer_r, step_len,
                              tgt_x, tgt_y, tgt_tol, r_out, r_goal, r_step)
                total_ret += r
    return (total_ret / n_traj, total_gap / (n_traj * L),
            total_score / (n_traj * L))


def rbf_batch(double[:, ::1] points, double[:, ::1] centers, double inv2s2,
              bint normalize):
    """See _pyloops.rbf_batch."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t p = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, p))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, k
    cdef double dx, dy, v, acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(p):
                dx = points[i, 0] - centers[k, 0]
                dy = points[i, 1] - centers[k, 1]
                v = exp(-(dx * dx + dy * dy) * inv2s2)
                ov[i, k] = v
                acc += v * v
            if normalize:
                acc = sqrt(acc)
                if acc > 0.0:
                    for k in range(p):
                        ov[i, k] /= acc
    return out
