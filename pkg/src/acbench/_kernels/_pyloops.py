"""Pure numpy fallback implementations of the hot loops.

The compiled module _fastloops mirrors these function signatures exactly;
the package works identically (up to float rounding) with either backend.
All randomness is pre-drawn by the callers and passed in as arrays, so a
run consumes the same random stream no matter which backend executes it.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _alpha_at(kind: int, a: float, b: float, t: int) -> float:
    if kind == 0:
        return a
    if kind == 1:
        return a / t
    if kind == 2:
        return a / (b + t)
    return float(t + 1.0) ** -b


def _project(xi: np.ndarray, radius: float) -> None:
    norm = float(np.sqrt(xi @ xi))
    if norm > radius:
        xi *= radius / norm


def critic_chunk(method, xi, z, y, t0, pair_idx, next_pair_idx, phi, r_pair,
                 gamma, radius, alpha_kind, alpha_a, alpha_b, beta_exp, reg,
                 checkpoints, xi_star, err_out):
    """Run len(pair_idx) critic updates on presampled tabular tuples.

    xi, z, y are modified in place (z is length-1 for gtd, length-p for
    agtd).  Whenever the global step count hits the next entry of
    ``checkpoints``, ||xi - xi_star|| is recorded into ``err_out``.
    Returns the final global step count.
    """
    n = pair_idx.shape[0]
    m = checkpoints.shape[0]
    cursor = 0
    t = t0
    xi_new = np.empty_like(xi)
    for i in range(n):
        t += 1
        alpha = _alpha_at(alpha_kind, alpha_a, alpha_b, t)
        p = pair_idx[i]
        q = next_pair_idx[i]
        phi_p = phi[p]
        phi_q = phi[q]
        r = r_pair[p]
        if method == 0:
            delta = r + gamma * float(xi @ phi_q) - float(xi @ phi_p)
            xi += alpha * delta * phi_p
        elif method == 1:
            beta = float(t) ** -beta_exp
            delta = r + gamma * float(xi @ phi_q) - float(xi @ phi_p)
            z[0] = (1.0 - beta) * z[0] + beta * delta
            coef = 2.0 * alpha * z[0]
            if reg != 0.0:
                xi *= 1.0 - reg * alpha
            xi -= coef * gamma * phi_q
            xi += coef * phi_p
        else:
            beta = float(t) ** -beta_exp
            coef = 2.0 * alpha * y[0]
            np.multiply(gamma * coef, phi_q, out=xi_new)
            np.subtract(xi, xi_new, out=xi_new)
            xi_new += coef * phi_p
            inv_b = 1.0 / beta
            # z = -(1/beta - 1) xi + (1/beta) xi_new
            z[:] = inv_b * xi_new - (inv_b - 1.0) * xi
            zdot = gamma * float(z @ phi_q) - float(z @ phi_p)
            y[0] = (1.0 - beta) * y[0] + beta * (r + zdot)
            xi[:] = xi_new
        _project(xi, radius)
        if cursor < m and t == checkpoints[cursor]:
            err_out[cursor] = float(np.linalg.norm(xi - xi_star))
            cursor += 1
    return t


def _rbf(s: np.ndarray, centers: np.ndarray, inv2s2: float) -> np.ndarray:
    d = centers - s
    v = np.exp(-(d * d).sum(axis=1) * inv2s2)
    # far outside the grid every kernel underflows; keep the zero vector
    # rather than dividing 0/0
    n = np.sqrt(v @ v)
    if n > 0.0:
        v = v / n
    return v


def _nav_move(s, a, inner_r, outer_r, step_len, tgt, tgt_tol,
              r_out, r_goal, r_step):
    norm = float(np.sqrt(a @ a))
    if norm == 0.0:
        s2 = s + np.array([step_len, 0.0])
    else:
        s2 = s + (step_len / norm) * a
    n2 = float(np.sqrt(s2 @ s2))
    if n2 < inner_r or n2 > outer_r:
        r = r_out
    else:
        d = s2 - tgt
        r = r_goal if float(np.sqrt(d @ d)) < tgt_tol else r_step
    return s2, r


def nav_iteration(method, theta, xi, t0, frozen, centers, inv2s2,
                  start_x, start_y, tgt_x, tgt_y, inner_r, outer_r,
                  step_len, tgt_tol, r_out, r_goal, r_step,
                  gamma, cov, eta, freeze_thr, radius,
                  alpha_kind, alpha_a, alpha_b, beta_exp, reg,
                  critic_noise, actor_noise):
    """One practical actor iteration: critic rollouts, then an actor pass.

    theta (p, 2) and xi (p,) are updated in place.  critic_noise has shape
    (n_rollouts, L+1, 2) and actor_noise (L, 2).  Trackers start at zero
    for each iteration.  Returns (final global critic step, frozen flag).
    """
    n_roll, la, _ = critic_noise.shape
    L = la - 1
    p = xi.shape[0]
    tgt = np.array([tgt_x, tgt_y])
    start = np.array([start_x, start_y])
    sq_cov = np.sqrt(cov)
    t = t0
    z = np.zeros(p if method == 2 else 1)
    y = np.zeros(1)
    xi_new = np.empty_like(xi)
    feats = np.empty((L + 2, p))
    rewards = np.empty(L)

    for j in range(n_roll):
        s = start.copy()
        feats[0] = _rbf(s, centers, inv2s2)
        for step in range(L + 1):
            mean = theta.T @ feats[step]
            a = mean + sq_cov * critic_noise[j, step]
            s, r = _nav_move(s, a, inner_r, outer_r, step_len, tgt, tgt_tol,
                             r_out, r_goal, r_step)
            if step < L:
                rewards[step] = r
            feats[step + 1] = _rbf(s, centers, inv2s2)
        for step in range(L):
            t += 1
            alpha = _alpha_at(alpha_kind, alpha_a, alpha_b, t)
            phi_p = feats[step + 1]
            phi_q = feats[step + 2]
            r = rewards[step]
            if method == 0:
                delta = r + gamma * float(xi @ phi_q) - float(xi @ phi_p)
                xi += alpha * delta * phi_p
            elif method == 1:
                beta = float(t) ** -beta_exp
                delta = r + gamma * float(xi @ phi_q) - float(xi @ phi_p)
                z[0] = (1.0 - beta) * z[0] + beta * delta
                coef = 2.0 * alpha * z[0]
                if reg != 0.0:
                    xi *= 1.0 - reg * alpha
                xi -= coef * gamma * phi_q
                xi += coef * phi_p
            else:
                beta = float(t) ** -beta_exp
                coef = 2.0 * alpha * y[0]
                np.multiply(gamma * coef, phi_q, out=xi_new)
                np.subtract(xi, xi_new, out=xi_new)
                xi_new += coef * phi_p
                inv_b = 1.0 / beta
                z[:] = inv_b * xi_new - (inv_b - 1.0) * xi
                zdot = gamma * float(z @ phi_q) - float(z @ phi_p)
                y[0] = (1.0 - beta) * y[0] + beta * (r + zdot)
                xi[:] = xi_new
            _project(xi, radius)

    s = start.copy()
    phi_s = _rbf(s, centers, inv2s2)
    scale = eta / ((1.0 - gamma) * cov)
    for step in range(L):
        mean = theta.T @ phi_s
        a = mean + sq_cov * actor_noise[step]
        s, _ = _nav_move(s, a, inner_r, outer_r, step_len, tgt, tgt_tol,
                         r_out, r_goal, r_step)
        phi_next = _rbf(s, centers, inv2s2)
        if not frozen:
            if float(np.sqrt((theta * theta).sum())) >= freeze_thr:
                frozen = True
            else:
                qhat = float(xi @ phi_next)
                theta += (scale * qhat) * np.outer(phi_s, a - mean)
        phi_s = phi_next
    return t, bool(frozen)


def nav_eval(theta, centers, inv2s2, start_x, start_y, tgt_x, tgt_y,
             inner_r, outer_r, step_len, tgt_tol, r_out, r_goal, r_step,
             cov, noise):
    """Evaluation rollouts under a frozen theta.

    Returns (mean undiscounted return per trajectory, mean direction gap
    ||a/||a|| - m/||m||||, mean score norm ||a - m|| / cov), the last two
    averaged over every transition.  Zero-norm vectors fall back to the
    unit direction (1, 0), matching the environment's convention.
    """
    n_traj, L, _ = noise.shape
    tgt = np.array([tgt_x, tgt_y])
    start = np.array([start_x, start_y])
    sq_cov = np.sqrt(cov)
    unit_x = np.array([1.0, 0.0])
    total_ret = 0.0
    total_gap = 0.0
    total_score = 0.0
    for j in range(n_traj):
        s = start.copy()
        for step in range(L):
            phi_s = _rbf(s, centers, inv2s2)
            mean = theta.T @ phi_s
            a = mean + sq_cov * noise[j, step]
            na = float(np.sqrt(a @ a))
            nm = float(np.sqrt(mean @ mean))
            ahat = a / na if na > 0.0 else unit_x
            mhat = mean / nm if nm > 0.0 else unit_x
            d = ahat - mhat
            total_gap += float(np.sqrt(d @ d))
            resid = a - mean
            total_score += float(np.sqrt(resid @ resid)) / cov
            s, r = _nav_move(s, a, inner_r, outer_r, step_len, tgt, tgt_tol,
                             r_out, r_goal, r_step)
            total_ret += r
    n_steps = n_traj * L
    return total_ret / n_traj, total_gap / n_steps, total_score / n_steps


def rbf_batch(points, centers, inv2s2, normalize):
    """Feature matrix for a batch of points; rows optionally unit-norm."""
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    phi = np.exp(-d2 * inv2s2)
    if normalize:
        n = np.sqrt((phi * phi).sum(axis=1))[:, None]
        np.divide(phi, n, out=phi, where=n > 0.0)
    return phi
