"""Pure numpy implementations of the hot kernels.

These mirror the compiled extension exactly (same formulas, same boundary
behaviour for the envelope table); only summation order differs, so the two
backends agree to machine-level roundoff.
"""

import numpy as np

_CHUNK = 256


def bilinear_phase_series(m, eps, times):
    """values[k] = Re u(t_k)^dag M u(t_k) with u_p(t) = exp(-i eps_p t).

    Returns (values, max imaginary part) so callers can report the reality
    defect of the underlying trace.
    """
    m = np.ascontiguousarray(m, dtype=complex)
    eps = np.ascontiguousarray(eps, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    values = np.empty(times.shape[0])
    imag_max = 0.0
    for lo in range(0, times.shape[0], _CHUNK):
        t = times[lo:lo + _CHUNK]
        u = np.exp(-1j * np.outer(eps, t))
        acc = np.einsum("pt,pt->t", np.conj(u), m @ u)
        values[lo:lo + _CHUNK] = acc.real
        if acc.size:
            imag_max = max(imag_max, float(np.max(np.abs(acc.imag))))
    return values, imag_max


def _interp_zero(x, x0, dx, table):
    n = table.shape[0]
    xp = x0 + dx * np.arange(n)
    return np.interp(x, xp, table, left=0.0, right=0.0)


def envelope_sum(l_values, nodes, cweights, v, x0, dx, table):
    """out[L] = sum_k w_k env(L - v * s_k) for complex weights w."""
    l_values = np.ascontiguousarray(l_values, dtype=float)
    nodes = np.ascontiguousarray(nodes, dtype=float)
    cweights = np.ascontiguousarray(cweights, dtype=complex)
    out = np.empty(l_values.shape[0], dtype=complex)
    for lo in range(0, l_values.shape[0], _CHUNK):
        ls = l_values[lo:lo + _CHUNK]
        env = _interp_zero(ls[:, None] - v * nodes[None, :], x0, dx, table)
        out[lo:lo + _CHUNK] = env @ cweights
    return out


def envelope_pair_sum(l_values, nodes_a, nodes_b, cweights, v_a, v_b, x0, dx, table):
    """out[L] = sum_k w_k env(L - v_a s_k) env(L - v_b s'_k)."""
    l_values = np.ascontiguousarray(l_values, dtype=float)
    nodes_a = np.ascontiguousarray(nodes_a, dtype=float)
    nodes_b = np.ascontiguousarray(nodes_b, dtype=float)
    cweights = np.ascontiguousarray(cweights, dtype=complex)
    out = np.empty(l_values.shape[0], dtype=complex)
    chunk = max(1, min(_CHUNK, int(2**22 / max(1, nodes_a.shape[0]))))
    for lo in range(0, l_values.shape[0], chunk):
        ls = l_values[lo:lo + chunk]
        env_a = _interp_zero(ls[:, None] - v_a * nodes_a[None, :], x0, dx, table)
        env_b = _interp_zero(ls[:, None] - v_b * nodes_b[None, :], x0, dx, table)
        out[lo:lo + chunk] = (env_a * env_b) @ cweights
    return out
