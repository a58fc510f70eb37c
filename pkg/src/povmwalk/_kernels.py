"""Compiled numerical core of the measurement walk.

The per-step geometry (mixture Bloch vector, step lengths, weights, target
operators) and the full trajectory loop are JIT-compiled; the Python API in
``walk.py`` wraps the same helpers, so there is a single source of truth for
the step construction.  Accumulated operators are kept in upper-triangular
scalar form (a00, a01, a11) so the structural zero in the lower-left corner
is exact by representation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def inv_sqrt_weight(r_sq):
    """Coefficient b of (I + r.sigma)^(-1/2) ~ I - b r.sigma (series near 0)."""
    if r_sq < 1e-12:
        return 0.5 + r_sq / 8.0
    return (1.0 - math.sqrt(1.0 - r_sq)) / r_sq


@njit(cache=True)
def step_length(rx, ry, rz, rn, ux, uy, uz, phi):
    """Length of the Bloch displacement along unit direction u from r.

    Matches the per-outcome Bloch length allowed by the destructive weak
    measurement (a function of the direction's z-component only).  The
    matching equation is linear in the length, so it is solved exactly.
    """
    if rn < 1e-8:
        cth = 0.0
        rhz = 0.0
        rn = 0.0
    else:
        cth = (rx * ux + ry * uy + rz * uz) / rn
        if cth > 1.0:
            cth = 1.0
        elif cth < -1.0:
            cth = -1.0
        rhz = rz / rn
    sin_sq = 1.0 - cth * cth
    if sin_sq < 0.0:
        sin_sq = 0.0
    rn_sq = rn * rn
    root = math.sqrt(1.0 - rn_sq)
    plane = math.sqrt(1.0 - rn_sq * sin_sq)
    nz = ((1.0 - root) * rhz * cth + root * uz) / plane
    sp = math.sin(phi)
    cp = math.cos(phi)
    # realizable Bloch length for direction n: the z-component enters with its
    # sign (outcomes tilted toward |1> admit longer steps)
    rhs = sp * sp / (nz * cp * cp + math.sqrt(sp * sp + nz * nz * cp * cp))
    # rhs = L * plane / (1 - rn_sq - rn*cth*L)  =>  linear in L
    return rhs * (1.0 - rn_sq) / (plane + rhs * rn * cth)


@njit(cache=True)
def plan_core(x, q, V, phi):
    """Per-step geometry for every outcome at simplex position x.

    Returns (xq, r, rn_sq, b, dist, length, weight, t_iden, t_bloch) where
    xq is the barycentric position, r the mixture Bloch vector, dist[k] the
    distance to vertex k, length[k] the solved displacement, weight[k] the
    positive constant c_k, and the target operators are
    t_iden[k] * I + t_bloch[k] . sigma.
    """
    m = x.shape[0]
    xq = np.empty(m)
    dist = np.empty(m)
    length = np.empty(m)
    weight = np.empty(m)
    t_iden = np.empty(m)
    t_bloch = np.empty((m, 3))
    dirs = np.empty((m, 3))

    sq = 0.0
    for i in range(m):
        sq += x[i] * q[i]
    for i in range(m):
        xq[i] = x[i] * q[i] / sq
    rx = 0.0
    ry = 0.0
    rz = 0.0
    for i in range(m):
        rx += V[0, i] * xq[i]
        ry += V[1, i] * xq[i]
        rz += V[2, i] * xq[i]
    rn_sq = rx * rx + ry * ry + rz * rz
    rn = math.sqrt(rn_sq)
    b = inv_sqrt_weight(rn_sq)

    ssum = 0.0
    for k in range(m):
        dx = V[0, k] - rx
        dy = V[1, k] - ry
        dz = V[2, k] - rz
        dn = math.sqrt(dx * dx + dy * dy + dz * dz)
        dist[k] = dn
        ux = dx / dn
        uy = dy / dn
        uz = dz / dn
        dirs[k, 0] = ux
        dirs[k, 1] = uy
        dirs[k, 2] = uz
        ell = step_length(rx, ry, rz, rn, ux, uy, uz, phi)
        if ell > dn:
            ell = dn
        length[k] = ell
        ssum += xq[k] * dn / ell

    fac = 1.0 / (ssum * (1.0 - rn_sq))
    binv = 1.0 / b - 1.0
    for k in range(m):
        ck = xq[k] * dist[k] / length[k] * fac
        weight[k] = ck
        drx = length[k] * dirs[k, 0]
        dry = length[k] * dirs[k, 1]
        drz = length[k] * dirs[k, 2]
        rdk = rx * drx + ry * dry + rz * drz
        t_iden[k] = ck * (1.0 - rn_sq - rdk)
        t_bloch[k, 0] = ck * (b * rdk * rx + binv * drx)
        t_bloch[k, 1] = ck * (b * rdk * ry + binv * dry)
        t_bloch[k, 2] = ck * (b * rdk * rz + binv * drz)

    r = np.empty(3)
    r[0] = rx
    r[1] = ry
    r[2] = rz
    return xq, r, rn_sq, b, dist, length, weight, t_iden, t_bloch


@njit(cache=True)
def reconstruct(t00, t01, t11, phi):
    """Invert the destructive operator form from its target T = M^dag M.

    Returns (s, gamma, delta, m00, m01, m11): the ancilla weight s, the
    overlaps gamma = <e|0> (real, >= 0) and delta = <e|1>, and the entries of
    the upper-triangular measurement operator.
    """
    sp = math.sin(phi)
    cp = math.cos(phi)
    s = t00 + (t11 - t00 * cp * cp) / (sp * sp)
    phase = complex(cp, -sp)  # e^{-i phi}
    if t00 <= 1e-15 * s:
        gamma = 0.0
        delta = 1.0 + 0.0j
    else:
        gamma = math.sqrt(t00 / s)
        delta = 1j * t01 * phase / (s * gamma * sp)
    rs = math.sqrt(s)
    m00 = rs * gamma * phase
    m01 = -1j * delta * sp * rs
    m11 = rs * gamma * cp
    return s, gamma, delta, m00, m01, m11


@njit(cache=True)
def polar_axes(a00, a01, a11, V0, V):
    """Rotate the base Bloch axes by the polar unitary of the accumulated op.

    The unitary factor of the (upper-triangular) accumulated operator defines
    an SO(3) rotation on Bloch vectors; V receives R @ V0.
    """
    g00 = a00.real * a00.real + a00.imag * a00.imag
    g01 = np.conj(a00) * a01
    g11 = a01.real * a01.real + a01.imag * a01.imag + a11.real * a11.real + a11.imag * a11.imag
    t = 0.5 * (g00 + g11)
    wx = g01.real
    wy = -g01.imag
    wz = 0.5 * (g00 - g11)
    wn = math.sqrt(wx * wx + wy * wy + wz * wz)
    lam_p = t + wn
    # t - wn cancels catastrophically once the operator is strongly filtering;
    # the determinant route is exact for the triangular accumulated operator
    det_sq = g00 * (a11.real * a11.real + a11.imag * a11.imag)
    lam_m = det_sq / lam_p
    c_p = 1.0 / math.sqrt(lam_p)
    c_m = 1.0 / math.sqrt(lam_m)
    alpha = 0.5 * (c_p + c_m)
    if wn < 1e-300:
        beta = 0.0
    else:
        beta = 0.5 * (c_p - c_m) / wn
    k00 = alpha + beta * wz
    k11 = alpha - beta * wz
    k01 = beta * complex(wx, -wy)
    k10 = np.conj(k01)
    # U = acc @ K (acc lower-left is structurally zero)
    ua = a00 * k00 + a01 * k10
    ub = a00 * k01 + a01 * k11
    uc = a11 * k10
    ud = a11 * k11
    # columns of the rotation: images of x, y, z axes under U sigma U^dag
    abar = np.conj(ua)
    bbar = np.conj(ub)
    cbar = np.conj(uc)
    dbar = np.conj(ud)
    # sigma_x
    x00 = ua * bbar + ub * abar
    x01 = ua * dbar + ub * cbar
    # sigma_y
    y00 = 1j * (ub * abar - ua * bbar)
    y01 = 1j * (ub * cbar - ua * dbar)
    # sigma_z
    z00 = ua * abar - ub * bbar
    z01 = ua * cbar - ub * dbar
    r00 = x01.real
    r10 = -x01.imag
    r20 = x00.real
    r01 = y01.real
    r11 = -y01.imag
    r21 = y00.real
    r02 = z01.real
    r12 = -z01.imag
    r22 = z00.real
    m = V0.shape[1]
    for i in range(m):
        V[0, i] = r00 * V0[0, i] + r01 * V0[1, i] + r02 * V0[2, i]
        V[1, i] = r10 * V0[0, i] + r11 * V0[1, i] + r12 * V0[2, i]
        V[2, i] = r20 * V0[0, i] + r21 * V0[1, i] + r22 * V0[2, i]


@njit(cache=True, nogil=True)
def run_walk(q, V0, psi0, phi, eps, max_steps, uniforms, outcomes, step_probs,
             x_out, psi_out, acc_out):
    """Sample one full walk trajectory.

    Returns (vertex, steps, log_prob); vertex is -1 when max_steps is hit
    before the position reaches a vertex.  Writes per-step outcomes and
    probabilities, the final position, system state and (renormalized)
    accumulated operator into the provided buffers.
    """
    m = q.shape[0]
    x = np.empty(m)
    for i in range(m):
        x[i] = 1.0 / m
    a00 = 1.0 + 0.0j
    a01 = 0.0 + 0.0j
    a11 = 1.0 + 0.0j
    p0 = psi0[0]
    p1 = psi0[1]
    V = np.empty((3, m))
    probs = np.empty(m)
    vertex = -1
    steps = 0
    log_prob = 0.0
    for step in range(max_steps):
        imax = 0
        for i in range(1, m):
            if x[i] > x[imax]:
                imax = i
        if x[imax] >= 1.0 - eps:
            vertex = imax
            break
        polar_axes(a00, a01, a11, V0, V)
        xq, r, rn_sq, b, dist, length, weight, t_iden, t_bloch = plan_core(x, q, V, phi)
        # Bloch vector of the normalized system state
        z = np.conj(p0) * p1
        sx = 2.0 * z.real
        sy = 2.0 * z.imag
        sz = (p0.real * p0.real + p0.imag * p0.imag) - (p1.real * p1.real + p1.imag * p1.imag)
        total = 0.0
        for k in range(m):
            probs[k] = t_iden[k] + t_bloch[k, 0] * sx + t_bloch[k, 1] * sy + t_bloch[k, 2] * sz
            total += probs[k]
        draw = uniforms[step] * total
        k = 0
        acc_p = probs[0]
        while draw > acc_p and k < m - 1:
            k += 1
            acc_p += probs[k]
        pk = probs[k] / total
        outcomes[step] = k
        step_probs[step] = pk
        log_prob += math.log(pk)
        t00 = t_iden[k] + t_bloch[k, 2]
        t11 = t_iden[k] - t_bloch[k, 2]
        t01 = complex(t_bloch[k, 0], -t_bloch[k, 1])
        s_anc, gamma, delta, m00, m01, m11 = reconstruct(t00, t01, t11, phi)
        # accumulate, then renormalize to unit largest singular value
        b00 = m00 * a00
        b01 = m00 * a01 + m01 * a11
        b11 = m11 * a11
        g00 = b00.real * b00.real + b00.imag * b00.imag
        g01 = np.conj(b00) * b01
        g11 = b01.real * b01.real + b01.imag * b01.imag + b11.real * b11.real + b11.imag * b11.imag
        t = 0.5 * (g00 + g11)
        half = 0.5 * (g00 - g11)
        w = math.sqrt(half * half + g01.real * g01.real + g01.imag * g01.imag)
        smax = math.sqrt(t + w)
        a00 = b00 / smax
        a01 = b01 / smax
        a11 = b11 / smax
        n0 = m00 * p0 + m01 * p1
        n1 = m11 * p1
        nrm = math.sqrt(n0.real * n0.real + n0.imag * n0.imag + n1.real * n1.real + n1.imag * n1.imag)
        p0 = n0 / nrm
        p1 = n1 / nrm
        # simplex update: the new Bloch point is a convex combination of r
        # and the target vertex, so the barycentric move is affine
        tk = length[k] / dist[k]
        ysum = 0.0
        for i in range(m):
            bar = (1.0 - tk) * xq[i]
            if i == k:
                bar += tk
            x[i] = bar / q[i]
            ysum += x[i]
        for i in range(m):
            x[i] /= ysum
        steps += 1
    for i in range(m):
        x_out[i] = x[i]
    psi_out[0] = p0
    psi_out[1] = p1
    acc_out[0, 0] = a00
    acc_out[0, 1] = a01
    acc_out[1, 0] = 0.0 + 0.0j
    acc_out[1, 1] = a11
    return vertex, steps, log_prob


@njit(cache=True)
def oracle_children(x, a00, a01, a11, p0, p1, q, V0, phi):
    """Expand one enumeration node: per-outcome probabilities and successors.

    The accumulated operator entries are NOT renormalized here so the exact
    string probability <psi0| acc^dag acc |psi0> stays directly computable.
    Returns (probs, next_x, next_acc, next_psi) with next_acc[k] holding
    (a00, a01, a11).
    """
    m = q.shape[0]
    V = np.empty((3, m))
    polar_axes(a00, a01, a11, V0, V)
    xq, r, rn_sq, b, dist, length, weight, t_iden, t_bloch = plan_core(x, q, V, phi)
    z = np.conj(p0) * p1
    sx = 2.0 * z.real
    sy = 2.0 * z.imag
    sz = (p0.real * p0.real + p0.imag * p0.imag) - (p1.real * p1.real + p1.imag * p1.imag)
    probs = np.empty(m)
    next_x = np.empty((m, m))
    next_acc = np.empty((m, 3), dtype=np.complex128)
    next_psi = np.empty((m, 2), dtype=np.complex128)
    for k in range(m):
        pk = t_iden[k] + t_bloch[k, 0] * sx + t_bloch[k, 1] * sy + t_bloch[k, 2] * sz
        probs[k] = pk
        t00 = t_iden[k] + t_bloch[k, 2]
        t11 = t_iden[k] - t_bloch[k, 2]
        t01 = complex(t_bloch[k, 0], -t_bloch[k, 1])
        s_anc, gamma, delta, m00, m01, m11 = reconstruct(t00, t01, t11, phi)
        next_acc[k, 0] = m00 * a00
        next_acc[k, 1] = m00 * a01 + m01 * a11
        next_acc[k, 2] = m11 * a11
        n0 = m00 * p0 + m01 * p1
        n1 = m11 * p1
        nrm = math.sqrt(n0.real * n0.real + n0.imag * n0.imag + n1.real * n1.real + n1.imag * n1.imag)
        if nrm > 0.0:
            next_psi[k, 0] = n0 / nrm
            next_psi[k, 1] = n1 / nrm
        else:
            next_psi[k, 0] = 0.0
            next_psi[k, 1] = 0.0
        tk = length[k] / dist[k]
        ysum = 0.0
        for i in range(m):
            bar = (1.0 - tk) * xq[i]
            if i == k:
                bar += tk
            next_x[k, i] = bar / q[i]
            ysum += next_x[k, i]
        for i in range(m):
            next_x[k, i] /= ysum
    return probs, next_x, next_acc, next_psi
