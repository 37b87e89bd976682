"""Dense primal-dual interior-point core for conic programs.

Solves the standard conic form

    minimize    c'x
    subject to  A x = b
                G x + s = h,   s in K

with K a product of a nonnegative orthant (dimension ``l``) and second-order
cones (dimensions ``q``).  Uses the homogeneous self-dual embedding, so primal
and dual infeasibility are detected via certificates rather than divergence.
Search directions use Nesterov-Todd scaling with a Mehrotra
predictor-corrector step.  All linear algebra is dense; the intended problem
scale is a few hundred variables.  Cone operations are vectorized over groups
of equal-sized cones, which matters because callers submit many small cones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

_STEP_FRACTION = 0.99
_REGULARIZATION = 1e-10
_STALL_ITERS = 15


@dataclass
class ConeDims:
    l: int
    q: list[int]

    @property
    def total(self) -> int:
        return self.l + sum(self.q)

    @property
    def degree(self) -> int:
        # Barrier degree: one per orthant entry, one per second-order cone.
        return self.l + len(self.q)

    def soc_slices(self) -> list[slice]:
        out, start = [], self.l
        for k in self.q:
            out.append(slice(start, start + k))
            start += k
        return out


class _ConeWork:
    """Zero-padded batch layout: all second-order cones in one (g, kmax) grid.

    Padding slots point at a dummy index past the end of the stacked vector,
    so gathers read zeros and scatters write into a discarded slot.  That
    makes every cone operation a fixed number of numpy calls independent of
    the cone count, which dominates runtime for the many-small-cones problems
    this solver sees.
    """

    def __init__(self, dims: ConeDims):
        self.l = dims.l
        self.total = dims.total
        self.degree = dims.degree
        self.ncones = len(dims.q)
        self.kmax = max(dims.q) if dims.q else 0
        idx = np.full((self.ncones, self.kmax), dims.total, dtype=np.intp)
        start = dims.l
        for i, k in enumerate(dims.q):
            idx[i, :k] = np.arange(start, start + k)
            start += k
        self.idx = idx  # (g, kmax); value == total marks padding
        self.heads = idx[:, 0] if self.ncones else np.empty(0, dtype=np.intp)
        self._ext = np.zeros(self.total + 1)

    def gather(self, v: np.ndarray) -> np.ndarray:
        self._ext[:-1] = v
        return self._ext[self.idx]

    def scatter(self, blocks: np.ndarray) -> np.ndarray:
        out = np.zeros(self.total + 1)
        out[self.idx] = blocks
        return out[:-1]


def _identity(work: _ConeWork) -> np.ndarray:
    e = np.zeros(work.total)
    e[: work.l] = 1.0
    e[work.heads] = 1.0
    return e


def _jordan_product(u: np.ndarray, v: np.ndarray, work: _ConeWork) -> np.ndarray:
    out = np.empty_like(u)
    out[: work.l] = u[: work.l] * v[: work.l]
    if work.ncones:
        ub, vb = work.gather(u), work.gather(v)
        res = ub[:, :1] * vb + vb[:, :1] * ub
        res[:, 0] = (ub * vb).sum(axis=1)
        out[work.l :] = work.scatter(res)[work.l :]
    return out


def _jordan_solve(u: np.ndarray, w: np.ndarray, work: _ConeWork) -> np.ndarray:
    """Solve u o x = w for x (u interior)."""
    out = np.empty_like(w)
    out[: work.l] = w[: work.l] / u[: work.l]
    if work.ncones:
        ub, wb = work.gather(u), work.gather(w)
        u0, w0 = ub[:, 0], wb[:, 0]
        det = u0 * u0 - (ub[:, 1:] * ub[:, 1:]).sum(axis=1)
        x0 = (u0 * w0 - (ub[:, 1:] * wb[:, 1:]).sum(axis=1)) / det
        res = (wb - x0[:, None] * ub) / u0[:, None]
        res[:, 0] = x0
        out[work.l :] = work.scatter(res)[work.l :]
    return out


def _margin(u: np.ndarray, work: _ConeWork) -> float:
    """Min eigenvalue across blocks (distance-to-boundary surrogate)."""
    vals = [float(np.min(u[: work.l]))] if work.l else []
    if work.ncones:
        ub = work.gather(u)
        vals.append(float(np.min(ub[:, 0] - np.sqrt((ub[:, 1:] ** 2).sum(axis=1)))))
    return min(vals) if vals else np.inf


def _pos_min(r: np.ndarray) -> np.ndarray:
    return np.where(r > 1e-14, r, np.inf)


def _max_step_arrays(ul, dl, ub, db) -> float:
    """Boundary step from stacked orthant entries and gathered cone blocks."""
    alpha = np.inf
    if ul.size:
        neg = dl < 0
        if neg.any():
            alpha = float(np.min(-ul[neg] / dl[neg]))
    if ub.size:
        a = db[:, 0] ** 2 - (db[:, 1:] * db[:, 1:]).sum(axis=1)
        b = 2.0 * (ub[:, 0] * db[:, 0] - (ub[:, 1:] * db[:, 1:]).sum(axis=1))
        c = ub[:, 0] ** 2 - (ub[:, 1:] * ub[:, 1:]).sum(axis=1)
        # Smallest positive root of a t^2 + b t + c = 0 per cone.  Masking
        # replaces degenerate denominators so no divide warnings fire.
        quad = np.abs(a) > 1e-14
        lin = ~quad & (np.abs(b) > 1e-14)
        disc = b * b - 4.0 * a * c
        ok = quad & (disc >= 0)
        sq = np.sqrt(np.where(disc > 0, disc, 0.0))
        a2 = 2.0 * np.where(quad, a, 1.0)
        b_safe = np.where(lin, b, 1.0)
        best = np.minimum(
            np.minimum(_pos_min(np.where(ok, (-b - sq) / a2, np.inf)),
                       _pos_min(np.where(ok, (-b + sq) / a2, np.inf))),
            _pos_min(np.where(lin, -c / b_safe, np.inf)),
        )
        if best.size:
            alpha = min(alpha, float(best.min()))
    return alpha


def _max_step(u: np.ndarray, du: np.ndarray, work: _ConeWork) -> float:
    """sup {alpha >= 0 : u + alpha*du in K} for interior u."""
    ub = work.gather(u) if work.ncones else np.empty((0, 0))
    db = work.gather(du) if work.ncones else np.empty((0, 0))
    return _max_step_arrays(u[: work.l], du[: work.l], ub, db)


def _max_step_pair(u1, du1, u2, du2, work: _ConeWork) -> float:
    """min(max_step(u1, du1), max_step(u2, du2)) in one vectorized pass."""
    ul = np.concatenate([u1[: work.l], u2[: work.l]])
    dl = np.concatenate([du1[: work.l], du2[: work.l]])
    if work.ncones:
        ub = np.vstack([work.gather(u1), work.gather(u2)])
        db = np.vstack([work.gather(du1), work.gather(du2)])
    else:
        ub = db = np.empty((0, 0))
    return _max_step_arrays(ul, dl, ub, db)


class NTScaling:
    """Nesterov-Todd scaling point for an orthant x SOC product cone."""

    def __init__(self, s: np.ndarray, z: np.ndarray, work: _ConeWork):
        self.work = work
        self.w_lin = np.sqrt(s[: work.l] / z[: work.l]) if work.l else np.empty(0)
        if work.ncones:
            sb, zb = work.gather(s), work.gather(z)
            snorm = np.sqrt((sb[:, 1:] ** 2).sum(axis=1))
            znorm = np.sqrt((zb[:, 1:] ** 2).sum(axis=1))
            sres = np.sqrt((sb[:, 0] - snorm) * (sb[:, 0] + snorm))
            zres = np.sqrt((zb[:, 0] - znorm) * (zb[:, 0] + znorm))
            sn = sb / sres[:, None]
            zn = zb / zres[:, None]
            gamma = np.sqrt((1.0 + (sn * zn).sum(axis=1)) / 2.0)
            wbar = (sn - zn) / (2.0 * gamma[:, None])
            wbar[:, 0] = (sn[:, 0] + zn[:, 0]) / (2.0 * gamma)
            self.wbar = wbar  # (g, kmax), wbar' J wbar = 1 per cone
            self.eta = np.sqrt(sres / zres)
        self.lmbda = self.apply_w(z)

    def _apply(self, v: np.ndarray, invert: bool) -> np.ndarray:
        out = np.empty_like(v)
        if self.work.l:
            out[: self.work.l] = (
                v[: self.work.l] / self.w_lin if invert else self.w_lin * v[: self.work.l]
            )
        if self.work.ncones:
            sign = -1.0 if invert else 1.0
            vb = self.work.gather(v)
            wbar = self.wbar
            dot = (wbar[:, 1:] * vb[:, 1:]).sum(axis=1)
            scale = 1.0 / self.eta if invert else self.eta
            coef = sign * vb[:, 0] + dot / (1.0 + wbar[:, 0])
            res = scale[:, None] * (vb + coef[:, None] * wbar)
            res[:, 0] = scale * (wbar[:, 0] * vb[:, 0] + sign * dot)
            out[self.work.l :] = self.work.scatter(res)[self.work.l :]
        return out

    def apply_w(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v, invert=False)

    def apply_winv(self, v: np.ndarray) -> np.ndarray:
        return self._apply(v, invert=True)

    def write_w_squared(self, out: np.ndarray) -> None:
        """Fill the dense W'W block (out must be total x total, zeroed)."""
        if self.work.l:
            idx = np.arange(self.work.l)
            out[idx, idx] = self.w_lin**2
        if self.work.ncones:
            wbar, k = self.wbar, self.work.kmax
            blocks = 2.0 * wbar[:, :, None] * wbar[:, None, :]
            diag = np.arange(k)
            blocks[:, diag, diag] += 1.0
            blocks[:, 0, 0] -= 2.0
            blocks *= (self.eta**2)[:, None, None]
            ext = np.zeros((self.work.total + 1, self.work.total + 1))
            rows = self.work.idx
            ext[rows[:, :, None], rows[:, None, :]] = blocks
            out[self.work.l :, self.work.l :] = ext[self.work.l : -1, self.work.l : -1]


def _equilibrate(c, G, h, dims: ConeDims, A, b, passes: int = 5):
    """Ruiz-style scaling: per-row for the orthant and A, uniform per SOC
    block (cones are invariant only under uniform positive scaling), per
    column across the stacked matrix."""
    n = c.size
    G, h, c = G.copy(), h.copy(), c.copy()
    A, b = A.copy(), b.copy()
    row_g = np.ones(G.shape[0])
    row_a = np.ones(A.shape[0])
    col = np.ones(n)
    slices = dims.soc_slices()
    for _ in range(passes):
        absG = np.abs(G)
        r = np.zeros(G.shape[0])
        r[: dims.l] = absG[: dims.l].max(axis=1) if dims.l else 0.0
        for sl in slices:
            r[sl] = absG[sl].max() if absG[sl].size else 0.0
        r = np.sqrt(r)
        scale = np.where(r > 0, 1.0 / r, 1.0)
        G *= scale[:, None]
        h *= scale
        row_g *= scale
        if A.size:
            ra = np.sqrt(np.abs(A).max(axis=1))
            sa = np.where(ra > 0, 1.0 / ra, 1.0)
            A *= sa[:, None]
            b *= sa
            row_a *= sa
        stack = np.vstack([G, A]) if A.size else G
        if stack.size:
            cn = np.sqrt(np.abs(stack).max(axis=0))
            sc = np.where(cn > 0, 1.0 / cn, 1.0)
            G *= sc[None, :]
            if A.size:
                A *= sc[None, :]
            c *= sc
            col *= sc
    return c, G, h, A, b, row_g, row_a, col


@dataclass
class ConicResult:
    status: str  # optimal | infeasible | unbounded | max-iterations
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int


def solve_conic(
    c: np.ndarray,
    G: np.ndarray,
    h: np.ndarray,
    dims: ConeDims,
    A: np.ndarray | None = None,
    b: np.ndarray | None = None,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> ConicResult:
    c0 = np.asarray(c, dtype=float)
    G0 = np.atleast_2d(np.asarray(G, dtype=float))
    h0 = np.asarray(h, dtype=float)
    n = c0.size
    if G0.shape != (dims.total, n):
        raise ValueError("G shape inconsistent with dims")
    if A is None:
        A0 = np.zeros((0, n))
        b0 = np.zeros(0)
    else:
        A0 = np.atleast_2d(np.asarray(A, dtype=float))
        b0 = np.asarray(b, dtype=float)

    cs, Gs, hs, As, bs, row_g, row_a, col = _equilibrate(c0, G0, h0, dims, A0, b0)
    res = _solve_core(cs, Gs, hs, dims, As, bs, tol, max_iter)

    # Undo the scaling: x = D x_s, y = S y_s, z = R z_s, s = R^{-1} s_s.
    x = col * res.x
    y = row_a * res.y
    z = row_g * res.z
    s = res.s / row_g
    pres, dres = res.primal_residual, res.dual_residual
    if res.status == "optimal":
        pres = max(
            np.linalg.norm(A0 @ x - b0) / (1.0 + np.linalg.norm(b0)),
            np.linalg.norm(G0 @ x + s - h0) / (1.0 + np.linalg.norm(h0)),
        )
        dres = np.linalg.norm(A0.T @ y + G0.T @ z + c0) / (1.0 + np.linalg.norm(c0))
    return ConicResult(res.status, x, y, z, s, pres, dres, res.gap, res.iterations)


def _solve_core(
    c: np.ndarray,
    G: np.ndarray,
    h: np.ndarray,
    dims: ConeDims,
    A: np.ndarray,
    b: np.ndarray,
    tol: float,
    max_iter: int,
) -> ConicResult:
    n = c.size
    m = dims.total
    p = A.shape[0]
    work = _ConeWork(dims)

    x = np.zeros(n)
    y = np.zeros(p)
    s = _identity(work)
    z = _identity(work)
    tau, kappa = 1.0, 1.0
    e = _identity(work)
    nu = work.degree + 1

    cbh = np.concatenate([c, b, h])
    norm_b = 1.0 + np.linalg.norm(b)
    norm_h = 1.0 + np.linalg.norm(h)
    norm_c = 1.0 + np.linalg.norm(c)

    # Static KKT structure; only the -W'W block changes between iterations.
    dim = n + p + m
    kkt = np.zeros((dim, dim))
    kkt[:n, n : n + p] = A.T
    kkt[:n, n + p :] = G.T
    kkt[n : n + p, :n] = A
    kkt[n + p :, :n] = G
    reg = np.concatenate([
        np.full(n, _REGULARIZATION),
        np.full(p, -_REGULARIZATION),
        np.full(m, -_REGULARIZATION),
    ])
    diag_idx = np.arange(dim)
    w2 = np.zeros((m, m))

    def kkt_matvec(u: np.ndarray) -> np.ndarray:
        ux, uy, uz = u[:n], u[n : n + p], u[n + p :]
        return np.concatenate([
            A.T @ uy + G.T @ uz,
            A @ ux,
            G @ ux - w2 @ uz,
        ])

    best: ConicResult | None = None
    best_score = np.inf
    for iteration in range(max_iter):
        # Residuals of the self-dual embedding.
        r_p = A.T @ y + G.T @ z + c * tau
        r_y = A @ x - b * tau
        r_z = G @ x + s - h * tau
        r_tau = float(c @ x + b @ y + h @ z + kappa)

        # Termination metrics on the deflated iterate.
        xh, yh, zh, sh = x / tau, y / tau, z / tau, s / tau
        pres = max(
            np.linalg.norm(A @ xh - b) / norm_b,
            np.linalg.norm(G @ xh + sh - h) / norm_h,
        )
        dres = np.linalg.norm(A.T @ yh + G.T @ zh + c) / norm_c
        pcost = float(c @ xh)
        absgap = float(sh @ zh)
        relgap = absgap / max(1.0, abs(pcost))
        score = max(pres, dres, min(absgap, relgap))
        if score < best_score:
            best_score = score
            best = ConicResult("max-iterations", xh, yh, zh, sh,
                               pres, dres, relgap, iteration)
        if best_score <= tol:
            best.status = "optimal"
            return best
        # Accuracy peaks at a crossover and then degrades; stop once the
        # composite score has stalled.
        if iteration - best.iterations > _STALL_ITERS:
            break

        # Infeasibility certificates from the embedding (Farkas directions).
        by_hz = float(b @ y + h @ z)
        if by_hz < -1e-12:
            cert = np.linalg.norm(A.T @ y + G.T @ z) / (-by_hz)
            if cert <= tol:
                return ConicResult("infeasible", xh, y / (-by_hz), z / (-by_hz), sh,
                                   pres, dres, relgap, iteration)
        cx = float(c @ x)
        if cx < -1e-12:
            cert = max(np.linalg.norm(A @ x), np.linalg.norm(G @ x + s)) / (-cx)
            if cert <= tol:
                return ConicResult("unbounded", x / (-cx), yh, zh, s / (-cx),
                                   pres, dres, relgap, iteration)

        scaling = NTScaling(s, z, work)
        lmbda = scaling.lmbda
        if not np.all(np.isfinite(lmbda)):
            break
        w2.fill(0.0)
        scaling.write_w_squared(w2)
        kkt[n + p :, n + p :] = -w2
        kkt[diag_idx, diag_idx] += reg
        try:
            lu, piv = lu_factor(kkt, overwrite_a=False, check_finite=False)
        except Exception:
            break
        finally:
            kkt[diag_idx, diag_idx] -= reg

        def solve_refined(rhs: np.ndarray) -> np.ndarray:
            u = lu_solve((lu, piv), rhs, check_finite=False)
            scale = 1.0 + float(np.max(np.abs(rhs)))
            for _ in range(2):
                resid = rhs - kkt_matvec(u)
                if float(np.max(np.abs(resid))) <= 1e-13 * scale:
                    break
                u = u + lu_solve((lu, piv), resid, check_finite=False)
            return u

        mu = (float(s @ z) + tau * kappa) / nu

        def finish_direction(u2, ds_bar, dk_target, rscale, denom):
            dtau = (-rscale * r_tau - float(cbh @ u2) - dk_target / tau) / denom
            full = u2 + dtau * u1
            dx, dy, dz = full[:n], full[n : n + p], full[n + p :]
            dsv = scaling.apply_w(ds_bar - scaling.apply_w(dz))
            dkappa = (dk_target - kappa * dtau) / tau
            return dx, dy, dz, dsv, dtau, dkappa

        # Predictor (affine) direction; its KKT solve shares the factorization
        # with the u1 solve, so batch them as a two-column right-hand side.
        ds_aff = -_jordan_product(lmbda, lmbda, work)
        ds_bar_a = _jordan_solve(lmbda, ds_aff, work)
        rhs_pair = np.stack([
            np.concatenate([-c, b, h]),
            np.concatenate([-r_p, -r_y, -r_z - scaling.apply_w(ds_bar_a)]),
        ], axis=1)
        upair = solve_refined(rhs_pair)
        u1, u2a = upair[:, 0], upair[:, 1]
        # c'x1 + b'y1 + h'z1 equals -||W z1||^2 analytically; the explicit
        # quadratic form keeps the sign correct when cancellation degrades
        # the inner product near convergence.
        wz1 = scaling.apply_w(u1[n + p :])
        denom = -float(wz1 @ wz1) - kappa / tau
        if not np.isfinite(denom) or denom >= 0:
            break

        dx_a, dy_a, dz_a, dsv_a, dtau_a, dk_a = finish_direction(
            u2a, ds_bar_a, -tau * kappa, 1.0, denom)

        alpha_a = min(
            _max_step_pair(s, dsv_a, z, dz_a, work),
            tau / -dtau_a if dtau_a < 0 else np.inf,
            kappa / -dk_a if dk_a < 0 else np.inf,
            1.0,
        )
        mu_aff = (
            float((s + alpha_a * dsv_a) @ (z + alpha_a * dz_a))
            + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dk_a)
        ) / nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # Corrector (combined) direction.
        corr = _jordan_product(scaling.apply_winv(dsv_a), scaling.apply_w(dz_a), work)
        ds_comb = ds_aff - corr + sigma * mu * e
        dk_comb = -tau * kappa - dtau_a * dk_a + sigma * mu
        rscale = 1.0 - sigma
        ds_bar_c = _jordan_solve(lmbda, ds_comb, work)
        u2c = solve_refined(np.concatenate([
            -rscale * r_p, -rscale * r_y, -rscale * r_z - scaling.apply_w(ds_bar_c)
        ]))
        dx, dy, dz, dsv, dtau, dkappa = finish_direction(
            u2c, ds_bar_c, dk_comb, rscale, denom)

        alpha = min(
            _max_step_pair(s, dsv, z, dz, work),
            tau / -dtau if dtau < 0 else np.inf,
            kappa / -dkappa if dkappa < 0 else np.inf,
        )
        alpha = min(1.0, _STEP_FRACTION * alpha)
        if not np.isfinite(alpha) or alpha <= 0:
            break

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * dsv
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa
        if _margin(s, work) <= 0 or _margin(z, work) <= 0 or tau <= 0 or kappa <= 0:
            break

    return best if best is not None else ConicResult(
        "max-iterations", x, y, z, s, np.inf, np.inf, np.inf, 0
    )


# Backwards-compatible names used by the cone-level unit tests.
def cone_identity(dims: ConeDims) -> np.ndarray:
    return _identity(_ConeWork(dims))


def jordan_product(u: np.ndarray, v: np.ndarray, dims: ConeDims) -> np.ndarray:
    return _jordan_product(u, v, _ConeWork(dims))


def jordan_solve(u: np.ndarray, w: np.ndarray, dims: ConeDims) -> np.ndarray:
    return _jordan_solve(u, w, _ConeWork(dims))


def cone_margin(u: np.ndarray, dims: ConeDims) -> float:
    return _margin(u, _ConeWork(dims))


def max_step(u: np.ndarray, du: np.ndarray, dims: ConeDims) -> float:
    return _max_step(u, du, _ConeWork(dims))
