"""Tau functions, the KP potential u and the KP residual.

Every tau function handled here has the shape

    tau(t) = exp(t Q t / 2) * sum_k exp(a_k + K_k . t),

a finite exponential sum (for theta functions: the truncated lattice sum).
``ExpSum`` stores ``a``, ``K`` and ``Q`` and produces values and Taylor
expansions of ``log tau`` in the first three times by differentiating each
exponential exactly, so derivatives carry no discretisation error.

KP equation checked:  3/4 u_{t2 t2} - d_x (u_{t3} - u_xxx / 4 - 3 u u_x) = 0,
with ``x = t1`` and ``u = d_x^2 log tau``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import series
from .component_data import ComponentData
from .degeneration import DegenerationFamily, embed_alpha, max_workers
from .riemann_theta import theta, theta_lattice
from .series import MultiSeries, monomials
from .tropical_theta import MaximalForm, delaunay_set

__all__ = [
    "TauError",
    "ExpSum",
    "TauSpec",
    "theta_expsum",
    "tau_expsum",
    "tau_family",
    "tau_limit",
    "tau_component",
    "shifted_c",
    "u_from_tau",
    "parse_grid",
    "grid_points",
    "u_grid",
    "ResidualReport",
    "kp_residual",
    "wavefunction_coeffs",
]

ZERO_TOL = 1e-8
KP_DEGREE = 6


class TauError(ValueError):
    pass


@dataclass
class ExpSum:
    log_amp: np.ndarray  # (N,)
    rates: np.ndarray  # (N, M)
    Q: np.ndarray  # (M, M)

    @property
    def M(self) -> int:
        return self.Q.shape[0]

    def _exponents(self, t: np.ndarray) -> np.ndarray:
        return self.log_amp[None, :] + t @ self.rates.T

    def _quad(self, t: np.ndarray) -> np.ndarray:
        return 0.5 * np.einsum("pi,ij,pj->p", t, self.Q, t)

    def log_value(self, t) -> tuple[np.ndarray, np.ndarray]:
        """``(log tau, relative size)`` at the rows of ``t``.

        The relative size is ``|sum| / max |term|``; small values mean the point
        sits on (or next to) the zero set of tau.
        """
        t = np.atleast_2d(np.asarray(t, dtype=complex))
        E = self._exponents(t)
        m = E.real.max(axis=1)
        S = np.exp(E - m[:, None]).sum(axis=1)
        with np.errstate(divide="ignore"):
            return m + np.log(S) + self._quad(t), np.abs(S)

    def value(self, t) -> np.ndarray:
        return np.exp(self.log_value(t)[0])

    def log_taylor(self, t, nvars: int = 3, degree: int = KP_DEGREE) -> tuple[MultiSeries, np.ndarray]:
        """Taylor series of ``log tau(t + (d_1, .., d_nvars, 0, ..))`` in ``d`` for each row of ``t``."""
        t = np.atleast_2d(np.asarray(t, dtype=complex))
        monos = monomials(nvars, degree)
        K = self.rates[:, :nvars]
        W = np.empty((K.shape[0], len(monos)), dtype=complex)
        for j, b in enumerate(monos):
            W[:, j] = np.prod(K ** np.asarray(b), axis=1) / math.prod(math.factorial(k) for k in b)
        E = self._exponents(t)
        m = E.real.max(axis=1)
        C = np.exp(E - m[:, None]) @ W
        size = np.abs(C[:, 0])
        ok = size >= ZERO_TOL
        C[~ok, 0] = 1.0  # keeps the logarithm finite at flagged points
        F = MultiSeries.from_monomials(C, nvars, degree).log()
        zero = (slice(None),) + (0,) * nvars
        F.c[zero] += m + self._quad(t)
        grad = t @ self.Q
        for i in range(nvars):
            e = [0] * nvars
            e[i] = 1
            F.c[(slice(None),) + tuple(e)] += grad[:, i]
            for j in range(i, nvars):
                e2 = [0] * nvars
                e2[i] += 1
                e2[j] += 1
                F.c[(slice(None),) + tuple(e2)] += self.Q[i, j] * (0.5 if i == j else 1.0)
        return F, size

    @staticmethod
    def concat(parts: Sequence["ExpSum"]) -> "ExpSum":
        return ExpSum(np.concatenate([p.log_amp for p in parts]),
                      np.concatenate([p.rates for p in parts]), parts[0].Q)


def theta_expsum(Z: np.ndarray, c: np.ndarray, R: np.ndarray, t_rows: np.ndarray, tol: float,
                 log_prefactor: complex = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Lattice expansion of ``theta(Z, c + t R)``: returns ``(log_amp, rates)``.

    ``R`` is ``(M, g)``; the lattice is chosen good for every row of ``t_rows``
    and their convex hull.
    """
    g = Z.shape[0]
    if g == 0:
        return np.array([log_prefactor], dtype=complex), np.zeros((1, R.shape[0]), dtype=complex)
    im_rows = (c[None, :] + np.atleast_2d(t_rows) @ R).imag
    # leave room for the growth of |2 pi i u . r| ** 6 used by the KP derivatives
    pts, _, _ = theta_lattice(Z, im_rows, tol, order=KP_DEGREE)
    pts = pts.astype(float)
    log_amp = 1j * np.pi * (np.einsum("ki,ij,kj->k", pts, Z, pts) + 2 * pts @ c) + log_prefactor
    rates = 2j * np.pi * pts @ R.T
    return log_amp, rates


@dataclass
class TauSpec:
    """What tau to build.

    ``kind`` is ``"family"``, ``"limit"`` or ``"component"``.  ``c`` uses the
    layout (vertex blocks, tropical block).  For ``kind="family"`` with
    ``regularized=True`` the argument is shifted by ``-log(s) * alpha Bbar`` and
    the result multiplied by ``s ** Theta(alpha)``, which is the combination that
    converges to the limit tau.
    """

    data: ComponentData
    family: DegenerationFamily
    alpha: tuple
    c: np.ndarray
    kind: str = "limit"
    s: float | None = None
    form: MaximalForm | None = None
    times: int = 4
    regularized: bool = False
    tol: float = 1e-14

    def __post_init__(self):
        self.alpha = tuple(Fraction(a) for a in self.alpha)
        self.c = np.asarray(self.c, dtype=complex).reshape(-1)
        if self.kind not in ("family", "limit", "component"):
            raise TauError(f"unknown tau kind {self.kind!r}")
        if self.times < 3:
            raise TauError("at least three times are needed for the KP equation")
        if self.times > self.data.order:
            raise TauError(f"component data only has expansions to order {self.data.order}")
        if len(self.alpha) != self.data.h1:
            raise TauError(f"alpha has length {len(self.alpha)}, expected {self.data.h1}")
        if self.c.shape[0] != self.data.genus:
            raise TauError(f"c has length {self.c.shape[0]}, expected {self.data.genus}")
        if self.kind == "family" and (self.s is None or not 0 < self.s < 1):
            raise TauError("a family tau needs 0 < s < 1")
        if self.kind == "component" and (self.form is None or not self.form.witnesses):
            raise TauError("a component tau needs a maximal form with witnesses")


def _times(spec: TauSpec, t) -> np.ndarray:
    t = np.atleast_2d(np.asarray(t, dtype=complex))
    if t.shape[1] > spec.times:
        raise TauError(f"got {t.shape[1]} times, spec has {spec.times}")
    out = np.zeros((t.shape[0], spec.times), dtype=complex)
    out[:, :t.shape[1]] = t
    return out


def shifted_c(spec: TauSpec) -> np.ndarray:
    """``c - log(s) * alphabar Bbar``."""
    return spec.c - math.log(spec.s) * (embed_alpha(spec.family, spec.alpha) @ spec.family.Bbar)


def _family_expsum(spec: TauSpec, t_rows: np.ndarray) -> ExpSum:
    M = spec.times
    R = spec.data.stacked_r()[:M]
    Q = spec.data.q[:M, :M]
    Z = spec.family.Z(spec.s)
    if spec.regularized:
        c = shifted_c(spec)
        pref = math.log(spec.s) * float(delaunay_set(spec.family.B_C, spec.alpha).value)
    else:
        c, pref = spec.c, 0.0
    la, rates = theta_expsum(Z, c, R, t_rows, spec.tol, pref)
    return ExpSum(la, rates, Q)


def _mixture_expsum(spec: TauSpec, points, t_rows: np.ndarray) -> ExpSum:
    d = spec.data
    M = spec.times
    g, h1 = d.genus, d.h1
    c_trop = spec.c[g - h1:]
    offs = d.vertex_offsets()
    w0 = d.weights[d.vertex_ids.index(d.base_vertex)]
    o0 = offs[d.base_vertex]
    parts = []
    for x in points:
        x = np.asarray(x, dtype=float)
        la = 1j * np.pi * (x @ d.B0 @ x + 2 * c_trop @ x)
        rate = 2j * np.pi * (d.r_trop[:M] @ x)
        for vid, w in zip(d.vertex_ids, d.weights):
            if w and vid != d.base_vertex:
                val = theta(d.B_v[vid], spec.c[offs[vid]:offs[vid] + w] + d.C_v[vid] @ x, spec.tol).value
                la = la + (np.log(val) if val != 0 else -np.inf)
        if w0:
            cv = spec.c[o0:o0 + w0] + d.C_v[d.base_vertex] @ x
            tla, trates = theta_expsum(d.B_v[d.base_vertex], cv, d.r_base[:M], t_rows, spec.tol)
            parts.append(ExpSum(tla + la, trates + rate[None, :], d.q[:M, :M]))
        else:
            parts.append(ExpSum(np.array([la]), rate[None, :], d.q[:M, :M]))
    return ExpSum.concat(parts)


def tau_expsum(spec: TauSpec, t_rows) -> ExpSum:
    """Exponential-sum representation of the tau function, accurate on the hull of ``t_rows``."""
    t_rows = _times(spec, t_rows)
    if spec.kind == "family":
        return _family_expsum(spec, t_rows)
    if spec.kind == "limit":
        pts = delaunay_set(spec.family.B_C, spec.alpha).points
    else:
        pts = spec.form.witnesses
    return _mixture_expsum(spec, pts, t_rows)


def _eval(spec: TauSpec, t) -> np.ndarray:
    t = _times(spec, t)
    return tau_expsum(spec, t).value(t)


def tau_family(spec: TauSpec, t) -> complex | np.ndarray:
    if spec.kind != "family":
        raise TauError("tau_family needs kind='family'")
    out = _eval(spec, t)
    return complex(out[0]) if np.ndim(t) == 1 else out


def tau_limit(spec: TauSpec, t) -> complex | np.ndarray:
    if spec.kind != "limit":
        raise TauError("tau_limit needs kind='limit'")
    out = _eval(spec, t)
    return complex(out[0]) if np.ndim(t) == 1 else out


def tau_component(spec: TauSpec, t) -> complex | np.ndarray:
    if spec.kind != "component":
        raise TauError("tau_component needs kind='component'")
    out = _eval(spec, t)
    return complex(out[0]) if np.ndim(t) == 1 else out


def _kp_fields(spec: TauSpec, t: np.ndarray, es: ExpSum | None = None) -> tuple[dict, np.ndarray]:
    es = es or tau_expsum(spec, t)
    F, size = es.log_taylor(t, 3, KP_DEGREE)
    d = F.derivative_at_zero
    fields = {
        "u": d((2, 0, 0)),
        "u_x": d((3, 0, 0)),
        "u_xx": d((4, 0, 0)),
        "u_xxxx": d((6, 0, 0)),
        "u_22": d((2, 2, 0)),
        "u_x3": d((3, 0, 1)),
    }
    return fields, size >= ZERO_TOL


def u_from_tau(spec: TauSpec, x, t2=0.0, t3=0.0) -> complex | np.ndarray:
    """``d^2/dt1^2 log tau`` at ``t = (x, t2, t3, 0, ..)``; NaN where tau vanishes."""
    x, t2, t3 = np.broadcast_arrays(*(np.asarray(a, dtype=complex) for a in (x, t2, t3)))
    t = np.column_stack([x.ravel(), t2.ravel(), t3.ravel()])
    fields, ok = _kp_fields(spec, _times(spec, t))
    u = np.where(ok, fields["u"], np.nan)
    return complex(u[0]) if x.ndim == 0 else u.reshape(x.shape)


def parse_grid(text: str | None) -> dict[str, tuple[float, float, int]]:
    """``"x:-2:2:11,t2:-2:2:11,t3:-2:2:11"`` -> axis ranges."""
    out = {"x": (-2.0, 2.0, 11), "t2": (-2.0, 2.0, 11), "t3": (-2.0, 2.0, 11)}
    if not text:
        return out
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) != 4 or bits[0] not in out:
            raise ValueError(f"bad grid axis {part!r}; expected name:lo:hi:n with name in x,t2,t3")
        lo, hi, n = float(bits[1]), float(bits[2]), int(bits[3])
        if n < 2:
            raise ValueError(f"grid axis {bits[0]} needs at least 2 points")
        if not hi > lo:
            raise ValueError(f"grid axis {bits[0]} needs lo < hi")
        out[bits[0]] = (lo, hi, n)
    return out


def grid_points(grid: dict) -> np.ndarray:
    axes = [np.linspace(*grid[k]) for k in ("x", "t2", "t3")]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _chunked(spec: TauSpec, pts: np.ndarray, chunk: int = 2048):
    t = _times(spec, pts)
    lo, hi = t.real.min(axis=0), t.real.max(axis=0)
    corners = np.array(np.meshgrid(*zip(lo[:3], hi[:3]), indexing="ij")).reshape(3, -1).T
    es = tau_expsum(spec, corners)
    blocks = [t[i:i + chunk] for i in range(0, len(t), chunk)]
    with ThreadPoolExecutor(max_workers=min(max_workers(), len(blocks))) as pool:
        results = list(pool.map(lambda b: _kp_fields(spec, b, es), blocks))
    fields = {k: np.concatenate([r[0][k] for r in results]) for k in results[0][0]}
    ok = np.concatenate([r[1] for r in results])
    return es, fields, ok


def u_grid(spec: TauSpec, grid: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(points, u, ok)`` on a real (x, t2, t3) grid."""
    pts = grid_points(grid)
    _, fields, ok = _chunked(spec, pts)
    return pts, np.where(ok, fields["u"], np.nan), ok


@dataclass
class ResidualReport:
    grid: dict
    max_residual: float
    scale: float
    relative_residual: float
    npoints: int
    flagged: int
    fd_max_rel_diff: float | None = None

    def to_json(self) -> dict:
        return {
            "grid": {k: list(v) for k, v in self.grid.items()},
            "max_residual": self.max_residual,
            "scale": self.scale,
            "relative_residual": self.relative_residual,
            "npoints": self.npoints,
            "flagged": self.flagged,
            "fd_max_rel_diff": self.fd_max_rel_diff,
        }


def _fd_u(es: ExpSum, t: np.ndarray, h: float) -> np.ndarray:
    """Second x-derivative of log tau by one Richardson step on central differences."""
    base, _ = es.log_value(t)

    def d2(step):
        acc = np.zeros(len(t), dtype=complex)
        for sgn in (1, -1):
            tt = t.copy()
            tt[:, 0] += sgn * step
            # differences of logs taken as logs of ratios to stay on one branch
            acc += np.log(np.exp(es.log_value(tt)[0] - base))
        return acc / step ** 2

    return (4 * d2(h / 2) - d2(h)) / 3


def kp_residual(spec: TauSpec, grid: dict | str | None = None, fd_samples: int = 8,
                fd_step: float = 1e-3, seed: int = 0) -> ResidualReport:
    grid = parse_grid(grid) if grid is None or isinstance(grid, str) else grid
    pts = grid_points(grid)
    es, f, ok = _chunked(spec, pts)
    res = 0.75 * f["u_22"] - (f["u_x3"] - 0.25 * f["u_xxxx"] - 3 * (f["u_x"] ** 2 + f["u"] * f["u_xx"]))
    res = np.abs(res[ok])
    scale = float(np.max(np.abs(f["u_x3"][ok]))) if ok.any() else 0.0
    max_res = float(res.max()) if res.size else 0.0
    rel = max_res / scale if scale > 0 else (0.0 if max_res == 0 else math.inf)
    fd = None
    if fd_samples and ok.any():
        rng = np.random.default_rng(seed)
        idx = rng.choice(np.flatnonzero(ok), size=min(fd_samples, int(ok.sum())), replace=False)
        t = _times(spec, pts[idx])
        u_fd = _fd_u(es, t, fd_step)
        u_an = f["u"][idx]
        umax = max(float(np.max(np.abs(f["u"][ok]))), 1e-300)
        fd = float(np.max(np.abs(u_fd - u_an)) / umax)
    return ResidualReport(grid, max_res, scale, rel, len(pts), int((~ok).sum()), fd)


def wavefunction_coeffs(spec: TauSpec, t, K: int) -> np.ndarray:
    """``w_1..w_K`` with ``tau(t - [a]) / tau(t) = 1 + sum_k w_k a^k``, ``[a] = (a, a^2/2, ..)``."""
    t = _times(spec, t)[0]
    M = spec.times
    n = K + 1
    es = tau_expsum(spec, t[None, :])
    shift = np.zeros((M, n), dtype=complex)  # series of [a]_m
    for m in range(1, M + 1):
        if m < n:
            shift[m - 1, m] = 1.0 / m
    # exponent series of each term and of the quadratic prefactor
    E = es.log_amp + es.rates @ t
    Es = -es.rates @ shift  # (N, n), zero constant term
    Qt = es.Q @ t
    quad = -(Qt @ shift)
    for i in range(M):
        for j in range(M):
            if es.Q[i, j] != 0:
                quad = quad + 0.5 * es.Q[i, j] * series.mul(shift[i], shift[j], n)
    m0 = E.real.max()
    weights = np.exp(E - m0)
    S = np.zeros(n, dtype=complex)
    for wk, ek in zip(weights, Es):
        if wk != 0:
            S += wk * series.exp(ek, n)
    if abs(S[0]) < ZERO_TOL:
        raise TauError("tau vanishes at t to working precision")
    ratio = series.mul(S, series.exp(quad, n), n) / S[0]
    return ratio[1:]
