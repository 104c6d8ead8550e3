"""Method-of-lines integrator for the Laplacian coflow evolution systems.

The Calabi-Yau system evolves (theta, G) with h frozen at a constant; the
nearly Kahler system evolves (h, theta, G) independently while the coclosed
constraint h' = G cos(3 theta) is monitored, not imposed. Spatial
derivatives are 4th order (periodic wrap on a circle, shifted stencils near
interval ends), applied as cached sparse matrices; time stepping is
classical RK4 under the diffusive step restriction
dt <= cfl * min(G^2) * dr^2.

On an interval the boundary is Dirichlet: endpoint values are frozen (their
time derivative is zeroed). The constraint diagnostic uses a 2nd-order
centered stencil so its discrete residual converges at a clean second order
under simultaneous mesh/time refinement.

FlowStates are immutable; `step` returns a new state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse

from .errors import SingularityDetected, StructureMismatch
from .forms import StructureKind
from .profiles import Circle, Interval, _fd_weights

FLOOR = 1e-6            # positivity floor for h and G
CONSTRAINT_BLOWUP = 1e-2

_DERIV_CACHE = {}


@dataclass(frozen=True)
class Mesh:
    """Uniform 1-d mesh; periodic iff built on a circle."""

    r0: float
    dr: float
    n: int
    periodic: bool

    @classmethod
    def from_domain(cls, domain, n):
        if isinstance(domain, Circle):
            return cls(domain.r0, domain.period / n, n, True)
        if isinstance(domain, Interval):
            return cls(domain.r0, (domain.r1 - domain.r0) / (n - 1), n, False)
        raise TypeError(f"cannot mesh {domain!r}")

    @property
    def nodes(self):
        return self.r0 + self.dr * np.arange(self.n)

    def domain(self):
        if self.periodic:
            return Circle(self.n * self.dr, self.r0)
        return Interval(self.r0, self.r0 + (self.n - 1) * self.dr)

    def deriv_matrix(self, m):
        """Sparse 4th-order differentiation matrix for derivative m."""
        key = (self.n, self.dr, self.periodic, m)
        if key not in _DERIV_CACHE:
            _DERIV_CACHE[key] = _build_deriv_matrix(self, m)
        return _DERIV_CACHE[key]


def _build_deriv_matrix(mesh, m):
    n, dr = mesh.n, mesh.dr
    size = 5 if m <= 2 else 7
    half = size // 2
    offsets = np.arange(-half, half + 1)
    w = _fd_weights(offsets * dr, m)[:, m]
    rows, cols, vals = [], [], []
    for i in range(n):
        if mesh.periodic:
            idx = (i + offsets) % n
            ww = w
        elif half <= i < n - half:
            idx = i + offsets
            ww = w
        else:
            s = m + 4  # one-sided stencil size for 4th order
            lo = min(max(i - s // 2, 0), n - s)
            idx = np.arange(lo, lo + s)
            ww = _fd_weights((idx - i) * dr, m)[:, m]
        rows.extend([i] * len(idx))
        cols.extend(idx)
        vals.extend(ww)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def d1(mesh, f):
    """First derivative, 4th order."""
    return mesh.deriv_matrix(1) @ f


def d2(mesh, f):
    """Second derivative, 4th order."""
    return mesh.deriv_matrix(2) @ f


def d1_low_order(mesh, f):
    """2nd-order first derivative, used only for the constraint diagnostic."""
    if mesh.periodic:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2 * mesh.dr)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * mesh.dr)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * mesh.dr)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * mesh.dr)
    return out


@dataclass(frozen=True)
class FlowState:
    """Discretized (h, theta, G) at one time."""

    mesh: Mesh
    h: np.ndarray
    theta: np.ndarray
    G: np.ndarray
    t: float
    structure: StructureKind

    def __post_init__(self):
        for name in ("h", "theta", "G"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.min(self.h) <= 0 or np.min(self.G) <= 0:
            raise SingularityDetected(
                f"h or G not positive at t={self.t} "
                f"(min h {np.min(self.h):.3g}, min G {np.min(self.G):.3g})")

    def constraint_residual(self):
        """c(r) = h' - G cos 3 theta (NK) or h' (CY), 2nd-order diagnostic."""
        hp = d1_low_order(self.mesh, self.h)
        if self.structure is StructureKind.CY:
            return hp
        return hp - self.G * np.cos(3.0 * self.theta)

    def tau0(self):
        thp = d1(self.mesh, self.theta)
        base = 12.0 / 7.0 * thp / self.G
        if self.structure is StructureKind.CY:
            return base
        return base + 24.0 / 7.0 * np.sin(3.0 * self.theta) / self.h


@dataclass(frozen=True)
class FlowRun:
    """Snapshots at requested output times plus per-step diagnostics."""

    snapshots: tuple
    diagnostics: tuple   # records: (t, dt, sup|c|, sup tau0, min h, min G)
    status: str          # "Completed" | "SingularityDetected" | "ConstraintBlowup"


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------

def scalar_laplacian(f, state):
    """Rough Laplacian of a radial function on the warped metric:
    f''/G^2 + 6 h' f'/(h G^2) - f' G'/G^3."""
    m = state.mesh
    fp, fpp = d1(m, f), d2(m, f)
    hp, Gp = d1(m, state.h), d1(m, state.G)
    return fpp / state.G ** 2 + 6.0 * hp * fp / (state.h * state.G ** 2) \
        - fp * Gp / state.G ** 3


def cy_rates(theta1, theta2, G, G1):
    """Pointwise CY coflow rates from the field derivatives.

    dtheta/dt = theta''/G^2 - G' theta'/G^3,  dG/dt = -9 (theta')^2 / G.
    """
    dtheta = theta2 / G ** 2 - G1 * theta1 / G ** 3
    dG = -9.0 * theta1 ** 2 / G
    return dtheta, dG


def nk_rates(h, h1, h2, theta, theta1, theta2, G, G1):
    """Pointwise NK coflow rates from the field derivatives.

    dh/dt     = h''/G^2 + 3 (h')^2/(h G^2) - h' G'/G^3 - 3/h
    dG/dt     = -3 G sin^2(3 theta)/h^2 - 9 (theta')^2/G
    dtheta/dt = theta''/G^2 + 6 theta' cos(3 theta)/(h G) - theta' G'/G^3
                - 2 sin(3 theta) cos(3 theta)/h^2
    """
    s3, c3 = np.sin(3.0 * theta), np.cos(3.0 * theta)
    dh = h2 / G ** 2 + 3.0 * h1 ** 2 / (h * G ** 2) - h1 * G1 / G ** 3 - 3.0 / h
    dG = -3.0 * G * s3 ** 2 / h ** 2 - 9.0 * theta1 ** 2 / G
    dtheta = theta2 / G ** 2 + 6.0 * theta1 * c3 / (h * G) - theta1 * G1 / G ** 3 \
        - 2.0 * s3 * c3 / h ** 2
    return dh, dtheta, dG


def _cy_stage(theta, G, mesh, D1, D2):
    """(dtheta, dG) for one CY stage; h plays no role (it stays constant)."""
    if np.min(G) <= 0:
        raise SingularityDetected("G lost positivity inside a step")
    t1 = D1 @ theta
    invG = 1.0 / G
    dtheta = (D2 @ theta - (D1 @ G) * t1 * invG) * invG * invG
    dG = -9.0 * t1 * t1 * invG
    if not mesh.periodic:
        dtheta[0] = dtheta[-1] = 0.0  # Dirichlet: endpoint values frozen
        dG[0] = dG[-1] = 0.0
    return dtheta, dG


def _nk_stage(h, theta, G, mesh, D1, D2):
    """(dh, dtheta, dG) for one NK stage."""
    if np.min(h) <= 0 or np.min(G) <= 0:
        raise SingularityDetected("h or G lost positivity inside a step")
    dh, dtheta, dG = nk_rates(h, D1 @ h, D2 @ h, theta, D1 @ theta,
                              D2 @ theta, G, D1 @ G)
    if not mesh.periodic:
        dh[0] = dh[-1] = 0.0  # Dirichlet: endpoint values frozen
        dtheta[0] = dtheta[-1] = 0.0
        dG[0] = dG[-1] = 0.0
    return dh, dtheta, dG


def _stacked_rates(Y, mesh, structure, D1, D2):
    """Rates for the stacked field array Y with rows (h, theta, G)."""
    h, theta, G = Y
    if structure is StructureKind.CY:
        dtheta, dG = _cy_stage(theta, G, mesh, D1, D2)
        return np.vstack((np.zeros_like(h), dtheta, dG))
    return np.vstack(_nk_stage(h, theta, G, mesh, D1, D2))


def rhs_cy(state):
    """(dtheta/dt, dG/dt) for the CY system; h must be constant."""
    if state.structure is not StructureKind.CY:
        raise StructureMismatch("rhs_cy needs a CY state")
    if np.max(np.abs(state.h - state.h[0])) > 1e-12:
        raise StructureMismatch("the CY system assumes h is constant in r")
    rates = _stacked_rates(np.vstack((state.h, state.theta, state.G)),
                           state.mesh, StructureKind.CY,
                           state.mesh.deriv_matrix(1), state.mesh.deriv_matrix(2))
    return rates[1], rates[2]


def rhs_nk(state):
    """(dh/dt, dtheta/dt, dG/dt) for the NK system."""
    if state.structure is not StructureKind.NK:
        raise StructureMismatch("rhs_nk needs an NK state")
    rates = _stacked_rates(np.vstack((state.h, state.theta, state.G)),
                           state.mesh, StructureKind.NK,
                           state.mesh.deriv_matrix(1), state.mesh.deriv_matrix(2))
    return rates[0], rates[1], rates[2]


def _rk4(Y, dt, mesh, structure, D1, D2):
    k1 = _stacked_rates(Y, mesh, structure, D1, D2)
    k2 = _stacked_rates(Y + 0.5 * dt * k1, mesh, structure, D1, D2)
    k3 = _stacked_rates(Y + 0.5 * dt * k2, mesh, structure, D1, D2)
    k4 = _stacked_rates(Y + dt * k3, mesh, structure, D1, D2)
    return Y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_cy(theta, G, dt, mesh, D1, D2):
    half = 0.5 * dt
    kt1, kg1 = _cy_stage(theta, G, mesh, D1, D2)
    kt2, kg2 = _cy_stage(theta + half * kt1, G + half * kg1, mesh, D1, D2)
    kt3, kg3 = _cy_stage(theta + half * kt2, G + half * kg2, mesh, D1, D2)
    kt4, kg4 = _cy_stage(theta + dt * kt3, G + dt * kg3, mesh, D1, D2)
    sixth = dt / 6.0
    return (theta + sixth * (kt1 + 2.0 * (kt2 + kt3) + kt4),
            G + sixth * (kg1 + 2.0 * (kg2 + kg3) + kg4))


def _rk4_nk(h, theta, G, dt, mesh, D1, D2):
    half = 0.5 * dt
    k1 = _nk_stage(h, theta, G, mesh, D1, D2)
    k2 = _nk_stage(h + half * k1[0], theta + half * k1[1], G + half * k1[2],
                   mesh, D1, D2)
    k3 = _nk_stage(h + half * k2[0], theta + half * k2[1], G + half * k2[2],
                   mesh, D1, D2)
    k4 = _nk_stage(h + dt * k3[0], theta + dt * k3[1], G + dt * k3[2],
                   mesh, D1, D2)
    sixth = dt / 6.0
    return (h + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            theta + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            G + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]))


def step(state, dt):
    """One classical RK4 step of size dt; returns the new state."""
    mesh = state.mesh
    Y = np.vstack((state.h, state.theta, state.G))
    Y = _rk4(Y, dt, mesh, state.structure,
             mesh.deriv_matrix(1), mesh.deriv_matrix(2))
    return replace(state, h=Y[0], theta=Y[1], G=Y[2], t=state.t + dt)


def stable_dt(state, cfl):
    return cfl * float(np.min(state.G) ** 2) * state.mesh.dr ** 2


def run_flow(initial, t_end, output_times=(), cfl=0.2,
             init_constraint_tol=1e-4):
    """Integrate to t_end, snapshotting at the requested output times.

    Halts early with status "SingularityDetected" when min h or min G falls
    below the positivity floor, or "ConstraintBlowup" when the NK constraint
    residual exceeds 1e-2; the last valid state is appended as a terminal
    snapshot either way.
    """
    if initial.structure is StructureKind.NK:
        c0 = float(np.max(np.abs(initial.constraint_residual())))
        if c0 > init_constraint_tol:
            raise SingularityDetected(
                f"initial NK data violates the coclosed constraint "
                f"(sup |c| = {c0:.3g} > {init_constraint_tol:.3g})")

    mesh, structure = initial.mesh, initial.structure
    D1, D2 = mesh.deriv_matrix(1), mesh.deriv_matrix(2)
    nk = structure is StructureKind.NK
    dr2 = mesh.dr ** 2

    marks = sorted({float(t) for t in output_times if initial.t < t <= t_end})
    marks.append(float(t_end))
    h, theta, G = (initial.h.copy(), initial.theta.copy(), initial.G.copy())
    t = initial.t
    snapshots = [initial] if (output_times and initial.t in output_times) else []
    diagnostics = []
    status = "Completed"

    def pack():
        return FlowState(mesh=mesh, h=h.copy(), theta=theta.copy(),
                         G=G.copy(), t=t, structure=structure)

    for mark in marks:
        while t < mark - 1e-14:
            dt = min(cfl * float(np.min(G) ** 2) * dr2, mark - t)
            try:
                if nk:
                    h, theta, G = _rk4_nk(h, theta, G, dt, mesh, D1, D2)
                else:
                    theta, G = _rk4_cy(theta, G, dt, mesh, D1, D2)
            except SingularityDetected:
                status = "SingularityDetected"
                break
            t += dt
            tau0 = 12.0 / 7.0 * (D1 @ theta) / G
            if nk:
                hp = d1_low_order(mesh, h)
                c = float(np.max(np.abs(hp - G * np.cos(3.0 * theta))))
                tau0 = tau0 + 24.0 / 7.0 * np.sin(3.0 * theta) / h
                min_h = float(np.min(h))
            else:
                c = 0.0  # h is constant along the CY flow
                min_h = float(h[0])
            min_G = float(np.min(G))
            diagnostics.append((t, dt, c, float(np.max(np.abs(tau0))),
                                min_h, min_G))
            if min_h < FLOOR or min_G < FLOOR:
                status = "SingularityDetected"
                break
            if nk and c > CONSTRAINT_BLOWUP:
                status = "ConstraintBlowup"
                break
        if status != "Completed":
            snapshots.append(pack())  # terminal state of a halted run
            break
        snapshots.append(pack())

    return FlowRun(tuple(snapshots), tuple(diagnostics), status)
