"""Seeded randomized identity suite shared by the test suite and the CLI.

The generators below produce smooth closed-form profile data on a circle (or
interval) with controlled amplitudes, so that identity residuals measure
algebraic correctness rather than floating-point blowup.
"""

from __future__ import annotations

import numpy as np

from . import forms as fm
from . import profiles as pf
from . import torsion as ts
from .forms import G2Profile, StructureKind


def _trig_profile(rng, dom, floor=None, amplitude=0.6, terms=2):
    """Random low-frequency trigonometric polynomial, optionally positive."""
    r = pf.coordinate(dom)
    p = pf.constant(rng.uniform(-0.5, 0.5))
    for k in range(1, terms + 1):
        a = amplitude * rng.uniform(-1, 1) / k
        b = amplitude * rng.uniform(-1, 1) / k
        p = p + a * pf.sin(k * r) + b * pf.cos(k * r)
    if floor is not None:
        span = sum(2 * amplitude / k for k in range(1, terms + 1)) + 0.5
        p = p + pf.constant(floor + span)
    return p


def random_g2_profile(rng, structure, domain=None, coclosed=False):
    """Random closed-form (h, theta, G) data, optionally coclosed.

    Coclosed NK data builds h by quadrature from h' = G cos(3 theta), which
    is the only way to satisfy the constraint for generic theta and G.
    """
    dom = domain or pf.Circle(2 * np.pi)
    theta = _trig_profile(rng, dom, amplitude=0.4)
    G = _trig_profile(rng, dom, floor=0.6, amplitude=0.3)
    if not coclosed:
        h = _trig_profile(rng, dom, floor=0.7, amplitude=0.4)
    elif structure is StructureKind.CY:
        h = pf.constant(rng.uniform(0.7, 1.8), dom)
    else:
        integrand = G * pf.cos(3 * theta)
        span = dom.length
        h = pf.antiderivative(integrand, _domain_start(dom), 0.0)
        # shift well above zero: |h'| <= sup G bounds the excursion
        rs = dom.sample_points(64, interior=True)
        lift = 1.0 + float(np.max(np.abs(G.value(rs)))) * span
        h = h + pf.constant(lift)
    return G2Profile(h=h, theta=theta, G=G, structure=structure, domain=dom)


def _domain_start(dom):
    return dom.r0


def random_invariant_form(rng, degree=None, domain=None):
    """Random form with small trigonometric coefficients on every basis
    element of the chosen degree."""
    dom = domain or pf.Circle(2 * np.pi)
    if degree is None:
        degree = int(rng.integers(0, 8))
    coeffs = {}
    for tag in fm.BASIS_TAGS:
        if fm.DEGREE[tag] != degree:
            continue
        re = _trig_profile(rng, dom, amplitude=0.5)
        im = _trig_profile(rng, dom, amplitude=0.5)
        coeffs[tag] = re + pf.constant(1j) * im
    return fm.InvariantForm(degree, coeffs)


# ---------------------------------------------------------------------------
# the identity suite
# ---------------------------------------------------------------------------

def run_identity_suite(seed=0, n_profiles=20, n_points=50):
    """Exercise the calculus identities on seeded random closed-form data.

    Returns a list of {name, max_residual, tolerance, passed} records, one
    per identity, aggregated over both structure kinds.
    """
    rng = np.random.default_rng(seed)
    dom = pf.Circle(2 * np.pi)
    rs = dom.sample_points(n_points, interior=True)

    checks = {
        "d_squared_zero": (0.0, 1e-12),
        "star_involution": (0.0, 1e-12),
        "dphi_dpsi_structure_equations": (0.0, 1e-12),
        "tau2_vanishes": (0.0, 1e-11),
        "tau01_closed_vs_first_principles": (0.0, 1e-10),
    }

    def bump(name, value):
        worst, tol = checks[name]
        checks[name] = (max(worst, float(value)), tol)

    for structure in (StructureKind.CY, StructureKind.NK):
        for _ in range(n_profiles // 2):
            g = random_g2_profile(rng, structure, dom)

            # d^2 = 0 on the full basis and a random form
            for tag in fm.BASIS_TAGS:
                ddb = fm.d(fm.d(fm.InvariantForm.basis(tag), structure), structure)
                bump("d_squared_zero", ddb.sup_norm(rs))
            a = random_invariant_form(rng, degree=int(rng.integers(0, 7)), domain=dom)
            bump("d_squared_zero", fm.d(fm.d(a, structure), structure).sup_norm(rs))

            # star7 is an involution on every basis element
            for tag in fm.BASIS_TAGS:
                b = fm.InvariantForm.basis(tag)
                diff = fm.star7(fm.star7(b, g), g) - b
                bump("star_involution", diff.sup_norm(rs))

            # dphi, dpsi against the structure-equation coefficients
            phi, psi = fm.build_phi(g), fm.build_psi(g)
            for got, want in (
                (fm.d(phi, structure), _dphi_expected(g)),
                (fm.d(psi, structure), _dpsi_expected(g)),
            ):
                bump("dphi_dpsi_structure_equations", (got - want).sup_norm(rs))

            # torsion: tau2 = 0 and the closed forms agree with first principles
            tau2, _tau3 = ts.tau2_tau3(g)
            bump("tau2_vanishes", tau2.sup_norm(rs))
            t0a, t1a = ts.tau01_first_principles(g)
            t0b, t1b = ts.tau01_closed(g)
            bump("tau01_closed_vs_first_principles",
                 np.max(np.abs(t0a.value(rs) - t0b.value(rs))))
            bump("tau01_closed_vs_first_principles",
                 np.max(np.abs(t1a.value(rs) - t1b.value(rs))))

    return [
        {"name": name, "max_residual": worst, "tolerance": tol, "passed": worst < tol}
        for name, (worst, tol) in checks.items()
    ]


def _dphi_expected(g):
    """Structure-equation coefficients of d phi for either base geometry."""
    F3 = g.F_cubed()
    half_dF3 = pf.mul(pf.constant(0.5), F3.derivative())
    if g.structure is StructureKind.CY:
        return fm.InvariantForm(4, {
            "dr_Omega": half_dF3,
            "dr_Omegabar": pf.conj(half_dF3),
        })
    gh2 = pf.mul(pf.constant(1.5), pf.mul(g.G, pf.pow_int(g.h, 2)))
    a = pf.sub(half_dF3, gh2)
    return fm.InvariantForm(4, {
        "dr_Omega": a,
        "dr_Omegabar": pf.conj(a),
        "omega2_half": pf.mul(pf.constant(2j), pf.sub(F3, pf.conj(F3))),
    })


def _dpsi_expected(g):
    F3 = g.F_cubed()
    h4p = pf.pow_int(g.h, 4).derivative()
    if g.structure is StructureKind.CY:
        return fm.InvariantForm(5, {
            "dr_omega2_half": pf.mul(pf.constant(-1.0), h4p),
        })
    return fm.InvariantForm(5, {
        "dr_omega2_half": pf.sub(
            pf.mul(pf.mul(pf.constant(2.0), g.G), pf.add(F3, pf.conj(F3))), h4p),
    })
