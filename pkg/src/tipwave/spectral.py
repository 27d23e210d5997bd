"""Spectra of the three stability-determining generators.

Each closed-loop generator is block-triangular over two wave operators,
so exponential decay is governed by three scalar characteristic
equations, one per family tag:

    A2   e^{2L} [(1+g)L + b] (1 + mL) = [(1-g)L - b] (1 - mL)
         (observer-error system: Robin end + free tip mass)
    A    e^{2L} [1 + al + (a+m)L] + (1 - al) + (a-m)L = 0
         (state-feedback loop: pinned end + damped tip mass)
    Abb  L cosh L + (gL + b) sinh L = 0
         (estimation-error system: Robin end + pinned end)

with L the eigenvalue, g/b the Robin gains, al/a the feedback gains and
m the tip mass. Every family satisfies e^{2L} -> const as |L| grows,
which gives the asymptotic branch ladder

    L_n = (1/2) ln(ratio) + (n + offset) * pi * i + O(1/n);

large-|n| branches are refined by Newton from those seeds, while
low-|n| eigenvalues (which can sit far from the ladder) are located by
an argument-principle rectangle sweep. For Abb, L = 0 solves the raw
equation but its eigenfunction sinh(0 * (x-1)) vanishes identically, so
the origin is excluded as a spurious factor.

Roots are polished on an overflow-safe rescaling of the characteristic
function and their residuals are reported relative to the local term
magnitude: at |L| ~ 300 the raw residual of an exact root already sits
near 1e-10 from double-precision cancellation alone, so an absolute raw
threshold would be meaningless there.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .wave_core import SystemParams

__all__ = [
    "HypothesisError",
    "ContourError",
    "CharFamily",
    "Eigenvalue",
    "Spectrum",
    "char_residual",
    "asymptotic_seed",
    "refine_root",
    "count_zeros_in_box",
    "compute_spectrum",
    "spectral_abscissa",
    "combined_abscissa",
    "loop_families",
    "strip_interval",
    "verify_strip_counts",
    "riesz_defect",
]

FAMILY_TAGS = ("A2", "A", "Abb")
RESIDUAL_TOL = 1e-10
DEDUPE_RADIUS = 1e-6
SPURIOUS_RADIUS = 1e-8


class HypothesisError(ValueError):
    """A family's spectral hypotheses are violated by the parameters."""


class ContourError(RuntimeError):
    """Argument-principle contour could not be evaluated reliably."""


class CharFamily:
    """One characteristic-equation family with its asymptotic data."""

    def __init__(self, tag: str, params: SystemParams):
        if tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family {tag!r}; expected one of {FAMILY_TAGS}")
        self.tag = tag
        self.params = params
        self.check_hypotheses()

    def check_hypotheses(self) -> None:
        p = self.params
        if self.tag in ("A2", "Abb") and p.gamma == 1.0:
            raise HypothesisError(f"family {self.tag} requires gamma != 1")
        if self.tag == "A" and p.m == p.a:
            raise HypothesisError("family A requires m != a")

    # -- characteristic function ---------------------------------------

    def char_residual(self, lam: complex) -> complex:
        """Raw residual (LHS - RHS) of the family's characteristic equation."""
        p = self.params
        lam = complex(lam)
        if self.tag == "A2":
            lead = ((1 + p.gamma) * lam + p.beta) * (1 + p.m * lam)
            trail = ((1 - p.gamma) * lam - p.beta) * (1 - p.m * lam)
            return cmath.exp(2 * lam) * lead - trail
        if self.tag == "A":
            lead = (1 + p.alpha) + (p.a + p.m) * lam
            trail = (1 - p.alpha) + (p.a - p.m) * lam
            return cmath.exp(2 * lam) * lead + trail
        return lam * cmath.cosh(lam) + (p.gamma * lam + p.beta) * cmath.sinh(lam)

    def scaled(self, lam: complex) -> tuple[complex, float]:
        """(value, magnitude scale) of an overflow-safe rescaling.

        A2/A are evaluated as written (their exponential decays in the
        left half-plane); Abb is multiplied by 2 e^L, which removes the
        cosh/sinh growth for Re L < 0 without moving any zero.
        """
        p = self.params
        lam = complex(lam)
        if lam.real > 300.0:
            raise OverflowError(f"characteristic function not evaluated at Re={lam.real}")
        e2 = cmath.exp(2 * lam)
        if self.tag == "A2":
            t1 = e2 * ((1 + p.gamma) * lam + p.beta) * (1 + p.m * lam)
            t2 = ((1 - p.gamma) * lam - p.beta) * (1 - p.m * lam)
            return t1 - t2, 1.0 + abs(t1) + abs(t2)
        if self.tag == "A":
            t1 = e2 * ((1 + p.alpha) + (p.a + p.m) * lam)
            t2 = (1 - p.alpha) + (p.a - p.m) * lam
            return t1 + t2, 1.0 + abs(t1) + abs(t2)
        t1 = lam * (e2 + 1)
        t2 = (p.gamma * lam + p.beta) * (e2 - 1)
        return t1 + t2, 1.0 + abs(t1) + abs(t2)

    def scaled_derivative(self, lam: complex) -> complex:
        p = self.params
        lam = complex(lam)
        e2 = cmath.exp(2 * lam)
        if self.tag == "A2":
            lead = ((1 + p.gamma) * lam + p.beta) * (1 + p.m * lam)
            dlead = (1 + p.gamma) * (1 + p.m * lam) + p.m * ((1 + p.gamma) * lam + p.beta)
            dtrail = (1 - p.gamma) * (1 - p.m * lam) - p.m * ((1 - p.gamma) * lam - p.beta)
            return e2 * (2 * lead + dlead) - dtrail
        if self.tag == "A":
            lead = (1 + p.alpha) + (p.a + p.m) * lam
            return e2 * (2 * lead + (p.a + p.m)) + (p.a - p.m)
        return ((e2 + 1) + 2 * lam * e2 + p.gamma * (e2 - 1)
                + 2 * (p.gamma * lam + p.beta) * e2)

    def normalized_residual(self, lam: complex) -> float:
        value, scale = self.scaled(lam)
        return abs(value) / scale

    # -- asymptotics ----------------------------------------------------

    def asymptote_real(self) -> float:
        """Common limit of the branch real parts, (1/2) ln(ratio)."""
        p = self.params
        if self.tag == "A":
            return 0.5 * math.log(abs(p.m - p.a) / (p.m + p.a))
        return 0.5 * math.log(abs(p.gamma - 1) / (p.gamma + 1))

    def branch_offset(self) -> float:
        """Fractional ladder offset: branch n sits near (n + offset) pi i."""
        p = self.params
        if self.tag == "A2":
            return 0.0 if p.gamma > 1 else 0.5
        if self.tag == "A":
            return 0.0 if p.m > p.a else 0.5
        return 0.0 if p.gamma > 1 else -0.5

    def seed(self, n: int) -> complex:
        """Asymptotic seed for branch n (exact up to the O(1/n) tail)."""
        return complex(self.asymptote_real(), (n + self.branch_offset()) * math.pi)

    def branch_index(self, lam: complex) -> int:
        return round(lam.imag / math.pi - self.branch_offset())

    def sweep_left_edge(self) -> float:
        """Left boundary of the rectangle that contains every eigenvalue.

        Besides the asymptote, the trailing (exponential-free) part of
        each characteristic function has a real zero that attracts one
        eigenvalue; the edge clears both with margin.
        """
        p = self.params
        edge = min(-4.0, 2.0 * self.asymptote_real() - 3.0)
        if self.tag in ("A2", "Abb") and p.gamma > 1:
            edge = min(edge, p.beta / (1 - p.gamma) - 2.0)
        if self.tag == "A":
            trail_zero = (p.alpha - 1) / (p.a - p.m)
            if trail_zero < 0:
                edge = min(edge, trail_zero - 2.0)
        return edge

    # -- eigenfunctions ---------------------------------------------------

    def eigenfunction(self, lam: complex, x) -> tuple:
        """Closed-form eigenfunction value and derivative at x.

        Accepts scalar or array x; the normalization is the one whose
        scaled trace vector has the explicit large-n limit.
        """
        p = self.params
        lam = complex(lam)
        x = np.asarray(x, dtype=float)
        if self.tag == "A2":
            cplus = (1 + p.gamma) * lam + p.beta
            cminus = (1 - p.gamma) * lam - p.beta
            f = cplus * np.exp(lam * x) + cminus * np.exp(-lam * x)
            fp = lam * (cplus * np.exp(lam * x) - cminus * np.exp(-lam * x))
        elif self.tag == "A":
            f = np.exp(lam * x) - np.exp(-lam * x)
            fp = lam * (np.exp(lam * x) + np.exp(-lam * x))
        else:
            f = np.sinh(lam * (x - 1))
            fp = lam * np.cosh(lam * (x - 1))
        if f.ndim == 0:
            return complex(f), complex(fp)
        return f, fp


def char_residual(family: CharFamily, lam: complex) -> complex:
    return family.char_residual(lam)


def asymptotic_seed(family: CharFamily, n: int) -> complex:
    return family.seed(n)


@dataclass(frozen=True)
class Eigenvalue:
    """One refined eigenvalue with its seed and normalized residual."""

    n: int
    seed: complex
    refined: complex
    residual: float
    converged: bool = True


@dataclass
class Spectrum:
    """Refined eigenvalues of one family, ordered by imaginary part."""

    family: CharFamily
    n_max: int
    eigenvalues: list[Eigenvalue] = field(default_factory=list)

    def abscissa(self) -> float:
        return spectral_abscissa(self)

    def in_strip(self, k: int) -> list[Eigenvalue]:
        lo, hi = strip_interval(k)
        return [e for e in self.eigenvalues if lo <= e.refined.imag < hi]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("n,seed_re,seed_im,refined_re,refined_im,residual\n")
            for e in self.eigenvalues:
                fh.write(f"{e.n},{e.seed.real!r},{e.seed.imag!r},"
                         f"{e.refined.real!r},{e.refined.imag!r},{e.residual!r}\n")


def strip_interval(k: int) -> tuple[float, float]:
    """Horizontal strip k: Im in [(k - 1/2) pi, (k + 1/2) pi)."""
    return (k - 0.5) * math.pi, (k + 0.5) * math.pi


# ----------------------------------------------------------------------
# Newton refinement
# ----------------------------------------------------------------------

def _newton(family: CharFamily, start: complex, max_iter: int = 50) -> tuple[complex, bool]:
    z = complex(start)
    try:
        for _ in range(max_iter):
            value, _ = family.scaled(z)
            deriv = family.scaled_derivative(z)
            if deriv == 0:
                return z, False
            step = value / deriv
            z -= step
            if abs(step) <= 1e-14 * (1.0 + abs(z)):
                return z, True
        return z, family.normalized_residual(z) <= RESIDUAL_TOL
    except OverflowError:
        # iterate escaped the evaluable region: report non-convergence
        return complex(start), False


def refine_root(family: CharFamily, seed: complex, n: int | None = None,
                max_iter: int = 50) -> Eigenvalue:
    """Newton-refine one asymptotic seed.

    If Newton drifts to a different branch (further than pi/2 from the
    seed), the strip around the seed is re-searched by the argument
    principle and the nearest located zero is used instead. A root that
    still fails the residual tolerance is returned flagged.
    """
    seed = complex(seed)
    if n is None:
        n = family.branch_index(seed)
    z, ok = _newton(family, seed, max_iter)
    if not ok or abs(z - seed) > math.pi / 2:
        relocated = _relocate_near(family, seed)
        if relocated is not None:
            z, ok = relocated, True
        elif not ok:
            return Eigenvalue(n=n, seed=seed, refined=z,
                              residual=family.normalized_residual(z), converged=False)
    res = family.normalized_residual(z)
    return Eigenvalue(n=n, seed=seed, refined=z, residual=res,
                      converged=res <= RESIDUAL_TOL)


def _relocate_near(family: CharFamily, seed: complex) -> complex | None:
    xlo = min(family.sweep_left_edge(), seed.real - 2.0)
    box = (xlo, 0.5, seed.imag - math.pi / 2, seed.imag + math.pi / 2)
    try:
        roots = _sweep_box(family, *box)
    except (ContourError, RecursionError):
        return None
    if not roots:
        return None
    return min(roots, key=lambda z: abs(z - seed))


# ----------------------------------------------------------------------
# Argument-principle machinery
# ----------------------------------------------------------------------

_MAX_CONTOUR_POINTS = 200_000
_MIN_CONTOUR_MAG = 1e-9


def _winding(family: CharFamily, xlo, xhi, ylo, yhi) -> float:
    """Total phase change / 2 pi of the scaled characteristic function
    around the rectangle, by adaptive phase tracking."""
    corners = [complex(xlo, ylo), complex(xhi, ylo), complex(xhi, yhi),
               complex(xlo, yhi), complex(xlo, ylo)]
    total = 0.0
    budget = _MAX_CONTOUR_POINTS
    for z0, z1 in zip(corners[:-1], corners[1:]):
        n0 = max(16, int(abs(z1 - z0) / 0.2))
        pts = list(np.linspace(0.0, 1.0, n0 + 1))
        vals: list[complex] = []
        for t in pts:
            z = z0 + (z1 - z0) * t
            value, scale = family.scaled(z)
            if abs(value) / scale < _MIN_CONTOUR_MAG:
                raise ContourError(f"zero too close to contour at {z}")
            vals.append(value)
        i = 0
        while i < len(vals) - 1:
            dphi = cmath.phase(vals[i + 1] / vals[i])
            if abs(dphi) > 1.4:
                budget -= 1
                if budget <= 0:
                    raise ContourError("contour refinement budget exhausted")
                tm = 0.5 * (pts[i] + pts[i + 1])
                z = z0 + (z1 - z0) * tm
                value, scale = family.scaled(z)
                if abs(value) / scale < _MIN_CONTOUR_MAG:
                    raise ContourError(f"zero too close to contour at {z}")
                pts.insert(i + 1, tm)
                vals.insert(i + 1, value)
                continue
            total += dphi
            i += 1
    return total / (2 * math.pi)


def count_zeros_in_box(family: CharFamily, corner_lo: complex,
                       corner_hi: complex) -> int:
    """Number of characteristic zeros inside an axis-aligned rectangle.

    If a zero sits (numerically) on the contour the box is nudged
    outward a few times before giving up.
    """
    xlo, xhi = sorted((corner_lo.real, corner_hi.real))
    ylo, yhi = sorted((corner_lo.imag, corner_hi.imag))
    pad = 0.0
    for attempt in range(4):
        try:
            cnt = _winding(family, xlo - pad, xhi + pad, ylo - pad, yhi + pad)
        except ContourError:
            pad = (pad + 1e-3) * 1.7
            continue
        n = round(cnt)
        if abs(cnt - n) >= 0.25:
            raise ContourError(f"winding {cnt} too far from an integer")
        return n
    raise ContourError("could not separate contour from zeros")


def _sweep_box(family: CharFamily, xlo, xhi, ylo, yhi, depth: int = 0) -> list[complex]:
    """All zeros in a rectangle by recursive bisection + Newton polish."""
    if depth > 60:
        raise ContourError("box bisection failed to isolate zeros (multiple root?)")
    count = count_zeros_in_box(family, complex(xlo, ylo), complex(xhi, yhi))
    if count == 0:
        return []
    if count == 1:
        z, ok = _newton(family, complex((xlo + xhi) / 2, (ylo + yhi) / 2))
        if (ok and xlo - 1e-9 <= z.real <= xhi + 1e-9
                and ylo - 1e-9 <= z.imag <= yhi + 1e-9):
            return [z]
    # offset keeps the split line off symmetric root locations
    roots: list[complex] = []
    if xhi - xlo >= yhi - ylo:
        xm = 0.5 * (xlo + xhi) + 0.0012345 * (xhi - xlo)
        roots += _sweep_box(family, xlo, xm, ylo, yhi, depth + 1)
        roots += _sweep_box(family, xm, xhi, ylo, yhi, depth + 1)
    else:
        ym = 0.5 * (ylo + yhi) + 0.0012345 * (yhi - ylo)
        roots += _sweep_box(family, xlo, xhi, ylo, ym, depth + 1)
        roots += _sweep_box(family, xlo, xhi, ym, yhi, depth + 1)
    return roots


# ----------------------------------------------------------------------
# Full-spectrum enumeration
# ----------------------------------------------------------------------

def compute_spectrum(family: CharFamily, n_max: int = 100,
                     n_low: int = 8) -> Spectrum:
    """Enumerate all eigenvalues with branch index |n| <= n_max.

    Branches beyond n_low are Newton-refined from their asymptotic
    seeds; the low-|n| region, where eigenvalues need not follow the
    ladder (extra real roots, displaced central pairs), is swept by the
    argument principle. Conjugate roots are mirrored from the upper
    half-plane and re-validated.
    """
    if n_max < n_low:
        n_low = n_max
    roots: list[tuple[complex, float, bool, complex | None]] = []

    edge_im = (n_low + 0.74) * math.pi
    swept = _sweep_box(family, family.sweep_left_edge(), 0.5, -1e-4, edge_im)
    for z in swept:
        if abs(z) < SPURIOUS_RADIUS and family.tag == "Abb":
            continue  # spurious origin zero: eigenfunction vanishes identically
        roots.append((z, family.normalized_residual(z), True, None))

    for n in range(-n_max, n_max + 1):
        seed = family.seed(n)
        if seed.imag <= edge_im:
            continue
        eig = refine_root(family, seed, n)
        roots.append((eig.refined, eig.residual, eig.converged, seed))

    # conjugate closure, then dedupe
    mirrored = []
    for z, res, ok, seed in roots:
        if z.imag > 1e-9:
            zc = z.conjugate()
            mirrored.append((zc, family.normalized_residual(zc), ok,
                             None if seed is None else seed.conjugate()))
    roots += mirrored

    roots.sort(key=lambda item: (item[0].imag, item[0].real))
    unique: list[tuple[complex, float, bool, complex | None]] = []
    for item in roots:
        if any(abs(item[0] - kept[0]) <= DEDUPE_RADIUS for kept in unique):
            continue
        unique.append(item)

    eigenvalues = []
    for z, res, ok, seed in unique:
        n = family.branch_index(z)
        if abs(n) > n_max:
            continue
        eigenvalues.append(Eigenvalue(
            n=n, seed=family.seed(n) if seed is None else seed,
            refined=z, residual=res, converged=ok and res <= RESIDUAL_TOL))
    return Spectrum(family=family, n_max=n_max, eigenvalues=eigenvalues)


def spectral_abscissa(spectrum: Spectrum) -> float:
    """Largest real part over the refined eigenvalues.

    Under the spectrum-determined growth condition this is the decay
    rate of the loop's state (the energy decays at twice the rate).
    """
    if not spectrum.eigenvalues:
        raise ValueError("empty spectrum")
    flagged = [e for e in spectrum.eigenvalues if not e.converged]
    if flagged:
        warnings.warn(f"{len(flagged)} eigenvalue(s) failed refinement; "
                      "abscissa computed from the converged ones")
    vals = [e.refined.real for e in spectrum.eigenvalues if e.converged]
    if not vals:
        raise ValueError("no converged eigenvalues")
    return max(vals)


def combined_abscissa(spectra) -> float:
    """Abscissa of a block-triangular loop: the union of its block spectra."""
    return max(spectral_abscissa(s) for s in spectra)


def loop_families(loop: str, params: SystemParams) -> tuple[CharFamily, CharFamily]:
    """The two families whose union is a closed loop's spectrum.

    'observer': state-feedback block + observer-error block.
    'eso': state-feedback block + estimation-error block.
    """
    if loop == "observer":
        return CharFamily("A", params), CharFamily("A2", params)
    if loop == "eso":
        return CharFamily("A", params), CharFamily("Abb", params)
    raise ValueError(f"unknown loop {loop!r}; expected 'observer' or 'eso'")


def verify_strip_counts(spectrum: Spectrum, k_max: int) -> list[tuple[int, int, int]]:
    """(k, argument-principle count, enumerated count) per strip |k| <= k_max.

    The Abb origin zero is spurious (excluded from the enumeration) and
    is subtracted from the contour count of strip 0.
    """
    family = spectrum.family
    xlo = family.sweep_left_edge()
    out = []
    for k in range(-k_max, k_max + 1):
        lo, hi = strip_interval(k)
        counted = count_zeros_in_box(family, complex(xlo, lo), complex(0.5, hi))
        if k == 0 and family.tag == "Abb":
            counted -= 1
        out.append((k, counted, len(spectrum.in_strip(k))))
    return out


def riesz_defect(family: CharFamily, eig: Eigenvalue, panels: int = 1024) -> float:
    """L2 distance between the scaled trace vector of one eigenfunction
    and its large-n limit profile.

    Implemented for the observer-error family (A2), the one whose limit
    vector is explicit: the scaled 4-vector

        (f'/L^2, f/L, b f(0)/L^2, -f'(1)/L^3)

    converges to (limit pair, 0, 0) at rate O(1/n).
    """
    if family.tag != "A2":
        raise ValueError("riesz_defect is defined for the A2 family only")
    if panels < 512:
        raise ValueError(f"need >= 512 quadrature panels, got {panels}")
    p = family.params
    lam = eig.refined
    x = np.linspace(0.0, 1.0, panels + 1)
    f, fp = family.eigenfunction(lam, x)
    comp1 = fp / lam ** 2
    comp2 = f / lam
    comp3 = p.beta * f[0] / lam ** 2
    comp4 = -fp[-1] / lam ** 3

    ratio_pow = np.exp(family.asymptote_real() * x)  # |(g-1)/(g+1)|^{x/2}
    theta = (eig.n + family.branch_offset()) * math.pi * x
    osc = np.exp(1j * theta)
    lim1 = (1 + p.gamma) * ratio_pow * osc - (1 - p.gamma) * osc.conjugate() / ratio_pow
    lim2 = (1 + p.gamma) * ratio_pow * osc + (1 - p.gamma) * osc.conjugate() / ratio_pow

    integrand = np.abs(comp1 - lim1) ** 2 + np.abs(comp2 - lim2) ** 2
    total = float(np.trapezoid(integrand, x)) + abs(comp3) ** 2 + abs(comp4) ** 2
    return math.sqrt(total)
