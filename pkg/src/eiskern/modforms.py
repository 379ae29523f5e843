"""Exact q-expansions for level-one modular forms.

QSeries holds rational coefficients; everything in this module that can
stay exact does (Eisenstein series, the echelon basis, Hecke action,
bracket operators). Floating point appears only in eigenvalue
extraction for weights with more than one cusp form, in series
evaluation at a point, and in the Petersson norm quadrature.
"""

from __future__ import annotations

import math

import gmpy2
from gmpy2 import mpc, mpfr, mpq, mpz

from . import mpcore as mc
from .errors import (
    BadData,
    BadWeight,
    DegenerateSpectrum,
    DomainError,
    QuadratureFailure,
    SingularSystem,
)


class QSeries:
    """Truncated q-expansion sum a_n q^n with exact rational coefficients.

    `weight` is bookkeeping for the modular interpretation; arithmetic
    enforces it additively (mul) and exactly (add needs equal weights).
    Coefficients index 0..order.
    """

    __slots__ = ("weight", "coeffs")

    def __init__(self, weight, coeffs):
        self.weight = int(weight)
        self.coeffs = [mpq(c) for c in coeffs]
        if not self.coeffs:
            raise BadData("empty coefficient list")

    @property
    def order(self):
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __eq__(self, other):
        return (isinstance(other, QSeries) and self.weight == other.weight
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.weight, tuple(self.coeffs)))

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        return f"QSeries(weight={self.weight}, [{head}{', ...' if self.order > 5 else ''}])"

    def truncate(self, order):
        if order > self.order:
            raise DomainError(f"cannot extend a series (have {self.order}, want {order})")
        return QSeries(self.weight, self.coeffs[: order + 1])

    def __add__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        if self.weight != other.weight:
            raise BadWeight(f"cannot add weights {self.weight} and {other.weight}")
        n = min(self.order, other.order)
        return QSeries(self.weight, [self.coeffs[i] + other.coeffs[i] for i in range(n + 1)])

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, QSeries):
            n = min(self.order, other.order)
            out = [mpq(0)] * (n + 1)
            for i, a in enumerate(self.coeffs[: n + 1]):
                if a == 0:
                    continue
                for j in range(n + 1 - i):
                    b = other.coeffs[j]
                    if b:
                        out[i + j] += a * b
            return QSeries(self.weight + other.weight, out)
        return QSeries(self.weight, [other * c for c in self.coeffs])

    __rmul__ = __mul__

    def __pow__(self, e):
        e = int(e)
        if e < 0:
            raise DomainError("negative series powers unsupported")
        acc = QSeries(0, [mpq(1)] + [mpq(0)] * self.order)
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base if e > 1 else base
            e >>= 1
        return acc

    def theta(self):
        """Ramanujan theta operator q d/dq; raises the formal weight by 2."""
        return QSeries(self.weight + 2, [n * c for n, c in enumerate(self.coeffs)])

    def eval(self, z, P=mc.DEFAULT_PRECISION):
        """Value at z in the upper half plane; returns (value, tail_estimate)."""
        with mc.ctx(P + 16):
            z = mpc(z)
            if not z.imag > 0:
                raise DomainError("evaluation needs Im z > 0")
            w = gmpy2.exp(2 * gmpy2.const_pi() * mpc(0, 1) * z)
            acc = mpc(0)
            for c in reversed(self.coeffs):
                acc = acc * w + mpfr(c)
            aw = abs(w)
            last = abs(self.coeffs[-1]) * aw ** self.order
            # geometric majorant with a polynomial fudge for coefficient growth
            ratio = aw * (1 + mpfr(2) / (self.order + 1)) ** (self.weight + 1)
            tail = last * ratio / (1 - ratio) if ratio < 1 else mpfr("inf")
        with mc.ctx(P):
            return mpc(acc), mpfr(tail)

    def to_json(self):
        return {"weight": self.weight, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(obj["weight"], [mpq(c) for c in obj["coeffs"]])
        except (KeyError, TypeError, ValueError) as e:
            raise BadData(f"malformed q-series payload: {e}") from None


# ---------------------------------------------------------------------------
# dimensions and standard series


def dim_modforms(k):
    k = int(k)
    if k < 0 or k % 2 == 1:
        return 0
    if k % 12 == 2:
        return k // 12
    return k // 12 + 1


def dim_cuspforms(k):
    d = dim_modforms(k)
    return max(d - 1, 0)


def eisenstein_series(k, order):
    """Normalized E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, exact."""
    k = int(k)
    if k < 4 or k % 2 == 1:
        raise BadWeight(f"Eisenstein series needs even k >= 4, got {k}")
    factor = mpq(-2 * k) / mc.bernoulli(k)
    coeffs = [mpq(1)] + [factor * mc.divisor_sigma(n, k - 1) for n in range(1, order + 1)]
    return QSeries(k, coeffs)


def delta_series(order):
    """The discriminant cusp form as (E4^3 - E6^2)/1728, exact."""
    e4 = eisenstein_series(4, order)
    e6 = eisenstein_series(6, order)
    diff = QSeries(12, (e4 * e4 * e4).coeffs) + (-1) * QSeries(12, (e6 * e6).coeffs)
    return mpq(1, 1728) * diff


def delta_coefficients(M):
    """Coefficients a(1..M) of the discriminant form, exact integers.

    Eighth power of the Jacobi cube sum(-1)^n (2n+1) q^(n(n+1)/2), done
    as three squarings of integers with coefficients packed into fixed
    128-bit digits (evaluation at 2^128 is a ring map, and the final
    coefficients stay below 2^108 by the d(n) n^(11/2) bound, so digits
    never collide).
    """
    M = int(M)
    if M < 1:
        raise DomainError("need M >= 1")
    B = 128
    size = M  # coefficients of q^0 .. q^(M-1) of the eighth power
    cube = [0] * size
    n = 0
    while n * (n + 1) // 2 < size:
        cube[n * (n + 1) // 2] = (2 * n + 1) * (-1 if n & 1 else 1)
        n += 1
    z = _pack_signed(cube, B)
    for _ in range(3):
        z = z * z
        z = _truncate_packed(z, size, B)
    eighth = _unpack_signed(z, size, B)
    return eighth[: M]  # a(m) = coefficient of q^(m-1) in the eighth power


def _pack_signed(coeffs, B):
    pos = bytearray()
    neg = bytearray()
    nb = B // 8
    for c in coeffs:
        if c >= 0:
            pos += int(c).to_bytes(nb, "little")
            neg += bytes(nb)
        else:
            pos += bytes(nb)
            neg += int(-c).to_bytes(nb, "little")
    return mpz(int.from_bytes(bytes(pos), "little")) - mpz(int.from_bytes(bytes(neg), "little"))


def _truncate_packed(z, size, B):
    # keep the low `size` digits; higher digits never feed back into low
    # coefficients of later products, so a nonnegative residue is enough
    return z % (mpz(1) << (B * size))


def _unpack_signed(z, size, B):
    # shift every digit into [0, 2^B) so byte extraction is well defined
    half = mpz(1) << (B - 1)
    offset = sum(half << (B * j) for j in range(size))
    shifted = int(z + offset)
    if shifted < 0:
        raise BadData("packed polynomial has coefficients beyond the digit range")
    raw = shifted.to_bytes(size * B // 8 + 16, "little")
    nb = B // 8
    out = []
    carry_ref = int(half)
    for j in range(size):
        d = int.from_bytes(raw[j * nb:(j + 1) * nb], "little")
        out.append(d - carry_ref)
    return out


# ---------------------------------------------------------------------------
# echelon basis and Hecke action

_basis_cache: dict = {}


def vm_basis(k, order):
    """Echelon basis of the weight-k space: b_i = q^i + O(q^d), exact.

    Monomials Delta^i E4^a E6^b echelonized by exact elimination; this
    is the standard integral basis construction.
    """
    k = int(k)
    if k % 2 == 1 or k < 0:
        raise BadWeight(f"no odd or negative weights, got {k}")
    key = (k, int(order))
    if key in _basis_cache:
        return _basis_cache[key]
    d = dim_modforms(k)
    if d == 0:
        _basis_cache[key] = []
        return []
    if k == 0:
        rows = [QSeries(0, [mpq(1)] + [mpq(0)] * order)]
        _basis_cache[key] = rows
        return rows
    e4 = eisenstein_series(4, order)
    e6 = eisenstein_series(6, order)
    delta = delta_series(order)
    rows = []
    for i in range(d):
        m = k - 12 * i
        b = 1 if m % 4 == 2 else 0
        a = (m - 6 * b) // 4
        g = QSeries(0, [mpq(1)] + [mpq(0)] * order)
        for _ in range(a):
            g = g * e4
        for _ in range(b):
            g = g * e6
        for _ in range(i):
            g = g * delta
        rows.append(QSeries(k, g.coeffs))
    for i in range(d):
        piv = rows[i][i]
        assert piv != 0
        rows[i] = (1 / piv) * rows[i]
        for j in range(d):
            if j != i and rows[j][i] != 0:
                rows[j] = rows[j] + (-rows[j][i]) * rows[i]
    _basis_cache[key] = rows
    return rows


def cusp_basis(k, order):
    return vm_basis(k, order)[1:]


def hecke_operator(f, m):
    """T_m acting on a weight-k series; output truncated to order // m."""
    m = int(m)
    if m < 1:
        raise DomainError("Hecke index must be >= 1")
    k = f.weight
    new_order = f.order // m
    out = []
    for n in range(new_order + 1):
        if n == 0:
            acc = mc.divisor_sigma(m, k - 1) * f[0]
        else:
            acc = mpq(0)
            for d in mc.divisors(math.gcd(m, n)):
                acc += mpz(d) ** (k - 1) * f[m * n // (d * d)]
        out.append(acc)
    return QSeries(k, out)


def rankin_cohen(g1, g2, n):
    """Degree-n bracket of g1, g2, normalized to rational coefficients.

    sum_r (-1)^r C(k1+n-1, n-r) C(k2+n-1, r) theta^r g1 theta^(n-r) g2,
    which is the raw holomorphic bracket divided by (2 pi i)^n. Weight
    k1 + k2 + 2n.
    """
    n = int(n)
    if n < 0:
        raise DomainError("bracket degree must be >= 0")
    k1, k2 = g1.weight, g2.weight
    th1 = [g1]
    th2 = [g2]
    for _ in range(n):
        th1.append(th1[-1].theta())
        th2.append(th2[-1].theta())
    order = min(g1.order, g2.order)
    out = QSeries(k1 + k2 + 2 * n, [mpq(0)] * (order + 1))
    for r in range(n + 1):
        c = mpq((-1) ** r) * mc.binomial(k1 + n - 1, n - r) * mc.binomial(k2 + n - 1, r)
        prod = th1[r] * th2[n - r]
        out = out + c * QSeries(out.weight, prod.coeffs)
    return out


def cuspidal_projection(f):
    """Remove the Eisenstein component: f - a_0(f) E_k."""
    if f.weight % 2 or f.weight < 4:
        raise BadWeight(f"no Eisenstein series in weight {f.weight}")
    if f[0] == 0:
        return f
    return f + (-f[0]) * eisenstein_series(f.weight, f.order)


# ---------------------------------------------------------------------------
# eigenforms


class HeckeEigenform:
    """Normalized cuspidal eigenform (a_1 = 1).

    For one-dimensional spaces coefficients are exact rationals; for
    larger spaces they live at the profile precision.
    """

    def __init__(self, weight, index, coeffs, exact_series=None, a2=None, P=mc.DEFAULT_PRECISION):
        self.weight = weight
        self.index = index
        self.label = f"k{weight}#{index}"
        self._coeffs = coeffs          # list of mpc, index 0..order
        self.qexp = exact_series       # QSeries when coefficients are rational
        self.a2 = a2
        self.P = P

    @property
    def exact(self):
        return self.qexp is not None

    @property
    def order(self):
        return len(self._coeffs) - 1

    def coeff(self, n):
        if n > self.order:
            raise DomainError(f"coefficient a({n}) beyond computed order {self.order}")
        return self._coeffs[n]

    def coeffs(self, M):
        if M > self.order:
            raise DomainError(f"coefficients to {M} beyond computed order {self.order}")
        return self._coeffs[: M + 1]

    def eval(self, z, P=None):
        P = P or self.P
        with mc.ctx(P + 16):
            z = mpc(z)
            if not z.imag > 0:
                raise DomainError("evaluation needs Im z > 0")
            w = gmpy2.exp(2 * gmpy2.const_pi() * mpc(0, 1) * z)
            acc = mpc(0)
            for c in reversed(self._coeffs):
                acc = acc * w + c
        with mc.ctx(P):
            return mpc(acc)

    def __repr__(self):
        return f"HeckeEigenform({self.label}, order={self.order}, exact={self.exact})"


_eigen_cache: dict = {}


def eigenforms(k, profile=None, order=None):
    """All normalized Hecke eigenforms of weight k, sorted by real a(2).

    DegenerateSpectrum if two T_2 eigenvalues collide at working
    precision (does not happen for the weights this library targets,
    but the guard keeps silent nonsense out).
    """
    profile = profile or mc.PrecisionProfile()
    k = int(k)
    if k % 2 or k < 0:
        raise BadWeight(f"eigenforms need even k >= 0, got {k}")
    order = int(order) if order is not None else max(profile.N_q, 80)
    key = (k, profile.P, order)
    if key in _eigen_cache:
        return _eigen_cache[key]
    d = dim_cuspforms(k)
    if d == 0:
        _eigen_cache[key] = []
        return []
    need = max(order, 2 * d + 2)
    basis = cusp_basis(k, 2 * need)
    P = profile.P
    if d == 1:
        f = basis[0].truncate(need)
        with mc.ctx(P):
            coeffs = [mpc(c) for c in f.coeffs]
        forms = [HeckeEigenform(k, 0, coeffs, exact_series=f, a2=mpc(f[2]), P=P)]
        _eigen_cache[key] = forms
        return forms
    # T_2 matrix in the echelon basis: entry (i, j) is coefficient i+1 of T_2 b_{j+1}
    t2 = [hecke_operator(b, 2) for b in basis]
    A = [[t2[j][i + 1] for j in range(d)] for i in range(d)]
    roots = _real_spectrum(A, P)
    scale = max(abs(r) for r in roots) + 1
    with mc.ctx(P):
        sep = gmpy2.exp2(-(P // 2)) * scale
        for i in range(d):
            for j in range(i + 1, d):
                if abs(roots[i] - roots[j]) < sep:
                    raise DegenerateSpectrum(f"T_2 eigenvalues separated by < {sep} in weight {k}")
    forms = []
    with mc.ctx(P + 32):
        for idx, lam in enumerate(sorted(roots)):
            v = _eigenvector(A, lam, P)
            # echelon basis means a(1) = v_0, which _eigenvector pins to 1
            coeffs = []
            for n in range(need + 1):
                coeffs.append(sum(v[j] * mpfr(basis[j][n]) for j in range(d)))
            with mc.ctx(P):
                coeffs = [mpc(c) for c in coeffs]
            forms.append(HeckeEigenform(k, idx, coeffs, a2=coeffs[2], P=P))
    _eigen_cache[key] = forms
    return forms


def _charpoly(A):
    # exact characteristic polynomial for d <= 3, monic, coefficient list low->high
    d = len(A)
    if d == 1:
        return [-A[0][0], mpq(1)]
    if d == 2:
        tr = A[0][0] + A[1][1]
        det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
        return [det, -tr, mpq(1)]
    if d == 3:
        a, b, c = A[0]
        dd, e, f = A[1]
        g, h, i = A[2]
        tr = a + e + i
        m2 = (a * e - b * dd) + (a * i - c * g) + (e * i - f * h)
        det = a * (e * i - f * h) - b * (dd * i - f * g) + c * (dd * h - e * g)
        return [-det, m2, -tr, mpq(1)]
    raise DomainError(f"characteristic polynomial only implemented for dim <= 3, got {d}")


def _real_spectrum(A, P):
    """Real roots of the T_2 characteristic polynomial at precision P."""
    d = len(A)
    cp = _charpoly(A)
    if d == 1:
        with mc.ctx(P):
            return [mpfr(-cp[0])]
    if d == 2:
        c0, c1, _ = cp
        with mc.ctx(P + 16):
            disc = c1 * c1 - 4 * c0
            if disc < 0:
                raise DegenerateSpectrum("complex T_2 spectrum; expected totally real")
            r = gmpy2.sqrt(mpfr(disc))
            return [mpfr((-mpfr(c1) + r) / 2), mpfr((-mpfr(c1) - r) / 2)]
    # d == 3: float seeds, Newton polish on the exact polynomial
    import numpy

    seeds = numpy.roots([1.0, float(cp[2]), float(cp[1]), float(cp[0])])
    if numpy.max(numpy.abs(seeds.imag)) > 1e-6 * numpy.max(numpy.abs(seeds.real)):
        raise DegenerateSpectrum("complex T_2 spectrum; expected totally real")
    roots = []
    with mc.ctx(P + 32):
        for s0 in sorted(seeds.real):
            x = mpfr(s0)
            for _ in range(int(math.log2(P)) + 6):
                pv = mpfr(cp[0]) + x * (mpfr(cp[1]) + x * (mpfr(cp[2]) + x))
                dv = mpfr(cp[1]) + x * (2 * mpfr(cp[2]) + 3 * x)
                if dv == 0:
                    raise DegenerateSpectrum("critical point hit during Newton polish")
                x -= pv / dv
            roots.append(mpfr(x, P))
    return roots


def _eigenvector(A, lam, P):
    """Kernel vector of (A - lam) with first entry 1, at precision P."""
    d = len(A)
    with mc.ctx(P + 32):
        lam = mpfr(lam)
        if d == 2:
            # row 1: (A00 - lam) + A01 t = 0
            if abs(mpfr(A[0][1])) > abs(mpfr(A[1][0])):
                t = (lam - mpfr(A[0][0])) / mpfr(A[0][1])
            else:
                denom = lam - mpfr(A[1][1])
                if denom == 0:
                    raise SingularSystem("degenerate 2x2 eigen-solve")
                t = mpfr(A[1][0]) / denom
            return [mpfr(1), t]
        if d == 3:
            # solve rows 0,1 for (v1, v2) given v0 = 1
            a11 = mpfr(A[0][1]); a12 = mpfr(A[0][2]); r0 = lam - mpfr(A[0][0])
            a21 = mpfr(A[1][1]) - lam; a22 = mpfr(A[1][2]); r1 = -mpfr(A[1][0])
            det = a11 * a22 - a12 * a21
            if abs(det) < gmpy2.exp2(-P):
                raise SingularSystem("near-singular 3x3 eigen-solve")
            v1 = (r0 * a22 - a12 * r1) / det
            v2 = (a11 * r1 - r0 * a21) / det
            return [mpfr(1), v1, v2]
    raise DomainError("eigenvector solve implemented for dim <= 3")


# ---------------------------------------------------------------------------
# Petersson norm


_norm_cache: dict = {}


def petersson_norm(f, profile=None, method="unfold"):
    """<f, f> over the standard fundamental domain, measure dx dy / y^2.

    method "unfold": incomplete-gamma series on the strip y >= 1 plus
    Gauss-Legendre quadrature over the region between the unit circle
    and y = 1. method "rank": the L-value route (independent check).
    Returns (value, err_estimate).
    """
    profile = profile or mc.PrecisionProfile()
    if method == "rank":
        from . import lfunc

        return lfunc.petersson_norm_rank_identity(f, profile)
    if method != "unfold":
        raise DomainError(f"unknown Petersson method {method!r}")
    label = getattr(f, "label", None)
    key = (label, f.order, profile.P) if label else None
    if key in _norm_cache:
        return _norm_cache[key]
    k = f.weight
    P = profile.P
    M = f.order
    with mc.ctx(P + 32):
        pi4 = 4 * gmpy2.const_pi()
        strip = mpfr(0)
        for m in range(1, M + 1):
            am = f.coeff(m) if isinstance(f, HeckeEigenform) else mpc(mpfr(f[m]))
            x = pi4 * m
            # |a_m|^2 Gamma(k-1,x)/x^(k-1) ~ m^(k-1) e^(-x) / x; 2k log x covers both factors
            if float(x) > (P + 64) * math.log(2) + 2 * k * math.log(float(x)) + 10:
                break
            g = mc.inc_gamma_upper(k - 1, x, P + 32)
            strip += (abs(am) ** 2) * g.real / x ** (k - 1)
        nx, ny = _bulge_resolution(P)
        bulge = _bulge_quadrature(f, k, nx, ny, P)
        bulge_half = _bulge_quadrature(f, k, (nx // 2) | 1, max(ny // 2, 8), P)
        err = abs(bulge - bulge_half)
        if err > profile.tol * (abs(strip + bulge) + 1):
            raise QuadratureFailure(
                f"bulge quadrature self-check off by {err} (tol {profile.tol})")
        val = strip + bulge
    with mc.ctx(P):
        out = (mpfr(val), mpfr(err))
    if key:
        _norm_cache[key] = out
    return out


def _bulge_resolution(P):
    return 80 + int(0.55 * P), 24 + P // 6


def _bulge_quadrature(f, k, nx, ny, P):
    xs, wx = mc.gauss_legendre(nx, P + 32)
    ys, wy = mc.gauss_legendre(ny, P + 32)
    with mc.ctx(P + 32):
        half = mpfr(1) / 2
        acc = mpfr(0)
        for xi, wxi in zip(xs, wx):
            x = xi * half  # map [-1,1] -> [-1/2, 1/2]
            y0 = gmpy2.sqrt(1 - x * x)
            span = (1 - y0) / 2
            inner = mpfr(0)
            for yi, wyi in zip(ys, wy):
                y = y0 + span * (yi + 1)
                v = f.eval(mpc(x, y), P + 32)
                if isinstance(v, tuple):
                    v = v[0]
                inner += wyi * (abs(v) ** 2) * y ** (k - 2)
            acc += wxi * span * inner
        return acc * half
