"""Completed L-functions of level-one cusp forms.

The plain completed value is the Mellin transform of f on the imaginary
axis, computed through the incomplete-gamma split at y = 1: entire in s
and satisfying L*(k-s) = (-1)^(k/2) L*(s) termwise. The additive twist
by p/q splits at y = 1/q instead, using the Fricke-type matrix sending
p/q to p'/q with p p' = -1 mod q; its reflection and conjugation
symmetries also hold term by term. All series here converge like
exp(-2 pi m / q), so tails are short and the error estimates honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpc, mpfr, mpq

from . import modforms as mf
from . import mpcore as mc
from .errors import DomainError, InsufficientPrecision

__all__ = [
    "LValue",
    "PeterssonNorm",
    "lstar",
    "lstar_twisted",
    "lstar_dirichlet_direct",
    "fe_residual",
    "twisted_fe_residual",
    "conjugation_residual",
    "twist_average_residual",
    "petersson_norm",
    "petersson_norm_rank_identity",
    "rankin_convolution_check",
]


@dataclass(frozen=True)
class LValue:
    """A computed completed L-value with its provenance."""

    value: object          # mpc
    err: object            # mpfr, absolute estimate from the dropped tail
    form: str
    s: object              # mpc
    twist: tuple = (0, 1)  # (p, q), reduced
    P: int = mc.DEFAULT_PRECISION

    def to_json(self):
        return {
            "schema": "eiskern/1",
            "form": self.form,
            "s": mc.fmt_complex(self.s, self.P),
            "twist": f"{self.twist[0]}/{self.twist[1]}",
            "value": mc.fmt_complex(self.value, self.P),
            "err": mc.fmt_real(self.err, 64),
        }


_lstar_cache: dict = {}


def _coeff_source(f, need, profile):
    """A coefficient table long enough for the requested tail."""
    if isinstance(f, mf.HeckeEigenform):
        if f.order >= need:
            return f
        return next(g for g in mf.eigenforms(f.weight, profile, order=need)
                    if g.index == f.index)
    if isinstance(f, mf.QSeries):
        if f[0] != 0:
            raise DomainError("completed L-values need a cusp form (a_0 = 0)")
        if f.order < need:
            raise InsufficientPrecision(
                f"series order {f.order} too short for tail length {need}")
        return f
    raise DomainError(f"cannot take L-values of {type(f).__name__}")


def _get(f, m):
    return f.coeff(m) if isinstance(f, mf.HeckeEigenform) else mpfr(f[m])


def _tail_length(k, s, q, P):
    # terms fall like exp(-2 pi m / q) m^(k/2 + |Re s| + ...)
    sig = abs(float(mpc(s).real))
    grow = k / 2 + max(sig, k - sig) + 2
    M = 8
    for _ in range(80):
        Mn = (P * math.log(2) + 40 + grow * math.log(M + 2)) * q / (2 * math.pi)
        if Mn <= M:
            break
        M = int(Mn) + 1
    return M


def lstar(f, s, profile=None):
    """Completed L-value of a cusp form, entire in s.

    sum_m a(m) [ Gamma(s, 2 pi m)/(2 pi m)^s
                 + (-1)^(k/2) Gamma(k-s, 2 pi m)/(2 pi m)^(k-s) ].
    """
    return lstar_twisted(f, s, 0, 1, profile)


def lstar_twisted(f, s, p, q, profile=None):
    """Completed L-value twisted by the additive character e(m p / q).

    The y = 1/q split gives
      sum_m a(m) e(m p / q) Gamma(s, 2 pi m / q) / (2 pi m)^s
      + (-1)^(k/2) q^(k-2s) sum_m a(m) e(m p' / q)
            Gamma(k - s, 2 pi m / q) / (2 pi m)^(k-s)
    with p p' = -1 (mod q).
    """
    profile = profile or mc.PrecisionProfile()
    p, q = int(p), int(q)
    if q < 1:
        raise DomainError("twist denominator must be >= 1")
    p %= q if q > 1 else 1
    if q > 1 and math.gcd(p, q) != 1:
        raise DomainError(f"twist {p}/{q} not in lowest terms")
    P = profile.P
    k = f.weight
    with mc.ctx(P + 48):
        s = mpc(s)
    key = (getattr(f, "label", None), f.order, s, p, q, P)
    if key[0] and key in _lstar_cache:
        return _lstar_cache[key]
    M = min(_tail_length(k, s, q, P), profile.M_tail)
    src = _coeff_source(f, M, profile)
    M = min(M, src.order)
    pprime = (-pow(p, -1, q)) % q if q > 1 else 0
    Pw = P + 48
    with mc.ctx(Pw):
        twopi = 2 * gmpy2.const_pi()
        zq = gmpy2.exp(twopi * mpc(0, 1) / q) if q > 1 else mpc(1)
        sign = -1 if (k // 2) % 2 else 1
        qpow = mc.cpow(q, k - 2 * s, Pw)
        acc = mpc(0)
        last = mpfr(0)
        for m in range(1, M + 1):
            x = twopi * m / q
            g1 = mc.inc_gamma_upper(s, x, Pw)
            g2 = mc.inc_gamma_upper(k - s, x, Pw)
            c1 = zq ** ((m * p) % q) if q > 1 else 1
            c2 = zq ** ((m * pprime) % q) if q > 1 else 1
            am = _get(src, m)
            term = am * (c1 * g1 * mc.cpow(twopi * m, -s, Pw)
                         + sign * qpow * c2 * g2 * mc.cpow(twopi * m, s - k, Pw))
            acc += term
            last = abs(term)
            if m > 4 and last < gmpy2.exp2(-Pw) * (abs(acc) + gmpy2.exp2(-40)):
                break
        # geometric majorant for the dropped tail
        ratio = gmpy2.exp(-twopi / q) * (mpfr(1) + mpfr(1) / 4)
        err = last * ratio / (1 - ratio)
    with mc.ctx(P):
        out = LValue(mpc(acc), mpfr(err), getattr(f, "label", "series"), mpc(s), (p, q), P)
    if key[0]:
        _lstar_cache[key] = out
    return out


def lstar_dirichlet_direct(f, s, profile=None, M=None):
    """Gamma(s) (2 pi)^(-s) sum a(m) m^(-s), direct; needs Re s > (k+1)/2.

    Slowly convergent; exists as an independent cross-check route.
    Returns (value, tail_bound) with the Deligne-style tail majorant.
    """
    profile = profile or mc.PrecisionProfile()
    P = profile.P
    k = f.weight
    with mc.ctx(P + 16):
        s = mpc(s)
        half = mpfr(k + 1) / 2
        if not s.real > half:
            raise DomainError(f"direct Dirichlet series needs Re s > {half}")
        M = int(M) if M else min(f.order, profile.M_tail)
        src = _coeff_source(f, M, profile)
        acc = mpc(0)
        for m in range(1, M + 1):
            acc += _get(src, m) * mc.cpow(m, -s, P + 16)
        pref = mc.gamma(s, P + 16) * mc.cpow(2 * gmpy2.const_pi(), -s, P + 16)
        val = pref * acc
        # |a(m)| <= 2 m^(k/2); integral majorant from M on
        expo = float(k) / 2 + 1 - float(s.real)
        tail = abs(pref) * 2 * mpfr(M) ** expo / (-expo)
    with mc.ctx(P):
        return mpc(val), mpfr(tail)


# ---------------------------------------------------------------------------
# symmetry residuals


def fe_residual(f, s, profile=None):
    """|L*(k-s) - (-1)^(k/2) L*(s)| / scale."""
    profile = profile or mc.PrecisionProfile()
    k = f.weight
    a = lstar(f, mpc(k) - mpc(s), profile)
    b = lstar(f, s, profile)
    with mc.ctx(profile.P):
        sign = -1 if (k // 2) % 2 else 1
        scale = max(abs(a.value), abs(b.value), mpfr(1))
        return abs(a.value - sign * b.value) / scale


def twisted_fe_residual(f, s, p, q, profile=None):
    """|q^s L*(s; p/q) - (-1)^(k/2) q^(k-s) L*(k-s; p'/q)| / scale."""
    profile = profile or mc.PrecisionProfile()
    k = f.weight
    p, q = int(p), int(q)
    pprime = (-pow(p, -1, q)) % q if q > 1 else 0
    a = lstar_twisted(f, s, p, q, profile)
    b = lstar_twisted(f, mpc(k) - mpc(s), pprime, q, profile)
    with mc.ctx(profile.P):
        s = mpc(s)
        sign = -1 if (k // 2) % 2 else 1
        lhs = mc.cpow(q, s, profile.P) * a.value
        rhs = sign * mc.cpow(q, k - s, profile.P) * b.value
        scale = max(abs(lhs), abs(rhs), mpfr(1))
        return abs(lhs - rhs) / scale


def conjugation_residual(f, s, p, q, profile=None):
    """|conj L*(s; p/q) - L*(conj s; -p/q)| / scale, real coefficients."""
    profile = profile or mc.PrecisionProfile()
    a = lstar_twisted(f, s, p, q, profile)
    with mc.ctx(profile.P + 16):
        s = mpc(s)
        sbar = mpc(s.real, -s.imag)
    b = lstar_twisted(f, sbar, (-int(p)) % int(q) if q > 1 else 0, q, profile)
    with mc.ctx(profile.P):
        ac = mpc(a.value.real, -a.value.imag)
        scale = max(abs(ac), abs(b.value), mpfr(1))
        return abs(ac - b.value) / scale


def twist_average_residual(f, s, profile=None):
    """Substantive cross-route check at q = 2, large Re s.

    L*(s; 0) + L*(s; 1/2) = 2^(1-s) Gamma(s) (2 pi)^(-s) sum a(2j) j^(-s):
    the left side uses the incomplete-gamma machinery, the right side a
    plain Dirichlet series. Returns the relative residual.
    """
    profile = profile or mc.PrecisionProfile()
    P = profile.P
    k = f.weight
    with mc.ctx(P + 16):
        s = mpc(s)
        if not s.real > mpfr(k + 3) / 2:
            raise DomainError("cross-route check needs large Re s")
    a = lstar(f, s, profile)
    b = lstar_twisted(f, s, 1, 2, profile)
    M = min(f.order, profile.M_tail)
    src = _coeff_source(f, M, profile)
    with mc.ctx(P + 16):
        acc = mpc(0)
        for j in range(1, M // 2 + 1):
            acc += _get(src, 2 * j) * mc.cpow(j, -s, P + 16)
        pref = mc.cpow(2, 1 - s, P + 16) * mc.gamma(s, P + 16) \
            * mc.cpow(2 * gmpy2.const_pi(), -s, P + 16)
        rhs = pref * acc
        lhs = a.value + b.value
        expo = float(k) / 2 + 1 - float(s.real)
        tail = 2 * mpfr(M // 2) ** expo / (-expo) * abs(pref)
        scale = max(abs(lhs), abs(rhs), mpfr(1))
        return abs(lhs - rhs) / scale, mpfr(tail) / scale


# ---------------------------------------------------------------------------
# convolution series cross-check


def _sigma_table(M, nu, P):
    """sigma_nu(m) for m = 1..M; exact when nu is an integer."""
    nu_i = None
    if isinstance(nu, int):
        nu_i = nu
    else:
        z = mpc(nu)
        if z.imag == 0 and z.real == gmpy2.floor(z.real):
            nu_i = int(z.real)
    if nu_i is not None:
        j = abs(nu_i)
        tab = [0] * (M + 1)
        for d in range(1, M + 1):
            dj = d ** j
            for m in range(d, M + 1, d):
                tab[m] += dj
        if nu_i >= 0:
            return [mpq(t) for t in tab]
        # sigma_{-j}(m) = sigma_j(m) / m^j
        return [mpq(0)] + [mpq(tab[m], m ** j) for m in range(1, M + 1)]
    with mc.ctx(P):
        out = [mpc(0)] * (M + 1)
        for d in range(1, M + 1):
            dn = mc.cpow(d, nu, P)
            for m in range(d, M + 1, d):
                out[m] += dn
        return out


def _divisor_square_tail(M, alpha, P=64):
    """Upper bound on sum_{m>M} d(m)^2 m^(-alpha), alpha > 1.

    Rankin's trick with the exact Dirichlet series
    sum d(m)^2 m^(-u) = zeta(u)^4 / zeta(2u): for any 0 < delta <
    alpha - 1 the tail is at most M^(-delta) zeta(alpha-delta)^4 /
    zeta(2 alpha - 2 delta); the delta grid below gets within a small
    factor of the optimum.
    """
    with mc.ctx(P):
        alpha = mpfr(alpha)
        best = None
        lo = alpha - 1
        for j in range(2, 40, 2):
            delta = lo * (1 - mpfr(1) / j)
            u = alpha - delta
            cand = mpfr(M) ** (-delta) * abs(mc.zeta(u, P)) ** 4 / abs(mc.zeta(2 * u, P))
            if best is None or cand < best:
                best = cand
        return best


def _conv_coeff_table(f, M, profile):
    if isinstance(f, mf.HeckeEigenform) and f.weight == 12:
        return mf.delta_coefficients(M)
    src = _coeff_source(f, M, profile)
    return [_get(src, m) for m in range(1, M + 1)]


def rankin_convolution_check(f, s, w, profile=None, M_tail=None):
    """Residual of the convolution identity against two completed values.

    Compares zeta(k+1-s-w) Gamma(k-s) (2 pi)^(s-k) sum_m a(m)
    sigma_(w-s)(m) m^(s-k), truncated at M_tail, with
    (2 pi)^(k-w) / Gamma(k-w) * L*(f,k-s) L*(f,k-w). Returns
    (residual, bound): the bound is rigorous, from the Deligne
    majorant |a(m) sigma_nu(m)| <= d(m)^2 m^((k-1)/2 + max(Re nu, 0)),
    and decays only polynomially in M_tail — this series has no
    exponentially convergent rearrangement, so do not expect the
    residual to chase the L*-side precision.
    """
    profile = profile or mc.PrecisionProfile()
    P = profile.P
    k = f.weight
    with mc.ctx(P + 32):
        s = mpc(s)
        w = mpc(w)
        nu = w - s
        # majorant exponent: |a(m) sigma_nu(m)| m^(Re s - k) <= d(m)^2 m^(-alpha)
        alpha = float(k - s.real - mpfr(k - 1) / 2 - max(nu.real, 0))
        if not alpha > 1:
            raise DomainError(
                "convolution series diverges: need "
                f"Re(k-s) > {(k + 1) / 2 + max(float(nu.real), 0)}")
    M = int(M_tail) if M_tail else min(profile.M_tail * 25, 100_000)
    coeffs = _conv_coeff_table(f, M, profile)
    sig = _sigma_table(M, nu, P + 32)
    with mc.ctx(P + 32):
        acc = mpc(0)
        expo = s - k
        int_expo = expo.imag == 0 and expo.real == gmpy2.floor(expo.real)
        for m in range(1, M + 1):
            mp = mpfr(m) ** int(expo.real) if int_expo else mc.cpow(m, expo, P + 32)
            acc += coeffs[m - 1] * sig[m] * mp
        pref = mc.zeta(k + 1 - s - w, P + 32) * mc.gamma(k - s, P + 32) \
            * mc.cpow(2 * gmpy2.const_pi(), s - k, P + 32)
        lhs = pref * acc
        a = lstar(f, k - s, profile)
        b = lstar(f, k - w, profile)
        pref2 = mc.cpow(2 * gmpy2.const_pi(), k - w, P + 32) / mc.gamma(k - w, P + 32)
        rhs = pref2 * a.value * b.value
        residual = abs(lhs - rhs)
        bound = abs(pref) * _divisor_square_tail(M, alpha) \
            + abs(pref2) * (a.err * abs(b.value) + b.err * abs(a.value))
    with mc.ctx(P):
        return mpfr(residual), mpfr(bound)


# ---------------------------------------------------------------------------
# Petersson norm through critical values


@dataclass(frozen=True)
class PeterssonNorm:
    """A Petersson norm with the route that produced it."""

    form: str
    value: object          # mpfr, > 0
    err: object
    method: str            # "strip+quadrature" or "rank-identity"

    def to_json(self):
        return {
            "schema": "eiskern/1",
            "form": self.form,
            "value": mc.fmt_real(self.value),
            "err": mc.fmt_real(self.err, 64),
            "method": self.method,
        }


def petersson_norm(f, profile=None, method="strip+quadrature"):
    """<f, f> by either route, wrapped with its method tag."""
    routes = {"strip+quadrature": "unfold", "rank-identity": "rank"}
    if method not in routes:
        raise DomainError(f"unknown Petersson method {method!r}")
    val, err = mf.petersson_norm(f, profile, method=routes[method])
    return PeterssonNorm(getattr(f, "label", "series"), val, err, method)


def petersson_norm_rank_identity(f, profile=None):
    """<f, f> from the degree-zero kernel identity, independent of quadrature.

    The cuspidal part of E_4 E_(k-4) pairs with f to
    2^(3-k) (4 (k-4) / (B_4 B_(k-4))) L*(f, 1) L*(f, k-4); dividing by
    the coefficient of f in its eigen-expansion gives the norm.
    Returns (value, err_estimate).
    """
    profile = profile or mc.PrecisionProfile()
    k = f.weight
    if k < 12 or mf.dim_cuspforms(k) == 0:
        raise DomainError(f"rank-identity route needs cusp forms, weight {k}")
    k1, k2 = 4, k - 4
    P = profile.P
    order = max(mf.dim_cuspforms(k) + 2, 8)
    e1 = mf.eisenstein_series(k1, order)
    e2 = mf.eisenstein_series(k2, order)
    proj = mf.cuspidal_projection(e1 * e2)
    forms = mf.eigenforms(k, profile)
    d = len(forms)
    with mc.ctx(P + 32):
        if d == 1:
            cf = mpc(mpfr(proj[1]))
        else:
            # solve proj[n] = sum_g c_g a_g(n) for the c vector, n = 1..d
            rows = [[forms[j].coeff(n) for j in range(d)] for n in range(1, d + 1)]
            rhs = [mpc(mpfr(proj[n])) for n in range(1, d + 1)]
            cvec = _solve_dense(rows, rhs, P)
            cf = cvec[f.index]
        l1 = lstar(f, 1, profile)
        l2 = lstar(f, k2, profile)
        sign = -1 if (k1 // 2) % 2 else 1
        const = mpq(4 * k2) / (mc.bernoulli(k1) * mc.bernoulli(k2)) * mpq(2) ** (3 - k) * sign
        val = mpfr(const) * l1.value * l2.value / cf
        err = (l1.err / max(abs(l1.value), mpfr(1)) + l2.err / max(abs(l2.value), mpfr(1))) \
            * abs(val) + gmpy2.exp2(-P + 8) * abs(val)
        if abs(val.imag) > gmpy2.exp2(-(P // 2)) * abs(val):
            raise InsufficientPrecision(f"norm came out non-real: {val}")
    with mc.ctx(P):
        return mpfr(val.real), mpfr(err)


def _solve_dense(rows, rhs, P):
    """Gaussian elimination with partial pivoting on small mpc systems."""
    from .errors import SingularSystem

    n = len(rows)
    A = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    with mc.ctx(P + 32):
        for col in range(n):
            piv = max(range(col, n), key=lambda r: abs(A[r][col]))
            if abs(A[piv][col]) < gmpy2.exp2(-P):
                raise SingularSystem("eigen-expansion system is singular")
            A[col], A[piv] = A[piv], A[col]
            for r in range(n):
                if r != col and A[r][col] != 0:
                    fac = A[r][col] / A[col][col]
                    A[r] = [a - fac * b for a, b in zip(A[r], A[col])]
        return [A[i][n] / A[i][i] for i in range(n)]
