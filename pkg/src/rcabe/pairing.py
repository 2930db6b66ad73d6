"""Symmetric bilinear group on a supersingular curve y^2 = x^3 + x.

The curve lives over F_p with p = r*h - 1 and p ≡ 3 (mod 4), so the group
of rational points is cyclic of order p + 1 and carries the distortion map
(x, y) -> (-x, iy) into E(F_p^2), where i^2 = -1.  The pairing is the Tate
pairing composed with that distortion, which makes it symmetric:
e(P, Q) = f_{r,P}(phi(Q))^((p^2-1)/r).

At the default 512-bit field (the SS512 profile) serialized sizes are:
scalars 20 bytes, source-group points 128 bytes (two 64-byte coordinates),
target-group elements 128 bytes (an F_p^2 pair).

Exponentiations and pairings are routed through an `OpCounter`; internal
curve arithmetic (Miller loop, sampling, cofactor clearing) is not charged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpz

from .counters import G_EXP, GT_EXP, PAIRING, OpCounter
from .primitives import HashSuite, SeededRng

SUPPORTED_LEVELS = (256, 512)
DEFAULT_LEVEL = 512
SCALAR_BYTES = 20

# Point at infinity marker for affine points.
INF = None


class ConfigurationError(Exception):
    """Unsupported group parameterization."""


class SerializationError(Exception):
    """Malformed or out-of-group encoded element."""


# ---------------------------------------------------------------------------
# F_p^2 arithmetic: elements are (a, b) meaning a + b*i with i^2 = -1.
# ---------------------------------------------------------------------------

def f2_mul(x, y, p):
    a, b = x
    c, d = y
    t1 = a * c % p
    t2 = b * d % p
    t3 = (a + b) * (c + d) % p
    return ((t1 - t2) % p, (t3 - t1 - t2) % p)


def f2_sqr(x, p):
    a, b = x
    return ((a + b) * (a - b) % p, (a * b << 1) % p)


def f2_inv(x, p):
    a, b = x
    norm = (a * a + b * b) % p
    ninv = gmpy2.invert(norm, p)
    return (a * ninv % p, (-b) * ninv % p)


def f2_conj(x, p):
    a, b = x
    return (a, (-b) % p)


def f2_pow(x, e, p):
    result = (mpz(1), mpz(0))
    if e == 0:
        return result
    for bit in bin(int(e))[2:]:
        result = f2_sqr(result, p)
        if bit == "1":
            result = f2_mul(result, x, p)
    return result


# ---------------------------------------------------------------------------
# Curve arithmetic on y^2 = x^3 + x (Jacobian coordinates internally).
# ---------------------------------------------------------------------------

def _jac_double(X1, Y1, Z1, p):
    if Z1 == 0 or Y1 == 0:
        return mpz(1), mpz(1), mpz(0)
    XX = X1 * X1 % p
    YY = Y1 * Y1 % p
    YYYY = YY * YY % p
    ZZ = Z1 * Z1 % p
    S = ((X1 + YY) ** 2 - XX - YYYY << 1) % p
    M = (3 * XX + ZZ * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Z3 = ((Y1 + Z1) ** 2 - YY - ZZ) % p
    Y3 = (M * (S - X3) - 8 * YYYY) % p
    return X3, Y3, Z3


def _jac_add_affine(X1, Y1, Z1, x2, y2, p):
    """Mixed Jacobian + affine addition; returns (X3, Y3, Z3)."""
    if Z1 == 0:
        return mpz(x2), mpz(y2), mpz(1)
    Z1Z1 = Z1 * Z1 % p
    U2 = x2 * Z1Z1 % p
    S2 = y2 * Z1 * Z1Z1 % p
    H = (U2 - X1) % p
    if H == 0:
        if S2 == Y1 % p:
            return _jac_double(X1, Y1, Z1, p)
        return mpz(1), mpz(1), mpz(0)
    HH = H * H % p
    I = 4 * HH % p
    J = H * I % p
    rr = (S2 - Y1 << 1) % p
    V = X1 * I % p
    X3 = (rr * rr - J - 2 * V) % p
    Y3 = (rr * (V - X3) - 2 * Y1 * J) % p
    Z3 = ((Z1 + H) ** 2 - Z1Z1 - HH) % p
    return X3, Y3, Z3


def _jac_to_affine(X, Y, Z, p):
    if Z == 0:
        return INF
    zi = gmpy2.invert(Z, p)
    zi2 = zi * zi % p
    return (X * zi2 % p, Y * zi2 * zi % p)


def _affine_mul(P, k, p):
    """Scalar multiplication returning an affine point (or INF)."""
    if P is INF or k == 0:
        return INF
    k = int(k)
    if k < 0:
        raise ValueError("negative scalar")
    x, y = P
    X, Y, Z = mpz(1), mpz(1), mpz(0)
    for bit in bin(k)[2:]:
        X, Y, Z = _jac_double(X, Y, Z, p)
        if bit == "1":
            X, Y, Z = _jac_add_affine(X, Y, Z, x, y, p)
    return _jac_to_affine(X, Y, Z, p)


def _affine_add(P, Q, p):
    if P is INF:
        return Q
    if Q is INF:
        return P
    X, Y, Z = _jac_add_affine(mpz(P[0]), mpz(P[1]), mpz(1), Q[0], Q[1], p)
    return _jac_to_affine(X, Y, Z, p)


def _on_curve(P, p):
    if P is INF:
        return True
    x, y = P
    return (y * y - (x * x * x + x)) % p == 0


# ---------------------------------------------------------------------------
# The group object.
# ---------------------------------------------------------------------------

@dataclass
class BilinearGroup:
    """Bilinear group parameters plus arithmetic and serialization."""

    security_level: int
    p: int                      # base field prime, = r*h - 1
    r: int                      # prime order of the pairing groups
    h: int                      # cofactor, (p+1)/r
    g: tuple                    # generator of G (affine point)
    counter: OpCounter = field(default_factory=OpCounter)

    def __post_init__(self):
        self.p = mpz(self.p)
        self.r = int(self.r)
        self.h = int(self.h)
        self.g = (mpz(self.g[0]), mpz(self.g[1]))
        self.fp_bytes = self.security_level // 8
        self.g_bytes = 2 * self.fp_bytes
        self.gt_bytes = 2 * self.fp_bytes
        self.zp_bytes = SCALAR_BYTES
        self.hash = HashSuite(self.r)
        self.gt_one = (mpz(1), mpz(0))

    # -- counted operations -------------------------------------------------

    def pow_g(self, P, k):
        """Counted exponentiation in G (scalar point multiplication)."""
        self.counter.tick(G_EXP)
        return _affine_mul(P, k % self.r, self.p)

    def pow_gt(self, z, k):
        """Counted exponentiation in G_T."""
        self.counter.tick(GT_EXP)
        return f2_pow(z, int(k % self.r), self.p)

    def pair(self, P, Q):
        """Counted symmetric pairing e(P, Q)."""
        self.counter.tick(PAIRING)
        return self._tate(P, Q)

    # -- uncounted group arithmetic -----------------------------------------

    def mul_g(self, P, Q):
        return _affine_add(P, Q, self.p)

    def neg_g(self, P):
        if P is INF:
            return INF
        return (P[0], (-P[1]) % self.p)

    def mul_gt(self, a, b):
        return f2_mul(a, b, self.p)

    def inv_gt(self, a):
        return f2_inv(a, self.p)

    def div_gt(self, a, b):
        return f2_mul(a, f2_inv(b, self.p), self.p)

    def g_eq(self, P, Q):
        return P == Q

    def gt_eq(self, a, b):
        return a[0] % self.p == b[0] % self.p and a[1] % self.p == b[1] % self.p

    def in_g(self, P):
        """Full membership test: on curve and killed by the group order."""
        return _on_curve(P, self.p) and _affine_mul(P, self.r, self.p) is INF

    def in_gt(self, z):
        return f2_pow(z, self.r, self.p) == self.gt_one

    # -- sampling (uncounted; not part of any cost profile) ------------------

    def random_scalar(self, rng: SeededRng) -> int:
        return rng.scalar(self.r)

    def random_point(self, rng: SeededRng):
        while True:
            x = mpz(rng.int_below(int(self.p)))
            t = (x * x * x + x) % self.p
            if t == 0 or gmpy2.legendre(t, self.p) != 1:
                continue
            y = gmpy2.powmod(t, (self.p + 1) >> 2, self.p)
            P = _affine_mul((x, y), self.h, self.p)
            if P is not INF:
                return P

    def random_gt(self, rng: SeededRng):
        while True:
            z = (mpz(rng.int_below(int(self.p))), mpz(rng.int_below(int(self.p))))
            if z == (0, 0):
                continue
            w = self._final_exp(z)
            if w != self.gt_one:
                return w

    # -- serialization -------------------------------------------------------

    def ser_zp(self, k: int) -> bytes:
        return int(k % self.r).to_bytes(self.zp_bytes, "big")

    def de_zp(self, data: bytes) -> int:
        if len(data) != self.zp_bytes:
            raise SerializationError("bad scalar length")
        k = int.from_bytes(data, "big")
        if k >= self.r:
            raise SerializationError("scalar out of range")
        return k

    def ser_g(self, P) -> bytes:
        if P is INF:
            return b"\x00" * self.g_bytes
        return int(P[0]).to_bytes(self.fp_bytes, "big") + int(P[1]).to_bytes(
            self.fp_bytes, "big"
        )

    def de_g(self, data: bytes):
        if len(data) != self.g_bytes:
            raise SerializationError("bad point length")
        if data == b"\x00" * self.g_bytes:
            return INF
        x = mpz(int.from_bytes(data[: self.fp_bytes], "big"))
        y = mpz(int.from_bytes(data[self.fp_bytes:], "big"))
        if x >= self.p or y >= self.p:
            raise SerializationError("coordinate out of field")
        P = (x, y)
        if not _on_curve(P, self.p):
            raise SerializationError("point not on curve")
        return P

    def ser_gt(self, z) -> bytes:
        return int(z[0]).to_bytes(self.fp_bytes, "big") + int(z[1]).to_bytes(
            self.fp_bytes, "big"
        )

    def de_gt(self, data: bytes):
        if len(data) != self.gt_bytes:
            raise SerializationError("bad target-element length")
        a = mpz(int.from_bytes(data[: self.fp_bytes], "big"))
        b = mpz(int.from_bytes(data[self.fp_bytes:], "big"))
        if a >= self.p or b >= self.p:
            raise SerializationError("coefficient out of field")
        if a == 0 and b == 0:
            raise SerializationError("zero is not a field unit")
        return (a, b)

    # -- pairing internals ---------------------------------------------------

    def _final_exp(self, f):
        p = self.p
        f = f2_mul(f2_conj(f, p), f2_inv(f, p), p)      # f^(p-1)
        return f2_pow(f, self.h, p)                     # then ^((p+1)/r)

    def _tate(self, P, Q):
        """Tate pairing of P against the distortion image of Q."""
        if P is INF or Q is INF:
            return self.gt_one
        p = self.p
        # Distortion: lines get evaluated at (-xe, ye*i); the negation is
        # already folded into the la formulas below.
        xe = Q[0] % p
        ye = Q[1] % p
        X, Y, Z = mpz(P[0]), mpz(P[1]), mpz(1)
        xp, yp = mpz(P[0]), mpz(P[1])
        fa, fb = mpz(1), mpz(0)
        for bit in bin(self.r)[3:]:
            # tangent line at T, evaluated at (xe, ye*i), then T = 2T
            if Z != 0 and Y != 0:
                XX = X * X % p
                YY = Y * Y % p
                YYYY = YY * YY % p
                ZZ = Z * Z % p
                S = ((X + YY) ** 2 - XX - YYYY << 1) % p
                M = (3 * XX + ZZ * ZZ) % p
                X3 = (M * M - 2 * S) % p
                Z3 = ((Y + Z) ** 2 - YY - ZZ) % p
                Y3 = (M * (S - X3) - 8 * YYYY) % p
                la = (M * (xe * ZZ % p + X) - 2 * YY) % p
                lb = Z3 * ZZ % p * ye % p
                # f = f^2 * line
                fa, fb = f2_sqr((fa, fb), p)
                t1 = fa * la % p
                t2 = fb * lb % p
                t3 = (fa + fb) * (la + lb) % p
                fa, fb = (t1 - t2) % p, (t3 - t1 - t2) % p
                X, Y, Z = X3, Y3, Z3
            else:
                fa, fb = f2_sqr((fa, fb), p)
            if bit == "1" and Z != 0:
                # chord line through T and P, evaluated at (xe, ye*i)
                Z1Z1 = Z * Z % p
                U2 = xp * Z1Z1 % p
                S2 = yp * Z * Z1Z1 % p
                H = (U2 - X) % p
                if H == 0:
                    if S2 == Y % p:
                        raise ArithmeticError("unexpected doubling in chord step")
                    # T = -P: vertical chord lies in F_p and cancels
                    X, Y, Z = mpz(1), mpz(1), mpz(0)
                else:
                    HH = H * H % p
                    I = 4 * HH % p
                    J = H * I % p
                    rr = (S2 - Y << 1) % p
                    V = X * I % p
                    X3 = (rr * rr - J - 2 * V) % p
                    Y3 = (rr * (V - X3) - 2 * Y * J) % p
                    Z3 = ((Z + H) ** 2 - Z1Z1 - HH) % p
                    la = (rr * ((xe + xp) % p) - yp * Z3) % p
                    lb = Z3 * ye % p
                    t1 = fa * la % p
                    t2 = fb * lb % p
                    t3 = (fa + fb) * (la + lb) % p
                    fa, fb = (t1 - t2) % p, (t3 - t1 - t2) % p
                    X, Y, Z = X3, Y3, Z3
            elif bit == "1":
                X, Y, Z = mpz(xp), mpz(yp), mpz(1)
        return self._final_exp((fa, fb))


def init_group(security_level: int, seed: bytes, counter: OpCounter | None = None) -> BilinearGroup:
    """Deterministically generate group parameters from a seed.

    The same (level, seed) pair always yields byte-identical parameters.
    """
    if security_level not in SUPPORTED_LEVELS:
        raise ConfigurationError(
            "unsupported security level %r (supported: %s)"
            % (security_level, SUPPORTED_LEVELS)
        )
    if not seed:
        raise ConfigurationError("seed must be nonempty")
    rng = SeededRng(seed, tag=b"group-gen")

    # 160-bit prime group order
    while True:
        cand = (1 << 159) | rng.int_below(1 << 159) | 1
        r = int(gmpy2.next_prime(cand))
        if r.bit_length() == 160:
            break

    # base field prime p = r*h - 1 with h divisible by 4 (gives p ≡ 3 mod 4)
    lo = ((1 << (security_level - 1)) + 1 + r) // r
    hi = (1 << security_level) // r
    while True:
        h = rng.int_below(hi - lo) + lo
        h -= h % 4
        if h < lo:
            continue
        p = r * h - 1
        if p.bit_length() == security_level and gmpy2.is_prime(p):
            break

    # generator: random curve point pushed into the order-r subgroup
    pz = mpz(p)
    while True:
        x = mpz(rng.int_below(p))
        t = (x * x * x + x) % pz
        if t == 0 or gmpy2.legendre(t, pz) != 1:
            continue
        y = gmpy2.powmod(t, (pz + 1) >> 2, pz)
        g = _affine_mul((x, y), h, pz)
        if g is not INF and _affine_mul(g, r, pz) is INF:
            break

    return BilinearGroup(
        security_level=security_level,
        p=p,
        r=r,
        h=h,
        g=g,
        counter=counter or OpCounter(),
    )
