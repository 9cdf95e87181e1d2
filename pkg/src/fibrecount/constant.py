"""Assembly of the leading constant by two routes, and the count prediction.

Route 'singular_series':
    c = (J / sqrt(d)) * (sqrt(2) / zeta(n-d)) * (Re L / 2) * C0
with L the singular series and C0 the Euler product over p = 3 mod 4 of
(1 - 1/p^2)^(1/2).

Route 'tamagawa':
    c = (1 / sqrt(pi)) * (J / sqrt(d)) * prod_p (tau_p / lambda_p).

The two agree as exact limits.  At truncated level the comparison is only
meaningful when both sides carry the same prime content, which is why the
default pipeline evaluates the singular series through its local
factorization; the raw q-sum value is reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .arith import ArithConstants, DomainError
from .archimedean import McEstimate
from .expsums import TruncatedValue
from .forms import Instance

IM_TOLERANCE = 1e-6


def zeta_direct(s: float, tol: float = 1e-12) -> float:
    """Riemann zeta by direct series with an integral tail bound."""
    if s <= 1:
        raise DomainError("need s > 1")
    K = 16
    while True:
        # Euler-Maclaurin: tail = K^(1-s)/(s-1) - K^(-s)/2 + s K^(-s-1)/12 + R,
        # |R| <= s(s+1)(s+2) K^(-s-3)/720
        rem = s * (s + 1) * (s + 2) * K ** (-s - 3) / 720.0
        if rem < tol:
            break
        K *= 2
    head = sum(k ** (-s) for k in range(1, K + 1))
    tail = K ** (1 - s) / (s - 1) - K ** (-s) / 2.0 + s * K ** (-s - 1) / 12.0
    return head + tail


def error_exponent(d: int) -> float:
    """Exponent loss in the log for even degree d: 1/(5(d-1)2^(d+5))."""
    if d < 2 or d % 2 != 0:
        raise DomainError("degree must be even and at least 2")
    return 1.0 / (5 * (d - 1) * 2 ** (d + 5))


@dataclass
class ConstantBreakdown:
    """All ingredients of the leading constant for one route."""

    route: str
    J: float
    C0: float
    L_phi: complex
    local_product: float
    zeta_ndmd: float
    d: int
    c_phi: float
    combined_error: float
    epsilon_d: float
    error_kind: str = "heuristic"
    warnings: list = field(default_factory=list)

    @staticmethod
    def csv_header() -> str:
        return ("route,J,C0,L_re,L_im,local_product,zeta_ndmd,d,c_phi,"
                "combined_error,epsilon_d,error_kind")

    def csv_row(self) -> str:
        return (f"{self.route},{self.J:.10g},{self.C0:.10g},"
                f"{self.L_phi.real:.10g},{self.L_phi.imag:.3g},"
                f"{self.local_product:.10g},{self.zeta_ndmd:.10g},{self.d},"
                f"{self.c_phi:.10g},{self.combined_error:.4g},"
                f"{self.epsilon_d:.6g},{self.error_kind}")


def leading_constant_series(inst: Instance, J: McEstimate, L: TruncatedValue,
                            C0: ArithConstants) -> ConstantBreakdown:
    """Assemble the constant from the singular-series route.

    Requires n - d >= 2 so zeta(n-d) is finite.  First-order error
    propagation: relative errors of the inputs add.
    """
    nd = inst.n - inst.d
    if nd < 2:
        raise DomainError(f"n - d = {nd} < 2: zeta(n-d) undefined or divergent")
    warnings = []
    if abs(L.value.imag) > IM_TOLERANCE * max(abs(L.value.real), 1.0):
        warnings.append(
            f"imaginary part of the singular series ({L.value.imag:.3g}) "
            "beyond tolerance; conjugate pairing may be broken")
    z = zeta_direct(nd)
    jv = float(J.value.real)
    c = (jv / math.sqrt(inst.d)) * (math.sqrt(2.0) / z) \
        * (L.value.real / 2.0) * C0.c0
    rel = 0.0
    if jv != 0:
        rel += abs(J.std_error / jv)
    if L.value.real != 0:
        rel += abs(L.error_bound / L.value.real)
    rel += C0.c0_error / C0.c0
    kind = "rigorous" if (L.error_kind == "rigorous"
                          and J.std_error == 0.0) else "heuristic"
    return ConstantBreakdown(
        route="singular_series", J=jv, C0=C0.c0, L_phi=L.value,
        local_product=float("nan"), zeta_ndmd=z, d=inst.d, c_phi=c,
        combined_error=abs(c) * rel, epsilon_d=error_exponent(inst.d),
        error_kind=kind, warnings=warnings)


def leading_constant_tamagawa(inst: Instance, J: McEstimate,
                              prod: TruncatedValue) -> ConstantBreakdown:
    """Assemble the constant from the local-product route."""
    jv = float(J.value.real)
    pv = float(prod.value.real)
    c = (1.0 / math.sqrt(math.pi)) * (jv / math.sqrt(inst.d)) * pv
    rel = 0.0
    if jv != 0:
        rel += abs(J.std_error / jv)
    if pv != 0:
        rel += abs(prod.error_bound / pv)
    return ConstantBreakdown(
        route="tamagawa", J=jv, C0=float("nan"), L_phi=complex(float("nan")),
        local_product=pv, zeta_ndmd=float("nan"), d=inst.d, c_phi=c,
        combined_error=abs(c) * rel, epsilon_d=error_exponent(inst.d),
        error_kind="heuristic", warnings=[])


def predicted_count(c: ConstantBreakdown, inst: Instance, t: float) -> float:
    """Predicted number of soluble fibres of height <= t:
    c * t^(n-d) / sqrt(log t)."""
    if t < 2:
        raise DomainError("t must be at least 2 (log t too small below)")
    return c.c_phi * t ** (inst.n - inst.d) / math.sqrt(math.log(t))


def route_agreement(c1: ConstantBreakdown, c2: ConstantBreakdown) -> dict:
    """Symmetric relative gap between the two route values."""
    mean = 0.5 * (abs(c1.c_phi) + abs(c2.c_phi))
    gap = abs(c1.c_phi - c2.c_phi)
    return {
        "c_route1": c1.c_phi,
        "c_route2": c2.c_phi,
        "gap": gap,
        "relative_gap": gap / mean if mean else float("inf"),
        "combined_error": c1.combined_error + c2.combined_error,
    }
