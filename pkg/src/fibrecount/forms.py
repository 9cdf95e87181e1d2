"""Sparse homogeneous integer forms and problem instances.

A Form is a list of (coefficient, exponent-vector) monomials.  An Instance
bundles the pair (f1, f2) that defines a conic bundle over the hypersurface
f2 = 0: the fibre above t is the conic x0^2 + x1^2 = f1(t) * x2^2.

All evaluation is exact integer arithmetic.  Batch evaluation uses numpy
int64 and refuses loudly when intermediate values could overflow.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

INT64_SAFE = 2**62


class FormError(ValueError):
    """Malformed form or instance data."""


@dataclass(frozen=True)
class Form:
    """Homogeneous polynomial with integer coefficients.

    Attributes:
        n_vars: number of variables
        degree: common total degree of every monomial
        monomials: tuple of (coeff, exps) with exps a tuple of n_vars
            non-negative integers summing to degree
    """

    n_vars: int
    degree: int
    monomials: tuple

    def __post_init__(self):
        if self.n_vars < 1:
            raise FormError("n_vars must be positive")
        if self.degree < 1:
            raise FormError("degree must be positive")
        seen = set()
        for coeff, exps in self.monomials:
            if coeff == 0:
                raise FormError("zero coefficient in monomial list")
            if len(exps) != self.n_vars:
                raise FormError(
                    f"exponent vector {exps} has length {len(exps)}, "
                    f"expected {self.n_vars}")
            if any(e < 0 for e in exps):
                raise FormError(f"negative exponent in {exps}")
            if sum(exps) != self.degree:
                raise FormError(
                    f"monomial {exps} has total degree {sum(exps)}, "
                    f"expected {self.degree} (form must be homogeneous)")
            if exps in seen:
                raise FormError(f"duplicate exponent vector {exps}")
            seen.add(exps)
        if not self.monomials:
            raise FormError("form must have at least one monomial")

    def coeff_norm(self) -> int:
        """Sum of absolute coefficients; bounds |f| on the unit box."""
        return sum(abs(c) for c, _ in self.monomials)

    def evaluate(self, x) -> int:
        """Exact value f(x) for an integer vector x."""
        if len(x) != self.n_vars:
            raise FormError(f"point has {len(x)} coordinates, expected {self.n_vars}")
        total = 0
        for coeff, exps in self.monomials:
            term = coeff
            for xi, e in zip(x, exps):
                if e:
                    term *= int(xi) ** e
            total += term
        return total

    def evaluate_mod(self, x, q: int) -> int:
        """f(x) mod q with all intermediates reduced mod q."""
        if q < 1:
            raise FormError("modulus must be positive")
        total = 0
        for coeff, exps in self.monomials:
            term = coeff % q
            for xi, e in zip(x, exps):
                for _ in range(e):
                    term = (term * (int(xi) % q)) % q
            total = (total + term) % q
        return total

    def evaluate_batch(self, cols, bound: int) -> np.ndarray:
        """Exact values over many points, int64.

        Args:
            cols: sequence of n_vars int64 arrays (one per coordinate),
                broadcastable to a common shape
            bound: max absolute coordinate value, used to prove no overflow

        Raises:
            FormError: if coeff_norm * bound**degree could exceed int64
        """
        if self.coeff_norm() * (max(bound, 1) ** self.degree) >= INT64_SAFE:
            raise FormError(
                f"values of |f| may reach {self.coeff_norm() * bound**self.degree}, "
                "beyond the int64 fast path; reduce the box or evaluate exactly")
        shape = np.broadcast_shapes(*(np.shape(c) for c in cols))
        total = np.zeros(shape, dtype=np.int64)
        for coeff, exps in self.monomials:
            term = np.asarray(coeff, dtype=np.int64)
            for c, e in zip(cols, exps):
                for _ in range(e):
                    term = term * c
            total = total + term
        return total

    def evaluate_batch_mod(self, cols, q: int) -> np.ndarray:
        """f mod q over many points.

        Inputs are reduced mod q once per coordinate; when the exact value
        over reduced inputs provably fits int64 the per-step reductions are
        skipped, otherwise every multiply reduces.
        """
        if q < 1:
            raise FormError("modulus must be positive")
        shape = np.broadcast_shapes(*(np.shape(c) for c in cols))
        cms = [np.asarray(c, dtype=np.int64) % q for c in cols]
        total = np.zeros(shape, dtype=np.int64)
        if self.coeff_norm() * max(q - 1, 1) ** self.degree < INT64_SAFE:
            for coeff, exps in self.monomials:
                term = np.asarray(coeff % q, dtype=np.int64)
                for cm, e in zip(cms, exps):
                    for _ in range(e):
                        term = term * cm
                total = total + term
            return total % q
        for coeff, exps in self.monomials:
            term = np.asarray(coeff % q, dtype=np.int64)
            for cm, e in zip(cms, exps):
                for _ in range(e):
                    term = (term * cm) % q
            total = (total + term) % q
        return total

    def variable_support(self):
        """Set of variable indices that actually occur."""
        used = set()
        for _, exps in self.monomials:
            used.update(i for i, e in enumerate(exps) if e)
        return used

    def to_records(self):
        return [{"coeff": c, "exps": list(e)} for c, e in self.monomials]


def form_from_records(records, n_vars: int) -> Form:
    """Build a Form from [{"coeff": int, "exps": [int; n]}] records."""
    monos = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or set(rec) != {"coeff", "exps"}:
            raise FormError(
                f"monomial {i}: expected exactly the fields 'coeff' and 'exps', "
                f"got {sorted(rec) if isinstance(rec, dict) else type(rec).__name__}")
        coeff = rec["coeff"]
        exps = rec["exps"]
        if not isinstance(coeff, int):
            raise FormError(f"monomial {i}: coeff must be an integer")
        if not (isinstance(exps, list) and all(isinstance(e, int) for e in exps)):
            raise FormError(f"monomial {i}: exps must be a list of integers")
        monos.append((coeff, tuple(exps)))
    if not monos:
        raise FormError("form must have at least one monomial")
    degree = sum(monos[0][1])
    return Form(n_vars=n_vars, degree=degree, monomials=tuple(monos))


def default_box_max(f: Form) -> int:
    """Upper bound for max f on [-1,1]^n: the coefficient 1-norm."""
    return f.coeff_norm()


@dataclass(frozen=True)
class Instance:
    """A pair of forms defining the conic bundle to be counted.

    box_max_m is any upper bound for max f1 on [-1,1]^n; the default is the
    coefficient 1-norm.  sigma_bound, when supplied, is an upper bound for
    the dimension of the rank-<=1 locus of the joint Jacobian and feeds the
    truncation exponent lambda0; it is never computed here.
    """

    f1: Form
    f2: Form
    n: int
    d: int
    box_max_m: int
    label: str = "instance"
    birch_condition_asserted: bool = False
    sigma_bound: int | None = None

    def __post_init__(self):
        if self.d % 2 != 0:
            raise FormError("degree must be even")
        if self.f1.degree != self.d or self.f2.degree != self.d:
            raise FormError(
                f"both forms must have degree d={self.d}; "
                f"got {self.f1.degree} and {self.f2.degree}")
        if self.f1.n_vars != self.n or self.f2.n_vars != self.n:
            raise FormError(
                f"both forms must have n={self.n} variables; "
                f"got {self.f1.n_vars} and {self.f2.n_vars}")
        if self.box_max_m < 1:
            raise FormError("box_max_m must be positive")

    def lambda0(self) -> float | None:
        """Truncation exponent from the sigma bound; None if no bound given.

        Negative values mean the tail bound carries no decay at this (n, d).
        """
        if self.sigma_bound is None:
            return None
        k = (self.n - self.sigma_bound) / (2**self.d * (self.d - 1))
        return 0.5 * min(1.0, 0.5 * (k - 3.0))

    def config_dict(self) -> dict:
        cfg = {
            "label": self.label,
            "n": self.n,
            "d": self.d,
            "f1": self.f1.to_records(),
            "f2": self.f2.to_records(),
            "box_max_m": self.box_max_m,
        }
        if self.birch_condition_asserted:
            cfg["birch_condition_asserted"] = True
        if self.sigma_bound is not None:
            cfg["sigma_bound"] = self.sigma_bound
        return cfg

    def config_hash(self) -> str:
        blob = json.dumps(self.config_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_ALLOWED_KEYS = {"label", "n", "d", "f1", "f2", "box_max_m", "sigma_bound",
                 "birch_condition_asserted"}


def parse_instance(config) -> Instance:
    """Validate a config mapping (or JSON text) into an Instance.

    The schema has required fields label, n, d, f1, f2; each form is a list
    of {"coeff": int, "exps": [int; n]} records; optional box_max_m,
    sigma_bound, birch_condition_asserted.  Unknown fields are rejected.
    """
    if isinstance(config, (str, bytes)):
        try:
            config = json.loads(config)
        except json.JSONDecodeError as exc:
            raise FormError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise FormError("config must be a JSON object")
    unknown = set(config) - _ALLOWED_KEYS
    if unknown:
        raise FormError(f"unknown config fields: {sorted(unknown)}")
    for key in ("label", "n", "d", "f1", "f2"):
        if key not in config:
            raise FormError(f"missing required config field '{key}'")
    n = config["n"]
    d = config["d"]
    if not (isinstance(n, int) and n >= 1):
        raise FormError("n must be a positive integer")
    if not (isinstance(d, int) and d >= 2 and d % 2 == 0):
        raise FormError("degree must be even (and >= 2)")
    f1 = form_from_records(config["f1"], n)
    f2 = form_from_records(config["f2"], n)
    box = config.get("box_max_m", default_box_max(f1))
    if not (isinstance(box, int) and box >= 1):
        raise FormError("box_max_m must be a positive integer")
    sigma = config.get("sigma_bound")
    if sigma is not None and not isinstance(sigma, int):
        raise FormError("sigma_bound must be an integer")
    return Instance(
        f1=f1, f2=f2, n=n, d=d, box_max_m=box,
        label=str(config["label"]),
        birch_condition_asserted=bool(config.get("birch_condition_asserted", False)),
        sigma_bound=sigma,
    )


def load_instance(path) -> Instance:
    """Read and validate an instance config from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_instance(text)
