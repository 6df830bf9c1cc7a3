"""Block-diagonal linear cocycles and their spectral certificates.

A cocycle is a two-sided sequence of invertible block-diagonal maps
``L_n = diag(A_n, B_n, C_n)``; a certificate is a per-index sextuple of
log-scale exponents sandwiching the block norms and conorms.  The index
range Z is realized either by a constant sequence, a periodic one, or a
finite window with constant extension.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, SingularMatrix
from .linalg import conorm, operator_norm, solve_small

_STRICT_SLACK = 1e-12


@dataclass(frozen=True)
class BlockDims:
    """Dimensions of the stable / center / unstable blocks."""

    s_dim: int
    c_dim: int
    u_dim: int

    def __post_init__(self):
        for name in ("s_dim", "c_dim", "u_dim"):
            if getattr(self, name) < 1:
                raise DimensionMismatch(f"{name} must be >= 1, all blocks non-trivial")

    @property
    def k(self) -> int:
        return self.s_dim + self.c_dim + self.u_dim

    def slices(self):
        s, c = self.s_dim, self.c_dim
        return slice(0, s), slice(s, s + c), slice(s + c, self.k)


class CocycleSequence:
    """Sequence of block-diagonal linear maps with a realized index range.

    ``mode`` is one of ``constant``, ``periodic``, ``window``; for a
    window, indices outside ``[n_min, n_min + len - 1]`` are clamped.
    """

    def __init__(self, dims: BlockDims, blocks, mode: str = "constant",
                 n_min: int = 0):
        if mode not in ("constant", "periodic", "window"):
            raise ValueError(f"unknown mode {mode!r}")
        self.dims = dims
        self.mode = mode
        self.n_min = int(n_min)
        triples = []
        for a, b, c in blocks:
            a = np.array(a, dtype=float)
            b = np.array(b, dtype=float)
            c = np.array(c, dtype=float)
            if a.shape != (dims.s_dim, dims.s_dim) or \
               b.shape != (dims.c_dim, dims.c_dim) or \
               c.shape != (dims.u_dim, dims.u_dim):
                raise DimensionMismatch("block shapes disagree with dims")
            for m in (a, b, c):
                if abs(np.linalg.det(m)) <= 1e-12:
                    raise SingularMatrix("block determinant below 1e-12")
            triples.append((a, b, c))
        if mode == "constant" and len(triples) != 1:
            raise ValueError("constant mode takes exactly one block triple")
        if not triples:
            raise ValueError("at least one block triple required")
        self._triples = triples
        self._inv_cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._triples)

    @property
    def indices(self):
        """Representative indices (one period / window / singleton)."""
        return range(self.n_min, self.n_min + len(self._triples))

    def _slot(self, n: int) -> int:
        if self.mode == "constant":
            return 0
        if self.mode == "periodic":
            return (n - self.n_min) % len(self._triples)
        return min(max(n - self.n_min, 0), len(self._triples) - 1)

    def blocks_at(self, n: int):
        return self._triples[self._slot(n)]

    def matrix(self, n: int) -> np.ndarray:
        a, b, c = self.blocks_at(n)
        k = self.dims.k
        out = np.zeros((k, k))
        ss, cs, us = self.dims.slices()
        out[ss, ss] = a
        out[cs, cs] = b
        out[us, us] = c
        return out

    def inverse_matrix(self, n: int) -> np.ndarray:
        slot = self._slot(n)
        if slot not in self._inv_cache:
            mat = self.matrix(self.n_min + slot if self.mode != "periodic"
                              else self.n_min + slot)
            self._inv_cache[slot] = solve_small(mat, np.eye(self.dims.k))
        return self._inv_cache[slot]


def compose_linear(cocycle: CocycleSequence, n: int, j: int) -> np.ndarray:
    """The composed linear map ``L^(j)_n`` with the paper's index convention.

    ``j = 0`` is the identity; negative ``j`` composes inverses.  Built by
    sequential left multiplication so that the cocycle law
    ``compose(n, j+1) == L_{n+j} @ compose(n, j)`` holds bitwise.
    """
    k = cocycle.dims.k
    acc = np.eye(k)
    if j > 0:
        for i in range(j):
            acc = cocycle.matrix(n + i) @ acc
    elif j < 0:
        for i in range(1, -j + 1):
            acc = cocycle.inverse_matrix(n - i) @ acc
    return acc


def _as_index_array(value, count: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(count, float(arr[0]))
    if arr.size != count:
        raise DimensionMismatch("certificate length disagrees with cocycle")
    return arr


@dataclass
class SpectralCertificate:
    """Per-index log-scale exponent sextuple plus the global bound mu."""

    eta_p: np.ndarray
    kappa_p: np.ndarray
    gamma_p: np.ndarray
    gamma_hat_p: np.ndarray
    kappa_hat_p: np.ndarray
    eta_hat_p: np.ndarray
    mu: float

    @classmethod
    def from_values(cls, eta_p, kappa_p, gamma_p, gamma_hat_p, kappa_hat_p,
                    eta_hat_p, mu, count: int = 1) -> "SpectralCertificate":
        return cls(
            _as_index_array(eta_p, count), _as_index_array(kappa_p, count),
            _as_index_array(gamma_p, count), _as_index_array(gamma_hat_p, count),
            _as_index_array(kappa_hat_p, count), _as_index_array(eta_hat_p, count),
            float(mu))

    def __len__(self) -> int:
        return self.eta_p.size

    @property
    def gap(self) -> float:
        """inf over n of {|kappa'-gamma'|, kappa_hat'-gamma_hat', |kappa'|}."""
        return float(min(
            np.min(np.abs(self.kappa_p - self.gamma_p)),
            np.min(self.kappa_hat_p - self.gamma_hat_p),
            np.min(np.abs(self.kappa_p)),
        ))

    def ordering_ok(self) -> bool:
        strict = lambda a, b: bool(np.all(b - a > _STRICT_SLACK))
        loose = lambda a, b: bool(np.all(b - a >= -_STRICT_SLACK))
        mu = self.mu
        return (strict(np.full_like(self.eta_p, -mu), self.eta_p)
                and strict(self.eta_p, self.kappa_p)
                and strict(self.kappa_p, self.gamma_p)
                and loose(self.gamma_p, self.gamma_hat_p)
                and strict(self.gamma_hat_p, self.kappa_hat_p)
                and strict(self.kappa_hat_p, self.eta_hat_p)
                and strict(self.eta_hat_p, np.full_like(self.eta_p, mu)))

    def validate(self) -> None:
        if not self.ordering_ok():
            raise ValueError("certificate ordering violated")
        if not np.max(self.kappa_p) < 0.0:
            raise ValueError("sup kappa' must be negative")
        if not self.gap > 0.0:
            raise ValueError("certificate gap must be positive")

    def to_dict(self) -> dict:
        return {
            "eta_prime": self.eta_p.tolist(),
            "kappa_prime": self.kappa_p.tolist(),
            "gamma_prime": self.gamma_p.tolist(),
            "gamma_hat_prime": self.gamma_hat_p.tolist(),
            "kappa_hat_prime": self.kappa_hat_p.tolist(),
            "eta_hat_prime": self.eta_hat_p.tolist(),
            "mu": self.mu,
        }


def certificate_from_cocycle(cocycle: CocycleSequence, slack: float = 1e-6,
                             mu: float | None = None) -> SpectralCertificate:
    """Certificate generated from the measured block norms with symmetric slack."""
    rows = []
    for n in cocycle.indices:
        a, b, c = cocycle.blocks_at(n)
        rows.append((np.log(conorm(a)) - slack, np.log(operator_norm(a)) + slack,
                     np.log(conorm(b)) - slack, np.log(operator_norm(b)) + slack,
                     np.log(conorm(c)) - slack, np.log(operator_norm(c)) + slack))
    arr = np.array(rows)
    if mu is None:
        mu = float(np.max(np.abs(arr))) + 1.0
    return SpectralCertificate(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3],
                               arr[:, 4], arr[:, 5], float(mu))


@dataclass
class CertificateReport:
    """Per-index measurements and verdicts for a certificate check."""

    rows: list = field(default_factory=list)
    ordering_ok: bool = True
    negativity_ok: bool = True
    gap_ok: bool = True

    @property
    def overall(self) -> bool:
        return (self.ordering_ok and self.negativity_ok and self.gap_ok
                and all(r["item1"] and r["item2"] and r["item3"]
                        for r in self.rows))

    def to_json(self) -> str:
        return json.dumps({
            "overall": self.overall,
            "ordering_ok": self.ordering_ok,
            "negativity_ok": self.negativity_ok,
            "gap_ok": self.gap_ok,
            "rows": self.rows,
        }, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["n", "conorm_A", "norm_A", "conorm_B", "norm_B",
                  "conorm_C", "norm_C", "item1", "item2", "item3"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow({k: r[k] for k in fields})
        return buf.getvalue()


def verify_certificate(cocycle: CocycleSequence,
                       cert: SpectralCertificate) -> CertificateReport:
    """Check the three sandwich inequalities plus the certificate invariants."""
    if len(cert) != len(cocycle):
        raise DimensionMismatch("certificate and cocycle index ranges differ")
    report = CertificateReport()
    tol = 1e-12
    for slot, n in enumerate(cocycle.indices):
        a, b, c = cocycle.blocks_at(n)
        ma, na = conorm(a), operator_norm(a)
        mb, nb = conorm(b), operator_norm(b)
        mc, nc = conorm(c), operator_norm(c)
        sandwich = lambda lo, m, nn, hi: (
            m >= lo - tol * max(1.0, lo) and nn <= hi + tol * max(1.0, hi)
            and m <= nn + tol)
        report.rows.append({
            "n": n,
            "conorm_A": ma, "norm_A": na,
            "conorm_B": mb, "norm_B": nb,
            "conorm_C": mc, "norm_C": nc,
            "item1": sandwich(np.exp(cert.eta_p[slot]), ma, na,
                              np.exp(cert.kappa_p[slot])),
            "item2": sandwich(np.exp(cert.gamma_p[slot]), mb, nb,
                              np.exp(cert.gamma_hat_p[slot])),
            "item3": sandwich(np.exp(cert.kappa_hat_p[slot]), mc, nc,
                              np.exp(cert.eta_hat_p[slot])),
        })
    report.ordering_ok = cert.ordering_ok()
    report.negativity_ok = bool(np.max(cert.kappa_p) < 0.0)
    report.gap_ok = cert.gap > 0.0
    return report


def load_cocycle_json(doc) -> tuple[CocycleSequence, SpectralCertificate | None]:
    """Build a cocycle (and optional certificate) from a JSON document."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    d = doc["dims"]
    dims = BlockDims(int(d["s"]), int(d["c"]), int(d["u"]))
    blocks = [(blk["A"], blk["B"], blk["C"]) for blk in doc["blocks"]]
    cocycle = CocycleSequence(dims, blocks, mode=doc.get("mode", "constant"),
                              n_min=int(doc.get("n_min", 0)))
    cert = None
    if "certificate" in doc and doc["certificate"] is not None:
        cd = doc["certificate"]
        cert = SpectralCertificate.from_values(
            cd["eta_prime"], cd["kappa_prime"], cd["gamma_prime"],
            cd["gamma_hat_prime"], cd["kappa_hat_prime"], cd["eta_hat_prime"],
            cd["mu"], count=len(cocycle))
    return cocycle, cert
