"""Attack targets with known ground truth.

Planted targets embed, for each secret variable slot, a public monomial of
multiplicity deg-1 times an independent secret linear form, so preprocessing
is guaranteed a full-rank record set. The toy cipher is a deliberately weak
keyed map (affine layer, key injection, one quadratic mixing step per round)
used for integration testing, not for cryptographic claims.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Sequence

from .attack import BlackBox
from .field import FieldElement, FieldSpec, parse_field_spec, prime_field
from .poly import Monomial, MultiPoly


class TargetError(ValueError):
    pass


class CountingOracle:
    """Public-input oracle for the online phase; counts its invocations."""

    def __init__(self, fn):
        self._fn = fn
        self.evaluations = 0

    def __call__(self, public):
        self.evaluations += 1
        return self._fn(public)


def _compile_terms(poly: MultiPoly) -> list[tuple[int, list[tuple[int, int]]]]:
    return [
        (int(c), [(i, e) for i, e in enumerate(mono) if e])
        for mono, c in poly._terms.items()
    ]


def _int_evaluator(poly: MultiPoly):
    """Plain-integer evaluation kernel for prime-field polynomials."""
    p = poly.spec.p
    compiled = _compile_terms(poly)

    def evaluate(vals: list[int]) -> int:
        total = 0
        for c, factors in compiled:
            term = c
            for i, e in factors:
                v = vals[i]
                if v == 0:
                    term = 0
                    break
                if e == 1:
                    term = term * v
                else:
                    term = term * pow(v, e, p)
            total += term
        return total % p

    return evaluate


# ---------------------------------------------------------------------------
# planted polynomials


@dataclass(frozen=True)
class PlantedConfig:
    p: int
    n_pub: int
    n_sec: int
    total_degree: int
    extra_terms: int
    seed: int


class PlantedTarget:
    """A known polynomial f(public, secret) plus the key the online phase
    must recover. Black-box answers equal symbolic evaluation everywhere."""

    def __init__(
        self,
        config: PlantedConfig,
        poly: MultiPoly,
        key: tuple[FieldElement, ...],
        planted_terms: tuple[Monomial, ...],
    ):
        self.config = config
        self.spec = poly.spec
        self.poly = poly
        self.key = key
        self.planted_terms = planted_terms
        self._eval = _int_evaluator(poly)

    @property
    def n_pub(self) -> int:
        return self.config.n_pub

    @property
    def n_sec(self) -> int:
        return self.config.n_sec

    @property
    def suggested_max_multiplicity(self) -> int:
        return self.config.total_degree - 1

    def blackbox(self) -> BlackBox:
        spec = self.spec
        evaluate = self._eval

        def fn(public, secret):
            vals = [int(v) for v in public] + [int(x) for x in secret]
            return spec.element(evaluate(vals))

        return BlackBox(spec, self.n_pub, self.n_sec, fn)

    def online_oracle(self) -> CountingOracle:
        spec = self.spec
        evaluate = self._eval
        key_vals = [int(x) for x in self.key]

        def fn(public):
            vals = [int(v) for v in public] + key_vals
            return spec.element(evaluate(vals))

        return CountingOracle(fn)


def _public_monomials(n_pub: int, n: int, degree: int, cap: int):
    """All monomials over the public block with the exact total degree."""
    out = []
    for exps in itertools.product(range(cap + 1), repeat=n_pub):
        if sum(exps) == degree:
            out.append(tuple(exps) + (0,) * (n - n_pub))
    return out


def make_planted(
    p: int,
    n_pub: int,
    n_sec: int,
    total_degree: int,
    extra_terms: int,
    seed: int,
) -> PlantedTarget:
    """Seed-deterministic planted target; raises on infeasible profiles."""
    spec = prime_field(p)
    if n_pub < 1:
        raise TargetError("need at least one public variable for a cube")
    if n_sec < 1:
        raise TargetError("need at least one secret variable")
    if total_degree < 2:
        raise TargetError("total degree must be at least 2")
    cap = p - 1
    if total_degree - 1 > n_pub * cap:
        raise TargetError("public block cannot carry multiplicity deg-1")
    n = n_pub + n_sec
    anchors = _public_monomials(n_pub, n, total_degree - 1, cap)
    if len(anchors) < n_sec:
        raise TargetError(
            f"only {len(anchors)} public terms of degree {total_degree - 1}; "
            f"need {n_sec}"
        )
    rng = random.Random(seed)
    chosen = rng.sample(anchors, n_sec)
    # secret linear forms with an invertible coefficient matrix
    while True:
        matrix = [[rng.randrange(p) for _ in range(n_sec)] for _ in range(n_sec)]
        if _rank_mod_p(matrix, p) == n_sec:
            break
    terms: dict[Monomial, FieldElement] = {}
    for anchor, row in zip(chosen, matrix):
        for j, coeff in enumerate(row):
            if coeff == 0:
                continue
            mono = list(anchor)
            mono[n_pub + j] = 1
            key = tuple(mono)
            terms[key] = terms.get(key, spec.zero) + spec.element(coeff)
    placed = 0
    while placed < extra_terms:
        mono = [0] * n
        budget = rng.randint(0, total_degree)
        for _ in range(budget):
            slots = [i for i in range(n) if mono[i] < cap]
            if not slots:
                break
            mono[rng.choice(slots)] += 1
        key = tuple(mono)
        if any(
            all(e >= a for e, a in zip(key, anchor)) for anchor in chosen
        ):
            continue  # anchors must keep their exact quotient forms
        terms[key] = spec.random_element(rng, nonzero=True)
        placed += 1
    key = tuple(spec.random_element(rng) for _ in range(n_sec))
    config = PlantedConfig(p, n_pub, n_sec, total_degree, extra_terms, seed)
    poly = MultiPoly(spec, n, terms)
    planted = tuple(m[:n_pub] for m in chosen)
    return PlantedTarget(config, poly, key, planted)


def _rank_mod_p(matrix: list[list[int]], p: int) -> int:
    rows = [row[:] for row in matrix]
    rank = 0
    width = len(rows[0]) if rows else 0
    for col in range(width):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] % p), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] % p:
                c = rows[r][col]
                rows[r] = [(a - c * b) % p for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# toy cipher


@dataclass(frozen=True)
class ToyCipherParams:
    p: int
    rounds: int
    width: int
    n_pub: int
    n_sec: int
    seed: int


class ToyCipher:
    """Keyed toy map over GF(p): load publics, add a whitening key layer,
    then per round an affine mix with key injection followed by one
    quadratic step. Output degree stays below 2^rounds + 1."""

    def __init__(self, params: ToyCipherParams):
        if params.width < 1 or params.rounds < 0:
            raise TargetError("bad toy cipher geometry")
        if params.n_pub < 1 or params.n_sec < 1:
            raise TargetError("need public and secret inputs")
        self.params = params
        self.spec = prime_field(params.p)
        rng = random.Random(params.seed)
        p, w = params.p, params.width
        self.whiten = self._key_matrix(rng, w, params.n_sec, ensure_row0=True)
        self.whiten_const = [rng.randrange(p) for _ in range(w)]
        self.round_mix = []
        self.round_key = []
        self.round_const = []
        for _ in range(params.rounds):
            self.round_mix.append(
                [[rng.randrange(p) for _ in range(w)] for _ in range(w)]
            )
            self.round_key.append(self._key_matrix(rng, w, params.n_sec))
            self.round_const.append([rng.randrange(p) for _ in range(w)])
        self.key = tuple(
            self.spec.element(rng.randrange(p)) for _ in range(params.n_sec)
        )

    def _key_matrix(self, rng, w, n_sec, ensure_row0=False):
        p = self.params.p
        while True:
            matrix = [[rng.randrange(p) for _ in range(n_sec)] for _ in range(w)]
            if not ensure_row0 or any(matrix[0]):
                return matrix

    @property
    def suggested_max_multiplicity(self) -> int:
        return max(2**self.params.rounds, 1)

    def evaluate_ints(self, public: Sequence[int], secret: Sequence[int]) -> int:
        p = self.params.p
        w = self.params.width
        state = [public[i] % p if i < len(public) else 0 for i in range(w)]
        state = [
            (s + sum(k * x for k, x in zip(row, secret)) + c) % p
            for s, row, c in zip(state, self.whiten, self.whiten_const)
        ]
        for mix, keys, consts in zip(
            self.round_mix, self.round_key, self.round_const
        ):
            affine = [
                (
                    sum(a * s for a, s in zip(row, state))
                    + sum(k * x for k, x in zip(krow, secret))
                    + c
                )
                % p
                for row, krow, c in zip(mix, keys, consts)
            ]
            state = [
                (affine[i] + affine[(i + 1) % w] * affine[(i + 2) % w]) % p
                for i in range(w)
            ]
        return state[0]

    def blackbox(self) -> BlackBox:
        spec = self.spec
        params = self.params

        def fn(public, secret):
            return spec.element(
                self.evaluate_ints([int(v) for v in public], [int(x) for x in secret])
            )

        return BlackBox(spec, params.n_pub, params.n_sec, fn)

    def online_oracle(
        self, key: Sequence[FieldElement] | None = None
    ) -> CountingOracle:
        key_vals = [int(x) for x in (self.key if key is None else key)]
        spec = self.spec

        def fn(public):
            return spec.element(
                self.evaluate_ints([int(v) for v in public], key_vals)
            )

        return CountingOracle(fn)


def toy_cipher_blackbox(params: ToyCipherParams, key: Sequence[FieldElement]):
    """Black box for the keyed toy cipher; the returned box carries an
    `online_oracle` bound to the given key for the online phase."""
    cipher = ToyCipher(params)
    bb = cipher.blackbox()
    bb.online_oracle = cipher.online_oracle(key)  # type: ignore[attr-defined]
    return bb


# ---------------------------------------------------------------------------
# target description files


def save_target(path, target) -> None:
    if isinstance(target, PlantedTarget):
        cfg = target.config
        lines = [
            "# gfdelta target v1",
            "kind: planted",
            f"field: {cfg.p}",
            f"public: {cfg.n_pub}",
            f"secret: {cfg.n_sec}",
            f"total-degree: {cfg.total_degree}",
            f"extra-terms: {cfg.extra_terms}",
            f"seed: {cfg.seed}",
        ]
    elif isinstance(target, ToyCipher):
        prm = target.params
        lines = [
            "# gfdelta target v1",
            "kind: toy-cipher",
            f"field: {prm.p}",
            f"public: {prm.n_pub}",
            f"secret: {prm.n_sec}",
            f"rounds: {prm.rounds}",
            f"width: {prm.width}",
            f"seed: {prm.seed}",
        ]
    else:
        raise TargetError(f"cannot serialise {type(target).__name__}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_target(path):
    """Rebuild a target bit-identically from its description file."""
    fields: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise TargetError(f"bad target line {line!r}")
            key, value = line.split(":", 1)
            fields[key.strip()] = value.strip()
    try:
        kind = fields["kind"]
        spec = parse_field_spec(fields["field"])
        if spec.m != 1:
            raise TargetError("targets are defined over prime fields")
        if kind == "planted":
            return make_planted(
                spec.p,
                int(fields["public"]),
                int(fields["secret"]),
                int(fields["total-degree"]),
                int(fields["extra-terms"]),
                int(fields["seed"]),
            )
        if kind == "toy-cipher":
            return ToyCipher(
                ToyCipherParams(
                    spec.p,
                    int(fields["rounds"]),
                    int(fields["width"]),
                    int(fields["public"]),
                    int(fields["secret"]),
                    int(fields["seed"]),
                )
            )
    except KeyError as exc:
        raise TargetError(f"target file missing {exc}") from None
    raise TargetError(f"unknown target kind {fields.get('kind')!r}")
