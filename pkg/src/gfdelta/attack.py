"""Grid-based cube attack over GF(p).

Preprocessing differences the target w.r.t. public-variable terms, keeps the
terms whose differenced function looks linear in the secret variables, and
extracts each linear form by probing unit vectors. The online phase replays
the same grids against the fixed unknown key and solves the collected linear
system by Gaussian elimination over GF(p).
"""

from __future__ import annotations

import enum
import itertools
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from .combinat import binomial_mod
from .field import FieldElement, FieldSpec, parse_field_spec, prime_field
from .poly import Monomial, monomial_text


class AttackError(ValueError):
    pass


class BudgetExhausted(Exception):
    """Raised internally when the evaluation budget cannot fund the next grid."""


class BlackBox:
    """Evaluation-only keyed function f(public, secret) over a prime field.

    The wrapped function must be pure: identical inputs must give identical
    outputs, and concurrent invocation must be safe. The counter tracks how
    many times the function has been consulted.
    """

    def __init__(
        self,
        spec: FieldSpec,
        n_pub: int,
        n_sec: int,
        fn: Callable[[Sequence[FieldElement], Sequence[FieldElement]], FieldElement],
    ):
        if spec.m != 1:
            raise AttackError("the attack operates over prime fields")
        self.spec = spec
        self.n_pub = n_pub
        self.n_sec = n_sec
        self._fn = fn
        self.evaluations = 0

    def evaluate(
        self, public: Sequence[FieldElement], secret: Sequence[FieldElement]
    ) -> FieldElement:
        if len(public) != self.n_pub or len(secret) != self.n_sec:
            raise AttackError("input width mismatch")
        self.evaluations += 1
        return self._fn(public, secret)

    def reset_counter(self):
        self.evaluations = 0


class Verdict(enum.Enum):
    LIKELY_LINEAR = "likely-linear"
    NONLINEAR = "nonlinear"
    CONSTANT = "constant"


@dataclass(frozen=True)
class MaxtermRecord:
    """One discovered relation: differencing by `term` leaves the affine
    secret form c_0 + sum(c_i * x_i)."""

    term: Monomial
    c0: FieldElement
    c: tuple[FieldElement, ...]
    evaluations_used: int

    @property
    def usable(self) -> bool:
        return any(self.c)


# ---------------------------------------------------------------------------
# superpoly grids


@lru_cache(maxsize=1024)
def _public_grid(
    spec: FieldSpec, term: Monomial
) -> tuple[tuple[tuple[FieldElement, ...], FieldElement], ...]:
    """Public-side probe points and folded weights for a unit-step term."""
    p = spec.p
    n_pub = len(term)
    cube = [(i, m) for i, m in enumerate(term) if m]
    for _, m in cube:
        if m > p - 1:
            raise AttackError("term multiplicities must stay below p")
    zero = spec.zero
    entries = []
    ranges = [range(m + 1) for _, m in cube]
    for offsets in itertools.product(*ranges):
        point = [zero] * n_pub
        weight = 1
        parity = 0
        for (var, m), j in zip(cube, offsets):
            point[var] = spec.element(j)
            weight = weight * binomial_mod(m, j, p) % p
            parity += m - j
        if parity & 1:
            weight = -weight % p
        entries.append((tuple(point), spec.element(weight)))
    return tuple(entries)


def superpoly_oracle(bb: BlackBox, term: Monomial):
    """Callable evaluating the differenced function at public zeros for a
    given secret vector; each call costs prod(m_i + 1) black-box probes."""
    grid = _public_grid(bb.spec, tuple(term))
    zero = bb.spec.zero

    def evaluate(secret: Sequence[FieldElement]) -> FieldElement:
        total = zero
        for point, weight in grid:
            total = total + weight * bb.evaluate(point, secret)
        return total

    evaluate.grid_size = len(grid)  # type: ignore[attr-defined]
    return evaluate


def grid_cost(term: Monomial) -> int:
    cost = 1
    for m in term:
        cost *= m + 1
    return cost


# ---------------------------------------------------------------------------
# linearity testing and linear-form extraction

# Trial counts follow the usual linearity-testing soundness story: each trial
# rejects a non-affine function with constant probability, so a dozen trials
# over GF(p>=5), or twenty over GF(3), push the false-accept chance below
# about 2^-20. The source material leaves the count open; these are
# engineering defaults.
DEFAULT_TRIALS = {3: 20}
DEFAULT_TRIALS_LARGE = 12


def default_trials(p: int) -> int:
    return DEFAULT_TRIALS.get(p, DEFAULT_TRIALS_LARGE)


def _random_secret(rng, spec, n_sec):
    return tuple(spec.random_element(rng) for _ in range(n_sec))


def _linearity_verdict(eval_superpoly, spec, n_sec, trials, rng) -> Verdict:
    zero_vec = (spec.zero,) * n_sec
    base = eval_superpoly(zero_vec)
    saw_variation = False
    for _ in range(trials):
        a = spec.random_element(rng)
        b = spec.random_element(rng)
        y = _random_secret(rng, spec, n_sec)
        z = _random_secret(rng, spec, n_sec)
        fy = eval_superpoly(y)
        fz = eval_superpoly(z)
        combo = tuple(a * yi + b * zi for yi, zi in zip(y, z))
        fc = eval_superpoly(combo)
        if fy != base or fz != base or fc != base:
            saw_variation = True
        if a * (fy - base) + b * (fz - base) != fc - base:
            return Verdict.NONLINEAR
    return Verdict.LIKELY_LINEAR if saw_variation else Verdict.CONSTANT


def linearity_test(
    bb: BlackBox,
    term: Monomial,
    trials: int | None = None,
    seed: int | None = None,
    rng: random.Random | None = None,
) -> Verdict:
    """Probabilistic check that the differenced function is affine in the
    secrets: a(f(y)-f(0)) + b(f(z)-f(0)) must equal f(ay+bz)-f(0)."""
    if trials is None:
        trials = default_trials(bb.spec.p)
    if trials < 1:
        raise AttackError("need at least one trial")
    if rng is None:
        rng = random.Random(seed)
    oracle = superpoly_oracle(bb, term)
    return _linearity_verdict(oracle, bb.spec, bb.n_sec, trials, rng)


def extract_linear(bb: BlackBox, term: Monomial) -> MaxtermRecord:
    """Read off the affine form: c_0 at zero, then c_i from unit vectors.
    Costs (n_sec + 1) grids."""
    spec = bb.spec
    oracle = superpoly_oracle(bb, term)
    before = bb.evaluations
    zero_vec = (spec.zero,) * bb.n_sec
    c0 = oracle(zero_vec)
    coeffs = []
    for i in range(bb.n_sec):
        unit = list(zero_vec)
        unit[i] = spec.one
        coeffs.append(oracle(tuple(unit)) - c0)
    return MaxtermRecord(tuple(term), c0, tuple(coeffs), bb.evaluations - before)


# ---------------------------------------------------------------------------
# candidate terms

def candidate_terms(n_pub: int, p: int, max_total_mult: int) -> Iterator[Monomial]:
    """Deterministic, cost-aware schedule: increasing total multiplicity,
    then increasing variable count, then lexicographic variable choice,
    then cheapest grids first. Starts with the empty term, which leaves the
    function undifferenced and catches targets already affine in the key."""
    yield (0,) * n_pub
    for total in range(1, max_total_mult + 1):
        for k in range(1, min(n_pub, total) + 1):
            for variables in itertools.combinations(range(n_pub), k):
                splits = []
                for split in _compositions(total, k, p - 1):
                    splits.append(split)
                splits.sort(key=lambda s: (grid_cost(s), s))
                for split in splits:
                    mono = [0] * n_pub
                    for var, mult in zip(variables, split):
                        mono[var] = mult
                    yield tuple(mono)


def _compositions(total: int, k: int, cap: int) -> Iterator[tuple[int, ...]]:
    if k == 1:
        if 1 <= total <= cap:
            yield (total,)
        return
    for first in range(1, min(cap, total - k + 1) + 1):
        for rest in _compositions(total - first, k - 1, cap):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# preprocessing


@dataclass
class PreprocessResult:
    records: list[MaxtermRecord]
    dependent: list[MaxtermRecord]
    status: str  # 'complete', 'budget-exhausted', or 'terms-exhausted'
    evaluations: int
    terms_tried: int

    @property
    def rank(self) -> int:
        return len(self.records)


class _EchelonBasis:
    """Incremental row reduction over GF(p) for independence filtering."""

    def __init__(self, p: int, width: int):
        self.p = p
        self.width = width
        self.rows: dict[int, list[int]] = {}

    def reduce(self, row: Sequence[int]) -> list[int]:
        out = list(row)
        p = self.p
        for pivot, basis_row in self.rows.items():
            c = out[pivot]
            if c:
                out = [(a - c * b) % p for a, b in zip(out, basis_row)]
        return out

    def try_add(self, row: Sequence[int]) -> bool:
        reduced = self.reduce(row)
        pivot = next((i for i, v in enumerate(reduced) if v), None)
        if pivot is None:
            return False
        inv = pow(reduced[pivot], -1, self.p)
        self.rows[pivot] = [v * inv % self.p for v in reduced]
        return True


def _charged_oracle(bb: BlackBox, term: Monomial, budget: int):
    oracle = superpoly_oracle(bb, term)
    cost = oracle.grid_size

    def evaluate(secret):
        if bb.evaluations + cost > budget:
            raise BudgetExhausted
        return oracle(secret)

    return evaluate


def preprocess(
    bb: BlackBox,
    budget: int,
    max_total_mult: int,
    seed: int,
    trials: int | None = None,
    jobs: int = 1,
) -> PreprocessResult:
    """Search candidate terms until n_sec independent linear forms are found,
    the term schedule ends, or the budget runs out. Deterministic for a
    fixed seed; with jobs > 1 the record list is unchanged but the counter
    can overshoot slightly."""
    if budget <= 0:
        raise AttackError("budget must be positive")
    if trials is None:
        trials = default_trials(bb.spec.p)
    spec = bb.spec
    rng = random.Random(seed)
    basis = _EchelonBasis(spec.p, bb.n_sec)
    records: list[MaxtermRecord] = []
    dependent: list[MaxtermRecord] = []
    terms_tried = 0
    status = "terms-exhausted"
    schedule = candidate_terms(bb.n_pub, spec.p, max_total_mult)

    def examine(term: Monomial, term_rng: random.Random) -> MaxtermRecord | None:
        before = bb.evaluations
        oracle = _charged_oracle(bb, term, budget)
        verdict = _linearity_verdict(oracle, spec, bb.n_sec, trials, term_rng)
        if verdict is not Verdict.LIKELY_LINEAR:
            return None
        record = extract_linear_charged(bb, term, budget)
        return replace(record, evaluations_used=bb.evaluations - before)

    def extract_linear_charged(bb, term, budget):
        oracle = _charged_oracle(bb, term, budget)
        zero_vec = (spec.zero,) * bb.n_sec
        c0 = oracle(zero_vec)
        coeffs = []
        for i in range(bb.n_sec):
            unit = list(zero_vec)
            unit[i] = spec.one
            coeffs.append(oracle(tuple(unit)) - c0)
        return MaxtermRecord(tuple(term), c0, tuple(coeffs), 0)

    def absorb(record: MaxtermRecord | None) -> bool:
        """Returns True when enough independent records have been found."""
        if record is None or not record.usable:
            return False
        if basis.try_add([int(v) for v in record.c]):
            records.append(record)
        else:
            dependent.append(record)
        return len(records) >= bb.n_sec

    try:
        if bb.n_sec == 0:
            status = "complete"
        elif jobs <= 1:
            for term in schedule:
                terms_tried += 1
                if absorb(examine(term, rng)):
                    status = "complete"
                    break
        else:
            done = False
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                while not done:
                    batch = list(itertools.islice(schedule, jobs * 4))
                    if not batch:
                        break
                    seeds = [rng.randrange(1 << 62) for _ in batch]
                    futures = [
                        pool.submit(examine, term, random.Random(s))
                        for term, s in zip(batch, seeds)
                    ]
                    for future in futures:
                        terms_tried += 1
                        if absorb(future.result()):
                            status = "complete"
                            done = True
                            break
    except BudgetExhausted:
        status = "budget-exhausted"
    return PreprocessResult(records, dependent, status, bb.evaluations, terms_tried)


# ---------------------------------------------------------------------------
# linear algebra and the online phase


@dataclass
class LinearSystem:
    spec: FieldSpec
    rows: list[tuple[tuple[FieldElement, ...], FieldElement]] = field(
        default_factory=list
    )

    def add_row(self, coeffs: Sequence[FieldElement], rhs: FieldElement):
        self.rows.append((tuple(coeffs), rhs))

    @property
    def width(self) -> int:
        return len(self.rows[0][0]) if self.rows else 0


@dataclass
class SolveResult:
    status: str  # 'unique', 'parametrized', or 'inconsistent'
    rank: int
    pivots: tuple[int, ...]
    free: tuple[int, ...]
    solution: tuple[FieldElement, ...] | None
    rref: list[tuple[tuple[int, ...], int]]


def gaussian_solve(system: LinearSystem) -> SolveResult:
    """Reduced row echelon form over GF(p) with full rank reporting.

    The solution slot holds the unique solution when the system determines
    every variable, or the particular solution with free variables at zero
    when it does not."""
    spec = system.spec
    p = spec.p
    width = system.width
    rows = [[int(v) for v in coeffs] + [int(rhs)] for coeffs, rhs in system.rows]
    pivots: list[int] = []
    rank = 0
    for col in range(width):
        pivot_row = next(
            (r for r in range(rank, len(rows)) if rows[r][col]), None
        )
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        inv = pow(rows[rank][col], -1, p)
        rows[rank] = [v * inv % p for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                c = rows[r][col]
                rows[r] = [(a - c * b) % p for a, b in zip(rows[r], rows[rank])]
        pivots.append(col)
        rank += 1
    inconsistent = any(
        not any(row[:width]) and row[width] for row in rows[rank:]
    )
    free = tuple(i for i in range(width) if i not in pivots)
    rref = [(tuple(row[:width]), row[width]) for row in rows if any(row)]
    if inconsistent:
        return SolveResult("inconsistent", rank, tuple(pivots), free, None, rref)
    values = [spec.zero] * width
    for row_idx, col in enumerate(pivots):
        values[col] = spec.element(rows[row_idx][width])
    status = "unique" if rank == width else "parametrized"
    return SolveResult(status, rank, tuple(pivots), free, tuple(values), rref)


@dataclass
class OnlineResult:
    status: str  # 'recovered', 'partial', 'inconsistent', or 'empty'
    key: tuple[FieldElement, ...] | None
    assignment: dict[int, FieldElement]
    rank: int
    message: str
    suspects: list[int] = field(default_factory=list)


PublicOracle = Callable[[tuple[FieldElement, ...]], FieldElement]


def _online_rhs(
    oracle: PublicOracle, spec: FieldSpec, record: MaxtermRecord
) -> FieldElement:
    total = spec.zero
    for point, weight in _public_grid(spec, record.term):
        total = total + weight * oracle(point)
    return total


def online(
    oracle: PublicOracle,
    records: Sequence[MaxtermRecord],
    spec: FieldSpec,
    n_sec: int,
) -> OnlineResult:
    """Replay each record's grid against the fixed unknown key and solve
    c . x = rhs - c_0 over GF(p)."""
    if not records:
        return OnlineResult("empty", None, {}, 0, "no records supplied")
    system = LinearSystem(spec)
    for record in records:
        rhs = _online_rhs(oracle, spec, record)
        system.add_row(record.c, rhs - record.c0)
    result = gaussian_solve(system)
    if result.status == "inconsistent":
        suspects = _find_suspects(system, spec)
        names = ", ".join(monomial_text(records[i].term) for i in suspects)
        return OnlineResult(
            "inconsistent",
            None,
            {},
            result.rank,
            f"records conflict; false maxterm suspected in: {names or 'unknown'}",
            suspects,
        )
    if result.status == "unique":
        return OnlineResult(
            "recovered",
            result.solution,
            {i: v for i, v in enumerate(result.solution)},
            result.rank,
            "full key recovered",
        )
    assignment = _determined_variables(result, spec)
    missing = n_sec - result.rank
    return OnlineResult(
        "partial",
        None,
        assignment,
        result.rank,
        f"rank {result.rank} of {n_sec}; exhaustive search needed for "
        f"{missing} more variable(s)",
    )


def _determined_variables(result: SolveResult, spec) -> dict[int, FieldElement]:
    """Pivot variables whose row touches no free column are pinned."""
    out: dict[int, FieldElement] = {}
    free = set(result.free)
    for coeffs, rhs in result.rref:
        nz = [i for i, v in enumerate(coeffs) if v]
        if len(nz) == 1 and nz[0] not in free:
            out[nz[0]] = spec.element(rhs)
    return out


def _find_suspects(system: LinearSystem, spec) -> list[int]:
    suspects = []
    for skip in range(len(system.rows)):
        trimmed = LinearSystem(
            spec, [row for i, row in enumerate(system.rows) if i != skip]
        )
        if gaussian_solve(trimmed).status != "inconsistent":
            suspects.append(skip)
    return suspects


# ---------------------------------------------------------------------------
# record files: line-oriented, human-diffable, stable under a fixed seed

_RECORD_RE = re.compile(
    r"^record term=(\S+) c0=(\S+) c=(\S*) evals=(\d+)$"
)
_PLAN_RE = re.compile(r"^x(\d+)(?:\^(\d+))?$")


def save_records(
    path,
    records: Sequence[MaxtermRecord],
    spec: FieldSpec,
    n_pub: int,
    n_sec: int,
    seed: int,
):
    lines = [
        "# gfdelta maxterm records v1",
        f"# seed: {seed}",
        f"field: {spec.text}",
        f"public: {n_pub}",
        f"secret: {n_sec}",
    ]
    for record in records:
        term = monomial_text(record.term)
        cvec = ",".join(str(int(v)) for v in record.c)
        lines.append(
            f"record term={term} c0={int(record.c0)} c={cvec} "
            f"evals={record.evaluations_used}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_term_text(text: str, n_pub: int) -> Monomial:
    mono = [0] * n_pub
    if text != "1":
        for factor in text.split("*"):
            match = _PLAN_RE.match(factor)
            if not match:
                raise AttackError(f"bad term {text!r} in record file")
            var = int(match.group(1)) - 1
            if not 0 <= var < n_pub:
                raise AttackError(f"term variable out of range in {text!r}")
            mono[var] = int(match.group(2)) if match.group(2) else 1
    return tuple(mono)


def load_records(path):
    """Returns (records, meta) with meta holding field/public/secret/seed."""
    meta: dict[str, object] = {}
    records: list[MaxtermRecord] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("# seed:"):
                    meta["seed"] = int(line.split(":", 1)[1])
                continue
            if line.startswith("field:"):
                meta["spec"] = parse_field_spec(line.split(":", 1)[1])
                continue
            if line.startswith("public:"):
                meta["n_pub"] = int(line.split(":", 1)[1])
                continue
            if line.startswith("secret:"):
                meta["n_sec"] = int(line.split(":", 1)[1])
                continue
            match = _RECORD_RE.match(line)
            if not match:
                raise AttackError(f"cannot parse record line {line!r}")
            spec = meta.get("spec")
            if spec is None or "n_pub" not in meta or "n_sec" not in meta:
                raise AttackError("record file header incomplete")
            term = _parse_term_text(match.group(1), meta["n_pub"])
            c0 = spec.element(int(match.group(2)))
            cvec = tuple(
                spec.element(int(v))
                for v in (match.group(3).split(",") if match.group(3) else [])
            )
            if len(cvec) != meta["n_sec"]:
                raise AttackError("record width disagrees with header")
            records.append(MaxtermRecord(term, c0, cvec, int(match.group(4))))
    if "spec" not in meta:
        raise AttackError("record file missing field header")
    return records, meta
