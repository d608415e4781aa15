"""Inductive construction of weighted norms and stabilizing norm towers.

One *step* takes a proper norm |.|_base on a group G, a central element z
of infinite order, and naturals (k, m, R), and produces a weight system
whose generated norm d_w satisfies, exactly:

  (1) |g|_w <= |g|_base everywhere,
  (2) |g|_w = |g|_base whenever |g|_w <= R,
  (3) x -> z^(<x, h>) restricted to the l1 ball B^m(0, k) in Z^m is a
      dilatation of constant C into (G, d_w): every pair of points has
      image distance exactly C times its l1 distance.

Parameters are chosen as the minimal admissible ones: C = R + 1 and
a = 2*k*m^2*C + 1 (so R < C < a / (2*k*m^2) strictly), override exponents
h_j = 2^(p_j) * h_1 with doubling gaps large enough that distinct small
combinations of the h_j never collide, and h_1 past which every power of
z has base norm at least a.

A *tower* iterates the step with m = stage index and growing thresholds
R_(i+1) = max(M_(i+1), R_i + 1, 2*k_i*C_i + 1); values at or below R_i
are frozen by condition (2), so each group element's norm stabilizes and
the stagewise evaluations converge to a limit norm.

Stage norms on Z^d are evaluated through an exact layered coin solver
(the algebraic unfolding of the nested closed forms), which stays exact
at exponents of hundreds of bits; on other groups the nested closed form
is evaluated directly.  Every certificate here is produced by exact
integer arithmetic on explicitly enumerated windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Optional

from .coins import LayeredCoins
from .errors import BudgetExceededError, ConfigError
from .groups import Element, GroupDescriptor
from .metrics import (
    DEFAULT_ELEMENT_CAP,
    AnalyticL1Norm,
    CentralOverrideNorm,
    Coords,
    NormHandle,
    WeightSystem,
    signed_l1_vectors,
)

FIND_H1_SCAN_CAP = 200_000
BALL_CANDIDATE_CAP = 2_000_000


def choose_params(k: int, m: int, R: int) -> tuple[int, int]:
    """Minimal admissible (a, C): C = R+1 and a = 2*k*m^2*C + 1."""
    for name, v in (("k", k), ("m", m), ("R", R)):
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"{name} must be a positive integer")
    C = R + 1
    a = 2 * k * m * m * C + 1
    return a, C


def choose_p(k: int, m: int) -> tuple[int, ...]:
    """Doubling exponents p_1 = 1 < p_2 < ... with each minimal such that
    (2*k*m) * sum_(i<j) 2^(p_i) < 2^(p_j)."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    p = [1]
    for _ in range(m - 1):
        s = sum(1 << pi for pi in p)
        p.append((2 * k * m * s).bit_length())
    return tuple(p)


def exponent_of_power(group: GroupDescriptor, z: Coords, coords: Coords) -> Optional[int]:
    """The integer t with coords == z^t, if one exists."""
    pivot = next((i for i, c in enumerate(z) if c != 0), None)
    if pivot is None:
        raise ValueError("z must not be the identity")
    t, rem = divmod(coords[pivot], z[pivot])
    if rem != 0:
        return None
    return t if group.pow_coords(z, t) == coords else None


def slope_lower_bound(
    stages: list[tuple[int, tuple[int, ...]]], base_slope: Fraction = Fraction(1)
) -> Fraction:
    """Certified slope: |z^h| >= sigma * |h| for the stage norm.

    sigma_0 is the base slope (1 for the l1 norm, where |z^h| = |h|) and
    sigma_n = min(sigma_(n-1), C_n / max(h^(n))): each override letter
    z^(±h_j) pays C_n >= sigma_n * h_j and every other letter inherits the
    previous slope, so the bound survives the triangle inequality.
    """
    sigma = base_slope
    for C, h in stages:
        sigma = min(sigma, Fraction(C, max(h)))
    return sigma


def find_h1(
    base: NormHandle,
    z: Coords,
    a: int,
    mode: str = "bounded",
    slope: Optional[Fraction] = None,
    scan_cap: int = FIND_H1_SCAN_CAP,
) -> int:
    """Smallest certified h1 with base(z^h) >= a for every |h| >= h1.

    bounded: h1 = ceil(a / slope); requires a certified slope on <z>.
    exact:   with a slope, exhaustively scans |h| below the bounded answer
             (the slope certifies everything beyond); without one, falls
             back to enumerating the base ball of radius a-1 and taking
             the largest power of z inside it, plus one.
    """
    if a < 1:
        raise ValueError("a must be positive")
    group = base.group
    if slope is None:
        slope = getattr(base, "z_slope", None)
    if mode == "bounded":
        if slope is None:
            raise ValueError("slope certificate unavailable: bounded mode refused")
        return max(1, ceil(Fraction(a) / slope))
    if mode != "exact":
        raise ValueError(f"unknown find_h1 mode: {mode!r}")
    if slope is not None:
        bound = max(1, ceil(Fraction(a) / slope))
        if bound > scan_cap:
            raise BudgetExceededError("find_h1 exact scan exceeds cap", bound, scan_cap)
        worst = 0
        for t in range(1, bound):
            if base.value(group.pow_coords(z, t)) < a:
                worst = t
        return worst + 1
    # no slope: the base ball of radius a-1 is finite and contains every
    # power of z of norm < a, so its largest exponent certifies h1.
    worst = 0
    for coords in base.ball_coords(a - 1):
        t = exponent_of_power(group, z, coords)
        if t is not None:
            worst = max(worst, abs(t))
    return worst + 1


# ---------------------------------------------------------------------------
# stage norms


class ZStageNorm(NormHandle):
    """Tower-stage norm on Z^d with overrides on powers of e_1.

    All layers' overrides live on the first coordinate, so the norm
    splits: the exact layered coin solver handles coordinate one and the
    remaining coordinates pay the plain l1 rate.
    """

    tag = "tower-stage"

    def __init__(self, group: GroupDescriptor, layers: tuple[tuple[int, tuple[int, ...]], ...]):
        if group.kind != "free_abelian":
            raise ValueError("ZStageNorm requires a free abelian group")
        desc = "; ".join(f"C={C},h={h}" for C, h in layers)
        super().__init__(group, f"tower stage norm on {group.label()}; layers=[{desc}]")
        self.layers = layers
        self.solver = LayeredCoins([(hj, C) for C, h in layers for hj in h])
        self.z_slope = slope_lower_bound(list(layers))

    def value(self, coords: Coords) -> int:
        cached = self.memo.get(coords)
        if cached is None:
            cached = self.solver.cost(coords[0]) + sum(abs(c) for c in coords[1:])
            self.memo[coords] = cached
        return cached

    def _compute(self, coords: Coords) -> int:
        return self.value(coords)

    def exponent_candidates(self, budget: int) -> set[int]:
        """Every t whose coin representation can cost <= budget (superset
        of the exact sublevel set on <e_1>)."""
        sums = {0}
        for v, c in self.solver.coins:
            reach = budget // c
            if reach == 0:
                continue
            sums = {s + y * v for s in sums for y in range(-reach, reach + 1)}
            if len(sums) > BALL_CANDIDATE_CAP:
                raise BudgetExceededError(
                    "stage ball candidate set exceeds cap", len(sums), BALL_CANDIDATE_CAP
                )
        return sums

    def ball_coords(self, radius: int, cap: int = DEFAULT_ELEMENT_CAP) -> list[Coords]:
        if radius < 0:
            return []
        rank = self.group.rank
        out: list[Coords] = []
        exponents: set[int] = set()
        for s in self.exponent_candidates(radius):
            for u in range(-(radius), radius + 1):
                exponents.add(s + u)
        if len(exponents) > BALL_CANDIDATE_CAP:
            raise BudgetExceededError(
                "stage ball candidate set exceeds cap", len(exponents), BALL_CANDIDATE_CAP
            )
        for t in sorted(exponents):
            c1 = self.solver.cost(t)
            if c1 > radius:
                continue
            if rank == 1:
                out.append((t,))
            else:
                for rest in signed_l1_vectors(rank - 1, radius - c1):
                    out.append((t,) + rest)
            if len(out) > cap:
                raise BudgetExceededError("stage ball exceeds element cap", len(out), cap)
        return sorted(out)


# ---------------------------------------------------------------------------
# lemma step records


@dataclass(frozen=True)
class LemmaParams:
    """Parameters of one construction step, plus admissibility checks."""

    k: int
    m: int
    R: int
    a: int
    C: int
    h1: int
    p: tuple[int, ...]
    h: tuple[int, ...]

    def admissibility_issues(self) -> list[str]:
        issues = []
        if not self.R < self.C:
            issues.append(f"R={self.R} is not below C={self.C}")
        if not Fraction(self.C) < Fraction(self.a, 2 * self.k * self.m * self.m):
            issues.append(f"C={self.C} is not below a/(2*k*m^2)={self.a}/{2 * self.k * self.m * self.m}")
        if len(self.p) != self.m or len(self.h) != self.m:
            issues.append("p and h must have length m")
            return issues
        if self.p[0] != 1:
            issues.append("p_1 must equal 1")
        for j in range(1, self.m):
            s = sum(1 << pi for pi in self.p[:j])
            if not (2 * self.k * self.m) * s < (1 << self.p[j]):
                issues.append(f"gap condition fails at p_{j + 1}")
        if self.h1 < 1:
            issues.append("h1 must be positive")
        if self.h[0] != self.h1:
            issues.append("h_1 must equal h1")
        for j in range(1, self.m):
            if self.h[j] != (1 << self.p[j]) * self.h1:
                issues.append(f"h_{j + 1} must equal 2^p_{j + 1} * h1")
        return issues

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "R": self.R,
            "a": str(self.a),
            "C": str(self.C),
            "h1": str(self.h1),
            "p": list(self.p),
            "h": [str(x) for x in self.h],
        }


@dataclass(frozen=True)
class HomSpec:
    """x in Z^m maps to z^(<x, exponents>); restricted to B^m(0, k)."""

    group: GroupDescriptor
    z: Coords
    exponents: tuple[int, ...]
    k: int

    def apply(self, vec: tuple[int, ...]) -> Coords:
        shift = sum(x * h for x, h in zip(vec, self.exponents))
        return self.group.pow_coords(self.z, shift)

    def domain_points(self) -> list[tuple[int, ...]]:
        return sorted(signed_l1_vectors(len(self.exponents), self.k))


@dataclass
class LemmaStepResult:
    params: LemmaParams
    base: NormHandle
    handle: NormHandle
    system: WeightSystem
    hom: HomSpec

    @property
    def group(self) -> GroupDescriptor:
        return self.base.group


def lemma_step(
    base: NormHandle,
    z: Element,
    k: int,
    m: int,
    R: int,
    h1_mode: str = "bounded",
    param_overrides: Optional[dict] = None,
) -> LemmaStepResult:
    """One construction step over an arbitrary base norm.

    ``param_overrides`` may replace any of a, C, h1 after the canonical
    choice; inadmissible overrides are accepted (and recorded), so that
    verification can demonstrate exactly which condition breaks.
    """
    group = base.group
    if z.group != group:
        raise ValueError("central element must belong to the base norm's group")
    if not group.is_central_coords(z.coords):
        raise ValueError("z is not central")
    if z.coords == group.identity_coords():
        raise ValueError("z must not be the identity")
    a, C = choose_params(k, m, R)
    overrides = dict(param_overrides or {})
    a = overrides.pop("a", a)
    C = overrides.pop("C", C)
    p = choose_p(k, m)
    h1 = overrides.pop("h1", None)
    if h1 is None:
        h1 = find_h1(base, z.coords, a, mode=h1_mode)
    if overrides:
        raise ValueError(f"unknown parameter overrides: {sorted(overrides)}")
    h = tuple(h1 if j == 0 else (1 << p[j]) * h1 for j in range(m))
    params = LemmaParams(k=k, m=m, R=R, a=a, C=C, h1=h1, p=p, h=h)

    handle: Optional[NormHandle] = None
    if group.kind == "free_abelian" and z.coords == group.center_generator_coords():
        if isinstance(base, (AnalyticL1Norm, ZStageNorm)):
            try:
                handle = ZStageNorm(group, tuple(getattr(base, "layers", ())) + ((C, h),))
            except ValueError:
                # inadmissible parameters break the layered-coin rate order;
                # the closed form stays exact for any weights, so use it and
                # let verification report the failure
                handle = None
    if handle is None:
        handle = CentralOverrideNorm(base, z.coords, h, C)
    system = WeightSystem(base, {group.pow_coords(z.coords, hj): C for hj in h})
    hom = HomSpec(group, z.coords, h, k)
    return LemmaStepResult(params=params, base=base, handle=handle, system=system, hom=hom)


# ---------------------------------------------------------------------------
# verification


@dataclass
class ConditionReport:
    name: str
    checked: int
    passed: bool
    witnesses: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "checked": self.checked,
            "passed": self.passed,
            "witnesses": self.witnesses,
        }


@dataclass
class LemmaCertificate:
    params: LemmaParams
    admissible: bool
    admissibility_issues: list[str]
    window_radius: int
    window_size: int
    conditions: list[ConditionReport]

    @property
    def passed(self) -> bool:
        return self.admissible and all(c.passed for c in self.conditions)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "admissible": self.admissible,
            "admissibility_issues": self.admissibility_issues,
            "window_radius": self.window_radius,
            "window_size": self.window_size,
            "conditions": [c.to_dict() for c in self.conditions],
            "passed": self.passed,
        }


def verify_lemma_conditions(
    result: LemmaStepResult,
    radius: int,
    window: Optional[list[Coords]] = None,
    max_witnesses: int = 10,
) -> LemmaCertificate:
    """Exact check of conditions (1)-(3) on a base-ball window.

    (1) and (2) quantify over every element of the base norm's ball of
    the given radius; (3) quantifies over every pair of the map's domain
    ball, whatever the size of the image exponents.
    """
    params = result.params
    base, handle = result.base, result.handle
    if window is None:
        window = base.ball_coords(radius)
    issues = params.admissibility_issues()

    cond1 = ConditionReport("new norm never exceeds base norm", 0, True)
    cond2 = ConditionReport("values at or below R are preserved", 0, True)
    for x in window:
        vb = base.value(x)
        vw = handle.value(x)
        cond1.checked += 1
        if vw > vb:
            cond1.passed = False
            if len(cond1.witnesses) < max_witnesses:
                cond1.witnesses.append({"x": list(x), "new": str(vw), "base": str(vb)})
        cond2.checked += 1
        if vw <= params.R and vw != vb:
            cond2.passed = False
            if len(cond2.witnesses) < max_witnesses:
                cond2.witnesses.append({"x": list(x), "new": str(vw), "base": str(vb)})

    cond3 = ConditionReport("domain ball maps by a dilatation of constant C", 0, True)
    pts = result.hom.domain_points()
    group = result.group
    for i, u in enumerate(pts):
        gu = result.hom.apply(u)
        for v in pts[i + 1 :]:
            gv = result.hom.apply(v)
            expected = params.C * sum(abs(a - b) for a, b in zip(u, v))
            got = handle.value(group.mul_coords(group.inv_coords(gu), gv))
            cond3.checked += 1
            if got != expected:
                cond3.passed = False
                if len(cond3.witnesses) < max_witnesses:
                    cond3.witnesses.append(
                        {"x": list(u), "y": list(v), "got": str(got), "expected": str(expected)}
                    )
    return LemmaCertificate(
        params=params,
        admissible=not issues,
        admissibility_issues=issues,
        window_radius=radius,
        window_size=len(window),
        conditions=[cond1, cond2, cond3],
    )


# ---------------------------------------------------------------------------
# towers


class TowerVerificationError(RuntimeError):
    def __init__(self, stage_index: int, certificate: LemmaCertificate, tower: "TowerState"):
        super().__init__(f"stage {stage_index} verification failed")
        self.stage_index = stage_index
        self.certificate = certificate
        self.tower = tower  # stages built and verified before the failure


@dataclass
class TowerStage:
    index: int  # 1-based
    R: int
    result: LemmaStepResult
    certificate: LemmaCertificate
    sigma: Fraction  # certified slope on <z> after this stage, if any

    @property
    def params(self) -> LemmaParams:
        return self.result.params

    @property
    def handle(self) -> NormHandle:
        return self.result.handle


@dataclass
class TowerState:
    group: GroupDescriptor
    base: NormHandle
    z: Coords
    k_seq: tuple[int, ...]
    M_seq: tuple[int, ...]
    steps: int
    h1_mode: str
    verify_radius: int
    stages: list[TowerStage] = field(default_factory=list)

    @property
    def limit_handle(self) -> NormHandle:
        return self.stages[-1].handle if self.stages else self.base

    @property
    def R_last(self) -> Optional[int]:
        return self.stages[-1].R if self.stages else None

    def stage_values(self, coords: Coords) -> list[int]:
        return [st.handle.value(coords) for st in self.stages]


def build_tower(
    group: GroupDescriptor,
    k_seq: tuple[int, ...],
    M_seq: tuple[int, ...],
    steps: int,
    h1_mode: str = "bounded",
    verify_radius: int = 60,
    base: Optional[NormHandle] = None,
    stage_overrides: Optional[dict[int, dict]] = None,
    on_stage_handle=None,
) -> TowerState:
    """Run ``steps`` construction stages with m = stage index.

    Thresholds follow R_1 = M_1 and
    R_(i+1) = max(M_(i+1), R_i + 1, 2*k_i*C_i + 1); the last term strictly
    dominates the image diameter 2*k_i*C_i of stage i's domain ball, so
    later stages can never disturb the dilatation distances already built.
    Each stage is verified before the next one starts.

    ``stage_overrides`` maps a 1-based stage index to parameter overrides
    (fault injection included); ``on_stage_handle`` is called with each
    freshly built stage norm before verification (cache warm-up hook).
    """
    k_seq, M_seq = tuple(k_seq), tuple(M_seq)
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    if steps > min(len(k_seq), len(M_seq)):
        raise ConfigError("steps exceeds the provided k/M sequences")
    if any(x < 1 for x in k_seq + M_seq):
        raise ConfigError("k and M entries must be positive")
    if any(b <= a for a, b in zip(k_seq, k_seq[1:])):
        raise ConfigError("k sequence must be strictly increasing")
    if any(b <= a for a, b in zip(M_seq, M_seq[1:])):
        raise ConfigError("M sequence must be strictly increasing")
    if h1_mode not in ("bounded", "exact"):
        raise ConfigError(f"unknown h1 mode: {h1_mode!r}")

    if base is None:
        if group.kind == "free_abelian":
            base = AnalyticL1Norm(group)
        else:
            from .metrics import WordNorm

            base = WordNorm(group)
    from .groups import center_generator

    z = center_generator(group)
    tower = TowerState(
        group=group,
        base=base,
        z=z.coords,
        k_seq=k_seq,
        M_seq=M_seq,
        steps=steps,
        h1_mode=h1_mode,
        verify_radius=verify_radius,
    )
    current = base
    R = M_seq[0] if steps > 0 else 0
    for i in range(1, steps + 1):
        k = k_seq[i - 1]
        result = lemma_step(
            current,
            z,
            k=k,
            m=i,
            R=R,
            h1_mode=h1_mode,
            param_overrides=(stage_overrides or {}).get(i),
        )
        if on_stage_handle is not None:
            on_stage_handle(result.handle)
        certificate = verify_lemma_conditions(result, verify_radius)
        if not certificate.passed:
            raise TowerVerificationError(i, certificate, tower)
        sigma = getattr(result.handle, "z_slope", None)
        if sigma is None:
            prev = tower.stages[-1].sigma if tower.stages else getattr(base, "z_slope", None)
            sigma = (
                min(prev, Fraction(result.params.C, max(result.params.h)))
                if prev is not None
                else None
            )
        stage = TowerStage(index=i, R=R, result=result, certificate=certificate, sigma=sigma)
        tower.stages.append(stage)
        C = result.params.C
        diameter = 2 * k * C
        if i < steps:
            R_next = max(M_seq[i], R + 1, diameter + 1)
            assert R_next > R and diameter < R_next
            R = R_next
        current = result.handle
    return tower


def limit_norm(tower: TowerState, x: Element | Coords) -> tuple[int, bool]:
    """Value of x under the tower's limit norm, with a stabilization flag.

    The stagewise values are nonincreasing; once a value is at or below
    the last threshold R, condition (2) of every later stage would
    preserve it, so the reported value is final ("stabilized").  Larger
    values are correct for the built stages but could still drop if the
    tower were extended.
    """
    coords = x.coords if isinstance(x, Element) else tuple(x)
    value = tower.limit_handle.value(coords)
    if not tower.stages:
        return value, True
    return value, value <= tower.R_last
