"""Finitely generated groups with exact integer coordinates.

Two families are supported:

* ``Z^d`` -- the free abelian group of rank d, coordinatewise addition,
  standard generators ``±e_i``.
* ``H3`` -- the discrete Heisenberg group on integer triples with
  ``(a1, a2, a3) * (b1, b2, b3) = (a1+b1, a2+b2, a3+b3 + a1*b2)``,
  standard generators ``x = (1,0,0)`` and ``y = (0,1,0)`` and inverses.

All coordinates are Python ints, so arbitrarily large powers are exact.
Elements are immutable and canonically encoded: two equal group elements
always carry identical coordinate tuples.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GroupMismatchError

KIND_FREE_ABELIAN = "free_abelian"
KIND_HEISENBERG = "heisenberg"


@dataclass(frozen=True)
class GroupDescriptor:
    """Identifies a concrete group and fixes its standard generating set."""

    kind: str
    rank: int  # coordinate tuple length: d for Z^d, always 3 for H3

    def __post_init__(self):
        if self.kind == KIND_FREE_ABELIAN:
            if self.rank < 1:
                raise ValueError("free abelian rank must be >= 1")
        elif self.kind == KIND_HEISENBERG:
            if self.rank != 3:
                raise ValueError("Heisenberg coordinates are triples")
        else:
            raise ValueError(f"unknown group kind: {self.kind!r}")

    def label(self) -> str:
        if self.kind == KIND_HEISENBERG:
            return "H3"
        return "Z" if self.rank == 1 else f"Z^{self.rank}"

    # -- raw coordinate arithmetic (hot paths work on bare tuples) --

    def identity_coords(self) -> tuple[int, ...]:
        return (0,) * self.rank

    def check_coords(self, coords: tuple[int, ...]) -> None:
        if len(coords) != self.rank or not all(isinstance(c, int) for c in coords):
            raise ValueError(f"bad coordinates for {self.label()}: {coords!r}")

    def mul_coords(self, a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
        if self.kind == KIND_HEISENBERG:
            return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])
        return tuple(x + y for x, y in zip(a, b))

    def inv_coords(self, a: tuple[int, ...]) -> tuple[int, ...]:
        if self.kind == KIND_HEISENBERG:
            # (a1,a2,a3)^-1 = (-a1,-a2,-a3+a1*a2)
            return (-a[0], -a[1], a[0] * a[1] - a[2])
        return tuple(-x for x in a)

    def pow_coords(self, a: tuple[int, ...], n: int) -> tuple[int, ...]:
        if self.kind == KIND_HEISENBERG:
            # closed form for upper unitriangular matrices:
            # (a1,a2,a3)^n = (n*a1, n*a2, n*a3 + C(n,2)*a1*a2), valid for all n.
            return (n * a[0], n * a[1], n * a[2] + (n * (n - 1) // 2) * a[0] * a[1])
        return tuple(n * x for x in a)

    def generator_coords(self) -> list[tuple[int, ...]]:
        """Standard symmetric generating set (identity excluded)."""
        if self.kind == KIND_HEISENBERG:
            return [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
        gens = []
        for i in range(self.rank):
            e = [0] * self.rank
            e[i] = 1
            gens.append(tuple(e))
            e2 = [0] * self.rank
            e2[i] = -1
            gens.append(tuple(e2))
        return gens

    def center_generator_coords(self) -> tuple[int, ...]:
        if self.kind == KIND_HEISENBERG:
            return (0, 0, 1)
        e = [0] * self.rank
        e[0] = 1
        return tuple(e)

    def z_power_exponent(self, coords: tuple[int, ...]) -> int | None:
        """If coords is a power of the canonical central generator, return the
        exponent, else None."""
        z = self.center_generator_coords()
        if self.kind == KIND_HEISENBERG:
            if coords[0] == 0 and coords[1] == 0:
                return coords[2]
            return None
        t = coords[0]
        if coords == self.pow_coords(z, t):
            return t
        return None

    def is_central_coords(self, coords: tuple[int, ...]) -> bool:
        """Exact centrality test: commuting with every generator suffices."""
        return all(
            self.mul_coords(coords, s) == self.mul_coords(s, coords)
            for s in self.generator_coords()
        )


@dataclass(frozen=True)
class Element:
    """A group element: a descriptor plus a canonical coordinate tuple."""

    group: GroupDescriptor
    coords: tuple[int, ...]

    def __post_init__(self):
        self.group.check_coords(self.coords)

    def __mul__(self, other: "Element") -> "Element":
        return mul(self, other)

    def inverse(self) -> "Element":
        return Element(self.group, self.group.inv_coords(self.coords))

    def is_identity(self) -> bool:
        return self.coords == self.group.identity_coords()


def mul(a: Element, b: Element) -> Element:
    if a.group != b.group:
        raise GroupMismatchError(f"cannot multiply {a.group.label()} by {b.group.label()}")
    return Element(a.group, a.group.mul_coords(a.coords, b.coords))


def inverse(a: Element) -> Element:
    return a.inverse()


def power(g: Element, n: int) -> Element:
    return Element(g.group, g.group.pow_coords(g.coords, n))


def identity(group: GroupDescriptor) -> Element:
    return Element(group, group.identity_coords())


def center_generator(group: GroupDescriptor) -> Element:
    """A fixed generator of (a copy of Z inside) the center.

    For Z^d this is e_1; for H3 it is (0,0,1), which commutes with both
    generators by the group law.
    """
    return Element(group, group.center_generator_coords())


def parse_group(name: str, d: int | None = None) -> GroupDescriptor:
    """Parse a group name as written in configuration: Z, Z^d, or H3."""
    name = name.strip()
    if name == "H3":
        return GroupDescriptor(KIND_HEISENBERG, 3)
    if name == "Z":
        return GroupDescriptor(KIND_FREE_ABELIAN, 1)
    if name == "Z^d":
        if d is None:
            raise ValueError("group 'Z^d' requires an explicit d")
        return GroupDescriptor(KIND_FREE_ABELIAN, d)
    if name.startswith("Z^"):
        return GroupDescriptor(KIND_FREE_ABELIAN, int(name[2:]))
    raise ValueError(f"unknown group name: {name!r}")
