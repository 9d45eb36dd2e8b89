"""Arithmetic in GF(3^k) and the affine permutation family over it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

# Monic irreducible polynomials over GF(3), coefficients low degree first.
IRREDUCIBLE_BY_DEGREE: dict[int, tuple[int, ...]] = {
    1: (0, 1),                      # x
    2: (2, 2, 1),                   # x^2 + 2x + 2
    3: (1, 2, 0, 1),                # x^3 + 2x + 1
    4: (2, 0, 0, 2, 1),             # x^4 + 2x^3 + 2
    5: (1, 2, 0, 0, 0, 1),          # x^5 + 2x + 1
    6: (2, 2, 1, 0, 2, 0, 1),       # x^6 + 2x^4 + x^2 + 2x + 2
}


class FieldConstructionError(ValueError):
    pass


def _trim(p: list[int]) -> list[int]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_mod(a: list[int], m: tuple[int, ...]) -> list[int]:
    a = _trim(list(a))
    dm = len(m) - 1
    inv_lead = 1 if m[-1] == 1 else 2  # inverses in GF(3)
    while len(a) - 1 >= dm and a:
        shift = len(a) - 1 - dm
        factor = (a[-1] * inv_lead) % 3
        for i, c in enumerate(m):
            a[i + shift] = (a[i + shift] - factor * c) % 3
        _trim(a)
    return a


def is_irreducible(poly: tuple[int, ...]) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    deg = len(poly) - 1
    if deg < 1 or poly[-1] == 0:
        return False
    for d in range(1, deg // 2 + 1):
        for low in product(range(3), repeat=d):
            if not _poly_mod(list(poly), tuple(low) + (1,)):
                return False
    return True


def base3_digits(t: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        out.append(t % 3)
        t //= 3
    if t:
        raise ValueError("integer too large for the field")
    return tuple(out)


def from_base3(digits: tuple[int, ...] | list[int]) -> int:
    t = 0
    for d in reversed(digits):
        t = t * 3 + d
    return t


class GF3k:
    """The field with 3^k elements; element t <-> polynomial with base-3 digits of t."""

    def __init__(self, k: int):
        if k not in IRREDUCIBLE_BY_DEGREE:
            raise FieldConstructionError(f"no irreducible polynomial tabulated for degree {k}")
        self.k = k
        self.order = 3 ** k
        self.modulus = IRREDUCIBLE_BY_DEGREE[k]
        if not is_irreducible(self.modulus):
            raise FieldConstructionError(f"tabulated polynomial {self.modulus} is reducible")
        n = self.order
        digits = [base3_digits(t, k) for t in range(n)]
        self.add_table = [
            [from_base3([(x + y) % 3 for x, y in zip(digits[a], digits[b])]) for b in range(n)]
            for a in range(n)
        ]
        self.mul_table = [[0] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                prod = [0] * (2 * k)
                for i, x in enumerate(digits[a]):
                    if x:
                        for j, y in enumerate(digits[b]):
                            prod[i + j] = (prod[i + j] + x * y) % 3
                red = _poly_mod(prod, self.modulus)
                val = from_base3(red + [0] * (k - len(red)))
                self.mul_table[a][b] = val
                self.mul_table[b][a] = val
        for a in range(1, n):
            if 1 not in self.mul_table[a]:
                raise FieldConstructionError(f"element {a} has no inverse")

    def add(self, a: int, b: int) -> int:
        return self.add_table[a][b]

    def mul(self, a: int, b: int) -> int:
        return self.mul_table[a][b]


@dataclass(frozen=True)
class AffineMap:
    a: int
    b: int


class PermFamily:
    """All maps x -> a*x + b (a != 0) over GF(3m), as permutations of [3m].

    Points are 1-based: vertex u corresponds to field element u - 1.
    Member ``index`` is ``(a - 1) * N + b`` so index 0 is the identity.
    """

    def __init__(self, m: int):
        n = 3 * m
        k = 0
        t = n
        while t % 3 == 0:
            t //= 3
            k += 1
        if t != 1 or k < 1:
            raise FieldConstructionError(f"3m = {n} is not a power of 3")
        self.m = m
        self.n = n
        self.field = GF3k(k)
        add, mul = self.field.add_table, self.field.mul_table
        maps: list[tuple[int, ...]] = []
        params: list[AffineMap] = []
        for a in range(1, n):
            for b in range(n):
                maps.append(tuple(add[mul[a][x]][b] + 1 for x in range(n)))
                params.append(AffineMap(a, b))
        self.maps = maps
        self.params = params

    def __len__(self) -> int:
        return len(self.maps)

    def apply(self, index: int, u: int) -> int:
        return self.maps[index][u - 1]

    def perm(self, index: int) -> dict[int, int]:
        return {u + 1: img for u, img in enumerate(self.maps[index])}

    @cached_property
    def _lookup(self) -> dict[tuple[int, ...], int]:
        return {p: i for i, p in enumerate(self.maps)}

    def index_of(self, perm: dict[int, int] | tuple[int, ...]) -> int:
        key = tuple(perm[u] for u in range(1, self.n + 1)) if isinstance(perm, dict) else tuple(perm)
        try:
            return self._lookup[key]
        except KeyError:
            raise ValueError("permutation is not a member of the family") from None

    def inverse_index(self, index: int) -> int:
        p = self.maps[index]
        inv = [0] * self.n
        for x, img in enumerate(p):
            inv[img - 1] = x + 1
        return self.index_of(tuple(inv))


def perm_family(m: int) -> PermFamily:
    return PermFamily(m)


def family_size(m: int) -> int:
    return 9 * m * m - 3 * m
