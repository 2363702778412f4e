"""Finite Wiener chaos expansions over the grid Gaussian model.

A ChaosExpansion stores one symmetric step kernel per order n, representing
F = sum_n I_n(f_n) where I_n is the multiple integral of order n against the
grid increments.  On a fixed grid the classical identities hold exactly:

    isometry         E[I_n(f) I_m(g)] = delta_{nm} n! <f, g>
    product          I_p(f) I_q(g)    = sum_l l! C(p,l) C(q,l) I_{p+q-2l}(f ox_l g, symmetrized)
    Gamma functional <DF, D(-L)^{-1} G> expands through (l+1)-fold contractions

so second moments, fourth cumulants and Gamma residuals are computed
algebraically, with Monte Carlo reserved for distributional quantities.

Pathwise evaluation uses the diagonal-free multiple-integral formula: for a
symmetric kernel f and a cell multiset {j_1^(k_1), ..., j_d^(k_d)} with
k_1 + ... + k_d = n,

    I_n(f) = sum over multisets  n!/(k_1! ... k_d!) * f(cells) *
             prod_r delta^(k_r/2) H_{k_r}(xi_{j_r} / sqrt(delta))

with H_k the monic probabilists' Hermite polynomials.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import (
    BLOCK_SIZE,
    GaussianSample,
    Grid,
    IncrementStream,
    make_grid,
    sample_increments_block,
)
from .hermite import hermite_eval
from .kernels import (
    StepKernel,
    contract,
    inner_product,
    is_symmetric,
    kernel_from_dict,
    kernel_to_dict,
    step_kernel,
    symmetrize,
)

# Products above this output order are rejected; dense kernels of higher order
# have no supported use here and the entry guard would obscure the real problem.
MAX_PRODUCT_ORDER = 8


@dataclass(frozen=True)
class ChaosExpansion:
    """Kernels indexed by order; a None slot is the zero kernel of that order."""

    grid: Grid
    kernels: tuple

    @property
    def max_order(self) -> int:
        return len(self.kernels) - 1

    @property
    def expectation(self) -> float:
        k0 = self.kernels[0]
        return float(k0.values) if k0 is not None else 0.0

    def kernel(self, order: int):
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        return self.kernels[order] if order <= self.max_order else None

    def nonzero_orders(self) -> list:
        return [n for n, k in enumerate(self.kernels) if k is not None]


def _normalize_slots(grid: Grid, slots: list) -> tuple:
    """Drop all-zero kernels and trailing empty slots; keep at least order 0."""
    cleaned = []
    for n, k in enumerate(slots):
        if k is None:
            cleaned.append(None)
            continue
        if k.order != n:
            raise ValueError(f"kernel of order {k.order} stored at slot {n}")
        if k.grid != grid:
            raise ValueError("all kernels must share the expansion grid")
        cleaned.append(k if np.any(k.values) else None)
    while len(cleaned) > 1 and cleaned[-1] is None:
        cleaned.pop()
    if not cleaned:
        cleaned = [None]
    return tuple(cleaned)


def chaos_expansion(grid: Grid, kernels, *, validate: bool = True) -> ChaosExpansion:
    """Build an expansion from per-order kernels, checking symmetry."""
    slots = _normalize_slots(grid, list(kernels))
    if validate:
        for k in slots:
            if k is not None and not is_symmetric(k):
                raise ValueError(f"order-{k.order} kernel is not symmetric")
    return ChaosExpansion(grid=grid, kernels=slots)


def _expansion(grid: Grid, slots: list) -> ChaosExpansion:
    # Internal constructor for operation results whose kernels are symmetric
    # by construction.
    return ChaosExpansion(grid=grid, kernels=_normalize_slots(grid, slots))


def constant(grid: Grid, value: float) -> ChaosExpansion:
    """The deterministic expansion F = value."""
    k0 = step_kernel(grid, 0, float(value)) if value != 0.0 else None
    return ChaosExpansion(grid=grid, kernels=(k0,))


def single_chaos(kernel: StepKernel) -> ChaosExpansion:
    """Expansion with one nonzero kernel, F = I_n(f)."""
    slots = [None] * kernel.order + [kernel]
    return chaos_expansion(kernel.grid, slots)


def add(x: ChaosExpansion, y: ChaosExpansion) -> ChaosExpansion:
    if x.grid != y.grid:
        raise ValueError("grid mismatch")
    slots = []
    for n in range(max(x.max_order, y.max_order) + 1):
        a, b = x.kernel(n), y.kernel(n)
        if a is None and b is None:
            slots.append(None)
        elif a is None:
            slots.append(b)
        elif b is None:
            slots.append(a)
        else:
            slots.append(step_kernel(x.grid, n, a.values + b.values, copy=False))
    return _expansion(x.grid, slots)


def scale(a: float, x: ChaosExpansion) -> ChaosExpansion:
    slots = [
        None if k is None else step_kernel(x.grid, n, float(a) * k.values, copy=False)
        for n, k in enumerate(x.kernels)
    ]
    return _expansion(x.grid, slots)


def shift(x: ChaosExpansion, offset: float) -> ChaosExpansion:
    """x + offset as an expansion (adjusts the order-0 slot only)."""
    return add(x, constant(x.grid, offset))


# ---------------------------------------------------------------------------
# Pathwise evaluation


@dataclass(frozen=True)
class _PlanGroup:
    mults: tuple  # Hermite degrees, aligned with the columns of cells
    cells: np.ndarray  # (n_terms, d) distinct cell indices, ascending per row
    coeffs: np.ndarray  # (n_terms,) value * n!/prod(k_r!) * delta^(n/2)


def _build_plan(kernel: StepKernel) -> list:
    n, delta = kernel.order, kernel.grid.delta
    nz = np.argwhere(kernel.values != 0.0)
    if nz.size == 0:
        return []
    multisets = np.unique(np.sort(nz, axis=1), axis=0)
    base = delta ** (n / 2.0) * math.factorial(n)
    groups: dict = {}
    for row in multisets:
        cells: list = []
        mults: list = []
        for j in row:
            if cells and cells[-1] == j:
                mults[-1] += 1
            else:
                cells.append(int(j))
                mults.append(1)
        coeff = float(kernel.values[tuple(row)]) * base
        for k in mults:
            coeff /= math.factorial(k)
        bucket = groups.setdefault(tuple(mults), ([], []))
        bucket[0].append(cells)
        bucket[1].append(coeff)
    return [
        _PlanGroup(
            mults=mults,
            cells=np.asarray(cell_rows, dtype=np.int64),
            coeffs=np.asarray(coeffs, dtype=np.float64),
        )
        for mults, (cell_rows, coeffs) in groups.items()
    ]


def _plan(kernel: StepKernel) -> list:
    # Kernels are immutable, so the term plan is computed once and stashed on
    # the instance (frozen dataclass, hence the object.__setattr__).
    cached = getattr(kernel, "_eval_plan", None)
    if cached is None:
        cached = _build_plan(kernel)
        object.__setattr__(kernel, "_eval_plan", cached)
    return cached


def evaluate_batch(x: ChaosExpansion, increments: np.ndarray) -> np.ndarray:
    """Evaluate x pathwise on a (n_samples, m) array of increment vectors."""
    arr = np.asarray(increments, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != x.grid.m:
        raise ValueError(
            f"expected increments of shape (n_samples, {x.grid.m}), got {arr.shape}"
        )
    n_samples = arr.shape[0]
    out = np.full(n_samples, x.expectation, dtype=np.float64)
    plans = [(n, _plan(k)) for n, k in enumerate(x.kernels) if k is not None and n >= 1]
    if not plans or n_samples == 0:
        return out
    z = arr / math.sqrt(x.grid.delta)
    degrees = sorted({k for _, plan in plans for group in plan for k in group.mults})
    htab = {k: hermite_eval(k, z) for k in degrees}
    # Slab the term dimension so the sample-by-term product stays in cache-
    # friendly memory.
    for _, plan in plans:
        for group in plan:
            n_terms = group.cells.shape[0]
            slab = max(1, (1 << 22) // max(n_samples, 1))
            for lo in range(0, n_terms, slab):
                sel = slice(lo, min(n_terms, lo + slab))
                cells = group.cells[sel]
                prod = htab[group.mults[0]][:, cells[:, 0]].copy()
                for r in range(1, len(group.mults)):
                    prod *= htab[group.mults[r]][:, cells[:, r]]
                # Pairwise numpy reduction, not BLAS, so the sum order is fixed.
                out += (prod * group.coeffs[sel]).sum(axis=1)
    return out


def evaluate(x: ChaosExpansion, sample) -> float:
    """I-sum of x at one increment vector (GaussianSample or length-m array)."""
    if isinstance(sample, GaussianSample):
        if sample.grid != x.grid:
            raise ValueError("sample grid does not match expansion grid")
        row = sample.increments
    else:
        row = np.asarray(sample, dtype=np.float64)
        if row.shape != (x.grid.m,):
            raise ValueError(f"expected {x.grid.m} increments, got shape {row.shape}")
    return float(evaluate_batch(x, row[None, :])[0])


def evaluate_samples(
    exps: Sequence[ChaosExpansion],
    n_samples: int,
    stream: IncrementStream,
    workers: int = 1,
) -> list:
    """Evaluate several expansions on one shared stream of increment vectors.

    Returns one (n_samples,) array per expansion.  Sample i always comes from
    stream index i, so results are identical for any worker count.
    """
    exps = list(exps)
    if not exps:
        return []
    grid = exps[0].grid
    for e in exps:
        if e.grid != grid:
            raise ValueError("all expansions must share one grid")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    outs = [np.empty(n_samples, dtype=np.float64) for _ in exps]
    starts = list(range(0, n_samples, BLOCK_SIZE))

    def run(start: int) -> None:
        count = min(BLOCK_SIZE, n_samples - start)
        xi = sample_increments_block(grid, stream, start, count)
        for j, e in enumerate(exps):
            outs[j][start : start + count] = evaluate_batch(e, xi)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return outs


# ---------------------------------------------------------------------------
# Algebra: products, moments, Gamma functionals


def multiply(x: ChaosExpansion, y: ChaosExpansion) -> ChaosExpansion:
    """Product of two expansions via the multiple-integral product formula.

    Every contraction is symmetrized before accumulation.  Output orders above
    MAX_PRODUCT_ORDER are rejected.
    """
    if x.grid != y.grid:
        raise ValueError("grid mismatch")
    x_orders = x.nonzero_orders()
    y_orders = y.nonzero_orders()
    if not x_orders or not y_orders:
        return constant(x.grid, 0.0)
    out_max = max(x_orders) + max(y_orders)
    if out_max > MAX_PRODUCT_ORDER:
        raise ValueError(
            f"product order {out_max} exceeds the supported maximum {MAX_PRODUCT_ORDER}"
        )
    acc: dict = {}
    for p in x_orders:
        f = x.kernels[p]
        for q in y_orders:
            g = y.kernels[q]
            for ell in range(min(p, q) + 1):
                coef = (
                    math.factorial(ell) * math.comb(p, ell) * math.comb(q, ell)
                )
                term = symmetrize(contract(f, g, ell))
                slot = p + q - 2 * ell
                if slot in acc:
                    acc[slot] = acc[slot] + coef * term.values
                else:
                    acc[slot] = coef * term.values
    slots = [None] * (max(acc) + 1)
    for slot, vals in acc.items():
        slots[slot] = step_kernel(x.grid, slot, vals, copy=False)
    return _expansion(x.grid, slots)


def second_moment(x: ChaosExpansion) -> float:
    """E[x^2] = f_0^2 + sum_n n! <f_n, f_n>, exact."""
    total = x.expectation ** 2
    for n, k in enumerate(x.kernels):
        if n >= 1 and k is not None:
            total += math.factorial(n) * inner_product(k, k)
    return total


def variance(x: ChaosExpansion) -> float:
    return second_moment(x) - x.expectation ** 2


def _require_centered(x: ChaosExpansion, what: str) -> None:
    if x.expectation != 0.0:
        raise ValueError(f"{what} requires a centered expansion (order-0 slot is {x.expectation})")


def _fourth_cumulant_single(f: StepKernel) -> float:
    """Fourth cumulant of I_q(f) through contraction norms.

    k4 = sum_{p=1}^{q-1} [ (q! C(q,p))^2 ||f ox_p f||^2
                           + (p! C(q,p)^2)^2 (2q-2p)! ||sym(f ox_p f)||^2 ]

    This is the product-formula expansion of E[X^4] - 3 E[X^2]^2 with the
    order-2q term eliminated, so no tensor above order 2q - 2 is formed.
    """
    q = f.order
    total = 0.0
    for p in range(1, q):
        raw = contract(f, f, p)
        sym = symmetrize(raw)
        total += (math.factorial(q) * math.comb(q, p)) ** 2 * inner_product(raw, raw)
        total += (
            (math.factorial(p) * math.comb(q, p) ** 2) ** 2
            * math.factorial(2 * q - 2 * p)
            * inner_product(sym, sym)
        )
    return total


def fourth_cumulant(x: ChaosExpansion) -> float:
    """k4(x) = E[x^4] - 3 E[x^2]^2 for a centered expansion, exact.

    Single-order inputs use the contraction-norm expansion, which never forms
    a kernel above order 2n - 2; mixed-order inputs square the expansion via
    the product formula.
    """
    _require_centered(x, "fourth_cumulant")
    orders = [n for n in x.nonzero_orders() if n >= 1]
    if not orders:
        return 0.0
    if len(orders) == 1:
        if orders[0] == 1:
            return 0.0
        return _fourth_cumulant_single(x.kernels[orders[0]])
    squared = multiply(x, x)
    return second_moment(squared) - 3.0 * second_moment(x) ** 2


def cross_gamma(x: ChaosExpansion, y: ChaosExpansion) -> ChaosExpansion:
    """The expansion of <Dx, D(-L)^{-1} y> for centered x, y.

    For kernel orders (n, m) the contribution is

        n * sum_{k=0}^{min(n,m)-1} k! C(n-1,k) C(m-1,k)
            I_{n+m-2-2k}(sym(f ox_{k+1} g))

    which follows from Dx = sum_n n I_{n-1}(f_n(., t)) and
    D(-L)^{-1} y = sum_m I_{m-1}(g_m(., t)) plus the product formula.
    """
    if x.grid != y.grid:
        raise ValueError("grid mismatch")
    _require_centered(x, "cross_gamma")
    _require_centered(y, "cross_gamma")
    acc: dict = {}
    for n in x.nonzero_orders():
        if n < 1:
            continue
        f = x.kernels[n]
        for m_ord in y.nonzero_orders():
            if m_ord < 1:
                continue
            g = y.kernels[m_ord]
            for k in range(min(n, m_ord)):
                coef = (
                    n
                    * math.factorial(k)
                    * math.comb(n - 1, k)
                    * math.comb(m_ord - 1, k)
                )
                term = symmetrize(contract(f, g, k + 1))
                slot = n + m_ord - 2 - 2 * k
                if slot in acc:
                    acc[slot] = acc[slot] + coef * term.values
                else:
                    acc[slot] = coef * term.values
    if not acc:
        return constant(x.grid, 0.0)
    slots = [None] * (max(acc) + 1)
    for slot, vals in acc.items():
        slots[slot] = step_kernel(x.grid, slot, vals, copy=False)
    return _expansion(x.grid, slots)


def gamma(x: ChaosExpansion) -> ChaosExpansion:
    """<Dx, D(-L)^{-1} x>; its expectation equals E[x^2] for centered x."""
    return cross_gamma(x, x)


def gamma_residual(x: ChaosExpansion, c: float) -> float:
    """E[(c - <Dx, D(-L)^{-1} x>)^2], exact through the expansion algebra."""
    resid = add(constant(x.grid, float(c)), scale(-1.0, gamma(x)))
    return second_moment(resid)


# ---------------------------------------------------------------------------
# Serialization


def expansion_to_dict(x: ChaosExpansion) -> dict:
    return {
        "m": x.grid.m,
        "max_order": x.max_order,
        "kernels": [None if k is None else kernel_to_dict(k) for k in x.kernels],
    }


def expansion_from_dict(data: dict) -> ChaosExpansion:
    grid = make_grid(int(data["m"]))
    slots = [
        None if entry is None else kernel_from_dict(entry)
        for entry in data["kernels"]
    ]
    return chaos_expansion(grid, slots)


def save_expansion(x: ChaosExpansion, path) -> None:
    Path(path).write_text(json.dumps(expansion_to_dict(x)))


def load_expansion(path) -> ChaosExpansion:
    return expansion_from_dict(json.loads(Path(path).read_text()))
