"""Invariant coordinate ideals and (persistent) irreducibility classification.

In R^n with the entrywise order, closed ideals are exactly the coordinate
spans, so a subset S of indices stands for the ideal span{e_i : i in S}.
Invariance of that ideal under e^{tA} for every t >= 0 reduces, for matrix
generators, to a zero pattern of A: no entry may carry mass from S into its
complement.  Irreducibility is then strong connectivity of the entry
digraph, which this module decides by strongly connected components and
cross-checks against brute-force subset enumeration.

For function-space carriers no such finite reduction exists; there the
module samples duality pairings <phi, T(t) f> over positive test pairs and
increasing time thresholds.  Three nested conditions are tracked:

  * some-time:            exists t >= 0 with <phi, T(t) f> != 0
  * large-times-or-zero:  for every threshold t0 there is such a t in
                          {0} union [t0, inf)
  * large-times:          for every threshold t0 there is such a t >= t0

(the third implies the second implies the first).  Sampling can witness
these or leave them open; definite violations are only reported with an
exact certificate (a nilpotent family, an identically vanishing pairing of
step functions, or an unreachable index pattern).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ConsistencyViolation,
    DimensionTooLarge,
    PremiseViolation,
    SpectralBoundNotNegative,
)
from .lattice import GaugeContext, IdealMask, as_matrix, as_vector, gauge_norm
from .semigroup import MatrixSemigroup, TimeGrid, expm

__all__ = [
    "structural_threshold",
    "sign_pattern_adjacency",
    "near_threshold_entries",
    "tarjan_scc",
    "reachable_from",
    "ideal_invariant_under_generator",
    "enumerate_invariant_ideals",
    "ConditionEntry",
    "ConditionsTable",
    "weak_conditions_test",
    "IrreducibilityReport",
    "classify",
    "PrincipalIdealReport",
    "eventual_invariance_of_principal_ideal",
    "build_super_fixed_vector",
    "NonvanishingReport",
    "strict_nonvanishing_check",
    "COND_SOME_TIME",
    "COND_LARGE_TIMES_OR_ZERO",
    "COND_LARGE_TIMES",
]

COND_SOME_TIME = "some-time"
COND_LARGE_TIMES_OR_ZERO = "large-times-or-zero"
COND_LARGE_TIMES = "large-times"

PERSISTENTLY_IRREDUCIBLE = "PersistentlyIrreducible"
IRREDUCIBLE_NOT_PERSISTENT = "IrreducibleNotPersistent"
REDUCIBLE = "Reducible"


# ---------------------------------------------------------------------------
# Sign-pattern digraph


def structural_threshold(A, tol: float) -> float:
    """Magnitude below which an entry counts as structurally zero."""
    A = as_matrix(A)
    return float(tol) * (1.0 + float(np.max(np.abs(A))))


def sign_pattern_adjacency(A, threshold: float = 0.0):
    """Adjacency lists of the entry digraph: edge j -> i iff |A_ij| > threshold.

    An edge j -> i means mass can flow from coordinate j to coordinate i,
    so an invariant coordinate set must be closed under out-edges.
    """
    A = as_matrix(A)
    n = A.shape[0]
    adj = [[] for _ in range(n)]
    for j in range(n):
        for i in range(n):
            if i != j and abs(A[i, j]) > threshold:
                adj[j].append(i)
    return adj


def near_threshold_entries(A, threshold: float, decade: float = 10.0):
    """Off-diagonal entries within a decade of the structural-zero cutoff.

    These are the entries whose presence/absence in the sign pattern is
    fragile; reports list them so a borderline classification is visible.
    """
    A = as_matrix(A)
    n = A.shape[0]
    out = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            mag = abs(A[i, j])
            if mag > 0.0 and threshold / decade <= mag <= threshold * decade:
                out.append((i, j, float(A[i, j])))
    return tuple(out)


def tarjan_scc(adj):
    """Strongly connected components (iterative Tarjan), members sorted."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def reachable_from(adj, starts):
    """Vertices reachable from `starts` (including the starts themselves)."""
    seen = set(starts)
    frontier = list(starts)
    while frontier:
        v = frontier.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return seen


# ---------------------------------------------------------------------------
# Invariant ideals of a matrix generator


def _as_mask(S, dim: int) -> IdealMask:
    if isinstance(S, IdealMask):
        if S.dim != dim:
            raise ValueError(f"ideal mask dimension {S.dim} != matrix dimension {dim}")
        return S
    return IdealMask.of(S, dim)


def ideal_invariant_under_generator(A, S, tol: float = 0.0) -> bool:
    """True iff the coordinate ideal S is invariant under every e^{tA}.

    For matrix semigroups (analytic) this is equivalent to A itself leaving
    the span invariant: |A_ij| <= tol for all i outside S, j in S.
    """
    A = as_matrix(A)
    mask = _as_mask(S, A.shape[0])
    if mask.is_trivial:
        return True
    members = mask.sorted_members()
    comp = sorted(mask.complement().members)
    block = np.abs(A[np.ix_(comp, members)])
    return bool(np.max(block) <= tol)


def _ideal_sort_key(mask: IdealMask):
    return (len(mask), mask.sorted_members())


def _enumerate_brute(A, tol: float):
    n = A.shape[0]
    found = []
    for bits in range(1 << n):
        members = [i for i in range(n) if bits >> i & 1]
        mask = IdealMask.of(members, n)
        if ideal_invariant_under_generator(A, mask, tol):
            found.append(mask)
    return sorted(found, key=_ideal_sort_key)


def _enumerate_graph(A, tol: float):
    n = A.shape[0]
    adj = sign_pattern_adjacency(A, tol)
    comps = tarjan_scc(adj)
    k = len(comps)
    if k > 20:
        raise DimensionTooLarge(
            f"{k} strongly connected components; closed-set enumeration capped at 20"
        )
    comp_of = [0] * n
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    out_mask = [0] * k
    for ci, comp in enumerate(comps):
        for v in comp:
            for w in adj[v]:
                if comp_of[w] != ci:
                    out_mask[ci] |= 1 << comp_of[w]
    found = []
    for bits in range(1 << k):
        closure = 0
        for ci in range(k):
            if bits >> ci & 1:
                closure |= out_mask[ci]
        if closure & ~bits:
            continue
        members = [v for ci in range(k) if bits >> ci & 1 for v in comps[ci]]
        found.append(IdealMask.of(members, n))
    return sorted(found, key=_ideal_sort_key)


def enumerate_invariant_ideals(A, tol: float = 0.0, method: str = "auto"):
    """All invariant coordinate ideals of A, as sorted IdealMasks.

    method "auto" runs both the brute-force subset scan (n <= 16) and the
    component-closure graph method and cross-checks them; "brute"/"graph"
    force a single route.  The trivial ideals (empty, full) are included.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if n > 24:
        raise DimensionTooLarge(f"dimension {n} exceeds the enumeration cap of 24")
    if method not in ("auto", "brute", "graph"):
        raise ValueError(f"unknown method {method!r}")
    if method == "graph":
        return _enumerate_graph(A, tol)
    if method == "brute":
        if n > 16:
            raise DimensionTooLarge(f"brute-force enumeration capped at 16, got {n}")
        return _enumerate_brute(A, tol)
    graph = _enumerate_graph(A, tol)
    if n > 16:
        return graph
    brute = _enumerate_brute(A, tol)
    if brute != graph:
        sym = set(brute).symmetric_difference(graph)
        raise ConsistencyViolation(
            "brute-force and graph-closure ideal enumerations disagree",
            witnesses=[m.sorted_members() for m in sorted(sym, key=_ideal_sort_key)],
        )
    return brute


# ---------------------------------------------------------------------------
# Weak duality conditions


@dataclass(frozen=True)
class ConditionEntry:
    """Aggregated outcome of one duality condition over all test pairs."""

    key: str
    status: str  # "holds" | "violated" | "grid-limited"
    witnesses: tuple = ()  # (f_label, phi_label, t0, t, value)
    violations: tuple = ()  # (f_label, phi_label, t0, certificate)
    unresolved: tuple = ()  # (f_label, phi_label, t0)


@dataclass(frozen=True)
class ConditionsTable:
    entries: tuple  # ConditionEntry for some-time, large-times-or-zero, large-times
    diagram_consistent: bool
    pair_labels: tuple
    t0_list: tuple
    times: tuple
    tol: float

    def entry(self, key: str) -> ConditionEntry:
        for e in self.entries:
            if e.key == key:
                return e
        raise KeyError(key)

    def all_hold(self) -> bool:
        return all(e.status == "holds" for e in self.entries)


def _support_indices(v) -> set:
    vec = as_vector(v)
    return {int(i) for i in np.nonzero(vec)[0]}


def _step_depth_for_cert(f, phi, cap: int = 12):
    """Dyadic depth covering every breakpoint of f and phi, or None."""
    top = 1
    for fn in (f, phi):
        for b in fn.breakpoints:
            den = b.denominator
            if den & (den - 1):  # not a power of two
                return None
            top = max(top, den)
    depth = top.bit_length() - 1
    return depth if depth <= cap else None


def _exact_zero_certificate(provider, f, phi):
    """Certificate string if <phi, T(t) f> = 0 for every t >= 0, else None.

    Exact nilpotent step carriers: the pairing is piecewise linear in t
    with kinks on the dyadic breakpoint lattice, so vanishing at every
    lattice node up to the nilpotency time forces identical vanishing.
    """
    nil = getattr(provider, "nilpotent_time", None)
    if not getattr(provider, "exact_arithmetic", False) or nil is None:
        return None
    depth = _step_depth_for_cert(f, phi)
    if depth is None:
        return None
    den = 1 << depth
    horizon = Fraction(nil)
    m = 0
    while True:
        t = Fraction(m, den)
        if t > horizon:
            break
        if provider.condition_probe(t, f, phi) != 0:
            return None
        m += 1
    return (
        f"pairing vanishes at every node m/{den} up to the nilpotency time "
        f"{nil} and the family is zero beyond it; piecewise linearity makes "
        "this an identity"
    )


def weak_conditions_test(
    provider,
    test_vectors=None,
    test_functionals=None,
    t0_list=(0.0, 1.0, 5.0),
    grid: TimeGrid | None = None,
    tol: float = 1e-9,
) -> ConditionsTable:
    """Sample the three weak duality conditions over positive test pairs.

    Every (f, phi, t0) triple is probed on the admissible time samples; a
    sample with |<phi, T(t) f>| > tol is a witness.  Definite violations
    carry an exact certificate (nilpotency, identically vanishing step
    pairing, or unreachable index pattern); everything else that lacks a
    witness stays "grid-limited".  The aggregated table also re-checks the
    implication chain large-times => large-times-or-zero => some-time on
    the sampled data.
    """
    defaults_used = test_vectors is None and test_functionals is None
    if test_vectors is None:
        test_vectors = list(provider.condition_basis())
    if test_functionals is None:
        test_functionals = list(test_vectors)
    if not defaults_used:
        for i, f in enumerate(test_vectors):
            provider.check_positive(f, label=f"f{i}")
        for j, phi in enumerate(test_functionals):
            provider.check_positive(phi, label=f"phi{j}")

    if grid is None:
        grid = TimeGrid.default()
    t0_list = tuple(float(t0) for t0 in t0_list)
    candidates = list(grid) + [0.0] + list(t0_list)
    for t0 in t0_list:
        candidates.extend([t0 + d for d in (0.0, 0.5, 1.0, 2.0)])
    nil = getattr(provider, "nilpotent_time", None)
    if nil is not None:
        # approach the death time from below: witnesses often live there
        depth = getattr(provider, "depth", 8)
        candidates.extend(float(nil) * (1.0 - 0.5 ** i) for i in range(1, depth + 1))
    times = provider.admissible_times(candidates)
    if not times or times[0] != 0:
        times = [type(times[0])(0) if times else 0.0] + list(times)

    # unreachability certificates need the generator's entry digraph
    adj = None
    if isinstance(provider, MatrixSemigroup):
        adj = sign_pattern_adjacency(provider.A, structural_threshold(provider.A, tol))

    f_labels = [f"f{i}" for i in range(len(test_vectors))]
    phi_labels = [f"phi{j}" for j in range(len(test_functionals))]
    pair_labels = []
    samples = {}
    zero_certs = {}
    for i, f in enumerate(test_vectors):
        for j, phi in enumerate(test_functionals):
            pair = (i, j)
            pair_labels.append((f_labels[i], phi_labels[j]))
            vals = [(t, provider.condition_probe(t, f, phi)) for t in times]
            samples[pair] = vals
            cert = None
            if adj is not None:
                reach = reachable_from(adj, _support_indices(f))
                if not (reach & _support_indices(phi)):
                    cert = (
                        "no directed path in the entry digraph from supp(f) to "
                        "supp(phi): the pairing vanishes identically for the "
                        "thresholded sign pattern"
                    )
            if cert is None and not any(v != 0 for _, v in vals):
                cert = _exact_zero_certificate(provider, f, phi)
            zero_certs[pair] = cert

    def first_witness(pair, lo=None):
        for t, v in samples[pair]:
            if lo is not None and t < lo:
                continue
            if abs(v) > tol:
                return t, v
        return None

    some_wit, some_vio, some_unres = [], [], []
    for (i, j), label in zip(samples.keys(), pair_labels):
        w = first_witness((i, j))
        if w is not None:
            some_wit.append((label[0], label[1], None, w[0], w[1]))
        elif zero_certs[(i, j)]:
            some_vio.append((label[0], label[1], None, zero_certs[(i, j)]))
        else:
            some_unres.append((label[0], label[1], None))

    large_wit, large_vio, large_unres = [], [], []
    orzero_wit, orzero_vio, orzero_unres = [], [], []
    for (i, j), label in zip(samples.keys(), pair_labels):
        cert_zero = zero_certs[(i, j)]
        val0 = samples[(i, j)][0][1]
        for t0 in t0_list:
            w = first_witness((i, j), lo=t0)
            row = (label[0], label[1], t0)
            # large-times: some witness t >= t0
            if w is not None:
                large_wit.append(row + (w[0], w[1]))
            elif cert_zero:
                large_vio.append(row + (cert_zero,))
            elif nil is not None and t0 >= float(nil):
                large_vio.append(
                    row + (f"family is exactly zero for t >= {nil} and t0 >= {nil}",)
                )
            else:
                large_unres.append(row)
            # large-times-or-zero: t = 0 also qualifies
            if abs(val0) > tol:
                orzero_wit.append(row + (times[0], val0))
            elif w is not None:
                orzero_wit.append(row + (w[0], w[1]))
            elif cert_zero:
                orzero_vio.append(row + (cert_zero,))
            elif nil is not None and t0 >= float(nil) and val0 == 0:
                orzero_vio.append(
                    row
                    + (
                        "pairing at t = 0 is exactly zero and the family is "
                        f"exactly zero for t >= {nil}",
                    )
                )
            else:
                orzero_unres.append(row)

    def status(wit, vio, unres):
        if vio:
            return "violated"
        if unres:
            return "grid-limited"
        return "holds"

    entries = (
        ConditionEntry(
            COND_SOME_TIME,
            status(some_wit, some_vio, some_unres),
            tuple(some_wit),
            tuple(some_vio),
            tuple(some_unres),
        ),
        ConditionEntry(
            COND_LARGE_TIMES_OR_ZERO,
            status(orzero_wit, orzero_vio, orzero_unres),
            tuple(orzero_wit),
            tuple(orzero_vio),
            tuple(orzero_unres),
        ),
        ConditionEntry(
            COND_LARGE_TIMES,
            status(large_wit, large_vio, large_unres),
            tuple(large_wit),
            tuple(large_vio),
            tuple(large_unres),
        ),
    )

    # implication chain on the sampled data: every large-times witness row
    # must also be witnessed for large-times-or-zero, and every witnessed
    # row of that condition must have a some-time witness for its pair.
    witnessed_orzero = {(r[0], r[1], r[2]) for r in orzero_wit}
    witnessed_some = {(r[0], r[1]) for r in some_wit}
    diagram = True
    for r in large_wit:
        if (r[0], r[1], r[2]) not in witnessed_orzero:
            diagram = False
    for r in orzero_wit:
        if (r[0], r[1]) not in witnessed_some:
            diagram = False
    by_key = {e.key: e for e in entries}
    if (
        by_key[COND_LARGE_TIMES].status == "holds"
        and by_key[COND_LARGE_TIMES_OR_ZERO].status == "violated"
    ):
        raise ConsistencyViolation(
            "aggregation asserts the large-times condition while refuting "
            "the weaker large-times-or-zero condition"
        )
    return ConditionsTable(
        entries=entries,
        diagram_consistent=diagram,
        pair_labels=tuple(pair_labels),
        t0_list=t0_list,
        times=tuple(times),
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Classification


@dataclass(frozen=True)
class IrreducibilityReport:
    classification: str
    witness_ideal: IdealMask | None
    witness_onset: float | None
    conditions: ConditionsTable | None
    diagram_consistent: bool
    evidence_mode: str  # "certified" | "grid-limited"
    near_threshold: tuple = ()
    notes: str = ""


def _sink_component_witness(A, comps, adj, n) -> IdealMask:
    comp_of = [0] * n
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    sinks = []
    for ci, comp in enumerate(comps):
        if all(comp_of[w] == ci for v in comp for w in adj[v]):
            sinks.append(comp)
    chosen = min(sinks, key=lambda comp: comp[0])
    return IdealMask.of(chosen, n)


def classify(
    provider=None,
    A=None,
    grid: TimeGrid | None = None,
    tol: float = 1e-9,
    t0_list=(0.0, 1.0, 5.0),
) -> IrreducibilityReport:
    """Classify a semigroup as persistently irreducible / irreducible / reducible.

    Matrix generators are decided exactly by strong connectivity of the
    thresholded entry digraph; for them irreducibility and persistent
    irreducibility coincide.  Function-space carriers are assessed from
    sampled duality conditions: a nilpotent family can never be
    persistently irreducible (in dimension > 1), and exact pairing
    witnesses can still certify plain irreducibility; everything else is
    grid-limited evidence, recorded as such in evidence_mode.
    """
    if A is None and isinstance(provider, MatrixSemigroup):
        A = provider.A
    if A is not None:
        A = as_matrix(A)
        if provider is None:
            provider = MatrixSemigroup(A)
        thr = structural_threshold(A, tol)
        adj = sign_pattern_adjacency(A, thr)
        comps = tarjan_scc(adj)
        near = near_threshold_entries(A, thr)
        table = weak_conditions_test(provider, t0_list=t0_list, grid=grid, tol=tol)
        if len(comps) == 1:
            return IrreducibilityReport(
                classification=PERSISTENTLY_IRREDUCIBLE,
                witness_ideal=None,
                witness_onset=None,
                conditions=table,
                diagram_consistent=table.diagram_consistent,
                evidence_mode="certified",
                near_threshold=near,
                notes="entry digraph strongly connected; matrix semigroups are "
                "analytic, so irreducible and persistently irreducible coincide",
            )
        witness = _sink_component_witness(A, comps, adj, A.shape[0])
        if not ideal_invariant_under_generator(A, witness, thr):
            raise ConsistencyViolation(
                "sink-component witness failed re-verification",
                witnesses=[witness.sorted_members()],
            )
        return IrreducibilityReport(
            classification=REDUCIBLE,
            witness_ideal=witness,
            witness_onset=0.0,
            conditions=table,
            diagram_consistent=table.diagram_consistent,
            evidence_mode="certified",
            near_threshold=near,
            notes="witness ideal is invariant for every t >= 0",
        )

    if provider is None:
        raise ValueError("provide a generator matrix or a semigroup provider")

    table = weak_conditions_test(provider, t0_list=t0_list, grid=grid, tol=tol)
    some = table.entry(COND_SOME_TIME)
    large = table.entry(COND_LARGE_TIMES)
    nil = getattr(provider, "nilpotent_time", None)
    dim = provider.carrier_dim
    exact = bool(getattr(provider, "exact_arithmetic", False))

    if nil is not None and (dim is None or dim > 1):
        mode = "certified" if exact and some.status == "holds" else "grid-limited"
        basis_count = len(provider.condition_basis())
        notes = (
            f"family vanishes identically for t >= {nil}, so every coordinate "
            "ideal is invariant from that time on; pairing witnesses "
        )
        notes += (
            "certify plain irreducibility exactly"
            if mode == "certified"
            else "are incomplete on the sampled lattice"
        )
        return IrreducibilityReport(
            classification=IRREDUCIBLE_NOT_PERSISTENT,
            witness_ideal=IdealMask.of([0], basis_count),
            witness_onset=float(nil),
            conditions=table,
            diagram_consistent=table.diagram_consistent,
            evidence_mode=mode,
            notes=notes,
        )

    if some.status == "violated" and getattr(provider, "is_positive_family", False):
        # for positive families an identically vanishing pairing yields a
        # genuine invariant ideal (reachability closes under composition):
        # take the basis indices the violating f can ever reach
        basis_count = len(provider.condition_basis())
        row = some.violations[0]
        src = int(row[0][1:])
        reached = {src}
        for wrow in some.witnesses:
            if int(wrow[0][1:]) == src:
                reached.add(int(wrow[1][3:]))
        return IrreducibilityReport(
            classification=REDUCIBLE,
            witness_ideal=IdealMask.of(sorted(reached), basis_count),
            witness_onset=0.0,
            conditions=table,
            diagram_consistent=table.diagram_consistent,
            evidence_mode="certified",
            notes="identically vanishing pairing in a positive family: the "
            "closed ideal generated by the orbit of f stays inside the "
            "witness coordinates and misses supp(phi)",
        )

    if large.status == "holds" and some.status == "holds":
        return IrreducibilityReport(
            classification=PERSISTENTLY_IRREDUCIBLE,
            witness_ideal=None,
            witness_onset=None,
            conditions=table,
            diagram_consistent=table.diagram_consistent,
            evidence_mode="grid-limited",
            notes="all sampled thresholds witnessed; the quantifier over all "
            "thresholds cannot be exhausted by sampling",
        )
    return IrreducibilityReport(
        classification=IRREDUCIBLE_NOT_PERSISTENT,
        witness_ideal=None,
        witness_onset=None,
        conditions=table,
        diagram_consistent=table.diagram_consistent,
        evidence_mode="grid-limited",
        notes="incomplete sampling: irreducibility evidence without a "
        "persistent-irreducibility verdict",
    )


# ---------------------------------------------------------------------------
# Principal-ideal eventual invariance and the super-fixed-vector construction


@dataclass(frozen=True)
class PrincipalIdealReport:
    support: IdealMask
    premise_ok: bool
    premise_times: tuple
    onset: float | None
    mask_checks: tuple  # (t, max leak into the complement)
    gauge_checks: tuple  # (t, gauge in, gauge out)
    gauge_bound_ok: bool
    bound_constant: float
    trivial: bool = False
    notes: str = ""


def eventual_invariance_of_principal_ideal(
    provider,
    h,
    t0_premise: float = 0.0,
    grid: TimeGrid | None = None,
    tol: float = 1e-9,
    rng=None,
    n_random: int = 5,
) -> PrincipalIdealReport:
    """Check that the ideal generated by h is eventually invariant.

    Premise: T(t) h <= h on all sampled t >= t0_premise (PremiseViolation
    otherwise).  Conclusions checked on the sampled tail: (a) T(t) maps the
    support-coordinate span into itself, (b) the gauge bound
    gauge(T(t) f, h) <= 2 gauge(f, h) + 1e-9 for random f in the ideal.
    """
    h = as_vector(h)
    if np.min(h) < 0:
        raise PremiseViolation("h must be >= 0", witnesses=[h.tolist()])
    n = h.size
    if not np.any(h > 0):
        return PrincipalIdealReport(
            support=IdealMask.empty(n),
            premise_ok=True,
            premise_times=(),
            onset=0.0,
            mask_checks=(),
            gauge_checks=(),
            gauge_bound_ok=True,
            bound_constant=2.0,
            trivial=True,
            notes="h = 0 generates the zero ideal, which is invariant",
        )
    if grid is None:
        grid = TimeGrid.default()
    times = [t for t in provider.admissible_times(list(grid) + [t0_premise]) if t >= t0_premise]
    if not times:
        raise ValueError("no sampled times at or beyond t0_premise")
    scale = float(np.max(h))
    slack = tol * (1.0 + scale)

    mats = {t: np.asarray(provider.to_dense(t), dtype=float) for t in times}
    for t in times:
        v = mats[t] @ h
        worst = float(np.max(v - h))
        if worst > slack:
            i = int(np.argmax(v - h))
            raise PremiseViolation(
                f"T({float(t):.6g}) h exceeds h at coordinate {i}",
                witnesses=[(float(t), i, float(v[i]), float(h[i]))],
            )

    support = IdealMask.of([int(i) for i in np.nonzero(h > 0)[0]], n)
    comp = sorted(support.complement().members)
    members = support.sorted_members()
    mask_checks = []
    for t in times:
        if comp:
            leak = float(np.max(np.abs(mats[t][np.ix_(comp, members)])))
        else:
            leak = 0.0
        mask_checks.append((float(t), leak))
    leak_tol = tol * (1.0 + max(float(np.max(np.abs(mats[t]))) for t in times))
    onset = None
    for k in range(len(times)):
        if all(leak <= leak_tol for _, leak in mask_checks[k:]):
            onset = float(times[k])
            break

    gauge_checks = []
    gauge_ok = True
    if onset is not None:
        if rng is None:
            rng = np.random.default_rng(20260816)
        ctx = GaugeContext.from_vector(h)
        tail = [t for t in times if t >= onset]
        probe_times = tail[:: max(1, len(tail) // 8)]
        for _ in range(n_random):
            coeffs = rng.uniform(-1.0, 1.0, size=n)
            f = coeffs * h
            g_in = gauge_norm(f, ctx)
            membership_tol = leak_tol * (1.0 + float(np.sum(np.abs(f))))
            for t in probe_times:
                g_out = gauge_norm(mats[t] @ f, ctx, tol=membership_tol)
                gauge_checks.append((float(t), g_in, g_out))
                if g_out > 2.0 * g_in + 1e-9:
                    gauge_ok = False

    return PrincipalIdealReport(
        support=support,
        premise_ok=True,
        premise_times=tuple(float(t) for t in times),
        onset=onset,
        mask_checks=tuple(mask_checks),
        gauge_checks=tuple(gauge_checks),
        gauge_bound_ok=gauge_ok,
        bound_constant=2.0,
        notes="" if onset is not None else "support mask never stabilized on the sampled grid",
    )


def build_super_fixed_vector(A, f, t1: float = 0.0, grid: TimeGrid | None = None, tol: float = 1e-9):
    """h with T(t) h <= h for all t >= 0, built from the tail orbit of f.

    h = e^{t1 A} (-A)^{-1} f is the closed form of the integral of the
    orbit of f from t1 on; it requires the spectral bound to be negative
    and the orbit to stay positive past t1 (both checked).  The returned h
    is asserted positive-nonzero and dominated along its own orbit.
    """
    A = as_matrix(A)
    sb = float(np.max(np.linalg.eigvals(A).real))
    if sb >= 0.0:
        raise SpectralBoundNotNegative(
            f"spectral bound {sb:.6g} is not negative; shift the generator first"
        )
    f = as_vector(f)
    if np.min(f) < 0 or not np.any(f > 0):
        raise PremiseViolation("f must be positive and nonzero", witnesses=[f.tolist()])
    if grid is None:
        grid = TimeGrid.default()
    scale_f = float(np.max(f))
    for t in grid:
        t_shift = float(t) + float(t1)
        v = expm(A, t_shift) @ f
        if float(np.min(v)) < -tol * (1.0 + scale_f):
            i = int(np.argmin(v))
            raise PremiseViolation(
                f"orbit of f leaves the positive cone at t = {t_shift:.6g}",
                witnesses=[(t_shift, i, float(v[i]))],
            )
    h = expm(A, float(t1)) @ np.linalg.solve(-A, f)
    scale_h = float(np.max(np.abs(h)))
    if float(np.min(h)) < -tol * (1.0 + scale_h) or not np.any(h > 0):
        raise ConsistencyViolation(
            "constructed h is not positive-nonzero", witnesses=[h.tolist()]
        )
    h = np.maximum(h, 0.0)
    for t in grid:
        v = expm(A, float(t)) @ h
        if float(np.max(v - h)) > tol * (1.0 + scale_h):
            i = int(np.argmax(v - h))
            raise ConsistencyViolation(
                f"T({float(t):.6g}) h exceeds h",
                witnesses=[(float(t), i, float(v[i]), float(h[i]))],
            )
    return h


# ---------------------------------------------------------------------------
# Strict non-vanishing of orbits under persistent irreducibility


@dataclass(frozen=True)
class NonvanishingReport:
    applicable: bool
    checked: int
    violations: tuple  # (t, label, norm)
    consistent: bool
    tol: float


def strict_nonvanishing_check(
    provider,
    grid: TimeGrid | None = None,
    basis=None,
    tol: float = 1e-9,
    classification: str | None = None,
) -> NonvanishingReport:
    """Verify T(t) f != 0 and T(t)' phi != 0 over sampled times and basis.

    Meaningful for persistently irreducible eventually positive families;
    for anything else (signalled by `classification` or by a nilpotent
    family) the check still runs but violations are expected and do not
    flag an inconsistency.
    """
    if classification is not None:
        applicable = classification == PERSISTENTLY_IRREDUCIBLE
    else:
        applicable = getattr(provider, "nilpotent_time", None) is None
    if basis is None:
        basis = list(provider.condition_basis())
    if grid is None:
        grid = TimeGrid.default()
    times = provider.admissible_times(grid)
    violations = []
    checked = 0
    for t in times:
        for idx, f in enumerate(basis):
            checked += 2
            fwd = provider.vec_norm(provider.apply(t, f))
            if fwd <= tol:
                violations.append((float(t), f"f{idx}", float(fwd)))
            adj = provider.vec_norm(provider.apply_adjoint(t, f))
            if adj <= tol:
                violations.append((float(t), f"phi{idx}", float(adj)))
    consistent = (not violations) if applicable else True
    return NonvanishingReport(
        applicable=applicable,
        checked=checked,
        violations=tuple(violations),
        consistent=consistent,
        tol=tol,
    )
