"""Metric graph data model: finite edges, leads, and vertex matching conditions.

A graph consists of a compact core (finite edges with lengths) and
semi-infinite leads.  Vertices carry matching conditions ``A f(v) + B f'(v) = 0``
coupling edge values and outgoing derivatives; a condition is admissible when
``(A B)`` has full rank and ``A B*`` is Hermitian.  Vertices with a lead
attached form the boundary set B.

Conventions fixed here and relied on by every other module:

* each edge has a coordinate x in [0, len] with x = 0 at ``ends[0]``;
* the outgoing derivative at the x = 0 end is ``+u'(0)`` and at the x = len
  end is ``-u'(len)``;
* condition matrices act on the slots listed in ``edge_order``; constructors
  build that list in lexicographic (id, endpoint) order, and transformations
  preserve the stored order explicitly;
* boundary vertices are indexed 0..n-1 in sorted id order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .numformat import format_complex, parse_complex

RANK_TOL = 1e-10
HERMIT_TOL = 1e-10

#: A coordinate slot at a vertex: (edge or lead id, endpoint index).
#: Finite edges expose endpoint 0 (x=0) and endpoint 1 (x=len); leads only 0.
Slot = tuple[str, int]

ConditionSpec = Union[str, tuple[np.ndarray, np.ndarray]]


class GraphError(ValueError):
    """Structural or invariant violation in a graph description."""


@dataclass(frozen=True, eq=False)
class VertexCondition:
    """Matching condition A f(v) + B f'(v) = 0 in the slot order ``edge_order``."""

    a: np.ndarray
    b: np.ndarray
    edge_order: tuple[Slot, ...]

    def __post_init__(self):
        a = np.array(self.a, dtype=complex)
        b = np.array(self.b, dtype=complex)
        d = len(self.edge_order)
        if a.shape != (d, d) or b.shape != (d, d):
            raise GraphError(
                f"condition matrices must be {d}x{d} for {d} slots, "
                f"got {a.shape} and {b.shape}"
            )
        if len(set(self.edge_order)) != d:
            raise GraphError("edge_order lists a slot twice")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "edge_order", tuple(self.edge_order))

    @property
    def degree(self) -> int:
        return len(self.edge_order)


@dataclass(frozen=True)
class ConditionReport:
    ok: bool
    failures: tuple[str, ...]
    rank: int
    rank_defect: float
    hermiticity_defect: float


def validate_condition(cond: VertexCondition) -> ConditionReport:
    """Check admissibility: rank(A B) = degree and A B* Hermitian.

    Shape problems raise at construction; this only measures the two
    invariants and reports defects.
    """
    d = cond.degree
    stacked = np.hstack([cond.a, cond.b])
    svals = np.linalg.svd(stacked, compute_uv=False)
    top = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > RANK_TOL * max(top, 1e-300)))
    failures = []
    rank_defect = float(svals[d - 1] / top) if top > 0 else 0.0
    if top == 0.0 or svals[d - 1] <= RANK_TOL * top:
        failures.append(f"rank {rank} < {d}")
    h = cond.a @ cond.b.conj().T
    herm_defect = float(np.linalg.norm(h - h.conj().T, 2))
    scale = max(1.0, float(np.linalg.norm(cond.a, 2) * np.linalg.norm(cond.b, 2)))
    if herm_defect > HERMIT_TOL * scale:
        failures.append(f"A B* not Hermitian (defect {herm_defect:.3e})")
    return ConditionReport(
        ok=not failures,
        failures=tuple(failures),
        rank=rank,
        rank_defect=rank_defect,
        hermiticity_defect=herm_defect,
    )


def standard_condition(edge_order: Sequence[Slot]) -> VertexCondition:
    """Continuity across all slots plus a zero sum of outgoing derivatives.

    Degree 1 reduces to the Neumann condition u'(v) = 0.
    """
    d = len(edge_order)
    if d < 1:
        raise GraphError("standard condition needs degree >= 1")
    a = np.zeros((d, d), dtype=complex)
    b = np.zeros((d, d), dtype=complex)
    for i in range(d - 1):
        a[i, i] = 1.0
        a[i, i + 1] = -1.0
    b[d - 1, :] = 1.0
    return VertexCondition(a, b, tuple(edge_order))


def dirichlet_condition(edge_order: Sequence[Slot]) -> VertexCondition:
    d = len(edge_order)
    if d < 1:
        raise GraphError("dirichlet condition needs degree >= 1")
    return VertexCondition(np.eye(d, dtype=complex), np.zeros((d, d), dtype=complex),
                           tuple(edge_order))


def neumann_condition(edge_order: Sequence[Slot]) -> VertexCondition:
    d = len(edge_order)
    if d < 1:
        raise GraphError("neumann condition needs degree >= 1")
    return VertexCondition(np.zeros((d, d), dtype=complex), np.eye(d, dtype=complex),
                           tuple(edge_order))


def conditions_equivalent(c1: VertexCondition, c2: VertexCondition) -> bool:
    """True when both conditions define the same subspace on the same slots."""
    if set(c1.edge_order) != set(c2.edge_order):
        return False
    perm = [c2.edge_order.index(slot) for slot in c1.edge_order]
    s1 = np.hstack([c1.a, c1.b])
    s2 = np.hstack([c2.a[:, perm], c2.b[:, perm]])
    stacked = np.vstack([s1, s2])
    svals = np.linalg.svd(stacked, compute_uv=False)
    if svals[0] == 0:
        return False
    rank = int(np.sum(svals > RANK_TOL * svals[0]))
    return rank == c1.degree


@dataclass(frozen=True)
class Edge:
    id: str
    ends: tuple[str, str]
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise GraphError(f"edge {self.id!r} has non-positive length {self.length}")


@dataclass(frozen=True)
class Lead:
    id: str
    vertex: str


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Compact core plus leads, immutable after construction.

    ``conditions`` maps every declared vertex id to its condition; the
    incident slots of each vertex must match its condition's ``edge_order``
    exactly.  At least one lead is required.
    """

    edges: tuple[Edge, ...]
    leads: tuple[Lead, ...]
    conditions: Mapping[str, VertexCondition]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=lambda e: e.id)))
        object.__setattr__(self, "leads", tuple(sorted(self.leads, key=lambda l: l.id)))
        object.__setattr__(self, "conditions", dict(self.conditions))
        self._validate()

    def _validate(self) -> None:
        ids = [e.id for e in self.edges] + [l.id for l in self.leads]
        if len(set(ids)) != len(ids):
            raise GraphError("edge and lead ids must be globally unique")
        if not self.leads:
            raise GraphError("graph needs at least one lead")
        incident: dict[str, set[Slot]] = {v: set() for v in self.conditions}
        for e in self.edges:
            for end, v in enumerate(e.ends):
                if v not in self.conditions:
                    raise GraphError(f"edge {e.id!r} references undeclared vertex {v!r}")
                incident[v].add((e.id, end))
        for l in self.leads:
            if l.vertex not in self.conditions:
                raise GraphError(f"lead {l.id!r} references undeclared vertex {l.vertex!r}")
            incident[l.vertex].add((l.id, 0))
        for v, cond in self.conditions.items():
            slots = incident[v]
            if not slots:
                raise GraphError(f"vertex {v!r} is isolated")
            if set(cond.edge_order) != slots:
                raise GraphError(
                    f"condition at vertex {v!r} covers slots {sorted(cond.edge_order)}, "
                    f"incident slots are {sorted(slots)}"
                )
            report = validate_condition(cond)
            if not report.ok:
                raise GraphError(
                    f"inadmissible condition at vertex {v!r}: " + "; ".join(report.failures)
                )

    # -- lookups ------------------------------------------------------------

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def lead_map(self) -> dict[str, Lead]:
        return {l.id: l for l in self.leads}

    @cached_property
    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.conditions))

    @cached_property
    def boundary_vertices(self) -> tuple[str, ...]:
        return tuple(sorted({l.vertex for l in self.leads}))

    @cached_property
    def boundary_index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.boundary_vertices)}

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_vertices)

    def condition(self, vertex: str) -> VertexCondition:
        return self.conditions[vertex]

    def degree(self, vertex: str) -> int:
        return self.conditions[vertex].degree

    def edge_slots(self, vertex: str) -> tuple[Slot, ...]:
        """Finite-edge slots at a vertex, in stored condition order."""
        return tuple(s for s in self.conditions[vertex].edge_order if s[0] in self.edge_map)

    def leads_at(self, vertex: str) -> tuple[Lead, ...]:
        return tuple(l for l in self.leads if l.vertex == vertex)

    @cached_property
    def shortest_edge_length(self) -> float:
        return min(e.length for e in self.edges) if self.edges else 0.0

    @cached_property
    def longest_edge_length(self) -> float:
        return max(e.length for e in self.edges) if self.edges else 0.0

    # -- normal form ---------------------------------------------------------

    def _lead_is_normalized(self, lead: Lead) -> bool:
        v = lead.vertex
        cond = self.conditions[v]
        if cond.degree != 2:
            return False
        if len(self.leads_at(v)) != 1 or len(self.edge_slots(v)) != 1:
            return False
        return conditions_equivalent(cond, standard_condition(cond.edge_order))

    @cached_property
    def is_normalized(self) -> bool:
        return all(self._lead_is_normalized(l) for l in self.leads)

    def require_normalized(self) -> None:
        if not self.is_normalized:
            raise GraphError(
                "graph is not in boundary normal form; apply normalize_boundary first"
            )


def _lex_order(slots: Iterable[Slot]) -> tuple[Slot, ...]:
    return tuple(sorted(slots))


def _make_condition(spec: ConditionSpec, edge_order: tuple[Slot, ...]) -> VertexCondition:
    if isinstance(spec, str):
        name = spec.lower()
        if name == "standard":
            return standard_condition(edge_order)
        if name == "dirichlet":
            return dirichlet_condition(edge_order)
        if name == "neumann":
            return neumann_condition(edge_order)
        raise GraphError(f"unknown condition kind {spec!r}")
    a, b = spec
    return VertexCondition(np.asarray(a), np.asarray(b), edge_order)


def build_graph(
    *,
    vertices: Mapping[str, ConditionSpec],
    edges: Iterable[tuple[str, str, str, float]],
    leads: Iterable[tuple[str, str]],
) -> MetricGraph:
    """Assemble a graph; condition matrices act in lexicographic slot order.

    ``edges`` rows are (id, end0, end1, length); ``leads`` rows (id, vertex).
    """
    edge_objs = tuple(Edge(eid, (v0, v1), float(ln)) for eid, v0, v1, ln in edges)
    lead_objs = tuple(Lead(lid, v) for lid, v in leads)
    incident: dict[str, list[Slot]] = {v: [] for v in vertices}
    for e in edge_objs:
        for end, v in enumerate(e.ends):
            if v not in incident:
                raise GraphError(f"edge {e.id!r} references undeclared vertex {v!r}")
            incident[v].append((e.id, end))
    for l in lead_objs:
        if l.vertex not in incident:
            raise GraphError(f"lead {l.id!r} references undeclared vertex {l.vertex!r}")
        incident[l.vertex].append((l.id, 0))
    conditions = {
        v: _make_condition(spec, _lex_order(incident[v])) for v, spec in vertices.items()
    }
    return MetricGraph(edge_objs, lead_objs, conditions)


def _fresh_id(base: str, used: set[str]) -> str:
    candidate = base
    while candidate in used:
        candidate += "x"
    used.add(candidate)
    return candidate


def normalize_boundary(graph: MetricGraph, offset: float) -> MetricGraph:
    """Split each lead at distance ``offset`` so boundary vertices are degree
    two with the standard condition.

    Already-normalized leads are left untouched, so the map is idempotent.
    The new stub edge carries x = 0 at the old attachment vertex, which keeps
    the old condition matrices valid with the lead slot rewritten in place;
    the operator described by the graph is unchanged.
    """
    if not offset > 0:
        raise GraphError(f"offset must be positive, got {offset}")
    edges = list(graph.edges)
    leads = {l.id: l for l in graph.leads}
    conditions = dict(graph.conditions)
    used = {e.id for e in graph.edges} | set(leads) | set(conditions)

    for lead_id in sorted(leads):
        lead = leads[lead_id]
        current = MetricGraph(tuple(edges), tuple(leads.values()), conditions)
        if current._lead_is_normalized(lead):
            continue
        v = lead.vertex
        new_vertex = _fresh_id(f"{lead_id}_b", used)
        stub_id = _fresh_id(f"{lead_id}_s", used)
        edges.append(Edge(stub_id, (v, new_vertex), float(offset)))
        leads[lead_id] = Lead(lead_id, new_vertex)
        old = conditions[v]
        new_order = tuple(
            (stub_id, 0) if slot == (lead_id, 0) else slot for slot in old.edge_order
        )
        conditions[v] = VertexCondition(old.a, old.b, new_order)
        conditions[new_vertex] = standard_condition(_lex_order([(stub_id, 1), (lead_id, 0)]))
    return MetricGraph(tuple(edges), tuple(leads.values()), conditions)


# -- text format --------------------------------------------------------------


class GraphFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _parse_matrix(text: str, line: int) -> np.ndarray:
    body = text.strip()
    if not (body.startswith("[[") and body.endswith("]]")):
        raise GraphFormatError("matrix literal must look like [[...],[...]]", line)
    rows = []
    for row_text in body[2:-2].split("],["):
        entries = []
        for tok in row_text.split(","):
            try:
                entries.append(parse_complex(tok))
            except ValueError as exc:
                raise GraphFormatError(f"bad complex entry {tok.strip()!r}: {exc}", line)
        rows.append(entries)
    if len({len(r) for r in rows}) != 1:
        raise GraphFormatError("matrix rows have unequal lengths", line)
    return np.array(rows, dtype=complex)


def _sections(text: str):
    """Yield (header, line, {key: (value, line)}) for each bracketed section."""
    header = None
    header_line = 0
    fields: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            if header is not None:
                yield header, header_line, fields
            header = stripped[1:-1].strip().lower()
            header_line = lineno
            fields = {}
            continue
        if header is None:
            raise GraphFormatError(f"content before any section: {stripped!r}", lineno)
        if "=" not in stripped:
            raise GraphFormatError(f"expected 'key = value', got {stripped!r}", lineno)
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        if key in fields:
            raise GraphFormatError(f"duplicate key {key!r}", lineno)
        fields[key] = (value.strip(), lineno)
    if header is not None:
        yield header, header_line, fields


def _require(fields: dict, key: str, header: str, line: int) -> tuple[str, int]:
    if key not in fields:
        raise GraphFormatError(f"[{header}] section is missing {key!r}", line)
    return fields[key]


def parse_graph(text: str) -> MetricGraph:
    """Parse the graph description format; errors carry line numbers."""
    vertex_specs: dict[str, tuple[ConditionSpec, int]] = {}
    edges: list[tuple[str, str, str, float]] = []
    leads: list[tuple[str, str]] = []
    for header, line, fields in _sections(text):
        if header == "vertex":
            vid, _ = _require(fields, "id", header, line)
            kind, kind_line = _require(fields, "condition", header, line)
            kind = kind.lower()
            if vid in vertex_specs:
                raise GraphFormatError(f"vertex {vid!r} declared twice", line)
            if kind in ("standard", "dirichlet", "neumann"):
                vertex_specs[vid] = (kind, line)
            elif kind == "general":
                a_text, a_line = _require(fields, "a", header, line)
                b_text, b_line = _require(fields, "b", header, line)
                spec = (_parse_matrix(a_text, a_line), _parse_matrix(b_text, b_line))
                vertex_specs[vid] = (spec, line)
            else:
                raise GraphFormatError(f"unknown condition {kind!r}", kind_line)
        elif header == "edge":
            eid, _ = _require(fields, "id", header, line)
            ends_text, ends_line = _require(fields, "endpoints", header, line)
            length_text, length_line = _require(fields, "length", header, line)
            ends = [t.strip() for t in ends_text.split(",")]
            if len(ends) != 2 or not all(ends):
                raise GraphFormatError("endpoints must be two vertex ids", ends_line)
            try:
                length = float(length_text)
            except ValueError:
                raise GraphFormatError(f"bad length {length_text!r}", length_line)
            edges.append((eid, ends[0], ends[1], length))
        elif header == "lead":
            lid, _ = _require(fields, "id", header, line)
            vtx, _ = _require(fields, "vertex", header, line)
            leads.append((lid, vtx))
        else:
            raise GraphFormatError(f"unknown section [{header}]", line)
    try:
        return build_graph(
            vertices={v: spec for v, (spec, _) in vertex_specs.items()},
            edges=edges,
            leads=leads,
        )
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from exc


def parse_graph_file(path) -> MetricGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def _format_matrix(m: np.ndarray) -> str:
    rows = ",".join(
        "[" + ",".join(format_complex(z, sig=17) for z in row) + "]" for row in m
    )
    return "[" + rows + "]"


def format_graph(graph: MetricGraph) -> str:
    """Serialize with exact (17 significant digit) coefficients.

    Conditions are always written as general matrices, with columns permuted
    into the lexicographic slot order the parser assumes, so a round trip
    reproduces identical computations.
    """
    out = []
    for v in graph.vertex_ids:
        cond = graph.conditions[v]
        perm = [cond.edge_order.index(slot) for slot in _lex_order(cond.edge_order)]
        out.append("[vertex]")
        out.append(f"id = {v}")
        out.append("condition = general")
        out.append(f"a = {_format_matrix(cond.a[:, perm])}")
        out.append(f"b = {_format_matrix(cond.b[:, perm])}")
        out.append("")
    for e in graph.edges:
        out.append("[edge]")
        out.append(f"id = {e.id}")
        out.append(f"endpoints = {e.ends[0]}, {e.ends[1]}")
        out.append(f"length = {e.length!r}")
        out.append("")
    for l in graph.leads:
        out.append("[lead]")
        out.append(f"id = {l.id}")
        out.append(f"vertex = {l.vertex}")
        out.append("")
    return "\n".join(out)
