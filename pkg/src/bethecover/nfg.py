"""Normal factor graphs with variables on edges and local functions on
nodes.

Two kinds are supported.  In a ``standard`` graph every edge carries one
variable and local functions are nonnegative reals.  In a ``double-edge``
graph every edge carries a pair ``(x, x')`` over the same base alphabet;
the pair is stored as a single axis of size ``|X|**2`` (unprimed-major),
and local functions are complex with a Hermitian (weak sense) or
positive-semidefinite (strict sense) matrix representation.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import config
from ._kernels import enum_partition
from .errors import CapacityError, ParseError, StructuralError
from .tensor import ComplexTensor, ChoiMatrix, choi_from_paired, contract, min_eigenvalue

STANDARD = "standard"
DOUBLE = "double-edge"

SCHEMA = "nfg-1"


@dataclass(frozen=True)
class Edge:
    eid: str
    head: int       # smaller node index
    tail: int       # larger node index
    alphabet: int   # |X_e|, the base alphabet size

    @property
    def endpoints(self):
        return (self.head, self.tail)


class FactorGraph:
    """Immutable graph; build instances through :func:`make_graph`."""

    def __init__(self, kind, node_names, incidences, edges, tensors,
                 weak_sense=False):
        self.kind = kind
        self.node_names = tuple(node_names)
        self.incidences = tuple(tuple(p) for p in incidences)
        self.edges = tuple(edges)
        self.tensors = tuple(tensors)
        self.weak_sense_flag = bool(weak_sense)
        self._edge_pos = {e.eid: k for k, e in enumerate(self.edges)}
        self._node_pos = {n: k for k, n in enumerate(self.node_names)}
        for t in self.tensors:
            t.flags.writeable = False

    # -- lookups ---------------------------------------------------- #

    @property
    def n_nodes(self):
        return len(self.node_names)

    @property
    def n_edges(self):
        return len(self.edges)

    def edge(self, eid):
        return self.edges[self._edge_pos[eid]]

    def node_index(self, name):
        return self._node_pos[name]

    def axis_size(self, eid):
        n = self.edge(eid).alphabet
        return n if self.kind == STANDARD else n * n

    def config_count(self):
        total = 1
        for e in self.edges:
            total *= self.axis_size(e.eid)
        return total

    def degree(self, node):
        return len(self.incidences[node])

    def directed_keys(self):
        """All (edge id, endpoint node index) pairs, in edge order."""
        keys = []
        for e in self.edges:
            keys.append((e.eid, e.head))
            keys.append((e.eid, e.tail))
        return keys

    def other_endpoint(self, eid, node):
        e = self.edge(eid)
        return e.tail if node == e.head else e.head

    def node_choi(self, node):
        """Matrix representation of a double-edge node's local function."""
        bases = [self.edge(eid).alphabet for eid in self.incidences[node]]
        return choi_from_paired(self.tensors[node], bases)

    def with_tensors(self, tensors, weak_sense=None):
        weak = self.weak_sense_flag if weak_sense is None else weak_sense
        return FactorGraph(self.kind, self.node_names, self.incidences,
                           self.edges, [np.asarray(t, dtype=np.complex128)
                                        for t in tensors], weak)

    def is_forest(self):
        parent = list(range(self.n_nodes))

        def root(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            ra, rb = root(e.head), root(e.tail)
            if ra == rb:
                return False
            parent[ra] = rb
        return True


def make_graph(kind, nodes, edges, tensors, weak_sense=False):
    """Assemble a :class:`FactorGraph`.

    ``nodes``   -- sequence of (name, ordered incident edge ids)
    ``edges``   -- sequence of (edge id, (name_a, name_b), alphabet size)
    ``tensors`` -- mapping name -> dense array over the incident edges,
                   axis k belonging to the k-th incident edge (paired axis
                   of size ``alphabet**2`` for double-edge graphs)
    """
    if kind not in (STANDARD, DOUBLE):
        raise StructuralError(f"unknown graph kind {kind!r}")
    names = [n for n, _ in nodes]
    if len(set(names)) != len(names):
        raise StructuralError("node names not distinct")
    pos = {n: k for k, n in enumerate(names)}
    edge_objs = []
    seen = set()
    for eid, (na, nb), alphabet in edges:
        if eid in seen:
            raise StructuralError(f"duplicate edge id {eid!r}")
        seen.add(eid)
        if na not in pos or nb not in pos:
            raise StructuralError(f"edge {eid!r} references unknown node")
        a, b = pos[na], pos[nb]
        if a == b:
            raise StructuralError(f"edge {eid!r} is a self-loop")
        if a > b:
            a, b = b, a
        if alphabet < 1:
            raise StructuralError(f"edge {eid!r} has empty alphabet")
        edge_objs.append(Edge(eid, a, b, int(alphabet)))
    by_id = {e.eid: e for e in edge_objs}

    incidences = []
    for name, incident in nodes:
        for eid in incident:
            if eid not in by_id:
                raise StructuralError(
                    f"node {name!r} lists unknown edge {eid!r}")
        incidences.append(tuple(incident))

    # every edge must appear exactly once at each endpoint
    holders = {e.eid: [] for e in edge_objs}
    for k, incident in enumerate(incidences):
        for eid in incident:
            holders[eid].append(k)
    for e in edge_objs:
        if sorted(holders[e.eid]) != sorted([e.head, e.tail]):
            raise StructuralError(
                f"edge {e.eid!r} endpoints {sorted([e.head, e.tail])} do not "
                f"match incidence lists {sorted(holders[e.eid])}")

    mult = 1 if kind == STANDARD else 2
    arrays = []
    for k, name in enumerate(names):
        if name not in tensors:
            raise StructuralError(f"missing tensor for node {name!r}")
        arr = np.asarray(tensors[name], dtype=np.complex128)
        want = tuple(by_id[eid].alphabet ** mult for eid in incidences[k])
        if arr.shape != want:
            raise StructuralError(
                f"tensor for node {name!r} has shape {arr.shape}, "
                f"incident edges require {want}")
        arrays.append(np.ascontiguousarray(arr))
    return FactorGraph(kind, names, incidences, edge_objs, arrays, weak_sense)


# ------------------------------------------------------------------ #
# validation                                                          #
# ------------------------------------------------------------------ #

@dataclass
class NodeStatus:
    hermitian_defect: float
    min_eigenvalue: float
    psd: bool


@dataclass
class ValidationReport:
    kind: str
    valid: bool
    classification: str         # standard | strict-sense | weak-sense
    problems: list = field(default_factory=list)
    node_status: dict = field(default_factory=dict)
    endpoint_order_ok: bool = True


def validate(g):
    """Check structural and local-function invariants of a graph."""
    tol = config.TOLS
    problems = []
    order_ok = all(e.head < e.tail for e in g.edges)
    if not order_ok:
        problems.append("edge endpoint order violated")

    node_status = {}
    if g.kind == STANDARD:
        classification = STANDARD
        for k, name in enumerate(g.node_names):
            t = g.tensors[k]
            im = float(np.max(np.abs(t.imag))) if t.size else 0.0
            neg = float(np.min(t.real)) if t.size else 0.0
            if im > tol.herm:
                problems.append(
                    f"node {name!r}: complex entries (|Im| max {im:.3e})")
            if not g.weak_sense_flag and neg < -tol.psd:
                problems.append(
                    f"node {name!r}: negative entries (min {neg:.3e})")
            node_status[name] = NodeStatus(im, neg, neg >= -tol.psd)
    else:
        strict = True
        for k, name in enumerate(g.node_names):
            c = ChoiMatrix(g.node_choi(k))
            defect = c.hermitian_defect()
            if defect > tol.herm:
                problems.append(
                    f"node {name!r}: matrix not Hermitian "
                    f"(defect {defect:.3e})")
                node_status[name] = NodeStatus(defect, float("nan"), False)
                strict = False
                continue
            lo = min_eigenvalue(c.matrix)
            psd = lo >= -tol.psd
            node_status[name] = NodeStatus(defect, lo, psd)
            if not psd:
                strict = False
                if not g.weak_sense_flag:
                    problems.append(
                        f"node {name!r}: not positive semidefinite "
                        f"(min eigenvalue {lo:.3e})")
        classification = "strict-sense" if strict else "weak-sense"

    return ValidationReport(
        kind=g.kind,
        valid=not problems,
        classification=classification,
        problems=problems,
        node_status=node_status,
        endpoint_order_ok=order_ok,
    )


# ------------------------------------------------------------------ #
# evaluation                                                          #
# ------------------------------------------------------------------ #

def config_axis_index(g, eid, value):
    n = g.edge(eid).alphabet
    if g.kind == STANDARD:
        x = int(value)
        if not 0 <= x < n:
            raise StructuralError(f"edge {eid!r}: value {x} out of range")
        return x
    x, xp = value
    if not (0 <= x < n and 0 <= xp < n):
        raise StructuralError(f"edge {eid!r}: pair {value} out of range")
    return int(x) * n + int(xp)


def global_eval(g, configuration):
    """Product of local-function entries selected by a configuration.

    ``configuration`` maps edge id to a value in ``range(|X_e|)`` for
    standard graphs or an (x, x') pair for double-edge graphs.
    """
    axis_idx = {eid: config_axis_index(g, eid, v)
                for eid, v in configuration.items()}
    out = 1.0 + 0.0j
    for k in range(g.n_nodes):
        sel = tuple(axis_idx[eid] for eid in g.incidences[k])
        out *= g.tensors[k][sel]
    return out


def partition_exact(g, limit=None):
    """Partition function by direct summation over all configurations."""
    limit = config.limits().enum if limit is None else limit
    count = g.config_count()
    if count > limit:
        raise CapacityError(
            f"{count} configurations exceed the enumeration limit {limit}",
            limit=limit, requested=count)
    sizes = [g.axis_size(e.eid) for e in g.edges]
    pos = {e.eid: k for k, e in enumerate(g.edges)}
    node_edges = [[pos[eid] for eid in inc] for inc in g.incidences]
    return enum_partition(list(g.tensors), node_edges, sizes)


# ------------------------------------------------------------------ #
# greedy contraction                                                  #
# ------------------------------------------------------------------ #

def contract_network(tensors, memory_cap=None):
    """Contract a closed network of labeled tensors down to a scalar.

    Every label must occur on exactly two tensors.  Nodes are eliminated
    greedily: at each step the node whose close-the-box merge yields the
    smallest tensor goes first.
    """
    cap = config.limits().contract if memory_cap is None else memory_cap
    clusters = list(tensors)
    label_count = {}
    for t in clusters:
        for lab in t.labels:
            label_count[lab] = label_count.get(lab, 0) + 1
    bad = [lab for lab, c in label_count.items() if c != 2]
    if bad:
        raise StructuralError(f"labels not paired: {sorted(bad)[:5]}")

    result = 1.0 + 0.0j
    while clusters:
        scalars = [t for t in clusters if not t.labels]
        for t in scalars:
            result *= complex(t.array)
        clusters = [t for t in clusters if t.labels]
        if not clusters:
            break

        # merged size if cluster k were eliminated with its neighborhood
        def merged_cost(k):
            group = {k}
            labs = set(clusters[k].labels)
            for i, t in enumerate(clusters):
                if i != k and labs & set(t.labels):
                    group.add(i)
            open_sizes = 1
            for i in group:
                for lab in clusters[i].labels:
                    holders = sum(
                        1 for j in group if lab in clusters[j].labels)
                    if holders == 1:
                        open_sizes *= clusters[i].size_of(lab)
            return open_sizes, group

        best_k, best_cost, best_group = None, None, None
        for k in range(len(clusters)):
            cost, group = merged_cost(k)
            if best_cost is None or cost < best_cost:
                best_k, best_cost, best_group = k, cost, group

        merged = clusters[best_k]
        for i in sorted(best_group - {best_k}):
            shared = [lab for lab in merged.labels
                      if lab in clusters[i].labels]
            new_size = (np.prod([s for lab, s
                                 in zip(merged.labels, merged.sizes)
                                 if lab not in shared] +
                                [s for lab, s
                                 in zip(clusters[i].labels,
                                        clusters[i].sizes)
                                 if lab not in shared], dtype=np.float64)
                        if merged.labels or clusters[i].labels else 1.0)
            if new_size > cap:
                raise CapacityError(
                    f"intermediate tensor of {int(new_size)} entries "
                    f"exceeds the contraction cap {cap}",
                    limit=cap, requested=int(new_size))
            merged = contract(merged, clusters[i], shared)
        clusters = [t for i, t in enumerate(clusters)
                    if i not in best_group]
        clusters.append(merged)
    return result


def partition_contract(g, memory_cap=None):
    """Partition function by greedy sequential node elimination."""
    tensors = [ComplexTensor(g.incidences[k], g.tensors[k])
               for k in range(g.n_nodes)]
    return contract_network(tensors, memory_cap=memory_cap)


# ------------------------------------------------------------------ #
# text serialization                                                  #
# ------------------------------------------------------------------ #

def _complex_pairs(arr):
    flat = np.asarray(arr, dtype=np.complex128).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def serialize(g):
    """Graph as a deterministic JSON document (extension ``.nfg.json``)."""
    doc = {
        "schema": SCHEMA,
        "kind": g.kind,
        "weak_sense": g.weak_sense_flag,
        "nodes": [{"name": name, "edges": list(g.incidences[k])}
                  for k, name in enumerate(g.node_names)],
        "edges": [{"id": e.eid,
                   "endpoints": [g.node_names[e.head], g.node_names[e.tail]],
                   "alphabet": e.alphabet}
                  for e in g.edges],
        "tensors": {name: {"axes": list(g.incidences[k]),
                           "data": _complex_pairs(g.tensors[k])}
                    for k, name in enumerate(g.node_names)},
    }
    return json.dumps(doc, indent=1)


def parse(text):
    """Parse a serialized graph document; inverse of :func:`serialize`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}",
                         location=f"line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    for key in ("schema", "kind", "nodes", "edges", "tensors"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}", location="top level")
    if doc["schema"] != SCHEMA:
        raise ParseError(f"unsupported schema {doc['schema']!r}",
                         location="schema")
    kind = doc["kind"]
    if kind not in (STANDARD, DOUBLE):
        raise ParseError(f"unknown kind {kind!r}", location="kind")
    mult = 1 if kind == STANDARD else 2

    nodes, edges, tensors = [], [], {}
    for k, nd in enumerate(doc["nodes"]):
        if "name" not in nd or "edges" not in nd:
            raise ParseError("node needs 'name' and 'edges'",
                             location=f"nodes[{k}]")
        nodes.append((nd["name"], list(nd["edges"])))
    for k, ed in enumerate(doc["edges"]):
        for key in ("id", "endpoints", "alphabet"):
            if key not in ed:
                raise ParseError(f"edge needs {key!r}",
                                 location=f"edges[{k}]")
        if len(ed["endpoints"]) != 2:
            raise ParseError("edge needs exactly two endpoints",
                             location=f"edges[{k}]")
        edges.append((ed["id"], tuple(ed["endpoints"]), int(ed["alphabet"])))
    alpha = {eid: a for eid, _, a in edges}
    for name, incident in nodes:
        td = doc["tensors"].get(name)
        if td is None:
            raise ParseError(f"missing tensor for node {name!r}",
                             location="tensors")
        if list(td.get("axes", [])) != list(incident):
            raise ParseError(
                f"axis order {td.get('axes')} does not match the node's "
                f"incident edges {list(incident)}",
                location=f"tensors[{name!r}].axes")
        want = 1
        for eid in incident:
            if eid not in alpha:
                raise ParseError(f"axis references unknown edge {eid!r}",
                                 location=f"tensors[{name!r}]")
            want *= alpha[eid] ** mult
        data = td.get("data")
        if not isinstance(data, list) or len(data) != want:
            raise ParseError(
                f"tensor data for {name!r} must list {want} complex pairs",
                location=f"tensors[{name!r}].data")
        try:
            flat = np.array([complex(re, im) for re, im in data],
                            dtype=np.complex128)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"complex entries must be [re, im] pairs: {exc}",
                             location=f"tensors[{name!r}].data") from exc
        shape = tuple(alpha[eid] ** mult for eid in incident)
        tensors[name] = flat.reshape(shape)
    try:
        return make_graph(kind, nodes, edges, tensors,
                          weak_sense=bool(doc.get("weak_sense", False)))
    except StructuralError as exc:
        raise ParseError(str(exc)) from exc


def save(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(g))
        fh.write("\n")


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# ------------------------------------------------------------------ #
# standard -> double-edge embedding                                   #
# ------------------------------------------------------------------ #

def as_double_edge(g):
    """Embed a standard graph as a double-edge graph with diagonal
    matrices: the pair variable must agree with its primed copy."""
    if g.kind != STANDARD:
        raise StructuralError("graph is already double-edge")
    tensors = {}
    for k, name in enumerate(g.node_names):
        flat = g.tensors[k].reshape(-1)
        bases = [g.edge(eid).alphabet for eid in g.incidences[k]]
        from .tensor import paired_from_choi

        tensors[name] = paired_from_choi(np.diag(flat), bases)
    nodes = [(name, list(g.incidences[k]))
             for k, name in enumerate(g.node_names)]
    edges = [(e.eid, (g.node_names[e.head], g.node_names[e.tail]),
              e.alphabet) for e in g.edges]
    return make_graph(DOUBLE, nodes, edges, tensors)
