"""G-simplicial complexes, chains, (p,q)-cochains and their differentials.

The parameter spaces used in this project are unit spheres S^1, S^2, S^3
triangulated by iterated edge-midpoint subdivision of the cross-polytope
(square / octahedron / 16-cell), radially projected back to the sphere.
Every simplex of such a mesh lies inside a closed coordinate orthant, so the
meshes are compatible with all sign-flip actions, the antipodal map, and
quarter-turn rotations in the (n1, n2) coordinate plane.

Tetrahedron subdivision requires choosing one of three interior-octahedron
diagonals.  The chooser below works orbit-by-orbit under the canonical mesh
symmetry group and only ever picks a diagonal fixed by the orbit stabilizer,
so the group provably maps chosen diagonals to chosen diagonals.  (No choice
can be equivariant under *all* coordinate transpositions: the stabilizer of a
regular tetrahedron permutes all three diagonals transitively.)
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDecomposition,
    DimensionMismatch,
    NotACycle,
    NotSimplicial,
    PredicateNotSimplicial,
    UnsupportedDegree,
    UnsupportedDimension,
)
from .numerics import branch_lift

VERTEX_MATCH_TOL = 1e-9
CUT_TOL = 1e-9


def sort_parity(tup):
    """Sort a vertex tuple, returning (sorted tuple, permutation parity)."""
    lst = list(tup)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j - 1] > lst[j]:
            lst[j - 1], lst[j] = lst[j], lst[j - 1]
            sign = -sign
            j -= 1
    return tuple(lst), sign


def _coord_key(x: np.ndarray) -> tuple:
    return tuple(np.round(x / VERTEX_MATCH_TOL).astype(np.int64).tolist())


class GComplex:
    """Oriented simplicial complex with optional finite group action.

    vertices   -- (nv, d) coordinates
    simplices  -- {q: list of ascending vertex tuples}
    orientation-- +-1 per top simplex: the coefficient of the sorted tuple in
                  the global orientation chain (outward orientation on spheres)
    """

    def __init__(self, dim, vertices, simplices, orientation, meta=None):
        self.dim = int(dim)
        self.vertices = np.asarray(vertices, dtype=float)
        self.simplices = {q: list(s) for q, s in simplices.items()}
        self.index = {
            q: {s: i for i, s in enumerate(ss)} for q, ss in self.simplices.items()
        }
        self.orientation = np.asarray(orientation, dtype=int)
        self.meta = dict(meta or {})
        self.group = None
        self.perms = {}
        self._coord_lookup = {
            _coord_key(v): i for i, v in enumerate(self.vertices)
        }

    # -- queries ---------------------------------------------------------

    def n_simplices(self, q: int) -> int:
        return len(self.simplices.get(q, ()))

    def barycenter(self, tup) -> np.ndarray:
        return self.vertices[list(tup)].mean(axis=0)

    def vertex_at(self, coords, tol=VERTEX_MATCH_TOL) -> int:
        """Index of the vertex at the given coordinates."""
        key = _coord_key(np.asarray(coords, dtype=float))
        if key in self._coord_lookup:
            return self._coord_lookup[key]
        d = np.linalg.norm(self.vertices - np.asarray(coords), axis=1)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise NotSimplicial(f"no vertex at {coords}")
        return i

    def top_chain(self) -> "Chain":
        """The globally oriented sum of all top-dimensional simplices."""
        c = Chain(self, self.dim)
        for s, o in zip(self.simplices[self.dim], self.orientation):
            c.add(s, int(o))
        return c

    # -- group action ----------------------------------------------------

    def act_vertex(self, label, v: int) -> int:
        return int(self.perms[label][v])

    def act_simplex(self, label, tup):
        """Image of an oriented simplex: (sorted tuple, parity sign)."""
        perm = self.perms[label]
        return sort_parity(tuple(int(perm[v]) for v in tup))

    def orbit_of_vertex(self, v: int):
        return sorted({int(p[v]) for p in self.perms.values()})

    # -- export ----------------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "schema_version": 1,
            "dim": self.dim,
            "meta": self.meta,
            "vertices": [list(map(float, v)) for v in self.vertices],
            "simplices": {
                str(q): [list(s) for s in ss] for q, ss in self.simplices.items()
            },
            "orientation": [int(o) for o in self.orientation],
        }
        if self.perms:
            out["group_permutations"] = {
                str(g): [int(x) for x in p] for g, p in self.perms.items()
            }
        return out

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)


# --------------------------------------------------------------------------
# chains


class Chain:
    """Integer/real weighted formal sum of oriented q-simplices.

    Coefficients are stored against the ascending-sorted representative; an
    orientation-reversed simplex contributes with opposite sign.
    """

    __slots__ = ("cx", "q", "data")

    def __init__(self, cx: GComplex, q: int, data=None):
        self.cx = cx
        self.q = q
        self.data = dict(data or {})

    def add(self, tup, coeff=1):
        stup, sign = sort_parity(tuple(tup))
        c = self.data.get(stup, 0) + sign * coeff
        if c == 0:
            self.data.pop(stup, None)
        else:
            self.data[stup] = c
        return self

    def items(self):
        return self.data.items()

    def copy(self):
        return Chain(self.cx, self.q, self.data)

    def __add__(self, other):
        out = self.copy()
        for s, c in other.data.items():
            out.add(s, c)
        return out

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Chain(self.cx, self.q, {s: -c for s, c in self.data.items()})

    def __rmul__(self, k):
        return Chain(self.cx, self.q, {s: k * c for s, c in self.data.items()})

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.data.values())

    def boundary(self) -> "Chain":
        out = Chain(self.cx, self.q - 1)
        for s, c in self.data.items():
            for j in range(len(s)):
                face = s[:j] + s[j + 1:]
                out.add(face, ((-1) ** j) * c)
        return out

    def transform(self, label) -> "Chain":
        """Push the chain forward along a group element's vertex permutation."""
        out = Chain(self.cx, self.q)
        for s, c in self.data.items():
            img, sign = self.cx.act_simplex(label, s)
            out.add(img, sign * c)
        return out

    def restrict(self, pred) -> "Chain":
        """Sub-chain of simplices whose barycenter satisfies ``pred``."""
        out = Chain(self.cx, self.q)
        for s, c in self.data.items():
            if pred(self.cx.barycenter(s)):
                out.add(s, c)
        return out

    def __len__(self):
        return len(self.data)


def chain_equal(a: Chain, b: Chain, tol=0) -> bool:
    keys = set(a.data) | set(b.data)
    return all(abs(a.data.get(k, 0) - b.data.get(k, 0)) <= tol for k in keys)


# --------------------------------------------------------------------------
# cochains


class Cochain:
    """(p, q)-cochain: map (group p-tuple, oriented q-simplex) -> value.

    Values are angles (mod 2pi semantics) unless ``real`` is set, in which
    case they are honest reals (flux cochains).  The coefficient action of an
    element g is multiplication by phi_g in both cases.
    """

    def __init__(self, cx: GComplex, p: int, q: int, group=None, real=False):
        self.cx = cx
        self.p = int(p)
        self.q = int(q)
        self.group = group
        self.real = bool(real)
        self.data = {}

    def key(self, gs, tup):
        stup, sign = sort_parity(tuple(tup))
        return (tuple(gs), stup), sign

    def set(self, gs, tup, value):
        (k, sign) = self.key(gs, tup)
        self.data[k] = sign * float(value)

    def ev(self, gs, tup) -> float:
        (k, sign) = self.key(gs, tup)
        return sign * self.data.get(k, 0.0)

    def copy(self):
        out = Cochain(self.cx, self.p, self.q, self.group, self.real)
        out.data = dict(self.data)
        return out

    def __add__(self, other):
        out = self.copy()
        for (gs, s), v in other.data.items():
            out.data[(gs, s)] = out.data.get((gs, s), 0.0) + v
        return out

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, k):
        out = self.copy()
        out.data = {kk: k * v for kk, v in out.data.items()}
        return out

    def group_tuples(self, p=None):
        p = self.p if p is None else p
        if p == 0:
            return [()]
        labels = self.group.labels
        return list(itertools.product(labels, repeat=p))

    def max_abs(self) -> float:
        """Largest entry, measured as an angle distance unless real."""
        if not self.data:
            return 0.0
        vals = np.array(list(self.data.values()))
        if self.real:
            return float(np.abs(vals).max())
        return float(np.abs(branch_lift(vals)).max())


def d(f: Cochain) -> Cochain:
    """Simplicial coboundary (df)_g(D^{q+1}) = sum_j (-1)^j f_g(d_j D)."""
    out = Cochain(f.cx, f.p, f.q + 1, f.group, f.real)
    simplices = f.cx.simplices.get(f.q + 1, ())
    for gs in f.group_tuples():
        for s in simplices:
            acc = 0.0
            for j in range(len(s)):
                acc += ((-1) ** j) * f.ev(gs, s[:j] + s[j + 1:])
            out.set(gs, s, acc)
    return out


def delta(f: Cochain) -> Cochain:
    """Group-direction coboundary with phi-twisted coefficients."""
    if f.group is None:
        raise UnsupportedDegree("cochain has no group attached")
    if f.p > 2:
        raise UnsupportedDegree("delta implemented for p <= 2")
    g = f.group
    phi = g.phi
    mul = g.mul
    out = Cochain(f.cx, f.p + 1, f.q, g, f.real)
    simplices = f.cx.simplices.get(f.q, ())
    for gs in out.group_tuples():
        for s in simplices:
            if f.p == 0:
                (a,) = gs
                val = phi[a] * f.ev((), s) - f.ev((), _apply(f.cx, a, s))
            elif f.p == 1:
                a, b = gs
                val = (
                    phi[a] * f.ev((b,), s)
                    - f.ev((mul(a, b),), s)
                    + f.ev((a,), _apply(f.cx, b, s))
                )
            else:
                a, b, c = gs
                val = (
                    phi[a] * f.ev((b, c), s)
                    - f.ev((mul(a, b), c), s)
                    + f.ev((a, mul(b, c)), s)
                    - f.ev((a, b), _apply(f.cx, c, s))
                )
            out.set(gs, s, val)
    return out


def _apply(cx, label, tup):
    perm = cx.perms[label]
    return tuple(int(perm[v]) for v in tup)


def total_D(fs):
    """Total differential D = delta + (-1)^p d on a degree-n tuple of cochains.

    ``fs`` is ordered by ascending p: (f^{0,n}, f^{1,n-1}, ..., f^{n,0}).
    Returns the degree-(n+1) tuple (df^{0,n}, delta f^{0,n} - d f^{1,n-1}, ...,
    delta f^{n,0}).
    """
    n = len(fs) - 1
    for p, f in enumerate(fs):
        if f.p != p or f.p + f.q != n:
            raise DimensionMismatch("inconsistent bidegrees in total cochain")
    out = [d(fs[0])]
    for p in range(1, n + 1):
        out.append(delta(fs[p - 1]) + ((-1) ** p) * d(fs[p]))
    out.append(delta(fs[n]))
    return out


def pair(f: Cochain, gs, chain: Chain) -> float:
    """Pairing (f_gs, C) = sum over the chain of f evaluated on its simplices."""
    if chain.q != f.q:
        raise DimensionMismatch(f"cochain degree {f.q} vs chain degree {chain.q}")
    return float(sum(c * f.ev(gs, s) for s, c in chain.items()))


# --------------------------------------------------------------------------
# sphere meshes

_ROT12_4D = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, -1, 0, 0], [0, 0, 0, 1]], dtype=int
)
_ROT01_3D = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 1]], dtype=int)
_ROT01_2D = np.array([[0, 1], [-1, 0]], dtype=int)


def _mesh_symmetry_matrices(d: int):
    """Canonical mesh symmetry group: all sign flips + one quarter turn.

    For d == 4 the turn acts in the (n1, n2) plane, matching the rotation
    actions the invariant pipelines use; for d == 3 and d == 2 in the leading
    plane.  The subdivision below is equivariant under this group, which in
    particular contains the antipodal map.
    """
    rot = {2: _ROT01_2D, 3: _ROT01_3D, 4: _ROT12_4D}[d]
    mats = []
    for signs in itertools.product((1, -1), repeat=d):
        D = np.diag(signs)
        mats.append(D)
        mats.append(D @ rot)
    return mats


def _vertex_perm(verts, mat):
    lookup = {_coord_key(v): i for i, v in enumerate(verts)}
    imgs = verts @ np.asarray(mat, dtype=float).T
    perm = np.empty(len(verts), dtype=int)
    for i, w in enumerate(imgs):
        key = _coord_key(w)
        if key not in lookup:
            return None
        perm[i] = lookup[key]
    return perm


def _normalize_rows(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _cross_polytope(d: int):
    verts = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        verts.append(e.copy())
        verts.append(-e)
    verts = np.array(verts)
    tops = []
    for signs in itertools.product((0, 1), repeat=d):
        tops.append(tuple(sorted(2 * i + s for i, s in enumerate(signs))))
    return verts, tops


def _subdivide(verts, tops, dim):
    """One symmetric edge-midpoint subdivision of the top simplices."""
    edges = sorted({tuple(sorted(e)) for s in tops for e in itertools.combinations(s, 2)})
    new_verts = list(verts)
    mid = {}
    for (u, v) in edges:
        m = _normalize_rows((verts[u] + verts[v])[None, :])[0]
        mid[(u, v)] = len(new_verts)
        new_verts.append(m)
    new_verts = np.array(new_verts)

    def m(u, v):
        return mid[(min(u, v), max(u, v))]

    new_tops = []
    if dim == 1:
        for (a, b) in tops:
            new_tops += [(a, m(a, b)), (m(a, b), b)]
    elif dim == 2:
        for (a, b, c) in tops:
            ab, ac, bc = m(a, b), m(a, c), m(b, c)
            new_tops += [(a, ab, ac), (b, ab, bc), (c, ac, bc), (ab, ac, bc)]
    elif dim == 3:
        chosen = _choose_diagonals(verts, tops)
        for t in tops:
            a, b, c, dd = t
            new_tops += [
                (a, m(a, b), m(a, c), m(a, dd)),
                (b, m(a, b), m(b, c), m(b, dd)),
                (c, m(a, c), m(b, c), m(c, dd)),
                (dd, m(a, dd), m(b, dd), m(c, dd)),
            ]
            (p0, p1), (q0, q1) = chosen[t]
            dv0, dv1 = m(p0, p1), m(q0, q1)
            # equator 4-cycle: midpoints sharing a parent vertex are adjacent
            eq = [x for x in itertools.combinations(t, 2)
                  if set(x) != {p0, p1} and set(x) != {q0, q1}]
            cyc = [eq[0]]
            eq_rest = eq[1:]
            while eq_rest:
                last = set(cyc[-1])
                for x in eq_rest:
                    if last & set(x):
                        nxt = x
                        break
                cyc.append(nxt)
                eq_rest.remove(nxt)
            for i in range(4):
                u, v = cyc[i], cyc[(i + 1) % 4]
                new_tops.append((dv0, dv1, m(*u), m(*v)))
    else:
        raise UnsupportedDimension(f"dim {dim}")
    new_tops = [tuple(sorted(t)) for t in new_tops]
    return new_verts, new_tops


def _choose_diagonals(verts, tets):
    """Equivariant interior-diagonal choice for every tetrahedron.

    Works on orbits under the canonical mesh symmetry group; within an orbit
    the choice is propagated by the action, and on the orbit representative
    only stabilizer-fixed vertex pairings are eligible (one always exists:
    the stabilizer is a 2-group, so its image in the S3 permuting the three
    pairings cannot act transitively).  Among eligible pairings the shortest
    projected diagonal wins, ties broken lexicographically.
    """
    d = verts.shape[1]
    perms = []
    for mat in _mesh_symmetry_matrices(d):
        p = _vertex_perm(verts, mat)
        if p is not None:
            perms.append(p)
    tet_set = set(tets)

    def pairings_of(t):
        a, b, c, dd = t
        return [
            frozenset((frozenset((a, b)), frozenset((c, dd)))),
            frozenset((frozenset((a, c)), frozenset((b, dd)))),
            frozenset((frozenset((a, dd)), frozenset((b, c)))),
        ]

    def map_pairing(perm, pairing):
        return frozenset(
            frozenset(int(perm[v]) for v in pair_) for pair_ in pairing
        )

    def diag_len(pairing):
        (p0, p1), (q0, q1) = [tuple(sorted(x)) for x in sorted(pairing, key=sorted)]
        m0 = _normalize_rows((verts[p0] + verts[p1])[None, :])[0]
        m1 = _normalize_rows((verts[q0] + verts[q1])[None, :])[0]
        return float(np.linalg.norm(m0 - m1))

    def pairing_key(pairing):
        return tuple(sorted(tuple(sorted(x)) for x in pairing))

    chosen = {}
    for rep in sorted(tets):
        if rep in chosen:
            continue
        stab = [p for p in perms if tuple(sorted(p[v] for v in rep)) == rep]
        cands = [
            pr for pr in pairings_of(rep)
            if all(map_pairing(p, pr) == pr for p in stab)
        ]
        best = min(cands, key=lambda pr: (round(diag_len(pr) / 1e-12), pairing_key(pr)))
        for p in perms:
            img = tuple(sorted(p[v] for v in rep))
            if img not in tet_set:
                raise NotSimplicial("mesh symmetry does not permute tetrahedra")
            mapped = map_pairing(p, best)
            prev = chosen.get(img)
            if prev is None:
                chosen[img] = mapped
            elif prev != mapped:
                raise NotSimplicial("inconsistent equivariant diagonal propagation")
    missing = [t for t in tets if t not in chosen]
    if missing:
        raise NotSimplicial(f"{len(missing)} tetrahedra not reached by symmetry orbits")
    out = {}
    for t, pairing in chosen.items():
        pp = sorted(tuple(sorted(x)) for x in pairing)
        out[t] = (pp[0], pp[1])
    return out


def _close_faces(tops, dim):
    simplices = {dim: sorted(set(tops))}
    for q in range(dim - 1, -1, -1):
        faces = set()
        for s in simplices[q + 1]:
            for f in itertools.combinations(s, q + 1):
                faces.add(f)
        simplices[q] = sorted(faces)
    return simplices


def build_sphere_complex(dim: int, refinements: int, orient_sign: int = -1) -> GComplex:
    """Triangulated unit sphere S^dim with all symmetry built in.

    dim=1: regular 2^(refinements+2)-gon; dim=2: refined octahedron;
    dim=3: refined 16-cell.  Top simplices carry a consistent global
    orientation given by the sign of the vertex-coordinate determinant times
    ``orient_sign``; the default makes the reference monopole families count
    positively (Chern/DDKS = +2S).
    """
    if dim not in (1, 2, 3):
        raise UnsupportedDimension(f"dim {dim} not supported")
    if refinements < 0:
        raise ValueError("refinements must be >= 0")
    verts, tops = _cross_polytope(dim + 1)
    for _ in range(refinements):
        verts, tops = _subdivide(verts, tops, dim)
    simplices = _close_faces(tops, dim)
    tops = simplices[dim]
    orientation = []
    for s in tops:
        det = np.linalg.det(verts[list(s)])
        if abs(det) < 1e-12:
            raise NotSimplicial("degenerate top simplex")
        orientation.append(orient_sign * (1 if det > 0 else -1))
    cx = GComplex(dim, verts, simplices, orientation,
                  meta={"kind": "sphere", "refinements": refinements})
    bdry = cx.top_chain().boundary()
    if not bdry.is_zero():
        raise NotSimplicial("global orientation is inconsistent")
    return cx


def build_torus_complex(K: int) -> GComplex:
    """Triangulated K x K grid torus (for synthetic free-shift families).

    Vertex (i, j) is embedded on the Clifford torus in R^4 so coordinates are
    unique; each grid square is split into two positively oriented triangles.
    """
    if K < 3:
        raise UnsupportedDimension("torus grid needs K >= 3")

    def vid(i, j):
        return (i % K) * K + (j % K)

    ang = 2 * np.pi * np.arange(K) / K
    verts = np.zeros((K * K, 4))
    for i in range(K):
        for j in range(K):
            verts[vid(i, j)] = [np.cos(ang[i]), np.sin(ang[i]),
                                np.cos(ang[j]), np.sin(ang[j])]
    tops = []
    orient = {}
    for i in range(K):
        for j in range(K):
            for tri in (
                (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)),
                (vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)),
            ):
                stup, sign = sort_parity(tri)
                tops.append(stup)
                orient[stup] = sign
    simplices = _close_faces(tops, 2)
    orientation = [orient[s] for s in simplices[2]]
    cx = GComplex(2, verts, simplices, orientation, meta={"kind": "torus", "K": K})
    if not cx.top_chain().boundary().is_zero():
        raise NotSimplicial("torus orientation inconsistent")
    return cx


def attach_perm_action(cx: GComplex, group, perms: dict) -> GComplex:
    """Attach an action given directly as vertex permutations (e.g. shifts)."""
    out = GComplex(cx.dim, cx.vertices, cx.simplices, cx.orientation, cx.meta)
    out.group = group
    for g in group.labels:
        out.perms[g] = np.asarray(perms[g], dtype=int)
    for g in group.labels:
        perm = out.perms[g]
        for q, ss in out.simplices.items():
            idx = out.index[q]
            for s in ss:
                img = tuple(sorted(int(perm[v]) for v in s))
                if img not in idx:
                    raise NotSimplicial(f"{g!r} maps simplex {s} outside the complex")
    for a in group.labels:
        for b in group.labels:
            ab = group.mul(a, b)
            if not np.array_equal(out.perms[a][out.perms[b]], out.perms[ab]):
                raise NotSimplicial(f"action not compatible with product {a!r}*{b!r}")
    return out


def coordinate_circle_s3(cx: GComplex, zero_axes=(2, 3)) -> Chain:
    """Oriented great-circle 1-cycle {n_i = 0 for i in zero_axes} on S^3."""
    a, b = zero_axes
    D3 = cx.top_chain().restrict(_axis_pos(b))
    D2 = D3.boundary().restrict(_axis_pos(a))
    loop = D2.boundary()
    if not loop.boundary().is_zero():
        raise NotACycle("coordinate circle construction failed")
    return loop


def attach_action(cx: GComplex, group) -> GComplex:
    """Attach a finite group action given by coordinate isometries.

    ``group`` needs .labels, .phi, .param (label -> matrix), .mul(a, b).
    Verifies that every isometry permutes the vertex set, that every simplex
    maps to a simplex (either fixed pointwise or moved as a whole), and that
    the permutation representation respects the multiplication table.

    Permutations already attached to ``cx`` are kept, so one complex can carry
    several (individually simplicial) group actions; a label collision with a
    different permutation is rejected.
    """
    out = GComplex(cx.dim, cx.vertices, cx.simplices, cx.orientation, cx.meta)
    out.group = group
    out.perms = dict(cx.perms)
    for g in group.labels:
        mat = np.asarray(group.param[g], dtype=float)
        perm = _vertex_perm(out.vertices, mat)
        if perm is None:
            raise NotSimplicial(f"isometry {g!r} does not permute the vertex set")
        if g in cx.perms and not np.array_equal(cx.perms[g], perm):
            raise NotSimplicial(f"label {g!r} already attached with a different action")
        out.perms[g] = perm
    for g in group.labels:
        perm = out.perms[g]
        for q, ss in out.simplices.items():
            idx = out.index[q]
            for s in ss:
                img = tuple(sorted(int(perm[v]) for v in s))
                if img not in idx:
                    raise NotSimplicial(f"{g!r} maps simplex {s} outside the complex")
                if img == s and any(int(perm[v]) != v for v in s):
                    raise NotSimplicial(
                        f"{g!r} maps simplex {s} to itself without fixing it pointwise"
                    )
    for a in group.labels:
        for b in group.labels:
            ab = group.mul(a, b)
            if not np.array_equal(out.perms[a][out.perms[b]], out.perms[ab]):
                raise NotSimplicial(f"action not compatible with product {a!r}*{b!r}")
    return out


# --------------------------------------------------------------------------
# standard integration domains

def _axis_pos(axis, tol=CUT_TOL):
    return lambda b: b[axis] > tol


def _axis_zero(axis, tol=CUT_TOL):
    return lambda b: abs(b[axis]) <= tol


def _require(cond, msg):
    if not cond:
        raise BadDecomposition(msg)


def _check_cover(whole: Chain, parts) -> None:
    got = parts[0].copy()
    for p in parts[1:]:
        got = got + p
    if not chain_equal(whole, got):
        raise PredicateNotSimplicial("sign predicate does not split the chain cleanly")


@dataclass
class DomainSet:
    """Named chains for a fixed-point/relation computation."""
    chains: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    signs: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return self.chains[k] if k in self.chains else self.points[k]


def _split_sign(whole: Chain, part: Chain, glabel: str, what: str) -> int:
    """Sign s with whole == part + s * g(part), detected from the chains."""
    image = part.transform(glabel)
    for s in (1, -1):
        if chain_equal(whole, part + s * image):
            return s
    raise BadDecomposition(f"{what} does not split as D +- g D")


def halfspace_domains_s3(cx: GComplex, glabel: str) -> DomainSet:
    """D^3, D^2, D^1, P+- on S^3 for an involution of antipodal/T type.

    D^3 = {n3 >= 0}, D^2 = {n2 >= 0, n3 = 0}, D^1 = {n1 >= 0, n2 = n3 = 0},
    with dD^1 = P- - P+.  Whether the remaining boundary pieces enter as
    dD^3 = D^2 +- g D^2 and dD^2 = D^1 -+ g D^1 depends on how the involution
    acts on the orientations of the strata; the detected signs are reported in
    ``signs`` ("s2", "s1").  The free antipodal action has (s2, s1) = (-1, +1),
    which is what the Z2 invariant on S^3 requires.
    """
    D3 = cx.top_chain().restrict(_axis_pos(3))
    B2 = D3.boundary()
    D2 = B2.restrict(_axis_pos(2))
    s2 = _split_sign(B2, D2, glabel, "dD3")
    B1 = D2.boundary()
    D1 = B1.restrict(_axis_pos(1))
    s1 = _split_sign(B1, D1, glabel, "dD2")
    B0 = D1.boundary()
    p_plus = cx.vertex_at([1, 0, 0, 0])
    p_minus = cx.vertex_at([-1, 0, 0, 0])
    _require(
        B0.data.get((p_minus,), 0) == 1 and B0.data.get((p_plus,), 0) == -1
        and len(B0.data) == 2,
        "dD1 != P- - P+",
    )
    return DomainSet(
        chains={"D3": D3, "D2": D2, "D1": D1, "S2": B2},
        points={"P+": p_plus, "P-": p_minus},
        signs={"s2": s2, "s1": s1},
    )


def cnz_domains_s3(cx: GComplex, glabel: str, n: int) -> DomainSet:
    """Fundamental wedge for the order-n rotation in the (n1, n2) plane.

    D^3 = {0 <= arg(n1 + i n2) <= 2pi/n}, D^2 = {n1 >= 0, n2 = 0}, and the
    invariant circle ell = dD^2 = {n1 = n2 = 0}; verifies
    dD^3 = D^2 - g D^2.
    """
    sector = 2 * np.pi / n

    def in_wedge_open(b):
        # the rotation advances the angle by -2pi/n, so the fundamental wedge
        # whose far wall is the image of {n2 = 0, n1 > 0} sits at negative angles
        r = np.hypot(b[1], b[2])
        if r <= CUT_TOL:
            return False
        ang = np.arctan2(b[2], b[1])
        return -sector < ang < 0.0

    D3 = cx.top_chain().restrict(in_wedge_open)
    B2 = D3.boundary()
    D2 = B2.restrict(lambda b: _axis_zero(2)(b) and b[1] > CUT_TOL)
    _require(chain_equal(B2, D2 - D2.transform(glabel)),
             f"dD3 != D2 - gD2 for the order-{n} rotation")
    circle = D2.boundary().restrict(lambda b: np.hypot(b[1], b[2]) <= CUT_TOL)
    _require(chain_equal(D2.boundary(), circle), "dD2 is not the invariant circle")
    _require(circle.boundary().is_zero(), "invariant circle is not a cycle")
    return DomainSet(chains={"D3": D3, "D2": D2, "circle": circle})


def z2z2_domains_s3(cx: GComplex, x_label: str, y_label: str) -> DomainSet:
    """The six domains of the mod-4 formula for the Z2 x Z2 rotation action."""
    D3 = cx.top_chain().restrict(lambda b: b[1] > CUT_TOL and b[2] > CUT_TOL)
    B = D3.boundary()
    wall_n2 = B.restrict(_axis_zero(2))
    wall_n1 = B.restrict(_axis_zero(1))
    _check_cover(B, [wall_n2, wall_n1])
    D2_p0s = -wall_n2          # D^2_{*+0*}: dD3 = -D^2_{*+0*} + D^2_{*0+*}
    D2_0ps = wall_n1
    D2_p0p = D2_p0s.restrict(_axis_pos(3))
    _require(chain_equal(D2_p0s, D2_p0p - D2_p0p.transform(x_label)),
             "D2_{*+0*} != D2_{*+0+} - C2x D2_{*+0+}")
    D2_0pm = D2_0ps.restrict(lambda b: b[3] < -CUT_TOL)
    _require(chain_equal(D2_0ps, D2_0pm - D2_0pm.transform(y_label)),
             "D2_{*0+*} != D2_{*0+-} - C2y D2_{*0+-}")
    Bp = D2_p0p.boundary()
    D1_p00 = Bp.restrict(_axis_pos(1))
    D1_00p = -(Bp.restrict(lambda b: b[3] > CUT_TOL and abs(b[1]) <= CUT_TOL))
    _require(chain_equal(Bp, D1_p00 - D1_00p),
             "dD2_{*+0+} != D1_{*+00} - D1_{*00+}")
    Bm = D2_0pm.boundary()
    D1_0p0 = -(Bm.restrict(_axis_pos(2)))
    _require(chain_equal(Bm, D1_00p.transform(y_label) - D1_0p0),
             "dD2_{*0+-} != C2y D1_{*00+} - D1_{*0+0}")
    p_plus = cx.vertex_at([1, 0, 0, 0])
    p_minus = cx.vertex_at([-1, 0, 0, 0])
    return DomainSet(
        chains={
            "D3": D3,
            "D2_p0p": D2_p0p,
            "D2_0pm": D2_0pm,
            "D1_p00": D1_p00,
            "D1_0p0": D1_0p0,
            "D1_00p": D1_00p,
        },
        points={"P+": p_plus, "P-": p_minus},
    )


def equator_sphere_s3(cx: GComplex, axis: int = 3) -> Chain:
    """The {n_axis = 0} 2-sphere oriented as the boundary of {n_axis >= 0}."""
    return cx.top_chain().restrict(_axis_pos(axis)).boundary()


def hemisphere_domains_s2(cx: GComplex, glabel: str) -> DomainSet:
    """Upper hemisphere D, arc C and start point P with dD = C + gC, dC = gP - P.

    This is the decomposition used by the Z2 invariant of a free antipodal
    action on S^2.
    """
    D = cx.top_chain().restrict(_axis_pos(2))
    eq = D.boundary()
    C = eq.restrict(_axis_pos(1))
    _require(chain_equal(eq, C + C.transform(glabel)), "dD != C + gC")
    BC = C.boundary()
    _require(len(BC.data) == 2, "arc boundary should be two points")
    P = next(v[0] for v, c in BC.data.items() if c == -1)
    gP = cx.act_vertex(glabel, P)
    _require(BC.data.get((gP,), 0) == 1, "dC != gP - P")
    return DomainSet(chains={"D": D, "C": C}, points={"P": P, "gP": gP})


def meridian_domains_s2(cx: GComplex, glabel: str) -> DomainSet:
    """Pole-to-pole arc C with loop = C - gC for a rotation about the z axis.

    Returns the loop (a meridian great circle), the arc C = {n1 >= 0} half,
    and the fixed points P (start) and Q (end) with dC = Q - P.
    """
    loop = cx.top_chain().restrict(_axis_pos(1)).boundary()
    C = loop.restrict(_axis_pos(0))
    _require(chain_equal(loop, C - C.transform(glabel)), "loop != C - gC")
    BC = C.boundary()
    P = next(v[0] for v, c in BC.data.items() if c == -1)
    Q = next(v[0] for v, c in BC.data.items() if c == 1)
    return DomainSet(chains={"loop": loop, "C": C}, points={"P": P, "Q": Q})


def cn_wedge_domains_s2(cx: GComplex, glabel: str, n: int) -> DomainSet:
    """Fundamental wedge D for a C_n rotation about z on S^2, dD = C - gC."""
    sector = 2 * np.pi / n

    def in_wedge(b):
        r = np.hypot(b[0], b[1])
        if r <= CUT_TOL:
            return False
        ang = np.arctan2(b[1], b[0]) % (2 * np.pi)
        return 0.0 < ang < sector

    D = cx.top_chain().restrict(in_wedge)
    B = D.boundary()
    C = B.restrict(lambda b: abs(b[1]) <= CUT_TOL and b[0] > CUT_TOL
                   if n != 2 else b[0] > CUT_TOL)
    _require(chain_equal(B, C - C.transform(glabel)), "dD != C - gC for the wedge")
    BC = C.boundary()
    P = next(v[0] for v, c in BC.data.items() if c == -1)
    Q = next(v[0] for v, c in BC.data.items() if c == 1)
    return DomainSet(chains={"D": D, "C": C}, points={"P": P, "Q": Q})
