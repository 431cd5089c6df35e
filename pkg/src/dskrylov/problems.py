"""Test-problem generators: grid operators, the exponential-Euler augmented
operator, directed-graph in-Laplacians, and edge-list ingestion.

Grid vectors are ordered with x varying fastest: entry ``i + d*j`` holds
the value at ``(x_i, y_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyGraph, ParseError
from .sparse import SparseMatrix, add, from_arrays, identity, kron


@dataclass(frozen=True)
class GridSpec:
    d: int
    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("GridSpec needs at least 2 points per dimension")
        dom = tuple(tuple(float(v) for v in pair) for pair in self.domain)
        if len(dom) != 2 or any(len(p) != 2 or p[1] <= p[0] for p in dom):
            raise ValueError(f"bad domain {self.domain!r}")
        object.__setattr__(self, "domain", dom)

    @property
    def n(self) -> int:
        return self.d * self.d

    def spacing(self, axis: int) -> float:
        lo, hi = self.domain[axis]
        return (hi - lo) / (self.d - 1)

    def coordinates(self, axis: int) -> np.ndarray:
        lo, hi = self.domain[axis]
        return np.linspace(lo, hi, self.d)

    def mesh(self):
        """Flattened (x, y) coordinates in grid order."""
        x, y = np.meshgrid(self.coordinates(0), self.coordinates(1), indexing="xy")
        return x.ravel(), y.ravel()


def tridiag(d: int, lower: float, diag: float, upper: float) -> np.ndarray:
    return (np.diag(np.full(d, diag)) + np.diag(np.full(d - 1, lower), -1)
            + np.diag(np.full(d - 1, upper), 1))


def neumann_1d(d: int) -> np.ndarray:
    """Unscaled 1d Neumann Laplacian: tridiag(1,-2,1) with -1 in the corners."""
    lap = tridiag(d, 1.0, -2.0, 1.0)
    lap[0, 0] = lap[-1, -1] = -1.0
    return lap


def laplacian_2d_neumann(spec: GridSpec) -> SparseMatrix:
    """5-point finite-difference Laplacian with homogeneous Neumann boundaries.

    Symmetric, negative semidefinite, with the constant vector in its kernel.
    """
    d = spec.d
    lx = neumann_1d(d) / spec.spacing(0) ** 2
    ly = neumann_1d(d) / spec.spacing(1) ** 2
    return add(kron(np.eye(d), lx), kron(ly, np.eye(d)))


def convection_diffusion(d: int, diffusion: float, scaling: str = "mesh") -> SparseMatrix:
    """``diffusion*L + C`` on a d x d grid of [0,1]^2 (Dirichlet, upwind convection).

    With ``scaling="mesh"`` the stencils carry the usual mesh-width factors,
    L = (d-1)^2 (Lt x I + I x Lt) and C = (d-1) (Ct x I + I x Ct). With
    ``scaling="literal"`` the factors are inverted, 1/(d-1)^2 and 1/(d-1),
    which makes I - A a tiny perturbation of the identity. The two agree at d = 2.
    """
    if d < 2 or diffusion <= 0:
        raise ValueError("need d >= 2 and diffusion > 0")
    if scaling not in ("mesh", "literal"):
        raise ValueError(f"unknown scaling {scaling!r}")
    h = d - 1.0 if scaling == "mesh" else 1.0 / (d - 1.0)
    lap = tridiag(d, 1.0, -2.0, 1.0)
    conv = tridiag(d, 1.0, -1.0, 0.0)
    eye = np.eye(d)
    lap2 = add(kron(lap, eye), kron(eye, lap))
    conv2 = add(kron(conv, eye), kron(eye, conv))
    return add(lap2, conv2, alpha=diffusion * h * h, beta=h)


def shifted_identity_minus(a: SparseMatrix) -> SparseMatrix:
    """I - A, the implicit-Euler system matrix for unit step."""
    return add(identity(a.n), a, 1.0, -1.0)


def augmented_exp_operator(a: SparseMatrix, g_vec) -> SparseMatrix:
    """[[A, g], [0, 0]] of size n+1."""
    g_vec = np.asarray(g_vec, dtype=float)
    if g_vec.shape != (a.n,):
        raise ValueError(f"g_vec must have length {a.n}")
    nz = np.flatnonzero(g_vec)
    rows = np.concatenate([a.row_indices, nz])
    cols = np.concatenate([a.col_idx, np.full(nz.size, a.n)])
    vals = np.concatenate([a.vals, g_vec[nz]])
    return from_arrays(a.n + 1, rows, cols, vals)


def grid_eval(spec: GridSpec, which: str) -> np.ndarray:
    x, y = spec.mesh()
    if which == "gaussian_bump":
        return 0.5 * np.exp(-x ** 2) * np.exp(-y ** 2)
    if which == "polynomial_bump":
        return 0.3 + 256.0 * x * y * (1.0 - x) * (1.0 - y)
    raise ValueError(f"unknown grid function {which!r}")


def logistic_source(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return 0.25 * u * (1.0 - u)


def exp_euler_problem(d: int, diffusion: float = 1.0 / 40):
    """One exponential-Euler step of ``u' = D L u + u(1-u)/4`` from the Gaussian bump.

    Returns ``(A, b)`` with ``A`` the augmented operator and ``b = [u0; 1]``;
    the first ``d*d`` entries of ``exp(A) b`` are the new state.
    """
    spec = GridSpec(d, ((-1.0, 1.0), (-1.0, 1.0)))
    lap = laplacian_2d_neumann(spec)
    u0 = grid_eval(spec, "gaussian_bump")
    scaled = SparseMatrix(lap.n, lap.row_ptr, lap.col_idx, diffusion * lap.vals)
    a = augmented_exp_operator(scaled, logistic_source(u0))
    return a, np.append(u0, 1.0)


def exp_euler_exact(d: int, diffusion: float = 1.0 / 40) -> np.ndarray:
    """``exp(A) b`` for :func:`exp_euler_problem`, via the separable eigenbasis of L.

    Uses ``exp(A) b = [e^{DL} u0 + phi1(DL) g; 1]`` with ``L`` a Kronecker sum
    of two 1d Neumann Laplacians.
    """
    spec = GridSpec(d, ((-1.0, 1.0), (-1.0, 1.0)))
    mu_x, qx = np.linalg.eigh(neumann_1d(d) / spec.spacing(0) ** 2)
    mu_y, qy = np.linalg.eigh(neumann_1d(d) / spec.spacing(1) ** 2)
    u0 = grid_eval(spec, "gaussian_bump")
    g = logistic_source(u0)
    z = diffusion * (mu_y[:, None] + mu_x[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        phi1 = np.where(z == 0.0, 1.0, np.expm1(z) / z)

    def apply(fz, vec):
        grid = vec.reshape(d, d)
        return (qy @ (fz * (qy.T @ grid @ qx)) @ qx.T).ravel()

    return np.append(apply(np.exp(z), u0) + apply(phi1, g), 1.0)


def implicit_euler_problem(d: int, diffusion: float = 1e-3, scaling: str = "mesh"):
    """``(I - A) x = u0`` for the convection-diffusion operator and the polynomial bump."""
    a = convection_diffusion(d, diffusion, scaling)
    spec = GridSpec(d, ((0.0, 1.0), (0.0, 1.0)))
    return shifted_identity_minus(a), grid_eval(spec, "polynomial_bump")


# --------------------------------------------------------------------------
# Directed graphs
# --------------------------------------------------------------------------

def graph_in_laplacian(edges):
    """Normalized in-degree Laplacian ``I - D_in^{-1/2} A D_in^{-1/2}``.

    ``A[i, j] = 1`` for an edge i -> j. Self-loops are dropped and duplicate
    edges collapse to weight one. Nodes with zero in-degree are removed
    repeatedly until every survivor has an incoming edge.

    Returns ``(L, kept)`` where ``kept`` lists the surviving original node ids
    in the order used for the rows of ``L``.
    """
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    if arr.size and arr.min() < 0:
        raise ValueError("node ids must be nonnegative")
    arr = arr[arr[:, 0] != arr[:, 1]]
    arr = np.unique(arr, axis=0)
    nodes = np.unique(arr)
    if nodes.size == 0:
        raise EmptyGraph("graph has no edges")
    src = np.searchsorted(nodes, arr[:, 0])
    dst = np.searchsorted(nodes, arr[:, 1])
    alive = np.ones(nodes.size, dtype=bool)
    while True:
        live_edges = alive[src] & alive[dst]
        indeg = np.bincount(dst[live_edges], minlength=nodes.size)
        dead = alive & (indeg == 0)
        if not dead.any():
            break
        alive &= ~dead
    if not alive.any():
        raise EmptyGraph("every node was removed by zero in-degree pruning")
    live_edges = alive[src] & alive[dst]
    relabel = np.cumsum(alive) - 1
    s, t = relabel[src[live_edges]], relabel[dst[live_edges]]
    n = int(alive.sum())
    din = np.bincount(t, minlength=n).astype(float)
    scale = 1.0 / np.sqrt(din)
    off = -scale[s] * scale[t]
    rows = np.concatenate([np.arange(n), s])
    cols = np.concatenate([np.arange(n), t])
    vals = np.concatenate([np.ones(n), off])
    return from_arrays(n, rows, cols, vals), nodes[alive]


def read_edge_list(path):
    """Read a SNAP-style edge list: ``src dst`` per line, ``#`` comments."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(lineno, f"expected 'src dst', got {len(parts)} fields")
        try:
            src, dst = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(lineno, f"non-integer node id in '{stripped}'") from None
        if src < 0 or dst < 0:
            raise ParseError(lineno, "negative node id")
        edges.append((src, dst))
    return edges


def write_edge_list(path, edges, comment: str | None = None) -> None:
    lines = [f"# {comment}"] if comment else []
    lines += [f"{s} {t}" for s, t in edges]
    Path(path).write_text("\n".join(lines) + "\n")


def preferential_attachment_edges(n: int, out_degree: int = 3, reciprocity: float = 0.3,
                                  seed: int = 0):
    """Directed preferential-attachment graph.

    Node t links to ``out_degree`` distinct earlier nodes chosen with
    probability proportional to in-degree + 1; each such edge is reciprocated
    with probability ``reciprocity`` so that pruning leaves a large core.
    """
    rng = np.random.default_rng(seed)
    indeg = np.zeros(n)
    edges = []
    for t in range(1, n):
        k = min(out_degree, t)
        weights = indeg[:t] + 1.0
        targets = rng.choice(t, size=k, replace=False, p=weights / weights.sum())
        for j in sorted(int(x) for x in targets):
            edges.append((t, j))
            indeg[j] += 1
            if rng.random() < reciprocity:
                edges.append((j, t))
                indeg[t] += 1
    return edges
