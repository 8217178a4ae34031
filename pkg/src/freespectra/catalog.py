"""Fixture-backed catalog of indecomposable convexotonic maps.

Entries with ids ``g2.I`` .. ``g2.IV`` (two variables) and ``g3.01`` ..
``g3.12`` (three variables) are read from JSON fixtures.  Two parametrized
families are generated: ``ball`` (parameter ``v`` with ||v|| < 1) and
``ex6.4`` (parameter ``g``, the shift-power family Xi_j = S^j).

Every entry is validated when loaded.  The closed-form maps below are built
by series arithmetic and compared with the maps generated from Xi.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .convexotonic import (ball_tuple, embed_tuple, example_shift_tuple, is_convexotonic,
                           map_eval, map_series, structure_matrices)
from .errors import InvalidParameter
from .jsonio import decode_tuple
from .nc_core import FreeSeries, as_tuple, identity_row, row_diff
from .util import psd_sqrt

FIXTURE_DIR = "data/catalog/v1"
SERIES_DEGREE = 8
FIXED_IDS = ["g2.I", "g2.II", "g2.III", "g2.IV"] + [f"g3.{k:02d}" for k in range(1, 13)]
FAMILY_IDS = ["ball", "ex6.4"]


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    g: int
    name: str
    relations: str
    R: np.ndarray
    Xi: np.ndarray
    p: list
    q: list
    params: dict = field(default_factory=dict)
    description: str = ""
    errata: tuple = ()
    closed_form_residual: float = 0.0

    def to_dict(self):
        return {"id": self.id, "g": self.g, "name": self.name, "relations": self.relations,
                "description": self.description, "params": self.params, "R": self.R,
                "Xi": self.Xi, "errata": list(self.errata), "p": self.p, "q": self.q}


# ---------------------------------------------------------------------------
# closed forms


def _geom(s: FreeSeries, N: int) -> FreeSeries:
    """(1 - s)^{-1} for a scalar series s without constant term."""
    out = FreeSeries.constant(s.g, 1.0, N)
    term = FreeSeries.constant(s.g, 1.0, N)
    for _ in range(N):
        term = term * s
        if not len(term):
            break
        out = out + term
    return out


def closed_forms(entry_id: str, N: int = SERIES_DEGREE, alpha: float = 0.0, v=None, g: int | None = None):
    """Closed-form (p, q) for catalog ids, built from rational expressions."""
    if entry_id.startswith("g2"):
        x1, x2 = identity_row(2, N)
        i1, j1 = _geom(x1, N), _geom(-x1, N)
        forms = {
            "g2.I": ([x1, x2 + x1 * x1], [x1, x2 - x1 * x1]),
            "g2.II": ([i1 * x1, i1 * x2], [j1 * x1, j1 * x2]),
            "g2.III": ([x1 * i1, x2 * i1], [x1 * j1, x2 * j1]),
            "g2.IV": ([x1 * i1, i1 * x2 * i1], [x1 * j1, j1 * x2 * j1]),
        }
        return forms[entry_id]
    if entry_id.startswith("g3"):
        x1, x2, x3 = identity_row(3, N)
        i2, i3 = _geom(x2, N), _geom(x3, N)
        j2, j3 = _geom(-x2, N), _geom(-x3, N)
        k = int(entry_id[3:])
        if k == 1:
            return [x1, x2 + x1 * x3 + x3 * x1, x3], [x1, x2 - x1 * x3 - x3 * x1, x3]
        if k == 2:
            return ([x1, x2 + x1 * x3 + alpha * (x3 * x1), x3],
                    [x1, x2 - x1 * x3 - alpha * (x3 * x1), x3])
        if k == 3:
            return ([x1, x2 + x1 * x1, x3 + x1 * (x1 * x1 + x2) + x2 * x1],
                    [x1, x2 - x1 * x1, x3 + x1 * (x1 * x1 - x2) - x2 * x1])
        if k == 4:
            return [x1, (x2 + x1 * x3) * i3, x3 * i3], [x1, (x2 - x1 * x3) * j3, x3 * j3]
        if k == 5:
            return [i3 * x1, x2 * i3, x3 * i3], [j3 * x1, x2 * j3, x3 * j3]
        if k == 6:
            return [x1, i3 * (x2 + x3 * x1), x3 * i3], [x1, j3 * (x2 - x3 * x1), x3 * j3]
        if k == 7:
            return [i3 * x1 * i2, x2 * i2, x3 * i3], [j3 * x1 * j2, x2 * j2, x3 * j3]
        if k == 8:
            return [i3 * x1 * i3, x2 * i3, i3 * x3], [j3 * x1 * j3, x2 * j3, x3 * j3]
        if k == 9:
            return [i3 * x1, i3 * x2 * i3, x3 * i3], [j3 * x1, j3 * x2 * j3, x3 * j3]
        if k == 10:
            return [i3 * x1 * i3, i3 * x2 * i3, x3 * i3], [j3 * x1 * j3, j3 * x2 * j3, x3 * j3]
        if k == 11:
            mid = x2 + x1 * x3 + x3 * x1 - x3 * x1 * x3
            mid_q = x2 - x1 * x3 - x3 * x1 - x3 * x1 * x3
            return [x1, i3 * mid * i3, x3 * i3], [x1, j3 * mid_q * j3, x3 * j3]
        if k == 12:
            return ([i3 * x1 * i3, i3 * (x1 * i3 * x1 + x2) * i3, x3 * i3],
                    [j3 * x1 * j3, -(j3 * (x1 * j3 * x1 - x2) * j3), x3 * j3])
    if entry_id == "ball":
        v = np.asarray(v, dtype=complex)
        xs = identity_row(v.size, N)
        lin = sum((np.conj(v[j]) * xs[j] for j in range(v.size)), FreeSeries.zero(v.size, N=N))
        return [_geom(lin, N) * x for x in xs], [_geom(-lin, N) * x for x in xs]
    if entry_id == "ex6.4":
        xs = identity_row(g, N)
        ps, qs = [], []
        for m in range(1, g + 1):
            terms, terms_q = {}, {}
            for w in _compositions(m):
                if len(w) <= N:
                    terms[w] = 1.0
                    terms_q[w] = (-1.0) ** (len(w) - 1)
            ps.append(FreeSeries(g, 1, 1, N, terms))
            qs.append(FreeSeries(g, 1, 1, N, terms_q))
        return ps, qs
    raise KeyError(entry_id)


def _compositions(m: int):
    if m == 0:
        yield ()
        return
    for first in range(1, m + 1):
        for rest in _compositions(m - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# relation text


_REL = re.compile(r"R(\d)R(\d)\s*=\s*(.+)")


def parse_relations(text: str, g: int, alpha: float = 0.0) -> np.ndarray:
    """Structure matrices implied by a relation table such as 'R1R3=R2, R3R1=alpha R2'.

    Unlisted products are zero.
    """
    Xi = np.zeros((g, g, g), dtype=complex)
    for part in text.split(","):
        m = _REL.match(part.strip())
        if not m:
            raise ValueError(f"cannot parse relation {part!r}")
        k, j, rhs = int(m.group(1)), int(m.group(2)), m.group(3).strip()
        if rhs == "0":
            continue
        for term in rhs.split("+"):
            term = term.strip()
            coef = 1.0
            if term.startswith("alpha"):
                coef, term = alpha, term[5:].strip()
            elif term.startswith("-"):
                coef, term = -1.0, term[1:].strip()
            s = int(term[1:])
            Xi[j - 1, k - 1, s - 1] += coef
    return Xi


# ---------------------------------------------------------------------------
# loading


def _read_fixture(entry_id: str) -> dict:
    path = resources.files("freespectra").joinpath(f"{FIXTURE_DIR}/{entry_id}.json")
    return json.loads(path.read_text())


def list_entries() -> list[dict]:
    out = []
    for eid in FIXED_IDS:
        d = _read_fixture(eid)
        out.append({"id": eid, "g": d["g"], "name": d["name"],
                    "description": d.get("description") or d["relations"],
                    "params": sorted(d.get("params", {}))})
    out.append({"id": "ball", "g": None, "name": "ball automorphisms",
                "description": "Xi_j[a, b] = conj(v_a) delta_jb; p = x (I - v* x)^-1",
                "params": ["v"]})
    out.append({"id": "ex6.4", "g": None, "name": "shift powers",
                "description": "Xi_j = S^j for the g x g upper shift S; p has degree g",
                "params": ["g"]})
    return out


def _validate(entry_id, R, Xi, N, cf_args) -> tuple[list, list, float]:
    rep = is_convexotonic(Xi)
    if not rep.passed:
        raise AssertionError(f"{entry_id}: Xi not convexotonic (residual {rep.max_residual:.2e})")
    Xr = structure_matrices(R, R)
    if np.abs(Xr - Xi).max() > 1e-12:
        raise AssertionError(f"{entry_id}: R does not reproduce Xi")
    p, q = map_series(Xi, N)
    pc, qc = closed_forms(entry_id, N, **cf_args)
    resid = max(row_diff(p, pc), row_diff(q, qc))
    if resid > 1e-12:
        raise AssertionError(f"{entry_id}: closed-form maps differ from the generated maps ({resid:.2e})")
    return p, q, resid


def get(entry_id: str, **params) -> CatalogEntry:
    """Fetch and validate a catalog entry.

    Parameters: ``alpha`` (real) for g3.02, ``v`` (||v|| < 1) for ball, ``g`` for ex6.4.
    """
    key = tuple(sorted((k, _hashable(v)) for k, v in params.items()))
    return _get_cached(entry_id, key)


def _hashable(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return tuple(complex(z) for z in np.asarray(v).ravel())
    return v


@lru_cache(maxsize=128)
def _get_cached(entry_id: str, key: tuple) -> CatalogEntry:
    params = dict(key)
    N = SERIES_DEGREE
    if entry_id in FIXED_IDS:
        d = _read_fixture(entry_id)
        Xi = decode_tuple(d["Xi"])
        cf_args, shown = {}, {}
        if entry_id == "g3.02":
            if "alpha" not in params:
                raise InvalidParameter("g3.02 needs a real parameter alpha")
            a = params["alpha"]
            if isinstance(a, complex) or np.iscomplexobj(a):
                if abs(complex(a).imag) > 0:
                    raise InvalidParameter("alpha must be real")
                a = complex(a).real
            a = float(a)
            Xi = Xi + a * decode_tuple(d["Xi_alpha"])
            cf_args, shown = {"alpha": a}, {"alpha": a}
        elif params:
            raise InvalidParameter(f"{entry_id} takes no parameters")
        R = decode_tuple(d["R"]) if "R" in d else embed_tuple(Xi)
        p, q, resid = _validate(entry_id, R, Xi, N, cf_args)
        return CatalogEntry(entry_id, d["g"], d["name"], d["relations"], R, Xi, p, q, shown,
                            d.get("description", ""), tuple(d.get("errata", [])), resid)
    if entry_id == "ball":
        if "v" not in params:
            raise InvalidParameter("ball needs a vector parameter v")
        v = np.asarray(params["v"], dtype=complex).reshape(-1)
        if np.linalg.norm(v) >= 1:
            raise InvalidParameter("ball parameter needs ||v|| < 1")
        Xi = ball_tuple(v)
        R = embed_tuple(Xi)
        p, q, resid = _validate("ball", R, Xi, N, {"v": v})
        return CatalogEntry("ball", v.size, "ball automorphisms", "", R, Xi, p, q, {"v": v},
                            "Xi_j[a, b] = conj(v_a) delta_jb", (), resid)
    if entry_id == "ex6.4":
        g = int(params.get("g", 0))
        if g < 1:
            raise InvalidParameter("ex6.4 needs a size parameter g >= 1")
        Xi = example_shift_tuple(g)
        R = embed_tuple(Xi)
        p, q, resid = _validate("ex6.4", R, Xi, N, {"g": g})
        return CatalogEntry("ex6.4", g, "shift powers", "", R, Xi, p, q, {"g": g},
                            "Xi_j = S^j", (), resid)
    raise InvalidParameter(f"unknown catalog id {entry_id!r}")


# ---------------------------------------------------------------------------
# ball automorphisms


def ball_pencil(g: int) -> np.ndarray:
    """A_j = e_1 e_{j+1}^T of size g+1; D_A is the set of row contractions."""
    A = np.zeros((g, g + 1, g + 1), dtype=complex)
    for j in range(g):
        A[j, 0, j + 1] = 1.0
    return A


def ball_automorphism(v, X) -> np.ndarray:
    """F_v(X) = v - (1 - v v*)^{1/2} (I - sum conj(v_j) X_j)^{-1} [X_1 .. X_g] (I - v* v)^{1/2}."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    g = v.size
    nv = float(np.vdot(v, v).real)
    if nv >= 1:
        raise InvalidParameter("ball parameter needs ||v|| < 1")
    X = as_tuple(X, g)
    n = X.shape[1]
    K = np.eye(n) - np.tensordot(v.conj(), X, axes=1)
    if np.linalg.cond(K) > 1e12:
        from .errors import OutsideDomainError
        raise OutsideDomainError("resolvent (I - sum conj(v_j) X_j) is singular")
    Y = np.linalg.solve(K, np.concatenate(list(X), axis=1)).reshape(n, g, n).transpose(1, 0, 2)
    Sq = psd_sqrt(np.eye(g) - np.outer(v.conj(), v))
    mixed = np.einsum("jab,jk->kab", Y, Sq)
    return v[:, None, None] * np.eye(n) - np.sqrt(1 - nv) * mixed


def ball_automorphism_via_map(v, X) -> np.ndarray:
    """The same automorphism written as affine maps around the convexotonic map of the ball tuple.

    F_v(X) = v - sqrt(1-|v|^2) p(X) (I - v* v)^{1/2}, with p = x (I - v* x)^{-1}.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    g = v.size
    X = as_tuple(X, g)
    n = X.shape[1]
    P = map_eval(ball_tuple(v), X)
    Sq = psd_sqrt(np.eye(g) - np.outer(v.conj(), v))
    nv = float(np.vdot(v, v).real)
    return v[:, None, None] * np.eye(n) - np.sqrt(1 - nv) * np.einsum("jab,jk->kab", P, Sq)
