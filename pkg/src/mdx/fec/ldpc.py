"""Regular LDPC codes from progressive edge growth, with a normalized min-sum decoder.

Decoder input LLRs follow the receiver convention: a positive value favours bit 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from mdx.errors import ConfigError, FormatError, ShapeError

MAX_PEG_ATTEMPTS = 50


@dataclass(frozen=True)
class LdpcCode:
    """Parity-check structure plus a systematic encoder.

    Attributes:
        n: Code length.
        m: Number of parity checks.
        check_vars: ``(m, d_c)`` variable indices of every check.
        info_cols: Codeword positions carrying information bits.
        parity_cols: Codeword positions carrying parity bits.
        parity_map: ``(m, n - m)`` binary matrix, ``parity = parity_map @ info mod 2``.
    """

    n: int
    m: int
    check_vars: np.ndarray
    info_cols: np.ndarray
    parity_cols: np.ndarray
    parity_map: np.ndarray

    @property
    def k(self):
        return self.n - self.m

    @property
    def rate(self):
        return self.k / self.n

    def parity_check_matrix(self):
        H = np.zeros((self.m, self.n), dtype=np.int8)
        np.put_along_axis(H, self.check_vars, 1, axis=1)
        return H

    def syndrome(self, codeword):
        c = np.asarray(codeword, dtype=np.int64)
        return np.sum(c[..., self.check_vars], axis=-1) % 2

    def to_json(self):
        return json.dumps({"n": self.n, "m": self.m, "rows": self.check_vars.tolist()})

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
            return code_from_rows(doc["n"], doc["rows"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise FormatError(f"invalid code definition: {exc}") from exc


def gf2_systematic(H):
    """Row-reduce ``H`` over GF(2).

    Returns:
        ``(pivot_cols, reduced)`` with ``reduced`` in reduced row-echelon form;
        the rank is ``len(pivot_cols)``.
    """
    A = (np.asarray(H) % 2).astype(np.uint8).copy()
    m, n = A.shape
    pivots, row = [], 0
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(A[row:, col]) + row
        if hits.size == 0:
            continue
        p = hits[0]
        if p != row:
            A[[row, p]] = A[[p, row]]
        others = np.flatnonzero(A[:, col])
        others = others[others != row]
        A[others] ^= A[row]
        pivots.append(col)
        row += 1
    return np.array(pivots, dtype=np.int64), A[:row]


def code_from_rows(n, rows):
    rows = np.asarray(rows, dtype=np.int64)
    m = rows.shape[0]
    H = np.zeros((m, n), dtype=np.int8)
    np.put_along_axis(H, rows, 1, axis=1)
    pivots, R = gf2_systematic(H)
    if len(pivots) < m:
        raise ConfigError(f"parity-check matrix has rank {len(pivots)} < {m}")
    info = np.setdiff1d(np.arange(n), pivots)
    # each reduced row reads: parity[pivot_i] + sum_j R[i, info_j] info_j = 0
    return LdpcCode(n, m, rows, info, pivots, R[:, info].astype(np.int8))


def _peg_rows(n, var_degree, check_degree, rng):
    m = n * var_degree // check_degree
    check_deg = np.zeros(m, dtype=np.int64)
    var_adj = [[] for _ in range(n)]
    check_adj = [[] for _ in range(m)]
    for v in range(n):
        for e in range(var_degree):
            open_checks = np.flatnonzero(check_deg < check_degree)
            open_checks = open_checks[~np.isin(open_checks, var_adj[v])]
            if e == 0:
                candidates = open_checks
            else:
                candidates = _peg_candidates(v, var_adj, check_adj, open_checks, m)
            low = candidates[check_deg[candidates] == check_deg[candidates].min()]
            c = int(rng.choice(low))
            var_adj[v].append(c)
            check_adj[c].append(v)
            check_deg[c] += 1
    if np.any(check_deg != check_degree):
        raise ConfigError("edge growth did not reach a regular graph")
    return np.array([sorted(a) for a in check_adj])


def _peg_candidates(v, var_adj, check_adj, open_checks, m):
    """Open checks farthest from ``v`` in the current graph.

    The tree rooted at ``v`` is grown one check level at a time. Once it stops
    growing, unreached open checks are returned; once the next level would
    cover every open check, the open checks outside the current tree are.
    """
    reached = np.zeros(m, dtype=bool)
    reached[var_adj[v]] = True
    seen_v = {v}
    frontier = list(var_adj[v])
    while True:
        unreached = open_checks[~reached[open_checks]]
        nxt = []
        for c in frontier:
            for u in check_adj[c]:
                if u in seen_v:
                    continue
                seen_v.add(u)
                for c2 in var_adj[u]:
                    if not reached[c2]:
                        reached[c2] = True
                        nxt.append(c2)
        if not nxt:
            return unreached if unreached.size else open_checks
        if not np.any(~reached[open_checks]):
            return unreached
        frontier = nxt


def build_peg_code(n, seed=0, var_degree=3, check_degree=6):
    """Full-rank regular ``(var_degree, check_degree)`` code of length ``n``.

    Graphs with a rank-deficient parity-check matrix are discarded and the
    construction repeated with the next sub-seed.
    """
    if n <= 0 or (n * var_degree) % check_degree:
        raise ConfigError(f"length {n} incompatible with degrees ({var_degree}, {check_degree})")
    for attempt in range(MAX_PEG_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        rows = _peg_rows(n, var_degree, check_degree, rng)
        try:
            return code_from_rows(n, rows)
        except ConfigError:
            continue
    raise ConfigError(f"no full-rank code found after {MAX_PEG_ATTEMPTS} attempts")


def ldpc_encode(info, code: LdpcCode):
    """Systematic encoding of ``(..., k)`` information bits."""
    info = np.asarray(info, dtype=np.int64)
    if info.shape[-1] != code.k:
        raise ShapeError(f"expected {code.k} information bits, got {info.shape[-1]}")
    cw = np.zeros(info.shape[:-1] + (code.n,), dtype=np.int8)
    cw[..., code.info_cols] = info
    cw[..., code.parity_cols] = (info @ code.parity_map.T.astype(np.int64)) % 2
    return cw


@dataclass
class DecodeResult:
    bits: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


def ldpc_decode(llr, code: LdpcCode, max_iters=50, alpha=0.75):
    """Normalized min-sum decoding with flooding schedule.

    Decoding of a word stops once every parity check is satisfied by
    decisions that all have non-zero reliability.

    Args:
        llr: ``(n,)`` or ``(batch, n)`` LLRs, positive favouring bit 1.
        code: The code.
        max_iters: Iteration cap.
        alpha: Normalization factor applied to check-to-variable messages.

    Returns:
        :class:`DecodeResult` with hard decisions, converged flags and iteration counts.
    """
    llr = np.asarray(llr, dtype=float)
    single = llr.ndim == 1
    L = -np.atleast_2d(llr)  # internal convention: positive favours 0
    if L.shape[-1] != code.n:
        raise ShapeError(f"expected {code.n} LLRs, got {L.shape[-1]}")
    nb = L.shape[0]
    cv = code.check_vars
    c2v = np.zeros((nb,) + cv.shape)
    total = L.copy()
    done = np.zeros(nb, dtype=bool)
    iters = np.zeros(nb, dtype=np.int64)
    out = np.zeros((nb, code.n), dtype=np.int8)
    flat_idx = (np.arange(nb)[:, None] * code.n + cv.reshape(1, -1)).ravel()
    for it in range(1, max_iters + 1):
        act = ~done
        v2c = total[:, cv] - c2v
        mag = np.abs(v2c)
        sgn = np.where(v2c < 0, -1.0, 1.0)
        order = np.argsort(mag, axis=-1)
        min1 = np.take_along_axis(mag, order[..., :1], axis=-1)
        min2 = np.take_along_axis(mag, order[..., 1:2], axis=-1)
        is_min = np.arange(cv.shape[1]) == order[..., :1]
        excl = np.where(is_min, min2, min1)
        new = alpha * np.prod(sgn, axis=-1, keepdims=True) * sgn * excl
        c2v = np.where(act[:, None, None], new, c2v)
        sums = np.bincount(flat_idx, weights=c2v.ravel(), minlength=nb * code.n).reshape(nb, code.n)
        total = np.where(act[:, None], L + sums, total)
        hard = (total < 0).astype(np.int8)
        ok = (code.syndrome(hard) == 0).all(axis=-1) & np.all(total != 0, axis=-1)
        newly = act & ok
        iters[act] = it
        out[act] = hard[act]
        done |= newly
        if done.all():
            break
    res = DecodeResult(out, done, iters)
    if single:
        res = DecodeResult(out[0], bool(done[0]), int(iters[0]))
    return res
