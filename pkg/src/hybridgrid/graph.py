"""Spanning-tree primitives: union-find, Kruskal, matrix-tree counting."""
from __future__ import annotations

from typing import Hashable, Iterable, Sequence


class UnionFind:
    def __init__(self, items: Iterable[Hashable]):
        self.parent = {x: x for x in items}
        self.size = {x: 1 for x in self.parent}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def kruskal(nodes: Sequence, edges: Sequence[tuple]) -> list:
    """Minimum spanning forest.

    ``edges`` are ``(key, u, v)`` where ``key`` is any orderable value; ties
    in weight should be broken inside the key (e.g. ``(weight, edge_id)``).
    Returns the selected keys in the order they were accepted.
    """
    uf = UnionFind(nodes)
    chosen = []
    for key, u, v in sorted(edges, key=lambda e: e[0]):
        if uf.union(u, v):
            chosen.append(key)
            if len(chosen) == len(nodes) - 1:
                break
    return chosen


def laplacian(nodes: Sequence, edges: Iterable[tuple]) -> list[list[int]]:
    idx = {n: i for i, n in enumerate(nodes)}
    L = [[0] * len(nodes) for _ in nodes]
    for u, v in edges:
        i, j = idx[u], idx[v]
        L[i][i] += 1
        L[j][j] += 1
        L[i][j] -= 1
        L[j][i] -= 1
    return L


def bareiss_det(M: list[list[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    A = [row[:] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i, row_k = A[i], A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[-1][-1]


def count_spanning_trees(nodes: Sequence, edges: Iterable[tuple]) -> int:
    """Kirchhoff count; parallel edges count as distinct trees."""
    if len(nodes) <= 1:
        return 1
    L = laplacian(nodes, edges)
    minor = [row[1:] for row in L[1:]]
    return bareiss_det(minor)
