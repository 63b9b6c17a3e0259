"""Tensor-product Gauss-Hermite nodes for k-dimensional Gaussian expectations."""
from __future__ import annotations

import itertools

import numpy as np

# Per-axis node defaults by dimension; integrands against Gaussian weights in
# this package are low-degree polynomials, so exactness is reached early and
# the tensor product stays small.
DEFAULT_NODES = {1: 64, 2: 24, 3: 10, 4: 6}


def default_nodes(k: int) -> int:
    return DEFAULT_NODES.get(k, 8)


def gauss_hermite_points(k: int, nodes: int | None = None):
    """Nodes z (n, k) and weights w (n,) with sum_i w_i g(z_i) ~ int g(z) e^{-|z|^2} dz."""
    if nodes is None:
        nodes = default_nodes(k)
    if nodes < 2:
        raise ValueError("need at least 2 Gauss-Hermite nodes per axis")
    x, w = np.polynomial.hermite.hermgauss(nodes)
    pts = np.array(list(itertools.product(x, repeat=k)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=k))), axis=1)
    return pts, wts
