import numpy as np

from orbitflow import CotangentPoint, MatrixModel, reduce


def random_reduced_state(kind, n, seed, min_gap=0.2):
    """Gauge-canonical reduced state from a seeded random regular pair."""
    model = MatrixModel(kind, n)
    rng = np.random.default_rng(seed)
    A, alpha = model.random_regular_pair(rng, min_gap=min_gap)
    state, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
    return state, A, alpha, model


def rank_one_spin(n, c, rng):
    """Spin matrix i(c I + w w*) with |w_i|^2 = -c (requires c < 0)."""
    assert c < 0
    phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))
    w = np.sqrt(-c) * phases
    Y = 1j * (c * np.eye(n) + np.outer(w, w.conj()))
    np.fill_diagonal(Y, 0.0)
    return Y
