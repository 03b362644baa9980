"""Acceptance suite: one test per release criterion, one printed verdict each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
Tolerances are fixed here and are not calibration knobs.
"""

import numpy as np
import numpy.testing as npt
import pytest

from conftest import random_reduced_state, rank_one_spin
from orbitflow import (
    ChamberPoint,
    CotangentPoint,
    MatrixModel,
    ReducedDerivative,
    ReducedState,
    billiard_geodesic,
    builtin_root_system,
    chamber_map,
    classical_cm_field,
    closed_form_2x2,
    compare_to_eigenflow,
    distance,
    eigenflow,
    integrate,
    matrix_state_to_polar,
    minimal_segment,
    polar_vector_field,
    reduce,
    segment_stratum_check,
    variational_flow,
    vector_field,
    verify_root_system,
)

KINDS = ("hermitian", "real_symmetric")


def _verdict(num, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} ({name}): {status} -- {detail}")
    assert ok, f"criterion {num} ({name}): {detail}"


@pytest.fixture(scope="module")
def oracle_runs():
    """50 seeded regular pairs: 5 per model and dimension, integrated on [0,1]."""
    runs = []
    for kind in KINDS:
        for n in range(2, 7):
            for rep in range(5):
                seed = 100000 + 1000 * (kind == "hermitian") + 10 * n + rep
                s, A, alpha, model = random_reduced_state(kind, n, seed=seed)
                assert -np.diff(s.a).min() >= 0.2  # regular, clear of the walls
                traj = integrate(s, 1.0)
                runs.append((kind, n, rep, traj, A, alpha))
    assert len(runs) == 50
    return runs


def test_criterion_1_oracle_equivalence(oracle_runs):
    worst = 0.0
    for kind, n, rep, traj, A, alpha in oracle_runs:
        dev, _ = compare_to_eigenflow(traj, A, alpha)
        worst = max(worst, float(np.max(dev)))
    _verdict(1, "oracle equivalence", worst < 1e-6,
             f"max |a(t) - eigenflow| = {worst:.3e} over 50 runs, bound 1e-6")


def test_criterion_2_closed_form():
    rng = np.random.default_rng(42)
    worst_flow, worst_dyn = 0.0, 0.0
    ts = np.linspace(0.0, 1.0, 21)
    for _ in range(100):
        a1, a2, v1, v2, v3 = rng.standard_normal(5)
        A = np.diag([a1, a2])
        V = np.array([[v1, v3], [v3, v2]])
        rows = eigenflow(A, V, times=ts)
        l1, l2 = closed_form_2x2(a1, a2, v1, v2, v3, ts)
        worst_flow = max(worst_flow,
                         float(np.max(np.abs(rows - np.stack([l1, l2], axis=1)))))
        s, _ = reduce(CotangentPoint(A=A, alpha=V))
        traj = integrate(s, 1.0, samples=20)
        sampled = np.array([st.a for st in traj.states])
        worst_dyn = max(worst_dyn,
                        float(np.max(np.abs(sampled - np.stack([l1, l2], axis=1)))))
    ok = worst_flow < 1e-12 and worst_dyn < 1e-8
    _verdict(2, "2x2 closed form", ok,
             f"vs eigenflow {worst_flow:.3e} (<1e-12), "
             f"vs integrated dynamics {worst_dyn:.3e} (<1e-8)")


def test_criterion_3_classical_calogero_moser():
    rng = np.random.default_rng(43)
    worst_field = 0.0
    gap_events = 0
    for n in range(2, 6):
        for _ in range(5):
            c = -float(rng.uniform(0.3, 1.0))
            gaps = 0.4 + rng.uniform(0.0, 0.6, n - 1)
            a = np.concatenate([[0.0], np.cumsum(gaps)])[::-1]
            a = a - a.mean()
            p = rng.standard_normal(n)
            s = ReducedState(a=a, p=p, Y=rank_one_spin(n, c, rng),
                             model=MatrixModel.hermitian(n))
            d = vector_field(s)
            da, dp = classical_cm_field(a, p, c)
            worst_field = max(worst_field,
                              float(np.max(np.abs(d.da - da))),
                              float(np.max(np.abs(d.dp - dp))))
            traj = integrate(s, 1.0)
            gap_events += sum(e.kind == "gap_floor" for e in traj.events)
    ok = worst_field < 1e-12 and gap_events == 0
    _verdict(3, "classical Calogero-Moser", ok,
             f"field difference {worst_field:.3e} (<1e-12), "
             f"{gap_events} gap-floor events (wall avoidance)")


def test_criterion_4_conservation(oracle_runs):
    worst_e, worst_c = 0.0, 0.0
    for kind, n, rep, traj, A, alpha in oracle_runs:
        e = traj.step_energy
        worst_e = max(worst_e,
                      float(np.max(np.abs(e - e[0])) / max(1.0, abs(e[0]))))
        c = traj.step_casimir
        scale = np.maximum(1.0, np.abs(c[0]))
        worst_c = max(worst_c, float(np.max(np.abs(c - c[0]) / scale)))
    ok = worst_e < 1e-8 and worst_c < 1e-8
    _verdict(4, "conservation", ok,
             f"relative energy drift {worst_e:.3e}, "
             f"Casimir drift {worst_c:.3e} (both <1e-8)")


def test_criterion_5_degenerate_strata():
    worst_frozen, worst_block, worst_rest = 0.0, 0.0, 0.0
    for kind in KINDS:
        model = MatrixModel(kind, 4)
        sub_model = MatrixModel(kind, 2)
        rng = np.random.default_rng(44 + (kind == "hermitian"))
        B2 = sub_model.random_matrix(rng)
        C2 = sub_model.random_matrix(rng)
        Z2 = np.zeros((2, 2), dtype=model.dtype)
        A = np.diag([5.0, 5.0, 1.0, 0.0]).astype(model.dtype)
        alpha = np.block([[B2, Z2], [Z2, C2]])
        s0, _ = reduce(CotangentPoint(A=A, alpha=alpha), model)
        assert s0.a[0] == s0.a[1] and s0.Y[0, 1] == 0.0
        traj = integrate(s0, 1.0)
        mu = np.sort(np.linalg.eigvalsh(B2))[::-1]
        s_sub, _ = reduce(
            CotangentPoint(A=np.diag([1.0, 0.0]).astype(model.dtype), alpha=C2),
            sub_model,
        )
        traj_sub = integrate(s_sub, 1.0)
        for k, t in enumerate(traj.times):
            st = traj.states[k]
            worst_frozen = max(worst_frozen, float(np.max(np.abs(st.Y[:2, :2]))),
                               float(np.max(np.abs(st.Y[:2, 2:]))))
            worst_block = max(worst_block,
                              float(np.max(np.abs(st.a[:2] - (5.0 + t * mu)))))
            worst_rest = max(worst_rest,
                             float(np.max(np.abs(st.a[2:] - traj_sub.states[k].a))))
    ok = worst_frozen < 1e-10 and worst_block < 1e-6 and worst_rest < 1e-6
    _verdict(5, "degenerate strata", ok,
             f"frozen spin {worst_frozen:.3e} (<1e-10), block linearity "
             f"{worst_block:.3e}, reduced-system match {worst_rest:.3e} (<1e-6)")


def test_criterion_6_polar_specialization():
    worst_field = 0.0
    worst_defect = 0.0
    count = 0
    for n in (2, 3, 4):
        for kind in KINDS:
            model = MatrixModel(kind, n)
            rs = builtin_root_system(model)
            rep = verify_root_system(rs, samples=50)
            worst_defect = max(worst_defect, rep.max_defect)
            s2 = np.sqrt(2.0)
            for trial in range(50):
                s, *_ = random_reduced_state(kind, n, seed=50000 + 100 * n + trial)
                ps = matrix_state_to_polar(s, rs)
                d_mat = vector_field(s)
                d_pol = polar_vector_field(ps)
                worst_field = max(
                    worst_field,
                    float(np.max(np.abs(d_pol.dA0 - d_mat.da))),
                    float(np.max(np.abs(d_pol.dp0 - d_mat.dp))),
                )
                for r, (i, j) in enumerate(rs.realization.root_pairs):
                    y = d_mat.dY[i, j]
                    worst_field = max(
                        worst_field,
                        abs(d_pol.dYroots[r][0] - s2 * y.real),
                    )
                    if model.is_complex:
                        worst_field = max(
                            worst_field,
                            abs(d_pol.dYroots[r][1] - s2 * y.imag),
                        )
                count += 1
    ok = worst_field < 1e-12 and worst_defect < 1e-10
    _verdict(6, "polar specialization", ok,
             f"field agreement {worst_field:.3e} (<1e-12) on {count} states, "
             f"root-system defect {worst_defect:.3e} (<1e-10)")


def test_criterion_7_geodesic_billiards():
    rng = np.random.default_rng(45)
    worst_path = 0.0
    for n in (2, 3, 4):
        rs = builtin_root_system(MatrixModel.real_symmetric(n))
        for _ in range(10):
            a = np.sort(rng.standard_normal(n))[::-1]
            v = rng.standard_normal(n)
            path = billiard_geodesic(rs, a, v, 3.0)
            ts = np.linspace(0.0, 3.0, 61)
            rows = eigenflow(np.diag(a), np.diag(v), times=ts)
            worst_path = max(worst_path,
                             float(np.max(np.abs(path.positions(ts) - rows))))
    worst_angle = 0.0
    n_events = 0
    rs3 = builtin_root_system(MatrixModel.real_symmetric(3))
    for _ in range(1000):
        x0 = np.sort(rng.standard_normal(3))[::-1]
        v0 = rng.standard_normal(3)
        path = billiard_geodesic(rs3, x0, v0, 2.0)
        for e in path.events:
            n_events += 1
            worst_angle = max(
                worst_angle,
                abs(np.linalg.norm(e.v_out) - np.linalg.norm(e.v_in)),
            )
            if len(e.walls) == 1:
                root = rs3.roots[e.walls[0]]
                worst_angle = max(
                    worst_angle,
                    abs(np.dot(root, e.v_out) + np.dot(root, e.v_in)),
                )
    ok = worst_path < 1e-12 and worst_angle < 1e-12 and n_events > 500
    _verdict(7, "geodesic billiards", ok,
             f"commuting-data path vs eigenflow {worst_path:.3e} (<1e-12), "
             f"angle preservation {worst_angle:.3e} over {n_events} events")


def test_criterion_8_metric_properties():
    rng = np.random.default_rng(46)
    # symmetry + triangle inequality on 1000 random triples
    tri_violation = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        p, q, r = (ChamberPoint(np.sort(rng.standard_normal(n))[::-1])
                   for _ in range(3))
        assert distance(p, q) == distance(q, p)
        tri_violation = max(tri_violation,
                            distance(p, r) - distance(p, q) - distance(q, r))
    # lower bound against 10^4 sampled group elements per pair
    bound_violation = -np.inf
    for kind, n in (("real_symmetric", 3), ("hermitian", 3), ("real_symmetric", 4)):
        model = MatrixModel(kind, n)
        A = model.random_matrix(rng)
        B = model.random_matrix(rng)
        d = distance(chamber_map(A), chamber_map(B))
        if model.is_complex:
            Z = rng.standard_normal((10000, n, n)) + 1j * rng.standard_normal(
                (10000, n, n))
        else:
            Z = rng.standard_normal((10000, n, n))
        Q, R = np.linalg.qr(Z)
        diag = np.einsum("nii->ni", R)
        Q = Q * (diag / np.abs(diag)).conj()[:, None, :]
        conj = np.einsum("nij,jk,nlk->nil", Q, B, Q.conj())
        norms = np.linalg.norm(A[None] - conj, axis=(1, 2))
        bound_violation = max(bound_violation, float(d - norms.min()))
    # stratum refinement along 1000 random minimal segments
    refinement_ok = True
    for trial in range(1000):
        n = int(rng.integers(2, 7))
        vals_p = np.sort(rng.standard_normal(n))[::-1]
        vals_q = np.sort(rng.standard_normal(n))[::-1]
        if trial % 3 == 0 and n >= 2:  # force degenerate endpoints regularly
            k = int(rng.integers(0, n - 1))
            vals_p[k + 1] = vals_p[k]
        seg = minimal_segment(ChamberPoint(vals_p), ChamberPoint(vals_q))
        refinement_ok &= segment_stratum_check(seg, samples=16)
    ok = tri_violation <= 1e-12 and bound_violation <= 1e-12 and refinement_ok
    _verdict(8, "metric properties", ok,
             f"triangle slack {tri_violation:.3e}, orbit lower-bound slack "
             f"{bound_violation:.3e}, segment refinement "
             f"{'holds' if refinement_ok else 'violated'} on 1000 segments")


def test_criterion_9_variational_flow():
    from orbitflow.dynamics import pack_state, unpack_state

    eps = 1e-6
    worst_fd = 0.0
    rng = np.random.default_rng(47)
    for case in range(20):
        kind = KINDS[case % 2]
        s, _, _, model = random_reduced_state(kind, 3, seed=70000 + case)
        da0 = rng.standard_normal(3) * 0.1
        dp0 = rng.standard_normal(3) * 0.1
        dY0 = np.zeros((3, 3), dtype=model.dtype)
        for i in range(1, 3):
            for j in range(i):
                dY0[i, j] = (0.1 * rng.standard_normal()
                             + (0.1j * rng.standard_normal()
                                if model.is_complex else 0.0))
                dY0[j, i] = -np.conj(dY0[i, j])
        vt = variational_flow(s, ReducedDerivative(da=da0, dp=dp0, dY=dY0),
                              1.0, samples=10)
        y0 = pack_state(s.a, s.p, s.Y, model)
        dy = pack_state(da0, dp0, dY0, model)

        def run(y):
            a, p, Y = unpack_state(y, 3, model)
            return integrate(ReducedState(a=a, p=p, Y=Y, model=model),
                             1.0, samples=10)

        plus, minus = run(y0 + eps * dy), run(y0 - eps * dy)
        for k in range(len(vt.times)):
            fd_a = (plus.states[k].a - minus.states[k].a) / (2 * eps)
            fd_p = (plus.states[k].p - minus.states[k].p) / (2 * eps)
            worst_fd = max(worst_fd,
                           float(np.max(np.abs(vt.delta_a[k] - fd_a))),
                           float(np.max(np.abs(vt.delta_p[k] - fd_p))))
    # free case: the perturbation grows affinely, exactly
    s_free = ReducedState(a=np.array([2.0, 1.0, 0.0]), p=np.zeros(3),
                          Y=np.zeros((3, 3)),
                          model=MatrixModel.real_symmetric(3))
    da0 = np.array([0.05, 0.0, -0.05])
    dp0 = np.array([0.1, -0.2, 0.1])
    vt = variational_flow(s_free,
                          ReducedDerivative(da=da0, dp=dp0, dY=np.zeros((3, 3))),
                          2.0)
    worst_free = 0.0
    for k, t in enumerate(vt.times):
        worst_free = max(worst_free,
                         float(np.max(np.abs(vt.delta_a[k] - (da0 + t * dp0)))))
    ok = worst_fd < 10 * eps and worst_free < 1e-13
    _verdict(9, "variational flow", ok,
             f"finite-difference match {worst_fd:.3e} (<{10 * eps:g}) on 20 "
             f"cases, free-case exactness {worst_free:.3e}")
