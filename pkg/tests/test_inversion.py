"""Product matrix, identity, Jacobians, uniqueness test and Newton solver."""

import numpy as np
import pytest

from netinv.graph import MatrixEdgeField, build_graph, vec
from netinv.inversion import (
    InadmissibleParameterError,
    fd_jacobian,
    identity_residual,
    jacobian,
    line_rank_scan,
    make_spec_conductivity,
    make_spec_schrodinger,
    newton_invert,
    product_matrix,
    uniqueness_test,
)

rng = np.random.default_rng(37)


def path3():
    return build_graph(3, [0, 2], [(0, 1), (1, 2)])


def eight_node_graph():
    """Fixed 8-node graph with 4 boundary nodes used across these tests."""
    edges = [(0, 4), (1, 5), (2, 6), (3, 7), (4, 5), (5, 6), (6, 7), (4, 7),
             (0, 5), (4, 6)]
    return build_graph(8, [0, 1, 2, 3], edges)


def random_spd_vec(num_blocks, d, seed, imag=0.3):
    local = np.random.default_rng(seed)
    out = []
    for _ in range(num_blocks):
        a = local.standard_normal((d, d))
        b = local.standard_normal((d, d))
        block = a @ a.T + 2 * np.eye(d) + imag * 1j * (b + b.T)
        out.append(vec(block))
    return np.concatenate(out)


def test_product_matrix_shape_and_layout():
    g = path3()
    spec = make_spec_conductivity(g, 1)
    p = np.array([1.0, 1.0], dtype=complex)
    pm = product_matrix(spec, p, p)
    assert pm.W.shape == (2, 4)
    # column i + j*n pairs boundary basis vectors e_i, e_j
    S = spec.states(p)
    for i in range(2):
        for j in range(2):
            assert np.allclose(pm.W[:, i + 2 * j], spec.bilinear(S[:, i], S[:, j]))


def test_identity_exact_on_conductivity():
    g = eight_node_graph()
    spec = make_spec_conductivity(g, 2)
    for trial in range(5):
        p1 = random_spd_vec(g.num_edges, 2, 1000 + trial)
        p2 = random_spd_vec(g.num_edges, 2, 2000 + trial)
        assert identity_residual(spec, p1, p2) < 1e-12


def test_identity_exact_on_schrodinger():
    g = eight_node_graph()
    sigma = MatrixEdgeField.from_blocks(
        random_spd_vec(g.num_edges, 2, 5).reshape(g.num_edges, 2, 2).transpose(0, 2, 1))
    spec = make_spec_schrodinger(g, sigma)
    for trial in range(5):
        local = np.random.default_rng(3000 + trial)
        qs = []
        for _ in range(8):
            m = 0.2 * local.standard_normal((2, 2))
            qs.append(vec(m + m.T))
        p1 = np.concatenate(qs).astype(complex)
        p2 = 0.5 * p1
        assert identity_residual(spec, p1, p2) < 1e-12


def test_jacobian_matches_fd_conductivity():
    g = path3()
    spec = make_spec_conductivity(g, 2)
    p = random_spd_vec(2, 2, 9)
    J = jacobian(spec, p)
    Jfd = fd_jacobian(spec, p)
    assert np.abs(J - Jfd).max() / np.abs(J).max() < 1e-8


def test_jacobian_matches_fd_imaginary_direction():
    # the forward map is holomorphic, so differencing along the imaginary
    # axis gives the same derivative
    g = path3()
    spec = make_spec_conductivity(g, 2)
    p = random_spd_vec(2, 2, 9)
    J = jacobian(spec, p)
    Jfd = fd_jacobian(spec, p, direction=1j)
    assert np.abs(J - Jfd).max() / np.abs(J).max() < 1e-8


def test_fd_jacobian_second_order():
    g = path3()
    spec = make_spec_conductivity(g, 1)
    p = np.array([1.3, 0.7], dtype=complex)
    J = jacobian(spec, p)
    e1 = np.abs(J - fd_jacobian(spec, p, h=1e-3)).max()
    e2 = np.abs(J - fd_jacobian(spec, p, h=5e-4)).max()
    assert e2 < e1 / 3.0  # close to the factor-4 second-order drop


def test_uniqueness_single_edge():
    g = build_graph(2, [0, 1], [(0, 1)])
    spec = make_spec_conductivity(g, 1)
    v = uniqueness_test(spec, np.array([2.0 + 0j]))
    assert v.holds
    assert abs(v.sigma_max - 2.0) < 1e-12
    assert abs(v.sigma_min - 2.0) < 1e-12


def test_uniqueness_overparameterized():
    # one boundary node: n^2 = 1 < m, so the test must be inconclusive
    g = build_graph(3, [0], [(0, 1), (1, 2)])
    spec = make_spec_conductivity(g, 1)
    v = uniqueness_test(spec, np.array([1.0, 1.0], dtype=complex))
    assert not v.holds
    assert v.sigma_min == 0.0


def test_uniqueness_epsilon_monotonicity():
    g = build_graph(2, [0, 1], [(0, 1)])
    spec = make_spec_conductivity(g, 1)
    p = np.array([2.0 + 0j])
    assert uniqueness_test(spec, p, epsilon=1e-8).holds
    assert not uniqueness_test(spec, p, epsilon=0.999 + 1e-3).holds


def test_scalar_to_matrix_transfer():
    # where the scalar test holds, sigma = s I in d=2 also holds; the path
    # with all vertices on the boundary has an injective linearization
    g = build_graph(3, [0, 1, 2], [(0, 1), (1, 2)])
    spec1 = make_spec_conductivity(g, 1)
    s = np.array([1.3, 0.7], dtype=complex)
    assert uniqueness_test(spec1, s).holds
    spec2 = make_spec_conductivity(g, 2)
    blocks = np.stack([s[0] * np.eye(2), s[1] * np.eye(2)])
    p2 = np.concatenate([vec(b) for b in blocks])
    assert uniqueness_test(spec2, p2).holds


def test_newton_p3_conductivity_data_consistent():
    # with interior node the two conductances are only determined up to the
    # series conductance; Newton still reaches a data-consistent parameter
    g = path3()
    spec = make_spec_conductivity(g, 1)
    p_true = np.array([1.3, 0.7], dtype=complex)
    target = spec.forward(p_true)
    p_rec, trace = newton_invert(spec, target, np.array([1.0, 1.0], dtype=complex))
    assert trace.reason in ("residual", "step")
    assert len(trace.residuals) - 1 <= 20
    assert np.abs(spec.forward(p_rec) - target).max() < 1e-8
    series = p_true[0] * p_true[1] / (p_true[0] + p_true[1])
    series_rec = p_rec[0] * p_rec[1] / (p_rec[0] + p_rec[1])
    assert abs(series_rec - series) < 1e-8


def test_newton_p3_all_boundary_recovers_parameters():
    g = build_graph(3, [0, 1, 2], [(0, 1), (1, 2)])
    spec = make_spec_conductivity(g, 1)
    p_true = np.array([1.3, 0.7], dtype=complex)
    target = spec.forward(p_true)
    p_rec, trace = newton_invert(spec, target, np.array([1.0, 1.0], dtype=complex))
    assert len(trace.residuals) - 1 <= 20
    assert np.abs(p_rec - p_true).max() < 1e-8


def test_newton_single_edge_linear():
    # fully boundary graph: the forward map is linear, one step suffices
    g = build_graph(2, [0, 1], [(0, 1)])
    spec = make_spec_conductivity(g, 1)
    p_true = np.array([2.5 + 0.4j])
    target = spec.forward(p_true)
    p_rec, trace = newton_invert(spec, target, np.array([1.0 + 0j]))
    assert np.abs(p_rec - p_true).max() < 1e-10
    assert len(trace.residuals) <= 4


def test_newton_residual_monotone():
    g = path3()
    spec = make_spec_conductivity(g, 2)
    p_true = random_spd_vec(2, 2, 13)
    target = spec.forward(p_true)
    p0 = np.concatenate([vec(np.eye(2)), vec(np.eye(2))]).astype(complex)
    _, trace = newton_invert(spec, target, p0)
    res = trace.residuals
    assert all(res[k + 1] <= res[k] for k in range(len(res) - 1))
    assert trace.reason in ("residual", "step")


def test_newton_rejects_inadmissible_start():
    g = path3()
    spec = make_spec_conductivity(g, 1)
    target = spec.forward(np.array([1.0, 1.0], dtype=complex))
    with pytest.raises(InadmissibleParameterError):
        newton_invert(spec, target, np.array([-1.0, 1.0], dtype=complex))


def test_newton_noisy_target_reports_terminal_residual():
    g = path3()
    spec = make_spec_conductivity(g, 1)
    target = spec.forward(np.array([1.3, 0.7], dtype=complex))
    noisy = target + 1e-3 * rng.standard_normal(target.shape)
    p_rec, trace = newton_invert(spec, noisy, np.array([1.0, 1.0], dtype=complex))
    assert trace.reason in ("step", "step_collapse", "max_iter", "residual")
    assert trace.residuals[-1] > 0


def test_line_rank_scan_p3():
    g = build_graph(3, [0, 1, 2], [(0, 1), (1, 2)])
    spec = make_spec_conductivity(g, 1)
    p = np.array([1.0, 1.0], dtype=complex)
    dp = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    scan = line_rank_scan(spec, p, dp, num_samples=100, rng=np.random.default_rng(0))
    assert len(scan.samples) == 100
    assert scan.near_singular_fraction <= 0.01


def test_forward_maps_produce_symmetric_data():
    g = eight_node_graph()
    spec = make_spec_conductivity(g, 2)
    lam = spec.forward(random_spd_vec(g.num_edges, 2, 71))
    assert np.abs(lam - lam.T).max() < 1e-12


def test_require_admissible_shape_check():
    g = path3()
    spec = make_spec_conductivity(g, 1)
    with pytest.raises(InadmissibleParameterError):
        spec.require_admissible(np.ones(5))
