import math

import numpy as np
import pytest
import scipy.sparse as sp

from pdhl.discretization import (
    assemble_laplacian,
    assemble_rhs,
    box_mask,
    rasterize,
)
from pdhl.errors import NotConverged
from pdhl.geometry import ball, build_domain, uniform_plan
from pdhl.linsolve import (
    amg_preconditioner,
    auto_preconditioner,
    conjugate_gradient,
    smallest_eigenvalue,
)

UNIT_SQUARE = ((0.0, 1.0), (0.0, 1.0))


def chunky_mask(n=161, eta=0.4):
    dom = build_domain(UNIT_SQUARE, 0.25, eta, uniform_plan(ball(0.125)))
    return rasterize(dom, n)


def sine_field(mask):
    x = mask.node_coords(0)
    y = mask.node_coords(1)
    return np.sin(np.pi * x)[:, None] * np.sin(np.pi * y)[None, :]


class TestConjugateGradient:
    def test_identity_solved_immediately(self):
        A = sp.identity(50, format="csr")
        b = np.arange(50, dtype=float)
        x, rep = conjugate_gradient(A, b, tol=1e-14)
        assert rep.converged
        assert rep.iterations == 1
        assert np.linalg.norm(x - b) <= 1e-14 * np.linalg.norm(b)

    def test_zero_rhs_short_circuits(self):
        A = sp.identity(10, format="csr")
        x, rep = conjugate_gradient(A, np.zeros(10))
        assert rep.iterations == 0
        assert np.all(x == 0.0)

    def test_manufactured_poisson(self):
        mask = box_mask(65, dim=2)
        A = assemble_laplacian(mask)
        exact = mask.extract(sine_field(mask))
        b = A @ exact
        x, rep = conjugate_gradient(A, b, tol=1e-12)
        assert rep.converged
        assert np.max(np.abs(x - exact)) <= 1e-8

    def test_not_converged_carries_state(self):
        mask = box_mask(65, dim=2)
        A = assemble_laplacian(mask)
        b = np.ones(mask.ndof)
        with pytest.raises(NotConverged) as err:
            conjugate_gradient(A, b, tol=1e-12, maxiter=3)
        assert err.value.report.iterations == 3
        assert err.value.x.shape == (mask.ndof,)
        assert not err.value.report.converged
        assert err.value.report.final_residual > 0.0

    def test_energy_error_monotone(self):
        rng = np.random.default_rng(6)
        Q = np.linalg.qr(rng.standard_normal((40, 40)))[0]
        lam = np.linspace(1.0, 300.0, 40)
        A = Q @ np.diag(lam) @ Q.T
        A = sp.csr_matrix(A)
        exact = rng.standard_normal(40)
        b = A @ exact
        errors = []

        def track(xk):
            e = xk - exact
            errors.append(float(e @ (A @ e)))

        conjugate_gradient(A, b, tol=1e-12, callback=track)
        diffs = np.diff(errors)
        assert np.all(diffs <= 1e-9 * errors[0])

    def test_preconditioned_matches_plain(self):
        mask = chunky_mask()
        A = assemble_laplacian(mask)
        rng = np.random.default_rng(7)
        b = assemble_rhs(mask, F=rng.standard_normal(mask.shape))
        x_jac, rep_jac = conjugate_gradient(A, b, tol=1e-11)
        M = amg_preconditioner(A)
        x_amg, rep_amg = conjugate_gradient(A, b, tol=1e-11, M=M)
        assert np.max(np.abs(x_jac - x_amg)) <= 1e-7 * np.max(np.abs(x_jac))
        assert rep_amg.iterations < rep_jac.iterations / 4

    def test_warm_start(self):
        mask = box_mask(33, dim=2)
        A = assemble_laplacian(mask)
        exact = mask.extract(sine_field(mask))
        b = A @ exact
        x, rep = conjugate_gradient(A, b, tol=1e-10, x0=exact)
        assert rep.iterations <= 1

    def test_auto_preconditioner_threshold(self):
        small = sp.identity(10, format="csr")
        assert auto_preconditioner(small) is None
        mask = chunky_mask()
        A = assemble_laplacian(mask)
        assert auto_preconditioner(A, threshold=1000) is not None


class TestRefinementConsistency:
    def test_shared_node_agreement_improves_quadratically(self):
        # same Poisson problem on n and 2n-1: values at shared nodes agree
        # to O(h^2), so the disagreement drops ~4x per refinement
        diffs = []
        sols = {}
        for n in (33, 65, 129):
            mask = box_mask(n, dim=2)
            A = assemble_laplacian(mask)
            b = assemble_rhs(mask, F=np.ones(mask.shape))
            x, _ = conjugate_gradient(A, b, tol=1e-12)
            sols[n] = mask.embed(x)
        for n in (33, 65):
            fine = sols[2 * n - 1][::2, ::2]
            diffs.append(np.max(np.abs(fine - sols[n])))
        assert diffs[1] <= diffs[0] / 3.0


class TestSmallestEigenvalue:
    def test_two_by_two_diagonal(self):
        A = sp.csr_matrix(np.diag([3.0, 5.0]))
        assert smallest_eigenvalue(A, tol=1e-12) == pytest.approx(3.0)

    def test_hole_free_square_matches_dirichlet_laplacian(self):
        mask = box_mask(257, dim=2)
        A = assemble_laplacian(mask)
        M = amg_preconditioner(A)
        lam = smallest_eigenvalue(A, tol=1e-10, M=M)
        # discrete value for the unit square at this resolution
        h = mask.h
        lam_h = 2.0 * (4.0 / h**2) * math.sin(math.pi * h / 2.0) ** 2
        assert lam == pytest.approx(lam_h, rel=1e-8)
        assert lam == pytest.approx(2.0 * math.pi**2, rel=0.01)

    def test_eigenvector_accompanies_value(self):
        A = sp.csr_matrix(np.diag([2.0, 9.0, 11.0]))
        lam, v = smallest_eigenvalue(A, tol=1e-12, return_vector=True)
        assert lam == pytest.approx(2.0)
        assert abs(abs(v[0]) - 1.0) <= 1e-6

    def test_smaller_holes_relax_the_eigenvalue(self):
        lam = {}
        for eta in (0.4, 0.2):
            mask = chunky_mask(n=321, eta=eta)
            A = assemble_laplacian(mask)
            M = amg_preconditioner(A)
            lam[eta] = smallest_eigenvalue(A, tol=1e-8, M=M)
        assert lam[0.2] < lam[0.4]
