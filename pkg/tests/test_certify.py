import numpy as np
import pytest

from gopp.certify import (
    CertTolerances,
    build_certificate,
    check_global_optimality,
)
from gopp.model import SignalSpec, generate, sigma_from_eta
from gopp.solver import solve, spectral_init
from tests.conftest import haar_orthogonal, random_orthogonal_stack


def converged_run(n, m, d, eta, seed, kappa=1.0, planted="identity"):
    inst = generate(
        SignalSpec(n=n, m=m, d=d, kappa=kappa, seed=seed, planted=planted),
        sigma_from_eta(eta, n, m, d),
    )
    s0 = spectral_init(inst.D, n, d)
    report = solve(inst.C, n, d, s0)
    return inst, report


# ---------------------------------------------------------------------------
# build_certificate
# ---------------------------------------------------------------------------


def test_multiplier_blocks_noiseless():
    # sigma = 0, S = ground truth: every block equals n * O_i A A.T O_i.T
    inst, report = converged_run(3, 5, 2, 0.0, seed=4, kappa=2.0,
                                 planted="random-orthogonal")
    blocks = build_certificate(inst.C, inst.O)
    aat = inst.A @ inst.A.T
    for i, lam in enumerate(blocks):
        o_i = inst.O.block(i)
        assert np.allclose(lam, 3 * o_i @ aat @ o_i.T, atol=1e-9)


def test_multiplier_blocks_identity_gram(rng):
    s = random_orthogonal_stack(rng, 4, 2)
    blocks = build_certificate(np.eye(8), s)
    for lam in blocks:
        assert np.allclose(lam, np.eye(2), atol=1e-12)


def test_multiplier_fixed_point_identity():
    # at a converged point, Lambda_ii S_i reproduces [C S]_i blockwise
    inst, report = converged_run(8, 10, 2, 0.4, seed=13)
    assert report.converged
    s = report.S_final
    blocks = build_certificate(inst.C, s)
    lifted = inst.C @ s.data
    for i in range(s.n):
        y = lifted[2 * i : 2 * i + 2, :]
        assert np.linalg.norm(blocks[i] @ s.block(i) - y) <= 1e-8 * np.linalg.norm(y)


def test_multiplier_blocks_symmetric_psd(rng):
    inst, report = converged_run(5, 6, 2, 0.6, seed=3)
    blocks = build_certificate(inst.C, report.S_final)
    for lam in blocks:
        assert np.allclose(lam, lam.T, atol=1e-10)
        assert np.linalg.eigvalsh(lam).min() >= -1e-10


# ---------------------------------------------------------------------------
# check_global_optimality
# ---------------------------------------------------------------------------


def test_noiseless_certificate_structure():
    inst, report = converged_run(3, 4, 2, 0.0, seed=7)
    cert = check_global_optimality(inst.C, report.S_final)
    assert cert.verdict == "CertifiedUnique"
    # kernel of Lambda - C is the span of the d stacked columns
    lam = np.zeros_like(inst.C)
    for i, b in enumerate(cert.lambda_blocks):
        lam[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = b
    eigs = np.linalg.eigvalsh(lam - inst.C)
    assert np.all(np.abs(eigs[:2]) <= 1e-8 * cert.opnorm_c)
    assert eigs[2] > 0
    assert cert.gap_eig == pytest.approx(eigs[2], rel=1e-6)


def test_zero_noise_certified_unique_sweep():
    for seed in range(100):
        n = 2 + seed % 9
        d = 1 + seed % 3
        m = d + seed % 4
        inst, report = converged_run(
            n, m, d, 0.0, seed=seed, kappa=1.0 + (seed % 3), planted="random-orthogonal"
        )
        cert = check_global_optimality(inst.C, report.S_final)
        assert cert.verdict == "CertifiedUnique"


def test_huge_noise_mostly_uncertified():
    uncertified = 0
    for seed in range(20):
        inst, report = converged_run(6, 8, 2, 3.0, seed=seed)
        if not report.converged:
            uncertified += 1
            continue
        cert = check_global_optimality(inst.C, report.S_final)
        if cert.verdict == "Uncertified":
            uncertified += 1
    assert uncertified >= 15


def test_non_fixed_point_is_uncertified():
    # spectral initializer at moderate noise is not stationary
    n, m, d = 10, 12, 2
    inst = generate(
        SignalSpec(n=n, m=m, d=d, kappa=1.0, seed=5),
        sigma_from_eta(0.5, n, m, d),
    )
    s0 = spectral_init(inst.D, n, d)
    cert = check_global_optimality(inst.C, s0)
    assert cert.stationarity_residual > cert.tolerances.stationarity
    assert cert.verdict == "Uncertified"


def test_verdict_rotation_invariance(rng):
    for seed in range(100):
        n, m, d = 5, 6, 2
        eta = [0.2, 0.7, 1.5][seed % 3]
        inst, report = converged_run(n, m, d, eta, seed=seed)
        cert = check_global_optimality(inst.C, report.S_final)
        q = haar_orthogonal(rng, d)
        cert_rot = check_global_optimality(inst.C, report.S_final.rotate(q))
        assert cert.verdict == cert_rot.verdict
        for a, b in zip(cert.lambda_blocks, cert_rot.lambda_blocks):
            assert np.allclose(a, b, atol=1e-8)
        assert cert.min_eig == pytest.approx(cert_rot.min_eig, abs=1e-8 * cert.opnorm_c)
        assert cert.gap_eig == pytest.approx(cert_rot.gap_eig, abs=1e-8 * cert.opnorm_c)


def test_certified_unique_requires_all_three_conditions():
    inst, report = converged_run(6, 8, 2, 0.3, seed=2)
    base = check_global_optimality(inst.C, report.S_final)
    assert base.verdict == "CertifiedUnique"
    assert base.stationarity_residual > 0.0
    strict = CertTolerances(stationarity=base.stationarity_residual / 10, psd=1e-9, gap=1e-8)
    cert = check_global_optimality(inst.C, report.S_final, strict)
    assert cert.verdict == "Uncertified"
    no_gap = CertTolerances(stationarity=1e-8, psd=1e-9, gap=1e30)
    cert = check_global_optimality(inst.C, report.S_final, no_gap)
    assert cert.verdict == "Certified"
