"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from errbound.analyzer import ProblemInstance, analyze, boundary_samples, excess_vs_pointwise_equivalence, local_cones, theoretical_modulus
from errbound.functions import AffineMap, MaxAffineFunction, PolynomialMap, composite, composite_dirderiv, hadamard_lower_dirderiv
from errbound.geometry import excess, excess_certificate, project_points, tangent_cone
from errbound.io import machine_sections
from errbound.regularity import empirical_metric_regularity, linear_regularity, tangent_chain_rule
from instances import (
    cone_distances,
    corner_instance,
    cube_root_instance,
    flat_cubic_instance,
    random_builtin_map,
    random_cone,
    random_max_affine,
    random_polyhedron,
    random_surjective_instance,
)


@pytest.fixture
def verdict(capsys):
    def _report(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return _report


def test_cube_root_example(verdict):
    p = cube_root_instance(samples_per_radius=200)
    start = time.perf_counter()
    rep = analyze(p)
    elapsed = time.perf_counter() - start
    emp = {t.radius: t.sup for t in rep.empirical.trace}[1e-2]
    ok = abs(rep.tau_theoretical - 1 / 3) <= 1e-9 and 0.95 / 3 <= emp <= 1.05 / 3 and elapsed < 5
    verdict(
        "cube-root example",
        ok,
        f"tau_theoretical={rep.tau_theoretical:.12g} tau_empirical(r=1e-2)={emp:.6g} runtime={elapsed:.2f}s",
    )


def test_flat_cubic_example(verdict):
    p = flat_cubic_instance()
    start = time.perf_counter()
    rep = analyze(p)
    elapsed = time.perf_counter() - start
    surjective = linear_regularity(p.g.jacobian(p.x_bar)).surjective
    sups = [t.sup for t in rep.empirical.trace]
    growth = [b / a for a, b in zip(sups, sups[1:])]
    ok = (
        not surjective
        and p.radii == (1e-1, 1e-2, 1e-3)
        and all(r >= 50 for r in growth)
        and rep.diagnosis == "hypotheses-violated"
        and rep.empirical.diverged
        and elapsed < 5
    )
    verdict(
        "flat-cubic example",
        ok,
        f"surjective={surjective} growth/decade={[f'{r:.1f}' for r in growth]} "
        f"diagnosis={rep.diagnosis} divergence={rep.empirical.diverged} runtime={elapsed:.2f}s",
    )


def test_excess_certificate_suite(verdict):
    rng = np.random.default_rng(2024)
    passed = total = 0
    while total < 100:
        n = int(rng.integers(2, 4))
        C = random_polyhedron(rng, n, int(rng.integers(2, 6)), bounded=rng.random() < 0.5)
        D = random_cone(rng, n, int(rng.integers(1, n + 2)))
        e = excess(C, D)
        if not np.isfinite(e):
            continue
        total += 1
        ok = excess_certificate(C, D, e + 1e-6, seed=total)
        if e > 1e-3:
            ok = ok and not excess_certificate(C, D, 0.9 * e, seed=total)
        passed += ok
    verdict("excess certificate suite", passed == total, f"{passed}/{total} pairs")


def test_composite_chain_rule_suite(verdict):
    rng = np.random.default_rng(99)
    passed, worst = 0, 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, n + 1))
        g = random_builtin_map(rng, n, m)
        f = random_max_affine(rng, m, int(rng.integers(1, 5)))
        x, h = rng.normal(size=n), rng.normal(size=n)
        val = composite_dirderiv(f, g, x, h)
        est = hadamard_lower_dirderiv(composite(f, g), x, h, rng=rng)
        err = abs(val - est) / (1 + abs(val))
        worst = max(worst, err)
        passed += err <= 1e-4
    verdict("composite chain-rule suite", passed == 200, f"{passed}/200 tuples, worst relative error {worst:.2e}")


def _curve_point(g, x, target, h0, t):
    """Newton (least-norm steps) solution of ``g(z) = target`` started at ``x + t h0``."""
    z = x + t * h0
    for _ in range(50):
        r = g.value(z) - target
        if np.linalg.norm(r) <= 1e-15:
            break
        z = z - np.linalg.pinv(g.jacobian(z)) @ r
    return z


def test_preimage_tangent_cone_suite(verdict):
    rng = np.random.default_rng(7)
    worst_curve = worst_image = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, n + 1))
        p = random_surjective_instance(rng, n, m)
        f, g, x = p.f, p.g, p.x_bar
        y, J = g.value(x), g.jacobian(x)
        T = tangent_cone(f.solution_set(), y, tol=1e-9)
        D = tangent_chain_rule(g, x, T)
        # curves in the preimage: g(x(t)) = y + t v with v a feasible direction of S_f
        for u in rng.normal(size=(5, m)):
            v = project_points(u[None, :], T)[0] if T.n_rows else u
            h0 = np.linalg.pinv(J) @ v + (np.eye(n) - np.linalg.pinv(J) @ J) @ rng.normal(size=n)
            t = 1e-4
            pts = [_curve_point(g, x, y + s * v, h0, s) for s in (t, t / 2)]
            assert all(p.phi(z) <= 1e-10 for z in pts)
            h = 2 * (pts[1] - x) / (t / 2) - (pts[0] - x) / t
            worst_curve = max(worst_curve, float(np.max(D.normals @ h, initial=0.0)) / max(1.0, np.linalg.norm(h)))
        # members of the preimage cone map into the tangent cone of S_f
        slopes = f.slopes / np.linalg.norm(f.slopes, axis=1, keepdims=True)
        active = np.abs(f.slopes @ y + f.intercepts) <= 1e-9
        for u in rng.normal(size=(5, n)):
            h = project_points(u[None, :], D)[0] if D.n_rows else u
            w = J @ h
            viol = float(np.max(slopes[active] @ w, initial=0.0)) / max(1.0, np.linalg.norm(w))
            worst_image = max(worst_image, viol)
    ok = worst_curve <= 1e-6 and worst_image <= 1e-6
    verdict(
        "preimage tangent-cone suite",
        ok,
        f"50 instances, worst curve-direction violation {worst_curve:.2e}, worst image violation {worst_image:.2e}",
    )


def test_pointwise_excess_equivalence_suite(verdict):
    rng = np.random.default_rng(31)
    checked = agreed = 0
    while checked < 50:
        n = int(rng.integers(2, 4))
        p = random_surjective_instance(rng, n, int(rng.integers(1, n + 1)), samples_per_radius=40)
        for s in boundary_samples(p, 0.1, count=20)[:5]:
            C, D = local_cones(p, s.point)
            e = excess(C, D)
            if not np.isfinite(e) or checked >= 50:
                continue
            checked += 1
            ok = True
            for factor in (0.5, 1.0, 2.0):
                tau = factor * e
                pointwise = excess_vs_pointwise_equivalence(p, s, tau, directions=4000)
                ok = ok and pointwise == (e <= tau + 1e-6)
            agreed += ok
    verdict("pointwise vs excess equivalence", agreed == checked, f"{agreed}/{checked} boundary samples")


def _conic_system(rng, n):
    k = int(rng.integers(2, n + 2))
    S = rng.normal(size=(k, n))
    x_bar = rng.uniform(-1, 1, size=n)
    f = MaxAffineFunction(S, -S @ x_bar)
    return ProblemInstance(f, AffineMap.identity(n), x_bar, radii=(1e-1, 1e-2), samples_per_radius=100)


def _grid_sup(p, step=1e-3, half=0.5, chunk=500_000):
    """Brute-force sup of d(x, S) / f(x)_+ over a grid around x_bar.

    n = 2 uses the full grid. For n = 3 the ratio is invariant under scaling
    about x_bar, so the cube surface grid represents every grid direction.
    """
    n = p.n
    ticks = np.arange(-half, half + step / 2, step)
    if n == 2:
        blocks = [np.stack(np.meshgrid(ticks, ticks), -1).reshape(-1, 2)]
    else:
        face = np.stack(np.meshgrid(ticks, ticks), -1).reshape(-1, 2)
        blocks = []
        for axis, sign in itertools.product(range(3), (-half, half)):
            pts = np.insert(face, axis, sign, axis=1)
            blocks.append(pts)
    best = 0.0
    S = p.f.slopes
    for block in blocks:
        for i in range(0, len(block), chunk):
            H = block[i : i + chunk]
            viol = np.max(H @ S.T, axis=1)
            H, viol = H[viol > 1e-12], viol[viol > 1e-12]
            if len(H):
                best = max(best, float(np.max(cone_distances(H, S) / viol)))
    return best


def test_hoffman_consistency(verdict):
    rng = np.random.default_rng(5)
    rows = []
    for n in (2,) * 10 + (3,) * 10:
        p = _conic_system(rng, n)
        tau = theoretical_modulus(p).value
        grid = _grid_sup(p)
        rows.append(abs(tau - grid) / grid)
    ok = max(rows) <= 0.05
    verdict("Hoffman consistency", ok, f"20 systems, worst relative gap {max(rows):.2e}")


def test_metric_regularity_cubic(verdict):
    radius = 0.1
    rep = empirical_metric_regularity(PolynomialMap.power(3), [1.0], radius)
    closed_form = 1.0 / (3 * (1 - radius) ** 2)  # sup of 1/(3x^2) on [0.9, 1.1]
    gap = abs(rep.kappa_empirical - closed_form) / closed_form
    ok = rep.kappa_linear == 1 / 3 and gap <= 0.15
    verdict(
        "metric regularity of x^3 at 1",
        ok,
        f"kappa_linear={rep.kappa_linear!r} kappa_empirical={rep.kappa_empirical:.6g} "
        f"closed-form sup={closed_form:.6g} gap={gap:.1%}",
    )


def test_determinism(verdict):
    rng = np.random.default_rng(0)
    problems = [cube_root_instance(seed=17), corner_instance(seed=17), random_surjective_instance(rng, 2, 2, seed=17)]
    same = 0
    for p in problems:
        a = machine_sections(analyze(p), p.n)
        b = machine_sections(analyze(p), p.n)
        same += a.encode() == b.encode()
    verdict("determinism", same == len(problems), f"{same}/{len(problems)} instances byte-identical")
