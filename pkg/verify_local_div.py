"""Verification script for the local divergence right inverse and modified bubbles"""

from src.elements.bubbles import modified_bubble_checks, modify_bubble
from src.mesh.builtin import random_simplex, reference_simplex
from src.mesh.simplex_mesh import refine
from src.poly.split import boundary_trace, continuity_residual, l2_norm, lambda_system
from src.solvers.local_div import random_pressure, solve_local_div
from src.utils.rng import make_rng


def test_reference_simplices():
    """div v = p on the barycenter split of the reference simplex"""
    print("Testing local divergence on reference simplices...")
    rng = make_rng(0)

    for d in (2, 3):
        ls = lambda_system(refine(reference_simplex(d)), 0, exact=False)
        for k in (1, 2, 3):
            p = random_pressure(ls, k - 1, rng)
            report = solve_local_div(p, k, ls)
            assert report.residual_norm <= 1e-10 * max(1.0, l2_norm(p, ls)), f"d={d} k={k}"
            assert boundary_trace(report.v, ls, rng) <= 1e-11
            assert continuity_residual(report.v, ls) <= 1e-11
            print(f"✓ d={d} k={k}: residual {report.residual_norm:.2e}, ratio {report.stability_ratio:.2f}")


def test_random_cells():
    print("\nTesting random shape-regular tetrahedra...")
    rng = make_rng(1)

    for trial in range(3):
        ls = lambda_system(refine(random_simplex(rng, 3), warn=False), 0, exact=False)
        p = random_pressure(ls, 1, rng)
        report = solve_local_div(p, 2, ls)
        assert report.first_child_residual <= 1e-10
        print(f"✓ Trial {trial}: residual {report.residual_norm:.2e}")


def test_exact_arithmetic():
    print("\nTesting rational arithmetic...")
    ls = lambda_system(refine(reference_simplex(2)), 0, exact=True)
    p = random_pressure(ls, 1, make_rng(2))
    report = solve_local_div(p, 2, ls)

    assert report.residual_norm == 0.0
    print("✓ Residual is exactly zero")


def test_modified_bubbles():
    print("\nTesting modified face bubbles...")
    rng = make_rng(3)
    ls = lambda_system(refine(reference_simplex(3)), 0, exact=False)

    for face in range(4):
        bubble = modify_bubble(ls, face)
        checks = modified_bubble_checks(bubble, ls, rng)
        assert checks["div_deviation"] <= 1e-11 * max(1.0, abs(bubble.div_value))
        assert checks["trace"] <= 1e-11
        print(f"✓ Face {face}: div = {bubble.div_value:.6f}, flux = {checks['flux']:.6f}")


def main():
    """Run all verification tests"""
    print("=" * 60)
    print("Local Divergence Verification")
    print("=" * 60)

    try:
        test_reference_simplices()
        test_random_cells()
        test_exact_arithmetic()
        test_modified_bubbles()

        print("\n" + "=" * 60)
        print("✓ All local divergence checks passed!")
        print("=" * 60)

    except AssertionError as e:
        print(f"\n✗ Check failed: {e}")
        return 1
    except Exception as e:
        print(f"\n✗ Unexpected error: {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit(main())
