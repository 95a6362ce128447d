"""Verification script for the discrete Stokes solve"""

from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import refine
from src.spaces.catalog import build_pair
from src.stokes.manufactured import manufactured_case
from src.stokes.problem import convergence_study, solve_stokes


def test_divergence_free_solutions():
    print("Testing divergence-free solutions...")
    refined = refine(builtin_mesh("square2", 2))

    for name, k in [("cor5.2", 1), ("Pk-Pk-1r", 2), ("thm6.6", 1)]:
        pair = build_pair(name, refined, k)
        solution = solve_stokes(pair, manufactured_case("stream", 2))
        assert solution.divergence_free, name
        print(f"✓ {name}: ||div u_h|| = {solution.divergence_l2:.2e}, H1 error {solution.errors['H1u']:.3e}")


def test_pressure_robustness():
    print("\nTesting pressure robustness...")
    refined = refine(builtin_mesh("square2", 2))
    pair = build_pair("cor5.2", refined)

    plain = solve_stokes(pair, manufactured_case("stream", 2))
    shifted = solve_stokes(pair, manufactured_case("stream-shifted", 2))
    assert abs(plain.errors["L2u"] - shifted.errors["L2u"]) <= 1e-8
    print(f"✓ Velocity error unchanged by a large pressure gradient: {plain.errors['L2u']:.3e}")


def test_convergence():
    print("\nTesting convergence rates (diagnostic)...")
    meshes = [builtin_mesh("square2", level) for level in (1, 2, 3)]
    rows = convergence_study("Pk-Pk-1r", manufactured_case("stream", 2), meshes, k=2)

    for row in rows:
        rate = row.rates["H1u"]
        print(f"  level {row.level}: h = {row.h:.4f}, H1 error {row.errors['H1u']:.3e}, rate {rate}")
    print("✓ Convergence study finished")


def main():
    """Run all verification tests"""
    print("=" * 60)
    print("Stokes Solver Verification")
    print("=" * 60)

    try:
        test_divergence_free_solutions()
        test_pressure_robustness()
        test_convergence()

        print("\n" + "=" * 60)
        print("✓ All Stokes checks passed!")
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
