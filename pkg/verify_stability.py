"""Verification script for inf-sup constants and the stability witnesses"""

from src.elements.bubbles import BubbleCache
from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import refine
from src.spaces.catalog import build_pair
from src.stability.lab import bootstrap_check, equivalence_check, infsup_constant, refinement_sweep


def test_certified_pairs():
    print("Testing inf-sup constants of certified pairs...")

    for name, k in [("cor5.2", 1), ("Pk-Pk-1r", 2), ("cor6.4", 1), ("thm6.6", 1), ("cor6.8", 1)]:
        betas = []
        for level in (1, 2):
            refined = refine(builtin_mesh("square2", level))
            betas.append(infsup_constant(build_pair(name, refined, k), level).beta_h)
        assert min(betas) >= 1e-6, name
        print(f"✓ {name}: beta_h = {', '.join(f'{b:.4f}' for b in betas)}, ratio {refinement_sweep(betas):.3f}")


def test_bootstrap_and_equivalence():
    print("\nTesting bootstrap and equivalence...")
    refined = refine(builtin_mesh("square2", 1))
    cache = BubbleCache(refined)

    report = bootstrap_check(build_pair("cor6.4", refined, 1, cache).velocity, 1, cache)
    assert report.consistent
    print(f"✓ Bootstrap: macro {report.beta_macro:.4f}, refined {report.beta_refined:.4f}")

    for k in (1, 2):
        report = equivalence_check(refined, k, cache)
        assert report.consistent, f"k={k}"
        print(f"✓ Equivalence k={k}: refined {report.beta_refined:.2e}, macro {report.beta_macro:.2e}")


def main():
    """Run all verification tests"""
    print("=" * 60)
    print("Inf-Sup Stability Verification")
    print("=" * 60)

    try:
        test_certified_pairs()
        test_bootstrap_and_equivalence()

        print("\n" + "=" * 60)
        print("✓ All stability checks passed!")
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
