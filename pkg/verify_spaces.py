"""Verification script for local elements, global spaces and the pair catalog"""

from src.elements.bubbles import BubbleCache
from src.mesh.builtin import builtin_mesh, reference_simplex
from src.mesh.simplex_mesh import refine
from src.poly.split import lambda_system
from src.spaces.assembly import assemble, divergence_image_check
from src.spaces.catalog import PAIRS, build_pair
from src.spaces.local_elements import check_unisolvence, div_conforming_p2_report, vr_local_dimension
from src.spaces.spaces import SpaceKind, build_space, expected_dimension


def test_local_elements():
    print("Testing local elements...")
    ls = lambda_system(refine(reference_simplex(3)), 0, exact=False)

    for kind in ("MF", "VR"):
        report = check_unisolvence(kind, ls)
        assert report.min_singular >= 1e-10, kind
        print(f"✓ {kind}: {report.size} DOFs, min singular value {report.min_singular:.2e}")
    assert check_unisolvence("VR", ls).size == vr_local_dimension(3) == 38

    p2 = div_conforming_p2_report(ls)
    assert p2.dimension == p2.expected == 34
    print(f"✓ P2 with continuous divergence: dimension {p2.dimension}")


def test_global_dimensions():
    print("\nTesting global dimensions on square2 level 1...")
    refined = refine(builtin_mesh("square2", 1))
    cache = BubbleCache(refined)

    for kind, k in [(SpaceKind.MF, 1), (SpaceKind.VR, 1), (SpaceKind.VDIV, 1), (SpaceKind.W_R, 1)]:
        space = build_space(refined, kind, k, cache)
        assert space.n_dofs == expected_dimension(refined, kind, k), kind
        print(f"✓ {kind.value}: {space.n_dofs} DOFs")


def test_divergence_inclusion():
    print("\nTesting div V_h in Q_h...")
    refined = refine(builtin_mesh("square2", 1))
    cache = BubbleCache(refined)

    for name, spec in PAIRS.items():
        if not spec.divergence_free or name == "cor6.4":
            continue
        pair = build_pair(name, refined, 2 if name == "Pk-Pk-1r" else 1, cache)
        residual = divergence_image_check(assemble(pair.velocity, pair.pressure))
        assert residual <= 1e-10, name
        print(f"✓ {name}: residual {residual:.2e}")


def main():
    """Run all verification tests"""
    print("=" * 60)
    print("Finite Element Spaces Verification")
    print("=" * 60)

    try:
        test_local_elements()
        test_global_dimensions()
        test_divergence_inclusion()

        print("\n" + "=" * 60)
        print("✓ All space checks passed!")
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
