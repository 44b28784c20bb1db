"""Builds the extension module and exercises the Python bindings."""

import cmath
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    subprocess.run(["cargo", "build", "--release", "-p", "speiser-py"], cwd=ROOT, check=True)
    tmp = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(ROOT / "target" / "release" / "libspeiser_py.so", tmp / "speiser_py.so")
    sys.path.insert(0, str(tmp))
    import speiser_py

    return speiser_py


def main():
    sp = load()

    # square lattice: g3 = 0, g2 = Gamma(1/4)^8 / (16 pi^2)
    lat = sp.Lattice()
    assert abs(lat.g2 - math.gamma(0.25) ** 8 / (16 * math.pi**2)) < 1e-9
    assert abs(lat.g3) < 1e-9
    wp = sp.Weierstrass(lat)
    z = 0.3 + 0.2j
    assert abs(wp.wp(z) - wp.wp(z + 1 + 2j)) < 1e-9
    assert abs(wp.wp_prime(z) ** 2 - (4 * wp.wp(z) ** 3 - lat.g2 * wp.wp(z) - lat.g3)) < 1e-6
    assert wp.wp(0j) is None

    exp = sp.Model.wpexp()
    assert exp.name == "wpexp"
    w = 0.4 + 0.1j
    assert abs(exp.eval(w) - wp.wp(cmath.exp(w) + 0.25 + 0.25j)) < 1e-9
    poles = exp.poles_in_disk(3.0)
    assert poles and all(m == 2 for _, m, _ in poles)
    # f(a + h) ~ (c / h)^2 next to a double pole with coefficient c
    for a, _, c in poles:
        h = 1e-4
        assert abs(abs(exp.eval(a + h)) * h * h / (c * c) - 1) < 1e-2

    kind, depth, trajectory = exp.iterate(3.0 + 0.5j, 3)
    assert kind in {"escaping", "prepole", "bounded", "undetermined"}
    assert len(trajectory) <= 3
    field = exp.escape_field(0, 4, -math.pi, math.pi, 16, 16, 2)
    assert len(field) == 256 and "escaping" in field
    assert set(sp.Model.plain().escape_field(0, 1, 0, 1, 16, 16, 3, "inf")) <= {"bounded", "prepole"}

    assert abs(sp.Model.plain().order_estimate(10, 200) - 2) < 0.02
    assert abs(sp.Model("model = power\nrho = 1\nomega1 = 0.05\nomega2 = 0+0.05i").order_estimate(10, 1000, quadrature=16) - 1) < 0.01

    assert abs(sp.dimension_formula(1.0) - 1.0) < 1e-15
    assert abs(sp.order_from_dimension(2 / 3) - 0.5) < 1e-12
    # Cantor dust: four of nine subsquares at every level
    levels = 256
    _, limit = sp.mcmullen_bound([4 / 9] * levels, [math.sqrt(2) * 3.0**-l for l in range(1, levels + 1)])
    assert abs(limit - math.log(4) / math.log(3)) < 1e-6, limit

    summary, files = sp.run("dim-bound", "cover = wpexp\nescape_radius = 30")
    assert "limit=1.806" in summary, summary
    assert files[0][0] == "bound.csv" and files[0][1].startswith(b"level,delta,diam,bound\n")

    checks = sp.selftest("elliptic")
    assert checks and all(passed for _, _, passed, _ in checks)

    try:
        sp.Lattice(1, 2)
    except ValueError as e:
        assert "degenerate" in str(e)
    else:
        raise AssertionError("degenerate lattice accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
