"""Smoke test for the hinf Python bindings.

Build first:  maturin develop --release -m crates/py/Cargo.toml
"""

import math
import pathlib
import tempfile

import hinf

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    p = hinf.gare_solve([[-1.0]], [[0.5]], [[1.0]])
    assert abs(p[0][0] - (math.sqrt(6) - 2)) < 1e-10, p

    assert hinf.nq_penalty([0.0], [1.0], [1.0]) == 0.0
    assert hinf.nq_penalty([0.5], [1.0], [1.0]) == hinf.nq_penalty([-0.5], [1.0], [1.0])
    try:
        hinf.nq_penalty([1.0], [1.0], [1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("penalty at the bound should raise")

    cfg = hinf.Config(str(ROOT / "configs" / "default.toml"))
    a, b, c = cfg.plant()
    assert len(a) == 2 and len(c) == 2

    _, k = cfg.solve_gare()
    _, k_kalman = cfg.solve_gare(kalman=True)
    assert k != k_kalman

    w, v = cfg.worst_noise([1e6, -1e6], k, "bounded")
    assert abs(w[0]) < 0.01 and abs(v[1]) < 0.05

    res = cfg.train(iterations=50, seed=1)
    assert len(res) == 50
    e_omega, e_theta = res.final_errors()
    assert math.isfinite(e_omega) and math.isfinite(e_theta)
    again = cfg.train(iterations=50, seed=1)
    assert again.gain == res.gain

    with tempfile.TemporaryDirectory() as d:
        ckpt = pathlib.Path(d) / "checkpoint.txt"
        res.save(str(ckpt))
        reports = cfg.compare(checkpoint=str(ckpt), trials=2)
    assert {r.filter for r in reports} == {"reinforcement", "hinf", "kalman"}
    for r in reports:
        assert r.rms_beta > 0.0, r

    try:
        hinf.Config.from_toml("[plant]\na = -1.0\n")
    except ValueError:
        pass
    else:
        raise AssertionError("incomplete config should raise")

    print("python smoke test ok:", len(reports), "report rows")


if __name__ == "__main__":
    main()
