"""Quick check that the extension imports and the main entry points run."""

from fractions import Fraction

import cspstream_py as cs

TRIANGLE = """\
csp 3 3 2 2
pred 0 0110
c 0 0 1
c 0 1 2
c 0 2 0
"""


def main():
    inst = cs.Instance.parse(TRIANGLE)
    assert (inst.n, inst.m, inst.k, inst.sigma) == (3, 3, 2, 2)
    assert Fraction(cs.brute_force_val(inst)) == Fraction(2, 3)
    assert Fraction(cs.evaluate(inst, [0, 1, 0])) == Fraction(2, 3)

    lp = cs.solve_basic_lp(inst)
    assert Fraction(lp["objective"]) >= Fraction(2, 3)
    assert cs.Instance.parse(inst.to_text()).to_text() == inst.to_text()

    g = cs.generate("maxcut", 20, 60, seed=7)
    cfg = cs.EstimatorConfig(0.878, epsilon=0.5, b=2, seed=3)
    off = cs.offline_estimate(g, cfg)
    on = cs.streaming_estimate(g, cfg)
    assert 0.0 <= off["vtilde"] and 0.0 <= on["vtilde"]

    run = cs.coupled_run(g, cfg)
    if not run["claim_failure"]:
        assert run["matched"], run
    print("lp", lp["objective"], "offline", round(off["vtilde"], 4), "stream", round(on["vtilde"], 4))
    print("coupled", run["matched"], run["failed_claims"])
    print("ok")


if __name__ == "__main__":
    main()
