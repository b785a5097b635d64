"""Grade the transfer protocols against each other at a weak bath.

    python scripts/protocol_comparison.py [--taus 10 30 100 300] [--N 25]

Prints G and its factors per protocol and duration.
"""

import argparse

from phasethermo.config import BATH_1K
from phasethermo.grading import grade, target_state
from phasethermo.hilbert import SpinBasis, build_operators
from phasethermo.params import PhysicalParams
from phasethermo.phasespace import build_sphere_grid, entropy_records
from phasethermo.protocols import KINDS, ProtocolSpec, run_protocol


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--taus", type=float, nargs="+", default=[10.0, 30.0, 100.0, 300.0])
    ap.add_argument("--kinds", nargs="+", default=list(KINDS), choices=KINDS)
    ap.add_argument("--N", type=int, default=25)
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args()

    params = PhysicalParams(**BATH_1K)
    basis = SpinBasis(args.N)
    ops = build_operators(basis, params)
    grid = build_sphere_grid(basis)

    print(f"{'protocol':<30} {'tau':>6} {'tau_QSL':>8} {'F':>7} {'Sigma':>8} {'gS':>6} {'G':>8}")
    for tau in args.taus:
        steps = int(round(tau / args.dt))
        stride = 10 if steps % 10 == 0 else 1
        for kind in args.kinds:
            spec = ProtocolSpec(kind, tau)
            run = run_protocol(spec, params, ops, steps, stride)
            target = target_state(params, spec.free_schedule(), ops, steps)
            rep = grade(run.trajectory, entropy_records(run.trajectory, grid), target, kind=kind)
            print(f"{kind:<30} {tau:6g} {rep.tau_qsl:8.3f} {rep.fidelity:7.4f} {rep.sigma_ir:8.3f} "
                  f"{rep.g_s:6.3f} {rep.G:8.4f}", flush=True)


if __name__ == "__main__":
    main()
