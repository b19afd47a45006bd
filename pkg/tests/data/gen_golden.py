"""Regenerates the committed golden fixture for the unified CLI check.

The fixture prisms/models are deterministic; the golden objective is the
output of the exhaustive oracle (tests/oracles.py), not of the engine under
test. Run from the repository root:

    python3 tests/data/gen_golden.py
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

from lattice_fusion import DetectionPrism, HmmModel, ScaleMap, formats
from oracles import unified_brute

HERE = pathlib.Path(__file__).resolve().parent


def build_fixture():
    rng = np.random.Generator(np.random.PCG64(424242))
    prisms = [
        DetectionPrism(
            frame=t,
            scores=rng.normal(0.0, 2.0, (4, 4, 2)),
            scale_map=ScaleMap(factors=(1.0, 1.0)),
            alpha=1.0,
            stride=1.0,
        )
        for t in range(4)
    ]
    init = np.array([0.7, 0.3])
    trans = np.array([[0.8, 0.2], [0.3, 0.7]])
    model = HmmModel(
        name="drift",
        log_init=np.log(init),
        log_trans=np.log(trans),
        means=np.array([[1.0, 1.0, 0.0, 0.0], [2.5, 2.0, 0.0, 0.0]]),
        variances=np.array([[1.5, 1.5, 9.0, 9.0], [1.0, 1.0, 9.0, 9.0]]),
        frame_w=4.0,
        frame_h=4.0,
    )
    return prisms, model


def main():
    prisms, model = build_fixture()
    formats.write_prisms(str(HERE / "golden_prisms.txt"), prisms)
    formats.write_models(str(HERE / "golden_models.txt"), [model])
    objective = unified_brute(prisms, model, alpha=1.0)
    (HERE / "golden_unified_objective.txt").write_text(repr(objective) + "\n")
    print(f"golden objective (oracle): {objective!r}")


if __name__ == "__main__":
    main()
