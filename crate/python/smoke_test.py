import json
import math

import infogcl


def main():
    assert abs(infogcl.discrete_mi([[0.5, 0.0], [0.0, 0.5]]) - math.log(2)) < 1e-12
    assert abs(infogcl.empirical_mi([0, 1, 0, 1], [0, 0, 1, 1])) < 1e-12

    entries = infogcl.gradcheck_suite(0)
    assert entries and all(passed for _, _, passed in entries), entries

    report = json.loads(infogcl.select_augmentations("two_factor", count=200, seed=1))
    assert report["ranking"], report

    config = json.dumps({
        "data": {"kind": "synthetic", "process": "triangle_motif", "count": 40},
        "optimizer": {"epochs": 2, "batch_size": 16},
        "eval": {"folds": 4, "runs": 1},
    })
    mean, std, folds = infogcl.train_and_evaluate(config, seed=3)
    assert 0.0 <= mean <= 1.0 and len(folds) == 4, (mean, folds)

    try:
        infogcl.train_and_evaluate('{"optimiser": {}}')
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config key accepted")

    print(f"infogcl {infogcl.__version__} smoke test ok (mean accuracy {mean:.3f})")


if __name__ == "__main__":
    main()
