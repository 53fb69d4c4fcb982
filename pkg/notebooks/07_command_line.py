# %% [markdown]
# # Command-line workflow
#
# `sparkperf synth` generates runs from a law config, `featurize` writes the
# three feature matrices, `experiment` runs every case x model cell of a config,
# and `report` rebuilds the comparison table from saved cell reports.
# Exit codes: 0 ok, 1 configuration problem, 2 data problem, 3 internal error.

# %%
import json
import os
import tempfile
from pathlib import Path

import sparkperf
from sparkperf.cli import main

configs = Path(sparkperf.__file__).parent / "configs"
print(sorted(p.name for p in configs.glob("*.json")))

tmp = tempfile.mkdtemp()
law = {
    "workload_id": "query26",
    "law": {"kind": "ernest", "theta": [2.0, 5.0, 1.0, 0.0005]},
    "noise_cv": 0.02,
    "seed": 1,
    "core_grid": list(range(6, 46, 2)),
    "size_grid": [750],
    "replicates": 2,
}
Path(tmp, "law.json").write_text(json.dumps(law))
print(main(["synth", "--config", os.path.join(tmp, "law.json"), "--out", os.path.join(tmp, "data")]))
print(main(["featurize", "--data", os.path.join(tmp, "data"), "--workload", "query26", "--out", os.path.join(tmp, "feat")]))

# %% [markdown]
# One cell of a bundled experiment config, then the report over its output.

# %%
out = os.path.join(tmp, "exp")
main(["experiment", "--config", str(configs / "query26-interp.json"), "--out", out,
      "--only-case", "C1", "--only-model", "ernest", "--only-model", "blackbox:LR"])
main(["report", out, "--format", "csv"])

# %% [markdown]
# A missing seed is a configuration error (exit code 1).

# %%
del law["seed"]
Path(tmp, "law.json").write_text(json.dumps(law))
print(main(["synth", "--config", os.path.join(tmp, "law.json"), "--out", os.path.join(tmp, "data2")]))
