"""Seeded Monte-Carlo experiments and their CSV logs.

The same runs are available from the shell:

    sparsepr experiment --name complement_mc --m 4 --n 7 --trials 100 --seed 1

Run:  python demos/04_experiments.py
"""
import os
import tempfile

from sparsepr import ExperimentConfig, run_config_file, run_experiment

s = run_experiment(ExperimentConfig("complement_mc", 4, N=7, trials=100, seed=1))
print(s.text())

s = run_experiment(ExperimentConfig("sparse_uniqueness_mc", 8, k=2, trials=50), workers=2)
print(s.text())
print(s.csv().splitlines()[:3])

config = """
[experiment too-few]
experiment = complement_mc
M = 4
N = 6
trials = 100

[experiment fmm]
experiment = fmm_roundtrip_mc
M = 9
k = 3
N = auto
trials = 100
"""
with tempfile.TemporaryDirectory() as d:
    path = os.path.join(d, "batch.ini")
    with open(path, "w") as f:
        f.write(config)
    batch = run_config_file(path)
print(batch.text())
print("exit code:", batch.exit_code)
