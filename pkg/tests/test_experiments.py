import csv
import io

import pytest

from sparsepr.experiments import (
    CSV_SCHEMA,
    ConfigError,
    ExperimentConfig,
    parse_config,
    run_config_file,
    run_experiment,
    splitmix64,
    strip_timing,
    trial_seed,
)

THREE = """\
# the three reference experiments
[experiment complement-ok]
experiment = complement_mc
M = 4
N = 7
trials = 100
seed = 1

[experiment complement-too-few]
experiment = complement_mc
M = 4
N = 6
trials = 100

[experiment fmm]
experiment = fmm_roundtrip_mc
M = 9
k = 3
N = 17
trials = 100
"""


def rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_splitmix_reference_values():
    # first outputs of the reference generator seeded with 0
    z, out = 0, []
    for _ in range(3):
        out.append(splitmix64(z))
        z = (z + 0x9E3779B97F4A7C15) & (2 ** 64 - 1)
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_trial_seeds_are_distinct():
    for seed in (0, 1, 2 ** 64 - 1):
        seeds = [trial_seed(seed, t) for t in range(10_000)]
        assert len(set(seeds)) == len(seeds)


@pytest.mark.parametrize("cfg, expect", [
    (ExperimentConfig("complement_mc", 4, N=7, trials=100, seed=1), 100),
    (ExperimentConfig("complement_mc", 4, N=6, trials=100), 0),
    (ExperimentConfig("fmm_roundtrip_mc", 9, k=3, N=17, trials=100), 100),
])
def test_reference_experiments(cfg, expect):
    s = run_experiment(cfg)
    assert s.successes == expect and s.predicate_ok and s.exit_code == 0


def test_other_experiments():
    for cfg in (ExperimentConfig("k_complement_mc", 6, k=1, trials=30),
                ExperimentConfig("k_complement_mc", 6, k=2, N=6, trials=10),
                ExperimentConfig("sparse_uniqueness_mc", 8, k=2, trials=30),
                ExperimentConfig("ambiguity_demo", 4, trials=30),
                ExperimentConfig("ambiguity_demo", 6, k=2, N=5, trials=10)):
        s = run_experiment(cfg)
        assert s.predicate_ok, (cfg, s.note)


def test_reproducible_and_worker_independent(tmp_path):
    cfg = ExperimentConfig("sparse_uniqueness_mc", 6, k=2, trials=24, seed=9, out=str(tmp_path / "t.csv"))
    a = run_experiment(cfg)
    b = run_experiment(cfg, workers=3)
    assert strip_timing(a.csv()) == strip_timing(b.csv())
    assert strip_timing((tmp_path / "t.csv").read_text()) == strip_timing(b.csv())
    assert a.csv().splitlines()[0] == f"# schema: {CSV_SCHEMA}"
    table = rows(a.csv())
    assert [int(r["trial"]) for r in table] == list(range(24))
    assert list(table[0])[-1] == "seconds"


def test_caps_are_reported_per_trial():
    s = run_experiment(ExperimentConfig("sparse_uniqueness_mc", 8, k=2, trials=3, max_supports=5))
    assert all(r.error.startswith("EnumerationCapError") and not r.success for r in s.records)
    assert not s.predicate_ok and s.exit_code == 1


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", 3).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("complement_mc", 3, trials=0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("fmm_roundtrip_mc", 4).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("complement_mc", 3, N=30).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("fmm_roundtrip_mc", 5, k=3).validate()  # 17 > 2M
    assert ExperimentConfig("fmm_roundtrip_mc", 9, k=3).resolved_N() == 17
    assert ExperimentConfig("sparse_uniqueness_mc", 8, k=2).resolved_N() == 7


def test_empty_config(tmp_path):
    p = tmp_path / "empty.ini"
    p.write_text("# nothing to do\n")
    batch = run_config_file(p)
    assert batch.exit_code == 0 and batch.summaries == [] and rows(batch.csv()) == []


def test_three_example_config(tmp_path):
    p = tmp_path / "three.ini"
    p.write_text(THREE)
    out = tmp_path / "all.csv"
    batch = run_config_file(p, out=str(out), workers=2)
    assert batch.exit_code == 0
    table = rows(out.read_text())
    assert len(table) == 300
    assert {r["experiment"] for r in table} == {"complement-ok", "complement-too-few", "fmm"}
    assert [s.successes for s in batch.summaries] == [100, 0, 100]


@pytest.mark.parametrize("text, line", [
    ("[experiment a]\nexperiment = complement_mc\nM = four\n", 3),
    ("[experiment a]\nexperiment = complement_mc\nM = 3\nbogus = 1\n", 4),
    ("[experiment a]\nexperiment = complement_mc\n\n[experiment b]\nM = 3\n", 1),
    ("[other]\nM = 3\n", 1),
    ("[experiment a]\nexperiment = complement_mc\nM = 3\ntrials = 0\n", 1),
])
def test_malformed_config(text, line):
    with pytest.raises(ConfigError, match=rf"<config>:{line}:"):
        parse_config(text)


def test_unparseable_config():
    with pytest.raises(ConfigError):
        parse_config("M = 3\n")


def test_config_defaults_and_auto():
    cfgs = parse_config("[DEFAULT]\ntrials = 7\n[experiment x]\nexperiment = fmm_roundtrip_mc\n"
                        "M = 9\nk = 3\nN = auto\nexploit_symmetry = yes\n")
    (c,) = cfgs
    assert c.trials == 7 and c.N is None and c.resolved_N() == 17 and c.exploit_symmetry and c.name == "x"
