"""Seeded Monte-Carlo experiments and their CSV trial logs.

Each experiment runs independent trials. Trial ``t`` draws everything from
its own 64-bit seed::

    trial_seed(seed, t) = splitmix64(seed + (t + 1) * 0x9E3779B97F4A7C15)

which is a bijection of ``t`` for a fixed `seed`, so trial seeds never
collide and results do not depend on the order or process in which trials
run. Aggregation is by trial index, so the CSV is byte-identical for any
worker count (apart from the trailing ``seconds`` column).

Experiments
-----------
complement_mc
    Gaussian ensemble of N vectors in R^M; success = complement property
    holds. Predicate: all succeed if ``N >= 2M - 1``, none otherwise.
k_complement_mc
    Gaussian ensemble; success = the ``min(2k, M)``-complement property
    holds (k is the sparsity). Predicate: all succeed if ``N >= 4k - 1``
    (``2M - 1`` when ``2k > M``), none otherwise.
sparse_uniqueness_mc
    Gaussian ensemble and a random k-sparse signal; success = `l0_recover`
    returns the signal up to sign, with no alternates and a residual within
    tolerance. Predicate: all succeed when ``N >= min(4k - 1, 2M - 1)``;
    below that nothing is promised.
fmm_roundtrip_mc
    Random collision-free integer k-sparse signal measured by N Fourier
    magnitudes; success = `fmm_recover` returns it up to sign, mirror and
    shift. Predicate: all succeed when N is a prime above
    ``2 (k^2 - k + 1)``.
ambiguity_demo
    Gaussian ensemble that (typically) violates the complement property (or
    the k-complement property when k is set); every certificate is turned
    into a pair of signals with equal measurements. Success = no violation,
    or the pair has discrepancy <= 1e-10 and is not related by a sign.
    Predicate: all succeed.
"""
from __future__ import annotations

import configparser
import csv
import io
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from sympy import isprime

from .complement import (
    DEFAULT_MAX_K_CHOOSE,
    DEFAULT_MAX_N,
    EnumerationCapError,
    ambiguity_from_violation,
    has_complement_property,
    has_k_complement_property,
)
from .ensembles import (
    UINT64_MASK,
    fourier_rows,
    gaussian_ensemble,
    intensity_measure,
    random_collision_free_signal,
    random_sparse_signal,
)
from .fmm import autocorrelation_sparsity_bound, default_freqs, fmm_recover, next_valid_N
from .lifted import DEFAULT_MAX_SUPPORTS, RES_RTOL, NoSolutionError, l0_recover
from .signal import equivalent_under_invariances

CSV_SCHEMA = "sparsepr-trials/1"
EXPERIMENTS = ("complement_mc", "k_complement_mc", "sparse_uniqueness_mc",
               "fmm_roundtrip_mc", "ambiguity_demo")
AMBIGUITY_ATOL = 1e-10
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# per-experiment auxiliary CSV columns, in order
AUX_COLUMNS = {
    "complement_mc": ("N", "verdict", "S"),
    "k_complement_mc": ("N", "order", "verdict", "S", "K"),
    "sparse_uniqueness_mc": ("N", "sparsity_found", "alternates", "residual", "flags"),
    "fmm_roundtrip_mc": ("N", "condition", "sparsity_found", "alternates", "residual", "flags"),
    "ambiguity_demo": ("N", "violation", "discrepancy", "non_equivalent"),
}


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


def splitmix64(z: int) -> int:
    z = (z + GOLDEN_GAMMA) & UINT64_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & UINT64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & UINT64_MASK
    return z ^ (z >> 31)


def trial_seed(seed: int, t: int) -> int:
    return splitmix64((seed + (t + 1) * GOLDEN_GAMMA) & UINT64_MASK)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one Monte-Carlo experiment.

    ``N=None`` selects the experiment's natural measurement count (see the
    module docstring). `freqs` only matters for ``fmm_roundtrip_mc``: None
    uses ``{0, ..., N-1}``, ``"random"`` a seeded random subset per trial.
    """

    experiment: str
    M: int
    k: int | None = None
    N: int | None = None
    trials: int = 100
    seed: int = 0
    max_n: int = DEFAULT_MAX_N
    max_k_choose: int = DEFAULT_MAX_K_CHOOSE
    max_supports: int = DEFAULT_MAX_SUPPORTS
    freqs: str | None = None
    exploit_symmetry: bool = False
    out: str | None = None
    name: str | None = None

    def resolved_N(self) -> int:
        if self.N is not None:
            return int(self.N)
        m, k = self.M, self.k
        if self.experiment == "complement_mc":
            return 2 * m - 1
        if self.experiment == "k_complement_mc":
            return 2 * min(2 * k, m) - 1
        if self.experiment == "sparse_uniqueness_mc":
            return min(4 * k - 1, 2 * m - 1)
        if self.experiment == "fmm_roundtrip_mc":
            return next_valid_N(k)
        return max(1, 2 * (k if k is not None else m) - 2)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 <= self.seed <= UINT64_MASK:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        needs_k = self.experiment in ("k_complement_mc", "sparse_uniqueness_mc", "fmm_roundtrip_mc")
        if needs_k and self.k is None:
            raise ConfigError(f"{self.experiment} needs k")
        if self.k is not None and not 1 <= self.k <= self.M:
            raise ConfigError(f"k must lie in [1, M = {self.M}]")
        n = self.resolved_N()
        if n < 1:
            raise ConfigError("N must be >= 1")
        if self.experiment in ("complement_mc", "k_complement_mc", "ambiguity_demo") and n > self.max_n:
            raise ConfigError(f"N = {n} exceeds max_n = {self.max_n}")
        if self.experiment == "fmm_roundtrip_mc" and n > 2 * self.M:
            raise ConfigError(f"N = {n} exceeds the 2M = {2 * self.M} available frequencies")
        if self.freqs not in (None, "random"):
            raise ConfigError("freqs must be unset or 'random'")
        return self


@dataclass
class TrialRecord:
    trial: int
    seed: int
    success: bool
    seconds: float
    aux: dict = field(default_factory=dict)
    error: str = ""


@dataclass
class ExperimentSummary:
    config: ExperimentConfig
    records: list
    predicate_ok: bool
    note: str = ""

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def rate(self) -> float:
        return self.successes / len(self.records)

    @property
    def exit_code(self) -> int:
        return 0 if self.predicate_ok else 1

    def csv(self) -> str:
        return trials_csv([self])

    def text(self) -> str:
        c = self.config
        return (f"experiment: {c.name or c.experiment}\nM: {c.M}\nk: {'' if c.k is None else c.k}\n"
                f"N: {c.resolved_N()}\ntrials: {len(self.records)}\nseed: {c.seed}\n"
                f"successes: {self.successes}\nrate: {self.rate:.4f}\n"
                f"predicate: {'pass' if self.predicate_ok else 'fail'}\nnote: {self.note}\n")


# --------------------------------------------------------------------------
# trials

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6e}"
    if isinstance(v, (tuple, list)):
        return " ".join(str(t) for t in v)
    return str(v)


def _complement_trial(cfg, s, n):
    phi = gaussian_ensemble(cfg.M, n, s)
    ok, cert = has_complement_property(phi, max_n=cfg.max_n)
    return ok, {"N": n, "verdict": ok, "S": cert.S if cert else ""}


def _k_complement_trial(cfg, s, n):
    order = min(2 * cfg.k, cfg.M)
    phi = gaussian_ensemble(cfg.M, n, s)
    ok, cert = has_k_complement_property(phi, order, max_n=cfg.max_n, max_k_choose=cfg.max_k_choose)
    return ok, {"N": n, "order": order, "verdict": ok,
                "S": cert.S if cert else "", "K": cert.K if cert else ""}


def _sparse_trial(cfg, s, n):
    phi = gaussian_ensemble(cfg.M, n, s)
    x0 = random_sparse_signal(cfg.M, cfg.k, s, stream=1 << 32)
    y = intensity_measure(phi, x0)
    rep = l0_recover(phi, y, cfg.k, max_supports=cfg.max_supports)
    tol = RES_RTOL * np.linalg.norm(y)
    ok = (rep.solution is not None and not rep.alternates and rep.residual <= tol
          and equivalent_under_invariances(x0, rep.solution, group="sign",
                                           tol=1e-7 * max(1.0, np.max(np.abs(x0)))))
    return ok, {"N": n, "sparsity_found": rep.sparsity_found, "alternates": len(rep.alternates),
                "residual": rep.residual, "flags": rep.flags}


def _fmm_trial(cfg, s, n):
    x0 = random_collision_free_signal(cfg.M, cfg.k, s, stream=1 << 32)
    freqs = default_freqs(n, cfg.M, seed=s if cfg.freqs == "random" else None)
    y = intensity_measure(fourier_rows(cfg.M, freqs), x0)
    rep = fmm_recover(y, freqs, cfg.M, cfg.k, exploit_symmetry=cfg.exploit_symmetry)
    ok = not rep.alternates and equivalent_under_invariances(
        x0, rep.solution, group="full", circular=False, tol=1e-6 * max(1.0, np.max(np.abs(x0))))
    return ok, {"N": n, "condition": rep.details["conditions"].verdict.value,
                "sparsity_found": rep.sparsity_found, "alternates": len(rep.alternates),
                "residual": rep.residual, "flags": rep.flags}


def _ambiguity_trial(cfg, s, n):
    phi = gaussian_ensemble(cfg.M, n, s)
    if cfg.k is None:
        holds, cert = has_complement_property(phi, max_n=cfg.max_n)
    else:
        holds, cert = has_k_complement_property(phi, cfg.k, max_n=cfg.max_n,
                                                max_k_choose=cfg.max_k_choose)
    if holds:
        return True, {"N": n, "violation": False, "discrepancy": "", "non_equivalent": ""}
    x1, x2 = ambiguity_from_violation(phi, cert)
    gap = float(np.max(np.abs(intensity_measure(phi, x1) - intensity_measure(phi, x2))))
    distinct = not equivalent_under_invariances(x1, x2, group="sign")
    return gap <= AMBIGUITY_ATOL and distinct, {
        "N": n, "violation": True, "discrepancy": gap, "non_equivalent": distinct}


_TRIALS = {
    "complement_mc": _complement_trial,
    "k_complement_mc": _k_complement_trial,
    "sparse_uniqueness_mc": _sparse_trial,
    "fmm_roundtrip_mc": _fmm_trial,
    "ambiguity_demo": _ambiguity_trial,
}


def run_trial(cfg: ExperimentConfig, t: int) -> TrialRecord:
    s = trial_seed(cfg.seed, t)
    n = cfg.resolved_N()
    start = time.perf_counter()
    try:
        ok, aux = _TRIALS[cfg.experiment](cfg, s, n)
        err = ""
    except (EnumerationCapError, NoSolutionError) as exc:
        # reported per trial, never fatal
        ok, aux, err = False, {"N": n}, f"{type(exc).__name__}: {exc}"
    return TrialRecord(t, s, bool(ok), time.perf_counter() - start, aux, err)


def _run_chunk(args):
    cfg, lo, hi = args
    return [run_trial(cfg, t) for t in range(lo, hi)]


def _predicate(cfg: ExperimentConfig, records) -> tuple:
    n = cfg.resolved_N()
    m, k = cfg.M, cfg.k
    succ = [r.success for r in records]
    if cfg.experiment == "complement_mc":
        if n >= 2 * m - 1:
            return all(succ), "expect every ensemble to pass (N >= 2M-1)"
        return not any(succ), "expect every ensemble to fail (N < 2M-1)"
    if cfg.experiment == "k_complement_mc":
        order = min(2 * k, m)
        if n >= 2 * order - 1:
            return all(succ), f"expect every ensemble to pass (N >= {2 * order - 1})"
        return not any(succ), f"expect every ensemble to fail (N < {2 * order - 1})"
    if cfg.experiment == "sparse_uniqueness_mc":
        need = min(4 * k - 1, 2 * m - 1)
        if n >= need:
            return all(succ), f"expect exact recovery in every trial (N >= {need})"
        return True, f"no guarantee below N = {need}; rate reported only"
    if cfg.experiment == "fmm_roundtrip_mc":
        if isprime(n) and n > autocorrelation_sparsity_bound(k):
            return all(succ), "expect exact recovery in every trial (prime N above the bound)"
        return True, "hypotheses not met; rate reported only"
    return all(succ), "every certificate must yield a valid ambiguous pair"


def run_experiment(cfg: ExperimentConfig, workers: int = 1, write: bool = True) -> ExperimentSummary:
    """Run all trials of `cfg` and evaluate its acceptance predicate.

    Trials are split into contiguous chunks over at most `workers`
    processes; the result does not depend on `workers`. The trial CSV is
    written to ``cfg.out`` when set and `write` is true.
    """
    cfg.validate()
    if workers > 1 and cfg.trials > 1:
        step = -(-cfg.trials // (4 * workers))
        chunks = [(cfg, lo, min(lo + step, cfg.trials)) for lo in range(0, cfg.trials, step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_run_chunk, chunks) for r in part]
    else:
        records = _run_chunk((cfg, 0, cfg.trials))
    ok, note = _predicate(cfg, records)
    summary = ExperimentSummary(cfg, records, ok, note)
    if write and cfg.out:
        with open(cfg.out, "w", newline="") as f:
            f.write(summary.csv())
    return summary


def trials_csv(summaries) -> str:
    """CSV of the trial records of one or more experiments.

    The first line is a ``#`` comment naming the schema version. Columns are
    ``experiment, trial, seed, success, error``, the union of the auxiliary
    columns, and finally ``seconds`` (wall time, outside the determinism
    contract).
    """
    aux_cols = []
    for s in summaries:
        for c in AUX_COLUMNS[s.config.experiment]:
            if c not in aux_cols:
                aux_cols.append(c)
    buf = io.StringIO()
    buf.write(f"# schema: {CSV_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "M", "k", "trial", "seed", "success", "error", *aux_cols, "seconds"])
    for s in summaries:
        c = s.config
        for r in s.records:
            w.writerow([c.name or c.experiment, c.M, "" if c.k is None else c.k, r.trial, r.seed,
                        _fmt(r.success), r.error, *(_fmt(r.aux.get(col, "")) for col in aux_cols),
                        f"{r.seconds:.6f}"])
    return buf.getvalue()


def strip_timing(csv_text: str) -> str:
    """Drop the trailing ``seconds`` column (for determinism comparisons)."""
    return "\n".join(line.rsplit(",", 1)[0] if not line.startswith("#") else line
                     for line in csv_text.splitlines())


# --------------------------------------------------------------------------
# config files

_INT_KEYS = {"M", "k", "N", "trials", "seed", "max_n", "max_k_choose", "max_supports"}
_KEYS = {f.name for f in fields(ExperimentConfig)}


def _line_of(text: str, section: str, key: str | None = None) -> int:
    lines = text.splitlines()
    inside = False
    for i, line in enumerate(lines, 1):
        stripped = line.strip()
        if stripped.startswith("["):
            if inside and key is not None:
                break
            inside = stripped == f"[{section}]"
            if inside and key is None:
                return i
        elif inside and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.I):
            return i
    return 0


def parse_config(text: str, source: str = "<config>") -> list:
    """Experiment configs from INI-style text.

    Every section whose name starts with ``experiment`` is one block::

        [experiment complement-ok]
        experiment = complement_mc
        M = 4
        N = 7          ; or "auto"
        trials = 100
        seed = 1

    Keys in ``[DEFAULT]`` apply to every block. Errors carry line numbers.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    out = []
    for section in parser.sections():
        if not section.lower().startswith("experiment"):
            raise ConfigError(f"{source}:{_line_of(text, section)}: unexpected section [{section}]")
        kw = {"name": section.split(None, 1)[1] if " " in section else None}
        for key, raw in parser.items(section):
            line = _line_of(text, section, key)
            if key not in _KEYS:
                raise ConfigError(f"{source}:{line}: unknown key {key!r} in [{section}]")
            try:
                if key in _INT_KEYS:
                    kw[key] = None if raw.lower() == "auto" and key == "N" else int(raw, 0)
                elif key == "exploit_symmetry":
                    kw[key] = parser.getboolean(section, key)
                else:
                    kw[key] = raw
            except ValueError:
                raise ConfigError(f"{source}:{line}: bad value {raw!r} for {key!r}") from None
        if "experiment" not in kw or "M" not in kw:
            raise ConfigError(f"{source}:{_line_of(text, section)}: [{section}] needs experiment and M")
        try:
            out.append(ExperimentConfig(**kw).validate())
        except ConfigError as exc:
            raise ConfigError(f"{source}:{_line_of(text, section)}: [{section}]: {exc}") from None
    return out


@dataclass
class BatchSummary:
    summaries: list

    @property
    def exit_code(self) -> int:
        return 0 if all(s.predicate_ok for s in self.summaries) else 1

    def csv(self) -> str:
        return trials_csv(self.summaries)

    def text(self) -> str:
        return "\n".join(s.text() for s in self.summaries)


def run_config_file(path, workers: int = 1, out: str | None = None, seed: int | None = None) -> BatchSummary:
    """Run every experiment block of a config file.

    `seed`, when given, overrides the seed of every block. The combined CSV
    is written to `out` when given.
    """
    with open(path) as f:
        text = f.read()
    configs = parse_config(text, source=str(path))
    if seed is not None:
        configs = [replace(c, seed=seed) for c in configs]
    batch = BatchSummary([run_experiment(c, workers=workers) for c in configs])
    if out:
        with open(out, "w", newline="") as f:
            f.write(batch.csv())
    return batch
