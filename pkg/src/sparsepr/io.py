"""Plain-text serialization of signals, ensembles and reports.

Formats
-------
signal / autocorrelation
    One CSV row of real values (autocorrelations ordered by lag
    ``-(M-1), ..., M-1``).
ensemble
    ``#``-prefixed ``key: value`` header lines (kind, M, N, seed or freqs)
    followed by one CSV row per vector; complex entries are written as
    consecutive ``re,im`` pairs.
records
    Certificates and reports are ``key: value`` lines; vectors are written
    as space-separated numbers and index sets as space-separated integers
    (an empty set is an empty value).
"""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from .complement import ViolationCertificate
from .ensembles import MeasurementEnsemble, fourier_rows

# repr() of a Python float round-trips exactly
_fmt = repr


def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, newline=""), True
    return target, False


def _vec(v) -> str:
    return " ".join(_fmt(float(t)) for t in np.ravel(v))


def _ints(v) -> str:
    return " ".join(str(int(t)) for t in v)


def _parse_vec(s: str) -> np.ndarray:
    return np.array([float(t) for t in s.split()])


def _parse_ints(s: str) -> tuple:
    return tuple(int(t) for t in s.split())


# --------------------------------------------------------------------------
# vectors

def write_vector_csv(x, target) -> None:
    f, own = _open(target, "w")
    try:
        csv.writer(f, lineterminator="\n").writerow([_fmt(float(t)) for t in np.ravel(x)])
    finally:
        if own:
            f.close()


def read_vector_csv(source) -> np.ndarray:
    f, own = _open(source, "r")
    try:
        rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
    finally:
        if own:
            f.close()
    if len(rows) != 1:
        raise ValueError(f"expected a single CSV row, found {len(rows)}")
    return np.array([float(t) for t in rows[0]])


write_signal_csv = write_autocorrelation_csv = write_vector_csv
read_signal_csv = read_vector_csv


def read_autocorrelation_csv(source) -> np.ndarray:
    a = read_vector_csv(source)
    if len(a) % 2 != 1:
        raise ValueError("an autocorrelation has an odd number (2M-1) of entries")
    return a


# --------------------------------------------------------------------------
# ensembles

def write_ensemble_csv(phi: MeasurementEnsemble, target) -> None:
    f, own = _open(target, "w")
    try:
        f.write(f"# kind: {phi.kind}\n# M: {phi.m}\n# N: {phi.n}\n")
        if phi.seed is not None:
            f.write(f"# seed: {phi.seed}\n")
        if phi.freqs is not None:
            f.write(f"# freqs: {_ints(phi.freqs)}\n")
        f.write(f"# field: {'complex' if phi.is_complex else 'real'}\n")
        w = csv.writer(f, lineterminator="\n")
        for row in phi.vectors:
            if phi.is_complex:
                row = np.column_stack([row.real, row.imag]).ravel()
            w.writerow([_fmt(float(t)) for t in row])
    finally:
        if own:
            f.close()


def read_ensemble_csv(source) -> MeasurementEnsemble:
    f, own = _open(source, "r")
    try:
        text = f.read()
    finally:
        if own:
            f.close()
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    rows = np.array([[float(t) for t in r] for r in csv.reader(body)]).reshape(len(body), -1)
    if meta.get("field") == "complex":
        rows = rows[:, 0::2] + 1j * rows[:, 1::2]
    n = int(meta.get("N", len(rows)))
    if n != len(rows):
        raise ValueError(f"header says N = {n} but {len(rows)} rows were found")
    kind = meta.get("kind", "explicit")
    m = int(meta["M"]) if "M" in meta else 0
    if kind == "fourier" and "freqs" in meta:
        # rebuild from the indices so entries are exact
        return fourier_rows(m, _parse_ints(meta["freqs"]))
    seed = int(meta["seed"]) if "seed" in meta else None
    return MeasurementEnsemble(rows, kind=kind, m=m, seed=seed)


# --------------------------------------------------------------------------
# records

def format_record(fields: dict) -> str:
    return "".join(f"{k}: {v}\n" for k, v in fields.items())


def parse_record(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, val = line.partition(":")
        if not sep:
            raise ValueError(f"line {n}: expected 'key: value', got {line!r}")
        out[key.strip()] = val.strip()
    return out


def format_certificate(cert: ViolationCertificate) -> str:
    u, v = np.asarray(cert.u), np.asarray(cert.v)
    fields = {"S": _ints(cert.S), "K": _ints(cert.K), "N": cert.n}
    if np.iscomplexobj(u) or np.iscomplexobj(v):
        fields.update({"u_re": _vec(u.real), "u_im": _vec(u.imag),
                       "v_re": _vec(v.real), "v_im": _vec(v.imag)})
    else:
        fields.update({"u": _vec(u), "v": _vec(v)})
    return format_record(fields)


def parse_certificate(text: str) -> ViolationCertificate:
    r = parse_record(text)
    if "u" in r:
        u, v = _parse_vec(r["u"]), _parse_vec(r["v"])
    else:
        u = _parse_vec(r["u_re"]) + 1j * _parse_vec(r["u_im"])
        v = _parse_vec(r["v_re"]) + 1j * _parse_vec(r["v_im"])
    return ViolationCertificate(_parse_ints(r["S"]), _parse_ints(r["K"]), u, v, int(r["N"]))


def format_recovery_report(report) -> str:
    fields = {
        "solution": "" if report.solution is None else _vec(report.solution),
        "sparsity_found": report.sparsity_found,
        "unique": report.unique,
        "alternates": len(report.alternates),
    }
    for i, z in enumerate(report.alternates):
        fields[f"alternate_{i}"] = _vec(z)
    fields["certificate_checked"] = report.certificate_checked
    fields["residual"] = _fmt(float(report.residual))
    fields["flags"] = " ".join(report.flags)
    return format_record(fields)


def format_fmm_conditions(rep) -> str:
    return format_record({
        "k": rep.k, "N": rep.N, "n_is_prime": rep.n_is_prime, "bound_ok": rep.bound_ok,
        "collision_free": rep.collision_free, "k6_case": rep.k6_case,
        "verdict": rep.verdict.value, "reasons": " ".join(rep.reasons),
    })


def to_text(obj) -> str:
    """Structured text for any supported object."""
    from .fmm import FmmConditionReport
    from .lifted import RecoveryReport

    if isinstance(obj, ViolationCertificate):
        return format_certificate(obj)
    if isinstance(obj, RecoveryReport):
        return format_recovery_report(obj)
    if isinstance(obj, FmmConditionReport):
        return format_fmm_conditions(obj)
    if isinstance(obj, MeasurementEnsemble):
        buf = io.StringIO()
        write_ensemble_csv(obj, buf)
        return buf.getvalue()
    raise TypeError(f"no text form for {type(obj).__name__}")
