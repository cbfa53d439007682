"""Command line front end for sieving, convolution, and formula checks.

Five subcommands:

  sieve         build a multiplicative-sign table and dump it
  convolve      build the d-fold convolution series and export it
  zeros-enrich  turn a file of zero ordinates into an enriched cache
  verify        compare direct computations against truncated formulas
  bench         wall-time comparisons and a cross-method hash check

``verify`` takes one of nine targets: L, M, cesaro, cesaro-mu, dfold,
dirichlet, exponential, weighted, identity.  Each run writes a report
(CSV by default, JSON with --format json) with one row per sample
point and a summary block, plus a manifest next to it recording the
effective configuration, library versions, input checksums, and the
report's SHA-256.  Reports carry no timestamps and every float is
written with shortest-roundtrip repr, so the same inputs produce byte
identical reports at any --workers setting.

Configuration precedence is flags, then ``--config`` key=value file,
then built-in defaults.  Exit codes: 0 success, 1 hard invariant
violation, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import convolve, explicit, sieve, specfun, zeros

__all__ = ["RunConfig", "UsageError", "InvariantFailure", "main"]

_VERIFY_TARGETS = ("L", "M", "cesaro", "cesaro-mu", "dfold", "dirichlet",
                   "exponential", "weighted", "identity")
_NEED_ZEROS = {"L", "M", "cesaro", "cesaro-mu", "dfold", "dirichlet",
               "exponential"}
_IDENTITY_SEED = 0x5eed
_REL_IDENTITY_TOL = 1e-8
_IMAG_TOL = 1e-8


class UsageError(Exception):
    """Bad flags, bad config values, or unusable inputs; exit code 2."""


class InvariantFailure(Exception):
    """A hard mathematical or reproducibility invariant broke; exit 1."""


# ---------------------------------------------------------------------------
# value parsers, shared between flags and config files


def _parse_int(text):
    try:
        n = int(str(text).strip())
    except ValueError:
        raise UsageError(f"expected an integer, got {text!r}")
    return n


def _parse_float(text):
    try:
        v = float(str(text).strip())
    except ValueError:
        raise UsageError(f"expected a number, got {text!r}")
    if not math.isfinite(v):
        raise UsageError(f"expected a finite number, got {text!r}")
    return v


def _parse_complex(text):
    """``re,im`` or a bare real part."""
    parts = str(text).split(",")
    if len(parts) == 1:
        return complex(_parse_float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(_parse_float(parts[0]), _parse_float(parts[1]))
    raise UsageError(f"--s wants 're' or 're,im', got {text!r}")


def _parse_ys(text):
    vals = tuple(_parse_float(p) for p in str(text).split(",") if p.strip())
    if not vals:
        raise UsageError("--y wants one or more comma separated values")
    if any(v <= 0.0 for v in vals):
        raise UsageError("--y values must be positive")
    return vals


def _parse_samples(text):
    """``log:COUNT:LO:HI`` or ``linear:COUNT:LO:HI``."""
    parts = str(text).split(":")
    if len(parts) != 4:
        raise UsageError(
            f"--samples wants kind:count:lo:hi, got {text!r}")
    kind = parts[0].strip().lower()
    if kind not in ("log", "linear"):
        raise UsageError(f"sample kind must be log or linear, got {kind!r}")
    count = _parse_int(parts[1])
    lo = _parse_float(parts[2])
    hi = _parse_float(parts[3])
    if count < 1:
        raise UsageError("sample count must be at least 1")
    if lo > hi:
        raise UsageError("sample range must satisfy lo <= hi")
    if kind == "log" and lo <= 0.0:
        raise UsageError("log sampling needs lo > 0")
    return (kind, count, lo, hi)


def _parse_weight(text):
    """``a:b:eta`` or ``a:b:eta:power``."""
    parts = str(text).split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"--weight wants a:b:eta[:power], got {text!r}")
    a = _parse_float(parts[0])
    b = _parse_float(parts[1])
    eta = _parse_float(parts[2])
    power = _parse_int(parts[3]) if len(parts) == 4 else 2
    if not 0.0 <= a < b:
        raise UsageError("--weight needs 0 <= a < b")
    if eta <= 0.0:
        raise UsageError("--weight needs eta > 0")
    if power < 2:
        raise UsageError("--weight power must be at least 2")
    return (a, b, eta, power)


_PARSERS = {
    "limit": _parse_int,
    "zeros": str,
    "count": _parse_int,
    "T": _parse_float,
    "d": _parse_int,
    "s": _parse_complex,
    "y": _parse_ys,
    "samples": _parse_samples,
    "weight": _parse_weight,
    "trials": _parse_int,
    "output": str,
    "format": str,
    "workers": _parse_int,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully merged and validated settings for one run."""

    command: str
    target: str | None = None
    limit: int | None = None
    zeros: str | None = None
    count: int | None = None
    T: float | None = None
    d: int | None = None
    s: complex | None = None
    y: tuple | None = None
    samples: tuple | None = None
    weight: tuple | None = None
    trials: int = 20
    output: str | None = None
    format: str = "csv"
    workers: int = 1


def _read_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    out = {}
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise UsageError(f"{path}:{ln}: unknown key {key!r}")
        out[key] = _PARSERS[key](value.strip())
    return out


def _make_config(args):
    """Merge flag values over config-file values over defaults."""
    file_cfg = _read_config_file(args.config) if getattr(
        args, "config", None) else {}
    merged = {}
    for key in _PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_cfg:
            merged[key] = file_cfg[key]
    if merged.get("count") is not None and merged.get("T") is not None:
        raise UsageError("give --count or --T, not both")
    fmt = merged.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {fmt!r}")
    merged["format"] = fmt
    merged.setdefault("trials", 20)
    merged.setdefault("workers", 1)
    cfg = RunConfig(command=args.command,
                    target=getattr(args, "target", None), **merged)
    _validate(cfg)
    return cfg


def _validate(cfg):
    """Fail fast on anything that would waste a long run."""
    if cfg.workers < 1:
        raise UsageError("--workers must be at least 1")
    if cfg.trials < 1:
        raise UsageError("--trials must be at least 1")
    if cfg.limit is not None and cfg.limit < 2:
        raise UsageError("--limit must be at least 2")
    if cfg.count is not None and cfg.count < 1:
        raise UsageError("--count must be at least 1")
    if cfg.T is not None and cfg.T < 1.0:
        raise UsageError("--T must be at least 1")
    if cfg.d is not None and cfg.d < 2:
        raise UsageError("--d must be at least 2")

    if cfg.command in ("sieve", "convolve") and cfg.limit is None:
        raise UsageError(f"{cfg.command} needs --limit")
    if cfg.command == "zeros-enrich" and cfg.zeros is None:
        raise UsageError("zeros-enrich needs --zeros")

    if cfg.command != "verify":
        return
    target = cfg.target
    if target in _NEED_ZEROS and cfg.zeros is None:
        raise UsageError(f"verify {target} needs --zeros")
    if target == "dirichlet":
        if cfg.s is None:
            raise UsageError("verify dirichlet needs --s re[,im]")
        if cfg.s.real <= 1.0:
            raise UsageError("verify dirichlet needs Re s > 1")
    if target == "exponential":
        ys = cfg.y or (0.1, 0.05, 0.02, 0.01)
        limit = cfg.limit or 10000
        if limit * min(ys) < 20.0:
            raise UsageError(
                f"exponential tails need limit*y >= 20; limit {limit} "
                f"with y={min(ys)} falls short")
    if target == "weighted":
        if cfg.weight is None:
            raise UsageError("verify weighted needs --weight a:b:eta[:power]")
        a, b, eta, _ = cfg.weight
        need = int(math.floor(eta * b)) + 1
        limit = cfg.limit or 10000
        if need > limit:
            raise UsageError(
                f"--weight reaches index {need}; raise --limit (now {limit})")
    if target in ("cesaro", "cesaro-mu") and cfg.d not in (None, 2):
        raise UsageError(f"verify {target} is the d=2 case; use dfold for "
                         "higher d")
    if cfg.samples is not None and cfg.limit is not None:
        if cfg.samples[3] > cfg.limit and target not in ("identity",
                                                         "weighted"):
            raise UsageError("sample range exceeds --limit")


# ---------------------------------------------------------------------------
# input loading and report plumbing


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_zeroset(cfg, inputs):
    path = cfg.zeros
    try:
        inputs[path] = _sha256_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read zeros file {path}: {exc}")
    if path.endswith(".npz"):
        zset = zeros.load_cache(path)
        if cfg.count is not None:
            if cfg.count > len(zset.gammas):
                raise UsageError(
                    f"--count {cfg.count} exceeds cached zeros "
                    f"({len(zset.gammas)})")
            zset = zeros.truncate(zset, count=cfg.count)
    else:
        ordinates = zeros.load_ordinates(path)
        if cfg.count is not None:
            if cfg.count > len(ordinates):
                raise UsageError(
                    f"--count {cfg.count} exceeds ordinates in {path} "
                    f"({len(ordinates)})")
            ordinates = ordinates[:cfg.count]
        zset = zeros.enrich(ordinates)
    if cfg.T is not None and cfg.T > zset.t_max:
        raise UsageError(
            f"--T {cfg.T} exceeds the largest loaded ordinate "
            f"{zset.t_max:.3f}")
    return zset


def _sample_grid(spec):
    kind, count, lo, hi = spec
    if count == 1:
        return np.array([lo], dtype=np.float64)
    if kind == "log":
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def _default_samples(target, limit):
    if target in ("L", "M"):
        return ("log", 50, 10.0, float(limit))
    if target in ("cesaro", "cesaro-mu"):
        return ("log", 40, max(10.0, limit / 1000.0), float(limit))
    return ("log", 20, max(10.0, limit / 100.0), float(limit))


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_report(path, fmt, command, target, columns, summary):
    names = list(columns)
    nrows = len(columns[names[0]]) if names else 0
    if fmt == "json":
        doc = {
            "command": command,
            "target": target,
            "columns": {k: list(v) for k, v in columns.items()},
            "summary": dict(summary),
        }
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        lines = [",".join(names)]
        for i in range(nrows):
            lines.append(",".join(_fmt(columns[k][i]) for k in names))
        lines.append("")
        lines.append("key,value")
        for key in sorted(summary):
            lines.append(f"{key},{_fmt(summary[key])}")
        text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(cfg, report_path, inputs, results=None):
    doc = {
        "command": cfg.command,
        "target": cfg.target,
        "config": {k: _jsonable(v) for k, v in asdict(cfg).items()},
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "liouconv": _package_version(),
        },
        "inputs": dict(sorted(inputs.items())),
    }
    try:
        import scipy
        doc["versions"]["scipy"] = scipy.__version__
    except ImportError:
        pass
    if report_path is not None:
        doc["report"] = {"path": str(report_path),
                         "sha256": _sha256_file(report_path)}
    if results is not None:
        doc["results"] = results
    path = str(report_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _package_version():
    try:
        from importlib.metadata import version
        return version("liouconv")
    except Exception:
        return "unknown"


def _breakdown_row(bd):
    return {
        "main_term": bd.main_term,
        "single_sum": bd.single_sum,
        "double_sum": bd.double_sum,
        "total": bd.total,
        "envelope": bd.envelope,
        "truncation_T": bd.truncation_T,
        "zeros_used": bd.zeros_used,
        "pair_terms": bd.pair_terms,
    }


def _check_realness(bd, failures, where):
    total = bd.total
    scale = 1.0 + (abs(total) if isinstance(total, float) else abs(total))
    if bd.imag_residue >= _IMAG_TOL * scale:
        failures.append(
            f"imaginary residue {bd.imag_residue:.3e} at {where} exceeds "
            f"{_IMAG_TOL:g}*(1+|total|)")
    return bd.imag_residue / scale


# ---------------------------------------------------------------------------
# verify targets


def _run_summatory(cfg, zset, inputs):
    kind = sieve.KIND_LIOUVILLE if cfg.target == "L" else sieve.KIND_MOEBIUS
    limit = cfg.limit or 10000
    table = sieve.build_sieve(kind, limit)
    grid = _sample_grid(cfg.samples or _default_samples(cfg.target, limit))
    cols = {k: [] for k in ("x", "direct", "main_term", "single_sum",
                            "double_sum", "total", "residual", "envelope",
                            "truncation_T", "zeros_used", "pair_terms")}
    failures = []
    residuals = []
    worst_imag = 0.0
    for x in grid:
        x = float(x)
        direct = sieve.summatory(table, x)
        bd = explicit.explicit_summatory(kind, x, zset, T=cfg.T,
                                         workers=cfg.workers)
        worst_imag = max(worst_imag,
                         _check_realness(bd, failures, f"x={x!r}"))
        resid = abs(direct - bd.total)
        residuals.append(resid)
        cols["x"].append(x)
        cols["direct"].append(direct)
        for key, val in _breakdown_row(bd).items():
            cols[key].append(val)
        cols["residual"].append(resid)
    summary = _residual_summary(residuals, cols, worst_imag)
    return cols, summary, failures


def _run_cesaro(cfg, zset, inputs):
    if cfg.target == "cesaro":
        kind, d = sieve.KIND_LIOUVILLE, 2
    elif cfg.target == "cesaro-mu":
        kind, d = sieve.KIND_MOEBIUS, 2
    else:
        kind, d = sieve.KIND_LIOUVILLE, (cfg.d or 3)
    limit = cfg.limit or 10000
    table = sieve.build_sieve(kind, limit)
    series = convolve.convolve_fft(table, d, limit)
    grid = _sample_grid(cfg.samples or _default_samples(cfg.target, limit))
    extrapolated = kind == sieve.KIND_MOEBIUS and d != 2
    cols = {k: [] for k in ("x", "direct", "main_term", "single_sum",
                            "double_sum", "total", "residual", "envelope",
                            "truncation_T", "zeros_used", "pair_terms")}
    failures = []
    residuals = []
    worst_imag = 0.0
    for x in grid:
        x = float(x)
        direct = convolve.cesaro_sum(series, x)
        bd = explicit.explicit_cesaro(kind, x, zset, T=cfg.T, d=d,
                                      workers=cfg.workers,
                                      extrapolated=extrapolated)
        worst_imag = max(worst_imag,
                         _check_realness(bd, failures, f"x={x!r}"))
        resid = abs(direct - bd.total)
        residuals.append(resid)
        cols["x"].append(x)
        cols["direct"].append(direct)
        for key, val in _breakdown_row(bd).items():
            cols[key].append(val)
        cols["residual"].append(resid)
    summary = _residual_summary(residuals, cols, worst_imag)
    return cols, summary, failures


def _run_dirichlet(cfg, zset, inputs):
    limit = cfg.limit or 10000
    table = sieve.build_sieve(sieve.KIND_LIOUVILLE, limit)
    series = convolve.convolve_fft(table, 2, limit)
    s = cfg.s
    direct = explicit.dirichlet_direct(series, s, limit)
    bd = explicit.dirichlet_explicit(sieve.KIND_LIOUVILLE, s, zset, T=cfg.T,
                                     workers=cfg.workers)
    failures = []
    if s.imag == 0.0:
        _check_realness(bd, failures, f"s={s.real!r}")
    resid = abs(direct - bd.total)
    cols = {
        "re_s": [s.real], "im_s": [s.imag],
        "direct_re": [direct.real], "direct_im": [direct.imag],
        "main_re": [complex(bd.main_term).real],
        "main_im": [complex(bd.main_term).imag],
        "single_re": [complex(bd.single_sum).real],
        "single_im": [complex(bd.single_sum).imag],
        "double_re": [complex(bd.double_sum).real],
        "double_im": [complex(bd.double_sum).imag],
        "total_re": [complex(bd.total).real],
        "total_im": [complex(bd.total).imag],
        "residual": [resid], "envelope": [bd.envelope],
        "truncation_T": [bd.truncation_T], "zeros_used": [bd.zeros_used],
        "pair_terms": [bd.pair_terms],
    }
    summary = {
        "rows": 1,
        "median_residual": resid,
        "max_residual": resid,
        "envelope_exceedances": int(resid > bd.envelope),
    }
    return cols, summary, failures


def _run_exponential(cfg, zset, inputs):
    limit = cfg.limit or 10000
    ys = cfg.y or (0.1, 0.05, 0.02, 0.01)
    table = sieve.build_sieve(sieve.KIND_LIOUVILLE, limit)
    series = convolve.convolve_fft(table, 2, limit)
    target_const = math.pi / (4.0 * specfun.zeta_half() ** 2)
    cols = {k: [] for k in ("y", "direct", "main_term", "single_sum",
                            "double_sum", "total", "residual", "envelope",
                            "deficit", "truncation_T", "zeros_used")}
    failures = []
    residuals = []
    worst_imag = 0.0
    for y in ys:
        y = float(y)
        direct = explicit.exponential_direct(series, y, limit)
        bd = explicit.exponential_explicit(sieve.KIND_LIOUVILLE, y, zset,
                                           T=cfg.T, workers=cfg.workers)
        worst_imag = max(worst_imag,
                         _check_realness(bd, failures, f"y={y!r}"))
        resid = abs(direct - bd.total)
        residuals.append(resid)
        deficit = abs(y * direct - target_const)
        cols["y"].append(y)
        cols["direct"].append(direct)
        cols["deficit"].append(deficit)
        for key, val in _breakdown_row(bd).items():
            if key == "pair_terms":
                continue
            cols[key].append(val)
        cols["residual"].append(resid)
    order = sorted(range(len(ys)), key=lambda i: -ys[i])
    deficits = [cols["deficit"][i] for i in order]
    monotone = all(b < a for a, b in zip(deficits, deficits[1:]))
    summary = _residual_summary(residuals, cols, worst_imag)
    summary["deficit_monotone"] = monotone
    summary["deficit_final"] = deficits[-1] if deficits else None
    return cols, summary, failures


def _run_weighted(cfg, zset, inputs):
    a, b, eta, power = cfg.weight
    d = cfg.d or 2
    limit = cfg.limit or 10000
    table = sieve.build_sieve(sieve.KIND_LIOUVILLE, limit)
    w = explicit.make_polynomial_weight(a, b, eta, power=power)
    direct = explicit.weighted_average_direct(sieve.KIND_LIOUVILLE, w, table,
                                              d=d)
    ident = explicit.weighted_average_rhs(sieve.KIND_LIOUVILLE, w, table,
                                          d=d, mode="exact-identity")
    rel = abs(direct - ident) / max(1.0, abs(direct))
    failures = []
    if rel > _REL_IDENTITY_TOL:
        failures.append(
            f"exact identity residual {rel:.3e} exceeds "
            f"{_REL_IDENTITY_TOL:g}")
    cols = {
        "a": [a], "b": [b], "eta": [eta], "power": [power], "d": [d],
        "direct": [direct], "identity_rhs": [ident],
        "identity_rel_residual": [rel],
    }
    summary = {
        "rows": 1,
        "identity_rel_residual": rel,
        "identity_ok": rel <= _REL_IDENTITY_TOL,
    }
    if zset is not None:
        bd = explicit.weighted_average_rhs(sieve.KIND_LIOUVILLE, w, table,
                                           zs=zset, d=d,
                                           mode="explicit-formula",
                                           T=cfg.T, workers=cfg.workers)
        worst = _check_realness(bd, failures, "weighted run")
        resid = abs(direct - bd.total)
        for key, val in _breakdown_row(bd).items():
            cols[key] = [val]
        cols["residual"] = [resid]
        summary["max_residual"] = resid
        summary["median_residual"] = resid
        summary["max_relative_imag"] = worst
        summary["envelope_exceedances"] = int(resid > bd.envelope)
    return cols, summary, failures


def _run_identity(cfg, inputs):
    limit = cfg.limit or 4096
    trials = cfg.trials
    rng = np.random.default_rng(_IDENTITY_SEED)
    tables = {}
    cols = {k: [] for k in ("trial", "kind", "d", "a", "b", "eta", "power",
                            "direct", "rhs", "residual", "rel_residual")}
    failures = []
    rels = []
    for t in range(trials):
        kind = (sieve.KIND_LIOUVILLE, sieve.KIND_MOEBIUS)[t % 2]
        d = cfg.d or 2 + ((t // 2) % 2)
        shape = t % 3
        if shape == 0:
            a = 0.0
        elif shape == 1:
            a = float(rng.uniform(0.05, 0.9))   # keeps eta*a below 1
        else:
            a = float(rng.uniform(1.0, 4.0))    # boundary term in play
        b = a + float(rng.uniform(1.0, 3.0))
        eta_hi = (limit - 2) / b
        eta = float(rng.uniform(min(10.0, eta_hi / 2), min(60.0, eta_hi)))
        power = int(rng.integers(2, 5))
        if kind not in tables:
            tables[kind] = sieve.build_sieve(kind, limit)
        w = explicit.make_polynomial_weight(a, b, eta, power=power)
        direct = explicit.weighted_average_direct(kind, w, tables[kind], d=d)
        rhs = explicit.weighted_average_rhs(kind, w, tables[kind], d=d,
                                            mode="exact-identity")
        rel = abs(direct - rhs) / max(1.0, abs(direct))
        rels.append(rel)
        if rel > _REL_IDENTITY_TOL:
            failures.append(
                f"trial {t} ({kind}, d={d}): relative residual {rel:.3e}")
        cols["trial"].append(t)
        cols["kind"].append(kind)
        cols["d"].append(d)
        cols["a"].append(a)
        cols["b"].append(b)
        cols["eta"].append(eta)
        cols["power"].append(power)
        cols["direct"].append(direct)
        cols["rhs"].append(rhs)
        cols["residual"].append(abs(direct - rhs))
        cols["rel_residual"].append(rel)
    summary = {
        "rows": trials,
        "median_rel_residual": float(np.median(rels)),
        "max_rel_residual": float(np.max(rels)),
        "identity_ok": not failures,
    }
    return cols, summary, failures


def _residual_summary(residuals, cols, worst_imag):
    arr = np.asarray(residuals, dtype=np.float64)
    env = np.asarray(cols["envelope"], dtype=np.float64)
    return {
        "rows": int(arr.size),
        "median_residual": float(np.median(arr)) if arr.size else None,
        "max_residual": float(np.max(arr)) if arr.size else None,
        "envelope_exceedances": int(np.sum(arr > env)) if arr.size else 0,
        "max_relative_imag": worst_imag,
    }


def _cmd_verify(cfg):
    inputs = {}
    zset = None
    if cfg.zeros is not None:
        zset = _load_zeroset(cfg, inputs)
    if cfg.target in ("L", "M"):
        cols, summary, failures = _run_summatory(cfg, zset, inputs)
    elif cfg.target in ("cesaro", "cesaro-mu", "dfold"):
        cols, summary, failures = _run_cesaro(cfg, zset, inputs)
    elif cfg.target == "dirichlet":
        cols, summary, failures = _run_dirichlet(cfg, zset, inputs)
    elif cfg.target == "exponential":
        cols, summary, failures = _run_exponential(cfg, zset, inputs)
    elif cfg.target == "weighted":
        cols, summary, failures = _run_weighted(cfg, zset, inputs)
    else:
        cols, summary, failures = _run_identity(cfg, inputs)
    report = cfg.output or f"verify-{cfg.target}-report.{cfg.format}"
    _write_report(report, cfg.format, cfg.command, cfg.target, cols, summary)
    manifest = _write_manifest(cfg, report, inputs)
    med = summary.get("median_residual", summary.get("median_rel_residual"))
    print(f"verify {cfg.target}: {summary['rows']} rows, "
          f"median {_fmt(med)} -> {report} (+ {manifest})")
    if failures:
        for line in failures:
            print(f"invariant failure: {line}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# the non-verify commands


def _cmd_sieve(cfg):
    kind = sieve.KIND_LIOUVILLE
    table = sieve.build_sieve(kind, cfg.limit)
    out = cfg.output or "sieve-table.npz"
    sieve.dump_table(table, out)
    growth = sieve.growth_diagnostic(table)
    manifest = _write_manifest(
        cfg, out, {},
        results={"kind": kind, "limit": cfg.limit,
                 "summatory_at_limit": int(table.prefix[cfg.limit]),
                 "growth_diagnostic": growth})
    print(f"sieve: {kind} up to {cfg.limit}, prefix[{cfg.limit}] = "
          f"{int(table.prefix[cfg.limit])} -> {out} (+ {manifest})")
    return 0


def _cmd_convolve(cfg):
    d = cfg.d or 2
    table = sieve.build_sieve(sieve.KIND_LIOUVILLE, cfg.limit)
    series = convolve.convolve_fft(table, d, cfg.limit)
    out = cfg.output or f"convolution-d{d}.csv"
    convolve.export_csv(series, out)
    digest = hashlib.sha256(series.values.tobytes()).hexdigest()
    manifest = _write_manifest(
        cfg, out, {},
        results={"kind": series.kind, "d": d, "limit": cfg.limit,
                 "method": series.method, "values_sha256": digest})
    print(f"convolve: d={d} up to {cfg.limit} via {series.method} "
          f"-> {out} (+ {manifest})")
    return 0


def _cmd_zeros_enrich(cfg):
    inputs = {}
    try:
        inputs[cfg.zeros] = _sha256_file(cfg.zeros)
    except OSError as exc:
        raise UsageError(f"cannot read zeros file {cfg.zeros}: {exc}")
    ordinates = zeros.load_ordinates(cfg.zeros)
    if cfg.count is not None:
        if cfg.count > len(ordinates):
            raise UsageError(
                f"--count {cfg.count} exceeds ordinates available "
                f"({len(ordinates)})")
        ordinates = ordinates[:cfg.count]
    zset = zeros.enrich(ordinates)
    out = cfg.output or "zeros-cache.npz"
    if out.endswith(".csv"):
        zeros.export_csv(zset, out)
    else:
        zeros.save_cache(zset, out)
    manifest = _write_manifest(
        cfg, out, inputs,
        results={"count": len(zset.gammas), "t_max": zset.t_max})
    print(f"zeros-enrich: {len(zset.gammas)} zeros, t_max "
          f"{zset.t_max:.6f} -> {out} (+ {manifest})")
    return 0


def _cmd_bench(cfg):
    limit = cfg.limit or (1 << 18)
    failures = []
    results = {"machine": platform.platform(),
               "processor": platform.machine(),
               "python": platform.python_version()}

    t0 = time.perf_counter()
    table = sieve.build_sieve(sieve.KIND_LIOUVILLE, limit)
    dt = time.perf_counter() - t0
    results["sieve_limit"] = limit
    results["sieve_seconds"] = dt
    results["sieve_entries_per_second"] = limit / dt if dt > 0 else None

    t0 = time.perf_counter()
    fast = convolve.convolve_fft(table, 2, limit)
    t_fft = time.perf_counter() - t0
    t0 = time.perf_counter()
    slow = convolve.convolve_naive(table, 2, limit)
    t_naive = time.perf_counter() - t0
    results["convolve_d2_limit"] = limit
    results["convolve_d2_fft_seconds"] = t_fft
    results["convolve_d2_naive_seconds"] = t_naive
    results["convolve_d2_speedup"] = t_naive / t_fft if t_fft > 0 else None
    if not np.array_equal(fast.values, slow.values):
        failures.append("d=2 convolution methods disagree")
    # tiny inputs sit below the FFT crossover, so only meaningfully
    # sized runs carry the speed assertion
    if limit >= 4096 and t_fft >= t_naive:
        failures.append(
            f"FFT convolution ({t_fft:.3f}s) not faster than naive "
            f"({t_naive:.3f}s) at limit {limit}")

    hash_limit = min(limit, 1 << 14)
    sub = sieve.build_sieve(sieve.KIND_LIOUVILLE, hash_limit)
    h_fft = hashlib.sha256(
        convolve.convolve_fft(sub, 3, hash_limit).values.tobytes()).hexdigest()
    h_naive = hashlib.sha256(
        convolve.convolve_naive(sub, 3,
                                hash_limit).values.tobytes()).hexdigest()
    results["d3_hash_limit"] = hash_limit
    results["d3_fft_sha256"] = h_fft
    results["d3_naive_sha256"] = h_naive
    if h_fft != h_naive:
        failures.append(f"d=3 output hashes differ at limit {hash_limit}")

    report = cfg.output or f"bench-report.{cfg.format}"
    cols = {"metric": list(results), "value": [results[k] for k in results]}
    summary = {"hard_failures": len(failures)}
    _write_report(report, cfg.format, "bench", None, cols, summary)
    manifest = _write_manifest(cfg, report, {}, results=results)
    print(f"bench: limit {limit}, fft {t_fft:.3f}s vs naive {t_naive:.3f}s "
          f"-> {report} (+ {manifest})")
    if failures:
        for line in failures:
            print(f"invariant failure: {line}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(sp, *names):
    flags = {
        "limit": (("--limit",), {"type": _parse_int,
                                 "help": "sieve/series length"}),
        "zeros": (("--zeros",), {"help": "zero ordinates file or .npz cache"}),
        "count": (("--count",), {"type": _parse_int,
                                 "help": "number of zeros to keep"}),
        "T": (("--T",), {"type": _parse_float, "dest": "T",
                         "help": "ordinate cutoff for the zero sums"}),
        "d": (("--d",), {"type": _parse_int, "help": "convolution order"}),
        "s": (("--s",), {"type": _parse_complex,
                         "help": "complex point 're,im'"}),
        "y": (("--y",), {"type": _parse_ys,
                         "help": "comma separated decay parameters"}),
        "samples": (("--samples",), {"type": _parse_samples,
                                     "help": "grid spec kind:count:lo:hi"}),
        "weight": (("--weight",), {"type": _parse_weight,
                                   "help": "weight spec a:b:eta[:power]"}),
        "trials": (("--trials",), {"type": _parse_int,
                                   "help": "randomized trial count"}),
        "output": (("--output",), {"help": "report/artifact path"}),
        "format": (("--format",), {"choices": ("csv", "json"),
                                   "help": "report format"}),
        "workers": (("--workers",), {"type": _parse_int,
                                     "help": "worker pool size"}),
        "config": (("--config",), {"help": "key=value defaults file"}),
    }
    for name in names:
        args, kwargs = flags[name]
        sp.add_argument(*args, **kwargs)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="liouconv",
        description="sign-sum convolutions against zeta-zero formulas")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sieve", help="build and dump a sign table")
    _add_common(sp, "limit", "output", "format", "workers", "config")

    sp = sub.add_parser("convolve", help="build the d-fold series")
    _add_common(sp, "limit", "d", "output", "format", "workers", "config")

    sp = sub.add_parser("zeros-enrich",
                        help="enrich zero ordinates and cache them")
    _add_common(sp, "zeros", "count", "output", "format", "config")

    sp = sub.add_parser("verify",
                        help="compare direct sums with truncated formulas")
    sp.add_argument("target", choices=_VERIFY_TARGETS)
    _add_common(sp, "limit", "zeros", "count", "T", "d", "s", "y", "samples",
                "weight", "trials", "output", "format", "workers", "config")

    sp = sub.add_parser("bench", help="timing and cross-method checks")
    _add_common(sp, "limit", "output", "format", "workers", "config")
    return parser


def _dispatch(cfg):
    if cfg.command == "sieve":
        return _cmd_sieve(cfg)
    if cfg.command == "convolve":
        return _cmd_convolve(cfg)
    if cfg.command == "zeros-enrich":
        return _cmd_zeros_enrich(cfg)
    if cfg.command == "verify":
        return _cmd_verify(cfg)
    return _cmd_bench(cfg)


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
        cfg = _make_config(args)
        return _dispatch(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
