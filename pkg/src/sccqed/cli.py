"""Command-line entry point: ``sccqed <command> CONFIG [--set key=value ...]``.

Commands: verify, resonance, gate, simulate, sweep.  Output goes to
``output.path`` ('-' is stdout) as CSV or JSON.  Exit codes: 0 success,
1 validation error, 2 numerical failure, 3 no result.  Every failure also
writes one JSON error record to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bosonic import TruncationError
from .cat_frame import BLOCK_ORDER, cat_basis
from .config import ConfigError, RunConfig, dump_config, parse_config
from .model import dressed_basis
from .propagator import (IntegrationBudgetExceeded, IntegrationError, RegimeError, compare_rwa,
                         integrate, populations)
from .rwa import NoResonanceError, find_resonances, resonance_at, rwa_reduce, solve_resonance
from .spin import all_labels

__all__ = ["main", "run", "EXIT_OK", "EXIT_VALIDATION", "EXIT_NUMERICAL", "EXIT_NO_RESULT",
           "SCHEMA_VERSION", "WORKERS_ENV"]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_NO_RESULT = 0, 1, 2, 3
SCHEMA_VERSION = 1
WORKERS_ENV = "SCCQED_WORKERS"

RESONANCE_COLUMNS = ("n", "alpha", "omega2", "gamma2", "residual", "E_plus", "E_minus",
                     "mu_plus", "nu_plus", "mu_minus", "nu_minus", "rabi_rate")
GATE_COLUMNS = ("quantity", "t", "row", "col", "value_re", "value_im")
VERIFY_COLUMNS = ("check", "residual", "tolerance", "passed", "skipped", "detail")
SWEEP_COLUMNS = ("index", "param", "value", "status", "n_roots", "omega2", "gamma2",
                 "residual", "rabi_rate")


class CliError(Exception):
    def __init__(self, code, kind, message, details=None):
        super().__init__(message)
        self.code, self.kind, self.details = code, kind, details or []


def _num(v):
    """17 significant digits, '.' separator; integers and strings unchanged."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class Result:
    """Rows plus extra records for one command."""

    def __init__(self, command, columns, rows, code=EXIT_OK, records=(), meta=None):
        self.command, self.columns, self.rows = command, tuple(columns), list(rows)
        self.code, self.records, self.meta = code, list(records), meta or {}

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_num(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def json(self, cfg: RunConfig) -> str:
        doc = {"schema": f"sccqed.{self.command}", "version": SCHEMA_VERSION,
               "config": dump_config(cfg), "columns": list(self.columns),
               "rows": [{c: r.get(c) for c in self.columns} for r in self.rows],
               "records": self.records, "meta": self.meta}
        return json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n"


# -- commands -----------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> Result:
    from .invariants import run_invariant_suite
    alpha = cfg.resonance.alphas[0]
    checks = run_invariant_suite(cfg.model, cfg.truncation, cfg.resonance.n, alpha)
    rows = [c.as_dict() for c in checks]
    failed = [c.name for c in checks if not c.passed]
    return Result("verify", VERIFY_COLUMNS, rows, EXIT_NUMERICAL if failed else EXIT_OK,
                  meta={"failed": failed, "all_passed": not failed})


def _resonance_row(sol, params):
    gate = rwa_reduce(sol.n, params, sol, warn=False)
    sp, sm = sol.spectral_plus, sol.spectral_minus
    return {"n": sol.n, "alpha": sol.alpha_harmonic, "omega2": sol.omega2, "gamma2": sol.gamma2,
            "residual": sol.residual, "E_plus": sol.E_plus, "E_minus": sol.E_minus,
            "mu_plus": sp.eigenvalue("mu"), "nu_plus": sp.eigenvalue("nu"),
            "mu_minus": sm.eigenvalue("mu"), "nu_minus": sm.eigenvalue("nu"),
            "rabi_rate": gate.rabi_rate}


def _search_kwargs(cfg):
    r = cfg.resonance
    return dict(omega2_min=r.omega2_min, omega2_max=r.omega2_max, channel=r.channel,
                gamma_max=r.gamma_max)


def cmd_resonance(cfg: RunConfig) -> Result:
    _need_m2(cfg)
    rows, records = [], []
    for alpha in cfg.resonance.alphas:
        try:
            sols = find_resonances(cfg.resonance.n, cfg.model, alpha, **_search_kwargs(cfg))
        except NoResonanceError as exc:
            records.append({"alpha": alpha, "kind": "no_root", "message": str(exc)})
            continue
        if not sols:
            records.append({"alpha": alpha, "kind": "no_root",
                            "message": "no sign change of the resonance condition in the bracket"})
        rows.extend(_resonance_row(s, cfg.model) for s in sols)
    return Result("resonance", RESONANCE_COLUMNS, rows,
                  EXIT_OK if rows else EXIT_NO_RESULT, records)


def _select(cfg):
    r = cfg.resonance
    alpha = r.alphas[0]
    if cfg.gate.omega2 is not None:
        return resonance_at(r.n, cfg.model, alpha, cfg.gate.omega2, r.channel)
    sel = r.select if r.select in ("strongest", "lowest", "highest") else int(r.select)
    try:
        return solve_resonance(r.n, cfg.model, alpha, sel, **_search_kwargs(cfg))
    except IndexError:
        raise CliError(EXIT_NO_RESULT, "no_root", f"resonance.select={r.select} is out of range")


def _matrix_rows(name, t, M):
    return [{"quantity": name, "t": t, "row": i, "col": j,
             "value_re": float(np.real(M[i, j])), "value_im": float(np.imag(M[i, j]))}
            for i in range(M.shape[0]) for j in range(M.shape[1])]


def cmd_gate(cfg: RunConfig) -> Result:
    _need_m2(cfg)
    _need_regime(cfg)
    sol = _select(cfg)
    params = sol.apply(cfg.model)
    gate = rwa_reduce(sol.n, params, sol, warn=False)
    rows = [{"quantity": "rabi_rate", "row": 0, "col": 0, "value_re": gate.rabi_rate,
             "value_im": 0.0},
            {"quantity": "omega2", "row": 0, "col": 0, "value_re": sol.omega2, "value_im": 0.0}]
    rows += _matrix_rows("K", None, gate.K)
    for t in cfg.gate.times:
        rows += _matrix_rows("U", t, gate.gate(t))
    records = []
    if cfg.gate.compare:
        try:
            rep = compare_rwa(cfg.model, sol, sol.n, cfg.gate.periods, cfg.truncation,
                              samples=cfg.gate.samples, tol=cfg.simulate.tol,
                              n_keep=cfg.gate.n_keep, max_wall_time=cfg.gate.max_wall_time)
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, "comparison", str(exc))
        for k, v in rep.summary().items():
            rows.append({"quantity": k, "row": 0, "col": 0, "value_re": float(v), "value_im": 0.0})
    meta = {"basis_order": [f"Phi{k + 1}" for k in BLOCK_ORDER]}
    return Result("gate", GATE_COLUMNS, rows, EXIT_OK, records, meta)


def _initial_state(cfg):
    parts = cfg.simulate.initial.split(":")
    p, tr = cfg.model, cfg.truncation
    n = int(parts[2]) if len(parts) == 3 else 0
    if n >= tr.trusted:
        raise CliError(EXIT_VALIDATION, "validation", f"initial Fock level {n} is in the buffer",
                       [{"key": "simulate.initial", "line": None, "message": "n >= dim - buffer"}])
    if parts[0] == "cat":
        return cat_basis(n, p, tr)[int(parts[1]) - 1].vector, n
    basis = dressed_basis(p, tr)
    return basis.vectors[:, int(parts[1]) * basis.n_keep + n].copy(), n


def cmd_simulate(cfg: RunConfig) -> Result:
    s, p, tr = cfg.simulate, cfg.model, cfg.truncation
    psi0, n = _initial_state(cfg)
    t_eval = np.linspace(s.t_start, s.t_end, s.samples)
    traj = integrate(p, tr, psi0, (s.t_start, s.t_end), s.tol, t_eval=t_eval, frame=s.frame)
    if p.m == 2:
        names = [f"pop_Phi{k}" for k in range(1, 5)]
        vecs = [c.vector for c in cat_basis(n, p, tr)]
    else:
        basis = dressed_basis(p, tr)
        names = [f"pop_L{lab.index}" for lab in all_labels(p.m)]
        vecs = [basis.vectors[:, lab.index * basis.n_keep + n] for lab in all_labels(p.m)]
    pops = populations(traj, vecs)
    norms = np.linalg.norm(traj.states, axis=1)
    rows = []
    for k, t in enumerate(traj.times):
        row = {"t": t, "norm": norms[k]}
        row.update({name: pops[k, i] for i, name in enumerate(names)})
        rows.append(row)
    meta = {"norm_drift": traj.norm_drift, "renormalizations": [list(r) for r in traj.renormalizations],
            "fock_level": n}
    return Result("simulate", ("t", "norm", *names), rows, EXIT_OK, meta=meta)


def _sweep_point(args):
    text, key, value, alphas = args
    cfg = parse_config(text, [f"{key}={value!r}"])
    select = cfg.resonance.select
    row = {"param": key, "value": value, "status": "ok", "n_roots": 0}
    try:
        roots = []
        for alpha in alphas:
            roots += find_resonances(cfg.resonance.n, cfg.model, alpha, **_search_kwargs(cfg))
    except NoResonanceError:
        roots = []
    except (ValueError, TruncationError) as exc:
        row["status"] = f"error: {exc}"
        return row
    row["n_roots"] = len(roots)
    if not roots:
        row["status"] = "no_root"
        return row
    if select == "strongest":
        best = max(roots, key=lambda s: abs(rwa_reduce(s.n, cfg.model, s, warn=False).rabi_rate))
    elif select in ("lowest", "highest"):
        best = min(roots, key=lambda s: s.omega2 if select == "lowest" else -s.omega2)
    else:
        k = int(select)
        if not -len(roots) <= k < len(roots):
            row["status"] = "no_root"
            return row
        best = roots[k]
    r = _resonance_row(best, cfg.model)
    row.update({k: r[k] for k in ("omega2", "gamma2", "residual", "rabi_rate")})
    return row


def _workers():
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise CliError(EXIT_VALIDATION, "validation", f"{WORKERS_ENV} must be an integer")
        if n < 1:
            raise CliError(EXIT_VALIDATION, "validation", f"{WORKERS_ENV} must be >= 1")
        return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def cmd_sweep(cfg: RunConfig) -> Result:
    _need_m2(cfg)
    sw = cfg.sweep
    missing = [k for k in ("start", "stop") if getattr(sw, k) is None]
    if missing:
        raise CliError(EXIT_VALIDATION, "validation", "sweep range incomplete",
                       [{"key": f"sweep.{k}", "line": None, "message": "missing required key"}
                        for k in missing])
    text = dump_config(cfg)
    # validate every point before launching work
    for v in sw.values():
        parse_config(text, [f"{sw.param}={v!r}"])
    jobs = [(text, sw.param, v, cfg.resonance.alphas) for v in sw.values()]
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    for i, r in enumerate(rows):
        r["index"] = i
    return Result("sweep", SWEEP_COLUMNS, rows, EXIT_OK)


COMMANDS = {"verify": cmd_verify, "resonance": cmd_resonance, "gate": cmd_gate,
            "simulate": cmd_simulate, "sweep": cmd_sweep}


def _need_m2(cfg):
    if cfg.model.m != 2:
        raise CliError(EXIT_VALIDATION, "validation", "this command needs model.m = 2",
                       [{"key": "model.m", "line": None, "message": "must be 2"}])


def _need_regime(cfg):
    p = cfg.model
    if not p.strong_coupling:
        ratio = p.g1 / abs(p.delta) if p.delta else math.inf
        raise CliError(EXIT_VALIDATION, "regime",
                       f"g1/|Delta| = {ratio:.6g} below the strong-coupling threshold "
                       f"{p.strong_ratio:g}",
                       [{"key": "model.g1", "line": None, "message": "g1 / |delta| too small"}])


# -- driver -------------------------------------------------------------------

def _error_record(command, err: CliError) -> str:
    rec = {"schema": "sccqed.error", "version": SCHEMA_VERSION, "command": command,
           "exit_code": err.code, "kind": err.kind, "message": str(err), "details": err.details}
    return json.dumps(_jsonable(rec), sort_keys=True)


def run(command, cfg: RunConfig) -> Result:
    """Run a command and translate library failures into CliError."""
    try:
        return COMMANDS[command](cfg)
    except CliError:
        raise
    except ConfigError as exc:
        raise CliError(EXIT_VALIDATION, "validation", str(exc), exc.records())
    except RegimeError as exc:
        raise CliError(EXIT_VALIDATION, "regime", str(exc))
    except NoResonanceError as exc:
        raise CliError(EXIT_NO_RESULT, "no_root", str(exc))
    except IntegrationBudgetExceeded as exc:
        raise CliError(EXIT_NUMERICAL, "budget", str(exc))
    except IntegrationError as exc:
        raise CliError(EXIT_NUMERICAL, "integration", str(exc),
                       [{"t_fail": exc.t_fail}])
    except TruncationError as exc:
        raise CliError(EXIT_VALIDATION, "truncation", str(exc))
    except (FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        raise CliError(EXIT_NUMERICAL, "numerical", f"{type(exc).__name__}: {exc}")
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, "validation", str(exc))


def _parser():
    ap = argparse.ArgumentParser(prog="sccqed", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="configuration file ('-' reads stdin)")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override one configuration key (repeatable; wins over the file)")
    ap.add_argument("--output", help="shorthand for --set output.path=...")
    ap.add_argument("--format", choices=("csv", "json"), help="shorthand for --set output.format=...")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.output is not None:
        overrides.append(f"output.path={args.output}")
    if args.format is not None:
        overrides.append(f"output.format={args.format}")
    try:
        try:
            text = sys.stdin.read() if args.config == "-" else open(args.config).read()
        except OSError as exc:
            raise CliError(EXIT_VALIDATION, "validation", f"cannot read config: {exc}")
        try:
            cfg = parse_config(text, overrides)
        except ConfigError as exc:
            raise CliError(EXIT_VALIDATION, "validation", "invalid configuration", exc.records())
        result = run(args.command, cfg)
    except CliError as err:
        print(_error_record(args.command, err), file=sys.stderr)
        return err.code
    payload = result.json(cfg) if cfg.output.format == "json" else result.csv()
    if cfg.output.path == "-":
        try:
            sys.stdout.write(payload)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stderr.close()
            return result.code
    else:
        with open(cfg.output.path, "w", newline="") as fh:
            fh.write(payload)
    if result.code != EXIT_OK:
        kind = "checks_failed" if args.command == "verify" else "no_result"
        msg = (f"failed checks: {', '.join(result.meta.get('failed', []))}"
               if args.command == "verify" else "command produced no rows")
        print(_error_record(args.command, CliError(result.code, kind, msg, result.records)),
              file=sys.stderr)
    return result.code


if __name__ == "__main__":
    sys.exit(main())
