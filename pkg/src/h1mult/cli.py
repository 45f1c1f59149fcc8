"""Command-line driver: run one experiment, cache its envelope, write reports.

Every run is described by a :class:`RunConfig`. Its hash (over command,
parameters and seed) names the cached :class:`ResultEnvelope`; rerunning
the same configuration returns the stored envelope unchanged.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
from filelock import FileLock

from . import coeffs, hankel, shiftmul, torus, witness
from .errors import (
    CacheError,
    ChecksumMismatch,
    ComputationError,
    H1MultError,
    IoError,
    NotFound,
    SchemaError,
    ValidationError,
)
from .formats import (
    load_json,
    matrix_from_json,
    multiplier_from_json,
    poly_from_json,
    seq_to_json,
)

__all__ = [
    "COMMANDS",
    "THREADS_ENV",
    "RunConfig",
    "ResultEnvelope",
    "run_command",
    "cache_io",
    "build_parser",
    "main",
]

THREADS_ENV = "H1MULT_THREADS"
COMMANDS = ("gamma2", "dyadic", "maximal", "cq", "witness", "separation",
            "vncheck", "certify")

_INT_LIST = {"anyOf": [{"type": "integer"},
                       {"type": "array", "items": {"type": "integer"}, "minItems": 1}]}
_OBJ = {"type": "object"}

PARAMS_SCHEMA = {
    "type": "object",
    "properties": {
        "K": _INT_LIST,
        "q": _INT_LIST,
        "grid": {"type": "integer", "minimum": 2},
        "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-2},
        "matrix": _OBJ,
        "phi": _OBJ,
        "x": _OBJ,
        "family": {"type": "array", "items": _OBJ},
        "count": {"type": "integer", "minimum": 1, "maximum": 100000},
        "maxDegree": {"type": "integer", "minimum": 0, "maximum": 256},
        "maxDim": {"type": "integer", "minimum": 1, "maximum": coeffs.DIM_CAP},
        "horizon": {"type": "integer", "minimum": 1, "maximum": 100000},
        "method": {"enum": ["auto", "barrier", "pathfollow"]},
        "sdpMaxK": {"type": "integer", "minimum": 0, "maximum": 4},
        "sdpCap": {"type": "integer", "minimum": 2, "maximum": hankel.SDP_CAP},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "params": PARAMS_SCHEMA,
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "cache": {"enum": ["use", "recompute"]},
    },
    "required": ["command"],
    "additionalProperties": False,
}

_REQUIRED = {
    "gamma2": ("matrix",),
    "dyadic": ("phi",),
    "maximal": ("phi", "x"),
    "witness": ("K",),
    "certify": ("matrix",),
}

PROVENANCE = {
    "gamma2": "two-fold multiplier norm equals gamma_2 of the Hankel matrix; SDP with dual witness",
    "dyadic": "dyadic block factorization bound (2 sqrt 2 + 1) C + |phi(0)|, statement constant 4",
    "maximal": "shift-maximal inequality for the sup over shifted multipliers",
    "cq": "C(q) bounds, rotated Dirichlet family below and sqrt(q) above",
    "witness": "witness phi_K from blocks z^(2^(2p)) F_p scaled by 1/4",
    "separation": "sqrt(q) separation of three-fold and two-fold norms via phi_K",
    "vncheck": "von Neumann inequality ||P(T)|| <= sup |P| for contractions",
    "certify": "power-bound certification sup ||T^n|| <= c with submultiplicative tail",
}


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass(frozen=True)
class RunConfig:
    """One experiment: command, parameters, seed, output location, cache policy."""

    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str = "h1mult-out"
    cache: str = "use"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            jsonschema.validate(d, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaError(f"config: {exc.message}") from None
        return cls(d["command"], dict(d.get("params", {})), int(d.get("seed", 0)),
                   d.get("out", "h1mult-out"), d.get("cache", "use"))

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "out": self.out_dir, "cache": self.cache}

    def canonical(self) -> dict:
        """The part of the configuration that determines the payload."""
        return {"command": self.command, "params": self.params, "seed": self.seed}

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(_canonical_json(self.canonical()).encode()).hexdigest()

    def validate(self) -> None:
        try:
            jsonschema.validate(self.to_dict(), CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SchemaError(f"config: {exc.message}") from None
        for key in _REQUIRED.get(self.command, ()):
            if key not in self.params:
                raise SchemaError(f"command {self.command!r} needs parameter {key!r}")
        for key in ("K", "q"):
            vals = self.params.get(key)
            if vals is not None and any(v < 1 for v in _as_list(vals)):
                raise SchemaError(f"{key} values must be positive")


@dataclass(frozen=True)
class ResultEnvelope:
    config_hash: str
    config: dict
    created: str
    finished: str
    payload: dict
    provenance: str
    checksum: str
    artifacts: tuple = ()

    def to_json(self) -> dict:
        return {"configHash": self.config_hash, "config": self.config,
                "created": self.created, "finished": self.finished,
                "payload": self.payload, "provenance": self.provenance,
                "checksum": self.checksum, "artifacts": list(self.artifacts)}

    @classmethod
    def from_json(cls, d: dict) -> "ResultEnvelope":
        return cls(d["configHash"], d["config"], d["created"], d["finished"], d["payload"],
                   d["provenance"], d["checksum"], tuple(d.get("artifacts", ())))


def payload_checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical_json(payload).encode()).hexdigest()


def _cache_dir(out_dir) -> Path:
    return Path(out_dir) / "cache"


def cache_io(item, direction: str, out_dir="h1mult-out"):
    """Store an envelope (returns its path) or load one by config hash.

    ``item`` is a :class:`ResultEnvelope` for ``"store"`` and a config hash
    for ``"load"``. Loading verifies the payload checksum.
    """
    cdir = _cache_dir(out_dir)
    try:
        cdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create cache directory {cdir}: {exc}") from None
    lock = FileLock(str(cdir / ".lock"))
    with lock:
        if direction == "store":
            path = cdir / f"{item.config_hash}.json"
            try:
                path.write_text(json.dumps(item.to_json(), indent=1, sort_keys=True) + "\n")
            except OSError as exc:
                raise IoError(f"cannot write {path}: {exc}") from None
            return path
        if direction == "load":
            path = cdir / f"{item}.json"
            if not path.exists():
                raise NotFound(f"no cached envelope for hash {item}")
            try:
                env = ResultEnvelope.from_json(json.loads(path.read_text()))
            except (OSError, ValueError, KeyError) as exc:
                raise IoError(f"cannot read {path}: {exc}") from None
            if payload_checksum(env.payload) != env.checksum:
                raise ChecksumMismatch(f"payload checksum mismatch in {path}")
            return env
    raise ValidationError(f"direction must be 'store' or 'load', not {direction!r}")


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _grid_default(deg, over=64):
    return max(64, torus.next_power_of_two(over * (deg + 1)))


def _cmd_gamma2(params, seed):
    A = matrix_from_json(params["matrix"])
    cert = hankel.gamma2_sdp(A, tol=params.get("tol", 1e-6),
                             method=params.get("method", "auto"),
                             cap=params.get("sdpCap", hankel.SDP_CAP))
    return {"rows": A.shape[0], "cols": A.shape[1], **cert.to_json()}


def _cmd_dyadic(params, seed):
    phi = multiplier_from_json(params["phi"])
    d = hankel.dyadic_upper(phi)
    return {"supportMax": phi.support_max, "blockSup": d.block_sup, "phi0": d.phi0,
            "statementBound": d.statement_bound, "proofBound": d.proof_bound,
            "twoNormProxy": d.two_norm_proxy}


def _cmd_maximal(params, seed):
    phi = multiplier_from_json(params["phi"])
    x = poly_from_json(params["x"])
    grid = params.get("grid", _grid_default(x.degree))
    return shiftmul.shift_maximal(phi, x, grid).to_json()


def _cmd_cq(params, seed):
    qs = _as_list(params.get("q", [1, 2, 4, 8, 16, 32, 64, 128]))
    rows = [witness.cq_estimate(q, params.get("grid")).to_json() for q in qs]
    return {"rows": rows}


def _cmd_witness(params, seed):
    Ks = _as_list(params["K"])
    if len(Ks) != 1:
        raise SchemaError("witness takes a single K")
    K = Ks[0]
    if "family" in params:
        family = [poly_from_json(f) for f in params["family"]]
    else:
        family = witness.rotated_dirichlet_family(max(1, K // 2 - 1))
    phi = witness.build_witness(K, family)
    return {"K": K, "q": K // 2 - 1, "phi": seq_to_json(phi),
            "proofBound": hankel.dyadic_upper(phi).proof_bound}


def _cmd_separation(params, seed):
    Ks = _as_list(params.get("K", list(range(6, 26, 2))))
    rep = witness.separation_experiment(Ks, params.get("grid"),
                                        sdp_max_K=params.get("sdpMaxK", 4),
                                        sdp_tol=params.get("tol", 1e-6))
    return rep.to_json()


def _cmd_vncheck(params, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(params.get("count", 200)):
        dim = int(rng.integers(1, params.get("maxDim", 8) + 1))
        deg = int(rng.integers(0, params.get("maxDegree", 16) + 1))
        G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        T = G / np.linalg.norm(G, 2) * rng.uniform(0.5, 1.0)
        P = torus.AnalyticPoly.from_dense(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))
        rec = coeffs.von_neumann_check(P, T, params.get("grid"))
        rows.append({"case": i, "dim": dim, "degree": deg, **rec.to_json()})
    return {"rows": rows, "allPass": all(r["pass"] for r in rows)}


def _cmd_certify(params, seed):
    T = matrix_from_json(params["matrix"])
    op = coeffs.power_bound_certify(T, params.get("horizon", 256))
    return {"dim": op.dim, "horizon": op.horizon, "certifiedC": op.certified_c,
            "contraction": op.contraction, "tailRationale": op.tail_rationale}


HANDLERS = {
    "gamma2": _cmd_gamma2,
    "dyadic": _cmd_dyadic,
    "maximal": _cmd_maximal,
    "cq": _cmd_cq,
    "witness": _cmd_witness,
    "separation": _cmd_separation,
    "vncheck": _cmd_vncheck,
    "certify": _cmd_certify,
}


def _write_csv(path, rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else r.get(c) for c in columns])
    Path(path).write_text(buf.getvalue())


def _write_artifacts(command, payload, out_dir, tag):
    """Render the payload into CSV / JSON / SVG files; returns their names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{command}-{tag}"
    written = []

    def dump(name, obj):
        (out / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        written.append(name)

    if command == "witness":
        dump(f"{stem}-phi.json", payload["phi"])
    dump(f"{stem}.json", payload)
    if command in ("separation", "cq", "vncheck"):
        rows = payload["rows"]
        columns = list(rows[0]) if rows else []
        if command == "separation":
            rows = [dict(r, fitExponent=payload["fitExponent"], fitR2=payload["fitR2"])
                    for r in rows]
            columns += ["fitExponent", "fitR2"]
        _write_csv(out / f"{stem}.csv", rows, columns)
        written.append(f"{stem}.csv")
    if command in ("separation", "cq"):
        from . import plotting

        fig = (plotting.separation_figure(payload) if command == "separation"
               else plotting.cq_figure(payload["rows"]))
        plotting.save_svg(fig, out / f"{stem}.svg")
        written.append(f"{stem}.svg")
    return written


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_command(config: RunConfig) -> ResultEnvelope:
    """Run (or fetch from cache) the experiment described by ``config``."""
    config.validate()
    h = config.config_hash
    if config.cache == "use":
        try:
            env = cache_io(h, "load", config.out_dir)
        except NotFound:
            env = None
        if env is not None:
            missing = [a for a in env.artifacts if not (Path(config.out_dir) / a).exists()]
            if missing:
                _write_artifacts(config.command, env.payload, config.out_dir, h[:12])
            return env
    created = _now()
    try:
        payload = _jsonable(HANDLERS[config.command](config.params, config.seed))
    except H1MultError as exc:
        raise type(exc)(f"{config.command}: {exc}") from exc
    artifacts = _write_artifacts(config.command, payload, config.out_dir, h[:12])
    env = ResultEnvelope(h, _jsonable(config.canonical()), created, _now(), payload,
                         PROVENANCE[config.command], payload_checksum(payload),
                         tuple(artifacts))
    cache_io(env, "store", config.out_dir)
    return env


def _int_list(text: str):
    """Parse ``"6,8,10"`` or an inclusive range ``"6:24:2"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="h1mult",
        description="Multiplier norm experiments: gamma_2 certificates, shift-maximal "
                    "functionals, witness multipliers and the separation sweep.")
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="experiment to run (may come from --config instead)")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--K", type=_int_list, help="K values, e.g. 6,8,10 or 6:24:2")
    p.add_argument("--q", type=_int_list, help="q values, e.g. 1,2,4 or 1:16")
    p.add_argument("--grid", type=int, help="quadrature grid size (power of two)")
    p.add_argument("--tol", type=float, help="relative SDP gap tolerance")
    p.add_argument("--seed", type=int, help="seed for randomized suites")
    p.add_argument("--out", help="output directory (default h1mult-out)")
    p.add_argument("--no-cache", action="store_true", help="recompute even if cached")
    p.add_argument("--matrix", help="matrix JSON file (gamma2, certify)")
    p.add_argument("--phi", help="multiplier JSON file (dyadic, maximal)")
    p.add_argument("--x", help="polynomial JSON file (maximal)")
    p.add_argument("--family", help="JSON file with a list of polynomials (witness)")
    p.add_argument("--count", type=int, help="number of random cases (vncheck)")
    p.add_argument("--max-degree", type=int, dest="maxDegree")
    p.add_argument("--max-dim", type=int, dest="maxDim")
    p.add_argument("--horizon", type=int, help="power scan length (certify)")
    p.add_argument("--method", choices=["auto", "barrier", "pathfollow"])
    p.add_argument("--sdp-max-k", type=int, dest="sdpMaxK")
    return p


def _config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        base = load_json(args.config)
        if not isinstance(base, dict):
            raise SchemaError("config file must hold a JSON object")
    base = dict(base)
    params = dict(base.get("params", {}))
    if args.command:
        base["command"] = args.command
    for key in ("K", "q", "grid", "tol", "count", "maxDegree", "maxDim", "horizon",
                "method", "sdpMaxK"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    for key in ("matrix", "phi", "x", "family"):
        path = getattr(args, key)
        if path is not None:
            params[key] = load_json(path)
    if "family" in params and isinstance(params["family"], dict):
        params["family"] = params["family"].get("family", [])
    base["params"] = params
    if args.seed is not None:
        base["seed"] = args.seed
    if args.out is not None:
        base["out"] = args.out
    if args.no_cache:
        base["cache"] = "recompute"
    if "command" not in base:
        raise SchemaError("no command given")
    return RunConfig.from_dict(base)


def _summary(env: ResultEnvelope) -> str:
    p = env.payload
    cmd = env.config["command"]
    if cmd == "gamma2":
        return f"gamma2 value {p['value']:.10g} (gap {p['gap']:.3g})"
    if cmd == "separation":
        return f"separation: {len(p['rows'])} rows, fit exponent {p['fitExponent']}, R^2 {p['fitR2']}"
    if cmd == "vncheck":
        return f"vncheck: {len(p['rows'])} cases, all pass = {p['allPass']}"
    if cmd == "certify":
        return f"certified c = {p['certifiedC']:.10g}"
    if cmd == "maximal":
        return f"shift-maximal value {p['value']:.10g} (grid {p['gridSize']})"
    if cmd == "dyadic":
        return f"dyadic proof bound {p['proofBound']:.10g}, statement bound {p['statementBound']:.10g}"
    if cmd == "witness":
        return f"witness K = {p['K']}: {len(p['phi']['support'])} entries"
    return f"{cmd}: {len(p.get('rows', []))} rows"


def _thread_limit():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
    except ValueError:
        raise SchemaError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, n))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        with _thread_limit():
            env = run_command(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ComputationError, CacheError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = Path(config.out_dir)
    print(_summary(env))
    print(f"envelope: {_cache_dir(out) / (env.config_hash + '.json')}")
    for a in env.artifacts:
        print(f"wrote: {out / a}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
