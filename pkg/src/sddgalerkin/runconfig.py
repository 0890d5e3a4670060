"""Validated JSON run configuration plus the artifact writer."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import InvalidConfigurationError
from .integrator import SolverConfig, default_grid_points
from .model import CATALOG, ModelSpec, derived_exponents, make_model


class ConfigError(InvalidConfigurationError):
    """Invalid configuration, anchored to a line of the source document."""

    def __init__(self, source, line, path, message):
        self.source, self.line, self.path = source, line, path
        where = ".".join(str(p) for p in path) or "<root>"
        super().__init__(f"{source}:{line}: {where}: {message}")


def load_schema():
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text(encoding="utf-8"))


def locate(text, path):
    """Best-effort 1-based line of the JSON node at ``path`` (keys searched in nesting order)."""
    pos = 0
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"' + re.escape(str(key)) + r'"\s*:').search(text, pos)
        if m is None:
            break
        pos = m.start()
    return text.count("\n", 0, pos) + 1


def parse_q(value):
    return math.inf if value == "inf" else float(value)


def q_label(q):
    return "inf" if math.isinf(q) else q


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    model: ModelSpec
    solver: SolverConfig
    seed: int

    @property
    def canonical(self):
        return canonical_json(self.raw)

    @property
    def sha256(self):
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()

    def section(self, name):
        return self.raw.get(name, {})


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def parse_config(text, source="<config>", seed=None) -> RunConfig:
    """Validate ``text`` and build the model and solver; raises ConfigError or HypothesisViolationError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(source, exc.lineno, [], f"malformed JSON: {exc.msg} (column {exc.colno})") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        raise ConfigError(source, locate(text, path), path, err.message)
    if seed is not None:
        raw["seed"] = int(seed)
    raw.setdefault("seed", 0)

    def fail(path, message):
        raise ConfigError(source, locate(text, path), path, message)

    mcfg = raw["model"]
    if mcfg["id"] not in CATALOG:
        fail(["model", "id"], f"unknown model {mcfg['id']!r}; catalog: {', '.join(CATALOG)}")
    dom = raw.get("domain", {})
    length = float(dom.get("length", math.pi))
    try:
        model = make_model(mcfg["id"], length=length, **mcfg.get("params", {}))
    except InvalidConfigurationError as exc:
        fail(["model", "params"], str(exc))
    modes = int(dom.get("modes", 16))
    grid = int(dom.get("grid_points", default_grid_points(modes)))
    if grid < 2 * modes:
        fail(["domain", "grid_points"], f"grid_points={grid} must be >= 2*modes={2 * modes}")
    norms_cfg = raw.get("norms", {})
    s = raw["solver"]
    solver = SolverConfig(
        dt=float(s["dt"]),
        t_end=float(s["t_end"]),
        modes=modes,
        grid_points=grid,
        length=length,
        sigma=float(s.get("sigma", 0.0)),
        record_stride=int(s.get("record_stride", 1)),
        seed=int(raw["seed"]),
        qs=tuple(parse_q(q) for q in norms_cfg.get("q", [])),
        zetas=tuple(float(z) for z in norms_cfg.get("zeta", [])),
    )
    try:
        solver.check_commensurate(model.r)
    except InvalidConfigurationError as exc:
        fail(["solver", "dt"], str(exc))
    c = model.constants
    q0 = derived_exponents(c.p, c.beta, c.alpha).q0  # H3 failure propagates as a hypothesis error
    # every integrability exponent must exceed q_0
    q_sites = [(["norms", "q"], q) for q in solver.qs]
    init = raw.get("initial", {})
    if init.get("kind") == "ball" and "q" in init:
        q_sites.append((["initial", "q"], parse_q(init["q"])))
    if "attractor" in raw and "q" in raw["attractor"]:
        q_sites.append((["attractor", "q"], parse_q(raw["attractor"]["q"])))
    for path, q in q_sites:
        if not q > q0:
            fail(path, f"q={q_label(q)} violates q > q_0 = {q0:g} for model {model.name!r}")
    if init.get("kind") == "constant" and len(init["coeffs"]) > modes:
        fail(["initial", "coeffs"], f"{len(init['coeffs'])} coefficients but only {modes} modes")
    if init.get("kind") == "mode" and init["mode"] > modes:
        fail(["initial", "mode"], f"mode {init['mode']} exceeds modes={modes}")
    att = raw.get("attractor")
    if att is not None:
        times = att["times"]
        if len(times) < 3:
            fail(["attractor", "times"], "need at least 3 pullback times")
        if any(b <= a for a, b in zip(times, times[1:])):
            fail(["attractor", "times"], "pullback times must be strictly increasing")
    return RunConfig(raw, model, solver, int(raw["seed"]))


def load_config(path, seed=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), 0, [], f"cannot read config: {exc.strerror}") from None
    return parse_config(text, source=path.name, seed=seed)


# --- writing ----------------------------------------------------------------


def fmt(x):
    """Locale-free shortest round-trip float text."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def jsonable(obj):
    """Recursively replace non-finite floats and numpy scalars so strict JSON accepts the value."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


class ArtifactWriter:
    """Single writer for an output directory; tracks digests for the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.digests = {}

    def write_text(self, name, text):
        data = text.encode("utf-8")
        (self.root / name).write_bytes(data)
        self.digests[name] = hashlib.sha256(data).hexdigest()

    def write_csv(self, name, header, rows):
        self.write_text(name, csv_text(header, rows))

    def write_json(self, name, obj):
        self.write_text(name, canonical_json(jsonable(obj)))
