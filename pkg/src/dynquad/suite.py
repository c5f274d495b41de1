"""Batch verification: configuration, seeded trials, check registry, JSON report."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from . import algebra, classical, fusion
from .dynamical import DEFAULT_GAMMA, DEFAULT_MIN_SEP, sample_lambda, weight_residual

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

# Upper bounds unless the check is listed in MIN_CHECKS (then the residual must reach it).
DEFAULT_TOLS: dict[str, float] = {
    "flip": 1e-11,
    "weight": 1e-11,
    "weight_control": 1e-2,
    "quartet": 1e-10,
    "quartet_control": 1e-3,
    "gyb": 1e-9,
    "gyb@3": 1e-8,
    "bivector": 1e-9,
    "calibration": 1e-9,
    "exchange": 1e-9,
    "appendix": 1e-10,
    "comove": 100.0,
    "lr": 1e-10,
    "lr_control": 1e-3,
    "fusion": 1e-9,
    "chain": 1e-8,
    "constraints": 1e-10,
    "classical_quartet": 1e-8,
    "casimir_control": 1e-3,
    "partials": 1e-6,
    "leading_order": 1e-6,
    "slope_low": 2.7,
    "slope_high": 3.5,
    "slope_control": 2.4,
}

DEFAULT_TRIAL_CAPS: dict[str, int] = {"gyb@3": 10, "comove": 20, "chain": 20}

COMOVE_EPS = (1e-3, 1e-2)

# (aux kind, form) tokens used by chain specs, e.g. "1p,2c,2p"
PAIR_TOKENS = {
    "1p": ("type1", "plain"),
    "1c": ("type1", "contragredient"),
    "2p": ("type2", "plain"),
    "2c": ("type2", "contragredient"),
}

DEFAULT_CHAINS = ("1p,2p", "2c,1c", "2p,2c", "1p,2c,2p", "2p,2p,1c", "1p,1p,1p")


class ConfigError(ValueError):
    pass


@dataclass
class SuiteConfig:
    n: list[int] = field(default_factory=lambda: [2, 3])
    gamma: float = DEFAULT_GAMMA
    gamma_tilde: str | float = "calibrate"
    trials: int = 100
    seed: int = 20240601
    tols: dict[str, float] = field(default_factory=dict)
    min_sep: float = DEFAULT_MIN_SEP
    checks: list[str] | None = None
    out: str | None = None
    threads: int = 1
    trial_caps: dict[str, int] = field(default_factory=dict)
    calibration_samples: int = 20
    chains: list[str] = field(default_factory=lambda: list(DEFAULT_CHAINS))
    timestamp: str | None = None

    def __post_init__(self):
        self.n = [int(x) for x in self.n]
        merged = dict(DEFAULT_TOLS)
        merged.update({k: float(v) for k, v in self.tols.items()})
        self.tols = merged
        caps = dict(DEFAULT_TRIAL_CAPS)
        caps.update({k: int(v) for k, v in self.trial_caps.items()})
        self.trial_caps = caps
        self.validate()

    def validate(self):
        if not self.n or any(x < 2 for x in self.n):
            raise ConfigError(f"n values must be >= 2, got {self.n}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.min_sep > 0:
            raise ConfigError("min_sep must be positive")
        for k, v in self.tols.items():
            if k.split("@")[0] not in DEFAULT_TOLS:
                raise ConfigError(f"unknown tolerance key {k!r}")
            if not v > 0:
                raise ConfigError(f"tolerance {k} must be positive")
        if self.checks is not None:
            unknown = [c for c in self.checks if c not in CHECKS]
            if unknown:
                raise ConfigError(f"unknown checks {unknown}; known: {sorted(CHECKS)}")
        if self.gamma_tilde != "calibrate":
            try:
                self.gamma_tilde = float(self.gamma_tilde)
            except (TypeError, ValueError):
                raise ConfigError("gamma_tilde must be 'calibrate' or a number") from None
        if self.calibration_samples < 20:
            raise ConfigError("calibration needs at least 20 samples")
        for spec in self.chains:
            parse_chain(spec)
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def tol(self, name: str, n: int | None = None) -> float:
        if n is not None and f"{name}@{n}" in self.tols:
            return self.tols[f"{name}@{n}"]
        return self.tols[name]

    def trials_for(self, name: str, n: int) -> int:
        cap = self.trial_caps.get(f"{name}@{n}", self.trial_caps.get(name))
        return self.trials if cap is None else min(self.trials, cap)

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        d.pop("timestamp")
        d["checks"] = self.selected_checks()
        return d

    def selected_checks(self) -> list[str]:
        return list(self.checks) if self.checks is not None else list(CHECKS)

    @classmethod
    def from_mapping(cls, data: dict) -> "SuiteConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)


def load_config(path: str) -> dict:
    """Read a JSON object, or ``key = value`` / ``key: value`` lines."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":"
            if sep not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split(sep, 1))
            try:
                data[key] = json.loads(value)
            except json.JSONDecodeError:
                data[key] = value
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be an object")
    return data


def parse_chain(spec: str) -> list[tuple[str, str]]:
    tokens = [tok.strip() for tok in spec.split(",") if tok.strip()]
    out = []
    for tok in tokens:
        if tok in PAIR_TOKENS:
            out.append(PAIR_TOKENS[tok])
            continue
        kind, _, form = tok.partition("/")
        if kind not in fusion.KINDS or form not in ("plain", "contragredient"):
            raise ConfigError(f"bad chain token {tok!r}; use 1p,1c,2p,2c or type1/plain etc.")
        out.append((kind, form))
    return out


def trial_rng(seed: int, check: str, n: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, check, n, trial)."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(check.encode()), n, trial])
    return np.random.default_rng(ss)


# ------------------------------------------------------------------ context


class Context:
    """Per-run caches shared by the checks (structure sets, calibration)."""

    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self._sets = {}
        self._calibration = {}
        self._lax = {}

    def rs(self, n: int) -> algebra.StructureSet:
        if n not in self._sets:
            self._sets[n] = algebra.rs_rational(n, self.cfg.gamma, self.cfg.min_sep)
        return self._sets[n]

    def sample(self, rng, n: int, depth: int = 3) -> np.ndarray:
        gt = None if self.cfg.gamma_tilde == "calibrate" else self.cfg.gamma_tilde
        gt = self.cfg.gamma if gt is None else gt
        return sample_lambda(rng, n, self.cfg.gamma, gt, self.cfg.min_sep, depth)

    def sample_q(self, rng, n: int) -> np.ndarray:
        return sample_lambda(rng, n, 0.0, None, self.cfg.min_sep, 0)

    def calibration(self, n: int) -> algebra.CalibrationRecord:
        if n not in self._calibration:
            samples = [self.sample(trial_rng(self.cfg.seed, "calibration", n, i), n)
                       for i in range(self.cfg.calibration_samples)]
            self._calibration[n] = algebra.calibrate_lax(self.rs(n), samples, self.cfg.tol("calibration", n),
                                                         self.cfg.min_sep)
        return self._calibration[n]

    def lax(self, n: int) -> algebra.LaxRep:
        if n not in self._lax:
            if self.cfg.gamma_tilde == "calibrate":
                self._lax[n] = self.calibration(n).lax(n, self.cfg.min_sep)
            else:
                self._lax[n] = algebra.rs_scalar_lax(n, self.cfg.gamma_tilde, "as-printed", self.cfg.min_sep)
        return self._lax[n]


# -------------------------------------------------------------- check bodies
# Each body returns {"sample": ..., "residuals": {...}}; pass/fail is decided
# afterwards by the matching judge so reports can be re-judged.


def _lam(x) -> list:
    return [float(v) for v in np.real(x)]


def _flip(ctx, n, rng):
    lam = ctx.sample(rng, n)
    r = algebra.flip_residuals(ctx.rs(n), lam)
    return {"sample": _lam(lam), "residuals": dict(zip(("C_vs_Bpi", "ApiA", "DpiD"), r))}


def _weight(ctx, n, rng):
    s = ctx.rs(n)
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {
        "B_leg1": weight_residual(s.B, "leg1-zero", lam),
        "C_leg2": weight_residual(s.C, "leg2-zero", lam),
        "D_total": weight_residual(s.D, "total-zero", lam),
    }}


def _weight_control(ctx, n, rng):
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {"A_total": weight_residual(ctx.rs(n).A, "total-zero", lam)}}


def _quartet(ctx, n, rng):
    lam = ctx.sample(rng, n)
    r = algebra.quartet_residuals(ctx.rs(n), lam)
    return {"sample": _lam(lam), "residuals": dict(zip(("i", "ii", "iii", "iv"), r))}


def _quartet_control(ctx, n, rng):
    lam = ctx.sample(rng, n)
    r = algebra.quartet_residuals(ctx.rs(n), lam, suppress_shifts=True)
    return {"sample": _lam(lam), "residuals": {"ii_unshifted": r[1]}}


def _gyb(ctx, n, rng):
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {"gyb": algebra.gyb_residual(ctx.rs(n), lam)}}


def _bivector(ctx, n, rng):
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {"bivector": algebra.bivector_residual(ctx.rs(n), ctx.lax(n), lam)}}


def _calibration(ctx, n, rng):
    rec = ctx.calibration(n)
    return {"sample": None, "residuals": {"median": rec.best["median"]},
            "info": {"variant": rec.variant, "sign": rec.best["sign"]}}


def _exchange(ctx, n, rng):
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {"exchange": algebra.exchange_residual(ctx.rs(n), ctx.lax(n), lam)}}


def _appendix(ctx, n, rng):
    lam = ctx.sample(rng, n)
    return {"sample": _lam(lam), "residuals": {"appendix": algebra.appendix_residual(ctx.rs(n), lam)}}


def _comove(ctx, n, rng):
    lam = ctx.sample(rng, n)
    res = {}
    for eps in COMOVE_EPS:
        s = algebra.perturb_b(ctx.rs(n), eps, rng)
        res[f"quartet_iii@{eps:g}"] = algebra.quartet_residuals(s, lam)[2]
        res[f"appendix@{eps:g}"] = algebra.appendix_residual(s, lam)
    return {"sample": _lam(lam), "residuals": res}


def _pairs(ctx, n):
    s = ctx.rs(n)
    return {tok: fusion.canonical_lr(s, *kf) for tok, kf in PAIR_TOKENS.items()}


def _lr(ctx, n, rng):
    lam = ctx.sample(rng, n)
    res = {}
    for tok, p in _pairs(ctx, n).items():
        for i, r in enumerate(fusion.lr_residuals(ctx.rs(n), p, lam), 1):
            res[f"{tok}.{i}"] = r
    return {"sample": _lam(lam), "residuals": res}


def _lr_control(ctx, n, rng):
    lam = ctx.sample(rng, n)
    s = ctx.rs(n)
    pairs = _pairs(ctx, n)
    return {"sample": _lam(lam), "residuals": {
        "1p_vs_type2": max(fusion.lr_residuals(s, pairs["1p"], lam, relations="type2")),
        "2p_vs_type1": max(fusion.lr_residuals(s, pairs["2p"], lam, relations="type1")),
    }}


def _fusion(ctx, n, rng):
    lam = ctx.sample(rng, n)
    s, t = ctx.rs(n), ctx.lax(n)
    res = {tok: algebra.exchange_residual(s, fusion.fuse(t, p), lam) for tok, p in _pairs(ctx, n).items()}
    return {"sample": _lam(lam), "residuals": res}


def _max_chain(n: int) -> int:
    return 3 if n == 2 else 2


def _chain(ctx, n, rng):
    specs = [spec for spec in ctx.cfg.chains if len(parse_chain(spec)) <= _max_chain(n)]
    depth = 2 + max((len(parse_chain(sp)) for sp in specs), default=0)
    lam = ctx.sample(rng, n, depth=depth)
    s, t = ctx.rs(n), ctx.lax(n)
    res = {}
    for spec in specs:
        pairs = [fusion.canonical_lr(s, kind, form) for kind, form in parse_chain(spec)]
        res[spec] = algebra.exchange_residual(s, fusion.chain(t, pairs), lam)
    return {"sample": _lam(lam), "residuals": res}


def _constraints(ctx, n, rng):
    q = ctx.sample_q(rng, n)
    res = {}
    for label, r, expected in (("hyperbolic", classical.rs_hyperbolic(n, min_sep=ctx.cfg.min_sep), -2.0),
                               ("rational", classical.rs_rational_classical(n, ctx.cfg.min_sep), 0.0)):
        fit = classical.constraint_residuals(r, q)
        res[f"{label}.alpha_a_err"] = abs(fit.alpha_a - expected)
        res[f"{label}.alpha_d_err"] = abs(fit.alpha_d - expected)
        res[f"{label}.fit_a"] = fit.residual_a
        res[f"{label}.fit_d"] = fit.residual_d
        res[f"{label}.b_pi_vs_c"] = fit.residual_bc
    return {"sample": _lam(q), "residuals": res}


def _classical_quartet(ctx, n, rng):
    q = ctx.sample_q(rng, n)
    res, info = {}, {}
    for label, r in (("hyperbolic", classical.rs_hyperbolic(n, min_sep=ctx.cfg.min_sep)),
                     ("rational", classical.rs_rational_classical(n, ctx.cfg.min_sep))):
        for name, v in zip(("i", "ii", "iii", "iv"), classical.classical_quartet_residuals(r, q)):
            res[f"{label}.{name}"] = v
        info[f"{label}.pb_form_iii"] = classical.pb_form_iii_residual(r, q)
        info[f"{label}.a_minus_c_vs_d_minus_b"] = classical.cm_r_matrix(r, q)[1]
    return {"sample": _lam(q), "residuals": res, "info": info}


def _casimir_control(ctx, n, rng):
    q = ctx.sample_q(rng, n)
    r = classical.classical_quartet_residuals(classical.rs_hyperbolic(n, False, ctx.cfg.min_sep), q)
    return {"sample": _lam(q), "residuals": {"ii": r[1], "iv": r[3]}}


def _partials(ctx, n, rng):
    q = ctx.sample_q(rng, n)
    return {"sample": _lam(q), "residuals": {
        "hyperbolic": classical.partials_residual(classical.rs_hyperbolic(n, min_sep=ctx.cfg.min_sep), q),
        "rational": classical.partials_residual(classical.rs_rational_classical(n, ctx.cfg.min_sep), q),
    }}


def _leading_order(ctx, n, rng):
    # the extrapolation grid needs the base defined at small γ as well
    cfg = ctx.cfg
    lam = sample_lambda(rng, n, cfg.gamma, None, cfg.min_sep + max(classical.DEFAULT_LO_GRID))
    s = ctx.rs(n)
    cl = classical.rs_rational_classical(n, ctx.cfg.min_sep).matrices(lam)
    from .tensor import rel_residual

    res = {}
    for big, small in zip("ABCD", "abcd"):
        lo = classical.leading_order(getattr(s, big))(lam)
        res[small] = rel_residual(lo, cl[small])
    return {"sample": _lam(lam), "residuals": res}


def _slope_record(fit: classical.SlopeFit) -> dict:
    res = {}
    for name, slope, status in zip(("i", "ii", "iii", "iv"), fit.slopes, fit.status):
        res[name] = slope if status == "fit" else None
    return res


def _scaling_slope(ctx, n, rng):
    lam = classical.sample_for_grid(rng, n, classical.DEFAULT_SLOPE_GRID, ctx.cfg.min_sep)
    fit = classical.scaling_slope(classical.rs_rational_classical(n, ctx.cfg.min_sep), lam, min_sep=ctx.cfg.min_sep)
    return {"sample": _lam(lam), "residuals": _slope_record(fit), "info": fit.as_dict()}


def _slope_control(ctx, n, rng):
    lam = classical.sample_for_grid(rng, n, classical.DEFAULT_SLOPE_GRID, ctx.cfg.min_sep)
    broken = classical.rs_rational_classical(n, ctx.cfg.min_sep, flipped_b_term=(1, 2))
    fit = classical.scaling_slope(broken, lam, min_sep=ctx.cfg.min_sep)
    return {"sample": _lam(lam), "residuals": _slope_record(fit), "info": fit.as_dict()}


# ------------------------------------------------------------------ judges


def _all_le(tol):
    return lambda res: all(v <= tol for v in res.values())


def judge(check: str, n: int, record: dict, cfg: SuiteConfig) -> bool:
    res = record["residuals"]
    if check in ("weight_control", "quartet_control", "lr_control"):
        return all(v >= cfg.tol(check, n) for v in res.values())
    if check == "casimir_control":
        return max(res.values()) >= cfg.tol(check, n)
    if check == "comove":
        factor = cfg.tol("comove", n)
        return all(eps / factor <= v <= eps * factor
                   for key, v in res.items() for eps in [float(key.split("@")[1])])
    if check == "constraints":
        tol = cfg.tol("constraints", n)
        return all(v <= tol for v in res.values())
    if check == "scaling_slope":
        lo, hi = cfg.tol("slope_low", n), cfg.tol("slope_high", n)
        status = record["info"]["status"]
        residuals = record["info"]["residuals"]
        for eq, (slope, st) in enumerate(zip(res.values(), status)):
            if st == "fit" and not lo <= slope <= hi:
                return False
            if st != "fit" and any(row[eq] > classical.RESIDUAL_FLOOR for row in residuals):
                return False
        return True
    if check == "slope_control":
        fitted = [v for v in res.values() if v is not None]
        return bool(fitted) and min(fitted) <= cfg.tol("slope_control", n)
    return _all_le(cfg.tol(check, n))(res)


@dataclass(frozen=True)
class Check:
    name: str
    group: str
    body: Callable
    once: bool = False
    applies: Callable[[int], bool] = lambda n: True


CHECKS: dict[str, Check] = {c.name: c for c in [
    Check("flip", "quantum", _flip),
    Check("weight", "quantum", _weight),
    Check("weight_control", "quantum", _weight_control),
    Check("quartet", "quantum", _quartet),
    Check("quartet_control", "quantum", _quartet_control),
    Check("gyb", "quantum", _gyb, applies=lambda n: n <= 3),
    Check("calibration", "quantum", _calibration, once=True),
    Check("bivector", "quantum", _bivector),
    Check("exchange", "quantum", _exchange),
    Check("appendix", "quantum", _appendix),
    Check("comove", "quantum", _comove),
    Check("lr", "quantum", _lr),
    Check("lr_control", "quantum", _lr_control),
    Check("fusion", "quantum", _fusion),
    Check("chain", "quantum", _chain),
    Check("constraints", "classical", _constraints),
    Check("classical_quartet", "classical", _classical_quartet),
    Check("casimir_control", "classical", _casimir_control),
    Check("partials", "classical", _partials),
    Check("leading_order", "limit", _leading_order),
    Check("scaling_slope", "limit", _scaling_slope, once=True),
    Check("slope_control", "limit", _slope_control, once=True),
]}

GROUPS = {
    "quantum": [c for c in CHECKS if CHECKS[c].group == "quantum"],
    "classical": [c for c in CHECKS if CHECKS[c].group == "classical"],
    "limit": [c for c in CHECKS if CHECKS[c].group == "limit"],
}


# ------------------------------------------------------------------ running


def _run_one(ctx: Context, check: Check, n: int, trial: int) -> dict:
    rng = trial_rng(ctx.cfg.seed, check.name, n, trial)
    try:
        out = check.body(ctx, n, rng)
    except algebra.CalibrationError:
        raise
    except Exception as exc:  # recorded, counts as failure
        log.exception("check %s n=%d trial=%d raised", check.name, n, trial)
        out = {"sample": None, "residuals": {}, "error": f"{type(exc).__name__}: {exc}"}
    record = {"check": check.name, "n": n, "trial": trial}
    record.update(out)
    return record


def judge_report(report: dict, cfg: SuiteConfig) -> dict:
    """(Re)derive pass flags and the summary from raw residuals."""
    summary: dict[str, dict] = {}
    for rec in report["records"]:
        ok = "error" not in rec and judge(rec["check"], rec["n"], rec, cfg)
        rec["pass"] = bool(ok)
        key = rec["check"]
        entry = summary.setdefault(key, {"records": 0, "failed": 0, "max_residual": None, "min_residual": None})
        entry["records"] += 1
        entry["failed"] += 0 if ok else 1
        vals = [v for v in rec["residuals"].values() if isinstance(v, float)]
        if vals:
            mx, mn = max(vals), min(vals)
            entry["max_residual"] = mx if entry["max_residual"] is None else max(entry["max_residual"], mx)
            entry["min_residual"] = mn if entry["min_residual"] is None else min(entry["min_residual"], mn)
    for name in report["config"]["checks"]:
        summary.setdefault(name, {"records": 0, "failed": 0, "max_residual": None, "min_residual": None})
    for entry in summary.values():
        entry["pass"] = entry["failed"] == 0
    report["summary"] = {
        "checks": {k: summary[k] for k in sorted(summary)},
        "records": len(report["records"]),
        "failed": sum(e["failed"] for e in summary.values()),
        "overall_pass": all(e["pass"] for e in summary.values()) and not report.get("calibration_error"),
    }
    return report


def run_suite(cfg: SuiteConfig) -> dict:
    """Run the selected checks and return the report dict (also written to ``cfg.out``)."""
    if cfg.out:
        directory = os.path.dirname(os.path.abspath(cfg.out))
        if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
            raise OSError(f"output directory {directory!r} is missing or not writable")
    ctx = Context(cfg)
    resolved = cfg.resolved()
    canonical = json.dumps(resolved, sort_keys=True)
    report = {
        "schema_version": SCHEMA_VERSION,
        "run_id": hashlib.sha256(canonical.encode()).hexdigest()[:16],
        "timestamp": cfg.timestamp if cfg.timestamp is not None else os.environ.get("SOURCE_DATE_EPOCH"),
        "config": resolved,
        "records": [],
        "calibration": {},
    }

    jobs = []
    for name in resolved["checks"]:
        check = CHECKS[name]
        for n in cfg.n:
            if not check.applies(n):
                continue
            count = 1 if check.once else cfg.trials_for(name, n)
            jobs.extend((check, n, t) for t in range(count))

    try:
        if cfg.gamma_tilde == "calibrate" and any(CHECKS[c].group == "quantum" for c in resolved["checks"]):
            for n in cfg.n:
                report["calibration"][str(n)] = ctx.calibration(n).as_dict()
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                records = list(pool.map(lambda job: _run_one(ctx, *job), jobs))
        else:
            records = [_run_one(ctx, *job) for job in jobs]
    except algebra.CalibrationError as exc:
        report["calibration_error"] = {"message": str(exc), "table": [
            {k: algebra._jsonable(v) for k, v in row.items()} for row in exc.table]}
        records = []
    report["records"] = records
    judge_report(report, cfg)
    if cfg.out:
        write_report(report, cfg.out)
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=False, ensure_ascii=False) + "\n"


def write_report(report: dict, path: str) -> None:
    """Atomic UTF-8 write: temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".report-", suffix=".json", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
