"""Reproducible experiment driver: config parsing, the canonical studies and their outputs.

Every run writes CSV files (with a ``# schema=1`` header line) and a
``summary.json`` listing each check with its measured value and verdict.
Sweep points are computed by a bounded process pool and merged in sweep order,
so outputs do not depend on the number of workers.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import hamiltonian as hm
from . import kernels
from .context import ParameterError, SemiclassicalContext
from .fitting import dyadic, fit_slope
from .normal_form import choose_M, normal_form_iterate
from .oracle import build_quasimode, eigensolve, quantize, site_for, unitary_exp
from .resonance import (Box, block_dimensions, count_hits, require_nondegenerate, slab_union_volume, summarize_volumes,
                        window_from_dict, ZoneVolumeEstimate)
from .serialization import csv_text, decode_node, normal_form_to_dict
from .symbols import FourierSymbol, is_selfadjoint, torus_average

EXPERIMENTS = ("fkt", "nfcheck", "scaling", "volumes", "blockmap")

_COS = {"modes": [{"k": [1], "coeff": 1.0}, {"k": [-1], "coeff": 1.0}]}

DEFAULTS = {
    "fkt": {"d": 1, "hbars": dyadic(3, 7), "hamiltonian": {"kind": "free", "d": 1, "scale": 1.0},
            "perturbation": _COS, "N": 1},
    "nfcheck": {"d": 1, "hbars": dyadic(3, 8), "hamiltonian": {"kind": "free", "d": 1, "scale": 0.5},
                "perturbation": _COS, "N": 3, "K_basis": 64},
    "scaling": {"d": 1, "hbars": dyadic(3, 7), "hamiltonian": {"kind": "free", "d": 1, "scale": 0.5},
                "perturbation": _COS, "N": 1},
    "volumes": {"d": 2, "hbars": dyadic(4, 10), "hamiltonian": {"kind": "free", "d": 2, "scale": 0.5},
                "window": {"kind": "annulus", "center": [0.0, 0.0], "r_in": 1.0, "r_out": 8.0},
                "samples": 1_000_000, "n": 1, "quantity": "zone"},
    "blockmap": {"d": 2, "hbars": [2.0 ** -6], "hamiltonian": {"kind": "free", "d": 2, "scale": 0.5},
                 "window": {"kind": "box", "lo": [-1.0, -1.0], "hi": [1.0, 1.0]}, "grid": 101},
}


@dataclass
class ExperimentConfig:
    """One experiment invocation. Unknown keys are rejected."""

    experiment: str
    d: int = 1
    kappa: float = 2.0
    gamma: float = 0.05
    delta: float = 0.3
    hbars: list = field(default_factory=list)
    hamiltonian: dict = field(default_factory=dict)
    perturbation: dict = field(default_factory=lambda: {"modes": []})
    N: int = 1
    M: int | None = None
    K_basis: int | None = None
    margin: int = 40
    xi0: list = field(default_factory=lambda: [1.5])
    seed: int = 0
    window: dict | None = None
    samples: int = 0
    n: int = 1
    quantity: str = "zone"
    expected_exponent: float | None = None
    tolerance: float = 0.1
    grid: int = 101

    @classmethod
    def from_dict(cls, doc: dict, experiment: str | None = None) -> "ExperimentConfig":
        doc = dict(doc)
        name = experiment or doc.get("experiment")
        if doc.get("experiment", name) != name:
            raise ValueError(f"config is for {doc['experiment']!r}, not {name!r}")
        if name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
        doc["experiment"] = name
        merged = {**DEFAULTS[name], **doc}
        known = set(cls.__dataclass_fields__)
        extra = set(merged) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**merged)
        cfg.hbars = [float(h) for h in cfg.hbars]
        cfg.contexts()
        if name in ("fkt", "scaling", "nfcheck") and cfg.M is None:
            ctx = max(cfg.contexts(), key=lambda c: c.hbar)
            cfg.M = choose_M(cfg.H(), cfg.K0(ctx), cfg.N)
        if name in ("volumes", "blockmap"):
            require_nondegenerate(cfg.H(), cfg.contexts()[0])
        if name == "volumes":
            if cfg.samples <= 0:
                raise ValueError("samples must be positive")
            if not cfg.delta > 2 * cfg.d * cfg.gamma:
                raise ParameterError(
                    f"delta > 2 d gamma violated (delta={cfg.delta}, d={cfg.d}, gamma={cfg.gamma})")
        return cfg

    @classmethod
    def load(cls, path, experiment: str | None = None) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()), experiment)

    def to_dict(self) -> dict:
        return asdict(self)

    def contexts(self) -> list[SemiclassicalContext]:
        """One context per swept hbar; raises ParameterError naming the violated inequality."""
        if not self.hbars:
            raise ParameterError("the hbar sweep is empty")
        return [SemiclassicalContext(d=self.d, hbar=h, kappa=self.kappa, gamma=self.gamma, delta=self.delta)
                for h in self.hbars]

    def H(self):
        return hm.from_dict({"d": self.d, **self.hamiltonian})

    def K0(self, ctx) -> FourierSymbol:
        return perturbation_symbol(self.perturbation, ctx)


def perturbation_symbol(spec: dict, ctx) -> FourierSymbol:
    """Symbol from ``{"modes": [{"k": [...], "coeff": number | [re, im] | node tree}]}``."""
    modes = {}
    for m in spec.get("modes", []):
        modes[tuple(int(c) for c in m["k"])] = decode_node(m["coeff"])
    return FourierSymbol(ctx, modes)


@dataclass
class Check:
    name: str
    passed: bool
    measured: object
    threshold: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "measured": _plain(self.measured),
                "threshold": _plain(self.threshold)}


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


@dataclass
class RunResult:
    experiment: str
    tables: dict
    checks: list
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary_doc(self, cfg: ExperimentConfig) -> dict:
        return {"experiment": self.experiment, "passed": self.passed, "backend": kernels.BACKEND,
                "config": cfg.to_dict(), "checks": [c.to_dict() for c in self.checks],
                "results": _plain(self.summary)}

    def write(self, out, cfg: ExperimentConfig) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, (columns, rows) in self.tables.items():
            p = out / f"{name}.csv"
            p.write_text(csv_text(columns, rows))
            written.append(p)
        p = out / "summary.json"
        p.write_text(json.dumps(self.summary_doc(cfg), indent=2) + "\n")
        written.append(p)
        return written


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("SKAM_WORKERS", "1") or 1)
    return max(1, int(workers))


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _slope_check(name, hbars, values, minimum, exact_tol=1e-13) -> tuple[Check, dict]:
    vals = np.asarray(values, dtype=float)
    if np.all(vals <= exact_tol):
        return Check(name, True, "exact (all values <= %g)" % exact_tol, minimum), {"slope": None}
    try:
        fit = fit_slope(hbars, vals)
    except ValueError as exc:
        return Check(name, False, str(exc), minimum), {"slope": None}
    return Check(name, fit.slope >= minimum, fit.slope, minimum), fit.to_dict()


# ------------------------------------------------------------ quasimodes


def _quasimode_point(args):
    cfg_doc, h = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    ctx = SemiclassicalContext(d=cfg.d, hbar=h, kappa=cfg.kappa, gamma=cfg.gamma, delta=cfg.delta)
    H = cfg.H()
    K0 = cfg.K0(ctx)
    nf = normal_form_iterate(H, K0, N=cfg.N, M=cfg.M, diagnostics=False)
    k = site_for(cfg.xi0, h)
    K_basis = cfg.K_basis or (max(abs(c) for c in k) + cfg.margin)
    rep = build_quasimode(H, K0, nf, k, K_basis, margin=min(cfg.margin, K_basis - max(abs(c) for c in k)))
    zero = (0,) * cfg.d
    xi = h * np.asarray(k, dtype=float).reshape(1, -1)
    c = complex(torus_average(K0).coeff(zero).evaluate(xi)[0]).real
    Mtot = quantize(H.symbol(ctx), K_basis).matrix + ctx.hbar ** ctx.kappa * quantize(K0, K_basis).matrix
    spectrum = eigensolve(Mtot)[0]
    Hk = float(H(xi)[0])
    first = ctx.hbar ** ctx.kappa * c
    lam = float(spectrum[np.argmin(np.abs(spectrum - (Hk + first)))])
    return rep.row(), {"hbar": h, "k": rep.row()["k"], "H": Hk, "first_correction": first,
                       "E": rep.E, "lambda": lam, "next_correction": abs(lam - Hk - first)}


QM_COLUMNS = ["hbar", "k", "E", "residual", "gap", "overlap", "nf_order"]


def _quasimode_sweep(cfg, workers):
    doc = cfg.to_dict()
    out = _pmap(_quasimode_point, [(doc, h) for h in cfg.hbars], workers)
    return [o[0] for o in out], [o[1] for o in out]


def run_scaling(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    rows, _ = _quasimode_sweep(cfg, workers)
    ctx = cfg.contexts()[0]
    hs = [r["hbar"] for r in rows]
    checks = [Check("gap <= residual at every site", all(r["gap"] <= r["residual"] + 1e-10 for r in rows),
                    max(r["gap"] - r["residual"] for r in rows), 1e-10)]
    c1, f1 = _slope_check("residual slope", hs, [r["residual"] for r in rows], cfg.kappa + ctx.alpha - 0.25)
    checks.append(c1)
    summary = {"alpha": ctx.alpha, "residual_fit": f1}
    if cfg.kappa > 1 + cfg.delta:
        c2, f2 = _slope_check("overlap deviation slope", hs, [1.0 - r["overlap"] for r in rows],
                              cfg.kappa - 1 - cfg.delta - 0.25)
        checks.append(c2)
        summary["overlap_fit"] = f2
    return RunResult("scaling", {"quasimodes": (QM_COLUMNS, rows)}, checks, summary)


def run_fkt(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    rows, extra = _quasimode_sweep(cfg, workers)
    ctx = cfg.contexts()[0]
    hs = [r["hbar"] for r in rows]
    checks = [Check("gap <= residual at every site", all(r["gap"] <= r["residual"] + 1e-10 for r in rows),
                    max(r["gap"] - r["residual"] for r in rows), 1e-10)]
    c1, f1 = _slope_check("next-correction slope", hs, [e["next_correction"] for e in extra],
                          cfg.kappa + ctx.alpha - 0.25, exact_tol=1e-12)
    checks.append(c1)
    c = [e["first_correction"] / e["hbar"] ** cfg.kappa for e in extra]
    summary = {"alpha": ctx.alpha, "mean_V": c[0], "first_correction": [e["first_correction"] for e in extra],
               "next_correction_fit": f1}
    cols = ["hbar", "k", "H", "first_correction", "E", "lambda", "next_correction"]
    return RunResult("fkt", {"quasimodes": (QM_COLUMNS, rows), "fkt": (cols, extra)}, checks, summary)


# ------------------------------------------------------------ normal form


def _nfcheck_point(args):
    cfg_doc, h = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    ctx = SemiclassicalContext(d=cfg.d, hbar=h, kappa=cfg.kappa, gamma=cfg.gamma, delta=cfg.delta)
    H = cfg.H()
    K0 = cfg.K0(ctx)
    nf = normal_form_iterate(H, K0, N=cfg.N, M=cfg.M)
    sa = all(is_selfadjoint(s.P) and is_selfadjoint(s.A) and is_selfadjoint(s.K_next) for s in nf.steps)
    steps = [{"hbar": h, "step": dg["step"], "remainder_norm": dg["remainder_norm"],
              "support_size": dg["support_size"]} for dg in nf.diagnostics]
    tele = telescoping_norms(nf, cfg.K_basis or 64)
    return steps, [{"hbar": h, "order": n + 1, "norm": v} for n, v in enumerate(tele)], sa


def telescoping_norms(nf, K_basis: int) -> list[float]:
    """Interior-block norms of U_n Q(H + hbar^kappa K0) U_n^* - Q(H + hbar^kappa (A_0 + ... + A_n)).

    The interior is the central half of the window, far from truncation effects of the exponentials.
    """
    ctx = nf.ctx
    hk = ctx.hbar ** ctx.kappa
    s = ctx.hbar ** (ctx.kappa - 1.0)
    Hs = nf.H.symbol(ctx)
    Q0 = quantize(Hs + nf.K0.scaled(hk), K_basis).dense()
    M = quantize(Hs, K_basis)
    idx = M.interior(bandwidth=1, margin=K_basis // 2)
    U = np.eye(M.size, dtype=complex)
    A_sum = FourierSymbol.zero(ctx)
    out = []
    for step in nf.steps:
        U = unitary_exp(step.P, s, K_basis) @ U
        A_sum = A_sum + step.A
        target = quantize(Hs + A_sum.scaled(hk), K_basis).dense()
        D = (U @ Q0 @ U.conj().T - target)[np.ix_(idx, idx)]
        out.append(float(np.linalg.norm(D, 2)))
    return out


def run_nfcheck(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    res = _pmap(_nfcheck_point, [(cfg.to_dict(), h) for h in cfg.hbars], workers)
    steps = [r for s, _, _ in res for r in s]
    tele = [r for _, t, _ in res for r in t]
    ctx = cfg.contexts()[0]
    a = ctx.alpha
    checks = [Check("self-adjointness of every P_n, A_n, K_n", all(r[2] for r in res), [r[2] for r in res], True)]
    summary = {"alpha": a, "remainder_fits": {}, "telescoping_fits": {}}
    for n in range(cfg.N):
        rows = [r for r in steps if r["step"] == n]
        c, f = _slope_check(f"remainder K_{n + 1} slope", [r["hbar"] for r in rows],
                            [r["remainder_norm"] for r in rows], (n + 1) * a - 0.25)
        checks.append(c)
        summary["remainder_fits"][n + 1] = f
        rows = [r for r in tele if r["order"] == n + 1]
        c, f = _slope_check(f"telescoping order {n + 1} slope", [r["hbar"] for r in rows],
                            [r["norm"] for r in rows], cfg.kappa + (n + 1) * a - 0.3)
        checks.append(c)
        summary["telescoping_fits"][n + 1] = f
    tables = {"nfcheck": (["hbar", "step", "remainder_norm", "support_size"], steps),
              "telescoping": (["hbar", "order", "norm"], tele)}
    return RunResult("nfcheck", tables, checks, summary)


# --------------------------------------------------------------- volumes


def _volume_point(args):
    cfg_doc, h, seed_seq = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    ctx = SemiclassicalContext(d=cfg.d, hbar=h, kappa=cfg.kappa, gamma=cfg.gamma, delta=cfg.delta)
    W = window_from_dict(cfg.window)
    hits = count_hits(cfg.n, cfg.quantity, W, cfg.H(), ctx, cfg.samples, seed_seq)
    slab = None
    if cfg.quantity == "zone" and cfg.n == 1 and cfg.d == 2 and cfg.H().kind in ("quadratic", "linear"):
        slab = slab_union_volume(W, cfg.H(), ctx)
    return ZoneVolumeEstimate(cfg.n, cfg.quantity, W.to_dict(), h, cfg.gamma, cfg.delta,
                              cfg.samples, hits, cfg.seed), slab


def run_volumes(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    if cfg.samples <= 0:
        raise ValueError("samples must be positive")
    if not cfg.delta > 2 * cfg.d * cfg.gamma:
        raise ParameterError(f"delta > 2 d gamma violated (delta={cfg.delta}, d={cfg.d}, gamma={cfg.gamma})")
    streams = np.random.SeedSequence(cfg.seed).spawn(len(cfg.hbars))
    doc = cfg.to_dict()
    res = _pmap(_volume_point, [(doc, h, s) for h, s in zip(cfg.hbars, streams)], workers)
    study = summarize_volumes([r[0] for r in res])
    slabs = {r[0].hbar: r[1] for r in res}
    rows = []
    for e in study.estimates:
        row = e.row()
        row["slab_union"] = "" if slabs[e.hbar] is None else slabs[e.hbar]
        rows.append(row)
    expected = cfg.expected_exponent
    if expected is None:
        expected = cfg.n * (cfg.delta - (cfg.d + 1) * cfg.gamma)
    checks = []
    if study.fit is None:
        checks.append(Check("volume exponent", False, "no fit (too few nonzero estimates)", expected))
    else:
        dev = abs(study.fit.slope - expected)
        checks.append(Check("volume exponent", dev <= cfg.tolerance, study.fit.slope,
                            [expected - cfg.tolerance, expected + cfg.tolerance]))
    if cfg.quantity == "block" and cfg.n == 0:
        vals = [e.estimate for e in study.estimates]
        checks.append(Check("B_0 fraction increases as hbar decreases",
                            all(b >= a for a, b in zip(vals, vals[1:])), vals))
    slab_vals = [s for s in slabs.values() if s is not None]
    if slab_vals:
        worst = 0.0
        for e in study.estimates:
            s = slabs[e.hbar]
            sigma = np.sqrt(max(s * (1 - s), 1e-12) / e.samples)
            worst = max(worst, abs(e.estimate - s) / (sigma + 1e-4 * s))
        checks.append(Check("MC agrees with slab union (in standard errors)", worst <= 5.0, worst, 5.0))
        sfit = fit_slope([e.hbar for e in study.estimates], [slabs[e.hbar] for e in study.estimates])
        checks.append(Check("slab-union exponent", abs(sfit.slope - expected) <= cfg.tolerance, sfit.slope,
                            [expected - cfg.tolerance, expected + cfg.tolerance]))
    summary = {"exponent": None if study.fit is None else study.fit.to_dict(),
               "lower_bound_only": study.lower_bound_only, "expected": expected}
    cols = ["hbar", "n", "samples", "hits", "estimate", "ci_lo", "ci_hi", "seed", "slab_union"]
    return RunResult("volumes", {"volumes": (cols, rows)}, checks, summary)


# -------------------------------------------------------------- blockmap


def run_blockmap(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    if cfg.d != 2:
        raise ValueError("blockmap expects d = 2")
    W = window_from_dict(cfg.window)
    if not isinstance(W, Box):
        raise ValueError("blockmap needs a box window")
    ctx = cfg.contexts()[0]
    g1 = np.linspace(W.lo[0], W.hi[0], cfg.grid)
    g2 = np.linspace(W.lo[1], W.hi[1], cfg.grid)
    X, Y = np.meshgrid(g1, g2, indexing="ij")
    xi = np.stack([X.ravel(), Y.ravel()], axis=1)
    table = block_dimensions(xi, cfg.H(), ctx)
    cols = ["xi1", "xi2"] + [f"b{n}" for n in range(cfg.d + 1)] + ["blocks"]
    rows = []
    for p, flags in zip(xi, table):
        row = {"xi1": float(p[0]), "xi2": float(p[1]), "blocks": int(flags.sum())}
        row.update({f"b{n}": bool(flags[n]) for n in range(cfg.d + 1)})
        rows.append(row)
    fractions = table.mean(axis=0)
    checks = [Check("covering: every grid point lies in some block", bool(np.all(table.any(axis=1))),
                    int(np.sum(~table.any(axis=1))), 0),
              Check("block fractions sum to at least 1", float(fractions.sum()) >= 1.0, float(fractions.sum()), 1.0)]
    return RunResult("blockmap", {"blockmap": (cols, rows)}, checks,
                     {"hbar": ctx.hbar, "fractions": fractions.tolist()})


RUNNERS = {"fkt": run_fkt, "nfcheck": run_nfcheck, "scaling": run_scaling,
           "volumes": run_volumes, "blockmap": run_blockmap}


def run_experiment(cfg: ExperimentConfig, out=None, workers: int | None = None) -> RunResult:
    res = RUNNERS[cfg.experiment](cfg, resolve_workers(workers))
    if out is not None:
        res.write(out, cfg)
    return res


def normal_form_document(cfg: ExperimentConfig, hbar: float) -> dict:
    """JSON document of the normal form at one hbar (per-step symbols and diagnostics)."""
    ctx = SemiclassicalContext(d=cfg.d, hbar=hbar, kappa=cfg.kappa, gamma=cfg.gamma, delta=cfg.delta)
    return normal_form_to_dict(normal_form_iterate(cfg.H(), cfg.K0(ctx), N=cfg.N, M=cfg.M))


__all__ = ["ExperimentConfig", "RunResult", "Check", "run_experiment", "run_fkt", "run_nfcheck",
           "run_scaling", "run_volumes", "run_blockmap", "telescoping_norms", "perturbation_symbol",
           "EXPERIMENTS", "DEFAULTS", "basis_index"]
