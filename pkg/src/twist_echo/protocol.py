"""Named end-to-end scenarios over the exact and Gaussian engines."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import exact_collective as ec
from . import gaussian_model as gm
from .internal_dynamics import internal_squeezing, zeta_sq_analytic
from .spin_algebra import format_f, make_spin_space

__all__ = [
    "ScenarioConfig",
    "SqueezingReport",
    "run_scenario",
    "sweep",
    "load_scenario",
    "SWEEPABLE",
]

log = logging.getLogger(__name__)

SCHEMES = ("echo", "cooperative", "plain_qnd")
ENGINES = ("exact", "gaussian", "both")
NOISE_FIELDS = ("epsilon", "beta", "alpha0", "T")
SWEEPABLE = (
    "f", "n_atoms", "chi_t", "kappa", "alpha_tilde", "x_m", "feedback_gain",
    "n_max", "epsilon", "beta", "alpha0",
)
REPORT_FIELDS = ("zeta_sq", "xi_sq", "xi_s_sq", "xi_oat_sq", "xi_w_sq", "xi_max_sq", "discrepancy")


@dataclass(frozen=True)
class ScenarioConfig:
    scheme: str = "echo"
    engine: str = "gaussian"
    f: float = 1.5
    n_atoms: int = 3
    chi_t: float = math.pi / 2
    kappa: float | None = None
    alpha_tilde: float | None = None
    axis: str | None = None
    x_m: float = 0.0
    n_max: int = 10
    noise: gm.NoiseConfig | None = None
    feedback_gain: float | None = None
    sample_outcome: bool = False
    seed: int | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        object.__setattr__(self, "f", make_spin_space(self.f).f)
        if self.kappa is None and self.alpha_tilde is None:
            raise ValueError("either kappa or alpha_tilde is required")
        if self.scheme == "cooperative" and self.engine != "gaussian":
            raise ValueError("the cooperative scheme is available on the gaussian engine only")
        if self.noise is not None and self.scheme == "cooperative":
            raise ValueError("the noise model covers the echo and plain_qnd schemes")
        if self.noise is not None and self.engine != "gaussian":
            raise ValueError("noise is modelled on the gaussian engine only")

    def resolved_kappa(self) -> float:
        if self.kappa is not None:
            return float(self.kappa)
        kappa = math.sqrt(self.f * self.n_atoms) * self.alpha_tilde
        log.info("kappa = sqrt(f N) alpha_tilde = %.6g (f=%s, N=%d)", kappa, format_f(self.f), self.n_atoms)
        return kappa

    def resolved_alpha_tilde(self) -> float:
        if self.alpha_tilde is not None:
            return float(self.alpha_tilde)
        alpha = self.kappa / math.sqrt(self.f * self.n_atoms)
        log.info("alpha_tilde = kappa / sqrt(f N) = %.6g", alpha)
        return alpha

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["noise"] = None if self.noise is None else dataclasses.asdict(self.noise)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)} - set(NOISE_FIELDS)
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        noise = data.pop("noise", None)
        flat_noise = {k: data.pop(k) for k in NOISE_FIELDS if k in data}
        if noise is not None or flat_noise:
            merged = dict(noise or {})
            merged.update({k: v for k, v in flat_noise.items() if v is not None})
            noise = gm.NoiseConfig(**merged) if merged else None
        if isinstance(data.get("f"), str):
            data["f"] = make_spin_space(data["f"]).f
        return cls(noise=noise, **data)

    def replace(self, name: str, value) -> "ScenarioConfig":
        if name not in SWEEPABLE:
            raise ValueError(f"unknown sweep axis {name!r}; choose from {SWEEPABLE}")
        if name in NOISE_FIELDS:
            noise = dataclasses.replace(self.noise or gm.NoiseConfig(), **{name: value})
            return dataclasses.replace(self, noise=noise)
        if name == "n_atoms" or name == "n_max":
            value = int(value)
        return dataclasses.replace(self, **{name: value})


@dataclass
class SqueezingReport:
    scheme: str
    engine: str
    zeta_sq: float | None = None
    xi_sq: float | None = None
    xi_s_sq: float | None = None
    xi_oat_sq: float | None = None
    xi_w_sq: float | None = None
    xi_max_sq: float | None = None
    discrepancy: float | None = None
    provenance: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    def to_dict(self, include_timings=False) -> dict:
        out = {"scheme": self.scheme, "engine": self.engine, **self.values(),
               "provenance": self.provenance, "extras": self.extras}
        if include_timings:
            out["timings"] = self.timings
        return out


def _gaussian(cfg: ScenarioConfig, report: SqueezingReport):
    kappa = cfg.resolved_kappa()
    f = cfg.f
    report.xi_max_sq = 1.0 / (1.0 + 2 * f * kappa**2)
    report.provenance["kappa"] = kappa
    if cfg.scheme == "cooperative":
        report.xi_oat_sq = internal_squeezing(f, cfg.chi_t)
        report.xi_s_sq = float(gm.cooperative_xi(report.xi_oat_sq, kappa))
        return
    zeta_sq = 1.0 if cfg.scheme == "plain_qnd" else float(zeta_sq_analytic(f, cfg.chi_t))
    report.zeta_sq = zeta_sq
    if cfg.noise is not None:
        report.xi_sq = float(gm.noisy_xi(zeta_sq, kappa, cfg.noise))
        report.provenance["noise"] = dataclasses.asdict(cfg.noise)
    elif cfg.feedback_gain is not None:
        report.xi_sq = gm.measure_feedback(None, zeta_sq, kappa, cfg.feedback_gain)
        report.provenance["feedback_gain"] = cfg.feedback_gain
    else:
        report.xi_sq = float(gm.xi_squared(zeta_sq, kappa))
        report.provenance["feedback_gain"] = gm.optimal_gain(zeta_sq, kappa)


def _exact(cfg: ScenarioConfig, report: SqueezingReport, rng=None):
    alpha = cfg.resolved_alpha_tilde()
    chi_t = 0.0 if cfg.scheme == "plain_qnd" else cfg.chi_t
    qcfg = ec.QndConfig(alpha, cfg.n_atoms, cfg.f, axis=cfg.axis, n_max=cfg.n_max, x_m=cfg.x_m)
    x_m = cfg.x_m
    if cfg.sample_outcome:
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        light = ec.LightMode(n_max=cfg.n_max)
        space = qcfg.space
        atoms = ec.css(space, cfg.n_atoms)
        atoms = atoms.with_amplitudes(ec.oat_product(space, cfg.n_atoms, chi_t) * atoms.amplitudes)
        joint = ec.qnd_unitary(qcfg, light).apply(ec.attach_vacuum(atoms, light))
        x_m = ec.sample_outcome(joint, rng, light)
    state, density = ec.run_echo_protocol(qcfg, chi_t, x_m=x_m, return_density=True)
    before = ec.wineland(state)
    after = before if qcfg.space.two_f < 2 else ec.wineland(ec.rf_map(state))
    report.xi_w_sq = after
    report.zeta_sq = float(zeta_sq_analytic(cfg.f, chi_t))
    report.xi_max_sq = 1.0 / (1.0 + 2 * cfg.f * qcfg.kappa**2)
    report.extras.update({"xi_w_sq_before_rf": before, "outcome_density": density, "x_m": x_m})
    report.provenance.update({"alpha_tilde": alpha, "kappa": qcfg.kappa, "axis": qcfg.axis})


def run_scenario(cfg: ScenarioConfig, rng=None) -> SqueezingReport:
    report = SqueezingReport(cfg.scheme, cfg.engine, provenance={"config": cfg.to_dict()})
    t0 = time.perf_counter()
    if cfg.engine in ("gaussian", "both"):
        _gaussian(cfg, report)
        report.timings["gaussian_s"] = time.perf_counter() - t0
    if cfg.engine in ("exact", "both"):
        gauss_xi = report.xi_sq
        t1 = time.perf_counter()
        _exact(cfg, report, rng)
        report.timings["exact_s"] = time.perf_counter() - t1
        if cfg.engine == "both":
            report.xi_sq = gauss_xi
            report.discrepancy = abs(report.xi_w_sq - gauss_xi)
    return report


def _point_rng(seed, index):
    if seed is None:
        return None
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def sweep(template: ScenarioConfig, axis: str, values, workers: int = 1):
    """Run ``template`` with ``axis`` set to each value; results in input order.

    Each point draws from its own generator seeded by ``(seed, index)``,
    so parallel and sequential runs agree bit for bit.
    """
    if axis not in SWEEPABLE:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEPABLE}")
    values = list(values)
    configs = [template.replace(axis, v) for v in values]

    def work(item):
        i, cfg = item
        return run_scenario(cfg, _point_rng(cfg.seed, i))

    items = list(enumerate(configs))
    if workers <= 1 or len(items) <= 1:
        return [work(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, items))


def load_scenario(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return ScenarioConfig.from_dict(json.load(fh))
