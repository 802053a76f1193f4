"""Analytic inference-energy estimator for compressed embedding layers.

Models a query of l tokens against a V x d embedding table, charging nu
picojoules per float32 touched in memory and tau per float32 arithmetic
operation.  Three layouts are compared:

  uncompressed    E_nu  = nu (d V + l d),                E_tau  = 0
  tensor-train    E'_nu = nu (V p + l p + l d),          E'_tau = tau p
  low-rank table  E''_nu = nu [k (V + 2 d + l + 1) + l d],
                  E''_tau = tau (2 l d k - l d + k d)    (clamped at 0)

where p is the per-token core storage (sum r_{k-1} I_k r_k) and k the
whole-table factorization rank.  omega = compressed / uncompressed energy.

The published expressions write the tensor-train storage as N I r^2 for
uniform mode size I and rank r; this module substitutes the exact
boundary-corrected count 2 I r + (N - 2) I r^2 (identical at r = 1) and
always reports the discrepancy when a uniform triple is supplied.  The
tensor-train compute term tau * p is sequence-length independent exactly as
published; "exact-count" mode instead charges tau * l * chain flops.

Default nu / tau = 5; hardware presets carry the measured per-operation
ranges for a Cortex-A76 single-board CPU and an A100-class server GPU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

MODE_FORMULA = "formula"
MODE_EXACT = "exact-count"

CSV_HEADER = (
    "V,d,l,p,k,nu,tau,mode,E_nu,E_tau,E_nu_tt,E_tau_tt,E_nu_svd,E_tau_svd,omega_tt,omega_svd"
)

# Measured per-float32 energy ranges, picojoules.  mid = arithmetic midpoint.
_DEVICE_RANGES = {
    "pi5": {"add": (1.0, 2.5), "mult": (1.2, 3.0), "memory": (70.0, 260.0)},
    "a100": {"add": (5.0, 12.0), "mult": (6.0, 15.0), "memory": (100.0, 450.0)},
}
# One-time network transfer, nanojoules per float32.
COMM_NJ = {"wired": (50.0, 350.0), "wireless": (400.0, 6000.0)}


def _pick(lo: float, hi: float, level: str) -> float:
    return {"low": lo, "mid": (lo + hi) / 2.0, "high": hi}[level]


def preset(name: str) -> tuple[float, float]:
    """(nu, tau) for a '<device>-<level>' preset such as 'pi5-mid'.

    nu comes from the memory row; tau averages the add and mult rows at the
    same level, standing in for a generic scalar multiply-add.
    """
    device, _, level = name.partition("-")
    if device not in _DEVICE_RANGES or level not in ("low", "mid", "high"):
        raise KeyError(f"unknown preset {name!r}")
    rng = _DEVICE_RANGES[device]
    nu = _pick(*rng["memory"], level)
    tau = (_pick(*rng["add"], level) + _pick(*rng["mult"], level)) / 2.0
    return nu, tau


def preset_names() -> list[str]:
    return [f"{d}-{lvl}" for d in _DEVICE_RANGES for lvl in ("low", "mid", "high")]


def download_energy_pj(n_scalars: int, link: str = "wireless", level: str = "mid") -> float:
    """Energy of the one-time vocabulary download (the only network transfer)."""
    lo, hi = COMM_NJ[link]
    return _pick(lo, hi, level) * 1000.0 * n_scalars


def uniform_param_count(order: int, mode_size: int, r: int) -> int:
    """Exact per-token storage for a uniform shape: 2 I r + (N - 2) I r^2."""
    if order < 2:
        raise ValueError(f"uniform triple needs order >= 2, got {order}")
    return 2 * mode_size * r + (order - 2) * mode_size * r * r


def uniform_nir2(order: int, mode_size: int, r: int) -> int:
    """The published storage expression N I r^2 (boundary ranks ignored)."""
    return order * mode_size * r * r


def uniform_reconstruction_flops(order: int, mode_size: int, r: int) -> int:
    """Exact chain multiply-adds for a uniform shape with interior rank r."""
    ranks = [1] + [r] * (order - 1) + [1]
    total = 0
    left = mode_size
    for k in range(1, order):
        total += 2 * left * ranks[k] * mode_size * ranks[k + 1]
        left *= mode_size
    return total


@dataclass(frozen=True)
class EnergyConfig:
    """One energy scenario: model hyperparameters plus per-scalar costs.

    Supply the tensor-train budget either as the exact per-token parameter
    count ``p`` or as a ``uniform`` (N, I, r) triple.  ``flops_per_token``
    feeds exact-count mode when no uniform triple is given.
    """

    V: int
    d: int
    l: int
    nu: float = 1.0
    tau: float = 0.2
    p: int | None = None
    uniform: tuple[int, int, int] | None = None
    k: int | None = None
    mode: str = MODE_FORMULA
    flops_per_token: int | None = None

    def __post_init__(self):
        if self.V < 0 or self.d < 1 or self.l < 0:
            raise ValueError(f"invalid table geometry V={self.V} d={self.d} l={self.l}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive and finite, got {self.nu}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if self.mode not in (MODE_FORMULA, MODE_EXACT):
            raise ValueError(f"mode must be {MODE_FORMULA!r} or {MODE_EXACT!r}")
        if self.p is None and self.uniform is None:
            raise ValueError("need p or a uniform (N, I, r) triple")
        if self.p is not None and self.p < 0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.k is not None and self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")

    @property
    def params_per_token(self) -> int:
        if self.p is not None:
            return self.p
        return uniform_param_count(*self.uniform)

    @property
    def uniform_discrepancy(self) -> int | None:
        """N I r^2 minus the exact count; None when no uniform triple given."""
        if self.uniform is None:
            return None
        return uniform_nir2(*self.uniform) - uniform_param_count(*self.uniform)


def baseline_energy(cfg: EnergyConfig) -> tuple[float, float]:
    """Uncompressed lookup: pure memory traffic, zero arithmetic."""
    return cfg.nu * (cfg.d * cfg.V + cfg.l * cfg.d), 0.0


def tt_energy(cfg: EnergyConfig) -> tuple[float, float]:
    """Tensor-train path: core storage plus reconstruction arithmetic."""
    p = cfg.params_per_token
    e_nu = cfg.nu * (cfg.V * p + cfg.l * p + cfg.l * cfg.d)
    if cfg.mode == MODE_FORMULA:
        e_tau = cfg.tau * p
    else:
        if cfg.flops_per_token is not None:
            flops = cfg.flops_per_token
        elif cfg.uniform is not None:
            flops = uniform_reconstruction_flops(*cfg.uniform)
        else:
            raise ValueError("exact-count mode needs flops_per_token or a uniform triple")
        e_tau = cfg.tau * cfg.l * flops
    return e_nu, e_tau


def svd_energy(cfg: EnergyConfig) -> tuple[float, float]:
    """Low-rank-table path; the arithmetic term is clamped at zero."""
    if cfg.k is None:
        raise ValueError("svd_energy needs a factorization rank k")
    k = cfg.k
    e_nu = cfg.nu * (k * (cfg.V + 2 * cfg.d + cfg.l + 1) + cfg.l * cfg.d)
    e_tau = cfg.tau * (2 * cfg.l * cfg.d * k - cfg.l * cfg.d + k * cfg.d)
    return e_nu, max(e_tau, 0.0)


@dataclass(frozen=True)
class EnergyReport:
    """All energies (pJ) and compressed-to-uncompressed ratios for one config."""

    V: int
    d: int
    l: int
    p: int
    k: int | None
    nu: float
    tau: float
    mode: str
    E_nu: float
    E_tau: float
    E_nu_tt: float
    E_tau_tt: float
    E_nu_svd: float | None
    E_tau_svd: float | None
    omega_tt: float
    omega_svd: float | None
    svd_tau_clamped: bool = False
    uniform_discrepancy: int | None = None

    def csv_row(self) -> str:
        def num(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return f"{x:.6f}".rstrip("0").rstrip(".")
            return str(x)

        return ",".join(
            num(v)
            for v in (
                self.V, self.d, self.l, self.p, self.k, self.nu, self.tau, self.mode,
                self.E_nu, self.E_tau, self.E_nu_tt, self.E_tau_tt,
                self.E_nu_svd, self.E_tau_svd, self.omega_tt, self.omega_svd,
            )
        )

    def kv_lines(self) -> Iterator[str]:
        for name in (
            "V", "d", "l", "p", "k", "nu", "tau", "mode", "E_nu", "E_tau",
            "E_nu_tt", "E_tau_tt", "E_nu_svd", "E_tau_svd", "omega_tt", "omega_svd",
        ):
            yield f"{name}={getattr(self, name)}"
        if self.svd_tau_clamped:
            yield "svd_tau_clamped=true"
        if self.uniform_discrepancy is not None:
            yield f"uniform_nir2_minus_exact={self.uniform_discrepancy}"


def compare(cfg: EnergyConfig) -> EnergyReport:
    """Assemble the full report; omega_svd stays None without a rank k."""
    e_nu, e_tau = baseline_energy(cfg)
    tt_nu, tt_tau = tt_energy(cfg)
    total = e_nu + e_tau
    report = dict(
        V=cfg.V, d=cfg.d, l=cfg.l, p=cfg.params_per_token, k=cfg.k,
        nu=cfg.nu, tau=cfg.tau, mode=cfg.mode,
        E_nu=e_nu, E_tau=e_tau, E_nu_tt=tt_nu, E_tau_tt=tt_tau,
        omega_tt=(tt_nu + tt_tau) / total,
        uniform_discrepancy=cfg.uniform_discrepancy,
    )
    if cfg.k is not None:
        svd_nu, svd_tau = svd_energy(cfg)
        raw_tau = cfg.tau * (2 * cfg.l * cfg.d * cfg.k - cfg.l * cfg.d + cfg.k * cfg.d)
        report.update(
            E_nu_svd=svd_nu,
            E_tau_svd=svd_tau,
            omega_svd=(svd_nu + svd_tau) / total,
            svd_tau_clamped=raw_tau < 0,
        )
    else:
        report.update(E_nu_svd=None, E_tau_svd=None, omega_svd=None)
    return EnergyReport(**report)
