"""Machine-precision identity suite behind ``loctime verify-identities``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hermite_bessel import bessel_number, kailath_segall_expansion, limit_constant_squared
from .iterated_integrals import (
    DiscretizedMartingale,
    build_ladder,
    check_kailath_segall_continuous,
    power_variation,
)
from .path_sim import local_time_field, make_rng, mix_seed, simulate_brownian
from .statistics_core import StatisticRequest, compensator, window_integrals

__all__ = ["BESSEL_MAGNITUDES", "CheckResult", "run_identity_suite", "newton_residuals", "field_identity_errors"]

# |a(q, k)| for q = 2..9, k >= 1
BESSEL_MAGNITUDES = {
    2: (1,),
    3: (3,),
    4: (6, 3),
    5: (10, 15),
    6: (15, 45, 15),
    7: (21, 105, 105),
    8: (28, 210, 420, 105),
    9: (36, 378, 1260, 945),
}
KS_EXPANSIONS = {3: (1, -3), 8: (1, -28, 210, -420, 105)}
LIMIT_CONSTANTS_SQUARED = {2: Fraction(64, 3), 3: Fraction(192), 4: Fraction(2**9 * 24, 5)}

REL_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)


def newton_residuals(path: DiscretizedMartingale, max_q: int = 8) -> list[tuple[int, float, float]]:
    """``(q, residual, scale)`` of the end-point Newton identity for q = 1..max_q."""
    ladder = build_ladder(path, max_q)
    p = [None] + [power_variation(path, k)[-1] for k in range(1, max_q + 1)]
    out = []
    for q in range(1, max_q + 1):
        lhs = q * ladder[q][-1]
        terms = [(-1) ** (k + 1) * ladder[q - k][-1] * p[k] for k in range(1, q + 1)]
        scale = max([abs(lhs)] + [abs(x) for x in terms])
        out.append((q, abs(lhs - math.fsum(terms)), scale))
    return out


def field_identity_errors(field, h: float) -> tuple[float, float]:
    """Relative Fubini error of ``R_{2,h}`` and scaled q=3 telescoping residual."""
    r2 = compensator(field, StatisticRequest(2, h))
    fubini = abs(r2 + 4 * h * field.mass) / (4 * h * field.mass)
    r3 = compensator(field, StatisticRequest(3, h))
    m = int(round(h / field.bin_width))
    L = np.concatenate([np.zeros(m), field.values, np.zeros(m)])
    diff = L[m:] - L[:-m]
    scale = float(np.sum(np.abs(diff) * window_integrals(field, h)) * field.bin_width)
    return fubini, abs(r3) / scale if scale else abs(r3)


def run_identity_suite(n_paths: int = 100, seed: int = 0, path_steps: int = 10_000) -> list[CheckResult]:
    results = []

    bad = [
        (q, k)
        for q, row in BESSEL_MAGNITUDES.items()
        for k, mag in enumerate(row, start=1)
        if abs(bessel_number(q, k)) != mag
    ]
    n_entries = sum(len(r) for r in BESSEL_MAGNITUDES.values())
    results.append(CheckResult("bessel-table", not bad, f"{n_entries} entries, mismatches {bad}"))

    bad = [q for q, want in KS_EXPANSIONS.items() if kailath_segall_expansion(q).monomial_coeffs != want]
    results.append(CheckResult("kailath-segall-expansions", not bad, f"q in {sorted(KS_EXPANSIONS)}, mismatches {bad}"))

    bad = [q for q, want in LIMIT_CONSTANTS_SQUARED.items() if limit_constant_squared(q) != want]
    results.append(CheckResult("limit-constants", not bad, f"c_q^2 exact for q in {sorted(LIMIT_CONSTANTS_SQUARED)}, mismatches {bad}"))

    bad = [
        (q, k)
        for q in range(2, 13)
        for k in range(1, (q - 1) // 2 + 1)
        if q * bessel_number(q - 1, k) - (q - 2 * k) * bessel_number(q, k) != 0
    ]
    results.append(CheckResult("bessel-recurrence", not bad, f"q <= 12, failures {bad}"))

    worst = 0.0
    worst_q2 = 0.0
    for i in range(n_paths):
        rng = make_rng(mix_seed(seed, i))
        path = DiscretizedMartingale.from_increments(rng.standard_normal(path_steps) / math.sqrt(path_steps))
        for _, res, scale in newton_residuals(path, 8):
            worst = max(worst, res / scale if scale else res)
        q2 = check_kailath_segall_continuous(path, 2)
        worst_q2 = max(worst_q2, q2 / max(1.0, float(np.max(path.values**2 + path.quad_var))))
    results.append(CheckResult("newton-identity", worst <= REL_TOL, f"max relative residual {worst:.3e} over {n_paths} paths, q<=8"))
    results.append(CheckResult("kailath-segall-q2", worst_q2 <= 1e-12, f"max relative defect {worst_q2:.3e}"))

    worst_mass = worst_fubini = worst_tel = 0.0
    for i in range(n_paths):
        fld = local_time_field(simulate_brownian(1.0, 1e-4, make_rng(mix_seed(seed + 1, i))), 0.01)
        worst_mass = max(worst_mass, abs(fld.mass - 1.0))
        for h in (0.4, 0.1):
            fub, tel = field_identity_errors(fld, h)
            worst_fubini = max(worst_fubini, fub)
            worst_tel = max(worst_tel, tel)
    results.append(CheckResult("occupation-mass", worst_mass <= REL_TOL, f"max |sum L dx - t| {worst_mass:.3e}"))
    results.append(CheckResult("fubini-q2", worst_fubini <= REL_TOL, f"max relative error {worst_fubini:.3e}"))
    results.append(CheckResult("telescoping-q3", worst_tel <= REL_TOL, f"max scaled residual {worst_tel:.3e}"))
    return results
