"""Synthetic option-desk market for demos and end-to-end tests.

Fourteen factors: underlying log-changes for three tech names, their 1m/2m/6m
ATM implied-volatility changes, and changes in the 2y and 10y curve points.
The history generator draws from a multivariate Student-t (nu = 5) with a
structured correlation: 0.45 across the underlyings, 0.6 between vol tenors
of one name, -0.35 between each underlying and its own vols (leverage), and
0.85 between the two curve points.  Daily scales: 2% for underlyings, 60bp
for vols, 5bp for rates.  All of it is deterministic in the seed.

The three demo view sets mirror a typical committee: one analyst bearish on
the Google 2m-6m implied-vol spread (one sigma below its mean), one bullish
on Microsoft realized volatility (median above the prior third quintile),
and one pinning the 2y-10y slope change at five basis points.
"""

from typing import List, Tuple

import numpy as np

from .options import ButterflyContract
from .views import TargetSpec, View

FACTOR_NAMES = [
    "XM", "XM1m", "XM2m", "XM6m",
    "XY", "XY1m", "XY2m", "XY6m",
    "XG", "XG1m", "XG2m", "XG6m",
    "X2y", "X10y",
]

_UNDERLYING_SCALE = 0.02
_VOL_SCALE = 0.006
_RATE_SCALE = 0.0005
_T_DOF = 5.0


def _correlation_matrix() -> np.ndarray:
    n = len(FACTOR_NAMES)
    corr = np.eye(n)

    def name_block(base: int):
        # base indexes the underlying; base+1..base+3 its vol tenors
        for a in range(1, 4):
            corr[base, base + a] = corr[base + a, base] = -0.35
            for b in range(a + 1, 4):
                corr[base + a, base + b] = corr[base + b, base + a] = 0.6

    for base in (0, 4, 8):
        name_block(base)
    for first, second in ((0, 4), (0, 8), (4, 8)):
        corr[first, second] = corr[second, first] = 0.45
        for a in range(1, 4):
            for b in range(1, 4):
                corr[first + a, second + b] = corr[second + b, first + a] = 0.25
    corr[12, 13] = corr[13, 12] = 0.85
    # make sure the hand-built matrix is usable as a covariance
    smallest = float(np.linalg.eigvalsh(corr)[0])
    if smallest < 1e-8:
        corr += (1e-8 - smallest) * np.eye(n)
        d = np.sqrt(np.diag(corr))
        corr = corr / np.outer(d, d)
    return corr


def case_study_history(t_obs: int = 700, seed: int = 20080915) -> np.ndarray:
    """T_obs x 14 panel of joint daily factor changes (thick-tailed)."""
    corr = _correlation_matrix()
    scales = np.array([_UNDERLYING_SCALE] + [_VOL_SCALE] * 3
                      + [_UNDERLYING_SCALE] + [_VOL_SCALE] * 3
                      + [_UNDERLYING_SCALE] + [_VOL_SCALE] * 3
                      + [_RATE_SCALE] * 2)
    cov = corr * np.outer(scales, scales)
    chol = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((t_obs, len(FACTOR_NAMES))) @ chol.T
    # scale mixing turns the normals into Student-t draws with fat tails
    chi = rng.chisquare(_T_DOF, size=t_obs) / _T_DOF
    return z / np.sqrt(chi)[:, np.newaxis]


def case_study_book() -> List[ButterflyContract]:
    """Nine at-the-money butterflies: 1m/2m/6m tenors on three names."""
    spots = {"M": 30.0, "Y": 25.0, "G": 500.0}
    vols = {"M": 0.35, "Y": 0.40, "G": 0.38}
    tenors = {"1m": 1.0 / 12.0, "2m": 2.0 / 12.0, "6m": 0.5}
    book = []
    for name in ("M", "Y", "G"):
        for tenor, expiry in tenors.items():
            book.append(ButterflyContract(
                underlying_id=f"{name}{tenor}",
                strike=spots[name],
                expiry=expiry,
                risk_free=0.02,
                smile_alpha=-0.08,
                smile_beta=0.4,
                current_underlying=spots[name],
                current_atm_vol=vols[name],
                horizon=1.0 / 252.0,
                underlying_factor=f"X{name}",
                vol_factor=f"X{name}{tenor}",
            ))
    return book


def analyst_views() -> List[Tuple[str, float, List[View]]]:
    """The three-analyst committee: (user_id, overall confidence, views)."""
    spread_bearish = View(
        kind="MeanLocation",
        columns=("XG6m - XG2m",),
        direction="<=",
        target=TargetSpec(mode="KappaSigma", value=-1.0),
    )
    realized_vol_bullish = View(
        kind="MedianLocation",
        columns=("abs(XM)",),
        direction=">=",
        target=TargetSpec(mode="QuantileShift", value=0.5),
    )
    slope_up_5bp = View(
        kind="MeanLocation",
        columns=("X10y - X2y",),
        direction="=",
        target=TargetSpec(mode="Absolute", value=0.0005),
    )
    return [
        ("spread_analyst", 0.20, [spread_bearish]),
        ("realized_vol_analyst", 0.25, [realized_vol_bullish]),
        ("macro_analyst", 0.20, [slope_up_5bp]),
    ]
