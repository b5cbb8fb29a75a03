"""Identify, estimate, and check a seasonal model for half-hourly demand.

The classical workflow: difference away trend and the weekly cycle,
read the correlograms, fit by conditional least squares, then ask the
residuals whether anything structured is left.
"""

import numpy as np

from demandcast import arima, dataset
from demandcast.arima import ArimaSpec


def main():
    records = dataset.synthesize(35, seed=6)
    demand = np.array([r.demand for r in records])
    print(f"{len(demand)} half-hourly observations "
          f"({len(demand) // 48} days)")

    # identification: the raw series is dominated by the daily cycle
    raw_acf = arima.acf(demand, 96)
    print(f"\nraw series acf: lag 48 = {raw_acf[48]:.3f}, "
          f"lag 96 = {raw_acf[96]:.3f}  (strong daily cycle)")

    weekly = arima.difference(demand, 336)
    stationary = arima.difference(weekly, 1)
    diff_acf = arima.acf(stationary, 48)
    print(f"after weekly (lag 336) and first differencing: "
          f"lag 1 = {diff_acf[1]:.3f}, lag 48 = {diff_acf[48]:.3f}")

    spec = ArimaSpec(p=1, d=1, q=1, sp=1, sd=0, sq=1, season=48,
                     pre_diff_lag=336)
    print(f"\nfitting {spec.label()} by conditional least squares")
    fit_ = arima.fit(demand, spec)
    print(f"  converged after {fit_.iterations} iterations, "
          f"sse {fit_.sse:.1f}")
    print(f"  ar {fit_.ar[0]:+.4f}   ma {fit_.ma[0]:+.4f}")
    print(f"  seasonal ar {fit_.seasonal_ar[0]:+.4f}   "
          f"seasonal ma {fit_.seasonal_ma[0]:+.4f}")
    print(f"  residual variance {fit_.sigma2:.2f} MWh^2")
    if fit_.near_unit_root:
        print("  warning: an estimated root sits near the unit circle")

    report = arima.diagnostics(fit_)
    print(f"\nLjung-Box on {report.max_lag} residual lags: "
          f"Q = {report.ljung_box:.1f}, dof {report.dof}, "
          f"p = {report.p_value:.3f}")
    print("  residual mean "
          f"{report.residual_mean:+.3f}, variance "
          f"{report.residual_variance:.2f}")

    horizon = 8
    preds = arima.forecast(fit_, horizon)
    print(f"\nnext {horizon} half hours against a naive same-time-"
          "yesterday guess:")
    print("  step   forecast   yesterday")
    for k in range(horizon):
        naive = demand[len(demand) - 48 + k]
        print(f"  {k + 1:4d}   {preds[k]:8.1f}   {naive:9.1f}")

    # the two-command alternative: save the fit, forecast from the file
    text = arima.to_text(fit_)
    reloaded, _ = arima.from_text(text)
    same = np.array_equal(arima.forecast(reloaded, horizon), preds)
    print(f"\nround trip through the text snapshot preserves forecasts: "
          f"{same}")


if __name__ == "__main__":
    main()
