"""
Rolling-window VaR backtest of the five forecasters.

A 900-day panel, a 500-day window and refits every 20 days keep the run to a
few minutes; pass refit_every=1 for the daily scheme.
"""

from rgquant.backtest import relative_losses, rolling_backtest
from rgquant.simulate import DgpConfig, simulate_observations

tau = 0.05
obs, _ = simulate_observations(DgpConfig(n=900, m=200, seed=3), taus=(tau,))

reports = []
for model in ("rg", "rr", "qgarch", "rcaviar", "sq"):
    res = rolling_backtest(obs, model, tau, window=500, refit_every=20, seed=0)
    reports.append(res.report)
relative_losses(reports, "rg")

print(f"{'model':8s} {'loss':>8s} {'rel':>6s} {'hits':>6s} {'LRuc p':>7s} {'LRcc p':>7s} {'DQ p':>7s}")
for r in reports:
    print(
        f"{r.model:8s} {r.avg_quantile_loss:8.4f} {r.relative_loss:6.3f} {r.hit_rate:6.3f} "
        f"{r.lruc.pvalue:7.3f} {r.lrcc.pvalue:7.3f} {r.dq.pvalue:7.3f}"
    )
