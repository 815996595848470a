"""
Counting statistics of a pair source
====================================

Accidental coincidences, a visibility fit with floor subtraction, and the
CHSH parameter for the singlet model.
"""
import numpy as np

from pairsource.coincidence_stats import (CorrelationCurve, CurvePoint, accidental_rate, chsh_from_model,
                                          corrected_visibility, model_coincidence_rate, sincos_fit)

# Accidental rate for 420k singles per arm in a 6.8 ns window.
n_acc = float(accidental_rate(420e3, 420e3, 6.8e-9, 0.214))
print(f"accidental coincidences: {n_acc:.1f} s^-1")

# A fringe with 96 % visibility on top of that floor.
mean = 42e3
phis = np.arange(0, 180, 7.5)
rates = model_coincidence_rate(phis, 0.0, 0.96, mean) + n_acc
curve = CorrelationCurve([CurvePoint(float(p), 0.0, float(r), 10.0) for p, r in zip(phis, rates)])
fit = sincos_fit(curve)
print(f"raw visibility {fit.visibility:.4f} +- {fit.visibility_err:.4f}, mean {fit.mean_rate:.0f} s^-1")
print(f"after subtracting the floor: {corrected_visibility(fit, n_acc):.4f}")

# CHSH at the canonical settings scales linearly with visibility.
for v in (1.0, 0.954, 1 / np.sqrt(2)):
    res = chsh_from_model(v, mean_rate=1e4, duration=10)
    print(f"V = {v:.4f}: S = {res.S:+.4f} +- {res.sigma_S:.4f}")
