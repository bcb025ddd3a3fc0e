"""
A seed near the cosine state and its saddle probe
=================================================

Place a parallelogram probe at the saddle (pi, 0) of the cosine flow, lay
two thin vorticity sheets across it, and watch the gradient and the probe
fluxes for a few time units.
"""

import math
from pathlib import Path

import numpy as np

from vortgrowth.config import RunConfig
from vortgrowth.core import DomainSpec
from vortgrowth.flux import build_probe, check_condition
from vortgrowth.io import read_csv
from vortgrowth.plotting import emit_plot
from vortgrowth.runner import run_simulation
from vortgrowth.seeds import TorusSeedSpec, admit_initial_data, build_torus_seed
from vortgrowth.steady import CosineState, eval_cosine

probe = build_probe(np.diag([-1.0, 1.0]), (math.pi, 0.0), 0.08)
print("eigen-directions", probe.q1, probe.q2, "rates", probe.lam1, probe.lam2, "c0", probe.c0)
fc = check_condition(lambda a, b: eval_cosine(CosineState(), a, b)[2], probe)
print("steady-state fluxes:", fc)

seed = build_torus_seed(TorusSeedSpec(eps_target=0.3), probe, DomainSpec.torus(512))
print(f"sheet radius {seed.radius:.4f}, L2 distance {seed.distance:.4f}, "
      f"amplitudes {seed.amplitude:.3f}/{seed.amplitude_neg:.3f}")
print("admission failures:", admit_initial_data(seed.field, seed).failures)

# %%
# A short, coarse run (the acceptance suite does the long one).
out = Path("run_out/demos/seed")
rep = run_simulation(RunConfig(seed="torus", seed_radius=0.0275, resolution=256, horizon=2.0,
                               dt=0.004, diag_every=25), out)
g = read_csv(out / "growth.csv")
print("grad max samples:", np.round(g["grad_max"][::8], 1))
print("flux failures:", rep.values["flux_failures"], "of", rep.values["flux_checks"])
emit_plot(out / "growth.csv", ["grad_max"], out / "grad.svg", log_y=True, title="max |grad w|")
emit_plot(out / "growth.csv", ["flux_min_G1", "flux_min_G3", "flux_max_G2", "flux_max_G4"],
          out / "flux.svg", title="probe fluxes")
