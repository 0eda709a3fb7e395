"""How wire and termination conductances shape the crossbar's output.

With ideal wires and a virtual-ground termination each column current is
the weighted sum of the active inputs. This script solves one random
spike on a 300-row array for a range of wire and termination values and
compares the column currents with that ideal sum. The fourth column is
the dummy that balances the rows and is left out of the table.

    python3 demos/02_crossbar_physics.py
"""

import numpy as np

from neurosort.crossbar import CrossbarConfig, CrossbarNetwork, capacitance_for

rng = np.random.default_rng(1)
rows = 300
w = rng.random((rows, 3)) < 0.3
spike = rng.random(rows) < 0.3

print(f"{'g_p (S)':>9} {'g_t (S)':>9}  column currents (uA)            ideal sum (uA)     winner")
for g_p, g_t in ((0.5, 1e-4), (100.0, 1e-4), (0.5, 1.0), (100.0, 1.0)):
    cfg = CrossbarConfig(rows=rows, cols=4, g_p=g_p, g_t=g_t)
    net = CrossbarNetwork(cfg, w)
    sol = net.solve(spike)
    i_col = sol.column_currents.ravel()[:3] * 1e6
    # ideal wires and grounded columns: each row current divides over its junctions
    g_act = net.junctions[spike]
    ideal = (g_act[:, :3] / g_act.sum(axis=1, keepdims=True)).sum(axis=0) * cfg.i_in_on * 1e6
    print(f"{g_p:9.3g} {g_t:9.3g}  {np.array2string(i_col, precision=3):30s} "
          f"{np.array2string(ideal, precision=3):18s} {int(np.argmax(i_col))}")

cfg = CrossbarConfig()
n_active = int(spike.sum())
print(f"\n{n_active} active inputs need C_L = {capacitance_for(cfg, n_active) * 1e12:.2f} pF "
      f"to keep the column node within {cfg.delta_v_max} V over the integration window")
