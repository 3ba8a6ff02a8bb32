"""Tour of the basic objects: one grid, one kernel, and the identities
that make the fixed-scale calculus usable."""

import numpy as np

from coarsecalc import calculus, randomwalk, zoo

space = zoo.grid(2, 8)
h = 1.0
vp = randomwalk.lazy_srw(space, h)
rng = np.random.default_rng(7)
f = rng.standard_normal(space.n)

print(f"space   {space.name}: {space.n} points, "
      f"total measure {space.total_measure:g}")
print(f"kernel  {vp.kind} at h={vp.h:g} "
      f"(support factor {vp.certificate.A:g}, "
      f"floor {vp.certificate.c:g})")

d, g = calculus.energy(vp, f)
print("\nenergy identity on a random field")
print(f"  dirichlet form        {d:.6f}")
print(f"  half squared gradient {0.5 * g:.6f}   gap {abs(g - 2 * d):.2e}")

lhs, rhs = calculus.p2_energy_identity(vp, f)
print(f"  two-step identity     {lhs:.6f} = 2 x {rhs:.6f}   "
      f"gap {abs(lhs - 2 * rhs):.2e}")

lo, mid, up = calculus.coarea(space, np.abs(f), h)
print("\ncoarea sandwich on |f|")
print(f"  {lo:.4f} <= {mid:.4f} <= {up:.4f}")

indicator = np.zeros(space.n)
indicator[space.ball(27, 2.0)] = 1.0
lo_i, mid_i, up_i = calculus.coarea(space, indicator, h)
print(f"  indicator of a ball: lower {lo_i:g}, integral {mid_i:g}, "
      f"upper {up_i:g} (boundary measures)")

print("\npointwise gradient sandwich")
for q, q2 in ((1.0, 2.0), (2.0, np.inf)):
    rep = calculus.sandwich_report(vp, f, q, q2)
    print(f"  q={q:g} vs q2={q2:g}: holds={rep.holds}")

rep = calculus.smoothing_report(space, f, h)
print("\nball-average smoothing constant")
print(f"  measured {rep.measured:.4f} <= doubling bound {rep.bound:.4f}: "
      f"{rep.holds}")

lap = calculus.laplacian(vp, f)
pairing = float(np.sum(space.measure * f * lap))
print("\nlaplacian against its field")
print(f"  <f, Lf> = {pairing:.6f} (equals the dirichlet form: "
      f"gap {abs(pairing - d):.2e})")
