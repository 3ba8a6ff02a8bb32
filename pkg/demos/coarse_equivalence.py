"""Certified equivalences in action: measure the control moduli of a map,
push a calculus statement across it, and round-trip a discretization."""

import numpy as np

from coarsecalc import coarse, zoo

# two metrics on the same 8x8 box; the identity is an equivalence with
# moduli bounded by the norm-comparison constants
a = zoo.grid(2, 8, metric="l1")
b = zoo.grid(2, 8, metric="linf")
ident = np.arange(a.n)
cert = coarse.certify_lse(a, b, ident, r_grid=(1.0, 2.0, 3.0))
print(f"identity {a.name} -> {b.name}")
print(f"  ok={cert.ok}  rho_plus(2)={cert.rho_plus_at(2.0):g}  "
      f"rho_minus(2)={cert.rho_minus_at(2.0):g}")
print(f"  volume constants C_r = "
      f"{ {r: round(c, 3) for r, c in sorted(cert.C_r.items())} }")

# a map that sends everything to one vertex is caught by the flat
# lower staircase (the finite-sample face of properness)
cert_bad = coarse.certify_lse(a, b, np.zeros(a.n, dtype=int),
                              r_grid=(1.0,))
print(f"\nall-to-one map is rejected: {cert_bad.violation}")

# candidate isoperimetric profiles track each other inside the band
band = coarse.profile_transfer_band(a, b, ident, cert, p=2, h=1.0,
                                    v_grid=[4.0, 8.0, 16.0])
print(f"\nprofile transfer band (K={band.K}, K'={band.K_prime:.3f})")
for v, ratio, ok in zip(band.volumes, band.ratios, band.in_range):
    print(f"  v={v:<4g} ratio {ratio:.4f}  in-range={bool(ok)}")
print(f"  within band: {band.within_band}")

# a fine path discretizes to a coarse net carrying the same total measure
fine = zoo.scale_metric(zoo.path(41), 0.25)  # 41 points, diameter 10
disc = coarse.discretize(fine, 1.0)
print(f"\ndiscretizing {fine.name} at h=1")
print(f"  net size {disc.graph.n} (from {fine.n} points), "
      f"total measure {disc.graph.total_measure:g} == {fine.total_measure:g}")
print(f"  certificate ok={disc.certificate.ok}")

# pull a net indicator back and compare level, gradient, support masses
f_target = np.zeros(disc.graph.n)
f_target[: disc.graph.n // 2] = 1.0
rep = coarse.pullback_transfer_report(fine, disc.graph, disc.assign,
                                      disc.certificate, f_target, h=1.0)
print(f"\npullback transfer of a half-net indicator: status={rep.status}")
print(f"  level-mass floor     c  = {rep.c_l1:.4f}")
print(f"  gradient-mass ceiling C = {rep.C_l2:.4f} at h' = {rep.h_prime:g}")
print(f"  support comparison   C  = {rep.C_l3:.4f} "
      f"(thickening radius {rep.u:g})")
