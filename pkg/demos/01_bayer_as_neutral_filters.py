"""Demo 1: a Bayer mosaic under LED light is a grid of neutral filters.

Under a narrow-band red illuminant the red sites see the scene at full
strength, the green sites at 20% and the blue sites at 9%. One exposure
therefore samples the scene at three sensitivities at once, and the tier
merge stitches them into a single extended-range image: saturated red
sites are replaced by (offset) green readings, saturated greens by blues.

Run:  python demos/01_bayer_as_neutral_filters.py
"""

import svehdr as sv

roles = sv.roles_for_wavelength(625)
print(f"red LED (625 nm): main={roles.main} sites at e1={roles.e1}, "
      f"first extra={roles.extra1} at e2={roles.e2}, "
      f"second extra={roles.extra2} at e3={roles.e3}")

# A flat scene on a small sensor. Gain 1000 DN per (unit * second), so a
# 1-second exposure of a unit scene reads 1000 DN on the main sites.
sensor = sv.SensorModel(gain=1000.0, eol=3400)
scene = sv.make_flatfield(1.0, (64, 64))

print("\nexposure sweep: watch the merge climb through the tiers")
print(f"{'T (s)':>8} {'main DN':>8} {'extra1 DN':>10} {'extra2 DN':>10} "
      f"{'merged':>8} {'tier':>14}")
for t in (0.5, 2.0, 3.0, 5.0, 20.0, 35.0, 50.0):
    frame = sv.expose(scene, sensor, sv.RGGB, roles, t)
    planes = sv.decompose(frame, sv.RGGB, roles)
    merged = sv.construct(planes, eol=3400)
    tier = sv.Provenance(int(merged.provenance[0, 0])).name
    print(f"{t:>8.1f} {planes.main[0, 0]:>8d} {planes.extra1[0, 0]:>10d} "
          f"{planes.extra2[0, 0]:>10d} {merged.values[0, 0]:>8d} {tier:>14}")

# The merge threshold is the end of linearity (3400 DN here), not the ADC
# ceiling (4095): values between the two are real but non-linear, so they
# are never trusted.
print("\nabove 3400 DN the main sites still report numbers, but the merge")
print("already switched to the less exposed neighbours.")

# Usage fractions quantify which tier supplied the pixels of an image.
chart, _ = sv.make_test_chart((256, 512), steps=8, contrast_ratio=128.0)
for t in (3.0, 15.0, 35.0):
    frame = sv.expose(chart, sensor, sv.RGGB, roles, t)
    merged = sv.construct(sv.decompose(frame, sv.RGGB, roles), eol=3400)
    u = sv.usage_fractions(merged)
    print(f"chart at T={t:>4.0f}s: main {u.main:.1%}, extra1 {u.extra1:.1%}, "
          f"extra2 {u.extra2:.1%}, unrecoverable {u.unrecoverable:.1%}")
