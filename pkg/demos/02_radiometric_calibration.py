"""Demo 2: calibrating the merged system's radiometric response.

The merged image is deliberately non-linear: each tier compresses the
scene by its transmittance and shifts it by a multiple of the threshold.
Calibration measures that response from a flat-field exposure series,
fits the ideal line a*T + b to the sub-threshold part, fits a high-order
polynomial model to the whole curve, and tabulates correction
coefficients alpha = (a*T + b) / measured(T) that undo the compression.

Outputs land in demos/output/:  radiometric.csv, profile.json

Run:  python demos/02_radiometric_calibration.py
"""

import warnings
from pathlib import Path

import svehdr as sv
from svehdr import io as svio
from svehdr.calib import measure_radiometric

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

EOL = 3400
GAIN = 10000.0
roles = sv.roles_for_wavelength(625)
sensor = sv.SensorModel(gain=GAIN, eol=EOL)

# Exposure ladder spanning all three tiers, skipping the bands right at
# the tier knees where a mean straddles two tiers.
knees = (EOL / GAIN, EOL / (roles.e2 * GAIN))
times = sv.flatfield_times(EOL * 0.08 / GAIN, EOL / 0.09 * 0.98 / GAIN, 20,
                           knee_times=knees, knee_margin=0.15)
scene = sv.make_flatfield(1.0, (512, 512))
series = sv.ExposureSeries(tuple(
    (float(t), sv.expose(scene, sensor, sv.RGGB, roles, float(t)))
    for t in times))

rf = measure_radiometric(series, sv.RGGB, roles, EOL)
svio.write_radiometric_csv(rf, OUT / "radiometric.csv")
print(f"radiometric function ({len(rf)} samples) -> {OUT / 'radiometric.csv'}")
print(f"{'T (s)':>9} {'mean merged DN':>15}")
for t, m in zip(rf.times, rf.means):
    print(f"{t:>9.4f} {m:>15.1f}")

with warnings.catch_warnings():
    warnings.simplefilter("ignore")   # the order-7 model is knowingly non-monotone
    profile = sv.calibrate(series, layout=sv.RGGB, roles=roles, eol=EOL)

print(f"\nline fit:  a = {profile.linear.a:.4f} DN/s, b = {profile.linear.b:.4f} DN "
      f"(true gain was {GAIN})")
print(f"poly fit:  order {profile.poly.order}, "
      f"rms residual {profile.poly.rms_residual:.1f} DN")

# The correction samples: ~1 below the knee, rising up to ~3.7 at the top
# of the second tier.
print("\ncorrection coefficients (T, alpha):")
for t, a in profile.alpha_samples:
    print(f"  {t:>8.4f}  {a:.4f}")

for tp in profile.alpha_of_value.tiers:
    lo, hi = tp.v_domain
    print(f"tier {tp.tier}: degree {len(tp.coeffs) - 1} polynomial over "
          f"merged values [{lo:.0f}, {hi:.0f}]")

svio.write_profile(profile, OUT / "profile.json")
print(f"\nprofile -> {OUT / 'profile.json'}")
