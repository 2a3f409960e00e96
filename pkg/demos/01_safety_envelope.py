"""
Safe following distance and camera safety times
================================================

How far ahead must a hazard be detected?  The kinematic model answers in
two directions: a reaction time gives a minimal safe distance, and a
camera's maximum range gives the largest reaction time the platform may
spend before braking.
"""

from hmaisim import RssParams, rss_min_distance, safety_time

# Both vehicles at the same speed, braking at 6.2 m/s^2.
print("minimal safe distance by reaction time")
print(f"{'km/h':>6} {'rho=0':>9} {'rho=0.5s':>9} {'rho=1s':>9} {'rho=2s':>9}")
for kmh in (30, 60, 80, 120):
    v = kmh / 3.6
    p = RssParams(v1=v, v2=v)
    cells = [rss_min_distance(rho, p) for rho in (0.0, 0.5, 1.0, 2.0)]
    print(f"{kmh:>6} " + " ".join(f"{d:>9.2f}" for d in cells))

# Inverting the model: how much time does each camera group leave the
# platform at urban speed?  The front camera sees 250 m; the side and rear
# groups see much less.
print()
print("time budget per camera range at 60 km/h")
v = 60 / 3.6
p = RssParams(v1=v, v2=v)
for label, rng in (("front 250 m", 250.0), ("rear 100 m", 100.0), ("side 80 m", 80.0)):
    t = safety_time(rng, p)
    print(f"  {label:<12} -> {t*1000:8.1f} ms  (round trip {rss_min_distance(t, p):.2f} m)")

# Below the zero-reaction floor the camera simply cannot help: at highway
# speed an 80 m side camera is inside the stopping envelope.
p_hw = RssParams(v1=120 / 3.6, v2=120 / 3.6)
floor = rss_min_distance(0.0, p_hw)
print()
print(f"at 120 km/h the no-reaction floor is {floor:.1f} m: an 80 m camera",
      "leaves no budget at all" if floor > 80 else "still has margin")
