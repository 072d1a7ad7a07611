"""
Where does the temperature signal live: sky or ground?
======================================================

Builds a synthetic world in which the sky is scrambled (its colour no
longer tracks temperature) while the ground still responds through
brightness and snow cover. Training the same single-image model three
times — on sky-only crops, ground-only crops, and the entire frame —
then evaluating each on a held-out hour slot shows which part of the
scene actually carries the signal.

Runs in about a minute on a laptop CPU.
"""

import tempfile
from pathlib import Path

from scenetemp import (SynthConfig, TrainConfig, compare_regions,
                       load_manifest, load_masks, select_hour_slot,
                       synth_generate)

root = Path(tempfile.mkdtemp(prefix="scenetemp_demo_"))
world = SynthConfig(num_cameras=1, days=200, slots=(10, 11, 12),
                    image_size=32, noise_sd=1.5, seed=8,
                    sky_tracks_temp=False, ground_tracks_temp=True)
records = load_manifest(synth_generate(world, root))
masks = load_masks(root)
print(f"generated {len(records)} images under {root}")
print("sky_tracks_temp=False: the sky band is pure noise here,")
print("ground_tracks_temp=True: brightness and snow follow the weather")

# One pick per day for each of the three hour slots; the 11:00 slot is
# held out for evaluation, the rest feed training.
picks = []
for hour in (10, 11, 12):
    picks += select_hour_slot(records, hour)
print(f"\n{len(picks)} hour-slot picks across hours 10/11/12")

cfg = TrainConfig(task="single", encoding="lde", sigma=3.5,
                  learning_rate=0.001, epochs=8, batch_size=32,
                  input_size=32, seed=3, max_train_records=300)

# compare_regions crops every image with the camera's sky/ground mask,
# trains a fresh model per region, and evaluates on the held-out slot.
print("training one model per region (a few minutes of quiet)...")
rows = compare_regions(cfg, picks, masks,
                       regions=("sky", "ground", "entire"), test_slot=11)

print("\nregion   held-out RMSE (C)")
for row in rows:
    print(f"{row['region']:<8} {row['average_rmse']:.2f}")

by_region = {row["region"]: row["average_rmse"] for row in rows}
print("\nthe ground crop wins because that is where the signal was put;")
print(f"sky-only is near-blind ({by_region['sky']:.1f} C), and the full")
print("frame sits close to the ground crop since the model can learn to")
print("ignore the uninformative band.")
