"""
Forecasting tomorrow's temperature from an image sequence
=========================================================

The sequence model watches the same camera at the same hour over n
consecutive days and predicts the temperature of the last day. Training
holds out one hour slot (11:00 here) so test images are never seen in
training; two reference baselines put the model's RMSE in context:

  - persistence: tomorrow equals today (the previous day's truth)
  - climatology: every day equals the camera's training-set mean

Runs in roughly two minutes on a laptop CPU.
"""

import tempfile
from pathlib import Path

from scenetemp import (SynthConfig, TrainConfig, baseline_climatology,
                       baseline_persistence, eval_sequence, load_manifest,
                       select_hour_slot, split_sequence, synth_generate,
                       train_sequence)

root = Path(tempfile.mkdtemp(prefix="scenetemp_demo_"))
world = SynthConfig(num_cameras=1, days=365, slots=(9, 11, 13),
                    image_size=32, noise_sd=2.0, seed=22)
records = load_manifest(synth_generate(world, root))
print(f"generated {len(records)} images (1 camera, 365 days, 3 slots)")

picks = []
for hour in (9, 11, 13):
    picks += select_hour_slot(records, hour)
train_seqs, test_seqs = split_sequence(picks, 3, test_slot=11)
print(f"3-day windows: {len(train_seqs)} train (slots 9 and 13), "
      f"{len(test_seqs)} test (slot 11)")

cfg = TrainConfig(task="sequence", encoding="lde", sigma=4.0,
                  learning_rate=0.001, epochs=8, batch_size=8,
                  sequence_length=3, input_size=32, lstm_hidden=64,
                  seed=2, max_train_sequences=300)
print("\ntraining (epoch, mean loss):")
ckpt = train_sequence(cfg, train_seqs,
                      progress=lambda line: print(
                          "  " + ",".join(line.split(",")[:2])))

model = eval_sequence(ckpt, test_seqs).average_rmse
persistence = baseline_persistence(test_seqs).average_rmse
train_recs = [r for seq in train_seqs for r in seq.records]
test_recs = [seq.records[-1] for seq in test_seqs]
climatology = baseline_climatology(train_recs, test_recs).average_rmse

print(f"\nheld-out slot-11 RMSE:")
print(f"  model        {model:6.2f} C")
print(f"  persistence  {persistence:6.2f} C")
print(f"  climatology  {climatology:6.2f} C")
