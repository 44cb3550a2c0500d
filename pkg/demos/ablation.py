"""uni/bi LSTM x attention ablation on the toy set with a pose-ambiguous class
pair. Only the feature map separates that pair, so the two-stream row should
lead. Takes a few minutes.

    python3 demos/ablation.py
"""

from psrn import ModelConfig
from psrn.posedata import SynthConfig, synth_generate
from psrn.runconfig import DESK_MODEL
from psrn.training import dataset_from_synth, desk_plan
from psrn.training.ablation import ablation_harness, format_table

data = SynthConfig(num_classes=4, ambiguous_pairs=1, target_scale=(0.2, 0.4), distractor_ratio=(0.6, 0.8),
                   sway_gain_range=(0.3, 1.0), sway_frames=3, late_jitter=0.01, seed=0)
splits = dataset_from_synth(synth_generate(data))
results = ablation_harness(splits, ModelConfig(num_classes=4, **DESK_MODEL), desk_plan((400, 300, 200)),
                           seeds=(0, 1, 2))
print(format_table(results))
