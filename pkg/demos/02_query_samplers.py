"""The four query samplers and how they pick points.

Uniform sampling draws from the pool; negative sampling keeps only the
points the victim misclassifies; adversarial sampling perturbs seeds to
flip the victim's answers inside a small box; subsampling surrounds each
seed with masked copies.  Samplers can also be chained, e.g. negative
selection feeding adversarial generation.
"""

import numpy as np

import modelprint as mp
from modelprint.samplers import (
    AdversarialSampler,
    ChainSampler,
    NegativeSampler,
    Subsampler,
    UniformSampler,
)

task = mp.SyntheticTaskSpec(
    family="blobs", num_classes=3, dim=4, n_train=300, n_test=600,
    label_noise=0.1, noise_scale=1.3, seed=2,
)
train_ds, test_ds = mp.generate_task(task)
victim = mp.train(train_ds, mp.MLPSpec((4, 32, 3), seed=5),
                  mp.TrainConfig(epochs=60), identity="victim")
errors = victim.predict(test_ds.points) != test_ds.labels
print(f"victim misclassifies {errors.sum()} of {len(test_ds)} pool points\n")

budget = 40

qs = UniformSampler().sample(test_ds, victim, budget, seed=0)
wrong = np.mean(victim.predict(qs.points) != test_ds.labels[qs.source_indices])
print(f"uniform:     {qs.size} points, {wrong:.0%} of them victim mistakes")

qs = NegativeSampler().sample(test_ds, victim, budget, seed=0)
wrong = np.mean(victim.predict(qs.points) != test_ds.labels[qs.source_indices])
print(f"negative:    {qs.size} points, {wrong:.0%} of them victim mistakes")

adv = AdversarialSampler()  # radius defaults to 0.1 x per-dimension data range
qs = adv.sample(test_ds, victim, budget, seed=0)
seeds, pushed = qs.points[: budget // 2], qs.points[budget // 2 :]
flipped = np.mean(victim.predict(seeds) != victim.predict(pushed))
print(f"adversarial: {qs.size} points ({len(qs.pairing)} seed/derived pairs), "
      f"{flipped:.0%} of pairs flip the victim's label")

qs = Subsampler(k_variants=3, vicinity_scale=0.7).sample(test_ds, victim, budget, seed=0)
print(f"subsample:   {qs.size} points, {len(qs.pairing)} seed/variant pairs, "
      f"variants zero ~30% of coordinates")

chain = ChainSampler(NegativeSampler(), AdversarialSampler())
qs = chain.sample(test_ds, victim, budget, seed=0)
seed_half = qs.points[: budget // 2]
still_wrong = np.mean(
    victim.predict(seed_half) != test_ds.labels[qs.source_indices[: budget // 2]]
)
print(f"chain:       negative seeds -> adversarial points; "
      f"{still_wrong:.0%} of the seed half are victim mistakes")
print(f"             provenance stages: "
      f"{[s['sampler'] for s in qs.provenance['stages']]}")
