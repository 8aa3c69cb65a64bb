"""Working with stream datasets: CSV ingestion, drift generation, scaling.

Walks through the data layer: loading the bundled banana-shaped CSV,
sequential train/test splitting, per-column summaries, the SEA drift
generator, and the single-pass feature scalers.
"""

import numpy as np

from omltune import (
    OnlineScaler,
    SplitSpec,
    generate_sea,
    load_csv,
    split_train_test,
    summarize,
)
from omltune.dataspace import bananas_fixture_path, display_sample, format_summary

# ---------------------------------------------------------------------------
# Load the bundled CSV benchmark: 5300 rows, two features, binary target.

bananas = load_csv(bananas_fixture_path())
print(f"loaded {len(bananas)} rows with features {bananas.schema.feature_names}")

# The split is sequential (no shuffling): streams are order-sensitive, and
# prequential evaluation needs instances in their original order.
train, test = split_train_test(bananas, SplitSpec(test_size=0.3))
print(f"train={len(train)} rows, test={len(test)} rows\n")

print("Train data summary:")
print(format_summary(summarize(train).as_dict()))
print()
print("Test data summary:")
print(format_summary(summarize(test).as_dict()))

# Large datasets are subsampled for display: at most 1000 rows, uniformly.
sample = display_sample(train, cap=1000, seed=0)
print(f"\ndisplay sample: {len(sample)} of {len(train)} rows")

# ---------------------------------------------------------------------------
# Synthetic drift: the SEA generator labels a row by x1 + x2 against a
# per-variant threshold (8, 9, 7, 9.5) and switches variants mid-stream.

stream = generate_sea(
    n=4000,
    variant_schedule=[(0, 2000), (2, 2000)],  # one sudden drift at row 2000
    noise_frac=0.1,
    seed=42,
)
labels = stream.labels
print(f"\nSEA stream: {len(stream)} rows, positives before drift: "
      f"{labels[:2000].mean():.3f}, after: {labels[2000:].mean():.3f}")

# ---------------------------------------------------------------------------
# Online scalers learn as the stream flows: learn-then-transform per row.

scaler = OnlineScaler("standard")
first = scaler.learn_transform(stream.features[0])
print(f"\nfirst standardized row is all zeros: {first}")
for row in stream.features[1:200]:
    scaler.learn_transform(row)
print(f"after 200 rows, scaling x: {stream.features[200]} -> "
      f"{np.round(scaler.transform(stream.features[200]), 3)}")
