"""
Blind test: three zone networks against one
===========================================

Hold out one well, train a small network per zone on the other seven, and
compare with a single network trained on all zones pooled. The single
network gets as many hidden units as the three zone networks combined.
"""

# %%
from sandcast.ingest import integrate_all
from sandcast.mann import compare, train_mann, train_single_ann
from sandcast.nn import TrainConfig
from sandcast.preprocess import partition_lowo
from sandcast.synth import SynthConfig, generate

field = generate(SynthConfig(seed=42))
wells = integrate_all(field.logs, field.checkshots, field.locations, field.volume)
pairs = [(w, field.tops[w.well_id]) for w in wells]

zoned = partition_lowo(pairs, "W6")
print("training wells:", ", ".join(zoned.train_wells))
for zd in zoned.zones:
    print(f"  {zd.name}: {len(zd.train)} training patterns, {len(zd.test)} blind patterns")

# %% [markdown]
# With ``hidden="auto"`` every zone tries the candidate sizes that pass the
# capacity rule (15 patterns per weight) and keeps the smallest one within
# 1% of the best training RMSE. A fixed size keeps this example quick.

# %%
config = TrainConfig(max_epoch=300, err_min=1e-4, seed=7)
mann = train_mann(zoned, config, hidden=4)
for z in mann.zones:
    print(f"{z.name}: H={z.mlp.H}, {z.trace.epochs_run} epochs, train RMSE {z.trace.final_rmse:.4f} "
          f"(normalized), {z.trace.wall_time:.2f} s")

single = train_single_ann(zoned, config, hidden=sum(mann.hidden))
print(f"single: H={single.model.mlp.H}, train RMSE {single.model.trace.final_rmse:.4f}, "
      f"{single.model.trace.wall_time:.2f} s")

# %% [markdown]
# Metrics are computed on denormalized sand fraction. "average" is the plain
# mean of the zone rows; time is the sum of the zone trainings.

# %%
log, tops = next(p for p in pairs if p[0].well_id == "W6")
report = compare(mann, single, log, tops)
print(f"{'scope':<17}{'cc':>8}{'rmse':>8}{'aem':>8}{'time_s':>8}")
for r in report.rows:
    print(f"{r.scope:<17}{r.cc:8.3f}{r.rmse:8.3f}{r.aem:8.3f}{r.time_s:8.2f}")
