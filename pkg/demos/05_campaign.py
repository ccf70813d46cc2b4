# %% [markdown]
# # Replicated campaigns
#
# A campaign sweeps one input, repeats each point with seeds
# base_seed XOR r, and reports means with normal 95% intervals.  Every
# sweep value reuses the same seeds, so differences between points are
# paired.

# %%
from wptvec import CampaignSpec, FieldSpec, run_campaign

spec = CampaignSpec(field=FieldSpec(5, 5), chargers=10, nodes=50, rounds=90, reps=30,
                    sweep="range", sweep_values=[0.4, 0.8, 1.2, "open"])
res = run_campaign(spec)
power = res.summary("cumulative_power")
msgs = res.summary("message_count")
for v in power:
    print(f"range {v:>5}: power {power[v].mean * 1e3:7.2f} +- {power[v].half_width * 1e3:5.2f} mW, "
          f"messages {msgs[v].mean:8.0f}")

# %% [markdown]
# Efficiency compares harvested power with power fuelled into the chargers
# that are switched on.

# %%
base = dict(field=FieldSpec(3, 3), nodes=20, reps=30, rounds="until-converged",
            sweep="chargers", sweep_values=[2, 5, 10])
imp = run_campaign(CampaignSpec(algorithm="maxpower", **base)).summary("power_efficiency")
allon = run_campaign(CampaignSpec(algorithm="all-on", **base)).summary("power_efficiency")
for m in imp:
    print(f"m={m:>2}: search {imp[m].mean:.4f}   all on {allon[m].mean:.4f}")

# %% [markdown]
# The CSV files are what `wptvec campaign --out-raw --out-aggregate` writes.

# %%
print(res.aggregate_csv().splitlines()[0])
print(res.aggregate_csv().splitlines()[1])
