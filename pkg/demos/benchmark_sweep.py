"""Small sweeps of both benchmarks; writes CSV files and gnuplot scripts to ./bench_out."""

import os

from randsld.bench import BenchConfig, bench_rows, gnuplot_script, rows_to_csv, summarize

OUT = "bench_out"
os.makedirs(OUT, exist_ok=True)


def run(tag, **kw):
    rows = bench_rows(BenchConfig(**kw))
    path = os.path.join(OUT, f"{tag}.csv")
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    with open(os.path.join(OUT, f"{tag}.gp"), "w") as fh:
        fh.write(gnuplot_script(path, tag))
    s = summarize(rows)
    print(f"{tag:28s} mean {s.get('mean_iterations', float('nan')):9.1f}  "
          f"median {s.get('median_iterations', float('nan')):8.1f}  truncated {s['truncated']}")


for t in (1, 2, 3):
    for p_c in (0.3, 0.5, 0.7):
        run(f"commands_t{t}_pc{p_c}", benchmark="commands", goal_length=t, p_cont=p_c, trials=5000)
for p_d in (0.6, 0.7, 0.8):
    run(f"commands_t2_ds{p_d}", benchmark="commands", goal_length=2, strategy="drop_shuffle",
        p_drop=p_d, trials=2000, max_steps=200_000)
for v in (4, 6, -4, -12, 15):
    run(f"expr_{v}", benchmark="expr", target_value=v, trials=500)
