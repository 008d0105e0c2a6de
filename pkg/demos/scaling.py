"""Timing of plain time stepping against divide-and-conquer as N grows."""

from fracwave import manufactured_case
from fracwave.bench import bench_scaling, loglog_slope

case = manufactured_case("ex1", panels=256)
timings = bench_scaling(lambda N: case.setup(N, 3), range(8, 14))
for method in ("tss", "fdac"):
    ts = [t for t in timings if t.method == method]
    for t in ts:
        print(f"{method:5s} N={t.N:6d} {t.seconds:8.3f}s")
    print(f"{method} log-log slope: {loglog_slope([t.N for t in ts], [t.seconds for t in ts]):.2f}")
