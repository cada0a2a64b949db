"""Run the ordering search over every bundled contract and summarize.

    python demos/03_corpus_tour.py
"""

from __future__ import annotations

from ethracer import corpus
from ethracer.report import AnalysisOptions, analyze

for name in corpus.names():
    source = corpus.contract_path(name).read_text()
    contract, scenario = corpus.load(name)
    opts = AnalysisOptions(lin=contract.has_callback)
    a = analyze(source, scenario, opts)
    stats = a.sync.stats
    print(f"{name:9s} events={len(a.events):2d} hb={len(a.hb)} traces={stats.traces_enumerated:5d} "
          f"witnesses={len(a.sync.witnesses)} low={len(a.sync.low_priority)}"
          + (f" lin={len(a.lin.violations)}" if a.lin else ""))
    for w in a.sync.witnesses:
        left, right = w.calls(a.events.names)
        print(f"    {' '.join(left)}  <->  {' '.join(right)}")
