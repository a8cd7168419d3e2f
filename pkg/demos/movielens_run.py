"""
Train SLF and PSLF on a MovieLens ratings file
==============================================

Usage: python demos/movielens_run.py path/to/ratings.dat [format]

``format`` is one of ml1m (``::``, the default), tsv, csv, ws or inter.
Reports test RMSE and epochs for one seeded 60/20/20 split.
"""
import sys

from pslf import TrainConfig, build_hdi, load_ratings, partition, train
from pslf.bench import dataset_summary

path = sys.argv[1]
fmt = sys.argv[2] if len(sys.argv) > 2 else "ml1m"
R = build_hdi(load_ratings(path, fmt))
print(dataset_summary(R))
data = partition(R, seed=0)

for name in ("slf", "pslf"):
    rep = train(data, TrainConfig(optimizer=name, f=20, lam=0.06, gamma=60.0, tau=100.0))
    print(f"{name:5s} test RMSE {rep.test_rmse:.5f}  best epoch {rep.best_epoch}  "
          f"epochs {rep.epochs}  {rep.time_sec:.1f}s")
    for r in rep.records[:5]:
        print(f"    epoch {r.epoch:2d} train {r.train_rmse:.4f} valid {r.valid_rmse:.4f} "
              f"cg {r.cg_iters}")
