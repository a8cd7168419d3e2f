"""
Five optimizers on an exactly low-rank matrix
=============================================

Noiseless rank-3 ratings, 30% observed.  The second-order models fit the
training set in a handful of epochs, the per-rating baselines take many more.
"""
from pslf import TrainConfig, partition, train
from pslf.synthetic import low_rank_matrix

R, _ = low_rank_matrix(50, 60, 3, 0.3, seed=0)
data = partition(R, seed=0)
print("train/valid/test sizes", data.sizes)

configs = {
    "slf": dict(gamma=2.0, tau=1e-8, cg_max_iters=100),
    "pslf": dict(gamma=2.0, tau=1e-8, cg_max_iters=100),
    "sgd": dict(lr=2 ** -8),
    "adam": dict(lr=1e-2),
    "sam": dict(lr=2 ** -8),
}
for name, extra in configs.items():
    cfg = TrainConfig(optimizer=name, f=3, lam=0.0, max_epochs=300, early_stop=300, **extra)
    rep = train(data, cfg)
    hit = next((r.epoch for r in rep.records if r.train_rmse < 0.05), None)
    print(f"{name:5s} epochs to train RMSE<0.05: {str(hit):>5s}   "
          f"final train {rep.records[-1].train_rmse:.4f}  test {rep.test_rmse:.4f}")
