"""Experiment drivers: sweeps, generative training, timing, classification.

Every driver consumes an :class:`ExperimentSpec`, writes deterministic CSV
tables (plus rendered figures) into the spec's output directory, and returns
its rows. Measured wall times are the one exception to byte-stable output;
they live in the scaling table and in ``timing.json``, kept separate from
the deterministic ``manifest.json``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, datasets, dse, ioutil
from .autodiff import zero_grads
from .errors import InputFormatError
from .nn import AdamState, MlpNet, adam_step, collect_grads

__all__ = [
    "ExperimentSpec",
    "default_spec",
    "run_translation_sweep",
    "run_rotation_sweep",
    "run_genmodel",
    "run_scaling",
    "run_knn",
    "run_experiment",
    "mode_coverage",
]

KINDS = ("translation", "rotation", "genmodel", "scaling", "knn")


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    kind: str
    out_dir: str
    methods: tuple[str, ...] = ("dse", "sgw", "ri_sgw")
    seeds: tuple[int, ...] = (0,)
    n_samples: int = 500
    grid: tuple[float, ...] = ()
    sgw_slices: int = 100
    dse_cfg: dse.DseConfig = field(default_factory=dse.DseConfig)
    ri_sgw_iters: int = 200
    ri_sgw_lr: float = 0.01
    # generative modeling
    gen_iters: int = 5000
    batch_size: int = 300
    gen_lr: float = 1e-3
    target_dims: int = 3
    output_dims: int = 2
    modes: int = 4
    target_samples: int = 1000
    snapshot_every: int = 1000
    gen_loss: str = "dse"
    l2_reg: float = 0.01
    coverage_radius: float = 1.5
    # scaling
    pairs_per_n: int = 10
    egw_iters: int = 4
    egw_inner: int = 50
    # classification
    strengths: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    runs: int = 10
    knn_vertices: int = 100
    jobs: int = 1

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InputFormatError(f"unknown experiment kind: {self.kind}")
        if self.kind in ("translation", "rotation", "scaling") and not self.grid:
            raise InputFormatError(f"{self.kind} experiment needs a non-empty grid")
        if self.n_samples < 10:
            raise InputFormatError("n_samples must be at least 10")
        if not self.seeds:
            raise InputFormatError("need at least one seed")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["dse_cfg"] = self.dse_cfg.to_dict()
        for key in ("methods", "seeds", "grid", "strengths"):
            d[key] = list(d[key])
        return d

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")  # location does not change the computation
        return ioutil.spec_hash(d)


def default_spec(kind: str, out_dir: str) -> ExperimentSpec:
    """Desk-scale defaults per experiment kind."""
    if kind == "translation":
        return ExperimentSpec(
            kind=kind, out_dir=out_dir, methods=("dse", "sgw", "ri_sgw"),
            grid=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0),
            n_samples=500, dse_cfg=dse.DseConfig(N=5), ri_sgw_iters=200)
    if kind == "rotation":
        return ExperimentSpec(
            kind=kind, out_dir=out_dir, methods=("dse", "sgw", "ri_sgw"),
            grid=tuple(np.round(np.linspace(0.0, np.pi / 2, 8), 12)),
            n_samples=500, dse_cfg=dse.DseConfig(N=5), ri_sgw_iters=200)
    if kind == "genmodel":
        return ExperimentSpec(
            kind=kind, out_dir=out_dir, methods=("dse",),
            dse_cfg=dse.DseConfig(K=30, lambda_a=5.0, lr_f=0.01, lr_embed=0.01))
    if kind == "scaling":
        return ExperimentSpec(
            kind=kind, out_dir=out_dir, methods=("dse", "sgw", "entropic_gw"),
            grid=(500.0, 2000.0), pairs_per_n=10, sgw_slices=100)
    if kind == "knn":
        return ExperimentSpec(
            kind=kind, out_dir=out_dir,
            methods=("dse", "sgw", "ri_sgw", "entropic_gw"),
            runs=10, knn_vertices=100, ri_sgw_iters=100)
    raise InputFormatError(f"unknown experiment kind: {kind}")


# ---------------------------------------------------------------------------
# sweep drivers
# ---------------------------------------------------------------------------

def _pair_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _sweep_cell(args) -> float:
    method, X, Y, spec, seed = args
    return _sweep_value(method, X, Y, spec, seed)


def _map_cells(cells: list, jobs: int) -> list[float]:
    """Evaluate sweep cells, optionally in worker processes; results come
    back in submission order so output files are independent of scheduling."""
    if jobs <= 1 or len(cells) <= 1:
        return [_sweep_cell(c) for c in cells]
    import multiprocessing as mp
    with mp.get_context("spawn").Pool(processes=jobs) as pool:
        return pool.map(_sweep_cell, cells)


def _sweep_value(method: str, X: np.ndarray, Y: np.ndarray,
                 spec: ExperimentSpec, seed: int) -> float:
    r = spec.dse_cfg.r
    if method == "dse":
        cfg = replace(spec.dse_cfg, seed=seed)
        return dse.dse_fit(X, Y, cfg).value
    if method == "sgw":
        return baselines.sgw(X, Y, r, K=spec.sgw_slices, seed=seed)
    if method == "ri_sgw":
        return baselines.ri_sgw(X, Y, r, K=spec.sgw_slices, lr=spec.ri_sgw_lr,
                                T=spec.ri_sgw_iters, seed=seed)
    if method == "sw":
        return baselines.sliced_wasserstein(X, Y, r, K=spec.sgw_slices, seed=seed)
    if method == "entropic_gw":
        return baselines.entropic_gw(X, Y, eps_decay=0.9, iters=spec.egw_iters * 10,
                                     inner_iters=spec.egw_inner, restarts=3, seed=seed)
    raise InputFormatError(f"unknown method: {method}")


def run_translation_sweep(spec: ExperimentSpec) -> list[dict]:
    """Discrepancies between a fixed 2D Gaussian cloud and a translated copy
    of another, across shift magnitudes. Clouds are dyadically quantized so
    the translation itself is exact in float64."""
    spec.validate()
    cells = []
    keys = []
    for seed in spec.seeds:
        X = datasets.dyadic_quantize(
            datasets.make_gaussian_mixture(2, 1, spec.n_samples, seed=_pair_seed(seed, 0), std=1.0))
        Y0 = datasets.dyadic_quantize(
            datasets.make_gaussian_mixture(2, 1, spec.n_samples, seed=_pair_seed(seed, 1), std=1.0))
        for shift in spec.grid:
            Y = Y0 + np.array([float(shift), 0.0])
            for method in spec.methods:
                cells.append((method, X, Y, spec, seed))
                keys.append((float(shift), method, seed))
    values = _map_cells(cells, spec.jobs)
    rows = [{"shift": k[0], "method": k[1], "value": v, "seed": k[2]}
            for k, v in zip(keys, values)]
    _write_sweep(spec, rows, "translation.csv", "shift")
    return rows


def run_rotation_sweep(spec: ExperimentSpec) -> list[dict]:
    """Discrepancies between a fixed spiral and an independently sampled
    spiral rotated by each grid angle."""
    spec.validate()
    cells = []
    keys = []
    for seed in spec.seeds:
        X = datasets.make_spiral(spec.n_samples, 0.0, seed=_pair_seed(seed, 0))
        for angle in spec.grid:
            Y = datasets.make_spiral(spec.n_samples, float(angle), seed=_pair_seed(seed, 1))
            for method in spec.methods:
                cells.append((method, X, Y, spec, seed))
                keys.append((float(angle), method, seed))
    values = _map_cells(cells, spec.jobs)
    rows = [{"angle": k[0], "method": k[1], "value": v, "seed": k[2]}
            for k, v in zip(keys, values)]
    _write_sweep(spec, rows, "rotation.csv", "angle")
    return rows


def _write_sweep(spec: ExperimentSpec, rows: list[dict], name: str, xkey: str) -> None:
    ioutil.ensure_dir(spec.out_dir)
    path = f"{spec.out_dir}/{name}"
    ioutil.write_csv(path, [xkey, "method", "value", "seed"],
                     [(r[xkey], r["method"], r["value"], r["seed"]) for r in rows])
    _write_manifest(spec)
    from . import figures
    figures.render_sweep(path, xkey, f"{spec.out_dir}/{name[:-4]}.png")


def _write_manifest(spec: ExperimentSpec, extra: dict | None = None) -> None:
    import scipy

    from . import __version__
    doc = {
        "kind": spec.kind,
        "spec_hash": spec.hash(),
        "spec": spec.to_dict(),
        "versions": {"heterot": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__},
    }
    if extra:
        doc.update(extra)
    with open(f"{spec.out_dir}/manifest.json", "w", encoding="utf-8") as fh:
        fh.write(ioutil.dumps_json(doc) + "\n")


def _write_timing(spec: ExperimentSpec, seconds: float) -> None:
    with open(f"{spec.out_dir}/timing.json", "w", encoding="utf-8") as fh:
        fh.write(ioutil.dumps_json({"wall_time_s": seconds}) + "\n")


# ---------------------------------------------------------------------------
# generative modeling
# ---------------------------------------------------------------------------

def _generator_net(spec: ExperimentSpec, rng: np.random.Generator) -> MlpNet:
    hidden = [256, 128] if spec.modes <= 4 else [256, 128, 128]
    return MlpNet([spec.output_dims + 1, *hidden, spec.output_dims], "identity", rng)


def _sgw_surrogate_grad(out: np.ndarray, yb: np.ndarray, dirs: np.ndarray,
                        r: float) -> np.ndarray:
    """Gradient of the slice-summed quadratic matching objective with respect
    to the generator output, couplings and sorts frozen (r = 2 path)."""
    n = out.shape[0]
    dim = dirs.shape[1]
    z = np.pad(out, ((0, 0), (0, dim - out.shape[1]))) @ dirs.T
    w = np.pad(yb, ((0, 0), (0, dim - yb.shape[1]))) @ dirs.T
    perm = np.argsort(z, axis=0, kind="stable")
    zs = np.take_along_axis(z, perm, axis=0)
    ws = np.sort(w, axis=0)
    u_up = zs - ws
    u_dn = zs + ws[::-1]
    q_up = 2.0 * np.var(u_up, axis=0)
    q_dn = 2.0 * np.var(u_dn, axis=0)
    use_dn = q_dn < q_up
    u = np.where(use_dn, u_dn, u_up)
    g_zs = (4.0 / n) * (u - u.mean(axis=0)) / dirs.shape[0]
    g_z = np.zeros_like(z)
    np.put_along_axis(g_z, perm, g_zs, axis=0)
    return g_z @ dirs[:, :out.shape[1]]


def mode_coverage(points: np.ndarray, centers: np.ndarray,
                  radius: float = 1.5, align: bool = True,
                  seed: int = 0) -> np.ndarray:
    """Fraction of points within `radius` of each center.

    With align=True the point cloud is first registered to the centers by an
    orthogonal map (training losses that are rotation invariant cannot pin
    the orientation): cluster centroids are estimated, matched to the
    reference centers over all labelings, and the Procrustes rotation of the
    best match is applied. Coverage is permutation invariant in mode labels.
    """
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    k, dim = centers.shape
    if align:
        est = _kmeans_centers(points, k, seed)
        from itertools import permutations
        best = None
        for perm in permutations(range(k)):
            src = est[list(perm)]
            u, _, vt = np.linalg.svd(src.T @ centers)
            rot = u @ vt
            err = float(np.linalg.norm(src @ rot - centers))
            if best is None or err < best[0]:
                best = (err, rot)
        points = points @ best[1]
    return np.array([np.mean(np.linalg.norm(points - c, axis=1) < radius)
                     for c in centers])


def _kmeans_centers(X: np.ndarray, k: int, seed: int, iters: int = 100) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = X[rng.choice(X.shape[0], size=k, replace=False)]
    for _ in range(iters):
        d = np.linalg.norm(X[:, None, :] - centers[None, :, :], axis=2)
        labels = d.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            if np.any(labels == j):
                new[j] = X[labels == j].mean(axis=0)
        if np.allclose(new, centers):
            break
        centers = new
    return centers


def run_genmodel(spec: ExperimentSpec) -> dict:
    """Train a generator against a Gaussian-mixture target in a space of a
    different dimension, using the learned-slicing loss (or the zero-padded
    sliced baseline with an L2 output regularizer).

    Writes the loss trace, point-cloud snapshots, the target sample, and the
    aligned mode-coverage table; returns them in a dict.
    """
    spec.validate()
    started = time.perf_counter()
    seed = spec.seeds[0]
    rng = np.random.default_rng(_pair_seed(seed, 11))
    target = datasets.make_gaussian_mixture(
        spec.target_dims, spec.modes, spec.target_samples, seed=_pair_seed(seed, 12))
    gen = _generator_net(spec, np.random.default_rng(_pair_seed(seed, 13)))
    gen_adam = AdamState(lr=spec.gen_lr)
    cfg = replace(spec.dse_cfg, seed=_pair_seed(seed, 14))
    state = dse.init_state(spec.output_dims, spec.target_dims, cfg)
    sgw_dirs = None
    if spec.gen_loss == "sgw":
        dim = max(spec.output_dims, spec.target_dims)
        from . import sphere
        sgw_dirs = sphere.sample_uniform(dim, spec.sgw_slices, _pair_seed(seed, 15))
    elif spec.gen_loss != "dse":
        raise InputFormatError(f"unknown generator loss: {spec.gen_loss}")

    ioutil.ensure_dir(spec.out_dir)
    losses: list[float] = []
    snapshots: list[tuple[int, np.ndarray]] = []
    z_dim = spec.output_dims + 1

    def snapshot(it: int) -> None:
        eval_rng = np.random.default_rng(_pair_seed(seed, 16, it))
        pts = gen.forward(eval_rng.standard_normal((2000, z_dim))).data
        snapshots.append((it, pts))
        ioutil.write_point_cloud(f"{spec.out_dir}/snapshot_{it:06d}.csv", pts)

    snapshot(0)
    for it in range(spec.gen_iters):
        z = rng.standard_normal((spec.batch_size, z_dim))
        yb = target[rng.choice(target.shape[0], spec.batch_size, replace=False)]
        out = gen.forward(z)
        if spec.gen_loss == "dse":
            dse.alternation_round(out.data.copy(), yb, state, cfg)
            loss = dse.dse_loss_for_training(out, yb, state, cfg)
            zero_grads(gen.parameters())
            loss.backward()
            loss_val = loss.item()
        else:
            g_out = _sgw_surrogate_grad(out.data, yb, sgw_dirs, cfg.r)
            from .autodiff import Tensor
            surrogate = out.mul(Tensor(g_out)).sum() \
                + out.square().mean().scale(spec.l2_reg)
            zero_grads(gen.parameters())
            surrogate.backward()
            loss_val = baselines.sgw(out.data, yb, cfg.r, K=spec.sgw_slices,
                                     seed=_pair_seed(seed, 15))
        adam_step(gen.parameters(), collect_grads(gen.parameters()), gen_adam)
        losses.append(loss_val)
        if (it + 1) % spec.snapshot_every == 0 or it + 1 == spec.gen_iters:
            snapshot(it + 1)

    centers = datasets.mixture_centers(spec.output_dims, spec.modes)
    coverage = mode_coverage(snapshots[-1][1], centers, spec.coverage_radius,
                             align=True, seed=_pair_seed(seed, 17))

    ioutil.write_point_cloud(f"{spec.out_dir}/target.csv", target)
    ioutil.write_csv(f"{spec.out_dir}/loss_trace.csv", ["iteration", "loss"],
                     [(i, v) for i, v in enumerate(losses)])
    ioutil.write_csv(f"{spec.out_dir}/coverage.csv", ["mode", "fraction"],
                     [(i, float(f)) for i, f in enumerate(coverage)])
    _write_manifest(spec)
    _write_timing(spec, time.perf_counter() - started)
    from . import figures
    figures.render_genmodel(spec.out_dir, snapshots, target, losses)
    return {"losses": losses, "snapshots": snapshots, "coverage": coverage}


# ---------------------------------------------------------------------------
# scaling and classification
# ---------------------------------------------------------------------------

def _timed_value(method: str, X: np.ndarray, Y: np.ndarray,
                 spec: ExperimentSpec, seed: int) -> float:
    t0 = time.perf_counter()
    if method == "entropic_gw":
        baselines.entropic_gw(X, Y, iters=spec.egw_iters,
                              inner_iters=spec.egw_inner, eps_decay=0.9)
    elif method == "sgw":
        baselines.sgw(X, Y, spec.dse_cfg.r, K=spec.sgw_slices, seed=seed)
    elif method == "dse":
        dse.dse_fit(X, Y, replace(spec.dse_cfg, seed=seed))
    else:
        raise InputFormatError(f"unknown method: {method}")
    return time.perf_counter() - t0


def run_scaling(spec: ExperimentSpec) -> list[dict]:
    """Wall time per method across cloud sizes, averaged over shape pairs.

    The timing columns are measurements and therefore not byte-stable
    across reruns; everything else in the output directory is.
    """
    spec.validate()
    started = time.perf_counter()
    rows = []
    for n_f in spec.grid:
        n = int(n_f)
        for method in spec.methods:
            times = []
            for pair in range(spec.pairs_per_n):
                sa = _pair_seed(0, n, pair, 0)
                sb = _pair_seed(0, n, pair, 1)
                X = datasets.make_shape_cloud(pair % 3, n, 0.0, seed=sa)
                Y = datasets.make_shape_cloud((pair + 1) % 3, n, 0.0, seed=sb)
                times.append(_timed_value(method, X, Y, spec, sa))
            rows.append({"n": n, "method": method,
                         "mean_s": float(np.mean(times)),
                         "std_s": float(np.std(times))})
    ioutil.ensure_dir(spec.out_dir)
    path = f"{spec.out_dir}/scaling.csv"
    ioutil.write_csv(path, ["n", "method", "mean_s", "std_s"],
                     [(r["n"], r["method"], r["mean_s"], r["std_s"]) for r in rows])
    _write_manifest(spec)
    _write_timing(spec, time.perf_counter() - started)
    from . import figures
    figures.render_scaling(path, f"{spec.out_dir}/scaling.png")
    return rows


def _knn_value(method: str, X: np.ndarray, Y: np.ndarray,
               spec: ExperimentSpec, seed: int) -> float:
    r = spec.dse_cfg.r
    if method == "dse":
        return dse.dse_fit(X, Y, replace(spec.dse_cfg, seed=seed)).value
    if method == "sgw":
        return baselines.sgw(X, Y, r, K=spec.sgw_slices, seed=seed)
    if method == "ri_sgw":
        return baselines.ri_sgw(X, Y, r, K=spec.sgw_slices, lr=spec.ri_sgw_lr,
                                T=spec.ri_sgw_iters, seed=seed)
    if method == "entropic_gw":
        return baselines.entropic_gw(X, Y, iters=40, inner_iters=spec.egw_inner,
                                     eps_decay=0.9, restarts=3, seed=seed)
    raise InputFormatError(f"unknown method: {method}")


def run_knn(spec: ExperimentSpec) -> list[dict]:
    """Leave-one-out 1-NN classification of 3D shape classes under rigid
    motions of increasing strength, per discrepancy method."""
    spec.validate()
    started = time.perf_counter()
    rows = []
    for run in range(spec.runs):
        clouds = []
        labels = []
        for class_id in range(3):
            for si, strength in enumerate(spec.strengths):
                cs = _pair_seed(run, class_id, si)
                clouds.append(datasets.make_shape_cloud(
                    class_id, spec.knn_vertices, float(strength), seed=cs))
                labels.append(class_id)
        labels_arr = np.array(labels)
        m = len(clouds)
        for method in spec.methods:
            dist = np.zeros((m, m))
            for i in range(m):
                for j in range(i + 1, m):
                    v = _knn_value(method, clouds[i], clouds[j], spec,
                                   _pair_seed(run, i, j, 7))
                    dist[i, j] = dist[j, i] = v
            np.fill_diagonal(dist, np.inf)
            pred = labels_arr[dist.argmin(axis=1)]
            acc = float(np.mean(pred == labels_arr))
            rows.append({"method": method, "run": run, "accuracy": acc})
    ioutil.ensure_dir(spec.out_dir)
    path = f"{spec.out_dir}/knn.csv"
    ioutil.write_csv(path, ["method", "run", "accuracy"],
                     [(r["method"], r["run"], r["accuracy"]) for r in rows])
    _write_manifest(spec)
    _write_timing(spec, time.perf_counter() - started)
    from . import figures
    figures.render_knn(path, f"{spec.out_dir}/knn.png")
    return rows


def run_experiment(spec: ExperimentSpec):
    driver = {
        "translation": run_translation_sweep,
        "rotation": run_rotation_sweep,
        "genmodel": run_genmodel,
        "scaling": run_scaling,
        "knn": run_knn,
    }[spec.kind]
    return driver(spec)
